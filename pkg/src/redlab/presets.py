"""Named denoiser builders and shipped experiment configurations.

Denoiser specs are plain dicts ({"name": ..., parameters...}) so they can
live inside JSON configs.  Experiment presets are complete config dicts;
the expansive ones are calibrated so the fixed-step solver demonstrably
diverges at the default step size while the monotone solver still makes
progress, and the convnet weight scale is pinned where its estimated
Lipschitz constant lands between 1.5 and 3.
"""

import copy

from .denoisers import (
    DctSoftThresholdDenoiser,
    IdentityDenoiser,
    LinearSmoothingDenoiser,
    RandomConvnetDenoiser,
    ScaledDenoiser,
)

# Parameter names (with defaults) accepted by each denoiser preset.
DENOISER_SCHEMAS = {
    "identity": {},
    "smoother": {"sigma": 1.5},
    "dct_threshold": {"threshold": 0.1, "smoothing_mu": 0.02},
    "scaled_identity": {"scale": 1.6},
    "scaled_smoother": {"sigma": 1.5, "scale": 1.6},
    "convnet": {"layers": 2, "channels": 4, "weight_scale": 0.8, "seed": 11},
}

DENOISER_NAMES = tuple(sorted(DENOISER_SCHEMAS))


def resolve_denoiser_spec(spec):
    """Fill defaults and reject unknown keys; returns a normalized dict."""
    if not isinstance(spec, dict) or "name" not in spec:
        raise ValueError("denoiser spec must be a dict with a 'name' key")
    name = spec["name"]
    if name not in DENOISER_SCHEMAS:
        raise ValueError(f"unknown denoiser {name!r}; valid: {DENOISER_NAMES}")
    schema = DENOISER_SCHEMAS[name]
    unknown = set(spec) - set(schema) - {"name"}
    if unknown:
        raise ValueError(
            f"unknown denoiser parameter(s) {sorted(unknown)} for {name!r}"
        )
    out = {"name": name}
    for key, default in schema.items():
        out[key] = spec.get(key, default)
    return out


def build_denoiser(spec, shape):
    """Construct the denoiser described by a normalized spec for a shape."""
    spec = resolve_denoiser_spec(spec)
    name = spec["name"]
    n = int(shape[0]) * int(shape[1])
    if name == "identity":
        return IdentityDenoiser(n)
    if name == "smoother":
        return LinearSmoothingDenoiser(shape, spec["sigma"])
    if name == "dct_threshold":
        return DctSoftThresholdDenoiser(shape, spec["threshold"], spec["smoothing_mu"])
    if name == "scaled_identity":
        return ScaledDenoiser(IdentityDenoiser(n), spec["scale"])
    if name == "scaled_smoother":
        return ScaledDenoiser(
            LinearSmoothingDenoiser(shape, spec["sigma"]), spec["scale"]
        )
    return RandomConvnetDenoiser(
        shape, spec["layers"], spec["channels"], spec["weight_scale"], spec["seed"]
    )


_DEBLUR_BASE = {
    "problem": "deblur",
    "image": "phantom",
    "shape": [64, 64],
    "operator": {"kernel_size": 17, "kernel_sigma": 2.0},
    "noise": {"input_snr_db": 30.0, "seed": 42},
}

_CS_BASE = {
    "problem": "cs",
    "image": "phantom",
    "shape": [64, 64],
    "operator": {"ratio": 0.1, "seed": 77},
    "noise": {"input_snr_db": None, "seed": 42},
}

# Complete experiment configs, ready for config.from_dict.
EXPERIMENT_PRESETS = {
    # Identity denoiser over a sharp invertible kernel: the iteration solves
    # the plain least-squares problem, so the limit has a spectral-division
    # oracle and the residual reaches 1e-9.
    "deblur_identity": {
        **_DEBLUR_BASE,
        "operator": {"kernel_size": 3, "kernel_sigma": 0.6},
        "denoiser": {"name": "identity"},
        "tau": 0.1,
        "solver": {"name": "red", "t": 2000, "converge_tol": 1e-9},
    },
    "deblur_nonexpansive": {
        **_DEBLUR_BASE,
        "denoiser": {"name": "smoother", "sigma": 1.5},
        "tau": 0.1,
        "solver": {"name": "mred"},
    },
    # Scaling the identity by 1.6 gives a certified Lipschitz-1.6 denoiser;
    # at tau = 1 the fixed-step map has strongly negative curvature
    # directions and diverges within tens of iterations.
    "deblur_expansive": {
        **_DEBLUR_BASE,
        "denoiser": {"name": "scaled_identity", "scale": 1.6},
        "tau": 1.0,
        "solver": {"name": "mred"},
    },
    "deblur_convnet": {
        **_DEBLUR_BASE,
        "denoiser": {"name": "convnet"},
        "tau": 0.1,
        "solver": {"name": "mred"},
    },
    "cs_nonexpansive": {
        **_CS_BASE,
        "denoiser": {"name": "smoother", "sigma": 1.5},
        "tau": 0.1,
        "solver": {"name": "mred"},
    },
    # The scaled smoother mixes the measurement subspace with the smoothing
    # spectrum, so unlike a scaled identity the divergent directions are
    # actually excited from the backprojected start.
    "cs_expansive": {
        **_CS_BASE,
        "denoiser": {"name": "scaled_smoother", "sigma": 1.5, "scale": 1.6},
        "tau": 1.0,
        "solver": {"name": "mred"},
    },
}

PRESET_NAMES = tuple(sorted(EXPERIMENT_PRESETS))

# Denoiser specs used by the monotonicity suite: one nonexpansive and one
# certified expansive per operator.
SUITE_DENOISERS = {
    "deblur": {
        "nonexpansive": {"name": "smoother", "sigma": 1.5},
        "expansive": {"name": "scaled_identity", "scale": 1.6},
    },
    "cs": {
        "nonexpansive": {"name": "smoother", "sigma": 1.5},
        "expansive": {"name": "scaled_smoother", "sigma": 1.5, "scale": 1.6},
    },
}


def experiment_preset(name):
    """Deep copy of a shipped experiment config dict."""
    if name not in EXPERIMENT_PRESETS:
        raise ValueError(f"unknown preset {name!r}; valid: {PRESET_NAMES}")
    return copy.deepcopy(EXPERIMENT_PRESETS[name])
