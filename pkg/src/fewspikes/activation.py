"""Target activation functions and sampling grids."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, expit


class ActivationKind(enum.Enum):
    """Nonlinearities an FS neuron can be trained to approximate."""

    SWISH = "swish"
    GELU = "gelu"
    SIGMOID = "sigmoid"
    RELU = "relu"
    IDENTITY = "identity"


def eval_activation(kind: ActivationKind, x):
    """Evaluate the target function at ``x`` (scalar or array).

    Every kind is a total function on finite reals. The sigmoid-based
    kinds go through ``expit``, so there is no overflow for |x| up to
    700 and beyond. GELU uses the exact Gaussian-CDF (erf) form.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("activation input must be finite")
    if kind is ActivationKind.SWISH:
        out = arr * expit(arr)
    elif kind is ActivationKind.GELU:
        out = 0.5 * arr * (1.0 + erf(arr / np.sqrt(2.0)))
    elif kind is ActivationKind.SIGMOID:
        out = expit(arr)
    elif kind is ActivationKind.RELU:
        out = np.maximum(arr, 0.0)
    elif kind is ActivationKind.IDENTITY:
        out = arr.copy()
    else:
        raise ValueError(f"unknown activation kind: {kind!r}")
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SampleGrid:
    """Uniform closed grid of ``n`` points on [x_min, x_max]."""

    x_min: float
    x_max: float
    n: int
    points: np.ndarray

    def __post_init__(self):
        pts = self.points
        if len(pts) != self.n or self.n < 2:
            raise ValueError("grid needs at least 2 points matching n")
        if not (pts[0] == self.x_min and pts[-1] == self.x_max):
            raise ValueError("grid endpoints must equal x_min and x_max")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")


def make_grid(x_min: float, x_max: float, n: int) -> SampleGrid:
    """Uniformly spaced grid including both endpoints."""
    if not (np.isfinite(x_min) and np.isfinite(x_max)):
        raise ValueError("grid bounds must be finite")
    if x_min >= x_max:
        raise ValueError(f"empty grid range: [{x_min}, {x_max}]")
    n = int(n)
    if n < 2:
        raise ValueError("grid needs n >= 2")
    points = np.linspace(x_min, x_max, n)
    points.flags.writeable = False
    return SampleGrid(float(x_min), float(x_max), n, points)


# Swish is within 1e-3 of its asymptotes (0 and x) outside [-8, 8], which
# makes this range a reasonable default evaluation domain.
DEFAULT_X_MIN = -8.0
DEFAULT_X_MAX = 8.0
DEFAULT_GRID_N = 2048


def default_grid() -> SampleGrid:
    return make_grid(DEFAULT_X_MIN, DEFAULT_X_MAX, DEFAULT_GRID_N)
