"""Parametric fits of per-time-step parameter sequences.

The tendency-based initialization pipeline fits a smooth function of the
time step t (1-based) to each pre-trained parameter sequence and reads
initial values back off the fitted curve. Supported families are an
exponential a * r^t + c and low-degree polynomials, with automatic
selection by residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Exponential search range for the decay/growth ratio r. The upper bound
# permits growing trends while excluding sign-oscillating fits; the lower
# bound keeps r^t well-conditioned.
R_MIN = 1e-6
R_MAX = 4.0
_GOLDEN_ITERS = 200
_QUAD_REFINE_ITERS = 40
_TIE_WINDOW = 1e-9


@dataclass(frozen=True)
class CurveModel:
    """A fitted function of the 1-based time step.

    family is "exponential" with coefficients (a, r, c) meaning
    a * r^t + c, or "polynomial" with coefficients in ascending powers
    of t. residual_rms is the root-mean-square misfit over t = 1..domain_k.
    """

    family: str
    coefficients: tuple[float, ...]
    residual_rms: float
    domain_k: int

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "coefficients": [float(c) for c in self.coefficients],
            "residual_rms": float(self.residual_rms),
            "k": self.domain_k,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CurveModel":
        return cls(
            family=doc["family"],
            coefficients=tuple(float(c) for c in doc["coefficients"]),
            residual_rms=float(doc["residual_rms"]),
            domain_k=int(doc["k"]),
        )


def eval_curve(model: CurveModel, t) -> float:
    """Evaluate the fitted function at time step t >= 1 (extrapolation allowed)."""
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 1):
        raise ValueError("time steps are 1-based")
    if model.family == "exponential":
        a, r, c = model.coefficients
        out = a * r**ts + c
    elif model.family == "polynomial":
        out = np.polynomial.polynomial.polyval(ts, model.coefficients)
    else:
        raise ValueError(f"unknown curve family: {model.family!r}")
    if np.ndim(t) == 0:
        return float(out)
    return out


def _check_sequence(seq, min_len: int) -> np.ndarray:
    arr = np.asarray(seq, dtype=float)
    if arr.ndim != 1 or len(arr) < min_len:
        raise ValueError(f"sequence must be a vector of length >= {min_len}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sequence entries must be finite")
    return arr


def _exp_sse(r: float, t: np.ndarray, seq: np.ndarray):
    """Closed-form least squares for (a, c) at fixed ratio r."""
    basis = np.column_stack([r**t, np.ones_like(t)])
    coef, _, _, _ = np.linalg.lstsq(basis, seq, rcond=None)
    resid = seq - basis @ coef
    return float(resid @ resid), coef


def fit_exponential(seq) -> CurveModel:
    """Least-squares fit of a * r^t + c with r in (0, 4].

    One-dimensional search over r (coarse log-grid scan, then
    golden-section on log r, then parabolic refinement) with the linear
    pair (a, c) solved in closed form at each candidate r.
    """
    seq = _check_sequence(seq, 3)
    k = len(seq)
    t = np.arange(1, k + 1, dtype=float)

    def sse(logr: float) -> float:
        return _exp_sse(math.exp(logr), t, seq)[0]

    # Coarse scan to bracket the global minimum of the profiled objective.
    grid = np.linspace(math.log(R_MIN), math.log(R_MAX), 257)
    values = [sse(g) for g in grid]
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]

    # Golden-section search inside the bracket.
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = sse(x1), sse(x2)
    for _ in range(_GOLDEN_ITERS):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = sse(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = sse(x2)
        if b - a <= 1e-15 * max(1.0, abs(a)):
            break
    best_logr, best_sse = (x1, f1) if f1 <= f2 else (x2, f2)

    # Parabolic interpolation steps around the incumbent.
    step = max(b - a, 1e-12)
    for _ in range(_QUAD_REFINE_ITERS):
        l0, l1, l2 = best_logr - step, best_logr, best_logr + step
        l0 = max(l0, math.log(R_MIN))
        l2 = min(l2, math.log(R_MAX))
        f0, f1, f2 = sse(l0), sse(l1), sse(l2)
        denom = (f0 - 2.0 * f1 + f2)
        if denom > 0:
            cand = l1 + 0.5 * step * (f0 - f2) / denom
            cand = min(max(cand, math.log(R_MIN)), math.log(R_MAX))
            fc = sse(cand)
            if fc < best_sse:
                best_logr, best_sse = cand, fc
        for l, f in ((l0, f0), (l2, f2)):
            if f < best_sse:
                best_logr, best_sse = l, f
        step *= 0.5
        if step < 1e-16:
            break

    r = math.exp(best_logr)
    sse_val, (a_coef, c_coef) = _exp_sse(r, t, seq)
    return CurveModel(
        family="exponential",
        coefficients=(float(a_coef), float(r), float(c_coef)),
        residual_rms=math.sqrt(max(sse_val, 0.0) / k),
        domain_k=k,
    )


def fit_polynomial(seq, degree: int) -> CurveModel:
    """Least-squares polynomial in t of the given degree.

    Fitting happens on a scaled domain for stability and the result is
    converted back to plain ascending powers of t. degree = len(seq) - 1
    interpolates exactly.
    """
    seq = _check_sequence(seq, 1)
    k = len(seq)
    degree = int(degree)
    if degree < 0 or degree >= k:
        raise ValueError(f"polynomial degree must be in [0, {k - 1}], got {degree}")
    t = np.arange(1, k + 1, dtype=float)
    fitted = np.polynomial.Polynomial.fit(t, seq, degree)
    coef = fitted.convert().coef
    if len(coef) < degree + 1:
        coef = np.pad(coef, (0, degree + 1 - len(coef)))
    resid = seq - np.polynomial.polynomial.polyval(t, coef)
    return CurveModel(
        family="polynomial",
        coefficients=tuple(float(c) for c in coef),
        residual_rms=math.sqrt(float(resid @ resid) / k),
        domain_k=k,
    )


def fit_auto(seq) -> CurveModel:
    """Fit exponential and polynomial (degree 1 and 2) candidates, keep the best.

    The candidate with the smallest residual wins; residuals within 1e-9
    of the best count as ties and the tie goes to the model with the
    fewest coefficients.
    """
    seq = _check_sequence(seq, 3)
    if np.ptp(seq) == 0.0:
        # Constant sequences are represented exactly in every family.
        return CurveModel(
            family="polynomial",
            coefficients=(float(seq[0]), 0.0),
            residual_rms=0.0,
            domain_k=len(seq),
        )
    candidates = [fit_polynomial(seq, 1), fit_polynomial(seq, 2), fit_exponential(seq)]
    best = min(m.residual_rms for m in candidates)
    eligible = [m for m in candidates if m.residual_rms <= best + _TIE_WINDOW]
    return min(eligible, key=lambda m: len(m.coefficients))


def fit(seq, family: str = "auto") -> CurveModel:
    """Dispatch by family name: "auto", "exponential", or "polyN" (N a digit)."""
    if family == "auto":
        return fit_auto(seq)
    if family == "exponential":
        return fit_exponential(seq)
    if family.startswith("poly"):
        return fit_polynomial(seq, int(family[4:]))
    raise ValueError(f"unknown fit family: {family!r}")
