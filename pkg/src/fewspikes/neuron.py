"""Few-spikes (FS) neuron: parameters, forward dynamics, exact piecewise analysis.

An FS neuron runs for k deterministic time steps. The membrane potential
starts at the input value x. At step t the neuron spikes when the
potential reaches the threshold thr[t]; a spike subtracts h[t] from the
potential and contributes d[t] to the output. The resulting input-output
map is a piecewise-constant function of x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .activation import ActivationKind, eval_activation


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


def _param_vector(name: str, values, k: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (k,):
        raise ValueError(f"{name} must be a vector of length {k}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} entries must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FsParams:
    """Trainable values of one FS neuron over k time steps.

    h[t]   amount subtracted from the membrane potential on a spike
    d[t]   output weight of a spike at step t
    thr[t] firing threshold at step t

    h and thr live in input units, d in output units. Instances are
    immutable; the arrays are frozen copies of the inputs.
    """

    k: int
    h: np.ndarray
    d: np.ndarray
    thr: np.ndarray

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "h", _param_vector("h", self.h, self.k))
        object.__setattr__(self, "d", _param_vector("d", self.d, self.k))
        object.__setattr__(self, "thr", _param_vector("thr", self.thr, self.k))

    def to_dict(self) -> dict:
        """JSON interchange form: {"k": int, "h": [...], "d": [...], "T": [...]}."""
        return {
            "k": self.k,
            "h": [float(v) for v in self.h],
            "d": [float(v) for v in self.d],
            "T": [float(v) for v in self.thr],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FsParams":
        return cls(k=int(doc["k"]), h=doc["h"], d=doc["d"], thr=doc["T"])


def binary_quantizer(k: int) -> FsParams:
    """h = d = thr = (2^(k-1), ..., 2, 1); forward equals floor(x) on [0, 2^k)."""
    w = 2.0 ** np.arange(k - 1, -1, -1)
    return FsParams(k=k, h=w, d=w.copy(), thr=w.copy())


@dataclass(frozen=True)
class SpikeTrace:
    """Membrane trajectory of one forward pass.

    v has length k+1 with v[0] equal to the input; s[t] is 1 exactly when
    the neuron spiked at step t (spike on equality, v >= thr).
    """

    v: np.ndarray
    s: np.ndarray


def forward(params: FsParams, x: float) -> tuple[float, SpikeTrace]:
    """Run the k-step dynamics on one input; returns (output, trace)."""
    if not np.isfinite(x):
        raise ValueError("input must be finite")
    k = params.k
    v = np.empty(k + 1)
    s = np.zeros(k, dtype=np.int8)
    vt = float(x)
    v[0] = vt
    y = 0.0
    for t in range(k):
        if vt >= params.thr[t]:
            s[t] = 1
            y = y + params.d[t]
            vt = vt - params.h[t]
        v[t + 1] = vt
    v.flags.writeable = False
    s.flags.writeable = False
    return float(y), SpikeTrace(v=v, s=s)


def forward_batch(params: FsParams, xs) -> np.ndarray:
    """Vectorized forward over a batch; elementwise identical to forward()."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise ValueError("xs must be a 1-d vector")
    if xs.size and not np.all(np.isfinite(xs)):
        raise ValueError("inputs must be finite")
    v = xs.copy()
    y = np.zeros_like(v)
    for t in range(params.k):
        fired = v >= params.thr[t]
        y[fired] += params.d[t]
        v[fired] -= params.h[t]
    return y


def forward_batch_trace(params: FsParams, xs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched forward keeping the full state history.

    Returns (y, V, S) with V of shape (k+1, n) holding the potential
    before each step and S of shape (k, n) holding spike indicators as
    0.0/1.0. Used by the training backward pass.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("xs must be a non-empty 1-d vector")
    if not np.all(np.isfinite(xs)):
        raise ValueError("inputs must be finite")
    k = params.k
    n = xs.shape[0]
    V = np.empty((k + 1, n))
    S = np.empty((k, n))
    v = xs.copy()
    y = np.zeros(n)
    V[0] = v
    for t in range(k):
        fired = v >= params.thr[t]
        S[t] = fired
        y[fired] += params.d[t]
        v[fired] -= params.h[t]
        V[t + 1] = v
    return y, V, S


@dataclass(frozen=True)
class StepFunction:
    """Exact piecewise-constant form of x -> forward(params, x) on a closed domain.

    values has one more entry than breakpoints; a breakpoint belongs to
    the piece on its right (the neuron spikes on equality).
    """

    breakpoints: np.ndarray
    values: np.ndarray
    domain: tuple[float, float]

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("values must have len(breakpoints) + 1 entries")
        if len(self.breakpoints) and not np.all(np.diff(self.breakpoints) > 0):
            raise ValueError("breakpoints must be strictly increasing")

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        out = np.asarray(self.values)[idx]
        if np.ndim(x) == 0:
            return float(out)
        return out


def to_step_function(params: FsParams, domain: tuple[float, float]) -> StepFunction:
    """Enumerate the exact breakpoints of the neuron's output on ``domain``.

    Within an interval where every step's spike decision is constant the
    output is constant, and the potential before step t is x minus the
    sum of the h values already subtracted. Recursively splitting at the
    points where that affine potential crosses a threshold yields at most
    2^k - 1 breakpoints; adjacent intervals with equal output values are
    merged afterwards.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValueError(f"degenerate domain: [{domain[0]}, {domain[1]}]")
    k = params.k
    h, d, thr = params.h, params.d, params.thr
    pieces: list[tuple[float, float]] = []  # (start, value), in left-to-right order

    def split(a: float, b: float, t: int, subtracted: float, acc: float) -> None:
        while t < k:
            p = thr[t] + subtracted  # crossing point of v[t] = x - subtracted
            if p <= a:
                subtracted += h[t]
                acc += d[t]
            elif p >= b:
                pass  # no spike anywhere in [a, b)
            else:
                split(a, p, t + 1, subtracted, acc)
                a, subtracted, acc = p, subtracted + h[t], acc + d[t]
            t += 1
        pieces.append((a, acc))

    split(lo, hi, 0, 0.0, 0.0)

    breakpoints: list[float] = []
    values: list[float] = [pieces[0][1]]
    for start, value in pieces[1:]:
        if value == values[-1]:
            continue  # merge equal-valued neighbours
        breakpoints.append(start)
        values.append(value)
    return StepFunction(
        breakpoints=np.asarray(breakpoints, dtype=float),
        values=np.asarray(values, dtype=float),
        domain=(lo, hi),
    )


def _step_vs_step_mse(a: StepFunction, b: StepFunction, lo: float, hi: float) -> float:
    # Both functions are constant between merged breakpoints, so the
    # integral is an exact finite sum.
    edges = np.unique(np.concatenate([[lo, hi], a.breakpoints, b.breakpoints]))
    edges = edges[(edges >= lo) & (edges <= hi)]
    mids = 0.5 * (edges[:-1] + edges[1:])
    diff = a(mids) - b(mids)
    return float(np.sum(diff * diff * np.diff(edges)) / (hi - lo))


def exact_mse(params: FsParams, target, domain: tuple[float, float], rel_tol: float = 1e-8) -> float:
    """Mean of (approximation - target)^2 over the domain, by exact piecewise integration.

    ``target`` is an ActivationKind, a StepFunction, or a plain callable.
    Smooth targets are integrated with adaptive quadrature on each
    constant piece; a step-function target is integrated in closed form.
    Raises QuadratureError when the quadrature error estimate exceeds
    ``rel_tol`` relative to the result.
    """
    lo, hi = float(domain[0]), float(domain[1])
    sf = to_step_function(params, (lo, hi))
    if isinstance(target, StepFunction):
        return _step_vs_step_mse(sf, target, lo, hi)
    if isinstance(target, ActivationKind):
        kind = target
        f = lambda x: eval_activation(kind, x)  # noqa: E731
    elif callable(target):
        f = target
    else:
        raise ValueError(f"unsupported target: {target!r}")

    edges = np.concatenate([[lo], sf.breakpoints, [hi]])
    total = 0.0
    err_total = 0.0
    for i, c in enumerate(sf.values):
        a, b = edges[i], edges[i + 1]
        val, err = quad(lambda x: (c - f(x)) ** 2, a, b, epsabs=1e-13, epsrel=1e-10, limit=200)
        total += val
        err_total += err
    mse = total / (hi - lo)
    if err_total > rel_tol * abs(total) + 1e-12:
        raise QuadratureError(
            f"quadrature error estimate {err_total:.3e} exceeds tolerance "
            f"for integral {total:.6e} over [{lo}, {hi}] with {len(sf.values)} pieces"
        )
    return mse
