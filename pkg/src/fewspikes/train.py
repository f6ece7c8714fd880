"""Surrogate-gradient training of FS-neuron parameters.

The spike nonlinearity is a hard step in the forward pass; its derivative
is replaced by a triangular kernel of width ``surrogate_width`` during
backpropagation through the unrolled time steps. Three initialization
strategies are provided: plain random values, Gaussian perturbation of a
pre-trained neuron, and tendency-based initialization that re-reads the
pre-trained parameters off fitted temporal curves.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import curvefit
from .activation import ActivationKind, SampleGrid, default_grid, eval_activation
from .neuron import FsParams, forward_batch, forward_batch_trace


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the epoch index as ``.epoch``."""

    def __init__(self, epoch: int, message: str):
        super().__init__(message)
        self.epoch = epoch


# Sub-seeds for the independent random stages of one run, derived from the
# run seed via SeedSequence so stages never share streams.
_STAGE_IDS = {"init": 0, "noise": 1, "shuffle": 2, "tbpi_noise": 3}


def stage_seed(seed: int, stage: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), _STAGE_IDS[stage]])


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, grid, surrogate, and seed settings for one training run."""

    grid: SampleGrid = field(default_factory=default_grid)
    epochs: int = 20000
    batch_size: int | None = None  # None means full batch
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    surrogate_width: float = 1.0
    seed: int = 0
    target: ActivationKind = ActivationKind.SWISH

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.surrogate_width > 0:
            raise ValueError("surrogate_width must be positive")
        bs = self.batch_size
        if bs is not None and not (1 <= bs <= self.grid.n):
            raise ValueError(f"batch_size must be in [1, {self.grid.n}]")

    @property
    def effective_batch_size(self) -> int:
        return self.grid.n if self.batch_size is None else self.batch_size

    def to_dict(self) -> dict:
        return {
            "grid": {"x_min": self.grid.x_min, "x_max": self.grid.x_max, "n": self.grid.n},
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_eps": self.adam_eps,
            "surrogate_width": self.surrogate_width,
            "seed": self.seed,
            "target": self.target.value,
        }


@dataclass(frozen=True)
class TrainHistory:
    """Per-epoch full-grid loss plus the best loss achieved."""

    losses: np.ndarray
    final_mse: float
    wall_time: float

    def to_dict(self) -> dict:
        # wall_time is intentionally not serialized: output files must be
        # byte-identical across reruns.
        return {"losses": [float(v) for v in self.losses], "final_mse": float(self.final_mse)}


@dataclass(frozen=True)
class RandomInit:
    """Fresh uniform random parameters."""


@dataclass(frozen=True)
class GaussianPerturbedInit:
    """A pre-trained neuron with independent Gaussian noise on every entry."""

    source: FsParams
    sigma: float = 0.1


@dataclass(frozen=True)
class TbpiInit:
    """Parameters re-read from temporal curves fitted to a pre-trained neuron.

    noise_sigma > 0 additionally jitters the values along the fitted
    curves (off by default).
    """

    source: FsParams
    family: str = "auto"
    noise_sigma: float = 0.0


InitStrategy = RandomInit | GaussianPerturbedInit | TbpiInit


def loss(params: FsParams, config: TrainConfig) -> float:
    """Mean squared error between the neuron and the target on the config grid."""
    xs = config.grid.points
    diff = forward_batch(params, xs) - eval_activation(config.target, xs)
    return float(np.mean(diff * diff))


def _grads_from_trace(params, V, S, y, fx, beta, batch_size):
    """Reverse-time gradients of the batch MSE under the triangular surrogate.

    e is the upstream error per sample; g accumulates the loss
    sensitivity to the membrane potential. The spike derivative is
    psi((v - thr)/beta)/beta with psi(u) = max(0, 1 - |u|), so gradients
    through the spike path vanish exactly once |v - thr| >= beta.
    """
    k = params.k
    e = 2.0 * (y - fx) / batch_size
    dh = np.empty(k)
    dd = np.empty(k)
    dT = np.empty(k)
    g = np.zeros_like(e)
    for t in range(k - 1, -1, -1):
        st = S[t]
        dd[t] = float(e @ st)
        dh[t] = -float(g @ st)
        a = e * params.d[t] - g * params.h[t]
        u = (V[t] - params.thr[t]) / beta
        psi = np.maximum(0.0, 1.0 - np.abs(u)) / beta
        a_psi = a * psi
        dT[t] = -float(np.sum(a_psi))
        g = g + a_psi
    return dh, dd, dT


def backward(params: FsParams, config: TrainConfig, batch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dh, dd, dT) of the batch MSE at ``params``.

    dd is the true partial derivative whenever no potential sits exactly
    on a threshold; dh and dT use the surrogate relaxation.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.size == 0:
        raise ValueError("batch must be non-empty")
    y, V, S = forward_batch_trace(params, batch)
    fx = eval_activation(config.target, batch)
    return _grads_from_trace(params, V, S, y, fx, config.surrogate_width, batch.shape[0])


@dataclass(frozen=True)
class AdamState:
    """First/second moment estimates for the three parameter vectors."""

    step: int
    m: tuple[np.ndarray, np.ndarray, np.ndarray]
    v: tuple[np.ndarray, np.ndarray, np.ndarray]
    beta1: float
    beta2: float
    eps: float


def adam_init(params: FsParams, config: TrainConfig) -> AdamState:
    zeros = lambda: np.zeros(params.k)  # noqa: E731
    return AdamState(
        step=0,
        m=(zeros(), zeros(), zeros()),
        v=(zeros(), zeros(), zeros()),
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps=config.adam_eps,
    )


def adam_step(state: AdamState, params: FsParams, grads, lr: float) -> tuple[FsParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    new_m = []
    new_v = []
    updated = []
    for p, m, v, g in zip((params.h, params.d, params.thr), state.m, state.v, grads):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        step = lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_m.append(m)
        new_v.append(v)
        updated.append(p - step)
    new_params = FsParams(k=params.k, h=updated[0], d=updated[1], thr=updated[2])
    new_state = AdamState(
        step=t, m=tuple(new_m), v=tuple(new_v), beta1=b1, beta2=b2, eps=state.eps
    )
    return new_params, new_state


def init_random(k: int, seed) -> FsParams:
    """Random initial parameters: h, d uniform on [0, 2], thr uniform on [-2, 2].

    Thresholds must be able to start below zero: targets such as Swish
    take negative values on part of the domain, and a neuron whose
    thresholds never reach below zero is silent there (its error floor on
    [-8, 8] is about 1e-2 regardless of k). Draw order is fixed, so the
    result is reproducible from the seed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    h = rng.uniform(0.0, 2.0, size=k)
    d = rng.uniform(0.0, 2.0, size=k)
    thr = rng.uniform(-2.0, 2.0, size=k)
    return FsParams(k=k, h=h, d=d, thr=thr)


def init_gaussian_perturbed(source: FsParams, sigma: float, seed) -> FsParams:
    """Independent zero-mean Gaussian noise with std ``sigma`` on every entry."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=(3, source.k))
    return FsParams(
        k=source.k, h=source.h + noise[0], d=source.d + noise[1], thr=source.thr + noise[2]
    )


def tbpi_init(
    source: FsParams,
    family: str = "auto",
    noise_sigma: float = 0.0,
    seed=None,
) -> tuple[FsParams, tuple[curvefit.CurveModel, curvefit.CurveModel, curvefit.CurveModel] | None]:
    """Initialize from temporal curves fitted to the source parameters.

    Fits one curve per parameter sequence (h, d, thr) over t = 1..k and
    evaluates it back at every step. Sequences shorter than 3 are
    under-determined, so the source is returned unchanged (models None).
    With noise_sigma > 0, Gaussian jitter is added along the fitted
    curves.
    """
    k = source.k
    if k < 3:
        return source, None
    ts = np.arange(1, k + 1)
    models = tuple(curvefit.fit(seq, family) for seq in (source.h, source.d, source.thr))
    vectors = [np.asarray(curvefit.eval_curve(m, ts), dtype=float) for m in models]
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        vectors = [v + rng.normal(0.0, noise_sigma, size=k) for v in vectors]
    params = FsParams(k=k, h=vectors[0], d=vectors[1], thr=vectors[2])
    return params, models


def _resolve_init(init: InitStrategy, k: int, config: TrainConfig) -> FsParams:
    if isinstance(init, RandomInit):
        return init_random(k, stage_seed(config.seed, "init"))
    if isinstance(init, GaussianPerturbedInit):
        if init.source.k != k:
            raise ValueError(f"source has k={init.source.k}, expected {k}")
        return init_gaussian_perturbed(init.source, init.sigma, stage_seed(config.seed, "noise"))
    if isinstance(init, TbpiInit):
        if init.source.k != k:
            raise ValueError(f"source has k={init.source.k}, expected {k}")
        params, _ = tbpi_init(
            init.source,
            family=init.family,
            noise_sigma=init.noise_sigma,
            seed=stage_seed(config.seed, "tbpi_noise"),
        )
        return params
    raise ValueError(f"unknown init strategy: {init!r}")


def train_with_init(init: InitStrategy, k: int, config: TrainConfig) -> tuple[FsParams, TrainHistory]:
    """Adam loop over the config grid; returns the best-loss params seen.

    The per-epoch loss is always the full-grid MSE of the parameters
    entering the epoch, so losses[0] is the loss of the initialization
    and final_mse is the minimum loss over all visited parameters
    (including the ones left after the last update).
    """
    t_start = time.perf_counter()
    params = _resolve_init(init, k, config)
    xs = config.grid.points
    fx = eval_activation(config.target, xs)
    n = xs.shape[0]
    bs = config.effective_batch_size
    full_batch = bs >= n
    beta = config.surrogate_width
    lr = config.learning_rate
    state = adam_init(params, config)
    rng = None if full_batch else np.random.default_rng(stage_seed(config.seed, "shuffle"))

    losses = np.empty(config.epochs)
    best_loss = np.inf
    best_params = params
    for epoch in range(config.epochs):
        if full_batch:
            y, V, S = forward_batch_trace(params, xs)
            diff = y - fx
            epoch_loss = float(np.mean(diff * diff))
        else:
            y = forward_batch(params, xs)
            diff = y - fx
            epoch_loss = float(np.mean(diff * diff))
        losses[epoch] = epoch_loss
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch, f"non-finite loss at epoch {epoch}")
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_params = params
        if full_batch:
            grads = _grads_from_trace(params, V, S, y, fx, beta, n)
            params, state = adam_step(state, params, grads, lr)
        else:
            perm = rng.permutation(n)
            for start in range(0, n, bs):
                idx = perm[start : start + bs]
                grads = backward(params, config, xs[idx])
                params, state = adam_step(state, params, grads, lr)

    # The params left by the last update were never scored above.
    diff = forward_batch(params, xs) - fx
    last_loss = float(np.mean(diff * diff))
    if np.isfinite(last_loss) and last_loss < best_loss:
        best_loss = last_loss
        best_params = params

    history = TrainHistory(
        losses=losses, final_mse=best_loss, wall_time=time.perf_counter() - t_start
    )
    return best_params, history


def pretrain(k: int, config: TrainConfig) -> tuple[FsParams, TrainHistory]:
    """Training step one: optimize from random initial values."""
    return train_with_init(RandomInit(), k, config)
