"""Small MLP harness measuring end-to-end error from substituting activations.

A fixed random multilayer perceptron computes its hidden activations
either exactly or through a trained FS neuron (one shared neuron for all
hidden units). The output deviation between the two versions is the
substitution error, a desk-scale stand-in for network-level evaluation of
the trained neurons.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .activation import ActivationKind, eval_activation
from .neuron import FsParams, forward_batch
from .train import RandomInit, TrainConfig, train_with_init

DEFAULT_LAYER_SIZES = (1, 16, 16, 1)
DEFAULT_MLP_SEED = 0
DEFAULT_PROBE_RANGE = (-4.0, 4.0)
DEFAULT_PROBE_POINTS = 256


@dataclass(frozen=True)
class MlpSpec:
    """Fixed weights of a small fully connected network."""

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    seed: int


def build_mlp(layer_sizes, seed: int) -> MlpSpec:
    """Glorot-style scaled-uniform weights, reproducible from the seed."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"need at least 2 positive layer sizes, got {layer_sizes!r}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = rng.uniform(-0.1, 0.1, size=fan_out)
        w.flags.writeable = False
        b.flags.writeable = False
        weights.append(w)
        biases.append(b)
    return MlpSpec(layer_sizes=sizes, weights=tuple(weights), biases=tuple(biases), seed=int(seed))


def forward_mlp(spec: MlpSpec, act, xs) -> np.ndarray:
    """Affine layers with the given hidden activation; linear output layer.

    ``act`` is an ActivationKind evaluated exactly, or FsParams routing
    every hidden activation value through the neuron.
    """
    xs = np.asarray(xs, dtype=float)
    a = xs.reshape(-1, spec.layer_sizes[0]) if xs.ndim == 1 else xs
    if a.shape[1] != spec.layer_sizes[0]:
        raise ValueError(f"input dimension {a.shape[1]} != {spec.layer_sizes[0]}")
    last = len(spec.weights) - 1
    for i, (w, b) in enumerate(zip(spec.weights, spec.biases)):
        z = a @ w + b
        if i == last:
            a = z
        elif isinstance(act, FsParams):
            a = forward_batch(act, z.ravel()).reshape(z.shape)
        else:
            a = eval_activation(act, z)
    if spec.layer_sizes[-1] == 1:
        return a.ravel()
    return a


def substitution_error(spec: MlpSpec, params: FsParams, target: ActivationKind, xs) -> dict:
    """MAE and RMSE between exact-activation and FS-activation outputs."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("xs must be non-empty")
    exact = forward_mlp(spec, target, xs)
    approx = forward_mlp(spec, params, xs)
    diff = np.abs(exact - approx)
    return {"mae": float(np.mean(diff)), "rmse": float(np.sqrt(np.mean(diff * diff)))}


def substitution_probe(
    k_values,
    config: TrainConfig,
    seeds,
    layer_sizes=DEFAULT_LAYER_SIZES,
    mlp_seed: int = DEFAULT_MLP_SEED,
    probe_range=DEFAULT_PROBE_RANGE,
    probe_points: int = DEFAULT_PROBE_POINTS,
) -> list[dict]:
    """Train one neuron per (k, seed) and measure its network-level error.

    Training starts from random initial values with the given config.
    Returns one record per k with per-seed MAE/RMSE and their means.
    """
    spec = build_mlp(layer_sizes, mlp_seed)
    xs = np.linspace(probe_range[0], probe_range[1], int(probe_points))
    records = []
    for k in [int(k) for k in k_values]:
        maes = []
        rmses = []
        for seed in [int(s) for s in seeds]:
            params, _ = train_with_init(RandomInit(), k, replace(config, seed=seed))
            err = substitution_error(spec, params, config.target, xs)
            maes.append(err["mae"])
            rmses.append(err["rmse"])
        records.append(
            {
                "k": k,
                "seeds": [int(s) for s in seeds],
                "mae": maes,
                "rmse": rmses,
                "mae_mean": float(np.mean(maes)),
                "rmse_mean": float(np.mean(rmses)),
            }
        )
    return records
