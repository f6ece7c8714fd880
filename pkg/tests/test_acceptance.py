"""Acceptance suite: the package's exit criteria, one test per criterion.

The heavy comparison protocol (all methods, K in {4, 8, 12, 16}, seeds
1-4, default training settings) runs once per session and is shared by
the trend, monotonicity, and magnitude checks. Each test prints one PASS
line; run with ``pytest tests/test_acceptance.py -v -s``.
"""

import json
import math

import numpy as np
import pytest

from fewspikes import (
    ActivationKind,
    FsParams,
    TrainConfig,
    backward,
    binary_quantizer,
    eval_curve,
    exact_mse,
    fit_auto,
    fit_exponential,
    fit_polynomial,
    forward_batch,
    init_random,
    to_step_function,
)
from fewspikes.activation import eval_activation
from fewspikes.cli import main as cli_main
from fewspikes.evaluate import ALL_METHODS, compare_methods
from fewspikes.network import substitution_probe
from fewspikes.neuron import forward_batch_trace

# Reference mean-MSE anchors for the magnitude windows (absolute units;
# the published table reports them at a 1e-2 scale).
REFERENCE_MSE = {
    (4, "random"): 3.8797e-2,
    (4, "gaussian_noise"): 3.8796e-2,
    (4, "tbpi"): 3.8795e-2,
    (8, "random"): 0.9776e-2,
    (8, "gaussian_noise"): 0.8968e-2,
    (8, "tbpi"): 0.6295e-2,
    (12, "random"): 0.1521e-2,
    (12, "gaussian_noise"): 0.1517e-2,
    (12, "tbpi"): 0.1413e-2,
    (16, "random"): 0.1425e-2,
    (16, "gaussian_noise"): 0.1249e-2,
    (16, "tbpi"): 0.1246e-2,
}

SEEDS = [1, 2, 3, 4]
K_LIST = [4, 8, 12, 16]


@pytest.fixture(scope="session")
def default_report():
    return compare_methods(K_LIST, TrainConfig(), seeds=SEEDS, workers=2)


@pytest.fixture(scope="session")
def cell_means(default_report):
    return {(row.k, row.method): row.mse_mean for row in default_report.rows}


def test_criterion_1_trend_and_magnitude(cell_means):
    """TBPI <= GaussianNoise <= Random (10% slack) at K in {8, 12, 16},
    strictly TBPI < Random at K=8, every cell within 3x of its anchor."""
    slack = 1.10
    for k in (8, 12, 16):
        tbpi = cell_means[(k, "tbpi")]
        gauss = cell_means[(k, "gaussian_noise")]
        rand = cell_means[(k, "random")]
        assert tbpi <= gauss * slack, f"K={k}: tbpi {tbpi} vs gaussian {gauss}"
        assert gauss <= rand * slack, f"K={k}: gaussian {gauss} vs random {rand}"
    assert cell_means[(8, "tbpi")] < cell_means[(8, "random")]
    for (k, method), anchor in REFERENCE_MSE.items():
        ratio = cell_means[(k, method)] / anchor
        assert 1.0 / 3.0 <= ratio <= 3.0, f"K={k} {method}: ratio {ratio:.2f} vs anchor {anchor}"
    print("\nACCEPTANCE PASS 1: method ordering and 3x magnitude windows hold")


def test_criterion_2_monotone_in_k(cell_means):
    """Mean MSE at K=16 is below the K=4 mean for every method."""
    for method in ALL_METHODS:
        hi = cell_means[(4, method)]
        lo = cell_means[(16, method)]
        assert lo < hi, f"{method}: K=16 mean {lo} not below K=4 mean {hi}"
    print("\nACCEPTANCE PASS 2: mean MSE improves from K=4 to K=16 for every method")


def test_criterion_3_quantizer_oracle():
    """Binary parameters implement floor() exactly; breakpoints are the integers."""
    for k in range(2, 9):
        params = binary_quantizer(k)
        rng = np.random.default_rng(k)
        xs = rng.uniform(0.0, 2.0**k, size=100_000)
        np.testing.assert_array_equal(forward_batch(params, xs), np.floor(xs))
        sf = to_step_function(params, (0.0, 2.0**k))
        want = np.arange(1, 2**k, dtype=float)
        assert len(sf.breakpoints) == len(want)
        assert np.max(np.abs(sf.breakpoints - want)) <= 1e-12
    print("\nACCEPTANCE PASS 3: floor oracle holds exactly for K=2..8 on 1e5 points each")


def test_criterion_4_gradient_audit():
    """dd matches central finite differences at spike-stable points; the
    surrogate-path gradients vanish exactly once every |v - thr| >= beta."""
    config = TrainConfig(epochs=1)  # only target/width are used here
    beta = config.surrogate_width
    delta = 1e-6
    rng = np.random.default_rng(2024)
    target = config.target

    def batch_mse(params, x):
        diff = forward_batch(params, np.array([x])) - eval_activation(target, np.array([x]))
        return float(diff[0] * diff[0])

    checked = 0
    attempts = 0
    while checked < 1000:
        attempts += 1
        assert attempts < 50_000, "could not find enough spike-stable points"
        k = int(rng.integers(2, 7))
        params = init_random(k, int(rng.integers(2**31)))
        x = float(rng.uniform(-8.0, 8.0))
        _, V, _ = forward_batch_trace(params, np.array([x]))
        if np.min(np.abs(V[:-1, 0] - params.thr)) <= 1e-4:
            continue  # too close to a threshold for a stable spike pattern
        _, dd, _ = backward(params, config, np.array([x]))
        for t in range(k):
            d_hi = params.d.copy()
            d_lo = params.d.copy()
            d_hi[t] += delta
            d_lo[t] -= delta
            hi = batch_mse(FsParams(k, params.h, d_hi, params.thr), x)
            lo = batch_mse(FsParams(k, params.h, d_lo, params.thr), x)
            fd = (hi - lo) / (2.0 * delta)
            if abs(dd[t]) > 1e-12 or abs(fd) > 1e-12:
                rel = abs(fd - dd[t]) / max(abs(dd[t]), 1e-12)
                assert rel <= 1e-5, f"dd[{t}]={dd[t]} vs fd={fd}"
        checked += 1

    # dead-surrogate exactness on whole batches
    found = 0
    while found < 50:
        k = int(rng.integers(2, 7))
        params = init_random(k, int(rng.integers(2**31)))
        batch = rng.uniform(-8.0, 8.0, size=32)
        _, V, _ = forward_batch_trace(params, batch)
        if np.min(np.abs(V[:-1] - params.thr[:, None])) < beta:
            continue
        dh, _, dT = backward(params, config, batch)
        assert np.all(dT == 0.0) and np.all(dh == 0.0)
        found += 1
    print("\nACCEPTANCE PASS 4: dd finite-difference audit (1000 points) and exact dead-gradient zeros")


def test_criterion_5_curvefit_recovery():
    """Exponential fits recover exact sequences; auto never loses to a candidate."""
    rng = np.random.default_rng(77)
    for _ in range(100):
        k = int(rng.integers(4, 17))
        a = float(rng.uniform(0.5, 8.0) * rng.choice([-1.0, 1.0]))
        r = float(rng.uniform(0.15, 0.9))
        c = float(rng.uniform(-4.0, 4.0))
        t = np.arange(1, k + 1, dtype=float)
        seq = a * r**t + c
        model = fit_exponential(seq)
        fitted = np.array([eval_curve(model, int(tt)) for tt in t])
        assert np.max(np.abs(fitted - seq)) <= 1e-6, (a, r, c, k)

        chosen = fit_auto(seq)
        candidates = [fit_polynomial(seq, 1), fit_polynomial(seq, 2), fit_exponential(seq)]
        best = min(m.residual_rms for m in candidates)
        assert chosen.residual_rms <= best
    print("\nACCEPTANCE PASS 5: 100 exponential recoveries within 1e-6; auto residual optimal")


def test_criterion_6_exact_mse_audit():
    """Piecewise-exact MSE agrees with the sampled loss on a dense grid."""
    grid = np.linspace(-8.0, 8.0, 2**18)
    fx = eval_activation(ActivationKind.SWISH, grid)
    for seed in range(20):
        k = 3 + seed % 4
        params = init_random(k, seed)
        exact = exact_mse(params, ActivationKind.SWISH, (-8.0, 8.0))
        diff = forward_batch(params, grid) - fx
        sampled = float(np.mean(diff * diff))
        rel = abs(exact - sampled) / abs(exact)
        assert rel <= 1e-4, f"seed {seed}: rel {rel}"
    print("\nACCEPTANCE PASS 6: exact MSE within 1e-4 of 2^18-point sampled loss, 20 parameter sets")


def test_criterion_7_cli_determinism(tmp_path):
    """cmd_compare reruns with identical flags are byte-identical."""
    out = tmp_path / "runs"
    flags = [
        "compare", "--k", "2,3", "--seeds", "1,2", "--workers", "1",
        "--epochs", "60", "--grid-n", "128", "--out", str(out),
    ]
    assert cli_main(flags) == 0
    first = {name: (out / name).read_bytes() for name in ("report.csv", "report.json", "table.txt")}
    assert cli_main(flags) == 0
    for name, blob in first.items():
        assert (out / name).read_bytes() == blob, f"{name} differs between reruns"
    print("\nACCEPTANCE PASS 7: compare outputs byte-identical across reruns")


def test_criterion_8_network_direction():
    """Substituting better-resolved neurons (K=16) gives lower network-level
    error than K=4 neurons in the default probe."""
    records = substitution_probe([4, 16], TrainConfig(), seeds=SEEDS)
    by_k = {rec["k"]: rec for rec in records}
    assert by_k[16]["mae_mean"] < by_k[4]["mae_mean"], records
    print(
        f"\nACCEPTANCE PASS 8: substitution MAE K=16 {by_k[16]['mae_mean']:.5f} "
        f"< K=4 {by_k[4]['mae_mean']:.5f}"
    )
