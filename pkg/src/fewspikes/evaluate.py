"""Method-by-K comparison protocol: repeated seeded runs, MSE statistics, reports.

For every (method, K) cell the protocol trains one neuron per seed and
records the best MSE that run achieved. Cells are independent and can run
in parallel; aggregation order is fixed so reports are byte-identical
across reruns.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .activation import ActivationKind
from .train import (
    GaussianPerturbedInit,
    RandomInit,
    TbpiInit,
    TrainConfig,
    TrainingDivergedError,
    pretrain,
    train_with_init,
)

METHOD_RANDOM = "random"
METHOD_GAUSSIAN = "gaussian_noise"
METHOD_TBPI = "tbpi"
ALL_METHODS = (METHOD_RANDOM, METHOD_GAUSSIAN, METHOD_TBPI)

LEVEL_NEURON = "neuron"
LEVEL_NETWORK = "network"

CSV_HEADER = "method,k,seed_count,mse_mean,mse_stderr,scale,excluded,level"


@dataclass(frozen=True)
class EvalRow:
    """Aggregated result of one (method, k) cell."""

    method: str
    k: int
    seeds: tuple[int, ...]
    mses: tuple[float, ...]  # per successful seed, in seed order
    excluded: int  # diverged runs, left out of the aggregates
    level: str = LEVEL_NEURON

    @property
    def seed_count(self) -> int:
        return len(self.mses)

    @property
    def mse_mean(self) -> float:
        return float(np.mean(self.mses)) if self.mses else float("nan")

    @property
    def mse_min(self) -> float:
        return float(np.min(self.mses)) if self.mses else float("nan")

    @property
    def mse_stderr(self) -> float:
        # Sample standard deviation over the seeds divided by sqrt(count);
        # degenerate (single-seed) cells report 0.
        if len(self.mses) < 2:
            return 0.0
        return float(np.std(self.mses, ddof=1) / np.sqrt(len(self.mses)))

    @property
    def stderr_degenerate(self) -> bool:
        return len(self.mses) < 2


@dataclass(frozen=True)
class EvalReport:
    """Full factorial comparison table plus the configuration that produced it."""

    target: ActivationKind
    config: TrainConfig
    scale: float = 1e-2
    sigma: float = 0.1
    tbpi_family: str = "auto"
    tbpi_noise_sigma: float = 0.0
    rows: tuple[EvalRow, ...] = ()
    notes: tuple[str, ...] = (
        "evaluation grid is an artifact default, not a published setting",
    )

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "target": self.target.value,
            "scale": self.scale,
            "sigma": self.sigma,
            "tbpi_family": self.tbpi_family,
            "tbpi_noise_sigma": self.tbpi_noise_sigma,
            "train_config": self.config.to_dict(),
            "notes": list(self.notes),
            "rows": [
                {
                    "method": row.method,
                    "k": row.k,
                    "level": row.level,
                    "seeds": list(row.seeds),
                    "mses": [float(m) for m in row.mses],
                    "mse_mean": row.mse_mean,
                    "mse_min": row.mse_min,
                    "mse_stderr": row.mse_stderr,
                    "stderr_degenerate": row.stderr_degenerate,
                    "excluded": row.excluded,
                }
                for row in self.rows
            ],
        }


def run_method(
    method: str,
    k: int,
    config: TrainConfig,
    seeds,
    sigma: float = 0.1,
    tbpi_family: str = "auto",
    tbpi_noise_sigma: float = 0.0,
) -> EvalRow:
    """Train one neuron per seed with the given strategy; collect best MSEs.

    random        train directly from random initial values
    gaussian_noise pretrain, perturb every entry, retrain
    tbpi          pretrain, refit from temporal curves, retrain

    Diverged runs are excluded from the aggregates and counted.
    """
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("seeds must be non-empty")
    if method not in ALL_METHODS:
        raise ValueError(f"unknown method: {method!r}")
    mses = []
    excluded = 0
    for seed in seeds:
        run_config = replace(config, seed=seed)
        try:
            if method == METHOD_RANDOM:
                _, history = train_with_init(RandomInit(), k, run_config)
            elif method == METHOD_GAUSSIAN:
                source, _ = pretrain(k, run_config)
                init = GaussianPerturbedInit(source, sigma)
                _, history = train_with_init(init, k, run_config)
            else:
                source, _ = pretrain(k, run_config)
                init = TbpiInit(source, tbpi_family, tbpi_noise_sigma)
                _, history = train_with_init(init, k, run_config)
        except TrainingDivergedError:
            excluded += 1
            continue
        mses.append(history.final_mse)
    return EvalRow(method=method, k=k, seeds=seeds, mses=tuple(mses), excluded=excluded)


def _run_cell(args) -> EvalRow:
    method, k, config, seeds, sigma, tbpi_family, tbpi_noise_sigma = args
    return run_method(method, k, config, seeds, sigma, tbpi_family, tbpi_noise_sigma)


def compare_methods(
    k_list,
    config: TrainConfig,
    seeds,
    methods=ALL_METHODS,
    sigma: float = 0.1,
    tbpi_family: str = "auto",
    tbpi_noise_sigma: float = 0.0,
    scale: float = 1e-2,
    workers: int | None = None,
) -> EvalReport:
    """Full factorial (method x k) table over the given seeds.

    With workers != 1 the cells run in separate processes; each cell is
    deterministic on its own and rows are assembled in a fixed order, so
    the report does not depend on scheduling.
    """
    k_list = [int(k) for k in k_list]
    seeds = [int(s) for s in seeds]
    if not k_list or not seeds:
        raise ValueError("k_list and seeds must be non-empty")
    cells = [
        (method, k, config, tuple(seeds), sigma, tbpi_family, tbpi_noise_sigma)
        for method in methods
        for k in sorted(k_list)
    ]
    if workers == 1 or len(cells) == 1:
        rows = [_run_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    return EvalReport(
        target=config.target,
        config=config,
        scale=scale,
        sigma=sigma,
        tbpi_family=tbpi_family,
        tbpi_noise_sigma=tbpi_noise_sigma,
        rows=tuple(rows),
    )


def render_table(report: EvalReport) -> tuple[str, str]:
    """Human-readable table plus a full-precision CSV.

    The text table prints mean MSE divided by the reporting scale with 4
    decimal places; the CSV keeps full precision so that parsing it back
    reproduces every number exactly.
    """
    neuron_rows = [r for r in report.rows if r.level == LEVEL_NEURON]
    methods = []
    for row in neuron_rows:
        if row.method not in methods:
            methods.append(row.method)
    ks = sorted({row.k for row in neuron_rows})
    by_cell = {(r.method, r.k): r for r in neuron_rows}

    out = io.StringIO()
    out.write(f"MSE by method and K, target={report.target.value}, scale={report.scale:g}\n")
    header = ["K"] + [f"{m} (mean+-stderr)" for m in methods]
    widths = [max(len(header[0]), 4)] + [max(len(h), 19) for h in header[1:]]
    out.write("  ".join(h.ljust(w) for h, w in zip(header, widths)) + "\n")
    for k in ks:
        cells = [str(k).ljust(widths[0])]
        for i, m in enumerate(methods):
            row = by_cell.get((m, k))
            if row is None or not row.mses:
                cells.append("-".ljust(widths[i + 1]))
                continue
            text = f"{row.mse_mean / report.scale:.4f} +- {row.mse_stderr / report.scale:.4f}"
            cells.append(text.ljust(widths[i + 1]))
        out.write("  ".join(cells).rstrip() + "\n")

    csv_lines = [CSV_HEADER]
    for row in report.rows:
        csv_lines.append(
            ",".join(
                [
                    row.method,
                    repr(row.k),
                    repr(row.seed_count),
                    repr(row.mse_mean),
                    repr(row.mse_stderr),
                    repr(report.scale),
                    repr(row.excluded),
                    row.level,
                ]
            )
        )
    return out.getvalue(), "\n".join(csv_lines) + "\n"


def parse_report_csv(text: str) -> list[dict]:
    """Parse the CSV emitted by render_table back into python values."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    if header != CSV_HEADER.split(","):
        raise ValueError(f"unexpected CSV header: {lines[0]!r}")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(
            {
                "method": parts[0],
                "k": int(parts[1]),
                "seed_count": int(parts[2]),
                "mse_mean": float(parts[3]),
                "mse_stderr": float(parts[4]),
                "scale": float(parts[5]),
                "excluded": int(parts[6]),
                "level": parts[7],
            }
        )
    return rows


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
