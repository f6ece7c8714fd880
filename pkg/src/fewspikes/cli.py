"""Command-line entry point for the FS-neuron training and evaluation pipeline.

Subcommands: pretrain, fit, init, train, compare, network, export. Every
command writes its outputs atomically (temp file + rename) together with
a metadata file echoing the resolved configuration, so reruns with the
same flags produce byte-identical files. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, curvefit, evaluate, network
from .activation import ActivationKind, eval_activation, make_grid
from .neuron import FsParams, forward_batch, to_step_function
from .train import (
    GaussianPerturbedInit,
    RandomInit,
    TbpiInit,
    TrainConfig,
    pretrain,
    tbpi_init,
    train_with_init,
    init_random,
    init_gaussian_perturbed,
)


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json_atomic(path: Path, obj) -> None:
    _write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_meta(out_dir: Path, name: str, args: argparse.Namespace) -> None:
    options = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    meta = {"command": args.command, "version": __version__, "options": options}
    _write_json_atomic(out_dir / f"{name}.meta.json", meta)


def _load_params(path: str) -> FsParams:
    with open(path) as fh:
        return FsParams.from_dict(json.load(fh))


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _add_train_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", default="swish", choices=[k.value for k in ActivationKind])
    p.add_argument("--epochs", type=int, default=20000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--surrogate-width", type=float, default=1.0)
    p.add_argument("--x-min", type=float, default=-8.0)
    p.add_argument("--x-max", type=float, default=8.0)
    p.add_argument("--grid-n", type=int, default=2048)


def _config_from_args(args: argparse.Namespace, seed: int) -> TrainConfig:
    return TrainConfig(
        grid=make_grid(args.x_min, args.x_max, args.grid_n),
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        adam_beta1=args.beta1,
        adam_beta2=args.beta2,
        adam_eps=args.eps,
        surrogate_width=args.surrogate_width,
        seed=seed,
        target=ActivationKind(args.target),
    )


def cmd_pretrain(args: argparse.Namespace) -> int:
    config = _config_from_args(args, args.seed)
    params, history = pretrain(args.k, config)
    out = Path(args.out)
    tag = f"k{args.k}_seed{args.seed}"
    _write_json_atomic(out / f"params_{tag}.json", params.to_dict())
    _write_json_atomic(out / f"history_{tag}.json", history.to_dict())
    _write_meta(out, f"pretrain_{tag}", args)
    print(f"wrote {out / f'params_{tag}.json'} (final mse {history.final_mse:.6g})")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    params = _load_params(args.params)
    out = Path(args.out)
    stem = Path(args.params).stem
    models = {}
    for name, seq in (("h", params.h), ("d", params.d), ("T", params.thr)):
        models[name] = curvefit.fit(seq, args.family)

    lines = ["param,t,raw,fitted"]
    for name, seq in (("h", params.h), ("d", params.d), ("T", params.thr)):
        for t in range(1, params.k + 1):
            fitted = curvefit.eval_curve(models[name], t)
            lines.append(f"{name},{t},{seq[t - 1]!r},{fitted!r}")

    for name, model in models.items():
        _write_json_atomic(out / f"{stem}_curve_{name}.json", model.to_dict())
    _write_text_atomic(out / f"{stem}_curves.csv", "\n".join(lines) + "\n")
    _write_meta(out, f"fit_{stem}", args)
    chosen = ", ".join(f"{name}:{m.family}" for name, m in models.items())
    print(f"fitted curves ({chosen}) -> {out / f'{stem}_curves.csv'}")
    return 0


def cmd_init(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.method == "random":
        if args.k is None:
            raise ValueError("--k is required for --method random")
        params = init_random(args.k, args.seed)
    else:
        if args.source is None:
            raise ValueError(f"--from is required for --method {args.method}")
        source = _load_params(args.source)
        if args.method == "gaussian":
            params = init_gaussian_perturbed(source, args.sigma, args.seed)
        else:
            params, _ = tbpi_init(
                source, args.family, noise_sigma=args.tbpi_noise_sigma, seed=args.seed
            )
    tag = f"{args.method}_k{params.k}_seed{args.seed}"
    _write_json_atomic(out / f"params_init_{tag}.json", params.to_dict())
    _write_meta(out, f"init_{tag}", args)
    print(f"wrote {out / f'params_init_{tag}.json'}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    if args.init == "random":
        if args.k is None:
            raise ValueError("--k is required for --init random")
        k = args.k
        strategy = RandomInit()
    else:
        if args.source is None:
            raise ValueError(f"--from is required for --init {args.init}")
        source = _load_params(args.source)
        k = source.k
        if args.init == "gaussian":
            strategy = GaussianPerturbedInit(source, args.sigma)
        else:
            strategy = TbpiInit(source, args.family, args.tbpi_noise_sigma)
    config = _config_from_args(args, args.seed)
    params, history = train_with_init(strategy, k, config)
    out = Path(args.out)
    tag = f"{args.init}_k{k}_seed{args.seed}"
    _write_json_atomic(out / f"params_{tag}.json", params.to_dict())
    _write_json_atomic(out / f"history_{tag}.json", history.to_dict())
    _write_meta(out, f"train_{tag}", args)
    print(f"wrote {out / f'params_{tag}.json'} (final mse {history.final_mse:.6g})")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config = _config_from_args(args, seed=0)
    report = evaluate.compare_methods(
        _parse_int_list(args.k),
        config,
        _parse_int_list(args.seeds),
        methods=tuple(args.methods.split(",")),
        sigma=args.sigma,
        tbpi_family=args.family,
        tbpi_noise_sigma=args.tbpi_noise_sigma,
        scale=args.scale,
        workers=args.workers,
    )
    table, csv_text = evaluate.render_table(report)
    out = Path(args.out)
    _write_text_atomic(out / "table.txt", table)
    _write_text_atomic(out / "report.csv", csv_text)
    _write_text_atomic(out / "report.json", evaluate.report_to_json(report))
    _write_meta(out, "compare", args)
    print(table, end="")
    return 0


def cmd_network(args: argparse.Namespace) -> int:
    config = _config_from_args(args, seed=0)
    records = network.substitution_probe(
        _parse_int_list(args.k),
        config,
        _parse_int_list(args.seeds),
        layer_sizes=tuple(_parse_int_list(args.layer_sizes)),
        mlp_seed=args.mlp_seed,
        probe_range=(args.probe_min, args.probe_max),
        probe_points=args.probe_points,
    )
    out = Path(args.out)
    rows = [
        evaluate.EvalRow(
            method=evaluate.METHOD_RANDOM,
            k=rec["k"],
            seeds=tuple(rec["seeds"]),
            mses=tuple(rec["mae"]),
            excluded=0,
            level=evaluate.LEVEL_NETWORK,
        )
        for rec in records
    ]

    csv_path = out / "report.csv"
    if csv_path.exists():
        existing = csv_path.read_text().rstrip("\n").splitlines()
    else:
        existing = [evaluate.CSV_HEADER]
    for row in rows:
        existing.append(
            ",".join(
                [
                    row.method,
                    repr(row.k),
                    repr(row.seed_count),
                    repr(row.mse_mean),
                    repr(row.mse_stderr),
                    repr(args.scale),
                    repr(row.excluded),
                    row.level,
                ]
            )
        )
    _write_text_atomic(csv_path, "\n".join(existing) + "\n")

    json_path = out / "report.json"
    if json_path.exists():
        doc = json.loads(json_path.read_text())
    else:
        doc = {"version": __version__, "rows": []}
    doc["network_probe"] = {
        "layer_sizes": _parse_int_list(args.layer_sizes),
        "mlp_seed": args.mlp_seed,
        "probe_range": [args.probe_min, args.probe_max],
        "probe_points": args.probe_points,
        "records": records,
    }
    _write_json_atomic(json_path, doc)
    _write_meta(out, "network", args)
    for rec in records:
        print(f"k={rec['k']}: substitution mae mean {rec['mae_mean']:.6g}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    params = _load_params(args.params)
    out = Path(args.out)
    stem = Path(args.params).stem
    grid = make_grid(args.x_min, args.x_max, args.grid_n)
    kind = ActivationKind(args.target)
    approx = forward_batch(params, grid.points)
    target = eval_activation(kind, grid.points)
    lines = ["x,target,approx"]
    for x, f, y in zip(grid.points, target, approx):
        lines.append(f"{x!r},{f!r},{y!r}")
    _write_text_atomic(out / f"{stem}_plot.csv", "\n".join(lines) + "\n")

    sf = to_step_function(params, (args.x_min, args.x_max))
    _write_json_atomic(
        out / f"{stem}_step.json",
        {
            "domain": [sf.domain[0], sf.domain[1]],
            "breakpoints": [float(b) for b in sf.breakpoints],
            "values": [float(v) for v in sf.values],
        },
    )
    _write_meta(out, f"export_{stem}", args)
    print(f"wrote {out / f'{stem}_plot.csv'} and {out / f'{stem}_step.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fewspikes",
        description="Train and evaluate few-spikes neurons that approximate activation functions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="train a neuron from random initial values")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="runs")
    _add_train_options(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("fit", help="fit temporal curves to a trained parameter file")
    p.add_argument("--params", required=True)
    p.add_argument("--family", default="auto")
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("init", help="produce initial parameters without training")
    p.add_argument("--method", required=True, choices=["random", "gaussian", "tbpi"])
    p.add_argument("--from", dest="source", default=None, help="source params JSON")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--family", default="auto")
    p.add_argument("--tbpi-noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("train", help="train a neuron from a chosen initialization")
    p.add_argument("--init", default="random", choices=["random", "gaussian", "tbpi"])
    p.add_argument("--from", dest="source", default=None, help="source params JSON")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--family", default="auto")
    p.add_argument("--tbpi-noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="runs")
    _add_train_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="full method-by-K comparison table")
    p.add_argument("--k", default="4,8,12,16")
    p.add_argument("--seeds", default="1,2,3,4")
    p.add_argument("--methods", default=",".join(evaluate.ALL_METHODS))
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--family", default="auto")
    p.add_argument("--tbpi-noise-sigma", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1e-2)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default="runs")
    _add_train_options(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("network", help="MLP substitution probe for trained neurons")
    p.add_argument("--k", default="4,16")
    p.add_argument("--seeds", default="1,2,3,4")
    p.add_argument("--layer-sizes", default="1,16,16,1")
    p.add_argument("--mlp-seed", type=int, default=network.DEFAULT_MLP_SEED)
    p.add_argument("--probe-min", type=float, default=network.DEFAULT_PROBE_RANGE[0])
    p.add_argument("--probe-max", type=float, default=network.DEFAULT_PROBE_RANGE[1])
    p.add_argument("--probe-points", type=int, default=network.DEFAULT_PROBE_POINTS)
    p.add_argument("--scale", type=float, default=1e-2)
    p.add_argument("--out", default="runs")
    _add_train_options(p)
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("export", help="write plot data and the exact step function")
    p.add_argument("--params", required=True)
    p.add_argument("--target", default="swish", choices=[k.value for k in ActivationKind])
    p.add_argument("--x-min", type=float, default=-8.0)
    p.add_argument("--x-max", type=float, default=8.0)
    p.add_argument("--grid-n", type=int, default=2048)
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # runtime failures exit 1, with a diagnostic
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
