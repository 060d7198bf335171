"""Command-line interface.

Subcommands::

    hfmnet simulate --wall W.toml --scenario S.toml --seed N -o out.csv
    hfmnet uvalue data.csv [--window-hours 24] [--tol 0.05]
    hfmnet train data.csv --arch lstm100 --split 1/2 --seed N -o run.json
    hfmnet predict run.json data.csv -o predictions.csv
    hfmnet grid data.csv --seeds 1,2 -o report_dir [--archs ...] [--splits ...]

Exit codes: 0 success, 1 data error, 2 training divergence, 3 I/O error.
Wall/scenario arguments accept either a file path or the name of a shipped
preset (``lightweight``, ``masonry`` / ``steady``, ``steady_noisy``,
``sinusoidal``, ``stepchange``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import architectures, experiment, iso9869, series, synth
from .config import TrainConfig
from .errors import DataError, TrainingError

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_TRAINING_ERROR = 2
EXIT_IO_ERROR = 3


def _load_config(path: str | None) -> TrainConfig:
    return TrainConfig() if path is None else TrainConfig.from_toml(path)


def _resolve_preset(value: str, kind: str) -> Path:
    path = Path(value)
    if path.is_file():
        return path
    return synth.preset_path(kind, value)


def _cmd_simulate(args: argparse.Namespace) -> int:
    wall = synth.load_wall(_resolve_preset(args.wall, "walls"))
    scenario = synth.load_scenario(_resolve_preset(args.scenario, "scenarios"))
    data = synth.simulate(wall, scenario, seed=args.seed)
    series.write_csv(data, args.output)
    print(
        f"wrote {len(data)} samples to {args.output} "
        f"(true U = {synth.true_u(wall):.4f} W/(m2K))"
    )
    return EXIT_OK


def _cmd_uvalue(args: argparse.Namespace) -> int:
    data = series.parse_csv(args.csv)
    estimate = iso9869.average_u_value(data)
    print(f"samples:        {estimate.n_samples}")
    print(f"span:           {data.duration_s / 3600.0:.2f} h")
    print(f"mean delta T:   {estimate.mean_delta_t:.3f} K")
    print(f"U (average):    {estimate.u:.4f} W/(m2K)")
    if estimate.reverse_flux:
        print("warning: negative U — flux sign opposes the temperature difference")
    try:
        report = iso9869.stability_check(
            data, window_s=args.window_hours * 3600.0, tol=args.tol
        )
    except iso9869.SpanTooShort as exc:
        print(f"stability:      not assessable ({exc})")
        return EXIT_OK
    verdict = "stable" if report.passed else "NOT stable"
    print(
        f"stability:      {verdict} "
        f"(change {report.relative_change * 100.0:.2f}% over the last "
        f"{args.window_hours:.0f} h, tolerance {args.tol * 100.0:.0f}%)"
    )
    return EXIT_OK


def _cmd_train(args: argparse.Namespace) -> int:
    data = series.parse_csv(args.csv)
    config = _load_config(args.config)
    spec = architectures.build(args.arch, cell_activation=config.cell_activation)
    split_spec = series.SplitSpec.from_string(args.split)
    run = architectures.train(spec, data, split_spec, seed=args.seed, config=config)
    architectures.save_run(run, args.output)
    print(
        f"trained {spec.name} on split {split_spec.label} "
        f"({run.epochs_run} epochs, final loss {run.final_loss:.3e}); "
        f"checkpoint: {args.output}"
    )
    return EXIT_OK


def _cmd_predict(args: argparse.Namespace) -> int:
    run = architectures.load_run(args.checkpoint)
    data = series.parse_csv(args.csv)
    out_dir = Path(args.output).parent if Path(args.output).suffix else Path(args.output)
    paths = experiment.export_plot_data(run, data, run.split_spec, out_dir)
    if Path(args.output).suffix:
        paths["predictions"].replace(args.output)
        print(f"wrote predictions to {args.output}")
    else:
        print(f"wrote predictions to {paths['predictions']} and {paths['scatter']}")
    return EXIT_OK


def _cmd_grid(args: argparse.Namespace) -> int:
    data = series.parse_csv(args.csv)
    config = _load_config(args.config)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    archs = [a.strip() for a in args.archs.split(",") if a.strip()]
    splits = [s.strip() for s in args.splits.split(",") if s.strip()]
    report, runs = experiment.run_grid(data, archs, splits, seeds, config, return_runs=True)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(experiment.report_to_json(report), encoding="utf-8")
    (out / "report.txt").write_text(experiment.format_report_table(report), encoding="utf-8")

    for (arch, split_label, seed), run in sorted(runs.items()):
        cell_dir = out / "cells" / f"{arch}_{split_label.replace('/', '_')}_seed{seed}"
        experiment.export_plot_data(run, data, run.split_spec, cell_dir)
        extrap = experiment.detect_extrapolation(
            data, run.split_spec, margin=config.extrapolation_margin
        )
        (cell_dir / "extrapolation.json").write_text(
            json.dumps(experiment.extrapolation_to_payload(extrap), indent=2, sort_keys=True)
            + "\n",
            encoding="utf-8",
        )

    print(experiment.format_report_table(report), end="")
    print(f"report written to {out}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hfmnet",
        description="Heat-flux-method U-values and temperature-driven flux prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic measurement series")
    p.add_argument("--wall", required=True, help="wall TOML file or preset name")
    p.add_argument("--scenario", required=True, help="scenario TOML file or preset name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("uvalue", help="average-method U-value and stability verdict")
    p.add_argument("csv")
    p.add_argument("--window-hours", type=float, default=24.0)
    p.add_argument("--tol", type=float, default=0.05)
    p.set_defaults(func=_cmd_uvalue)

    p = sub.add_parser("train", help="train one architecture on one split")
    p.add_argument("csv")
    p.add_argument("--arch", required=True, help="e.g. mlp3, lstm100, gru16, lstm8gru8")
    p.add_argument("--split", required=True, help="train fraction, e.g. 1/2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="TOML training config")
    p.add_argument("-o", "--output", required=True, help="checkpoint JSON path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict heat flux with a trained checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("csv")
    p.add_argument("-o", "--output", required=True, help="output CSV path or directory")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("grid", help="run the architecture × split grid")
    p.add_argument("csv")
    p.add_argument("--seeds", default="0", help="comma-separated global seeds")
    p.add_argument("--archs", default=",".join(architectures.CANONICAL_ARCHITECTURES))
    p.add_argument("--splits", default="1/4,1/2,2/3")
    p.add_argument("--config", default=None, help="TOML training config")
    p.add_argument("-o", "--output", required=True, help="report directory")
    p.set_defaults(func=_cmd_grid)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING_ERROR
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
