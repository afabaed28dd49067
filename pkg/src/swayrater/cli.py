"""Command-line pipeline: simulate, extract, train, evaluate, rank, report.

Commands communicate only through files, and every command is
deterministic for fixed inputs and flags (including --jobs), so re-runs
are byte-identical. Exit codes: 0 success, 1 usage error, 2 data or
validation error, 3 numerical non-convergence. Errors print one
machine-parsable line on stderr of the form ``error: <kind>: <detail>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .core import DataError, group_to_three, load_dataset, write_dataset
from .evaluation import (
    DEFAULT_C_GRID,
    EvalConfig,
    evaluate_dataset,
    load_report_document,
    render_document,
    write_report_document,
)
from .kinematics import DEFAULT_ZONE_THRESHOLD_DEG, dataset_features, write_feature_table
from .ranking import rank_features, render_importance_tables
from .svm import TrainConfig, save_model, train_multiclass
from .synthgen import SynthConfig, generate_dataset

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the documented contract
    # reserves 2 for data errors, so usage problems are re-raised and
    # mapped to exit 1.
    def error(self, message):
        raise UsageError(message)


def _parse_grid(spec: str):
    try:
        values = tuple(float(tok) for tok in spec.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"grid must be comma-separated numbers, got {spec!r}")
    if not values:
        raise UsageError("grid is empty")
    if any(v <= 0 for v in values):
        raise UsageError("grid values must be positive")
    return values


def _add_common_eval_flags(p):
    p.add_argument("--zone-threshold", type=float,
                   default=DEFAULT_ZONE_THRESHOLD_DEG,
                   help="tilt magnitude (deg) bounding the percentage zone")
    p.add_argument("--grid", type=str, default=None,
                   help="comma-separated C values (default: powers of ten,"
                        " 1e-7 through 1e3)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes for fold-level work")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=int, default=10_000_000)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swayrater",
                     description="balance-exercise rating from trunk sway")
    parser.add_argument("--version", action="version",
                        version=f"swayrater {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress details")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = SynthConfig()
    p = sub.add_parser("simulate", help="write a seeded synthetic dataset")
    p.add_argument("--seed", type=int, default=gen.seed)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--participants", type=int, default=gen.n_participants)
    p.add_argument("--sessions", type=int, default=gen.sessions_per_participant)
    p.add_argument("--sets-per-session", type=int, default=gen.sets_per_session)
    p.add_argument("--trials", type=int, default=gen.trials_per_set)
    p.add_argument("--rate", type=float, default=gen.sample_rate_hz)
    p.add_argument("--duration", type=float, default=gen.trial_duration_s)
    p.add_argument("--sway-scale", type=float, default=gen.difficulty_sway_scale)
    p.add_argument("--ar-coefficient", type=float, default=gen.ar_coefficient)
    p.add_argument("--skill-sd", type=float, default=gen.participant_skill_sd)
    p.add_argument("--label-noise", type=float, default=gen.label_noise)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("extract", help="write the 61-column feature table")
    p.add_argument("--in", dest="input", required=True,
                   help="dataset directory or manifest file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--zone-threshold", type=float,
                   default=DEFAULT_ZONE_THRESHOLD_DEG)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="fit a model on a full dataset")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output model file (JSON)")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--three-class", action="store_true",
                   help="train on the grouped 3-level scale")
    p.add_argument("--zone-threshold", type=float,
                   default=DEFAULT_ZONE_THRESHOLD_DEG)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=int, default=10_000_000)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate",
                       help="nested leave-one-participant-out evaluation")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output report directory")
    p.add_argument("--three-class", action="store_true",
                   help="add the grouped 3-level evaluation")
    p.add_argument("--mode", choices=("retrain", "map-predictions"),
                   default="retrain",
                   help="how the 3-level numbers are obtained")
    _add_common_eval_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("rank", help="backward feature elimination per fold")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--top", type=int, default=10,
                   help="rows in the top-features table")
    _add_common_eval_flags(p)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("report", help="render a stored evaluation report")
    p.add_argument("--in", dest="input", required=True, help="report JSON file")
    p.add_argument("--out", default=None,
                   help="output text path (default: stdout)")
    p.set_defaults(func=_cmd_report)

    return parser


def _eval_config(args) -> EvalConfig:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    return EvalConfig(
        zone_threshold_deg=args.zone_threshold,
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        jobs=args.jobs,
    )


def _grid(args):
    return DEFAULT_C_GRID if args.grid is None else _parse_grid(args.grid)


def _cmd_simulate(args) -> int:
    config = SynthConfig(
        seed=args.seed,
        n_participants=args.participants,
        sessions_per_participant=args.sessions,
        sets_per_session=args.sets_per_session,
        trials_per_set=args.trials,
        sample_rate_hz=args.rate,
        trial_duration_s=args.duration,
        difficulty_sway_scale=args.sway_scale,
        ar_coefficient=args.ar_coefficient,
        participant_skill_sd=args.skill_sd,
        label_noise=args.label_noise,
    )
    dataset = generate_dataset(config)
    manifest = write_dataset(dataset, args.out)
    print(f"wrote {len(dataset.sets)} sets for {len(dataset.participants)}"
          f" participants to {manifest}")
    return 0


def _cmd_extract(args) -> int:
    dataset = load_dataset(args.input)
    table = dataset_features(dataset, args.zone_threshold)
    write_feature_table(table, args.out)
    print(f"wrote {len(table)} rows to {args.out}")
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.input)
    table = dataset_features(dataset, args.zone_threshold)
    labels = table.pt_ratings
    if args.three_class:
        labels = [group_to_three(int(r)) for r in labels]
    config = TrainConfig(C=args.C, tolerance=args.tolerance,
                         max_iterations=args.max_iterations)
    model = train_multiclass(table.X, labels, args.C, config)
    save_model(model, args.out)
    print(f"wrote model with {len(model.classifiers)} pairwise classifiers"
          f" to {args.out}")
    if not model.converged:
        print("error: convergence: a pairwise solver hit max-iterations",
              file=sys.stderr)
        return 3
    return 0


def _count_unconverged(doc: dict) -> int:
    total = 0
    for key in ("five_class", "three_class"):
        if key in doc:
            total += sum(f.get("n_unconverged", 0) for f in doc[key]["folds"])
    return total


def _cmd_evaluate(args) -> int:
    # flag validation comes before any filesystem access
    grid, config = _grid(args), _eval_config(args)
    dataset = load_dataset(args.input)
    doc = evaluate_dataset(
        dataset, grid=grid, config=config,
        three_class_mode=args.mode if args.three_class else None,
    )
    out = Path(args.out)
    write_report_document(doc, out / "report.json", out / "report.txt")
    acc = doc["five_class"]["overall_accuracy"]
    f1 = doc["five_class"]["overall_macro_f1"]
    print(f"overall accuracy {100 * acc:.1f}%, macro F1 {f1:.3f};"
          f" report in {out}")
    if _count_unconverged(doc):
        print("error: convergence: a pairwise solver hit max-iterations",
              file=sys.stderr)
        return 3
    return 0


def _cmd_rank(args) -> int:
    grid, config = _grid(args), _eval_config(args)
    dataset = load_dataset(args.input)
    orders, chosen, importance = rank_features(dataset, grid=grid,
                                               config=config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = (f"swayrater feature importance (tool {__version__})\n"
            f"{len(orders)} folds\n\n")
    text += render_importance_tables(importance, top_n=args.top)
    (out / "importance.txt").write_text(text, encoding="utf-8")
    doc = {
        "format": "swayrater-elimination",
        "version": 1,
        "tool_version": __version__,
        "folds": [
            {"held_out_participant": o.fold_participant, "chosen_C": c,
             "order": list(o.order)}
            for o, c in zip(orders, chosen)
        ],
    }
    with (out / "orders.json").open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"wrote importance tables for {len(orders)} folds to {out}")
    return 0


def _cmd_report(args) -> int:
    doc = load_report_document(args.input)
    text = render_document(doc)
    if args.out is None:
        print(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def run(argv=None) -> int:
    """Entry point returning the documented exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
