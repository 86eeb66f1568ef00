"""Command-line entry point wiring the evaluation pipeline end to end.

Subcommands mirror the pipeline stages: ``manifest`` (dataset harmonization),
``evaluate`` (full before/after run), ``sweep`` (threshold sweep only),
``report`` (render/rank saved reports), ``gen-fixture`` (synthetic oracle
data), and ``serve`` (HTTP API).

Exit codes: 0 ok, 1 no admissible threshold, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import calibration, fixtures, ingest, rejection, report, uncertainty

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT_ERROR = 2


@dataclass(frozen=True)
class RunConfig:
    """Everything one ``evaluate`` invocation needs."""

    validation_path: Path
    test_path: Path
    out_dir: Path
    grid_step: float = rejection.DEFAULT_GRID_STEP
    max_reject_fraction: float = rejection.DEFAULT_MAX_REJECT_FRACTION
    bins: int = calibration.DEFAULT_BINS
    seed: int = 0
    format: str = "text"
    test_name: str | None = None
    network: str = "external"
    train_sets: str = ""

    def __post_init__(self) -> None:
        if self.validation_path.resolve() == self.test_path.resolve():
            raise ValueError("validation and test paths must be distinct")


def _load_predictions(path: Path, role: str) -> ingest.EvaluationSet:
    fmt = "json" if path.suffix.lower() == ".json" else "csv"
    return ingest.parse_predictions(
        path.read_bytes(), fmt, name=path.stem, role=role
    )


def run_evaluate(config: RunConfig) -> dict[str, Path]:
    """Library-level evaluate: returns the mapping of written files.

    Pure composition of ingest -> uncertainty -> rejection -> report; the CLI
    adds nothing but argument plumbing, so outputs are reproducible from the
    library alone.
    """
    val = uncertainty.annotate_set(_load_predictions(config.validation_path, "validation"))
    test = uncertainty.annotate_set(_load_predictions(config.test_path, "test"))

    policy = rejection.RejectionPolicy(
        threshold=1.0,
        max_reject_fraction=config.max_reject_fraction,
        grid_step=config.grid_step,
    )
    sweep = rejection.sweep_thresholds(val, policy, bins=config.bins)
    selected = rejection.select_threshold(sweep, policy)
    result = rejection.evaluate_with_rejection(test, selected, bins=config.bins)

    test_name = config.test_name or config.test_path.stem
    row = report.format_before_after_row(
        result.before,
        result.after,
        test_set=test_name,
        network=config.network,
        train_sets=config.train_sets,
        threshold=selected.threshold,
    )
    evaluation = report.evaluation_document(result)
    reduction = report.false_diagnosis_reduction(test, result.partition)

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report_json": out / "report.json",
        "report_csv": out / "report.csv",
        "sweep_csv": out / "sweep.csv",
        "reliability_csv": out / "reliability.csv",
        "reduction_csv": out / "reduction.csv",
    }
    report_doc = {"row": json.loads(row.to_json()), "evaluation": evaluation}
    paths["report_json"].write_text(
        json.dumps(report_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    paths["report_csv"].write_text(row.to_csv(), encoding="utf-8")
    paths["sweep_csv"].write_text(rejection.sweep_csv(sweep), encoding="utf-8")
    paths["reliability_csv"].write_text(
        calibration.reliability_csv(calibration.compute_bins(test, config.bins)), encoding="utf-8"
    )
    paths["reduction_csv"].write_text(
        report.reduction_csv({test_name: reduction}), encoding="utf-8"
    )
    return paths


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = RunConfig(
        validation_path=Path(args.val),
        test_path=Path(args.test),
        out_dir=Path(args.out),
        grid_step=args.grid_step,
        max_reject_fraction=args.max_reject,
        bins=args.bins,
        seed=args.seed,
        format=args.format,
        test_name=args.test_name,
        network=args.network,
        train_sets=args.train_sets,
    )
    paths = run_evaluate(config)
    doc = json.loads(paths["report_json"].read_text(encoding="utf-8"))
    row = report.BeforeAfterRow.from_json(json.dumps(doc["row"]))
    if config.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    elif config.format == "csv":
        print(row.to_csv(), end="")
    else:
        print(row.to_text(), end="")
        print(f"selected threshold: {row.threshold:g}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    val = uncertainty.annotate_set(_load_predictions(Path(args.val), "validation"))
    policy = rejection.RejectionPolicy(
        threshold=1.0, max_reject_fraction=args.max_reject, grid_step=args.grid_step
    )
    sweep = rejection.sweep_thresholds(val, policy, bins=args.bins)
    text = rejection.sweep_csv(sweep)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    rows = []
    for path in args.reports:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        rows.append(report.BeforeAfterRow.from_json(json.dumps(doc["row"])))
    if args.rank:
        flat = []
        for r in rows:
            entry: dict[str, object] = {
                "test_set": r.test_set,
                "network": r.network,
                "train_sets": r.train_sets,
                "threshold": r.threshold,
            }
            for col in report.METRIC_COLUMNS:
                entry[col] = r.after.get(col)
                entry[f"{col}_before"] = r.before.get(col)
            flat.append(entry)
        print(json.dumps(report.leaderboard_document(flat, args.rank), indent=2, sort_keys=True))
        return EXIT_OK
    for r in rows:
        if args.format == "json":
            print(r.to_json(), end="")
        elif args.format == "csv":
            print(r.to_csv(), end="")
        else:
            print(r.to_text(), end="")
    return EXIT_OK


def cmd_gen_fixture(args: argparse.Namespace) -> int:
    spec = fixtures.FixtureSpec(
        n=args.n,
        melanoma_fraction=args.melanoma_fraction,
        error_rate=args.error_rate,
        correlation=args.correlation,
        fp_share=args.fp_share,
        mode=args.mode,
    )
    fixture = fixtures.generate_fixture(spec, args.seed)
    paths = fixtures.write_fixture(fixture, args.out)
    for key, path in sorted(paths.items()):
        print(f"{key}: {path}")
    return EXIT_OK


def _parse_source(text: str) -> tuple[str, Path, Path]:
    parts = text.split("=", 2)
    if len(parts) != 3:
        raise ingest.ManifestError(
            f"--source expects NAME=ROOT=DESCRIPTOR, got {text!r}"
        )
    return parts[0], Path(parts[1]), Path(parts[2])


def cmd_manifest(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    synonyms = [s for s in args.synonyms.split(",") if s]
    known = [s for s in args.known_labels.split(",") if s] if args.known_labels else None

    manifests = []
    for source in args.source:
        name, root, descriptor = _parse_source(source)
        layout = ingest.load_layout_config(descriptor)
        manifest = ingest.parse_dataset_layout(root, layout, source_name=name)
        if args.binarize or args.split or args.oversample or args.merge:
            manifest = ingest.binarize_labels(
                manifest, synonyms, strict=args.strict, known_labels=known
            )
        if args.split:
            manifest = ingest.make_split(manifest, args.split, args.seed)
        manifests.append(manifest)
        (out / f"{name}.manifest.json").write_text(
            ingest.manifest_to_json(manifest), encoding="utf-8"
        )

    target = manifests
    if args.merge:
        merged = ingest.merge_manifests(manifests)
        (out / "merged.manifest.json").write_text(ingest.manifest_to_json(merged), encoding="utf-8")
        target = [merged]
    if args.oversample:
        for manifest in target:
            plan = ingest.build_oversample_plan(manifest)
            (out / f"{manifest.source_name}.oversample.json").write_text(
                json.dumps(plan.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(store_dir=Path(args.store), cors_origins=args.cors_origin)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="melselect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="full before/after rejection run")
    p_eval.add_argument("--val", required=True, help="validation prediction file (csv/json)")
    p_eval.add_argument("--test", required=True, help="test prediction file (csv/json)")
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.add_argument("--grid-step", type=float, default=rejection.DEFAULT_GRID_STEP)
    p_eval.add_argument("--max-reject", type=float, default=rejection.DEFAULT_MAX_REJECT_FRACTION)
    p_eval.add_argument("--bins", type=int, default=calibration.DEFAULT_BINS)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p_eval.add_argument("--test-name", default=None)
    p_eval.add_argument("--network", default="external")
    p_eval.add_argument("--train-sets", default="")
    p_eval.set_defaults(func=cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="threshold sweep on a validation set")
    p_sweep.add_argument("--val", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--grid-step", type=float, default=rejection.DEFAULT_GRID_STEP)
    p_sweep.add_argument("--max-reject", type=float, default=rejection.DEFAULT_MAX_REJECT_FRACTION)
    p_sweep.add_argument("--bins", type=int, default=calibration.DEFAULT_BINS)
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser("report", help="render or rank saved report.json files")
    p_report.add_argument("reports", nargs="+")
    p_report.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p_report.add_argument("--rank", default=None, help="metric name to rank a leaderboard by")
    p_report.set_defaults(func=cmd_report)

    p_gen = sub.add_parser("gen-fixture", help="generate synthetic prediction fixtures")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--melanoma-fraction", type=float, default=0.3)
    p_gen.add_argument("--error-rate", type=float, default=0.1)
    p_gen.add_argument("--correlation", type=float, default=0.5)
    p_gen.add_argument("--fp-share", type=float, default=0.5)
    p_gen.add_argument("--mode", choices=fixtures.MODES, default="planted")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen_fixture)

    p_manifest = sub.add_parser("manifest", help="parse/merge/split dataset layouts")
    p_manifest.add_argument(
        "--source", action="append", required=True, help="NAME=ROOT=DESCRIPTOR, repeatable"
    )
    p_manifest.add_argument("--out", required=True)
    p_manifest.add_argument("--binarize", action="store_true")
    p_manifest.add_argument("--synonyms", default="melanoma,mel")
    p_manifest.add_argument("--strict", action="store_true")
    p_manifest.add_argument("--known-labels", default=None)
    p_manifest.add_argument("--split", type=float, default=None, help="train ratio, e.g. 0.8")
    p_manifest.add_argument("--seed", type=int, default=0)
    p_manifest.add_argument("--oversample", action="store_true")
    p_manifest.add_argument("--merge", action="store_true")
    p_manifest.set_defaults(func=cmd_manifest)

    p_serve = sub.add_parser("serve", help="run the HTTP evaluation service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--store", required=True, help="run-store directory")
    p_serve.add_argument(
        "--cors-origin", action="append", default=None, help="allowed UI origin, repeatable"
    )
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except rejection.NoFeasibleThresholdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ingest.PredictionFormatError, ingest.ManifestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
