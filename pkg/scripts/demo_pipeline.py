"""End-to-end demo: synthesize prediction sets, pick a threshold, report.

Usage:
    python scripts/demo_pipeline.py [--n 2000] [--seed 42] [--out demo_out]
"""

import argparse
from pathlib import Path

from melselect import rejection, uncertainty
from melselect.cli import RunConfig, run_evaluate
from melselect.fixtures import FixtureSpec, generate_fixture, write_fixture
from melselect.report import format_percent


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", default="demo_out")
    args = parser.parse_args()

    out = Path(args.out)
    spec = FixtureSpec(
        n=args.n, melanoma_fraction=0.3, error_rate=0.15, correlation=0.7, fp_share=0.52
    )
    fixture = generate_fixture(spec, seed=args.seed)
    fixture_paths = write_fixture(fixture, out / "fixture")
    print(f"fixture written to {out / 'fixture'}")

    paths = run_evaluate(
        RunConfig(
            validation_path=fixture_paths["validation"],
            test_path=fixture_paths["test"],
            out_dir=out / "reports",
            seed=args.seed,
            test_name="demo",
        )
    )
    print(f"reports written to {out / 'reports'}: {sorted(p.name for p in paths.values())}")

    val = uncertainty.annotate_set(fixture.validation)
    test = uncertainty.annotate_set(fixture.test)
    policy = rejection.select_threshold(
        rejection.sweep_thresholds(val, rejection.RejectionPolicy(1.0)),
        rejection.RejectionPolicy(1.0),
    )
    result = rejection.evaluate_with_rejection(test, policy)
    before, after = result.before.classification, result.after.classification
    print(f"\nselected threshold: {policy.threshold:g}")
    print(f"coverage: {len(result.partition.accepted)}/{len(test)}")
    for name in ("precision", "specificity", "sensitivity", "f1", "accuracy", "auc_roc"):
        print(
            f"  {name:12s} {format_percent(getattr(before, name))} -> "
            f"{format_percent(getattr(after, name))}"
        )


if __name__ == "__main__":
    main()
