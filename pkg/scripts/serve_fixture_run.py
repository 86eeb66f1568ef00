"""Start the review service with a synthetic run preloaded.

Prints the run id, then serves; point the web UI at the printed base URL.

Usage:
    python scripts/serve_fixture_run.py [--port 8000] [--store run_store] [--seed 42]
"""

import argparse
from pathlib import Path

import uvicorn

from melselect import rejection, uncertainty
from melselect.fixtures import FixtureSpec, generate_fixture
from melselect.service import RunStore, create_app


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--store", default="run_store")
    parser.add_argument("--n", type=int, default=600)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    fixture = generate_fixture(
        FixtureSpec(n=args.n, error_rate=0.15, correlation=0.7, fp_share=0.52),
        seed=args.seed,
    )
    store = RunStore(Path(args.store))
    state = store.create(
        uncertainty.annotate_set(fixture.validation),
        uncertainty.annotate_set(fixture.test),
        rejection.RejectionPolicy(threshold=1.0),
        bins=10,
        name="fixture-demo",
    )
    print(f"run id:   {state.run_id}")
    print(f"base url: http://{args.host}:{args.port}")
    print(f"try:      GET /runs/{state.run_id}/sweep")

    app = create_app(store_dir=Path(args.store))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


if __name__ == "__main__":
    main()
