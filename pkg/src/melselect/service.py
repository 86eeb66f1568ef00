"""HTTP API over evaluation runs and the human-review referral queue.

A run bundles a validation and a test prediction set; the threshold sweep
and selection happen eagerly at creation. What-if queries recompute metrics
at an arbitrary threshold without touching stored state. Rejected samples
form the "Uncertain" queue; a human verdict on one of them counts as a
maximally confident prediction in the final, combined metrics.

Persistence is an append-only directory per run (``run.json`` written once,
reviews appended to ``reviews.jsonl``), which keeps stored runs immutable
except for review attachments.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import calibration, ingest, rejection, report, uncertainty

DEFAULT_PAGE_SIZE = 50

_ULID_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
_ID_RNG = random.SystemRandom()


def new_run_id() -> str:
    """ULID-style id: 48-bit millisecond timestamp + 80 random bits, base32."""
    ms = int(time.time() * 1000)
    value = (ms << 80) | _ID_RNG.getrandbits(80)
    chars = []
    for _ in range(26):
        chars.append(_ULID_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: str = ""):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.status,
            content={"code": self.code, "message": self.message, "detail": self.detail},
        )


@dataclass
class RunState:
    run_id: str
    name: str
    created: str
    validation: ingest.EvaluationSet
    test: ingest.EvaluationSet
    policy: rejection.RejectionPolicy
    bins: int
    sweep: list[rejection.SweepPoint]
    reviews: dict[str, dict] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def selected_threshold(self) -> float:
        return self.policy.threshold


def _sweep_point_doc(p: rejection.SweepPoint) -> dict:
    return {
        "threshold": p.threshold,
        "reject_fraction": p.reject_fraction,
        "accuracy": p.accuracy,
        "ece": p.ece,
        "brier": p.brier,
        "objective": p.objective,
        "feasible": p.feasible,
    }


def _bin_doc(s: calibration.BinStat) -> dict:
    return {
        "lower": s.lower,
        "upper": s.upper,
        "count": s.count,
        "mean_confidence": s.mean_confidence,
        "accuracy": s.accuracy,
    }


class RunStore:
    """Directory-backed run registry with per-run write serialization."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._runs: dict[str, RunState] = {}
        self._registry_lock = threading.Lock()

    def create(
        self,
        validation: ingest.EvaluationSet,
        test: ingest.EvaluationSet,
        policy: rejection.RejectionPolicy,
        bins: int,
        name: str,
    ) -> RunState:
        sweep = rejection.sweep_thresholds(validation, policy, bins=bins)
        selected = rejection.select_threshold(sweep, policy)
        state = RunState(
            run_id=new_run_id(),
            name=name,
            created=datetime.now(timezone.utc).isoformat(),
            validation=validation,
            test=test,
            policy=selected,
            bins=bins,
            sweep=sweep,
        )
        run_dir = self.root / state.run_id
        run_dir.mkdir(parents=True)
        doc = {
            "run_id": state.run_id,
            "name": state.name,
            "created": state.created,
            "status": "ready",
            "bins": state.bins,
            "policy": {
                "threshold": selected.threshold,
                "max_reject_fraction": selected.max_reject_fraction,
                "grid_step": selected.grid_step,
            },
            "validation": json.loads(ingest.serialize_predictions(validation, "json")),
            "test": json.loads(ingest.serialize_predictions(test, "json")),
            "sweep": [_sweep_point_doc(p) for p in sweep],
        }
        (run_dir / "run.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with self._registry_lock:
            self._runs[state.run_id] = state
        return state

    def get(self, run_id: str) -> RunState:
        with self._registry_lock:
            state = self._runs.get(run_id)
        if state is not None:
            return state
        run_dir = self.root / run_id
        if not (run_dir / "run.json").is_file():
            raise ApiError(404, "run_not_found", f"no run {run_id!r}")
        state = self._load(run_dir)
        with self._registry_lock:
            self._runs.setdefault(run_id, state)
            return self._runs[run_id]

    def _load(self, run_dir: Path) -> RunState:
        doc = json.loads((run_dir / "run.json").read_text(encoding="utf-8"))
        policy = rejection.RejectionPolicy(
            threshold=doc["policy"]["threshold"],
            max_reject_fraction=doc["policy"]["max_reject_fraction"],
            grid_step=doc["policy"]["grid_step"],
        )
        sweep = [rejection.SweepPoint(**p) for p in doc["sweep"]]
        state = RunState(
            run_id=doc["run_id"],
            name=doc["name"],
            created=doc["created"],
            validation=ingest.parse_predictions(json.dumps(doc["validation"]), "json"),
            test=ingest.parse_predictions(json.dumps(doc["test"]), "json"),
            policy=policy,
            bins=doc["bins"],
            sweep=sweep,
        )
        reviews_path = run_dir / "reviews.jsonl"
        if reviews_path.is_file():
            for line in reviews_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    review = json.loads(line)
                    state.reviews[review["sample_id"]] = review
        return state

    def append_review(self, state: RunState, review: dict) -> None:
        path = self.root / state.run_id / "reviews.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(review, sort_keys=True) + "\n")
        state.reviews[review["sample_id"]] = review


def _parse_payload_set(payload: object, *, name: str, role: str) -> ingest.EvaluationSet:
    try:
        if isinstance(payload, str):
            evalset = ingest.parse_predictions(payload, "csv", name=name, role=role)
        elif isinstance(payload, dict):
            evalset = ingest.parse_predictions(json.dumps(payload), "json", name=name, role=role)
        else:
            raise ingest.PredictionFormatError(f"{role} payload must be a CSV string or JSON object")
    except ingest.PredictionFormatError as exc:
        raise ApiError(400, "malformed_payload", f"{role} payload invalid", str(exc)) from None
    if len(evalset) == 0:
        raise ApiError(400, "malformed_payload", f"{role} payload has no records")
    if not evalset.labeled:
        raise ApiError(400, "malformed_payload", f"{role} payload must be fully labeled")
    return uncertainty.annotate_set(replace(evalset, role=role))


def _threshold_param(state: RunState, raw: str | None) -> float:
    if raw is None:
        return state.selected_threshold
    try:
        value = float(raw)
    except ValueError:
        raise ApiError(400, "bad_threshold", f"threshold {raw!r} is not a number") from None
    if not (0.0 <= value <= 1.0):
        raise ApiError(400, "bad_threshold", f"threshold {value} outside [0,1]")
    return value


def _uncertain_items(state: RunState, threshold: float) -> list[dict]:
    partition = rejection.apply_threshold(state.test, threshold)
    items = sorted(
        partition.rejected.records, key=lambda r: (-(r.entropy or 0.0), r.sample_id)
    )
    out = []
    for rec in items:
        out.append(
            {
                "sample_id": rec.sample_id,
                "entropy": rec.entropy,
                "probs": list(rec.probs),
                "predicted_label": state.test.class_names[rec.predicted_label],
                "true_label": None
                if rec.true_label is None
                else state.test.class_names[rec.true_label],
                "review": state.reviews.get(rec.sample_id),
            }
        )
    return out


def _final_document(state: RunState) -> dict:
    partition = rejection.apply_threshold(state.test, state.selected_threshold)
    reviewed = []
    for rec in partition.rejected.records:
        review = state.reviews.get(rec.sample_id)
        if review is None:
            continue
        label_idx = state.test.class_names.index(review["human_label"])
        one_hot = tuple(1.0 if i == label_idx else 0.0 for i in range(len(state.test.class_names)))
        reviewed.append(replace(rec, probs=one_hot, entropy=0.0))
    combined = partition.accepted.with_records(partition.accepted.records + tuple(reviewed))
    n = len(state.test)
    evaluation = rejection.evaluate_set(combined, state.bins)
    return {
        "run_id": state.run_id,
        "threshold": state.selected_threshold,
        "counts": {
            "n": n,
            "accepted": len(partition.accepted),
            "rejected": len(partition.rejected),
            "reviewed": len(reviewed),
        },
        "coverage": (len(partition.accepted) + len(reviewed)) / n if n else None,
        "metrics": report.set_evaluation_document(evaluation),
    }


def create_app(store_dir: str | Path, cors_origins: Sequence[str] | None = None) -> FastAPI:
    """Build the service app over a run-store directory."""
    app = FastAPI(title="melselect service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins) if cors_origins else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = RunStore(Path(store_dir))
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return exc.response()

    @app.post("/runs", status_code=201)
    def create_run(body: dict):
        policy_doc = body.get("policy") or {}
        try:
            policy = rejection.RejectionPolicy(
                threshold=1.0,
                max_reject_fraction=float(
                    policy_doc.get("max_reject_fraction", rejection.DEFAULT_MAX_REJECT_FRACTION)
                ),
                grid_step=float(policy_doc.get("grid_step", rejection.DEFAULT_GRID_STEP)),
            )
            bins = int(policy_doc.get("bins", calibration.DEFAULT_BINS))
        except (TypeError, ValueError) as exc:
            raise ApiError(400, "malformed_payload", "bad policy overrides", str(exc)) from None
        if "validation" not in body or "test" not in body:
            raise ApiError(400, "malformed_payload", "body needs 'validation' and 'test' payloads")
        validation = _parse_payload_set(body["validation"], name="validation", role="validation")
        test = _parse_payload_set(body["test"], name="test", role="test")
        try:
            state = store.create(
                validation, test, policy, bins, name=str(body.get("name", "run"))
            )
        except rejection.NoFeasibleThresholdError as exc:
            raise ApiError(422, "no_admissible_threshold", str(exc)) from None
        return {
            "run_id": state.run_id,
            "selected_threshold": state.selected_threshold,
            "status": "ready",
        }

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        state = store.get(run_id)
        return {
            "run_id": state.run_id,
            "name": state.name,
            "created": state.created,
            "status": "ready",
            "selected_threshold": state.selected_threshold,
            "policy": {
                "threshold": state.policy.threshold,
                "max_reject_fraction": state.policy.max_reject_fraction,
                "grid_step": state.policy.grid_step,
            },
            "bins": state.bins,
            "counts": {"validation_n": len(state.validation), "test_n": len(state.test)},
            "class_names": list(state.test.class_names),
            "positive_class": state.test.positive_class,
        }

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str, threshold: str | None = None):
        state = store.get(run_id)
        t = _threshold_param(state, threshold)
        policy = replace(state.policy, threshold=t)
        result = rejection.evaluate_with_rejection(state.test, policy, bins=state.bins)
        if len(result.partition.accepted) == 0:
            raise ApiError(
                422, "degenerate_subset", f"threshold {t:g} accepts no samples"
            )
        return report.evaluation_document(result)

    @app.get("/runs/{run_id}/sweep")
    def get_sweep(run_id: str):
        state = store.get(run_id)
        return {
            "selected_threshold": state.selected_threshold,
            "points": [_sweep_point_doc(p) for p in state.sweep],
        }

    @app.get("/runs/{run_id}/reliability")
    def get_reliability(run_id: str, threshold: str | None = None):
        state = store.get(run_id)
        t = _threshold_param(state, threshold)
        partition = rejection.apply_threshold(state.test, t)
        before = calibration.compute_bins(state.test, state.bins)
        after = (
            calibration.compute_bins(partition.accepted, state.bins)
            if len(partition.accepted)
            else None
        )
        return {
            "threshold": t,
            "before": [_bin_doc(s) for s in before],
            "after": None if after is None else [_bin_doc(s) for s in after],
        }

    @app.get("/runs/{run_id}/uncertain")
    def get_uncertain(
        run_id: str,
        threshold: str | None = None,
        page: int = 1,
        page_size: int = DEFAULT_PAGE_SIZE,
    ):
        state = store.get(run_id)
        t = _threshold_param(state, threshold)
        if page < 1 or page_size < 1:
            raise ApiError(400, "bad_page", "page and page_size must be >= 1")
        items = _uncertain_items(state, t)
        start = (page - 1) * page_size
        return {
            "threshold": t,
            "total": len(items),
            "page": page,
            "page_size": page_size,
            "items": items[start : start + page_size],
        }

    @app.post("/runs/{run_id}/reviews")
    def submit_review(run_id: str, body: dict):
        state = store.get(run_id)
        sample_id = body.get("sample_id")
        human_label = body.get("human_label")
        reviewer = body.get("reviewer", "")
        if not sample_id or human_label not in state.test.class_names:
            raise ApiError(
                400,
                "malformed_payload",
                "review needs sample_id and a human_label from the class vocabulary",
            )
        partition = rejection.apply_threshold(state.test, state.selected_threshold)
        rejected_ids = {rec.sample_id for rec in partition.rejected.records}
        with state.lock:
            if sample_id not in rejected_ids:
                raise ApiError(
                    404, "not_in_queue", f"sample {sample_id!r} is not in the uncertain queue"
                )
            if sample_id in state.reviews:
                raise ApiError(409, "already_reviewed", f"sample {sample_id!r} already reviewed")
            review = {
                "run_id": state.run_id,
                "sample_id": sample_id,
                "human_label": human_label,
                "reviewer": str(reviewer),
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
            store.append_review(state, review)
        return review

    @app.get("/runs/{run_id}/final")
    def get_final(run_id: str):
        state = store.get(run_id)
        return _final_document(state)

    return app
