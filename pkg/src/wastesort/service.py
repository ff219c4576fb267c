"""HTTP/JSON inference service.

Endpoints:

    POST /api/v1/classify             multipart image -> label, suggestion,
                                      carbon grams, points
    POST /api/v1/feedback             misclassification report with image copy
    POST /api/v1/sync                 idempotent offline event batch
    GET  /api/v1/leaderboard?limit=N  ranked user summaries
    GET  /api/v1/users/{id}/summary   one user's totals
    GET  /healthz                     503 until the model artifact is loaded

The model is a portable artifact loaded once at startup; inference is
read-only shared state, so concurrent requests need no coordination
beyond the ledger's own locking.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, Header, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .dataset import DecodeFailure, preprocess_bytes
from .labels import CLASS_NAMES, UnknownLabel, label_from_index, label_from_name
from .portable import load_portable
from .rewards import (
    EVENT_TYPES,
    AppendResult,
    CarbonFactorTable,
    LedgerEvent,
    PointsLedger,
    StorageFailure,
    carbon_for,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_UPLOAD_BYTES = 10 * 1024 * 1024
DEFAULT_POINTS = {"classify_confirmed": 10, "feedback_submitted": 5}

ENV_PREFIX = "WASTESORT_"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def load_suggestions(path: str | Path | None = None) -> dict[str, str]:
    """Class -> disposal-guidance text. Defaults ship as documented placeholders."""
    if path is None:
        raw = resources.files("wastesort").joinpath("data/suggestions.json").read_text()
    else:
        raw = Path(path).read_text()
    table = json.loads(raw)
    missing = [name for name in CLASS_NAMES if name not in table]
    if missing:
        raise ValueError(f"suggestion map is missing classes: {missing}")
    return {name: str(table[name]) for name in CLASS_NAMES}


@dataclass
class ServiceConfig:
    artifact_path: Path | None = None
    carbon_factors_path: Path | None = None  # None -> packaged placeholder table
    suggestions_path: Path | None = None
    journal_path: Path | None = None  # None -> in-memory ledger
    feedback_dir: Path = Path("feedback")
    host: str = "127.0.0.1"
    port: int = 8000
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    points: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_POINTS))
    static_dir: Path | None = None  # optionally serve a built web client

    def __post_init__(self):
        for name in ("artifact_path", "carbon_factors_path", "suggestions_path",
                     "journal_path", "static_dir"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))
        self.feedback_dir = Path(self.feedback_dir)
        if self.max_upload_bytes < 1:
            raise ValueError("max_upload_bytes must be positive")
        if self.port < 1 or self.port > 65535:
            raise ValueError(f"port out of range: {self.port}")
        for event_type in EVENT_TYPES:
            if event_type not in self.points:
                raise ValueError(f"points config is missing {event_type!r}")


def load_service_config(
    path: str | Path | None = None,
    env: dict[str, str] | None = None,
    **overrides,
) -> ServiceConfig:
    """Resolve config as defaults < JSON file < environment < overrides."""
    values: dict = {}
    if path is not None:
        values.update(json.loads(Path(path).read_text()))

    env = os.environ if env is None else env
    env_keys = {
        "ARTIFACT": ("artifact_path", str),
        "CARBON_FACTORS": ("carbon_factors_path", str),
        "SUGGESTIONS": ("suggestions_path", str),
        "JOURNAL": ("journal_path", str),
        "FEEDBACK_DIR": ("feedback_dir", str),
        "HOST": ("host", str),
        "PORT": ("port", int),
        "MAX_UPLOAD_BYTES": ("max_upload_bytes", int),
        "STATIC_DIR": ("static_dir", str),
    }
    for suffix, (name, cast) in env_keys.items():
        raw = env.get(ENV_PREFIX + suffix)
        if raw:
            values[name] = cast(raw)

    values.update({k: v for k, v in overrides.items() if v is not None})
    return ServiceConfig(**values)


# ---------------------------------------------------------------------------
# Feedback storage


@dataclass(frozen=True)
class FeedbackRecord:
    feedback_id: str
    event_id: str | None
    image_sha256: str
    image_path: str
    predicted: str
    corrected: str
    user_id: str | None
    received_at: str


_SAFE_SUFFIXES = {".jpg", ".jpeg", ".png"}


class FeedbackStore:
    """Images under content-hash filenames plus an append-only record file.

    Content hashing deduplicates accidental re-posts of the same bytes;
    each post still gets its own feedback_id and record row.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.images_dir = self.root / "images"
        self.records_path = self.root / "records.jsonl"
        self.images_dir.mkdir(parents=True, exist_ok=True)

    def add(self, image_bytes: bytes, filename: str | None, predicted: str,
            corrected: str, user_id: str | None, event_id: str | None) -> FeedbackRecord:
        suffix = Path(filename or "").suffix.lower()
        if suffix not in _SAFE_SUFFIXES:
            suffix = ".bin"
        sha = hashlib.sha256(image_bytes).hexdigest()
        image_path = self.images_dir / f"{sha}{suffix}"
        record = FeedbackRecord(
            feedback_id=uuid.uuid4().hex,
            event_id=event_id,
            image_sha256=sha,
            image_path=str(image_path),
            predicted=predicted,
            corrected=corrected,
            user_id=user_id,
            received_at=_now_iso(),
        )
        try:
            if not image_path.exists():
                image_path.write_bytes(image_bytes)
            with open(self.records_path, "a") as fh:
                fh.write(json.dumps(record.__dict__, separators=(",", ":")) + "\n")
        except OSError as exc:
            raise StorageFailure(f"cannot persist feedback: {exc}") from exc
        return record

    def get(self, feedback_id: str) -> FeedbackRecord | None:
        if not self.records_path.exists():
            return None
        with open(self.records_path) as fh:
            for line in fh:
                raw = json.loads(line)
                if raw["feedback_id"] == feedback_id:
                    return FeedbackRecord(**raw)
        return None

    def count(self) -> int:
        if not self.records_path.exists():
            return 0
        with open(self.records_path) as fh:
            return sum(1 for _ in fh)


# ---------------------------------------------------------------------------
# Application


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    """Build the FastAPI app. The artifact loads eagerly; a missing or
    unconfigured artifact leaves the service up but unhealthy (503s)."""
    cfg = config or ServiceConfig()

    model = None
    if cfg.artifact_path is not None and Path(cfg.artifact_path).is_file():
        model = load_portable(cfg.artifact_path)
        logger.info("loaded artifact %s (backbone %s)", cfg.artifact_path,
                    model.metadata.get("backbone_id"))
    else:
        logger.warning("no model artifact at %s; classify will return 503",
                       cfg.artifact_path)

    factors = (CarbonFactorTable.default() if cfg.carbon_factors_path is None
               else CarbonFactorTable.from_json(cfg.carbon_factors_path))
    suggestions = load_suggestions(cfg.suggestions_path)
    ledger = PointsLedger(cfg.journal_path)
    feedback_store = FeedbackStore(cfg.feedback_dir)

    app = FastAPI(title="waste classification service", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.config = cfg
    app.state.model = model
    app.state.ledger = ledger
    app.state.feedback_store = feedback_store
    app.state.factors = factors

    def error(status: int, code: str, detail: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": code, "detail": detail})

    async def read_limited(upload: UploadFile) -> bytes | None:
        """Read an upload, returning None when it exceeds the size limit."""
        raw = await upload.read(cfg.max_upload_bytes + 1)
        if len(raw) > cfg.max_upload_bytes:
            return None
        return raw

    def summary_payload(user_id: str) -> dict:
        s = ledger.summary(user_id)
        return {
            "user_id": s.user_id,
            "total_points": s.total_points,
            "total_carbon_g": s.total_carbon_g,
            "event_count": s.event_count,
        }

    @app.post("/api/v1/classify")
    async def classify_endpoint(
        image: UploadFile = File(...),
        x_user_id: str | None = Header(default=None),
    ):
        if model is None:
            return error(503, "ModelNotLoaded", "no model artifact is loaded")
        raw = await read_limited(image)
        if raw is None:
            return error(413, "ImageTooLarge",
                         f"upload exceeds {cfg.max_upload_bytes} bytes")
        try:
            tensor = preprocess_bytes(raw, model.input_size, model.normalization)
        except DecodeFailure as exc:
            return error(400, "UndecodableImage", str(exc))

        probs = model.predict(tensor)
        index = int(np.argmax(probs))
        label = label_from_index(index)
        carbon_g = carbon_for(label, factors)
        event_id = uuid.uuid4().hex

        points = 0
        if x_user_id:
            points = cfg.points["classify_confirmed"]
            ledger.append_event(LedgerEvent(
                client_event_id=f"classify-{event_id}",
                user_id=x_user_id,
                type="classify_confirmed",
                label=label,
                points=points,
                carbon_g=carbon_g,
                timestamp=_now_iso(),
            ))

        return {
            "event_id": event_id,
            "label": label.name,
            "confidence": float(probs[index]),
            "probabilities": {name: float(p) for name, p in zip(CLASS_NAMES, probs)},
            "suggestion": suggestions[label.name],
            "carbon_saved_g": carbon_g,
            "points_awarded": points,
            "factor_table_version": factors.version,
        }

    @app.post("/api/v1/feedback")
    async def feedback_endpoint(
        image: UploadFile = File(...),
        predicted: str = Form(...),
        corrected: str = Form(...),
        event_id: str | None = Form(default=None),
        x_user_id: str | None = Header(default=None),
    ):
        try:
            predicted_label = label_from_name(predicted)
            corrected_label = label_from_name(corrected)
        except UnknownLabel as exc:
            return error(400, "UnknownLabel", str(exc))
        if predicted_label == corrected_label:
            return error(400, "SameLabel",
                         f"corrected label must differ from predicted ({predicted})")
        raw = await read_limited(image)
        if raw is None:
            return error(413, "ImageTooLarge",
                         f"upload exceeds {cfg.max_upload_bytes} bytes")
        try:
            record = feedback_store.add(
                raw, image.filename, predicted_label.name, corrected_label.name,
                x_user_id, event_id,
            )
        except StorageFailure as exc:
            return error(507, "StorageFull", str(exc))

        if x_user_id:
            ledger.append_event(LedgerEvent(
                client_event_id=f"feedback-{record.feedback_id}",
                user_id=x_user_id,
                type="feedback_submitted",
                label=corrected_label,
                points=cfg.points["feedback_submitted"],
                carbon_g=0.0,
                timestamp=_now_iso(),
            ))
        return {"feedback_id": record.feedback_id}

    @app.post("/api/v1/sync")
    async def sync_endpoint(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return error(400, "MalformedBatch", "body is not valid JSON")
        if not isinstance(payload, dict):
            return error(400, "MalformedBatch", "body must be a JSON object")
        user_id = payload.get("user_id")
        events = payload.get("events")
        if not isinstance(user_id, str) or not user_id:
            return error(400, "MalformedBatch", "user_id must be a non-empty string")
        if not isinstance(events, list):
            return error(400, "MalformedBatch", "events must be a list")

        parsed: list[LedgerEvent] = []
        seen_ids: set[str] = set()
        for position, raw in enumerate(events):
            if not isinstance(raw, dict):
                return error(400, "MalformedBatch", f"event {position} is not an object")
            client_event_id = raw.get("client_event_id")
            event_type = raw.get("type")
            label_name = raw.get("label")
            if not isinstance(client_event_id, str) or not client_event_id:
                return error(400, "MalformedBatch",
                             f"event {position}: client_event_id must be a non-empty string")
            if client_event_id in seen_ids:
                return error(409, "DuplicateIdsWithinBatch",
                             f"client_event_id {client_event_id!r} appears more than once")
            seen_ids.add(client_event_id)
            if event_type not in EVENT_TYPES:
                return error(400, "MalformedBatch",
                             f"event {position}: type must be one of {list(EVENT_TYPES)}")
            try:
                label = label_from_name(label_name)
            except (UnknownLabel, TypeError):
                return error(400, "MalformedBatch",
                             f"event {position}: unknown label {label_name!r}")
            timestamp = raw.get("timestamp")
            if timestamp is not None and not isinstance(timestamp, str):
                return error(400, "MalformedBatch",
                             f"event {position}: timestamp must be a string")
            carbon_g = carbon_for(label, factors) if event_type == "classify_confirmed" else 0.0
            parsed.append(LedgerEvent(
                client_event_id=client_event_id,
                user_id=user_id,
                type=event_type,
                label=label,
                points=cfg.points[event_type],
                carbon_g=carbon_g,
                timestamp=timestamp or _now_iso(),
            ))

        applied = duplicates = 0
        try:
            for event in parsed:
                if ledger.append_event(event) is AppendResult.APPLIED:
                    applied += 1
                else:
                    duplicates += 1
        except StorageFailure as exc:
            return error(507, "StorageFull", str(exc))

        totals = ledger.summary(user_id)
        return {
            "applied": applied,
            "duplicates": duplicates,
            "total_points": totals.total_points,
            "total_carbon_g": totals.total_carbon_g,
        }

    @app.get("/api/v1/leaderboard")
    def leaderboard_endpoint(limit: int = 10):
        if limit < 1:
            return error(400, "InvalidLimit", "limit must be >= 1")
        return [
            {
                "user_id": s.user_id,
                "total_points": s.total_points,
                "total_carbon_g": s.total_carbon_g,
                "event_count": s.event_count,
            }
            for s in ledger.leaderboard(limit)
        ]

    @app.get("/api/v1/users/{user_id}/summary")
    def summary_endpoint(user_id: str):
        return summary_payload(user_id)

    @app.get("/healthz")
    def health_endpoint():
        if model is None:
            return JSONResponse(status_code=503, content={
                "status": "unavailable",
                "model_loaded": False,
                "artifact_metadata": None,
            })
        return {
            "status": "ok",
            "model_loaded": True,
            "artifact_metadata": {
                **model.metadata,
                "factor_table_version": factors.version,
                "factor_table_note": factors.note,
            },
        }

    if cfg.static_dir is not None and Path(cfg.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(cfg.static_dir), html=True), name="webui")

    return app
