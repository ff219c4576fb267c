"""Carbon-saved accounting and the append-only points ledger.

The ledger is an idempotent fold over client-identified events: appending
the same (user_id, client_event_id) twice is a no-op, so offline clients
can replay sync batches freely. Persistence is a newline-delimited JSON
journal; summaries are derived state, rebuilt by replay on open.

The shipped carbon factors are placeholders, not ground truth; the table
is versioned so every API response stays auditable.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path

from .labels import CLASS_NAMES, ClassLabel, label_from_name

EVENT_TYPES = ("classify_confirmed", "feedback_submitted")


class StorageFailure(RuntimeError):
    """The journal could not be read or written."""


class InvalidFactorTable(ValueError):
    pass


class InvalidEvent(ValueError):
    pass


@dataclass(frozen=True)
class CarbonFactorTable:
    """Grams CO2-equivalent credited per correctly managed item, by class."""

    version: str
    factors_g: dict[str, float]
    note: str = ""

    def __post_init__(self):
        missing = [n for n in CLASS_NAMES if n not in self.factors_g]
        if missing:
            raise InvalidFactorTable(f"factor table is missing classes: {missing}")
        negative = {k: v for k, v in self.factors_g.items() if v < 0}
        if negative:
            raise InvalidFactorTable(f"factors must be >= 0, got {negative}")

    @classmethod
    def from_json(cls, path: str | Path) -> "CarbonFactorTable":
        raw = json.loads(Path(path).read_text())
        return cls(
            version=str(raw["version"]),
            factors_g={k: float(v) for k, v in raw["factors_g"].items()},
            note=str(raw.get("note", "")),
        )

    @classmethod
    def default(cls) -> "CarbonFactorTable":
        raw = json.loads(
            resources.files("wastesort").joinpath("data/carbon_factors.json").read_text()
        )
        return cls(
            version=str(raw["version"]),
            factors_g={k: float(v) for k, v in raw["factors_g"].items()},
            note=str(raw.get("note", "")),
        )


def carbon_for(label: ClassLabel, table: CarbonFactorTable) -> float:
    return table.factors_g[label.name]


@dataclass(frozen=True)
class LedgerEvent:
    client_event_id: str
    user_id: str
    type: str
    label: ClassLabel
    points: int
    carbon_g: float
    timestamp: str

    def __post_init__(self):
        if not self.client_event_id or not self.user_id:
            raise InvalidEvent("client_event_id and user_id must be non-empty")
        if self.type not in EVENT_TYPES:
            raise InvalidEvent(f"event type {self.type!r} not in {EVENT_TYPES}")
        if self.points < 0 or self.carbon_g < 0:
            raise InvalidEvent("points and carbon_g must be >= 0")

    def to_json(self) -> str:
        record = asdict(self)
        record["label"] = self.label.name
        return json.dumps(record, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "LedgerEvent":
        raw = json.loads(line)
        raw["label"] = label_from_name(raw["label"])
        return cls(**raw)


@dataclass
class UserSummary:
    user_id: str
    total_points: int
    total_carbon_g: float
    event_count: int


class AppendResult(enum.Enum):
    APPLIED = "applied"
    DUPLICATE = "duplicate"


class PointsLedger:
    """Append-only, idempotent event ledger with per-user running totals.

    Appends are serialized by a lock (single-writer); reads take the same
    lock so they observe a consistent prefix of the journal.
    """

    def __init__(self, journal_path: str | Path | None = None):
        self._lock = threading.Lock()
        self._seen: set[tuple[str, str]] = set()
        self._totals: dict[str, UserSummary] = {}
        self._journal_path = Path(journal_path) if journal_path is not None else None
        if self._journal_path is not None and self._journal_path.exists():
            self._replay_journal()

    def _replay_journal(self) -> None:
        try:
            lines = self._journal_path.read_text().splitlines()
        except OSError as exc:
            raise StorageFailure(f"cannot read journal {self._journal_path}: {exc}") from exc
        for line in lines:
            if line.strip():
                self._apply(LedgerEvent.from_json(line), persist=False)

    def _apply(self, event: LedgerEvent, persist: bool) -> AppendResult:
        key = (event.user_id, event.client_event_id)
        if key in self._seen:
            return AppendResult.DUPLICATE
        if persist and self._journal_path is not None:
            try:
                self._journal_path.parent.mkdir(parents=True, exist_ok=True)
                with self._journal_path.open("a") as fh:
                    fh.write(event.to_json() + "\n")
            except OSError as exc:
                raise StorageFailure(f"cannot append to journal: {exc}") from exc
        self._seen.add(key)
        summary = self._totals.get(event.user_id)
        if summary is None:
            summary = UserSummary(event.user_id, 0, 0.0, 0)
            self._totals[event.user_id] = summary
        summary.total_points += event.points
        summary.total_carbon_g += event.carbon_g
        summary.event_count += 1
        return AppendResult.APPLIED

    def append_event(self, event: LedgerEvent) -> AppendResult:
        """Apply an event once; replays return DUPLICATE and change nothing."""
        with self._lock:
            return self._apply(event, persist=True)

    def summary(self, user_id: str) -> UserSummary:
        """Totals for one user; zeros for users with no events."""
        with self._lock:
            summary = self._totals.get(user_id)
            if summary is None:
                return UserSummary(user_id, 0, 0.0, 0)
            return replace(summary)

    def leaderboard(self, limit: int = 10) -> list[UserSummary]:
        """Top users by points, ties broken by user_id ascending."""
        if limit < 1:
            raise ValueError("limit must be >= 1")
        with self._lock:
            ranked = sorted(
                (replace(s) for s in self._totals.values()),
                key=lambda s: (-s.total_points, s.user_id),
            )
        return ranked[:limit]

    def event_count(self) -> int:
        with self._lock:
            return len(self._seen)
