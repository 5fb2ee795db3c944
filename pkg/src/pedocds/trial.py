"""N-of-1 fitting workflow: T0-T4 visits, capped modification rounds, closure.

A trial is an append-only event log; state is a fold over events, so any
persisted log replays to the same state.  Closed is absorbing: the only
thing you can do with a closed trial is read it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Iterable, Optional

MAX_MODIFICATION_ROUNDS = 3
ADHERENCE_GOAL_RATIO = 0.8  # strict: worn must exceed 80% of ambulatory time
VISIT_LABELS = ("T0", "T1", "T2", "T3", "T4")

CLOSE_REASONS = ("goal_met", "rounds_exhausted", "withdrawn")


class TrialError(ValueError):
    """Invalid trial data (visit record, adherence figures, event payload)."""


class TrialStateError(TrialError):
    """Operation not permitted in the trial's current state."""


@dataclass(frozen=True)
class AdherenceReport:
    worn_hours: float
    ambulatory_hours: float

    def __post_init__(self) -> None:
        if self.ambulatory_hours <= 0:
            raise TrialError("ambulatory hours must be positive")
        if self.worn_hours < 0:
            raise TrialError("worn hours cannot be negative")
        if self.worn_hours > self.ambulatory_hours:
            raise TrialError("worn hours cannot exceed ambulatory hours")

    @property
    def ratio(self) -> float:
        return self.worn_hours / self.ambulatory_hours

    @property
    def goal_met(self) -> bool:
        return self.ratio > ADHERENCE_GOAL_RATIO

    def to_json_dict(self) -> dict:
        return {
            "worn_hours": self.worn_hours,
            "ambulatory_hours": self.ambulatory_hours,
            "ratio": self.ratio,
            "goal_met": self.goal_met,
        }


def adherence(worn_hours: float, ambulatory_hours: float) -> AdherenceReport:
    return AdherenceReport(worn_hours=worn_hours, ambulatory_hours=ambulatory_hours)


@dataclass(frozen=True)
class VisitRecord:
    label: str
    date: str  # ISO date
    satisfaction: int  # ordinal 1-5
    adherence: Optional[AdherenceReport] = None
    notes: str = ""

    def __post_init__(self) -> None:
        if self.label not in VISIT_LABELS:
            raise TrialError(f"unknown visit label {self.label!r}")
        if not (1 <= self.satisfaction <= 5):
            raise TrialError(f"satisfaction {self.satisfaction} outside the 1-5 ordinal scale")
        if self.label == "T0" and self.adherence is not None:
            raise TrialError("adherence is not captured at T0")

    def to_json_dict(self) -> dict:
        d: dict = {"label": self.label, "date": self.date, "satisfaction": self.satisfaction}
        if self.adherence is not None:
            d["adherence"] = self.adherence.to_json_dict()
        if self.notes:
            d["notes"] = self.notes
        return d

    @classmethod
    def from_json_dict(cls, doc: dict) -> "VisitRecord":
        adh = doc.get("adherence")
        return cls(
            label=doc["label"],
            date=doc["date"],
            satisfaction=int(doc["satisfaction"]),
            adherence=AdherenceReport(adh["worn_hours"], adh["ambulatory_hours"]) if adh else None,
            notes=doc.get("notes", ""),
        )


@dataclass(frozen=True)
class TrialEvent:
    event: str  # started | fitted | modified | closed
    payload: dict
    timestamp: str

    def to_json_dict(self) -> dict:
        return {"event": self.event, "payload": self.payload, "timestamp": self.timestamp}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class TrialState:
    """Snapshot derived by folding the event log."""

    phase: str = "baseline"  # baseline | fitted | mod_round | closed
    round: int = 0
    closed_reason: Optional[str] = None
    prescription_versions: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)
    visits: list = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return self.phase == "closed"

    def describe(self) -> str:
        if self.phase == "mod_round":
            return f"ModRound({self.round})"
        if self.phase == "closed":
            return f"Closed({self.closed_reason})"
        return {"baseline": "Baseline", "fitted": "Fitted"}[self.phase]

    def to_json_dict(self) -> dict:
        return {
            "phase": self.phase,
            "round": self.round,
            "closed_reason": self.closed_reason,
            "prescription_versions": [v for v in self.prescription_versions],
            "evaluations": self.evaluations,
            "visits": [v.to_json_dict() for v in self.visits],
        }


def _check_visit_order(state: TrialState, visit: VisitRecord) -> None:
    used = [v.label for v in state.visits]
    if visit.label in used:
        raise TrialError(f"visit {visit.label} already recorded")
    if used and VISIT_LABELS.index(visit.label) <= VISIT_LABELS.index(used[-1]):
        raise TrialError(f"visit {visit.label} out of order after {used[-1]}")


def _fold(events: Iterable[TrialEvent]) -> TrialState:
    state = TrialState()
    started = False
    for ev in events:
        if ev.event == "started":
            if started:
                raise TrialStateError("trial already started")
            started = True
            state.phase = "baseline"
            state.prescription_versions.append(ev.payload.get("prescription"))
            if ev.payload.get("visit"):
                state.visits.append(VisitRecord.from_json_dict(ev.payload["visit"]))
            continue
        if not started:
            raise TrialStateError("trial has no start event")
        if state.closed:
            raise TrialStateError("trial is closed")
        if ev.event == "fitted":
            if state.phase != "baseline":
                raise TrialStateError(f"cannot fit in state {state.describe()}")
            visit = VisitRecord.from_json_dict(ev.payload["visit"])
            _check_visit_order(state, visit)
            state.visits.append(visit)
            state.phase = "fitted"
        elif ev.event == "modified":
            if state.phase == "baseline":
                raise TrialStateError("must fit before modifying")
            if state.phase == "mod_round" and state.round >= MAX_MODIFICATION_ROUNDS:
                raise TrialStateError("modification rounds exhausted")
            state.round += 1
            state.phase = "mod_round"
            state.prescription_versions.append(ev.payload.get("prescription"))
            state.evaluations.append(ev.payload.get("evaluation"))
            if ev.payload.get("visit"):
                visit = VisitRecord.from_json_dict(ev.payload["visit"])
                _check_visit_order(state, visit)
                state.visits.append(visit)
        elif ev.event == "closed":
            reason = ev.payload.get("reason")
            if reason not in CLOSE_REASONS:
                raise TrialError(f"unknown close reason {reason!r}")
            state.phase = "closed"
            state.closed_reason = reason
        else:
            raise TrialError(f"unknown event {ev.event!r}")
    return state


@dataclass
class Trial:
    """One patient's fitting workflow, event-sourced and replayable."""

    trial_id: str
    patient_id: str
    events: list[TrialEvent] = field(default_factory=list)

    @classmethod
    def start(cls, trial_id: str, patient_id: str, prescription: dict,
              baseline_recordings: list[str] | None = None,
              visit: VisitRecord | None = None) -> "Trial":
        if not prescription:
            raise TrialError("an initial prescription is required to start a trial")
        if visit is not None and visit.label != "T0":
            raise TrialError("the baseline visit must be labelled T0")
        trial = cls(trial_id=trial_id, patient_id=patient_id)
        trial._append("started", {
            "prescription": prescription,
            "baseline_recordings": baseline_recordings or [],
            "visit": visit.to_json_dict() if visit else None,
        })
        return trial

    def _append(self, event: str, payload: dict) -> TrialState:
        candidate = self.events + [TrialEvent(event, payload, _now())]
        state = _fold(candidate)  # raises without mutating on invalid transitions
        self.events = candidate
        return state

    @property
    def state(self) -> TrialState:
        return _fold(self.events)

    def record_fitting(self, visit: VisitRecord) -> TrialState:
        return self._append("fitted", {"visit": visit.to_json_dict()})

    def record_modification(self, prescription: dict, evaluation: dict,
                            visit: VisitRecord | None = None) -> TrialState:
        """Apply one modification round; closes the trial when the offloading
        goal is met, or (with an error) when the round cap is already spent."""
        state = self.state
        if state.closed:
            raise TrialStateError("trial is closed")
        if state.phase == "baseline":
            raise TrialStateError("must fit before modifying")
        if state.phase == "mod_round" and state.round >= MAX_MODIFICATION_ROUNDS:
            self._append("closed", {"reason": "rounds_exhausted"})
            raise TrialStateError("modification rounds exhausted")
        payload = {
            "prescription": prescription,
            "evaluation": evaluation,
            "visit": visit.to_json_dict() if visit else None,
        }
        new_state = self._append("modified", payload)
        if evaluation.get("all_met"):
            return self._append("closed", {"reason": "goal_met"})
        return new_state

    def withdraw(self) -> TrialState:
        if self.state.closed:
            raise TrialStateError("trial is closed")
        return self._append("closed", {"reason": "withdrawn"})

    def to_json_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "patient_id": self.patient_id,
            "events": [e.to_json_dict() for e in self.events],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Trial":
        trial = cls(trial_id=doc["trial_id"], patient_id=doc.get("patient_id", ""))
        trial.events = [
            TrialEvent(e["event"], e.get("payload", {}), e.get("timestamp", ""))
            for e in doc.get("events", [])
        ]
        _fold(trial.events)  # reject logs that do not replay
        return trial


# ---------------------------------------------------------------------------
# Maintenance window
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaintenanceStatus:
    due: bool
    overdue: bool
    elapsed_months: int
    window_months: tuple[int, int] = (3, 6)

    def to_json_dict(self) -> dict:
        return {
            "due": self.due,
            "overdue": self.overdue,
            "elapsed_months": self.elapsed_months,
            "window_months": list(self.window_months),
        }


def _whole_months_between(start: date, end: date) -> int:
    months = (end.year - start.year) * 12 + (end.month - start.month)
    if end.day < start.day:
        months -= 1
    return months


def maintenance_due(last_replacement: date, today: date,
                    window_months: tuple[int, int] = (3, 6)) -> MaintenanceStatus:
    """Top-cover replacement window: due from 3 months, overdue past 6."""
    if today < last_replacement:
        raise TrialError("replacement date is in the future")
    elapsed = _whole_months_between(last_replacement, today)
    return MaintenanceStatus(
        due=elapsed >= window_months[0],
        overdue=elapsed > window_months[1],
        elapsed_months=elapsed,
        window_months=window_months,
    )
