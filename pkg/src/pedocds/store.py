"""Embedded file-backed document store with optimistic versioning.

Documents live under ``<root>/<kind>/<id>/v<version>.json``; versions are
contiguous from 1 and never overwritten.  Writes per record id are
serialized in-process and land atomically (write-then-rename).
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .catalog import (
    FeatureCatalog,
    PatientProfile,
    Prescription,
    validate_prescription,
    validate_profile,
)
from .pressure import parse_recording
from .recommender import load_dataset, model_from_json
from .ruledsl import parse_rules
from .trial import Trial

KINDS = ("profile", "prescription", "ruleset", "dataset", "model", "recording", "trial")

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    pass


class VersionConflictError(StoreError):
    pass


class BodyValidationError(StoreError):
    pass


@dataclass(frozen=True)
class Envelope:
    id: str
    kind: str
    version: int
    body: dict | list
    created_at: str

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "version": self.version,
            "body": self.body,
            "created_at": self.created_at,
        }


class DocumentStore:
    def __init__(self, root: str | Path, catalog: FeatureCatalog):
        self.root = Path(root)
        self.catalog = catalog
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, kind: str, record_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault((kind, record_id), threading.Lock())

    def _dir(self, kind: str, record_id: str) -> Path:
        return self.root / kind / record_id

    @staticmethod
    def _check_kind(kind: str) -> None:
        if kind not in KINDS:
            raise StoreError(f"unknown kind {kind!r}")

    @staticmethod
    def _check_id(record_id: str) -> None:
        if not _ID_RE.match(record_id or ""):
            raise StoreError(f"invalid record id {record_id!r}")

    def _validate_body(self, kind: str, body) -> None:
        try:
            if kind == "profile":
                profile = PatientProfile.from_json_dict(body)
                problems = validate_profile(profile, self.catalog, mode="partial").errors
            elif kind == "prescription":
                rx = Prescription.from_json_dict(body)
                problems = validate_prescription(rx, self.catalog).errors
            elif kind == "ruleset":
                parse_rules(body["text"], self.catalog)
                problems = []
            elif kind == "dataset":
                load_dataset(json.dumps(body), self.catalog)
                problems = []
            elif kind == "model":
                model_from_json(json.dumps(body["model"]))
                problems = []
            elif kind == "recording":
                parse_recording(body["csv"], side=body.get("side", "left"),
                                condition=body.get("condition", "in_shoe"),
                                label=body.get("label", ""))
                problems = []
            else:  # trial
                Trial.from_json_dict(body)
                problems = []
        except BodyValidationError:
            raise
        except Exception as exc:
            raise BodyValidationError(f"{kind} body invalid: {exc}") from exc
        if problems:
            raise BodyValidationError(
                f"{kind} body invalid: " + "; ".join(p.message for p in problems)
            )

    def current_version(self, kind: str, record_id: str) -> int:
        d = self._dir(kind, record_id)
        if not d.is_dir():
            return 0
        versions = [int(p.stem[1:]) for p in d.glob("v*.json")]
        return max(versions, default=0)

    def put(self, kind: str, record_id: str, body, version: int | None = None) -> Envelope:
        """Write a new version.  ``version`` must be exactly current+1 (or 1
        for a new record); omit it to auto-assign."""
        self._check_kind(kind)
        self._check_id(record_id)
        self._validate_body(kind, body)
        with self._lock(kind, record_id):
            current = self.current_version(kind, record_id)
            next_version = current + 1
            if version is not None and version != next_version:
                raise VersionConflictError(
                    f"{kind}/{record_id}: version {version} conflicts with "
                    f"current {current} (expected {next_version})"
                )
            envelope = Envelope(
                id=record_id, kind=kind, version=next_version, body=body,
                created_at=datetime.now(timezone.utc).isoformat(),
            )
            d = self._dir(kind, record_id)
            d.mkdir(parents=True, exist_ok=True)
            final = d / f"v{next_version}.json"
            tmp = d / f".v{next_version}.tmp"
            tmp.write_text(json.dumps(envelope.to_json_dict(), indent=2), "utf-8")
            os.replace(tmp, final)
            return envelope

    def get(self, kind: str, record_id: str, version: int | None = None) -> Envelope:
        self._check_kind(kind)
        self._check_id(record_id)
        v = version if version is not None else self.current_version(kind, record_id)
        path = self._dir(kind, record_id) / f"v{v}.json"
        if v <= 0 or not path.is_file():
            raise NotFoundError(f"{kind}/{record_id}" + (f" v{version}" if version else ""))
        doc = json.loads(path.read_text("utf-8"))
        return Envelope(id=doc["id"], kind=doc["kind"], version=doc["version"],
                        body=doc["body"], created_at=doc["created_at"])

    def list(self, kind: str) -> list[Envelope]:
        self._check_kind(kind)
        kind_dir = self.root / kind
        if not kind_dir.is_dir():
            return []
        out = []
        for record_dir in sorted(p for p in kind_dir.iterdir() if p.is_dir()):
            try:
                out.append(self.get(kind, record_dir.name))
            except NotFoundError:
                continue
        return out
