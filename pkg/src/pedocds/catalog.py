"""Coded feature space: catalog, patient profiles and prescriptions.

The catalog is data, not code: the default file shipped under
``pedocds/data/catalog.json`` defines the 9 input and 30 output features
(with their coded values) that the rule engine, the recommender and the
console all consume.  Everything here is an immutable value object; safe
for unrestricted concurrent reads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Optional

from .validation import ValidationReport

# Input features required of every complete profile, and the output
# features a complete prescription covers.  The default catalog must carry
# exactly these (load_catalog enforces the roster; ad-hoc catalogs built in
# code may be smaller, e.g. for experiments).
REQUIRED_INPUT_IDS = ("PPIA", "FSS", "MFP", "CM", "PBW", "PMS", "FCPA", "FO", "FOIS")
REQUIRED_OUTPUT_IDS = (
    "FWT", "FWS", "FWUP", "FWL", "FFS", "FWUFL", "FWUSL", "FWTFL", "FWHC",
    "FWHH", "FWHM", "FWOS", "FWRP", "FWRAP", "FWRAA", "FWRANG", "INST",
    "CMINS", "INSBLM", "INSMLM", "INSTLM", "INSHC", "INSHW", "INSMLAH",
    "INSMA", "INSMAP", "INSMATH", "INSMAMAT", "INSMOD", "POEM",
)

_CODE_RE = re.compile(r"^([A-Z]+)([0-9]+)$")


class CatalogError(ValueError):
    """Structurally invalid catalog, profile or prescription document."""


class UnknownCodeError(KeyError):
    """A code string does not resolve through the catalog."""


class FeatureKind(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


class FeatureGroup(str, Enum):
    PERSON = "person"
    DIAGNOSIS = "diagnosis"
    FUND = "fund"
    FOOTWEAR = "footwear"
    INSOLE = "insole"
    EVALUATION = "evaluation"


@dataclass(frozen=True)
class CodeDef:
    code: str
    description: str
    notes: Optional[str] = None


@dataclass(frozen=True)
class FeatureDef:
    id: str
    name: str
    kind: FeatureKind
    group: FeatureGroup
    codes: tuple[CodeDef, ...]
    multivalued: bool = False

    def __post_init__(self) -> None:
        if not self.id or not self.id.isalpha() or not self.id.isupper():
            raise CatalogError(f"feature id must be uppercase alphabetic: {self.id!r}")
        if not self.codes:
            raise CatalogError(f"feature {self.id} has no codes")
        for i, c in enumerate(self.codes, start=1):
            m = _CODE_RE.match(c.code)
            if not m or m.group(1) != self.id:
                raise CatalogError(f"code {c.code!r} does not belong to feature {self.id}")
            if int(m.group(2)) != i:
                raise CatalogError(f"non-contiguous codes in feature {self.id}: {c.code}")

    @property
    def code_strings(self) -> tuple[str, ...]:
        return tuple(c.code for c in self.codes)

    def has_code(self, code: str) -> bool:
        return code in self.code_strings


@dataclass(frozen=True)
class FeatureCatalog:
    version: str
    features: tuple[FeatureDef, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)
    _by_code: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, FeatureDef] = {}
        by_code: dict[str, tuple[FeatureDef, CodeDef]] = {}
        for f in self.features:
            if f.id in by_id:
                raise CatalogError(f"duplicate feature id {f.id}")
            by_id[f.id] = f
            for c in f.codes:
                if c.code in by_code:
                    raise CatalogError(f"duplicate code {c.code}")
                by_code[c.code] = (f, c)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_by_code", by_code)

    def feature(self, feature_id: str) -> FeatureDef:
        try:
            return self._by_id[feature_id]
        except KeyError:
            raise UnknownCodeError(f"unknown feature {feature_id!r}") from None

    def has_feature(self, feature_id: str) -> bool:
        return feature_id in self._by_id

    def resolve_code(self, code: str) -> tuple[FeatureDef, CodeDef]:
        """Resolve a code via its alphabetic prefix (e.g. FOIS1 -> FOIS)."""
        try:
            return self._by_code[code]
        except KeyError:
            raise UnknownCodeError(f"unknown code {code!r}") from None

    def input_features(self) -> tuple[FeatureDef, ...]:
        return tuple(f for f in self.features if f.kind is FeatureKind.INPUT)

    def output_features(self) -> tuple[FeatureDef, ...]:
        return tuple(f for f in self.features if f.kind is FeatureKind.OUTPUT)

    def input_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.input_features())

    def output_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.output_features())

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "features": [
                {
                    "id": f.id,
                    "name": f.name,
                    "kind": f.kind.value,
                    "group": f.group.value,
                    "multivalued": f.multivalued,
                    "codes": [
                        {"code": c.code, "description": c.description}
                        | ({"notes": c.notes} if c.notes else {})
                        for c in f.codes
                    ],
                }
                for f in self.features
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False)


def _catalog_from_dict(doc: dict) -> FeatureCatalog:
    try:
        version = doc["version"]
        raw_features = doc["features"]
    except (TypeError, KeyError) as exc:
        raise CatalogError(f"malformed catalog document: missing {exc}") from None
    features = []
    for rf in raw_features:
        try:
            features.append(
                FeatureDef(
                    id=rf["id"],
                    name=rf["name"],
                    kind=FeatureKind(rf["kind"]),
                    group=FeatureGroup(rf["group"]),
                    multivalued=bool(rf.get("multivalued", False)),
                    codes=tuple(
                        CodeDef(c["code"], c["description"], c.get("notes")) for c in rf["codes"]
                    ),
                )
            )
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, CatalogError):
                raise
            raise CatalogError(f"malformed feature entry: {exc}") from None
    return FeatureCatalog(version=str(version), features=tuple(features))


def load_catalog(document: str) -> FeatureCatalog:
    """Parse and validate a catalog document (JSON text).

    Beyond per-feature structure this enforces the full clinical roster:
    all 9 input and 30 output features must be present.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"malformed catalog document: {exc}") from None
    catalog = _catalog_from_dict(doc)
    present = {f.id for f in catalog.features}
    for fid in REQUIRED_INPUT_IDS + REQUIRED_OUTPUT_IDS:
        if fid not in present:
            raise CatalogError(f"missing required feature {fid}")
    return catalog


@lru_cache(maxsize=1)
def default_catalog() -> FeatureCatalog:
    """The catalog shipped with the package."""
    text = resources.files("pedocds.data").joinpath("catalog.json").read_text("utf-8")
    return load_catalog(text)


# ---------------------------------------------------------------------------
# Profiles and prescriptions
# ---------------------------------------------------------------------------

Laterality = ("left", "right", "bilateral")


def _freeze_values(values: Mapping[str, Iterable[str] | str]) -> dict[str, frozenset[str]]:
    out: dict[str, frozenset[str]] = {}
    for fid, codes in values.items():
        if isinstance(codes, str):
            out[fid] = frozenset((codes,))
        else:
            out[fid] = frozenset(codes)
    return out


@dataclass(frozen=True)
class PatientProfile:
    """One patient's coded values for the input features."""

    patient_id: str
    values: Mapping[str, frozenset[str]]
    laterality: Mapping[str, str] = field(default_factory=dict)
    free_notes: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze_values(self.values))
        for code, side in self.laterality.items():
            if side not in Laterality:
                raise CatalogError(f"invalid laterality {side!r} for {code}")

    def codes(self, feature_id: str) -> frozenset[str]:
        return self.values.get(feature_id, frozenset())

    def with_overrides(self, overrides: Mapping[str, Iterable[str] | str]) -> "PatientProfile":
        merged = dict(self.values)
        merged.update(_freeze_values(overrides))
        return PatientProfile(self.patient_id, merged, dict(self.laterality), self.free_notes)

    def to_json_dict(self) -> dict:
        d: dict = {
            "patient_id": self.patient_id,
            "values": {fid: sorted(codes) for fid, codes in sorted(self.values.items())},
        }
        if self.laterality:
            d["laterality"] = dict(sorted(self.laterality.items()))
        if self.free_notes:
            d["free_notes"] = self.free_notes
        return d

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "PatientProfile":
        try:
            return cls(
                patient_id=str(doc.get("patient_id", "")),
                values=_freeze_values(doc["values"]),
                laterality=dict(doc.get("laterality", {})),
                free_notes=str(doc.get("free_notes", "")),
            )
        except (TypeError, KeyError) as exc:
            raise CatalogError(f"malformed profile document: {exc}") from None


class SourceOrigin(str, Enum):
    RULE = "RULE"
    MODEL = "MODEL"
    DEFAULT = "DEFAULT"
    CLINICIAN = "CLINICIAN"


@dataclass(frozen=True)
class DecisionSource:
    """Where a prescribed value came from (rule, model, default or clinician)."""

    origin: SourceOrigin
    rule_name: Optional[str] = None
    model_id: Optional[str] = None
    confidence: Optional[float] = None
    timestamp: Optional[str] = None

    def __post_init__(self) -> None:
        if self.origin is SourceOrigin.MODEL:
            if self.confidence is None or not (0.0 <= self.confidence <= 1.0):
                raise CatalogError("MODEL source requires confidence in [0, 1]")
        elif self.confidence is not None:
            raise CatalogError("confidence is only valid for MODEL sources")
        if self.origin is SourceOrigin.RULE and not self.rule_name:
            raise CatalogError("RULE source requires a rule name")

    @classmethod
    def rule(cls, rule_name: str) -> "DecisionSource":
        return cls(SourceOrigin.RULE, rule_name=rule_name)

    @classmethod
    def model(cls, model_id: str, confidence: float) -> "DecisionSource":
        return cls(SourceOrigin.MODEL, model_id=model_id, confidence=confidence)

    @classmethod
    def default(cls) -> "DecisionSource":
        return cls(SourceOrigin.DEFAULT)

    @classmethod
    def clinician(cls) -> "DecisionSource":
        return cls(SourceOrigin.CLINICIAN)

    def stamped(self) -> "DecisionSource":
        return DecisionSource(
            self.origin, self.rule_name, self.model_id, self.confidence,
            datetime.now(timezone.utc).isoformat(),
        )

    def to_json_dict(self) -> dict:
        d: dict = {"origin": self.origin.value}
        if self.rule_name is not None:
            d["rule"] = self.rule_name
        if self.model_id is not None:
            d["model"] = self.model_id
        if self.confidence is not None:
            d["confidence"] = self.confidence
        if self.timestamp is not None:
            d["timestamp"] = self.timestamp
        return d

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "DecisionSource":
        return cls(
            origin=SourceOrigin(doc["origin"]),
            rule_name=doc.get("rule"),
            model_id=doc.get("model"),
            confidence=doc.get("confidence"),
            timestamp=doc.get("timestamp"),
        )


@dataclass(frozen=True)
class Prescription:
    """Coded values for output features, each annotated with its source."""

    values: Mapping[str, frozenset[str]]
    sources: Mapping[str, DecisionSource]
    version: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze_values(self.values))
        if self.version < 1:
            raise CatalogError("prescription version must be >= 1")
        if set(self.sources) != set(self.values):
            raise CatalogError("sources must cover exactly the prescribed features")

    def codes(self, feature_id: str) -> frozenset[str]:
        return self.values.get(feature_id, frozenset())

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "values": {fid: sorted(codes) for fid, codes in sorted(self.values.items())},
            "sources": {fid: self.sources[fid].to_json_dict() for fid in sorted(self.sources)},
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "Prescription":
        try:
            values = _freeze_values(doc["values"])
        except (TypeError, KeyError) as exc:
            raise CatalogError(f"malformed prescription document: {exc}") from None
        raw_sources = doc.get("sources")
        if raw_sources:
            sources = {fid: DecisionSource.from_json_dict(s) for fid, s in raw_sources.items()}
        else:
            # Outcome documents (training data) may omit sources; they are by
            # definition clinician-recorded.
            sources = {fid: DecisionSource.clinician() for fid in values}
        return cls(values=values, sources=sources, version=int(doc.get("version", 1)))


# ---------------------------------------------------------------------------
# Validation operations
# ---------------------------------------------------------------------------

def _check_codes(report: ValidationReport, catalog: FeatureCatalog, fid: str,
                 codes: frozenset[str], expected_kind: FeatureKind) -> None:
    if not catalog.has_feature(fid):
        report.error("unknown-feature", f"unknown feature {fid}", feature=fid)
        return
    feat = catalog.feature(fid)
    if feat.kind is not expected_kind:
        report.error("wrong-kind", f"{fid} is an {feat.kind.value} feature", feature=fid)
        return
    if not codes:
        report.error("empty-value", f"{fid} has no codes", feature=fid)
    for code in sorted(codes):
        if not feat.has_code(code):
            report.error("unknown-code", f"unknown code {code} for feature {fid}", feature=fid)
    if not feat.multivalued and len(codes) > 1:
        report.error("single-valued", f"{fid} is single-valued", feature=fid)


def validate_profile(profile: PatientProfile, catalog: FeatureCatalog,
                     mode: str = "strict") -> ValidationReport:
    """Check a profile against the catalog.

    ``strict`` additionally requires all input features to be present;
    ``partial`` accepts what-if drafts with missing features.
    """
    if mode not in ("strict", "partial"):
        raise ValueError(f"unknown validation mode {mode!r}")
    report = ValidationReport()
    for fid, codes in sorted(profile.values.items()):
        _check_codes(report, catalog, fid, codes, FeatureKind.INPUT)
    if mode == "strict":
        for feat in catalog.input_features():
            if feat.id not in profile.values:
                report.error("missing-feature", f"missing feature {feat.id}", feature=feat.id)
    for code in profile.laterality:
        if code not in profile.codes("MFP"):
            report.warning("laterality-orphan",
                           f"laterality given for {code} which is not a recorded pathology",
                           feature="MFP")
    return report


def validate_prescription(rx: Prescription, catalog: FeatureCatalog) -> ValidationReport:
    report = ValidationReport()
    for fid, codes in sorted(rx.values.items()):
        _check_codes(report, catalog, fid, codes, FeatureKind.OUTPUT)
    return report
