"""Per-feature decision trees / random forests over coded case records.

Targets are trained independently (one model per output feature).  Splits
are binary one-code membership tests enumerated in catalog order; impurity
is Gini, compared exactly (integer fractions) so equal-impurity ties always
take the first candidate and training is bit-reproducible.  Multivalued
targets treat the whole code set as a single class label.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .catalog import (
    DecisionSource,
    FeatureCatalog,
    PatientProfile,
    Prescription,
    validate_prescription,
    validate_profile,
)
from .ruledsl import RuleSet, Trace, evaluate

Label = tuple[str, ...]


class RecommenderError(ValueError):
    """Bad dataset, untrainable target or infeasible evaluation protocol."""


# ---------------------------------------------------------------------------
# Case records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseRecord:
    profile: PatientProfile
    outcome: Prescription

    def label(self, target: str) -> Optional[Label]:
        codes = self.outcome.values.get(target)
        return tuple(sorted(codes)) if codes else None


@dataclass(frozen=True)
class Dataset:
    records: tuple[CaseRecord, ...]
    catalog_version: str

    def for_target(self, target: str) -> "Dataset":
        """Records whose outcome specifies the target feature."""
        kept = tuple(r for r in self.records if r.label(target) is not None)
        return Dataset(records=kept, catalog_version=self.catalog_version)

    def __len__(self) -> int:
        return len(self.records)


def load_dataset(text: str, catalog: FeatureCatalog) -> Dataset:
    """Parse a JSON array of {profile, outcome} documents, validating both."""
    try:
        docs = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecommenderError(f"malformed dataset document: {exc}") from None
    if not isinstance(docs, list):
        raise RecommenderError("dataset document must be a JSON array")
    records = []
    for i, doc in enumerate(docs):
        profile = PatientProfile.from_json_dict(doc["profile"])
        outcome = Prescription.from_json_dict(doc["outcome"])
        problems = validate_profile(profile, catalog, mode="strict").errors \
            + validate_prescription(outcome, catalog).errors
        if problems:
            raise RecommenderError(
                f"record {i} invalid: " + "; ".join(p.message for p in problems)
            )
        records.append(CaseRecord(profile=profile, outcome=outcome))
    return Dataset(records=tuple(records), catalog_version=catalog.version)


def dump_dataset(dataset: Dataset) -> str:
    return json.dumps(
        [
            {"profile": r.profile.to_json_dict(), "outcome": r.outcome.to_json_dict()}
            for r in dataset.records
        ],
        indent=2,
    )


# ---------------------------------------------------------------------------
# Decision trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeParams:
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1

    def __post_init__(self) -> None:
        if self.min_samples_leaf < 1:
            raise RecommenderError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise RecommenderError("max_depth cannot be negative")


@dataclass(frozen=True)
class TreeNode:
    # Internal node: feature/code membership test with present/absent children.
    # Leaf: prediction + class counts over the samples routed to it.
    feature: Optional[str] = None
    code: Optional[str] = None
    present: Optional["TreeNode"] = None
    absent: Optional["TreeNode"] = None
    prediction: Optional[Label] = None
    counts: Optional[dict] = None
    n_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.prediction is not None


@dataclass(frozen=True)
class DecisionTree:
    target: str
    multivalued: bool
    root: TreeNode
    params: TreeParams

    @property
    def model_id(self) -> str:
        return f"tree:{self.target}"


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 25
    feature_subsample: float = 1.0
    bootstrap: bool = True
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise RecommenderError("n_trees must be >= 1")
        if not (0.0 < self.feature_subsample <= 1.0):
            raise RecommenderError("feature_subsample must be in (0, 1]")

    def tree_params(self) -> TreeParams:
        return TreeParams(max_depth=self.max_depth, min_samples_leaf=self.min_samples_leaf)


@dataclass(frozen=True)
class Forest:
    target: str
    multivalued: bool
    trees: tuple[DecisionTree, ...]
    seed: int
    params: ForestParams

    @property
    def model_id(self) -> str:
        return f"forest:{self.target}"


Model = Union[DecisionTree, Forest]


def gini_impurity(counts: Mapping[Label, int]) -> float:
    n = sum(counts.values())
    if n == 0:
        return 0.0
    return 1.0 - sum((c / n) ** 2 for c in counts.values())


def _count_labels(labels: Sequence[Label]) -> dict[Label, int]:
    counts: dict[Label, int] = {}
    for lbl in labels:
        counts[lbl] = counts.get(lbl, 0) + 1
    return counts


def _child_impurity_term(labels: Sequence[Label]) -> Fraction:
    # n_c * gini_c == (n_c^2 - sum counts^2) / n_c; exact for tie-breaking
    counts = _count_labels(labels)
    n = len(labels)
    return Fraction(n * n - sum(c * c for c in counts.values()), n)


def _majority(labels: Sequence[Label]) -> Label:
    counts = _count_labels(labels)
    best = max(counts.values())
    return min(lbl for lbl, c in counts.items() if c == best)


def _leaf(labels: Sequence[Label]) -> TreeNode:
    return TreeNode(prediction=_majority(labels), counts=_count_labels(labels),
                    n_samples=len(labels))


def _candidate_tests(catalog: FeatureCatalog,
                     feature_indices: Sequence[int] | None = None) -> list[tuple[str, str]]:
    feats = catalog.input_features()
    if feature_indices is not None:
        feats = tuple(feats[i] for i in sorted(feature_indices))
    return [(f.id, code) for f in feats for code in f.code_strings]


def _grow(records: Sequence[CaseRecord], labels: Sequence[Label],
          catalog: FeatureCatalog, params: TreeParams, depth: int,
          rng: np.random.RandomState | None, n_subset: int | None) -> TreeNode:
    if len(set(labels)) == 1:
        return _leaf(labels)
    if params.max_depth is not None and depth >= params.max_depth:
        return _leaf(labels)
    if len(records) < 2 * params.min_samples_leaf:
        return _leaf(labels)

    n_features = len(catalog.input_features())
    indices = None
    if rng is not None and n_subset is not None and n_subset < n_features:
        indices = rng.choice(n_features, size=n_subset, replace=False)

    best = None  # (impurity, test, present_idx, absent_idx)
    for test in _candidate_tests(catalog, indices):
        feat_id, code = test
        present = [i for i, r in enumerate(records) if code in r.profile.codes(feat_id)]
        if len(present) < params.min_samples_leaf \
                or len(records) - len(present) < params.min_samples_leaf:
            continue
        absent = [i for i in range(len(records)) if code not in records[i].profile.codes(feat_id)]
        impurity = _child_impurity_term([labels[i] for i in present]) \
            + _child_impurity_term([labels[i] for i in absent])
        if best is None or impurity < best[0]:
            best = (impurity, test, present, absent)

    if best is None:
        return _leaf(labels)
    _, (feat_id, code), present_idx, absent_idx = best
    present_node = _grow([records[i] for i in present_idx], [labels[i] for i in present_idx],
                         catalog, params, depth + 1, rng, n_subset)
    absent_node = _grow([records[i] for i in absent_idx], [labels[i] for i in absent_idx],
                        catalog, params, depth + 1, rng, n_subset)
    return TreeNode(feature=feat_id, code=code, present=present_node, absent=absent_node,
                    n_samples=len(records))


def train_tree(dataset: Dataset, target: str, catalog: FeatureCatalog,
               params: TreeParams | None = None,
               _rng: np.random.RandomState | None = None,
               _n_subset: int | None = None) -> DecisionTree:
    """Greedy CART induction over one-code membership tests.

    Deterministic: candidates run in (catalog feature order, code numeric
    order) and equal-impurity ties keep the earliest candidate.
    """
    params = params or TreeParams()
    if not dataset.records:
        raise RecommenderError("empty dataset")
    if not catalog.has_feature(target):
        raise RecommenderError(f"unknown target feature {target!r}")
    labels = []
    for i, record in enumerate(dataset.records):
        lbl = record.label(target)
        if lbl is None:
            raise RecommenderError(f"record {i} does not specify target {target}")
        labels.append(lbl)
    root = _grow(list(dataset.records), labels, catalog, params, 0, _rng, _n_subset)
    return DecisionTree(target=target, multivalued=catalog.feature(target).multivalued,
                        root=root, params=params)


def train_forest(dataset: Dataset, target: str, catalog: FeatureCatalog,
                 params: ForestParams | None = None, seed: int = 0) -> Forest:
    """Bagged trees with per-node feature subsampling; same seed, same forest."""
    params = params or ForestParams()
    if not dataset.records:
        raise RecommenderError("empty dataset")
    n_features = len(catalog.input_features())
    n_subset = math.ceil(params.feature_subsample * n_features)
    master = np.random.RandomState(np.uint32(seed & 0xFFFFFFFF))
    tree_seeds = master.randint(0, 2**31 - 1, size=params.n_trees)
    trees = []
    for tree_seed in tree_seeds:
        rng = np.random.RandomState(tree_seed)
        if params.bootstrap:
            idx = rng.randint(0, len(dataset.records), size=len(dataset.records))
            resample = Dataset(records=tuple(dataset.records[i] for i in idx),
                               catalog_version=dataset.catalog_version)
        else:
            resample = dataset
        trees.append(train_tree(resample, target, catalog, params.tree_params(),
                                _rng=rng, _n_subset=n_subset))
    return Forest(target=target, multivalued=catalog.feature(target).multivalued,
                  trees=tuple(trees), seed=seed, params=params)


def _route(node: TreeNode, profile: PatientProfile) -> TreeNode:
    while not node.is_leaf:
        node = node.present if node.code in profile.codes(node.feature) else node.absent
    return node


def _predict_label(model: Model, profile: PatientProfile) -> tuple[Label, float]:
    if isinstance(model, DecisionTree):
        leaf = _route(model.root, profile)
        confidence = leaf.counts[leaf.prediction] / leaf.n_samples
        return leaf.prediction, confidence
    votes: dict[Label, int] = {}
    for tree in model.trees:
        lbl, _ = _predict_label(tree, profile)
        votes[lbl] = votes.get(lbl, 0) + 1
    best = max(votes.values())
    winner = min(lbl for lbl, c in votes.items() if c == best)
    return winner, best / len(model.trees)


def predict(model: Model, profile: PatientProfile) -> tuple[Union[str, Label], float]:
    """Predicted code (code tuple for multivalued targets) and confidence.

    Tree confidence is leaf purity; forest confidence is the vote fraction.
    Membership tests on features absent from the profile route false, so
    prediction is total even for partial profiles.
    """
    label, confidence = _predict_label(model, profile)
    if model.multivalued:
        return label, confidence
    return label[0], confidence


# ---------------------------------------------------------------------------
# Model serialization (diffable JSON)
# ---------------------------------------------------------------------------

def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {
            "prediction": list(node.prediction),
            "counts": {"+".join(lbl): c for lbl, c in sorted(node.counts.items())},
            "n_samples": node.n_samples,
        }
    return {
        "feature": node.feature,
        "code": node.code,
        "n_samples": node.n_samples,
        "present": _node_to_dict(node.present),
        "absent": _node_to_dict(node.absent),
    }


def _node_from_dict(doc: dict) -> TreeNode:
    if "prediction" in doc:
        return TreeNode(
            prediction=tuple(doc["prediction"]),
            counts={tuple(k.split("+")): v for k, v in doc["counts"].items()},
            n_samples=doc["n_samples"],
        )
    return TreeNode(
        feature=doc["feature"], code=doc["code"], n_samples=doc["n_samples"],
        present=_node_from_dict(doc["present"]), absent=_node_from_dict(doc["absent"]),
    )


def model_to_json_dict(model: Model) -> dict:
    if isinstance(model, DecisionTree):
        return {
            "type": "tree",
            "target": model.target,
            "multivalued": model.multivalued,
            "params": {"max_depth": model.params.max_depth,
                       "min_samples_leaf": model.params.min_samples_leaf},
            "root": _node_to_dict(model.root),
        }
    return {
        "type": "forest",
        "target": model.target,
        "multivalued": model.multivalued,
        "seed": model.seed,
        "params": {
            "n_trees": model.params.n_trees,
            "feature_subsample": model.params.feature_subsample,
            "bootstrap": model.params.bootstrap,
            "max_depth": model.params.max_depth,
            "min_samples_leaf": model.params.min_samples_leaf,
        },
        "trees": [_node_to_dict(t.root) for t in model.trees],
    }


def model_to_json(model: Model) -> str:
    return json.dumps(model_to_json_dict(model), indent=2, sort_keys=True)


def model_from_json(text: str) -> Model:
    doc = json.loads(text)
    if doc.get("type") == "tree":
        params = TreeParams(max_depth=doc["params"]["max_depth"],
                            min_samples_leaf=doc["params"]["min_samples_leaf"])
        return DecisionTree(target=doc["target"], multivalued=doc["multivalued"],
                            root=_node_from_dict(doc["root"]), params=params)
    if doc.get("type") == "forest":
        params = ForestParams(**doc["params"])
        trees = tuple(
            DecisionTree(target=doc["target"], multivalued=doc["multivalued"],
                         root=_node_from_dict(t), params=params.tree_params())
            for t in doc["trees"]
        )
        return Forest(target=doc["target"], multivalued=doc["multivalued"], trees=trees,
                      seed=doc["seed"], params=params)
    raise RecommenderError(f"unknown model type {doc.get('type')!r}")


def train_models(dataset: Dataset, catalog: FeatureCatalog,
                 targets: Sequence[str] | None = None, kind: str = "tree",
                 tree_params: TreeParams | None = None,
                 forest_params: ForestParams | None = None,
                 seed: int = 0) -> dict[str, Model]:
    """Train one model per output feature over the records that specify it."""
    if kind not in ("tree", "forest"):
        raise RecommenderError(f"unknown model kind {kind!r}")
    targets = list(targets) if targets else list(catalog.output_ids())
    models: dict[str, Model] = {}
    for target in targets:
        subset = dataset.for_target(target)
        if not subset.records:
            raise RecommenderError(f"no records specify target {target}")
        if kind == "tree":
            models[target] = train_tree(subset, target, catalog, tree_params)
        else:
            models[target] = train_forest(subset, target, catalog, forest_params, seed=seed)
    return models


# ---------------------------------------------------------------------------
# Rule-first recommendation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Policy:
    threshold: float = 0.5
    defaults: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 <= self.threshold <= 1.0):
            raise RecommenderError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class Recommendation:
    prescription: Prescription
    trace: Trace
    abstained: frozenset[str]

    def origin(self, feature_id: str) -> Optional[str]:
        src = self.prescription.sources.get(feature_id)
        return src.origin.value if src else None

    def to_json_dict(self) -> dict:
        return {
            "prescription": self.prescription.to_json_dict(),
            "abstained": sorted(self.abstained),
            "trace": self.trace.to_json_dict(),
        }


def recommend(profile: PatientProfile, ruleset: RuleSet,
              models: Mapping[str, Model], catalog: FeatureCatalog,
              policy: Policy | None = None) -> Recommendation:
    """Rules first; models fill unresolved features above the confidence
    threshold; policy defaults next; anything left abstains.  Rule-resolved
    features are never overridden by models."""
    policy = policy or Policy()
    partial, trace = evaluate(ruleset, profile, catalog)
    values = dict(partial.values)
    sources = dict(partial.sources)
    abstained = set()
    for feature in catalog.output_ids():
        if feature in values:
            continue
        model = models.get(feature)
        if model is not None:
            label, confidence = _predict_label(model, profile)
            if confidence >= policy.threshold:
                values[feature] = frozenset(label)
                sources[feature] = DecisionSource.model(model.model_id, confidence)
                continue
        default = policy.defaults.get(feature)
        if default is not None:
            values[feature] = frozenset((default,))
            sources[feature] = DecisionSource.default()
        else:
            abstained.add(feature)
    rx = Prescription(values=values, sources=sources, version=1)
    return Recommendation(prescription=rx, trace=trace, abstained=frozenset(abstained))


# ---------------------------------------------------------------------------
# Evaluation protocols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    protocol: str
    per_feature: Mapping[str, Optional[float]]
    macro_average: float
    n_records: int

    def to_json_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "per_feature": dict(sorted(self.per_feature.items())),
            "macro_average": self.macro_average,
            "n_records": self.n_records,
        }


def evaluate_models(dataset: Dataset, catalog: FeatureCatalog,
                    protocol: str = "resubstitution", kind: str = "tree",
                    targets: Sequence[str] | None = None,
                    tree_params: TreeParams | None = None,
                    forest_params: ForestParams | None = None,
                    seed: int = 0) -> EvalReport:
    """Per-feature accuracy under resubstitution or leave-one-out."""
    if protocol not in ("resubstitution", "leave-one-out"):
        raise RecommenderError(f"unknown protocol {protocol!r}")
    if not dataset.records:
        raise RecommenderError("empty dataset")
    if protocol == "leave-one-out" and len(dataset.records) < 2:
        raise RecommenderError("leave-one-out needs at least 2 records")
    targets = list(targets) if targets else list(catalog.output_ids())

    def fit(subset: Dataset, target: str) -> Model:
        if kind == "forest":
            return train_forest(subset, target, catalog, forest_params, seed=seed)
        return train_tree(subset, target, catalog, tree_params)

    per_feature: dict[str, Optional[float]] = {}
    for target in targets:
        subset = dataset.for_target(target)
        n = len(subset.records)
        if n == 0 or (protocol == "leave-one-out" and n < 2):
            per_feature[target] = None
            continue
        hits = 0
        if protocol == "resubstitution":
            model = fit(subset, target)
            for record in subset.records:
                label, _ = _predict_label(model, record.profile)
                hits += label == record.label(target)
        else:
            for i, record in enumerate(subset.records):
                rest = Dataset(
                    records=subset.records[:i] + subset.records[i + 1:],
                    catalog_version=subset.catalog_version,
                )
                model = fit(rest, target)
                label, _ = _predict_label(model, record.profile)
                hits += label == record.label(target)
        per_feature[target] = hits / n

    scored = [v for v in per_feature.values() if v is not None]
    macro = sum(scored) / len(scored) if scored else 0.0
    return EvalReport(protocol=protocol, per_feature=per_feature,
                      macro_average=macro, n_records=len(dataset.records))
