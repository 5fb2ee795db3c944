import json
import random
from importlib import resources

import pytest

from pedocds.catalog import PatientProfile, default_catalog
from pedocds.recommender import load_dataset
from pedocds.ruledsl import (
    And,
    Equals,
    InSet,
    Not,
    Or,
    Rule,
    RuleSet,
    parse_rules,
)


def data_text(relpath: str) -> str:
    return resources.files("pedocds.data").joinpath(relpath).read_text("utf-8")


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def rules_text():
    return data_text("rules/paper.rules")


@pytest.fixture(scope="session")
def ruleset(catalog, rules_text):
    return parse_rules(rules_text, catalog)


@pytest.fixture(scope="session")
def participants(catalog):
    return [
        PatientProfile.from_json_dict(json.loads(data_text(f"profiles/participant{i}.json")))
        for i in (1, 2, 3)
    ]


@pytest.fixture(scope="session")
def dataset(catalog):
    return load_dataset(data_text("cases.json"), catalog)


def random_expr(rng: random.Random, catalog, depth: int):
    """Random condition tree over input features (for round-trip fuzzing)."""
    if depth <= 0 or rng.random() < 0.4:
        feat = rng.choice(catalog.input_features())
        codes = list(feat.code_strings)
        if rng.random() < 0.5:
            return Equals(feat.id, rng.choice(codes))
        picked = rng.sample(codes, rng.randint(1, min(3, len(codes))))
        return InSet(feat.id, tuple(picked))
    roll = rng.random()
    if roll < 0.2:
        return Not(random_expr(rng, catalog, 0))
    ctor = And if roll < 0.6 else Or
    return ctor(random_expr(rng, catalog, depth - 1), random_expr(rng, catalog, depth - 1))


def random_rule(rng: random.Random, catalog, index: int) -> Rule:
    n_conclusions = rng.randint(1, 3)
    outputs = rng.sample(list(catalog.output_features()), n_conclusions)
    conclusions = []
    for feat in outputs:
        codes = list(feat.code_strings)
        n = rng.randint(1, 2) if feat.multivalued else 1
        conclusions.append((feat.id, tuple(rng.sample(codes, min(n, len(codes))))))
    name = f'gen {index} "quoted"' if index % 17 == 0 else f"gen {index}"
    return Rule(
        name=name,
        condition=random_expr(rng, catalog, rng.randint(0, 3)),
        conclusions=tuple(conclusions),
        priority=rng.randint(-5, 9) if rng.random() < 0.5 else 0,
        provenance="fuzz \\ case" if index % 13 == 0 else
                   ("generated for round-trip checks" if rng.random() < 0.5 else ""),
    )


def random_ruleset(seed: int, catalog, n_rules: int) -> RuleSet:
    rng = random.Random(seed)
    return RuleSet(
        rules=tuple(random_rule(rng, catalog, i) for i in range(n_rules)),
        catalog_version=catalog.version,
    )
