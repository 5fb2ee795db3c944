import pytest

from pedocds.catalog import PatientProfile, SourceOrigin
from pedocds.ruledsl import (
    And,
    Equals,
    InSet,
    Or,
    RuleError,
    RuleSyntaxError,
    UnknownFeatureError,
    conjuncts,
    evaluate,
    explain,
    expr_depth,
    parse_rules,
    print_rules,
)

from conftest import random_ruleset

RULE1 = ('rule "Rule 1": if FCPA in {FCPA3,FCPA4} and (FOIS == FOIS3 or FO in {FO2,FO3}) '
         'then FWT := FWT3')
RULE2 = ('rule "Rule 2": if MFP in {MFP3,MFP4,MFP5} and FCPA in {FCPA1,FCPA4} '
         'and FOIS in {FOIS1,FOIS3} then INST := INST2')


def test_parse_rule1_shape(catalog):
    rs = parse_rules(RULE1, catalog)
    assert len(rs.rules) == 1
    rule = rs.rules[0]
    assert expr_depth(rule.condition) == 2
    assert rule.condition == And(
        InSet("FCPA", ("FCPA3", "FCPA4")),
        Or(Equals("FOIS", "FOIS3"), InSet("FO", ("FO2", "FO3"))),
    )
    assert rule.conclusions == (("FWT", ("FWT3",)),)


def test_parse_rule2_three_conjuncts(catalog):
    rs = parse_rules(RULE2, catalog)
    assert len(rs.rules) == 1
    assert len(conjuncts(rs.rules[0].condition)) == 3


def test_conclusion_must_be_output_feature(catalog):
    with pytest.raises(RuleSyntaxError, match="FSS is an input feature"):
        parse_rules('rule "bad": if FO == FO1 then FSS := FSS1', catalog)


def test_condition_must_be_input_feature(catalog):
    with pytest.raises(RuleSyntaxError, match="FWT is an output feature"):
        parse_rules('rule "bad": if FWT == FWT1 then INST := INST1', catalog)


def test_syntax_error_carries_position(catalog):
    with pytest.raises(RuleSyntaxError) as err:
        parse_rules('rule "bad": if FO == then FWT := FWT3', catalog)
    assert err.value.line == 1 and err.value.col > 0


def test_unknown_feature_and_code(catalog):
    with pytest.raises(RuleSyntaxError, match="unknown feature"):
        parse_rules('rule "x": if ZZZ == Z1 then FWT := FWT3', catalog)
    with pytest.raises(RuleSyntaxError, match="not in feature"):
        parse_rules('rule "x": if FO == FO9 then FWT := FWT3', catalog)


def test_single_valued_conclusion_rejects_multiple_codes(catalog):
    with pytest.raises(RuleSyntaxError, match="single-valued"):
        parse_rules('rule "x": if FO == FO1 then FWT := FWT1 + FWT2', catalog)
    # multivalued output accepts a code set
    rs = parse_rules('rule "x": if FO == FO1 then INSMOD := INSMOD1 + INSMOD3', catalog)
    assert rs.rules[0].conclusions == (("INSMOD", ("INSMOD1", "INSMOD3")),)


def test_duplicate_rule_names_rejected(catalog):
    text = 'rule "a": if FO == FO1 then FWT := FWT1\nrule "a": if FO == FO2 then FWT := FWT2'
    with pytest.raises(RuleError, match="duplicate rule name"):
        parse_rules(text, catalog)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_participant1_fires_both_rules(catalog, ruleset, participants):
    rx, trace = evaluate(ruleset, participants[0], catalog)
    assert sorted(rx.values["FWT"]) == ["FWT3"]
    assert sorted(rx.values["INST"]) == ["INST2"]
    assert rx.sources["FWT"].origin is SourceOrigin.RULE
    assert rx.sources["INST"].origin is SourceOrigin.RULE
    assert trace.winning_rule("FWT") == "Rule 1"
    assert trace.winning_rule("INST") == "Rule 2"


def test_participant2_fwt_only(catalog, ruleset, participants):
    rx, trace = evaluate(ruleset, participants[1], catalog)
    assert sorted(rx.values["FWT"]) == ["FWT3"]
    assert "INST" not in rx.values
    assert "INST" in trace.unresolved


def test_all_rules_abstain(catalog, ruleset):
    profile = PatientProfile("none", {
        "PPIA": "PPIA1", "FSS": "FSS1", "MFP": "MFP6", "CM": "CM2", "PBW": "PBW1",
        "PMS": "PMS1", "FCPA": "FCPA1", "FO": "FO2", "FOIS": "FOIS3",
    })
    # FCPA1 kills Rule 1; MFP6 kills Rule 2
    rx, trace = evaluate(ruleset, profile, catalog)
    assert rx.values == {}
    assert {"FWT", "INST"} <= trace.unresolved


def test_multivalued_condition_is_intersection(catalog, ruleset, participants):
    profile = participants[1].with_overrides({"MFP": {"MFP1", "MFP5"}})
    rx, _ = evaluate(ruleset, profile, catalog)
    assert sorted(rx.values["INST"]) == ["INST2"]  # MFP5 satisfies Rule 2


def test_catalog_version_mismatch(catalog, ruleset, participants):
    stale = type(ruleset)(rules=ruleset.rules, catalog_version="other")
    with pytest.raises(RuleError, match="version mismatch"):
        evaluate(stale, participants[0], catalog)


def test_determinism(catalog, ruleset, participants):
    a = evaluate(ruleset, participants[0], catalog)
    b = evaluate(ruleset, participants[0], catalog)
    assert a[0] == b[0] and a[1] == b[1]


def test_irrelevant_feature_change_is_invisible(catalog, ruleset, participants):
    # PBW appears in no shipped rule condition
    base = participants[0]
    tweaked = base.with_overrides({"PBW": "PBW1"})
    assert evaluate(ruleset, base, catalog)[0] == evaluate(ruleset, tweaked, catalog)[0]


def test_priority_dominance(catalog, participants):
    text = (
        'rule "low" priority 1: if FO == FO3 then FWT := FWT1\n'
        'rule "high" priority 5: if FO == FO3 then FWT := FWT2\n'
    )
    rs = parse_rules(text, catalog)
    rx, trace = evaluate(rs, participants[0], catalog)
    assert sorted(rx.values["FWT"]) == ["FWT2"]
    assert trace.winning_rule("FWT") == "high"


def test_declaration_order_breaks_priority_ties(catalog, participants):
    text = (
        'rule "first": if FO == FO3 then FWT := FWT1\n'
        'rule "second": if FO == FO3 then FWT := FWT2\n'
    )
    rs = parse_rules(text, catalog)
    rx, _ = evaluate(rs, participants[0], catalog)
    assert sorted(rx.values["FWT"]) == ["FWT1"]


def test_golden_cases_never_contradicted(catalog, ruleset, dataset):
    """Every rule-resolved output must equal the recorded outcome."""
    for record in dataset.records:
        rx, _ = evaluate(ruleset, record.profile, catalog)
        for feature, codes in rx.values.items():
            recorded = record.outcome.values.get(feature)
            if recorded is not None:
                assert codes == recorded, (record.profile.patient_id, feature)


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------

def test_explain_winning_rule_quotes_provenance(catalog, ruleset, participants):
    _, trace = evaluate(ruleset, participants[0], catalog)
    text = explain(trace, "FWT")
    assert "Rule 1" in text and "winning" in text
    assert "provenance" in text


def test_explain_unresolved(catalog, ruleset, participants):
    _, trace = evaluate(ruleset, participants[1], catalog)
    text = explain(trace, "INST")
    assert "unresolved: no rule fired" in text


def test_explain_unknown_feature(catalog, ruleset, participants):
    _, trace = evaluate(ruleset, participants[0], catalog)
    with pytest.raises(UnknownFeatureError):
        explain(trace, "ZZZ")


# ---------------------------------------------------------------------------
# round-trip
# ---------------------------------------------------------------------------

def test_shipped_file_round_trip(catalog, rules_text, ruleset):
    assert print_rules(ruleset) == rules_text
    assert parse_rules(print_rules(ruleset), catalog) == ruleset


def test_generated_round_trip(catalog):
    for seed in range(20):
        rs = random_ruleset(seed, catalog, n_rules=5)
        assert parse_rules(print_rules(rs), catalog) == rs


def test_nested_not_and_precedence_round_trip(catalog):
    text = ('rule "n": if not (FO == FO1 or FSS == FSS2) and not FCPA == FCPA1 '
            'then FWT := FWT1')
    rs = parse_rules(text, catalog)
    assert parse_rules(print_rules(rs), catalog) == rs


def test_repo_rules_file_matches_package_data(rules_text):
    from pathlib import Path
    repo_copy = Path(__file__).resolve().parents[1] / "rules" / "paper.rules"
    if repo_copy.is_file():
        assert repo_copy.read_text("utf-8") == rules_text
