"""Declarative prescription rules: parser, printer, evaluator, explainer.

Grammar (whitespace-insensitive, ``and`` binds tighter than ``or``)::

    ruleset  = { rule } ;
    rule     = "rule" STRING [ "priority" INT ] [ "provenance" STRING ]
               ":" "if" expr "then" assign { "," assign } ;
    expr     = term { ("and" | "or") term } ;
    term     = [ "not" ] ( FEATURE "==" CODE
                         | FEATURE "in" "{" CODE { "," CODE } "}"
                         | "(" expr ")" ) ;
    assign   = FEATURE ":=" CODE { "+" CODE } ;

Conditions may reference input features only, conclusions output features
only.  Over multivalued features, ``==`` and ``in`` test non-empty
intersection with the patient's recorded code set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .catalog import (
    DecisionSource,
    FeatureCatalog,
    FeatureKind,
    PatientProfile,
    Prescription,
)


class RuleError(ValueError):
    """Base for rule parsing/evaluation failures."""


class RuleSyntaxError(RuleError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownFeatureError(RuleError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Equals:
    feature: str
    code: str


@dataclass(frozen=True)
class InSet:
    feature: str
    codes: tuple[str, ...]  # source order preserved for faithful printing


@dataclass(frozen=True)
class Not:
    expr: "BoolExpr"


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Or:
    left: "BoolExpr"
    right: "BoolExpr"


BoolExpr = Union[Equals, InSet, Not, And, Or]


def expr_depth(e: BoolExpr) -> int:
    """Nesting depth of boolean operators; leaves are depth 0."""
    if isinstance(e, (Equals, InSet)):
        return 0
    if isinstance(e, Not):
        return 1 + expr_depth(e.expr)
    return 1 + max(expr_depth(e.left), expr_depth(e.right))


def conjuncts(e: BoolExpr) -> list[BoolExpr]:
    """Flatten a top-level chain of ANDs."""
    if isinstance(e, And):
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


@dataclass(frozen=True)
class Rule:
    name: str
    condition: BoolExpr
    conclusions: tuple[tuple[str, tuple[str, ...]], ...]
    priority: int = 0
    provenance: str = ""


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    catalog_version: str

    def __post_init__(self) -> None:
        names = [r.name for r in self.rules]
        if len(names) != len(set(names)):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise RuleError(f"duplicate rule name(s): {', '.join(dupes)}")


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_KEYWORDS = {"rule", "priority", "provenance", "if", "then", "and", "or", "not", "in"}
_SYMBOLS = (":=", "==", ":", "{", "}", "(", ")", ",", "+")


@dataclass(frozen=True)
class _Token:
    kind: str  # keyword | ident | string | int | symbol | eof
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf = []
            while i < n and text[i] != '"':
                if text[i] == "\\" and i + 1 < n:
                    buf.append(text[i + 1])
                    i += 2
                    col += 2
                elif text[i] == "\n":
                    raise RuleSyntaxError("unterminated string", start_line, start_col)
                else:
                    buf.append(text[i])
                    i += 1
                    col += 1
            if i >= n:
                raise RuleSyntaxError("unterminated string", start_line, start_col)
            i += 1
            col += 1
            tokens.append(_Token("string", "".join(buf), start_line, start_col))
            continue
        matched = False
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(_Token("symbol", sym, line, col))
                i += len(sym)
                col += len(sym)
                matched = True
                break
        if matched:
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            start_col = col
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha():
            start_col = col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        raise RuleSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token], catalog: FeatureCatalog):
        self.tokens = tokens
        self.pos = 0
        self.catalog = catalog

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise RuleSyntaxError(f"expected {want!r}, found {tok.value or tok.kind!r}",
                                  tok.line, tok.col)
        return self.next()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.value == word

    # -- semantic lookups ---------------------------------------------------

    def _feature(self, tok: _Token, expected_kind: FeatureKind) -> str:
        if not self.catalog.has_feature(tok.value):
            raise RuleSyntaxError(f"unknown feature {tok.value!r}", tok.line, tok.col)
        feat = self.catalog.feature(tok.value)
        if feat.kind is not expected_kind:
            raise RuleSyntaxError(f"{tok.value} is an {feat.kind.value} feature",
                                  tok.line, tok.col)
        return tok.value

    def _code(self, tok: _Token, feature_id: str) -> str:
        feat = self.catalog.feature(feature_id)
        if not feat.has_code(tok.value):
            raise RuleSyntaxError(f"code {tok.value!r} not in feature {feature_id}",
                                  tok.line, tok.col)
        return tok.value

    # -- grammar ------------------------------------------------------------

    def parse_ruleset(self) -> RuleSet:
        rules = []
        while not self.peek().kind == "eof":
            rules.append(self.parse_rule())
        return RuleSet(rules=tuple(rules), catalog_version=self.catalog.version)

    def parse_rule(self) -> Rule:
        self.expect("keyword", "rule")
        name = self.expect("string").value
        priority = 0
        provenance = ""
        if self.at_keyword("priority"):
            self.next()
            priority = int(self.expect("int").value)
        if self.at_keyword("provenance"):
            self.next()
            provenance = self.expect("string").value
        self.expect("symbol", ":")
        self.expect("keyword", "if")
        condition = self.parse_expr()
        self.expect("keyword", "then")
        conclusions = [self.parse_assign()]
        while self.peek().kind == "symbol" and self.peek().value == ",":
            self.next()
            conclusions.append(self.parse_assign())
        return Rule(name=name, condition=condition, conclusions=tuple(conclusions),
                    priority=priority, provenance=provenance)

    def parse_expr(self) -> BoolExpr:
        left = self.parse_and()
        while self.at_keyword("or"):
            self.next()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> BoolExpr:
        left = self.parse_term()
        while self.at_keyword("and"):
            self.next()
            left = And(left, self.parse_term())
        return left

    def parse_term(self) -> BoolExpr:
        if self.at_keyword("not"):
            self.next()
            return Not(self.parse_term_body())
        return self.parse_term_body()

    def parse_term_body(self) -> BoolExpr:
        tok = self.peek()
        if tok.kind == "symbol" and tok.value == "(":
            self.next()
            inner = self.parse_expr()
            self.expect("symbol", ")")
            return inner
        feat_tok = self.expect("ident")
        feature = self._feature(feat_tok, FeatureKind.INPUT)
        op = self.peek()
        if op.kind == "symbol" and op.value == "==":
            self.next()
            code = self._code(self.expect("ident"), feature)
            return Equals(feature, code)
        if op.kind == "keyword" and op.value == "in":
            self.next()
            self.expect("symbol", "{")
            codes = [self._code(self.expect("ident"), feature)]
            while self.peek().kind == "symbol" and self.peek().value == ",":
                self.next()
                codes.append(self._code(self.expect("ident"), feature))
            self.expect("symbol", "}")
            if len(codes) != len(set(codes)):
                raise RuleSyntaxError(f"duplicate code in set for {feature}",
                                      op.line, op.col)
            return InSet(feature, tuple(codes))
        raise RuleSyntaxError(f"expected '==' or 'in' after {feature}", op.line, op.col)

    def parse_assign(self) -> tuple[str, tuple[str, ...]]:
        feat_tok = self.expect("ident")
        feature = self._feature(feat_tok, FeatureKind.OUTPUT)
        self.expect("symbol", ":=")
        codes = [self._code(self.expect("ident"), feature)]
        while self.peek().kind == "symbol" and self.peek().value == "+":
            self.next()
            codes.append(self._code(self.expect("ident"), feature))
        feat = self.catalog.feature(feature)
        if len(codes) > 1 and not feat.multivalued:
            raise RuleSyntaxError(f"{feature} is single-valued", feat_tok.line, feat_tok.col)
        if len(codes) != len(set(codes)):
            raise RuleSyntaxError(f"duplicate code in assignment to {feature}",
                                  feat_tok.line, feat_tok.col)
        return feature, tuple(codes)


def parse_rules(text: str, catalog: FeatureCatalog) -> RuleSet:
    """Parse rule source against a catalog; syntax and semantic errors carry
    line/column positions."""
    return _Parser(_tokenize(text), catalog).parse_ruleset()


# ---------------------------------------------------------------------------
# Printer (canonical form; parse(print(rs)) is structurally identical)
# ---------------------------------------------------------------------------

_PREC = {Or: 1, And: 2, Not: 3, Equals: 4, InSet: 4}


def _print_expr(e: BoolExpr, parent_prec: int = 0) -> str:
    prec = _PREC[type(e)]
    if isinstance(e, Equals):
        s = f"{e.feature} == {e.code}"
    elif isinstance(e, InSet):
        s = f"{e.feature} in {{{', '.join(e.codes)}}}"
    elif isinstance(e, Not):
        s = f"not {_print_expr(e.expr, 4)}"
    elif isinstance(e, And):
        s = f"{_print_expr(e.left, 2)} and {_print_expr(e.right, 3)}"
    else:
        s = f"{_print_expr(e.left, 1)} or {_print_expr(e.right, 2)}"
    return f"({s})" if prec < parent_prec else s


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def print_rules(ruleset: RuleSet) -> str:
    """Render a ruleset back to canonical source text."""
    parts = []
    for r in ruleset.rules:
        head = f'rule "{_escape(r.name)}"'
        if r.priority != 0:
            head += f" priority {r.priority}"
        if r.provenance:
            head += f' provenance "{_escape(r.provenance)}"'
        assigns = ", ".join(
            f"{fid} := {' + '.join(codes)}" for fid, codes in r.conclusions
        )
        parts.append(f"{head}:\n  if {_print_expr(r.condition)}\n  then {assigns}\n")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _holds(e: BoolExpr, profile: PatientProfile) -> bool:
    if isinstance(e, Equals):
        return e.code in profile.codes(e.feature)
    if isinstance(e, InSet):
        return bool(profile.codes(e.feature) & set(e.codes))
    if isinstance(e, Not):
        return not _holds(e.expr, profile)
    if isinstance(e, And):
        return _holds(e.left, profile) and _holds(e.right, profile)
    return _holds(e.left, profile) or _holds(e.right, profile)


@dataclass(frozen=True)
class TraceEntry:
    rule_name: str
    fired: bool
    winning: bool
    provenance: str


@dataclass(frozen=True)
class Trace:
    """Which rules were considered, fired, and won, per output feature."""

    entries: Mapping[str, tuple[TraceEntry, ...]]
    unresolved: frozenset[str]
    output_ids: frozenset[str] = field(default_factory=frozenset)

    def winning_rule(self, feature_id: str) -> Optional[str]:
        for entry in self.entries.get(feature_id, ()):
            if entry.winning:
                return entry.rule_name
        return None

    def to_json_dict(self) -> dict:
        return {
            "entries": {
                fid: [
                    {"rule": e.rule_name, "fired": e.fired, "winning": e.winning}
                    for e in entries
                ]
                for fid, entries in sorted(self.entries.items())
            },
            "unresolved": sorted(self.unresolved),
        }


def evaluate(ruleset: RuleSet, profile: PatientProfile,
             catalog: FeatureCatalog) -> tuple[Prescription, Trace]:
    """Run every rule against the profile; deterministic.

    For each output feature the winning rule is the fired rule with the
    highest priority (ties: earliest declaration).  Abstention is
    first-class: features no rule resolved end up in ``trace.unresolved``.
    """
    if ruleset.catalog_version != catalog.version:
        raise RuleError(
            f"catalog version mismatch: ruleset built against "
            f"{ruleset.catalog_version!r}, evaluating with {catalog.version!r}"
        )
    fired = [_holds(r.condition, profile) for r in ruleset.rules]

    considered: dict[str, list[int]] = {}
    for idx, r in enumerate(ruleset.rules):
        for fid, _codes in r.conclusions:
            considered.setdefault(fid, []).append(idx)

    values: dict[str, frozenset[str]] = {}
    sources: dict[str, DecisionSource] = {}
    entries: dict[str, tuple[TraceEntry, ...]] = {}
    for fid, indices in considered.items():
        fired_indices = [i for i in indices if fired[i]]
        winner = None
        if fired_indices:
            winner = min(fired_indices, key=lambda i: (-ruleset.rules[i].priority, i))
        entries[fid] = tuple(
            TraceEntry(
                rule_name=ruleset.rules[i].name,
                fired=fired[i],
                winning=(i == winner),
                provenance=ruleset.rules[i].provenance,
            )
            for i in indices
        )
        if winner is not None:
            rule = ruleset.rules[winner]
            codes = dict(rule.conclusions)[fid]
            values[fid] = frozenset(codes)
            sources[fid] = DecisionSource.rule(rule.name)

    output_ids = frozenset(catalog.output_ids())
    unresolved = frozenset(fid for fid in output_ids if fid not in values)
    partial = Prescription(values=values, sources=sources, version=1)
    trace = Trace(entries=entries, unresolved=unresolved, output_ids=output_ids)
    return partial, trace


def explain(trace: Trace, feature_id: str) -> str:
    """Human-readable account of how a feature was (or was not) resolved."""
    if feature_id not in trace.output_ids:
        raise UnknownFeatureError(f"unknown feature {feature_id!r}")
    lines = []
    entries = trace.entries.get(feature_id, ())
    for e in entries:
        status = "winning" if e.winning else ("fired" if e.fired else "did not fire")
        lines.append(f"rule {e.rule_name!r}: {status}")
        if e.winning and e.provenance:
            lines.append(f"  provenance: {e.provenance}")
    if feature_id in trace.unresolved:
        if entries:
            lines.append(f"{feature_id} unresolved: no rule fired")
        else:
            lines.append(f"{feature_id} unresolved: no rule concludes this feature")
    return "\n".join(lines)
