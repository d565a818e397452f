"""Two-trace invariance properties: quantifier pattern plus a relational predicate.

The supported property shapes are exactly

    forall exists. G <pred>
    exists forall. G <pred>

where <pred> is a Boolean combination of atoms `l.p` (prop p on the
universally/left trace) and `r.p` (prop p on the right trace).  The keyword
`match-all` abbreviates the conjunction of l.p <-> r.p over all props shared
by the two structures under check.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable


class PredicateParseError(Exception):
    pass


class UnsupportedFragmentError(Exception):
    """Raised for any property outside the two supported quantifier shapes."""


class Pred:
    """Base class for relational predicate AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueConst(Pred):
    pass


@dataclass(frozen=True)
class FalseConst(Pred):
    pass


@dataclass(frozen=True)
class LeftAtom(Pred):
    prop: str


@dataclass(frozen=True)
class RightAtom(Pred):
    prop: str


@dataclass(frozen=True)
class Not(Pred):
    arg: Pred


@dataclass(frozen=True)
class And(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Or(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Implies(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Iff(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class MatchAll(Pred):
    """Placeholder expanded against concrete AP sets before evaluation."""


class Pattern(enum.Enum):
    FORALL_EXISTS = "forall-exists"
    EXISTS_FORALL = "exists-forall"


@dataclass(frozen=True)
class HyperProperty:
    pattern: Pattern
    pred: Pred


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<lparen>\()|(?P<rparen>\))|(?P<iff><->)|(?P<implies>->)"
    r"|(?P<not>!)|(?P<and>&)|(?P<or>\|)"
    r"|(?P<latom>l\.[A-Za-z_][A-Za-z0-9_]*)|(?P<ratom>r\.[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<word>match-all|[A-Za-z_][A-Za-z0-9_]*))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise PredicateParseError(f"unexpected character at {rest[:10]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    tokens.append(("eof", ""))
    return tokens


class _PredParser:
    """Precedence climbing: ! binds tightest, then & then | then -> then <->.
    Implication is right-associative, the rest left."""

    BINARY = {"and": (40, And), "or": (30, Or), "implies": (20, Implies), "iff": (10, Iff)}
    RIGHT_ASSOC = {"implies"}

    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Pred:
        node = self.parse_expr(0)
        kind, val = self.peek()
        if kind != "eof":
            raise PredicateParseError(f"trailing input at {val!r}")
        return node

    def parse_expr(self, min_prec: int) -> Pred:
        node = self.parse_unary()
        while True:
            kind, _ = self.peek()
            if kind not in self.BINARY:
                return node
            prec, ctor = self.BINARY[kind]
            if prec < min_prec:
                return node
            self.take()
            next_min = prec if kind in self.RIGHT_ASSOC else prec + 1
            rhs = self.parse_expr(next_min)
            node = ctor(node, rhs)

    def parse_unary(self) -> Pred:
        kind, val = self.take()
        if kind == "not":
            return Not(self.parse_unary())
        if kind == "lparen":
            node = self.parse_expr(0)
            k, v = self.take()
            if k != "rparen":
                raise PredicateParseError(f"expected ')' but found {v!r}")
            return node
        if kind == "latom":
            return LeftAtom(val[2:])
        if kind == "ratom":
            return RightAtom(val[2:])
        if kind == "word":
            if val == "true":
                return TrueConst()
            if val == "false":
                return FalseConst()
            if val == "match-all":
                return MatchAll()
            raise PredicateParseError(f"unknown atom {val!r} (props are written l.{val} or r.{val})")
        raise PredicateParseError(f"unexpected token {val!r}" if val else "unexpected end of input")


def parse_predicate(text: str) -> Pred:
    """Parse a relational predicate.  `match-all` stays symbolic; expand it
    with expand_match_all before evaluation or encoding."""
    return _PredParser(_tokenize(text)).parse()


def expand_match_all(pred: Pred, left_ap: Iterable[str], right_ap: Iterable[str]) -> Pred:
    """Replace every match-all node by the conjunction of l.p <-> r.p over the
    props shared by the two AP sets (constant true when the share is empty)."""
    shared = [p for p in left_ap if p in set(right_ap)]

    def build() -> Pred:
        if not shared:
            return TrueConst()
        node: Pred = Iff(LeftAtom(shared[0]), RightAtom(shared[0]))
        for p in shared[1:]:
            node = And(node, Iff(LeftAtom(p), RightAtom(p)))
        return node

    def walk(n: Pred) -> Pred:
        if isinstance(n, MatchAll):
            return build()
        if isinstance(n, Not):
            return Not(walk(n.arg))
        if isinstance(n, (And, Or, Implies, Iff)):
            return type(n)(walk(n.left), walk(n.right))
        return n

    return walk(pred)


def eval_predicate(pred: Pred, left_labels: frozenset[str] | set[str], right_labels: frozenset[str] | set[str]) -> bool:
    """Evaluate a (match-all-free) predicate on one pair of label sets."""
    if isinstance(pred, TrueConst):
        return True
    if isinstance(pred, FalseConst):
        return False
    if isinstance(pred, LeftAtom):
        return pred.prop in left_labels
    if isinstance(pred, RightAtom):
        return pred.prop in right_labels
    if isinstance(pred, Not):
        return not eval_predicate(pred.arg, left_labels, right_labels)
    if isinstance(pred, And):
        return eval_predicate(pred.left, left_labels, right_labels) and eval_predicate(pred.right, left_labels, right_labels)
    if isinstance(pred, Or):
        return eval_predicate(pred.left, left_labels, right_labels) or eval_predicate(pred.right, left_labels, right_labels)
    if isinstance(pred, Implies):
        return (not eval_predicate(pred.left, left_labels, right_labels)) or eval_predicate(pred.right, left_labels, right_labels)
    if isinstance(pred, Iff):
        return eval_predicate(pred.left, left_labels, right_labels) == eval_predicate(pred.right, left_labels, right_labels)
    if isinstance(pred, MatchAll):
        raise ValueError("match-all must be expanded against AP sets before evaluation")
    raise TypeError(f"not a predicate node: {pred!r}")


def predicate_props(pred: Pred) -> tuple[set[str], set[str]]:
    """The (left, right) prop names referenced by the predicate."""
    left: set[str] = set()
    right: set[str] = set()

    def walk(n: Pred) -> None:
        if isinstance(n, LeftAtom):
            left.add(n.prop)
        elif isinstance(n, RightAtom):
            right.add(n.prop)
        elif isinstance(n, Not):
            walk(n.arg)
        elif isinstance(n, (And, Or, Implies, Iff)):
            walk(n.left)
            walk(n.right)

    walk(pred)
    return left, right


def uses_match_all(pred: Pred) -> bool:
    if isinstance(pred, MatchAll):
        return True
    if isinstance(pred, Not):
        return uses_match_all(pred.arg)
    if isinstance(pred, (And, Or, Implies, Iff)):
        return uses_match_all(pred.left) or uses_match_all(pred.right)
    return False


_PROPERTY_RE = re.compile(r"^\s*([a-z]+)\s+([a-z]+)\s*\.\s*G\s+(.*)$", re.DOTALL)


def parse_property(text: str) -> HyperProperty:
    """Parse 'forall exists. G <pred>' or 'exists forall. G <pred>'.

    Any other quantifier prefix or temporal shape raises
    UnsupportedFragmentError: this checker handles exactly the two
    invariance fragments.
    """
    m = _PROPERTY_RE.match(text)
    if not m:
        raise UnsupportedFragmentError(
            "property must have the shape '<quant> <quant>. G <pred>'"
        )
    q1, q2, body = m.group(1), m.group(2), m.group(3)
    if (q1, q2) == ("forall", "exists"):
        pattern = Pattern.FORALL_EXISTS
    elif (q1, q2) == ("exists", "forall"):
        pattern = Pattern.EXISTS_FORALL
    else:
        raise UnsupportedFragmentError(
            f"unsupported quantifier prefix '{q1} {q2}': only 'forall exists' and 'exists forall' are handled"
        )
    return HyperProperty(pattern=pattern, pred=parse_predicate(body))


def pred_to_text(pred: Pred) -> str:
    """Printer producing parseable predicate text (fully parenthesized where needed)."""
    if isinstance(pred, TrueConst):
        return "true"
    if isinstance(pred, FalseConst):
        return "false"
    if isinstance(pred, LeftAtom):
        return f"l.{pred.prop}"
    if isinstance(pred, RightAtom):
        return f"r.{pred.prop}"
    if isinstance(pred, MatchAll):
        return "match-all"
    if isinstance(pred, Not):
        return f"!({pred_to_text(pred.arg)})"
    ops = {And: "&", Or: "|", Implies: "->", Iff: "<->"}
    op = ops[type(pred)]
    return f"({pred_to_text(pred.left)} {op} {pred_to_text(pred.right)})"
