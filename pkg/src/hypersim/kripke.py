"""Explicit-state Kripke structures, lasso paths, and the text format for both.

A structure is a finite set of named states with a total transition relation,
a nonempty set of initial states, and a labeling of states with atomic
propositions.  Lassos (finite prefix + nonempty loop) are the finite carriers
of the infinite traces the checker reasons about.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class KripkeError(Exception):
    """Base class for structure parsing/validation failures."""


class KripkeParseError(KripkeError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class KripkeSemanticError(KripkeError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class StateId:
    """A state handle: display name plus dense ordinal within its structure."""

    name: str
    index: int

    def __repr__(self) -> str:
        return f"StateId({self.name!r}, {self.index})"


@dataclass(frozen=True, eq=True)
class KripkeStructure:
    states: tuple[StateId, ...]
    init: frozenset[StateId]
    ap: tuple[str, ...]
    labels: Mapping[StateId, frozenset[str]]
    trans: frozenset[tuple[StateId, StateId]]

    @cached_property
    def _succ(self) -> dict[StateId, tuple[StateId, ...]]:
        out: dict[StateId, list[StateId]] = {s: [] for s in self.states}
        for a, b in self.trans:
            if a in out:
                out[a].append(b)
        return {s: tuple(sorted(ts, key=lambda t: t.index)) for s, ts in out.items()}

    def successors(self, s: StateId) -> tuple[StateId, ...]:
        return self._succ[s]

    def label_of(self, s: StateId) -> frozenset[str]:
        return self.labels.get(s, frozenset())

    def state_by_name(self, name: str) -> StateId:
        for s in self.states:
            if s.name == name:
                return s
        raise KeyError(name)

    def sorted_init(self) -> tuple[StateId, ...]:
        return tuple(sorted(self.init, key=lambda s: s.index))

    def to_text(self) -> str:
        """Canonical printer; parse_kripke(to_text(k)) reconstructs k exactly."""
        lines = []
        lines.append("states: " + " ".join(s.name for s in self.states))
        lines.append("init: " + " ".join(s.name for s in self.sorted_init()))
        lines.append("ap: " + " ".join(self.ap))
        for s in self.states:
            props = [p for p in self.ap if p in self.label_of(s)]
            lines.append(f"label {s.name}: " + " ".join(props))
        for a, b in sorted(self.trans, key=lambda e: (e[0].index, e[1].index)):
            lines.append(f"trans {a.name} -> {b.name}")
        return "\n".join(lines) + "\n"


def validate_kripke(k: KripkeStructure) -> list[str]:
    """Return the list of invariant violations (empty when the structure is valid).

    Checked: dense ordinals, unique names, nonempty init, init/label/transition
    endpoints drawn from the state set, label props drawn from the declared AP
    set, and totality of the transition relation.
    """
    violations = []
    names = set()
    stateset = set(k.states)
    for pos, s in enumerate(k.states):
        if s.index != pos:
            violations.append(f"bad-index: {s.name} has index {s.index}, expected {pos}")
        if s.name in names:
            violations.append(f"dup-state: {s.name}")
        names.add(s.name)
    if len(set(k.ap)) != len(k.ap):
        violations.append("dup-prop: " + " ".join(sorted({p for p in k.ap if k.ap.count(p) > 1})))
    if not k.init:
        violations.append("empty-init")
    for s in sorted(k.init, key=lambda s: (s.index, s.name)):
        if s not in stateset:
            violations.append(f"init-unknown-state: {s.name}")
    apset = set(k.ap)
    for s in k.states:
        for p in sorted(k.label_of(s)):
            if p not in apset:
                violations.append(f"unknown-prop: {s.name} {p}")
    for labeled in k.labels:
        if labeled not in stateset:
            violations.append(f"label-unknown-state: {labeled.name}")
    has_out = {s: False for s in k.states}
    for a, b in sorted(k.trans, key=lambda e: (e[0].index, e[1].index)):
        for end in (a, b):
            if end not in stateset:
                violations.append(f"trans-unknown-state: {end.name}")
        if a in has_out:
            has_out[a] = True
    for s in k.states:
        if not has_out[s]:
            violations.append(f"non-total: {s.name}")
    return violations


def _check_ident(tok: str, line: int, what: str) -> str:
    if not IDENT_RE.match(tok):
        raise KripkeParseError(f"bad {what} identifier {tok!r}", line)
    return tok


def parse_kripke(text: str) -> KripkeStructure:
    """Parse the line-oriented structure format.

    Sections (any order, repeatable, '#' starts a comment):

        states: s1 s2 ...
        init: s1 ...
        ap: a b ...
        label s1: a b
        trans s1 -> s2

    Duplicate transitions are merged silently; duplicate states are an error.
    Raises KripkeParseError for malformed lines and KripkeSemanticError when
    the described structure breaks an invariant (empty init, unknown state,
    unknown proposition, non-total state).
    """
    state_names: list[str] = []
    init_names: list[tuple[str, int]] = []
    props: list[str] = []
    label_lines: list[tuple[str, list[str], int]] = []
    trans_pairs: list[tuple[str, str, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("states:") or line.startswith("states :"):
            for tok in line.split(":", 1)[1].split():
                state_names.append(_check_ident(tok, lineno, "state"))
        elif line.startswith("init:") or line.startswith("init :"):
            for tok in line.split(":", 1)[1].split():
                init_names.append((_check_ident(tok, lineno, "state"), lineno))
        elif line.startswith("ap:") or line.startswith("ap :"):
            for tok in line.split(":", 1)[1].split():
                p = _check_ident(tok, lineno, "proposition")
                if p not in props:
                    props.append(p)
        elif line.startswith("label"):
            m = re.match(r"label\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$", line)
            if not m:
                raise KripkeParseError(f"malformed label line {line!r}", lineno)
            label_lines.append((m.group(1), m.group(2).split(), lineno))
        elif line.startswith("trans"):
            m = re.match(r"trans\s+([A-Za-z_][A-Za-z0-9_]*)\s*->\s*([A-Za-z_][A-Za-z0-9_]*)\s*$", line)
            if not m:
                raise KripkeParseError(f"malformed trans line {line!r}", lineno)
            trans_pairs.append((m.group(1), m.group(2), lineno))
        else:
            raise KripkeParseError(f"unrecognized line {line!r}", lineno)

    violations: list[str] = []
    seen: set[str] = set()
    for name in state_names:
        if name in seen:
            violations.append(f"dup-state: {name}")
        seen.add(name)

    by_name = {name: StateId(name, i) for i, name in enumerate(state_names)}

    def lookup(name: str, ctx: str) -> StateId | None:
        sid = by_name.get(name)
        if sid is None:
            violations.append(f"{ctx}: {name}")
        return sid

    init = []
    for name, _ in init_names:
        sid = lookup(name, "init-unknown-state")
        if sid is not None:
            init.append(sid)
    labels: dict[StateId, set[str]] = {sid: set() for sid in by_name.values()}
    for name, ps, _ in label_lines:
        sid = lookup(name, "label-unknown-state")
        for p in ps:
            if p not in props:
                violations.append(f"unknown-prop: {name} {p}")
            elif sid is not None:
                labels[sid].add(p)
    trans = set()
    for a, b, _ in trans_pairs:
        sa = lookup(a, "trans-unknown-state")
        sb = lookup(b, "trans-unknown-state")
        if sa is not None and sb is not None:
            trans.add((sa, sb))

    if not init:
        violations.append("empty-init")
    with_out = {a for a, _ in trans}
    for sid in by_name.values():
        if sid not in with_out:
            violations.append(f"non-total: {sid.name}")
    if violations:
        raise KripkeSemanticError(violations)

    return KripkeStructure(
        states=tuple(by_name[n] for n in state_names),
        init=frozenset(init),
        ap=tuple(props),
        labels={sid: frozenset(ps) for sid, ps in labels.items()},
        trans=frozenset(trans),
    )


def reachable_restriction(k: KripkeStructure) -> KripkeStructure:
    """Restrict k to the states reachable from init, reindexed densely.

    Keeps the relative state order, so the result is idempotent under a second
    application.  Totality is preserved (successors of reachable states are
    reachable).
    """
    reached: set[StateId] = set()
    frontier = list(k.sorted_init())
    while frontier:
        s = frontier.pop()
        if s in reached:
            continue
        reached.add(s)
        frontier.extend(t for t in k.successors(s) if t not in reached)
    kept = [s for s in k.states if s in reached]
    remap = {s: StateId(s.name, i) for i, s in enumerate(kept)}
    return KripkeStructure(
        states=tuple(remap[s] for s in kept),
        init=frozenset(remap[s] for s in k.init if s in reached),
        ap=k.ap,
        labels={remap[s]: k.label_of(s) for s in kept},
        trans=frozenset((remap[a], remap[b]) for a, b in k.trans if a in reached and b in reached),
    )


@dataclass(frozen=True)
class LassoPath:
    """A finite path prefix followed by a nonempty loop, both over one structure."""

    prefix: tuple[StateId, ...]
    loop: tuple[StateId, ...]

    @property
    def total_len(self) -> int:
        return len(self.prefix) + len(self.loop)

    def states_visited(self) -> tuple[StateId, ...]:
        return self.prefix + self.loop

    def state_at(self, i: int) -> StateId:
        p, l = len(self.prefix), len(self.loop)
        return self.prefix[i] if i < p else self.loop[(i - p) % l]

    def is_valid_in(self, k: KripkeStructure) -> bool:
        """Loop nonempty, first state initial, consecutive steps and the
        loop-back step all transitions of k."""
        if not self.loop:
            return False
        seq = self.states_visited()
        if seq[0] not in k.init:
            return False
        for a, b in zip(seq, seq[1:]):
            if (a, b) not in k.trans:
                return False
        return (seq[-1], self.loop[0]) in k.trans


@dataclass(frozen=True)
class LassoTrace:
    """The label projection of a lasso path: finitely many sets of props."""

    prefix: tuple[frozenset[str], ...]
    loop: tuple[frozenset[str], ...]

    @property
    def prefix_len(self) -> int:
        return len(self.prefix)

    @property
    def loop_len(self) -> int:
        return len(self.loop)

    def at(self, i: int) -> frozenset[str]:
        """Label set at position i of the induced infinite trace."""
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[(i - len(self.prefix)) % len(self.loop)]


def trace_of(k: KripkeStructure, path: LassoPath) -> LassoTrace:
    return LassoTrace(
        prefix=tuple(k.label_of(s) for s in path.prefix),
        loop=tuple(k.label_of(s) for s in path.loop),
    )


def _primitive(loop: tuple[StateId, ...]) -> bool:
    n = len(loop)
    for d in range(1, n):
        if n % d == 0 and loop == loop[:d] * (n // d):
            return False
    return True


def enumerate_lasso_paths(k: KripkeStructure, max_total_len: int) -> Iterator[LassoPath]:
    """Yield every lasso path of k with total length <= max_total_len.

    Lassos whose loop is a repetition of a shorter loop are skipped: they
    induce no traces the primitive form does not, and a primitive form of
    smaller total length always exists within the bound.  Each remaining
    lasso is yielded exactly once, total lengths are nondecreasing, and the
    order is deterministic (paths in lexicographic state-index order, then
    loop start ascending).
    """
    for total in range(1, max_total_len + 1):
        for path in _paths_of_length(k, total):
            last = path[-1]
            for start in range(total):
                if (last, path[start]) in k.trans:
                    loop = tuple(path[start:])
                    if _primitive(loop):
                        yield LassoPath(prefix=tuple(path[:start]), loop=loop)


def _paths_of_length(k: KripkeStructure, n: int) -> Iterator[list[StateId]]:
    def extend(path: list[StateId]) -> Iterator[list[StateId]]:
        if len(path) == n:
            yield path
            return
        for t in k.successors(path[-1]):
            yield from extend(path + [t])

    for s in k.sorted_init():
        yield from extend([s])


def initial_paths(k: KripkeStructure, depth: int) -> Iterator[list[StateId]]:
    """All paths of exactly `depth` states starting in an initial state."""
    yield from _paths_of_length(k, depth)


def label_sequences(k: KripkeStructure, depth: int, ap: Iterable[str] | None = None) -> set[tuple[frozenset[str], ...]]:
    """The set of label sequences of length `depth` along initial paths,
    optionally projected to a subset of propositions."""
    project = frozenset(ap) if ap is not None else None

    def lab(s: StateId) -> frozenset[str]:
        l = k.label_of(s)
        return l if project is None else l & project

    out: set[tuple[frozenset[str], ...]] = set()
    # breadth-first over (sequence-so-far -> reachable end states), deduped
    layer: dict[tuple[frozenset[str], ...], set[StateId]] = {}
    for s in k.sorted_init():
        layer.setdefault((lab(s),), set()).add(s)
    for _ in range(depth - 1):
        nxt: dict[tuple[frozenset[str], ...], set[StateId]] = {}
        for seq, ends in layer.items():
            for s in ends:
                for t in k.successors(s):
                    nxt.setdefault(seq + (lab(t),), set()).add(t)
        layer = nxt
    if depth >= 1:
        out.update(layer.keys())
    return out
