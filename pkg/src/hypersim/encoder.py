"""Propositional encodings of the two simulation queries.

Both encodings place symbolic state slots (binary-encoded state ordinals) and
a Boolean relation variable sim(i,j) per slot pair:

  * sim-ea: a lasso of length n in K_P whose positions jointly simulate every
    state of K_Q (slots y_1..y_k enumerate S_Q exactly, k = |S_Q|).
    Satisfiable iff such a lasso exists at length n.
  * sim-ae: a subset of at most k states of K_Q that simulates all of K_P
    (slots x_1..x_n enumerate S_P exactly, n = |S_P|).  Satisfiable iff a
    predicate-compatible simulation using at most k distinct Q-states exists.

Transition, initial-state, and label predicates over slots are expanded as
explicit disjunctions over the finite relations; shared subterms (slot/state
equalities, successor gadgets) are built once per encoding and reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import hyperspec as hs
from .circuit import CnfInstance, Expr, ExprFactory, lower_parts_to_cnf
from .kripke import KripkeStructure, LassoPath, StateId


class EncodeError(Exception):
    pass


class DecodeError(Exception):
    pass


@dataclass(frozen=True)
class StateSlot:
    role: str  # "P" or "Q"
    index: int  # 1-based slot position
    bits: tuple[str, ...]  # variable names, least significant first

    def decode(self, model: Mapping[str, bool]) -> int:
        val = 0
        for pos, name in enumerate(self.bits):
            if model.get(name, False):
                val |= 1 << pos
        return val


@dataclass
class SimWitnessAE:
    """A predicate-compatible simulation relation from K_P into K_Q."""

    relation: frozenset[tuple[StateId, StateId]]
    used_q: frozenset[StateId]


@dataclass
class SimWitnessEA:
    """A lasso in K_P together with the per-position sets of simulated Q states."""

    lasso: LassoPath
    pos_relation: dict[int, frozenset[StateId]]  # 1-based lasso positions


@dataclass
class Encoding:
    kind: str  # "sim-ea" or "sim-ae"
    kp: KripkeStructure
    kq: KripkeStructure
    pred: hs.Pred
    n: int
    k: int
    slots_p: tuple[StateSlot, ...]
    slots_q: tuple[StateSlot, ...]
    sim_name: dict[tuple[int, int], str]
    parts: list[tuple[str, Expr]] = field(repr=False)
    var_order: list[str] = field(repr=False)

    def to_cnf(self) -> CnfInstance:
        return lower_parts_to_cnf(self.parts, self.var_order)


def _bits_for(count: int) -> int:
    if count <= 1:
        return 0
    return (count - 1).bit_length()


class _Shared:
    """Per-encoding node cache: equality, legality, labels, successor gadgets."""

    def __init__(self, fac: ExprFactory, kp: KripkeStructure, kq: KripkeStructure, n: int, k: int):
        self.f = fac
        self.kp = kp
        self.kq = kq
        self.n = n
        self.k = k
        bp = _bits_for(len(kp.states))
        bq = _bits_for(len(kq.states))
        self.slots_p = tuple(
            StateSlot("P", i, tuple(f"x{i}b{b}" for b in range(bp))) for i in range(1, n + 1)
        )
        self.slots_q = tuple(
            StateSlot("Q", j, tuple(f"y{j}b{b}" for b in range(bq))) for j in range(1, k + 1)
        )
        self.xbits = [[fac.var(nm) for nm in s.bits] for s in self.slots_p]
        self.ybits = [[fac.var(nm) for nm in s.bits] for s in self.slots_q]
        self.sim_name = {
            (i, j): f"sim{i}_{j}" for i in range(1, n + 1) for j in range(1, k + 1)
        }
        self.sim = {
            ij: fac.var(name) for ij, name in self.sim_name.items()
        }
        self.var_order = (
            [nm for s in self.slots_p for nm in s.bits]
            + [nm for s in self.slots_q for nm in s.bits]
            + [self.sim_name[(i, j)] for i in range(1, n + 1) for j in range(1, k + 1)]
        )
        self._eqp: dict[tuple[int, int], Expr] = {}
        self._eqq: dict[tuple[int, int], Expr] = {}
        self._lp: dict[tuple[int, str], Expr] = {}
        self._lq: dict[tuple[int, str], Expr] = {}
        self._hit: dict[tuple[int, int], Expr] = {}
        self._succhit: dict[tuple[int, int], Expr] = {}
        self._cover: dict[tuple[int, int], Expr] = {}
        self._reqd: dict[tuple[int, int], Expr] = {}
        self._succ_q_ord: dict[int, list[int]] = {
            s.index: [t.index for t in kq.successors(s)] for s in kq.states
        }
        self._edges_p = sorted(kp.trans, key=lambda e: (e[0].index, e[1].index))

    def _eq(self, bits: list[Expr], ordinal: int) -> Expr:
        f = self.f
        return f.and_(*[
            b if (ordinal >> pos) & 1 else f.not_(b) for pos, b in enumerate(bits)
        ])

    def eqp(self, i: int, s: int) -> Expr:
        key = (i, s)
        node = self._eqp.get(key)
        if node is None:
            node = self._eq(self.xbits[i - 1], s)
            self._eqp[key] = node
        return node

    def eqq(self, j: int, q: int) -> Expr:
        key = (j, q)
        node = self._eqq.get(key)
        if node is None:
            node = self._eq(self.ybits[j - 1], q)
            self._eqq[key] = node
        return node

    def legal_p(self, i: int) -> Expr:
        return self.f.or_(*[self.eqp(i, s) for s in range(len(self.kp.states))])

    def legal_q(self, j: int) -> Expr:
        return self.f.or_(*[self.eqq(j, q) for q in range(len(self.kq.states))])

    def neq_p(self, i: int, t: int) -> Expr:
        f = self.f
        return f.or_(*[f.xor(a, b) for a, b in zip(self.xbits[i - 1], self.xbits[t - 1])])

    def neq_q(self, j: int, r: int) -> Expr:
        f = self.f
        return f.or_(*[f.xor(a, b) for a, b in zip(self.ybits[j - 1], self.ybits[r - 1])])

    def _lt_bits(self, a: list[Expr], b: list[Expr]) -> Expr:
        # strict unsigned less-than over LSB-first bit vectors; breaks the
        # slot-permutation symmetry of the exhaustiveness constraints, which
        # all other families share, so canonical ascending order is complete
        f = self.f
        terms = []
        higher_equal = f.TRUE
        for pos in reversed(range(len(a))):
            terms.append(f.and_(higher_equal, f.not_(a[pos]), b[pos]))
            higher_equal = f.and_(higher_equal, f.not_(f.xor(a[pos], b[pos])))
        return f.or_(*terms)

    def lt_p(self, i: int, t: int) -> Expr:
        return self._lt_bits(self.xbits[i - 1], self.xbits[t - 1])

    def lt_q(self, j: int, r: int) -> Expr:
        return self._lt_bits(self.ybits[j - 1], self.ybits[r - 1])

    def ge_const_q(self, j: int, c: int) -> Expr:
        # value(y_j) >= c, built LSB-up so constant comparisons propagate early
        f = self.f
        bits = self.ybits[j - 1]
        if c <= 0:
            return f.TRUE
        if c > (1 << len(bits)) - 1:
            return f.FALSE
        acc = f.TRUE
        for pos, b in enumerate(bits):
            acc = f.and_(b, acc) if (c >> pos) & 1 else f.or_(b, acc)
        return acc

    def le_const_q(self, j: int, c: int) -> Expr:
        f = self.f
        bits = self.ybits[j - 1]
        if c < 0:
            return f.FALSE
        if c >= (1 << len(bits)) - 1:
            return f.TRUE
        acc = f.TRUE
        for pos, b in enumerate(bits):
            acc = f.or_(f.not_(b), acc) if (c >> pos) & 1 else f.and_(f.not_(b), acc)
        return acc

    def init_p(self, i: int) -> Expr:
        return self.f.or_(*[self.eqp(i, s.index) for s in self.kp.sorted_init()])

    def init_q(self, j: int) -> Expr:
        return self.f.or_(*[self.eqq(j, q.index) for q in self.kq.sorted_init()])

    def edge_p(self, i: int, t: int) -> Expr:
        f = self.f
        return f.or_(*[
            f.and_(self.eqp(i, a.index), self.eqp(t, b.index)) for a, b in self._edges_p
        ])

    def label_p(self, i: int, prop: str) -> Expr:
        key = (i, prop)
        node = self._lp.get(key)
        if node is None:
            holders = [s.index for s in self.kp.states if prop in self.kp.label_of(s)]
            node = self.f.or_(*[self.eqp(i, s) for s in holders])
            self._lp[key] = node
        return node

    def label_q(self, j: int, prop: str) -> Expr:
        key = (j, prop)
        node = self._lq.get(key)
        if node is None:
            holders = [q.index for q in self.kq.states if prop in self.kq.label_of(q)]
            node = self.f.or_(*[self.eqq(j, q) for q in holders])
            self._lq[key] = node
        return node

    def pred_expr(self, pred: hs.Pred, i: int, j: int) -> Expr:
        f = self.f
        if isinstance(pred, hs.TrueConst):
            return f.TRUE
        if isinstance(pred, hs.FalseConst):
            return f.FALSE
        if isinstance(pred, hs.LeftAtom):
            return self.label_p(i, pred.prop)
        if isinstance(pred, hs.RightAtom):
            return self.label_q(j, pred.prop)
        if isinstance(pred, hs.Not):
            return f.not_(self.pred_expr(pred.arg, i, j))
        if isinstance(pred, hs.And):
            return f.and_(self.pred_expr(pred.left, i, j), self.pred_expr(pred.right, i, j))
        if isinstance(pred, hs.Or):
            return f.or_(self.pred_expr(pred.left, i, j), self.pred_expr(pred.right, i, j))
        if isinstance(pred, hs.Implies):
            return f.implies(self.pred_expr(pred.left, i, j), self.pred_expr(pred.right, i, j))
        if isinstance(pred, hs.Iff):
            return f.iff(self.pred_expr(pred.left, i, j), self.pred_expr(pred.right, i, j))
        if isinstance(pred, hs.MatchAll):
            raise EncodeError("match-all must be expanded against the AP sets before encoding")
        raise TypeError(f"not a predicate node: {pred!r}")

    # successor gadgets, sim-ae direction: "some slot r holds a delta_Q-successor
    # of slot j's state and is related to x_t"
    def hit(self, t: int, b: int) -> Expr:
        key = (t, b)
        node = self._hit.get(key)
        if node is None:
            f = self.f
            node = f.or_(*[
                f.and_(self.eqq(r, b), self.sim[(t, r)]) for r in range(1, self.k + 1)
            ])
            self._hit[key] = node
        return node

    def succhit(self, t: int, a: int) -> Expr:
        key = (t, a)
        node = self._succhit.get(key)
        if node is None:
            node = self.f.or_(*[self.hit(t, b) for b in self._succ_q_ord[a]])
            self._succhit[key] = node
        return node

    def match(self, t: int, j: int) -> Expr:
        f = self.f
        return f.or_(*[
            f.and_(self.eqq(j, a), self.succhit(t, a)) for a in range(len(self.kq.states))
        ])

    # successor gadgets, sim-ea direction: "every slot holding a successor of
    # slot j's state is related to x_t"
    def cover(self, t: int, b: int) -> Expr:
        key = (t, b)
        node = self._cover.get(key)
        if node is None:
            f = self.f
            node = f.and_(*[
                f.implies(self.eqq(r, b), self.sim[(t, r)]) for r in range(1, self.k + 1)
            ])
            self._cover[key] = node
        return node

    def reqd(self, t: int, a: int) -> Expr:
        key = (t, a)
        node = self._reqd.get(key)
        if node is None:
            node = self.f.and_(*[self.cover(t, b) for b in self._succ_q_ord[a]])
            self._reqd[key] = node
        return node

    def propagate_to(self, j: int, t: int) -> Expr:
        f = self.f
        return f.and_(*[
            f.implies(self.eqq(j, a), self.reqd(t, a)) for a in range(len(self.kq.states))
        ])

    def succ_t(self, i: int, t: int) -> Expr:
        f = self.f
        return f.and_(*[
            f.implies(self.sim[(i, j)], self.propagate_to(j, t)) for j in range(1, self.k + 1)
        ])


def _check_common(kp: KripkeStructure, kq: KripkeStructure, pred: hs.Pred) -> None:
    if not kp.states or not kq.states:
        raise EncodeError("both structures must have at least one state")
    if hs.uses_match_all(pred):
        raise EncodeError("match-all must be expanded against the AP sets before encoding")


def encode_sim_ea(kp: KripkeStructure, kq: KripkeStructure, pred: hs.Pred, n: int) -> Encoding:
    """Encode: a lasso of length n in K_P simulates all of K_Q.

    K_Q should already be reachable-restricted; its full state set is
    enumerated by the y slots (k = |S_Q|), so unreachable junk states make the
    query needlessly strict.
    """
    _check_common(kp, kq, pred)
    if n < 1:
        raise EncodeError(f"lasso length must be positive, got {n}")
    k = len(kq.states)
    fac = ExprFactory()
    sh = _Shared(fac, kp, kq, n, k)
    f = fac

    legal = f.and_(*[sh.legal_p(i) for i in range(1, n + 1)],
                   *[sh.legal_q(j) for j in range(1, k + 1)])
    # exhaustive coverage of S_Q: k = |S_Q| pairwise-distinct slots; all
    # families are invariant under permuting y slots, so the canonical
    # ascending assignment y_j = j-1 is conjoined (entailed, breaks symmetry)
    distinct = f.and_(
        *[
            f.implies(f.and_(sh.legal_q(j), sh.legal_q(r)), sh.neq_q(j, r))
            for j in range(1, k + 1)
            for r in range(j + 1, k + 1)
        ],
        *[sh.eqq(j, j - 1) for j in range(1, k + 1)],
    )
    initial = f.and_(sh.init_p(1), *[
        f.implies(sh.init_q(j), sh.sim[(1, j)]) for j in range(1, k + 1)
    ])
    path = f.and_(*[
        f.and_(sh.edge_p(i, i + 1), sh.succ_t(i, i + 1)) for i in range(1, n)
    ])
    loop = f.or_(*[
        f.and_(sh.edge_p(n, i), sh.succ_t(n, i)) for i in range(1, n + 1)
    ])
    pred_part = f.and_(*[
        f.implies(sh.sim[(i, j)], sh.pred_expr(pred, i, j))
        for i in range(1, n + 1) for j in range(1, k + 1)
    ])

    parts = [
        ("legal-states", legal),
        ("exhaustive-q", distinct),
        ("initial-sim", initial),
        ("path-step", path),
        ("loop-back", loop),
        ("pred", pred_part),
    ]
    return Encoding(
        kind="sim-ea", kp=kp, kq=kq, pred=pred, n=n, k=k,
        slots_p=sh.slots_p, slots_q=sh.slots_q, sim_name=sh.sim_name,
        parts=parts, var_order=sh.var_order,
    )


def encode_sim_ae(kp: KripkeStructure, kq: KripkeStructure, pred: hs.Pred, k: int) -> Encoding:
    """Encode: some subset of at most k states of K_Q simulates all of K_P.

    K_P should already be reachable-restricted; its full state set is
    enumerated by the x slots (n = |S_P|)."""
    _check_common(kp, kq, pred)
    if not 1 <= k <= len(kq.states):
        raise EncodeError(f"subset bound k={k} outside 1..{len(kq.states)}")
    n = len(kp.states)
    fac = ExprFactory()
    sh = _Shared(fac, kp, kq, n, k)
    f = fac

    # y slots may repeat values in principle; restricting them to strictly
    # ascending order is complete (any relation reaches a canonical model by
    # permuting slots and leaving spare slots unrelated) and prunes hard.
    # The per-slot value bounds are entailed by ascending order + legality.
    legal = f.and_(
        *[sh.legal_p(i) for i in range(1, n + 1)],
        *[sh.legal_q(j) for j in range(1, k + 1)],
        *[sh.lt_q(j, j + 1) for j in range(1, k)],
        *[sh.ge_const_q(j, j - 1) for j in range(1, k + 1)],
        *[sh.le_const_q(j, len(kq.states) - 1 - (k - j)) for j in range(1, k + 1)],
    )
    # exhaustive coverage of S_P: n = |S_P| pairwise-distinct slots; canonical
    # ascending assignment x_i = i-1 conjoined (entailed, breaks symmetry)
    distinct = f.and_(
        *[
            f.implies(f.and_(sh.legal_p(i), sh.legal_p(t)), sh.neq_p(i, t))
            for i in range(1, n + 1)
            for t in range(i + 1, n + 1)
        ],
        *[sh.eqp(i, i - 1) for i in range(1, n + 1)],
    )
    initial = f.and_(*[
        f.implies(sh.init_p(i), f.or_(*[
            f.and_(sh.init_q(j), sh.sim[(i, j)]) for j in range(1, k + 1)
        ]))
        for i in range(1, n + 1)
    ])
    succ = f.and_(*[
        f.implies(sh.edge_p(i, t), f.and_(*[
            f.implies(sh.sim[(i, j)], sh.match(t, j)) for j in range(1, k + 1)
        ]))
        for i in range(1, n + 1) for t in range(1, n + 1)
    ])
    pred_part = f.and_(*[
        f.implies(sh.sim[(i, j)], sh.pred_expr(pred, i, j))
        for i in range(1, n + 1) for j in range(1, k + 1)
    ])

    parts = [
        ("legal-states", legal),
        ("exhaustive-p", distinct),
        ("initial-match", initial),
        ("successor-match", succ),
        ("pred", pred_part),
    ]
    return Encoding(
        kind="sim-ae", kp=kp, kq=kq, pred=pred, n=n, k=k,
        slots_p=sh.slots_p, slots_q=sh.slots_q, sim_name=sh.sim_name,
        parts=parts, var_order=sh.var_order,
    )


def _slot_states(enc: Encoding, model: Mapping[str, bool]) -> tuple[list[StateId], list[StateId]]:
    xs: list[StateId] = []
    for slot in enc.slots_p:
        val = slot.decode(model)
        if val >= len(enc.kp.states):
            raise DecodeError(f"slot x{slot.index} decodes to illegal ordinal {val}")
        xs.append(enc.kp.states[val])
    ys: list[StateId] = []
    for slot in enc.slots_q:
        val = slot.decode(model)
        if val >= len(enc.kq.states):
            raise DecodeError(f"slot y{slot.index} decodes to illegal ordinal {val}")
        ys.append(enc.kq.states[val])
    return xs, ys


def _sim_values(enc: Encoding, model: Mapping[str, bool]) -> dict[tuple[int, int], bool]:
    return {ij: bool(model.get(name, False)) for ij, name in enc.sim_name.items()}


def decode_witness_ae(enc: Encoding, model: Mapping[str, bool]) -> SimWitnessAE:
    if enc.kind != "sim-ae":
        raise DecodeError(f"expected a sim-ae encoding, got {enc.kind}")
    xs, ys = _slot_states(enc, model)
    sim = _sim_values(enc, model)
    relation = set()
    used = set()
    for (i, j), v in sim.items():
        if v:
            relation.add((xs[i - 1], ys[j - 1]))
            used.add(ys[j - 1])
    return SimWitnessAE(relation=frozenset(relation), used_q=frozenset(used))


def decode_witness_ea(enc: Encoding, model: Mapping[str, bool]) -> SimWitnessEA:
    if enc.kind != "sim-ea":
        raise DecodeError(f"expected a sim-ea encoding, got {enc.kind}")
    xs, ys = _slot_states(enc, model)
    sim = _sim_values(enc, model)
    n = enc.n
    trans_q = enc.kq.trans

    def succ_sem(target: int) -> bool:
        # every sim-related slot at the last position propagates into `target`
        for j in range(1, enc.k + 1):
            if not sim[(n, j)]:
                continue
            for r in range(1, enc.k + 1):
                if (ys[j - 1], ys[r - 1]) in trans_q and not sim[(target, r)]:
                    return False
        return True

    loop_start = 0
    for i in range(1, n + 1):
        if (xs[n - 1], xs[i - 1]) in enc.kp.trans and succ_sem(i):
            loop_start = i
            break
    if loop_start == 0:
        raise DecodeError("model satisfies no loop-back disjunct")
    lasso = LassoPath(prefix=tuple(xs[: loop_start - 1]), loop=tuple(xs[loop_start - 1 :]))
    pos_relation = {
        i: frozenset(ys[j - 1] for j in range(1, enc.k + 1) if sim[(i, j)])
        for i in range(1, n + 1)
    }
    return SimWitnessEA(lasso=lasso, pos_relation=pos_relation)
