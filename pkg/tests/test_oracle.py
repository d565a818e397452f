"""Lasso semantics, witness validators, falsifiers, and the cover reduction."""

import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypersim.encoder import SimWitnessAE, encode_sim_ae
from hypersim.hyperspec import eval_predicate, parse_predicate, parse_property
from hypersim.kripke import LassoTrace, StateId, parse_kripke, trace_of, LassoPath
from hypersim.oracle import (
    brute_force_vertex_cover,
    check_box_on_pair,
    falsify_exists_forall,
    falsify_forall_exists,
    gen_vertex_cover_instance,
    make_graph,
    match_lasso,
    parse_graph,
    reverify_counterexample,
    synchronize_bound,
    validate_witness_ae,
    validate_witness_ea,
)
from hypersim.sat import solve

from helpers import rand_lasso_trace, rand_pred, rand_structure

DATA = Path(__file__).parent / "data"


def intro():
    kp = parse_kripke((DATA / "k1.kr").read_text())
    kq = parse_kripke((DATA / "k2.kr").read_text())
    return kp, kq


def lab(*props: str) -> frozenset:
    return frozenset(props)


def test_synchronize_bound_examples():
    t = lambda p, l: LassoTrace(prefix=(lab(),) * p, loop=(lab(),) * l)
    assert synchronize_bound(t(0, 1), t(0, 1)) .horizon == 1
    b = synchronize_bound(t(1, 2), t(0, 3))
    assert (b.prefix, b.loop, b.horizon) == (1, 6, 7)
    b = synchronize_bound(t(2, 2), t(3, 4))
    assert (b.prefix, b.loop, b.horizon) == (3, 4, 7)


def test_check_box_detects_late_divergence():
    # traces agree on the prefix and drift apart deep inside the joint loop
    pred = parse_predicate("l.a <-> r.a")
    t1 = LassoTrace(prefix=(), loop=(lab("a"), lab("a"), lab()))
    t2 = LassoTrace(prefix=(), loop=(lab("a"),) * 2)
    assert check_box_on_pair(pred, t1, t1)
    assert not check_box_on_pair(pred, t1, t2)


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=120, deadline=None)
def test_check_box_agrees_with_pointwise_evaluation(seed):
    rng = random.Random(seed)
    t1 = rand_lasso_trace(rng, ("a", "b"))
    t2 = rand_lasso_trace(rng, ("a", "b"))
    pred = rand_pred(rng, ("a", "b"), ("a", "b"))
    bound = synchronize_bound(t1, t2)
    expected = all(
        eval_predicate(pred, t1.at(i), t2.at(i)) for i in range(4 * bound.horizon)
    )
    assert check_box_on_pair(pred, t1, t2) == expected


def test_validator_ae_accepts_identity_relation():
    k = parse_kripke("states: s t\ninit: s\nap: a\nlabel t: a\ntrans s -> t\ntrans t -> s")
    rel = frozenset((s, s) for s in k.states)
    w = SimWitnessAE(relation=rel, used_q=frozenset(k.states))
    assert validate_witness_ae(k, k, parse_predicate("l.a <-> r.a"), w) == []


def test_validator_ae_names_broken_obligation():
    k = parse_kripke("states: s t\ninit: s\nap: a\ntrans s -> t\ntrans t -> s")
    s, t = k.states
    pred = parse_predicate("true")
    missing_succ = SimWitnessAE(relation=frozenset({(s, s)}), used_q=frozenset({s}))
    out = validate_witness_ae(k, k, pred, missing_succ)
    assert any(v.startswith("successor: (s,s,t)") for v in out)
    no_init = SimWitnessAE(relation=frozenset({(t, t)}), used_q=frozenset({t}))
    assert any(v.startswith("initial:") for v in validate_witness_ae(k, k, pred, no_init))
    bad_used = SimWitnessAE(relation=rel_id(k), used_q=frozenset({s}))
    assert any("used-q-mismatch" in v for v in validate_witness_ae(k, k, pred, bad_used))


def rel_id(k):
    return frozenset((s, s) for s in k.states)


def test_validator_ae_rejects_foreign_states():
    k1 = parse_kripke("states: s\ninit: s\nap: a\ntrans s -> s")
    k2 = parse_kripke("states: q\ninit: q\nap: a\ntrans q -> q")
    alien = StateId(name="zz", index=7)
    w = SimWitnessAE(relation=frozenset({(alien, k2.states[0])}), used_q=frozenset({k2.states[0]}))
    out = validate_witness_ae(k1, k2, parse_predicate("true"), w)
    assert out and all(v.startswith("foreign-state:") for v in out)


def test_validator_ea_accepts_and_rejects():
    k = parse_kripke("states: s\ninit: s\nap: a\nlabel s: a\ntrans s -> s")
    pred = parse_predicate("l.a <-> r.a")
    lasso = LassoPath(prefix=(), loop=(k.states[0],))
    good = validate_witness_ea(k, k, pred, ea_witness(lasso, {1: {k.states[0]}}))
    assert good == []
    empty_pos = validate_witness_ea(k, k, pred, ea_witness(lasso, {1: set()}))
    assert any(v.startswith("initial:") for v in empty_pos)


def ea_witness(lasso, pos):
    from hypersim.encoder import SimWitnessEA

    return SimWitnessEA(lasso=lasso, pos_relation={i: frozenset(s) for i, s in pos.items()})


def test_validator_ea_checks_position_keys():
    k = parse_kripke("states: s\ninit: s\nap: a\ntrans s -> s")
    lasso = LassoPath(prefix=(), loop=(k.states[0],))
    out = validate_witness_ea(k, k, parse_predicate("true"), ea_witness(lasso, {2: {k.states[0]}}))
    assert any(v.startswith("positions:") for v in out)


def test_match_lasso_follows_self_loop():
    k = parse_kripke("states: q\ninit: q\nap: a\nlabel q: a\ntrans q -> q")
    t = LassoTrace(prefix=(), loop=(lab("a"),))
    got = match_lasso(k, parse_predicate("l.a <-> r.a"), t, bound=4)
    assert got is not None and trace_of(k, got).at(0) == lab("a")


def test_match_lasso_returns_none_when_pred_is_unsatisfiable():
    k = parse_kripke("states: q\ninit: q\nap: a\ntrans q -> q")
    t = LassoTrace(prefix=(), loop=(lab("a"),))
    assert match_lasso(k, parse_predicate("l.a & !l.a"), t, bound=8) is None


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=60, deadline=None)
def test_match_lasso_result_verifies_and_respects_bound(seed):
    rng = random.Random(seed)
    kq = rand_structure(rng, max_states=4)
    t_p = rand_lasso_trace(rng, ("a", "b"), max_prefix=2, max_loop=3)
    pred = rand_pred(rng, ("a", "b"), kq.ap)
    bound = t_p.prefix_len + 2 * t_p.loop_len * len(kq.states)
    got = match_lasso(kq, pred, t_p, bound)
    if got is not None:
        assert got.is_valid_in(kq)
        assert got.total_len <= bound
        assert check_box_on_pair(pred, t_p, trace_of(kq, got))


def test_falsifier_ae_finds_the_intro_counterexample():
    kp, kq = intro()
    pred = parse_property((DATA / "phi1.hp").read_text()).pred
    cex = falsify_forall_exists(kp, kq, pred, depth=3)
    assert cex is not None
    assert [s.name for s in cex.p_path] == ["s1", "s2", "s3"]
    assert cex.depth == 3
    assert reverify_counterexample(kp, kq, pred, cex)


def test_falsifier_ae_absent_on_identical_structures():
    kp, _ = intro()
    pred = parse_predicate("l.a <-> r.a")
    assert falsify_forall_exists(kp, kp, pred, depth=6) is None


def test_falsifier_ea_refutes_false_predicate_immediately():
    kp, kq = intro()
    pred = parse_predicate("l.a & !l.a")
    cex = falsify_exists_forall(kp, kq, pred, depth=1)
    assert cex is not None
    assert cex.depth == 1 and len(cex.p_path) == 1
    assert reverify_counterexample(kp, kq, pred, cex)


def test_falsifier_ea_absent_when_property_holds():
    k = parse_kripke("states: s\ninit: s\nap: a\nlabel s: a\ntrans s -> s")
    assert falsify_exists_forall(k, k, parse_predicate("l.a <-> r.a"), depth=6) is None


def test_reverify_rejects_tampered_paths():
    kp, kq = intro()
    pred = parse_property((DATA / "phi1.hp").read_text()).pred
    cex = falsify_forall_exists(kp, kq, pred, depth=3)
    assert cex is not None
    from hypersim.oracle import Counterexample

    forged = Counterexample(
        side=cex.side, p_path=cex.p_path[:-1] + (kp.states[3],), depth=cex.depth, note=""
    )
    assert reverify_counterexample(kp, kq, pred, forged) is False


# ------------------------------------------------------- vertex cover bridge


def vc_by_subsets(g, k):
    """Independent reimplementation: smallest cover size up to k, else None."""
    best = None
    for size in range(0, min(k, g.n) + 1):
        for combo in itertools.combinations(range(g.n), size):
            chosen = set(combo)
            if all(u in chosen or v in chosen for u, v in g.sorted_edges()):
                best = size
                break
        if best is not None:
            break
    return best


def check_vc_threshold(g, k_states):
    """Satisfiability of the match-all reduction at subset size k_states."""
    k1, k2 = gen_vertex_cover_instance(g)
    from hypersim.hyperspec import expand_match_all, MatchAll

    pred = expand_match_all(MatchAll(), k1.ap, k2.ap)
    enc = encode_sim_ae(k1, k2, pred, k_states)
    return solve(enc.to_cnf()).status == "sat"


def test_triangle_cover_thresholds():
    g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
    assert brute_force_vertex_cover(g, 3) == 2
    assert check_vc_threshold(g, 5) is True
    assert check_vc_threshold(g, 4) is False


def test_single_edge_cover_thresholds():
    g = make_graph(2, [(0, 1)])
    assert brute_force_vertex_cover(g, 2) == 1
    assert check_vc_threshold(g, 2) is True
    assert check_vc_threshold(g, 1) is False


def test_star_cover_thresholds():
    g = make_graph(5, [(0, i) for i in range(1, 5)])
    assert brute_force_vertex_cover(g, 5) == 1
    assert check_vc_threshold(g, 5) is True
    assert check_vc_threshold(g, 4) is False


def test_brute_force_cover_edge_cases():
    g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
    assert brute_force_vertex_cover(g, 1) is None
    assert brute_force_vertex_cover(make_graph(2, []), 0) == 0


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=60, deadline=None)
def test_brute_force_cover_matches_subset_enumeration(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 5)
    edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.5]
    g = make_graph(n, edges)
    for k in range(0, n + 1):
        assert brute_force_vertex_cover(g, k) == vc_by_subsets(g, k)


def test_make_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        make_graph(2, [(0, 0)])
    with pytest.raises(ValueError):
        make_graph(2, [(0, 2)])


def test_parse_graph():
    g = parse_graph("n 3\ne 0 1\ne 1 2\n")
    assert g.n == 3 and g.sorted_edges() == [(0, 1), (1, 2)]


def test_vc_reduction_needs_an_edge():
    with pytest.raises(ValueError):
        gen_vertex_cover_instance(make_graph(2, []))
