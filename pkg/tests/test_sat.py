"""Embedded CDCL solver, external-backend protocol, and model checking."""

import itertools
import random
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypersim.circuit import CnfInstance
from hypersim.sat import (
    CdclSolver,
    EmbeddedBackend,
    ExternalBackend,
    SolverBackendError,
    check_model,
    solve,
)

SATCLI = [sys.executable, "-m", "hypersim.satcli"]


def php_clauses(pigeons: int, holes: int) -> tuple[int, list[list[int]]]:
    """Pigeonhole instance; unsatisfiable whenever pigeons > holes."""
    var = lambda i, j: i * holes + j + 1
    clauses = [[var(i, j) for j in range(holes)] for i in range(pigeons)]
    for j in range(holes):
        for i1 in range(pigeons):
            for i2 in range(i1 + 1, pigeons):
                clauses.append([-var(i1, j), -var(i2, j)])
    return pigeons * holes, clauses


def rand_cnf(rng: random.Random, max_vars: int = 6, max_clauses: int = 16):
    n = rng.randint(1, max_vars)
    clauses = []
    for _ in range(rng.randint(1, max_clauses)):
        width = rng.randint(1, min(3, 2 * n))
        lits = set()
        while len(lits) < width:
            v = rng.randint(1, n)
            lits.add(v if rng.random() < 0.5 else -v)
        clauses.append(sorted(lits, key=abs))
    return n, clauses


def brute_sat(n: int, clauses: list[list[int]]) -> bool:
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


def test_single_unit_clause():
    res = CdclSolver(1, [[1]]).solve()
    assert res.status == "sat"
    assert res.model[1] is True


def test_contradicting_units():
    assert CdclSolver(1, [[1], [-1]]).solve().status == "unsat"


def test_empty_clause_set_is_sat():
    res = CdclSolver(3, []).solve()
    assert res.status == "sat"


def test_pigeonhole_unsat_embedded():
    n, clauses = php_clauses(4, 3)
    assert n == 12 and len(clauses) == 22
    res = CdclSolver(n, clauses).solve()
    assert res.status == "unsat"
    assert res.conflicts > 0


def test_conflict_budget_reports_unknown():
    n, clauses = php_clauses(6, 5)
    assert CdclSolver(n, clauses).solve(max_conflicts=1).status == "unknown"


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=150, deadline=None)
def test_cdcl_agrees_with_brute_force(seed):
    n, clauses = rand_cnf(random.Random(seed))
    res = CdclSolver(n, clauses).solve()
    expected = brute_sat(n, clauses)
    assert res.status == ("sat" if expected else "unsat")
    if expected:
        cnf = CnfInstance(num_vars=n, clauses=clauses)
        model = {v: res.model.get(v, False) for v in range(1, n + 1)}
        assert check_model(cnf, model)


def test_solve_fills_unconstrained_variables():
    cnf = CnfInstance(num_vars=3, clauses=[[2]])
    res = solve(cnf)
    assert res.status == "sat"
    assert set(res.model) == {1, 2, 3}
    assert res.model[2] is True


def test_check_model_detects_violated_clause():
    cnf = CnfInstance(num_vars=2, clauses=[[1, 2]])
    assert check_model(cnf, {1: False, 2: False}) is False
    assert check_model(cnf, {1: True, 2: False}) is True


def test_external_backend_roundtrip_sat():
    cnf = CnfInstance(num_vars=2, clauses=[[1, -2], [2]])
    res = ExternalBackend(SATCLI).solve_cnf(cnf)
    assert res.status == "sat"
    model = {v: res.model.get(v, False) for v in (1, 2)}
    assert check_model(cnf, model)


def test_external_backend_roundtrip_unsat():
    n, clauses = php_clauses(4, 3)
    cnf = CnfInstance(num_vars=n, clauses=clauses)
    assert ExternalBackend(SATCLI).solve_cnf(cnf).status == "unsat"


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=15, deadline=None)
def test_backends_agree(seed):
    n, clauses = rand_cnf(random.Random(seed), max_vars=5, max_clauses=12)
    cnf = CnfInstance(num_vars=n, clauses=clauses)
    embedded = EmbeddedBackend().solve_cnf(cnf)
    external = ExternalBackend(SATCLI).solve_cnf(cnf)
    assert embedded.status == external.status


def test_external_backend_rejects_malformed_output():
    backend = ExternalBackend([sys.executable, "-c", "print('hello')"])
    cnf = CnfInstance(num_vars=1, clauses=[[1]])
    with pytest.raises(SolverBackendError):
        backend.solve_cnf(cnf)


def test_external_backend_command_string_is_split():
    backend = ExternalBackend(" ".join(SATCLI))
    cnf = CnfInstance(num_vars=1, clauses=[[1]])
    assert backend.solve_cnf(cnf).status == "sat"
