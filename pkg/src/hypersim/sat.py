"""Conflict-driven clause learning SAT solver and pluggable solver backends.

The embedded solver is a standard CDCL loop: two-watched-literal propagation,
first-UIP learning with basic clause minimization, VSIDS-style activities with
phase saving, Luby restarts, and LBD-guided learnt-clause reduction.  External
solvers are driven through files in DIMACS format and the conventional
's SATISFIABLE' / 'v ...' output protocol.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from heapq import heappush, heappop
from pathlib import Path
from typing import Mapping, Sequence

from .circuit import CnfInstance, export_dimacs


class SolverBackendError(Exception):
    """Backend failed to produce an answer (distinct from UNSAT)."""


@dataclass
class SatResult:
    status: str  # "sat", "unsat", or "unknown" (conflict budget exhausted)
    model: dict[int, bool] | None = None
    conflicts: int = 0
    decisions: int = 0

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"


class CdclSolver:
    _VAR_DECAY = 0.95
    _RESCALE = 1e100

    def __init__(self, num_vars: int, clauses: Sequence[Sequence[int]]):
        self.nv = num_vars
        self.assign = bytearray(b"\x02" * num_vars)
        self.level = [0] * num_vars
        self.reason: list[list[int] | None] = [None] * num_vars
        self.polarity = bytearray(b"\x01" * num_vars)  # default phase: false
        self.activity = [0.0] * num_vars
        self.var_inc = 1.0
        self.order: list[tuple[float, int]] = []
        self.watches: list[list[list[int]]] = [[] for _ in range(2 * num_vars)]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.learnts: list[list[int]] = []
        self.lbd: dict[int, int] = {}
        self.ok = True
        for cl in clauses:
            self._add_input_clause(cl)
        for v in range(num_vars):
            heappush(self.order, (0.0, v))

    # ---- construction ----

    def _add_input_clause(self, cl: Sequence[int]) -> None:
        if not self.ok:
            return
        seen: set[int] = set()
        lits: list[int] = []
        for l in cl:
            v = abs(l) - 1
            enc = 2 * v + (1 if l < 0 else 0)
            if enc ^ 1 in seen:
                return  # tautology
            if enc not in seen:
                seen.add(enc)
                lits.append(enc)
        if not lits:
            self.ok = False
            return
        if len(lits) == 1:
            val = self.assign[lits[0] >> 1]
            if val == 2:
                self._enqueue(lits[0], None)
            elif val != (lits[0] & 1):
                self.ok = False
            return
        self.watches[lits[0]].append(lits)
        self.watches[lits[1]].append(lits)

    # ---- assignment/trail ----

    def _enqueue(self, lit: int, reason: list[int] | None) -> None:
        v = lit >> 1
        self.assign[v] = lit & 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        bound = self.trail_lim[lvl]
        order = self.order
        for i in range(len(self.trail) - 1, bound - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            self.polarity[v] = lit & 1
            self.assign[v] = 2
            self.reason[v] = None
            heappush(order, (-self.activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    # ---- propagation ----

    def _propagate(self) -> list[int] | None:
        trail = self.trail
        watches = self.watches
        assign = self.assign
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            fl = p ^ 1
            ws = watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if assign[first >> 1] == (first & 1):
                    ws[j] = c
                    j += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    lk = c[k]
                    if assign[lk >> 1] != ((lk & 1) ^ 1):
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(c)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = c
                j += 1
                if assign[first >> 1] == ((first & 1) ^ 1):
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    return c
                v = first >> 1
                assign[v] = first & 1
                self.level[v] = len(self.trail_lim)
                self.reason[v] = c
                trail.append(first)
            del ws[j:]
        return None

    # ---- learning ----

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > self._RESCALE:
            inv = 1.0 / self._RESCALE
            for u in range(self.nv):
                self.activity[u] *= inv
            self.var_inc *= inv
        if self.assign[v] == 2:
            heappush(self.order, (-self.activity[v], v))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int, int]:
        nv_seen = bytearray(self.nv)
        to_clear: list[int] = []
        learnt: list[int] = []
        path = 0
        p = -1
        idx = len(self.trail)
        cur = len(self.trail_lim)
        c = confl
        while True:
            for q in (c if p < 0 else c[1:]):
                v = q >> 1
                if not nv_seen[v] and self.level[v] > 0:
                    nv_seen[v] = 1
                    to_clear.append(v)
                    self._bump(v)
                    if self.level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while True:
                idx -= 1
                if nv_seen[self.trail[idx] >> 1]:
                    break
            p = self.trail[idx]
            path -= 1
            if path == 0:
                break
            c = self.reason[p >> 1]
        # basic minimization: drop lits implied by their reason within the seen set
        kept = []
        for q in learnt:
            r = self.reason[q >> 1]
            if r is None:
                kept.append(q)
                continue
            for x in r[1:]:
                xv = x >> 1
                if not nv_seen[xv] and self.level[xv] > 0:
                    kept.append(q)
                    break
        learnt = [p ^ 1] + kept
        for v in to_clear:
            nv_seen[v] = 0
        if len(learnt) == 1:
            bt = 0
        else:
            mx = 1
            for i in range(2, len(learnt)):
                if self.level[learnt[i] >> 1] > self.level[learnt[mx] >> 1]:
                    mx = i
            learnt[1], learnt[mx] = learnt[mx], learnt[1]
            bt = self.level[learnt[1] >> 1]
        lbd = len({self.level[q >> 1] for q in learnt})
        return learnt, bt, lbd

    def _record(self, learnt: list[int], lbd: int) -> None:
        if len(learnt) == 1:
            self._enqueue(learnt[0], None)
            return
        self.watches[learnt[0]].append(learnt)
        self.watches[learnt[1]].append(learnt)
        self.learnts.append(learnt)
        self.lbd[id(learnt)] = lbd
        self._enqueue(learnt[0], learnt)

    def _reduce_db(self) -> None:
        locked = {id(r) for r in self.reason if r is not None}
        scored = sorted(
            self.learnts,
            key=lambda c: (self.lbd.get(id(c), 99), len(c)),
        )
        keep_n = len(scored) // 2
        keep: list[list[int]] = []
        dead: set[int] = set()
        for i, c in enumerate(scored):
            if i < keep_n or self.lbd.get(id(c), 99) <= 3 or id(c) in locked:
                keep.append(c)
            else:
                dead.add(id(c))
        if not dead:
            return
        self.learnts = keep
        for d in dead:
            self.lbd.pop(d, None)
        for ws in self.watches:
            ws[:] = [c for c in ws if id(c) not in dead]

    # ---- main loop ----

    def _pick_branch(self) -> int:
        order = self.order
        assign = self.assign
        while order:
            _, v = heappop(order)
            if assign[v] == 2:
                return v
        for v in range(self.nv):
            if assign[v] == 2:
                return v
        return -1

    @staticmethod
    def _luby(i: int) -> int:
        # 1,1,2,1,1,2,4,1,1,2,1,1,2,4,8,... (i is 0-based)
        x = i + 1
        while True:
            k = 1
            while (1 << k) - 1 < x:
                k += 1
            if (1 << k) - 1 == x:
                return 1 << (k - 1)
            x = x - (1 << (k - 1)) + 1

    def solve(self, max_conflicts: int | None = None) -> SatResult:
        if not self.ok:
            return SatResult("unsat")
        if self._propagate() is not None:
            return SatResult("unsat")
        conflicts = 0
        decisions = 0
        restart_idx = 0
        restart_limit = 128 * self._luby(0)
        since_restart = 0
        reduce_at = 4000
        while True:
            confl = self._propagate()
            if confl is not None:
                if not self.trail_lim:
                    return SatResult("unsat", conflicts=conflicts, decisions=decisions)
                conflicts += 1
                since_restart += 1
                learnt, bt, lbd = self._analyze(confl)
                self._cancel_until(bt)
                self._record(learnt, lbd)
                self.var_inc /= self._VAR_DECAY
                if conflicts >= reduce_at:
                    self._reduce_db()
                    reduce_at += 2000 + 500 * len(str(conflicts))
                if max_conflicts is not None and conflicts >= max_conflicts:
                    self._cancel_until(0)
                    return SatResult("unknown", conflicts=conflicts, decisions=decisions)
                continue
            if since_restart >= restart_limit:
                restart_idx += 1
                restart_limit = 128 * self._luby(restart_idx)
                since_restart = 0
                self._cancel_until(0)
                continue
            if len(self.trail) == self.nv:
                model = {v + 1: self.assign[v] == 0 for v in range(self.nv)}
                return SatResult("sat", model, conflicts=conflicts, decisions=decisions)
            v = self._pick_branch()
            if v < 0:
                model = {u + 1: self.assign[u] == 0 for u in range(self.nv)}
                return SatResult("sat", model, conflicts=conflicts, decisions=decisions)
            decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(2 * v + self.polarity[v], None)


class EmbeddedBackend:
    """In-process CDCL solver."""

    name = "embedded"

    def solve_cnf(self, cnf: CnfInstance) -> SatResult:
        solver = CdclSolver(cnf.num_vars, cnf.clauses)
        return solver.solve()


class ExternalBackend:
    """Subprocess backend speaking the DIMACS file / 's ...'+'v ...' protocol."""

    def __init__(self, command: Sequence[str] | str):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise SolverBackendError("external solver command is empty")
        self.name = "external:" + " ".join(self.command)

    def solve_cnf(self, cnf: CnfInstance) -> SatResult:
        with tempfile.TemporaryDirectory(prefix="hypersim-sat-") as tmp:
            path = Path(tmp) / "instance.cnf"
            path.write_text(export_dimacs(cnf))
            try:
                proc = subprocess.run(
                    self.command + [str(path)],
                    capture_output=True,
                    text=True,
                    timeout=3600,
                )
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise SolverBackendError(f"solver process failed: {exc}") from exc
        return _parse_solver_output(proc.stdout, proc.returncode, cnf.num_vars)


def _parse_solver_output(stdout: str, returncode: int, num_vars: int) -> SatResult:
    status = None
    values: list[int] = []
    for raw in stdout.splitlines():
        line = raw.strip()
        if line.startswith("s "):
            answer = line[2:].strip()
            if answer == "SATISFIABLE":
                status = "sat"
            elif answer == "UNSATISFIABLE":
                status = "unsat"
            else:
                raise SolverBackendError(f"unrecognized answer line {line!r}")
        elif line.startswith("v ") or line == "v":
            for tok in line[1:].split():
                try:
                    values.append(int(tok))
                except ValueError as exc:
                    raise SolverBackendError(f"malformed model line {line!r}") from exc
    if status is None:
        raise SolverBackendError(
            f"solver produced no answer line (exit code {returncode})"
        )
    if status == "unsat":
        return SatResult("unsat")
    model = {v: False for v in range(1, num_vars + 1)}
    for lit in values:
        if lit == 0:
            continue
        if abs(lit) <= num_vars:
            model[abs(lit)] = lit > 0
    return SatResult("sat", model)


def solve(cnf: CnfInstance, backend=None) -> SatResult:
    """Solve a clause set.  The model of a sat answer assigns every variable,
    named or auxiliary.  Backend failures raise SolverBackendError; they are
    never conflated with an unsat answer."""
    backend = backend or EmbeddedBackend()
    result = backend.solve_cnf(cnf)
    if result.is_sat and result.model is not None:
        for v in range(1, cnf.num_vars + 1):
            result.model.setdefault(v, False)
    return result


def check_model(cnf: CnfInstance, model: Mapping[int, bool]) -> bool:
    """Clause-by-clause check used in tests and after external solving."""
    for clause in cnf.clauses:
        if not any(model.get(abs(l), False) == (l > 0) for l in clause):
            return False
    return True
