"""DIMACS command-line front end for the embedded solver.

Speaks the conventional solver protocol, so it can serve as the external
backend of the checker itself (useful for exercising the wire protocol) or as
a standalone solver:

    hypersim-sat instance.cnf

Prints 's SATISFIABLE' with 'v ...' model lines (exit 10) or
's UNSATISFIABLE' (exit 20).
"""

from __future__ import annotations

import argparse
import sys

from .circuit import parse_dimacs
from .sat import CdclSolver


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hypersim-sat", description=__doc__)
    parser.add_argument("cnf", help="path to a DIMACS CNF file")
    args = parser.parse_args(argv)

    try:
        with open(args.cnf, "r", encoding="utf-8") as fh:
            cnf = parse_dimacs(fh.read())
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    result = CdclSolver(cnf.num_vars, cnf.clauses).solve()
    print("c hypersim-sat")
    if not result.is_sat:
        print("s UNSATISFIABLE")
        return 20
    print("s SATISFIABLE")
    lits = [v if result.model.get(v, False) else -v for v in range(1, cnf.num_vars + 1)]
    lits.append(0)
    for i in range(0, len(lits), 20):
        print("v " + " ".join(str(l) for l in lits[i : i + 20]))
    return 10


if __name__ == "__main__":
    sys.exit(main())
