#!/usr/bin/env python3
"""Regenerate the shipped formula files in assets/formulas/.

The degree-3 and degree-5 files (d <= 3) are small and kept in the
repository; the degree-7 file (~16 MB of derived data) is written next
to them but not committed -- rebuilding it takes under a second.
"""

import pathlib
import sys

from wienercub import (construct_degree3, construct_degree5, construct_degree7,
                       gaussian_cubature, save_formula, verify_formula)

TOLERANCES = {3: 1e-12, 5: 1e-10, 7: 1e-9}


def main():
    out_dir = pathlib.Path(__file__).resolve().parent.parent / "assets" / "formulas"
    out_dir.mkdir(parents=True, exist_ok=True)
    built = []
    for d in (1, 2, 3):
        built.append((construct_degree3(gaussian_cubature(d, 3)),
                      out_dir / f"degree3_dim{d}.json"))
        built.append((construct_degree5(gaussian_cubature(d, 5)),
                      out_dir / f"degree5_dim{d}.json"))
    built.append((construct_degree7(), out_dir / "degree7_dim3.json"))
    failed = False
    for formula, path in built:
        save_formula(formula, path)
        residual = verify_formula(formula).max_residual
        tol = TOLERANCES[formula.degree]
        status = "ok" if residual <= tol else "FAIL"
        if residual > tol:
            failed = True
        print(f"{path.name}: {len(formula)} entries, residual {residual:.3e} "
              f"(tol {tol:.0e}) {status}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
