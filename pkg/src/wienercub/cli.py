"""Batch command surface: construct, verify, expand, solve, converge.

Every command is a pure function of its inputs (plus seed): identical
invocations write byte-identical files.  Exit codes: 0 success/verified,
1 verification failure, 2 usage error, 3 resource budget exceeded.
"""

import json
import sys
from fractions import Fraction

import click

from . import plots, sde
from .lie import pbw_coordinates
from .measures import gaussian_cubature, write_points_csv
from .wiener import (construct_degree3, construct_degree5, construct_degree7,
                     expected_signature, load_formula, save_formula,
                     verify_formula, write_residual_report)
from .words import word_str

EXIT_VERIFICATION_FAILED = 1
EXIT_BUDGET = 3


@click.group()
def main():
    """Cubature on Wiener space: build, check and use degree 3/5/7 formulas."""


def _parse_time(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"not a number: {text!r}")


@main.command()
@click.option("--degree", type=click.Choice(["3", "5", "7"]), required=True)
@click.option("--dim", type=int, required=True, help="Brownian dimension d.")
@click.option("--gaussian-rule", "rule",
              type=click.Choice(["auto", "axis", "hermite", "rational"]),
              default="auto", show_default=True)
@click.option("--x", type=float, default=0.5, show_default=True,
              help="Degree-5 mixing parameter.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Formula file path [default: cubature_deg<m>_dim<d>.json].")
@click.option("--dump-points", type=click.Path(dir_okay=False), default=None,
              help="Also write the Gaussian rule's points/weights as CSV.")
def construct(degree, dim, rule, x, out, dump_points):
    """Build a cubature formula and write it as JSON."""
    degree = int(degree)
    if degree == 7 and dim != 3:
        raise click.UsageError("the degree-7 construction requires --dim 3")
    try:
        gaussian = gaussian_cubature(dim, degree, rule)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if degree == 3:
        formula = construct_degree3(gaussian)
        size_formula = f"S_{dim}(3)=N_{dim}(3)={len(formula)}"
    elif degree == 5:
        formula = construct_degree5(gaussian, x)
        size_formula = f"S_{dim}(5)=2N_{dim}(5)=2*{len(gaussian)}={len(formula)}"
    else:
        formula = construct_degree7(gaussian)
        size_formula = (f"S_3(7)=N_3(7)B_4(5)={len(gaussian)}*16={len(formula)}")
    if out is None:
        out = f"cubature_deg{degree}_dim{dim}.json"
    save_formula(formula, out)
    if dump_points:
        write_points_csv(gaussian, dump_points)
    click.echo(f"wrote {out}: {len(formula)} entries ({size_formula})")


@main.command()
@click.argument("formula_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--time", "time_text", default="1", show_default=True,
              help="Horizon T at which to verify.")
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Residual CSV path [default: <formula>.residuals.csv].")
@click.option("--plot/--no-plot", default=True, show_default=True,
              help="Render the worst-residual chart next to the CSV.")
def verify(formula_file, time_text, tol, report, plot):
    """Check a formula file against the expected signature, word by word."""
    T = _parse_time(time_text)
    try:
        formula = load_formula(formula_file)
    except (ValueError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot load {formula_file}: {exc}")
    result = verify_formula(formula, float(T))
    if report is None:
        report = formula_file + ".residuals.csv"
    write_residual_report(result, report)
    if plot:
        plots.plot_residuals(result, report + ".png")
    status = "OK" if result.max_residual <= tol else "FAIL"
    click.echo(f"{status}: degree {formula.degree}, dim {formula.dim}, "
               f"{result.words_checked} words, max residual "
               f"{float(result.max_residual):.3e} (tol {tol:.1e})")
    for word, lhs, rhs, err in result.worst_words[:3]:
        click.echo(f"  worst {word_str(word)}: lhs={float(lhs)!r} "
                   f"rhs={float(rhs)!r} |diff|={float(err):.3e}")
    if result.max_residual > tol:
        sys.exit(EXIT_VERIFICATION_FAILED)


@main.command()
@click.option("--dim", type=int, required=True)
@click.option("--degree", type=int, required=True)
@click.option("--basis", type=click.Choice(["word", "pbw"]), default="word",
              show_default=True)
@click.option("--time", "time_text", default="1", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "csv", "json"]),
              default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, allow_dash=True),
              default="-", show_default=True)
def expand(dim, degree, basis, time_text, fmt, out):
    """List expected-signature coefficients in the word or PBW basis."""
    if degree > 8 or degree < 0:
        raise click.UsageError("--degree must be between 0 and 8")
    if basis == "pbw" and dim > 3:
        raise click.UsageError("pbw mode supports --dim <= 3")
    T = _parse_time(time_text)
    element = expected_signature(dim, degree, T)
    if basis == "word":
        rows = [(word_str(w), c) for w, c in element.sorted_terms()]
    else:
        # exact solves stay cheap through degree 7 (largest anagram class
        # of the expected signature has 90 words); degree 8 hits a
        # 630-word class, so fall back to float coordinates there
        coords = pbw_coordinates(element, exact=degree <= 7)
        keys = sorted(coords, key=lambda k: (sum(len(w) for w in k), k))
        rows = [("".join(word_str(w) for w in key) or "()", coords[key])
                for key in keys]
    lines = _format_rows(rows, fmt, basis)
    if out == "-":
        click.echo("\n".join(lines))
    else:
        with open(out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        click.echo(f"wrote {out}: {len(rows)} coefficients")


def _format_rows(rows, fmt, basis):
    if fmt == "text":
        return [f"{label}: {value}" for label, value in rows]
    if fmt == "csv":
        header = f"{basis},coefficient,exact"
        return [header] + [f"{label},{float(value)!r},{value}"
                           for label, value in rows]
    doc = [{"key": label, "coefficient": float(value), "exact": str(value)}
           for label, value in rows]
    return [json.dumps(doc, indent=1, sort_keys=True)]


@main.command()
@click.option("--problem", "problem_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--formula", "formula_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["taylor", "logode", "mc"]),
              default="taylor", show_default=True)
@click.option("--steps", type=int, default=1, show_default=True)
@click.option("--ode-steps", type=int, default=8, show_default=True)
@click.option("--paths", type=int, default=10000, show_default=True,
              help="Monte Carlo sample paths (mc method only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--leaf-budget", type=int, default=10 ** 6, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report as JSON.")
def solve(problem_file, formula_file, method, steps, ode_steps, paths, seed,
          threads, leaf_budget, out):
    """Estimate E[payoff(X_T)] for a problem file with one formula."""
    try:
        problem = sde.load_problem(problem_file)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot load {problem_file}: {exc}")
    if method == "mc":
        report = sde.monte_carlo(problem, paths, max(steps, 1), seed=seed)
    else:
        formula = load_formula(formula_file)
        try:
            report = sde.cubature_tree(problem, formula, steps, method=method,
                                       ode_steps=ode_steps,
                                       leaf_budget=leaf_budget, threads=threads)
        except sde.LeafBudgetError as exc:
            click.echo(f"budget exceeded: {exc}", err=True)
            sys.exit(EXIT_BUDGET)
    doc = {"estimate": report.estimate, "method": report.method,
           "leaf_count": report.leaf_count, "step_count": report.step_count,
           "abs_error": report.abs_error, "std_error": report.std_error}
    click.echo(json.dumps(doc, sort_keys=True))
    click.echo(f"wall time: {report.wall_time:.3f}s", err=True)
    if out:
        with open(out, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")


@main.command()
@click.option("--problem", "problem_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--formula", "formula_files", required=True, multiple=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Formula file; repeat for several degrees.")
@click.option("--times", required=True,
              help="Comma-separated horizons, e.g. 0.5,0.25,0.125.")
@click.option("--method", type=click.Choice(["taylor", "logode"]),
              default="taylor", show_default=True)
@click.option("--steps", type=int, default=1, show_default=True)
@click.option("--ode-steps", type=int, default=8, show_default=True)
@click.option("--leaf-budget", type=int, default=10 ** 6, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="converge.csv",
              show_default=True)
@click.option("--plot/--no-plot", default=True, show_default=True,
              help="Render the log-log error figure next to the CSV.")
def converge(problem_file, formula_files, times, method, steps, ode_steps,
             leaf_budget, out, plot):
    """Measure weak error against horizon and fit convergence slopes."""
    try:
        problem = sde.load_problem(problem_file)
        horizons = [float(Fraction(t)) for t in times.split(",") if t.strip()]
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.UsageError(str(exc))
    if not horizons:
        raise click.UsageError("--times is empty")
    formulas = [load_formula(path) for path in formula_files]
    reference_fn = None
    if sde.analytic_mean(problem) is None:
        if problem.reference is None or len(horizons) > 1:
            raise click.UsageError(
                "no analytic reference available for this problem; converge "
                "needs one reference per horizon")
        reference_fn = lambda T: problem.reference
    try:
        result = sde.convergence_experiment(
            problem, formulas, horizons, method=method, steps=steps,
            reference_fn=reference_fn, ode_steps=ode_steps,
            leaf_budget=leaf_budget)
    except sde.LeafBudgetError as exc:
        click.echo(f"budget exceeded: {exc}", err=True)
        sys.exit(EXIT_BUDGET)
    sde.write_convergence_csv(result, out)
    if plot:
        plots.plot_convergence(result, out + ".png",
                               title=f"{method} weak error, {steps} step(s)")
    click.echo(f"wrote {out}: {len(result.rows)} rows")
    for degree in sorted(result.fits):
        fit = result.fits[degree]
        if fit.slope is None:
            click.echo(f"degree {degree}: {fit.note}")
        else:
            click.echo(f"degree {degree}: fitted slope {fit.slope:.3f} "
                       f"({fit.points_used} points)")


if __name__ == "__main__":
    main()
