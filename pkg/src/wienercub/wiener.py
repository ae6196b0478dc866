"""Expected signature of time-augmented Brownian motion and the degree
3/5/7 cubature formulas, with an exhaustive word-basis verifier.

Both sides of the verification are computed independently: the left side
from the block-factorisation oracle for the expected signature, the
right side by exponentiating each formula entry's Lie polynomial and
averaging.  Comparison runs over every word of graded degree <= m.
"""

import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import dense
from .lie import (LiePolynomial, tree_from_nested, tree_graded_degree,
                  tree_to_nested, tree_word_expansion)
from .measures import bernoulli_full, gaussian_cubature, verify_moments
from .tensor import TensorElement, exp_series, graded_project
from .words import word_str, words_of_graded_degree

_EXACT_TYPES = (int, Fraction)


# ---------------------------------------------------------------------------
# expected signature of augmented Brownian motion


def expected_signature_coefficient(word, T=1):
    """Coefficient of ``word`` in the expected signature at time T.

    A word contributes iff it factors (uniquely, left to right) into
    blocks that are either the single time letter (0) or a repeated pair
    (i, i) with i >= 1.  With k blocks of which p are pairs the
    coefficient is (1/2)**p / k! times T**(graded_degree/2); the graded
    degree of such a word is 2k, so the power of T is the integer k.
    Exact for int/Fraction T.
    """
    word = tuple(word)
    blocks = 0
    pairs = 0
    pos = 0
    while pos < len(word):
        if word[pos] == 0:
            blocks += 1
            pos += 1
        elif pos + 1 < len(word) and word[pos + 1] == word[pos]:
            blocks += 1
            pairs += 1
            pos += 2
        else:
            return 0 if isinstance(T, _EXACT_TYPES) else 0.0
    if isinstance(T, _EXACT_TYPES):
        return Fraction(T) ** blocks * Fraction(1, 2 ** pairs * math.factorial(blocks))
    return float(T) ** blocks / (2 ** pairs * math.factorial(blocks))


def brownian_generator(dim, trunc, T=1):
    """T*eps_0 + (T/2) * sum_i (i,i) as a tensor element."""
    exact = isinstance(T, _EXACT_TYPES)
    half_T = Fraction(T, 2) if exact else T / 2.0
    terms = {(0,): T}
    for i in range(1, dim + 1):
        terms[(i, i)] = half_T
    return TensorElement(dim, trunc, terms)


def expected_signature(dim, trunc, T=1):
    """Expected signature via the exponential of the generator.

    Coefficient-wise equal to expected_signature_coefficient; exact in
    rational mode (int/Fraction T).
    """
    return graded_project(exp_series(brownian_generator(dim, trunc, T)), trunc)


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True, eq=False)
class WienerCubatureFormula:
    """Weighted Lie polynomials matching the expected signature up to
    graded degree ``degree``."""

    dim: int
    degree: int
    entries: tuple  # of (weight, LiePolynomial)
    metadata: dict

    def __post_init__(self):
        for weight, poly in self.entries:
            if weight <= 0:
                raise ValueError("cubature weights must be positive")
            if poly.graded_degree() > self.degree:
                raise ValueError("entry exceeds the formula degree")

    def __len__(self):
        return len(self.entries)

    @property
    def is_exact(self):
        return all(isinstance(w, _EXACT_TYPES)
                   and all(isinstance(c, _EXACT_TYPES) for c, _ in p.terms)
                   for w, p in self.entries)

    def weight_sum(self):
        total = 0
        for w, _ in self.entries:
            total = total + w
        return total


def _require_moments(gaussian, degree):
    err = verify_moments(gaussian, degree, "gaussian")
    if err > 1e-10:
        raise ValueError(
            f"point rule {gaussian.name or '?'} fails the degree-{degree} "
            f"moment check (error {err:.3e})")


def construct_degree3(gaussian):
    """Degree-3 formula: one entry eps_0 + sum_i z_i eps_i per point."""
    _require_moments(gaussian, 3)
    d = gaussian.dim
    entries = []
    for z, lam in zip(gaussian.points, gaussian.weights):
        terms = [(1, 0)]
        terms += [(z[i - 1], i) for i in range(1, d + 1)]
        entries.append((lam, LiePolynomial(d, terms)))
    meta = {"construction": "degree3", "gaussian_rule": gaussian.name,
            "gaussian_size": len(gaussian)}
    return WienerCubatureFormula(d, 3, tuple(entries), meta)


def construct_degree5(gaussian, x=0.5):
    """Degree-5 formula over a degree-5 Gaussian rule and a sign eta.

    Every point contributes two entries (eta = +1 and -1) of weight
    lambda/2.  The mixing parameter x of the third-order cross terms is
    paired with the sign: the eta = -1 entry uses 1 - x, so that the
    x-dependence cancels in expectation and any x in [0, 1] verifies.
    At the default x = 1/2 both entries use the symmetric weights 1/12.
    """
    _require_moments(gaussian, 5)
    d = gaussian.dim
    entries = []
    for z, lam in zip(gaussian.points, gaussian.weights):
        for eta in (1, -1):
            mix = x if eta == 1 else 1 - x
            terms = [(1, 0)]
            terms += [(z[i - 1], i) for i in range(1, d + 1)]
            for i in range(1, d + 1):
                terms.append((z[i - 1] ** 2 / 12, ((0, i), i)))
            for i in range(1, d + 1):
                for j in range(i + 1, d + 1):
                    zi, zj = z[i - 1], z[j - 1]
                    terms.append((eta * zi * zj / 2, (i, j)))
                    terms.append((mix * zi * zj ** 2 / 6, ((i, j), j)))
                    terms.append((-(1 - mix) * zi ** 2 * zj / 6, ((i, j), i)))
            entries.append((lam / 2, LiePolynomial(d, terms)))
    meta = {"construction": "degree5", "x": x, "gaussian_rule": gaussian.name,
            "gaussian_size": len(gaussian)}
    return WienerCubatureFormula(d, 5, tuple(entries), meta)


# Degree-7 term table for d = 3.  Each row is (coefficient, z-component
# or None, tuple of sign indices, bracket tree); the entry coefficient is
# coefficient * z[zc-1] * prod(eta[e] for e in signs) where eta is a
# point of the 4-dimensional Bernoulli rule laid out as
# (eta^1, eta^2, eta^3, eta^0) -> indices (1, 2, 3, 0).
_INV_2_SQRT3 = 1.0 / (2.0 * math.sqrt(3.0))
_INV_24_SQRT3 = 1.0 / (24.0 * math.sqrt(3.0))


def _left_nested(*letters):
    tree = letters[0]
    for letter in letters[1:]:
        tree = (tree, letter)
    return tree


def degree7_term_table():
    """Rows defining every degree-7 entry at d = 3 (see above for layout)."""
    rows = []
    d = 3
    # level 1: the time letter and the scaled Brownian letters
    rows.append((1.0, None, (), 0))
    for i in range(1, d + 1):
        rows.append((1.0, i, (), i))
    # single brackets [e_i, e_j] with three-sign and mixed z terms
    rows.append((_INV_2_SQRT3, None, (1, 2, 0), (1, 2)))
    rows.append((-_INV_2_SQRT3, 1, (2,), (1, 2)))
    rows.append((_INV_2_SQRT3, 2, (1,), (1, 2)))
    rows.append((_INV_2_SQRT3, None, (1, 3, 0), (1, 3)))
    rows.append((_INV_2_SQRT3, 1, (3,), (1, 3)))
    rows.append((_INV_2_SQRT3, 3, (1,), (1, 3)))
    rows.append((_INV_2_SQRT3, None, (2, 3, 0), (2, 3)))
    rows.append((_INV_2_SQRT3, 2, (3,), (2, 3)))
    rows.append((_INV_2_SQRT3, 3, (2,), (2, 3)))
    # single brackets against time
    rows.append((_INV_2_SQRT3, None, (3,), (0, 3)))
    rows.append((-_INV_2_SQRT3, None, (2,), (0, 2)))
    rows.append((-_INV_2_SQRT3, None, (1,), (0, 1)))
    # [[e_0,e_i],e_i] and its 5-letter relative
    for i in range(1, d + 1):
        rows.append((1 / 12, None, (), _left_nested(0, i, i)))
        rows.append((1 / 360, None, (), _left_nested(0, i, i, i, i)))
    # z_i [[e_i,e_j],e_j] over ordered pairs
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if j != i:
                rows.append((1 / 12, i, (), _left_nested(i, j, j)))
    # cyclic families with two-sign coefficients
    for coeff, signs, triples in (
            (1 / 6, (1, 2), ((1, (1, 2, 2)), (2, (2, 3, 3)), (3, (3, 1, 1)))),
            (1 / 6, (1, 3), ((1, (1, 3, 3)), (2, (2, 1, 1)), (3, (3, 2, 2)))),
            (1 / 6, (2, 3), ((1, (1, 2, 3)), (2, (2, 3, 1)), (3, (3, 1, 2))))):
        for zc, letters in triples:
            rows.append((coeff, zc, signs, _left_nested(*letters)))
    # 5-letter triple-index families (at d = 3 the only triple is 1<2<3)
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            for k in range(j + 1, d + 1):
                for zc, letters in (
                        (i, (j, k, k, j, i)), (k, (i, j, j, k, i)),
                        (i, (k, i, j, j, k)), (k, (j, i, i, k, j)),
                        (j, (k, j, i, i, k)), (j, (i, k, k, i, j))):
                    rows.append((1 / 360, zc, (), _left_nested(*letters)))
                for zc, letters in (
                        (j, (k, i, i, j, k)), (i, (k, j, j, i, k)),
                        (k, (j, k, i, i, j)), (k, (i, k, j, j, i))):
                    rows.append((1 / 180, zc, (), _left_nested(*letters)))
                for zc, letters in (
                        (i, (i, k, k, j, j)), (i, (i, j, j, k, k)),
                        (i, (j, i, k, k, j)), (j, (j, k, k, i, i)),
                        (k, (k, i, i, j, j)), (j, (i, j, k, k, i)),
                        (j, (j, i, i, k, k)), (k, (k, j, j, i, i))):
                    rows.append((1 / 120, zc, (), _left_nested(*letters)))
    # 4-letter bracket families with three-sign coefficients
    for signs, quads in (
            ((1, 2, 0), ((1, (3, 2, 3, 1)), (1, (1, 2, 3, 3)), (1, (1, 3, 3, 2)),
                         (2, (1, 2, 2, 2)), (2, (1, 2, 1, 1)))),
            ((1, 3, 0), ((1, (1, 3, 2, 2)), (1, (1, 2, 2, 3)), (1, (2, 3, 2, 1)),
                         (2, (1, 3, 3, 3)), (2, (1, 3, 1, 1)))),
            ((2, 3, 0), ((1, (2, 1, 1, 3)), (1, (1, 3, 1, 2)), (1, (2, 3, 1, 1)),
                         (2, (2, 3, 3, 3)), (2, (2, 3, 2, 2))))):
        for mult, letters in quads:
            rows.append((mult * _INV_24_SQRT3, None, signs, _left_nested(*letters)))
    # 5-letter pair-index families
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            rows.append((1 / 360, i, (), _left_nested(i, j, j, j, j)))
            rows.append((1 / 360, j, (), _left_nested(j, i, i, i, i)))
            rows.append((1 / 120, j, (), _left_nested(i, j, j, j, i)))
            rows.append((1 / 120, i, (), _left_nested(j, i, i, i, j)))
            rows.append((1 / 90, j, (), _left_nested(j, i, j, i, j)))
            rows.append((1 / 90, i, (), _left_nested(i, j, i, j, i)))
            rows.append((1 / 120, None, (), _left_nested(0, i, i, j, j)))
            rows.append((1 / 120, None, (), _left_nested(0, j, j, i, i)))
            rows.append((1 / 180, None, (), _left_nested(j, 0, i, i, j)))
            rows.append((1 / 180, None, (), _left_nested(i, 0, j, j, i)))
            rows.append((1 / 360, None, (), _left_nested(i, j, j, 0, i)))
            rows.append((1 / 360, None, (), _left_nested(j, i, i, 0, j)))
    return rows


def construct_degree7(gaussian=None):
    """Degree-7 formula on 3-dimensional Wiener space.

    Built from a degree-7 Gaussian rule on R^3 crossed with the full
    16-point Bernoulli rule on R^4; entry weights are the products of
    the two rules' weights.
    """
    if gaussian is None:
        gaussian = gaussian_cubature(3, 7)
    if gaussian.dim != 3:
        raise ValueError("the degree-7 construction is specific to d = 3")
    _require_moments(gaussian, 7)
    table = degree7_term_table()
    signs_rule = bernoulli_full(4)
    entries = []
    for z, lam in zip(gaussian.points, gaussian.weights):
        for signs, mu in zip(signs_rule.points, signs_rule.weights):
            # signs laid out as (eta^1, eta^2, eta^3, eta^0)
            eta = {1: signs[0], 2: signs[1], 3: signs[2], 0: signs[3]}
            terms = []
            for coeff, zc, sign_idx, tree in table:
                c = coeff
                if zc is not None:
                    c *= z[zc - 1]
                for s in sign_idx:
                    c *= eta[s]
                terms.append((c, tree))
            entries.append((lam * float(mu), LiePolynomial(3, terms)))
    meta = {"construction": "degree7", "gaussian_rule": gaussian.name,
            "gaussian_size": len(gaussian), "bernoulli_size": len(signs_rule)}
    return WienerCubatureFormula(3, 7, tuple(entries), meta)


def scale_formula(formula, T):
    """Brownian scaling to horizon T: each bracket-term coefficient is
    multiplied by T**(graded_degree/2)."""
    if T <= 0:
        raise ValueError("T must be positive")
    if T == 1:
        return formula
    root = math.sqrt(T)
    entries = []
    for weight, poly in formula.entries:
        terms = [(c * root ** tree_graded_degree(t), t) for c, t in poly.terms]
        entries.append((weight, LiePolynomial(formula.dim, terms)))
    meta = dict(formula.metadata)
    meta["time_scale"] = meta.get("time_scale", 1.0) * T
    return WienerCubatureFormula(formula.dim, formula.degree, tuple(entries), meta)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerificationReport:
    dim: int
    degree: int
    time_horizon: float
    max_residual: float
    residuals: tuple  # of (word, lhs, rhs, abs_error), sorted by error desc
    words_checked: int
    elapsed: float

    @property
    def worst_words(self):
        return self.residuals[:10]


def _dense_entry(poly, s, m):
    """Scatter a Lie polynomial's word expansion into dense levels."""
    out = dense.DenseSeries(s, m)
    for coeff, tree in poly.terms:
        pairs = tree_word_expansion(tree)
        length = len(pairs[0][0])
        if length > m:
            continue
        idx = np.fromiter((dense.word_index(w, s) for w, _ in pairs),
                          dtype=np.int64, count=len(pairs))
        vals = np.fromiter((c for _, c in pairs), dtype=float, count=len(pairs))
        np.add.at(out.levels[length], idx, float(coeff) * vals)
    for k in range(m + 1):
        out.levels[k] *= dense.graded_mask(s, m, k)
    return out


def verify_formula(formula, T=1, degree=None):
    """Compare both sides of the defining identity word-by-word.

    The left side is the block-factorisation oracle at time T; the right
    side is the weighted sum of truncated exponentials of the entries.
    Runs exactly over all words of graded degree <= degree (default: the
    formula's degree).  Exact formulas with exact T are verified in
    rational arithmetic.
    """
    start = time.perf_counter()
    m = formula.degree if degree is None else degree
    d = formula.dim
    if formula.is_exact and isinstance(T, _EXACT_TYPES):
        rows = _verify_exact(formula, T, m)
    else:
        rows = _verify_dense(formula, float(T), m)
    rows.sort(key=lambda r: (-r[3], len(r[0]), r[0]))
    worst = rows[0][3] if rows else 0
    return VerificationReport(d, m, float(T), worst, tuple(rows), len(rows),
                              time.perf_counter() - start)


def _verify_dense(formula, T, m):
    s = formula.dim + 1
    rhs = dense.DenseSeries(s, m)
    for weight, poly in formula.entries:
        rhs.add_scaled(dense.exp(_dense_entry(poly, s, m)), float(weight))
    rows = []
    for word, rhs_val in rhs.masked_items():
        lhs_val = expected_signature_coefficient(word, T)
        rows.append((word, lhs_val, float(rhs_val), abs(lhs_val - rhs_val)))
    return rows


def _verify_exact(formula, T, m):
    d = formula.dim
    rhs = TensorElement.zero(d, m)
    for weight, poly in formula.entries:
        rhs = rhs + exp_series(poly.expand(m)) * weight
    rows = []
    for word in words_of_graded_degree(d, m):
        lhs_val = expected_signature_coefficient(word, T)
        rhs_val = rhs.coefficient(word)
        rows.append((word, lhs_val, rhs_val, abs(lhs_val - rhs_val)))
    return rows


def write_residual_report(report, path, limit=None):
    """CSV of residuals: word,lhs,rhs,abs_error sorted by descending error."""
    rows = report.residuals if limit is None else report.residuals[:limit]
    with open(path, "w") as fh:
        fh.write("word,lhs,rhs,abs_error\n")
        for word, lhs, rhs, err in rows:
            fh.write(f"{word_str(word)},{float(lhs)!r},{float(rhs)!r},{float(err)!r}\n")


# ---------------------------------------------------------------------------
# serialization


def save_formula(formula, path):
    """Write the formula as JSON (weights at full double precision)."""
    doc = {
        "dim": formula.dim,
        "degree": formula.degree,
        "entries": [
            {"weight": float(weight),
             "terms": [{"coeff": float(c), "bracket": tree_to_nested(t)}
                       for c, t in poly.terms]}
            for weight, poly in formula.entries
        ],
        "metadata": {k: v for k, v in sorted(formula.metadata.items())},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_formula(path):
    """Read a formula JSON file back; invariants are re-checked."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        d = int(doc["dim"])
        degree = int(doc["degree"])
        entries = []
        for rec in doc["entries"]:
            weight = float(rec["weight"])
            terms = [(float(t["coeff"]), tree_from_nested(t["bracket"]))
                     for t in rec["terms"]]
            entries.append((weight, LiePolynomial(d, terms)))
        meta = dict(doc.get("metadata", {}))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed formula file {path}: {exc}") from exc
    formula = WienerCubatureFormula(d, degree, tuple(entries), meta)
    total = formula.weight_sum()
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"formula weights sum to {total!r}, not 1")
    return formula
