"""Weighted point cubature for Gaussian and Bernoulli measures.

The verifier is the contract: every shipped rule is checked against the
closed-form moments E[Z**(2k)] = (2k-1)!! (Gaussian) and the all-even
indicator (Bernoulli).  The always-available Gaussian construction is a
product Gauss-Hermite rule rescaled to unit variance; a compact 2d-point
axis rule is used for degree 3.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

_EXACT_TYPES = (int, Fraction)


@dataclass(frozen=True)
class PointCubature:
    """A weighted point set in R^d claiming exactness up to ``degree``."""

    dim: int
    points: tuple
    weights: tuple
    degree: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights differ in length")
        for p in self.points:
            if len(p) != self.dim:
                raise ValueError("point of wrong dimension")

    def __len__(self):
        return len(self.points)

    @property
    def is_exact(self):
        return (all(isinstance(w, _EXACT_TYPES) for w in self.weights)
                and all(isinstance(x, _EXACT_TYPES) for p in self.points for x in p))


def bernoulli_full(d):
    """All 2**d sign vectors with uniform weights 2**-d.

    Exact for every polynomial degree: a monomial integrates to 1 iff
    all its exponents are even, and to 0 otherwise.
    """
    if not 1 <= d <= 16:
        raise ValueError("bernoulli_full supports 1 <= d <= 16")
    pts = tuple(product((-1, 1), repeat=d))
    w = Fraction(1, 2 ** d)
    return PointCubature(d, pts, (w,) * len(pts), degree=2 ** 30,
                         name=f"bernoulli-full-{d}")


def gauss_hermite_1d(n):
    """Nodes/weights of the n-point Gauss-Hermite rule for N(0, 1).

    Probabilists' weight function; weights normalised to sum exactly
    to 1.  Nodes come from the standard companion-matrix eigenvalue
    method with Newton refinement (numpy.polynomial.hermite_e).
    """
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    weights = weights / weights.sum()
    return nodes, weights


# one-dimensional rule with rational nodes and weights, exact for all
# Gaussian moments up to degree 5 (E[z^2]=1, E[z^4]=3, odd ones vanish)
_RATIONAL_1D_NODES = (Fraction(-3), Fraction(-1), Fraction(0), Fraction(1),
                      Fraction(3))
_RATIONAL_1D_WEIGHTS = (Fraction(1, 72), Fraction(3, 8), Fraction(2, 9),
                        Fraction(3, 8), Fraction(1, 72))


def gaussian_cubature(d, degree, rule="auto"):
    """A point cubature for the d-dimensional standard Gaussian.

    rule="axis" is the 2d-point degree-3 rule (points +-sqrt(d) e_i,
    weights 1/(2d)); rule="hermite" is the product Gauss-Hermite rule
    with ceil((degree+1)/2) nodes per axis; rule="rational" is a product
    of the 5-point rational rule {0, +-1, +-3}, exact through degree 5
    in exact arithmetic (for tolerance-free verification downstream).
    "auto" picks axis for degree 3 and the Hermite product otherwise.
    """
    if degree not in (3, 5, 7):
        raise ValueError(f"unsupported Gaussian cubature degree {degree}")
    if not 1 <= d <= 10:
        raise ValueError(f"unsupported Gaussian cubature dimension {d}")
    if degree == 7 and d > 6:
        raise ValueError("degree-7 product rule limited to d <= 6")
    if rule == "auto":
        rule = "axis" if degree == 3 else "hermite"
    if rule == "rational":
        if degree > 5:
            raise ValueError("the rational rule only reaches degree 5")
        if d > 4:
            raise ValueError("rational product rule limited to d <= 4")
        pts = []
        ws = []
        for combo in product(range(5), repeat=d):
            pts.append(tuple(_RATIONAL_1D_NODES[i] for i in combo))
            w = Fraction(1)
            for i in combo:
                w *= _RATIONAL_1D_WEIGHTS[i]
            ws.append(w)
        return PointCubature(d, tuple(pts), tuple(ws), degree=degree,
                             name=f"rational-5^{d}")
    if rule == "axis":
        if degree != 3:
            raise ValueError("the axis rule only has degree 3")
        r = np.sqrt(float(d))
        pts = []
        for i in range(d):
            for sign in (1.0, -1.0):
                p = [0.0] * d
                p[i] = sign * r
                pts.append(tuple(p))
        w = 1.0 / (2 * d)
        return PointCubature(d, tuple(pts), (w,) * (2 * d), degree=3,
                             name=f"axis-{d}")
    if rule == "hermite":
        n1 = (degree + 1) // 2 + (degree + 1) % 2  # ceil((degree+1)/2)
        nodes, weights = gauss_hermite_1d(n1)
        pts = []
        ws = []
        for combo in product(range(n1), repeat=d):
            pts.append(tuple(float(nodes[i]) for i in combo))
            w = 1.0
            for i in combo:
                w *= float(weights[i])
            ws.append(w)
        return PointCubature(d, tuple(pts), tuple(ws), degree=degree,
                             name=f"hermite-{n1}^{d}")
    raise ValueError(f"unknown rule {rule!r}")


def multi_indices(d, max_total):
    """All exponent tuples (k_1..k_d) with sum <= max_total."""
    if d == 0:
        yield ()
        return
    for k in range(max_total + 1):
        for rest in multi_indices(d - 1, max_total - k):
            yield (k,) + rest


def _double_factorial(n):
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _moment(ks, measure):
    if measure == "gaussian":
        out = 1
        for k in ks:
            if k % 2 == 1:
                return 0
            out *= _double_factorial(k - 1)
        return out
    if measure == "bernoulli":
        return 1 if all(k % 2 == 0 for k in ks) else 0
    raise ValueError(f"unknown measure {measure!r}")


def verify_moments(cubature, degree, measure="gaussian"):
    """Max absolute moment error over all monomials of total degree <= degree.

    Exact points and weights are evaluated in exact arithmetic, so the
    Bernoulli rule reports an error of exactly 0.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if cubature.is_exact:
        worst = 0
        for ks in multi_indices(cubature.dim, degree):
            total = 0
            for p, w in zip(cubature.points, cubature.weights):
                term = w
                for x, k in zip(p, ks):
                    term *= x ** k
                total += term
            worst = max(worst, abs(total - _moment(ks, measure)))
        return worst
    pts = np.asarray(cubature.points, dtype=float)
    wts = np.asarray(cubature.weights, dtype=float)
    worst = 0.0
    for ks in multi_indices(cubature.dim, degree):
        vals = np.prod(pts ** np.asarray(ks, dtype=float), axis=1)
        err = abs(float(wts @ vals) - _moment(ks, measure))
        worst = max(worst, err)
    return worst


def write_points_csv(cubature, path):
    """Dump points and weights as CSV: x_1..x_d,weight."""
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i+1}" for i in range(cubature.dim)) + ",weight\n")
        for p, w in zip(cubature.points, cubature.weights):
            cells = [repr(float(x)) for x in p] + [repr(float(w))]
            fh.write(",".join(cells) + "\n")
