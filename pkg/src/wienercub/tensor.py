"""Sparse truncated tensor algebra over the alphabet {0, ..., d}.

Elements are finite linear combinations of words, truncated by graded
degree (see words.graded_degree).  Coefficients are duck-typed: floats
give the default floating mode, ints and fractions.Fraction give the
exact-rational mode.  Values are immutable after construction and all
operations are pure, so elements are safe to share between threads.
"""

from fractions import Fraction

from .words import EMPTY_WORD, check_word, graded_degree

_EXACT_TYPES = (int, Fraction)


def _reciprocal(n, exact):
    return Fraction(1, n) if exact else 1.0 / n


class TensorElement:
    """A sparse element of the graded-truncated tensor algebra.

    ``terms`` maps words (tuples of letters in [0, dim]) to nonzero
    coefficients; words above the graded truncation are dropped at
    construction, which doubles as the graded projection.
    """

    __slots__ = ("dim", "trunc", "terms")

    def __init__(self, dim, trunc, terms=None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if trunc < 0:
            raise ValueError("trunc must be >= 0")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "trunc", trunc)
        clean = {}
        for word, coeff in (terms or {}).items():
            word = tuple(word)
            check_word(word, dim)
            if coeff != 0 and graded_degree(word) <= trunc:
                clean[word] = coeff
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("TensorElement is immutable")

    @classmethod
    def zero(cls, dim, trunc):
        return cls(dim, trunc)

    @classmethod
    def unit(cls, dim, trunc):
        return cls(dim, trunc, {EMPTY_WORD: 1})

    @classmethod
    def from_word(cls, word, dim, trunc, coeff=1):
        return cls(dim, trunc, {tuple(word): coeff})

    @classmethod
    def letter(cls, i, dim, trunc):
        return cls(dim, trunc, {(i,): 1})

    def coefficient(self, word):
        return self.terms.get(tuple(word), 0)

    @property
    def is_exact(self):
        """True iff every coefficient is an int or Fraction."""
        return all(isinstance(c, _EXACT_TYPES) for c in self.terms.values())

    def sorted_terms(self):
        """(word, coeff) pairs ordered by (length, lexicographic)."""
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def max_word_length(self):
        return max((len(w) for w in self.terms), default=0)

    def __eq__(self, other):
        if not isinstance(other, TensorElement):
            return NotImplemented
        return (self.dim == other.dim and self.trunc == other.trunc
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.dim, self.trunc, frozenset(self.terms.items())))

    def __add__(self, other):
        _check_compatible(self, other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return TensorElement(self.dim, self.trunc, out)

    def __sub__(self, other):
        return self + (-1) * other

    def __neg__(self):
        return (-1) * self

    def __mul__(self, other):
        if isinstance(other, TensorElement):
            return tensor_product(self, other)
        return TensorElement(self.dim, self.trunc,
                             {w: c * other for w, c in self.terms.items()})

    def __rmul__(self, scalar):
        return TensorElement(self.dim, self.trunc,
                             {w: scalar * c for w, c in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "<0>"
        bits = []
        for w, c in self.sorted_terms():
            label = "".join(map(str, w)) if w else "1"
            bits.append(f"{c}*{label}")
        return " + ".join(bits)


def _check_compatible(a, b):
    if a.dim != b.dim or a.trunc != b.trunc:
        raise ValueError(
            f"mismatched elements: dim {a.dim}/{b.dim}, trunc {a.trunc}/{b.trunc}")


def tensor_product(a, b):
    """Concatenation product; words above the graded truncation are dropped."""
    _check_compatible(a, b)
    m = a.trunc
    out = {}
    b_items = [(w, graded_degree(w), c) for w, c in b.terms.items()]
    for w1, c1 in a.terms.items():
        g1 = graded_degree(w1)
        for w2, g2, c2 in b_items:
            if g1 + g2 <= m:
                w = w1 + w2
                out[w] = out.get(w, 0) + c1 * c2
    return TensorElement(a.dim, m, out)


def graded_project(a, m):
    """Keep exactly the words with graded degree <= m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return TensorElement(a.dim, min(a.trunc, m), a.terms)


def level_project(a, max_len):
    """Plain level truncation: keep words of length <= max_len."""
    kept = {w: c for w, c in a.terms.items() if len(w) <= max_len}
    return TensorElement(a.dim, a.trunc, kept)


def exp_series(a):
    """Truncated tensor exponential sum_k a**k / k!.

    Requires zero constant term.  Evaluated in Horner form
    exp(a) = 1 + a(1 + a/2(1 + a/3(...))), which terminates because every
    word of ``a`` has graded degree >= 1.
    """
    if a.coefficient(EMPTY_WORD) != 0:
        raise ValueError("exp_series requires zero constant term")
    exact = a.is_exact
    unit = TensorElement.unit(a.dim, a.trunc)
    result = unit
    for k in range(a.trunc, 0, -1):
        result = unit + tensor_product(a, result) * _reciprocal(k, exact)
    return result


def log_series(g):
    """Truncated tensor logarithm sum_k -(-1)**k / k (g - 1)**k.

    Requires constant term 1.  Inverse of exp_series on the truncated
    algebra.
    """
    if g.coefficient(EMPTY_WORD) != 1:
        raise ValueError("log_series requires constant term 1")
    exact = g.is_exact
    x = g - TensorElement.unit(g.dim, g.trunc)
    s = TensorElement.zero(g.dim, g.trunc)
    t = s
    for k in range(g.trunc, 0, -1):
        t = tensor_product(x, s)
        if k > 1:
            s = x * _reciprocal(k, exact) - t
    return x - t
