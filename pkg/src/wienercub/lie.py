"""Iterated Lie brackets, Lie polynomials and the symmetrised Lyndon basis.

Bracket terms are binary trees: a leaf is a plain int (a letter), a node
is a 2-tuple (left, right) standing for the commutator [left, right].
The symmetrised products of non-decreasing multisets of Lyndon brackets
form a basis of the truncated tensor algebra; coordinate extraction in
that basis is done per anagram class (words sharing a letter multiset)
by solving small linear systems, which the basis theorem guarantees to
be square and invertible.
"""

import functools
from fractions import Fraction

import numpy as np

from .words import graded_degree, is_lyndon, lyndon_words
from .tensor import TensorElement, tensor_product


# ---------------------------------------------------------------------------
# bracket trees


def foliage(tree):
    """Letters of a bracket tree, read left to right."""
    if isinstance(tree, int):
        return (tree,)
    left, right = tree
    return foliage(left) + foliage(right)


def tree_graded_degree(tree):
    return graded_degree(foliage(tree))


def validate_tree(tree, dim):
    if isinstance(tree, int):
        if not 0 <= tree <= dim:
            raise ValueError(f"letter {tree} outside alphabet [0, {dim}]")
        return
    if not (isinstance(tree, tuple) and len(tree) == 2):
        raise ValueError(f"malformed bracket term: {tree!r}")
    validate_tree(tree[0], dim)
    validate_tree(tree[1], dim)


def bracket_str(tree):
    """Text form, e.g. ``[[0,1],1]``."""
    if isinstance(tree, int):
        return str(tree)
    return f"[{bracket_str(tree[0])},{bracket_str(tree[1])}]"


def tree_to_nested(tree):
    """Nested-list form for JSON: a leaf is an int, a node a 2-list."""
    if isinstance(tree, int):
        return tree
    return [tree_to_nested(tree[0]), tree_to_nested(tree[1])]


def tree_from_nested(data):
    if isinstance(data, int):
        return data
    if isinstance(data, list) and len(data) == 2:
        return (tree_from_nested(data[0]), tree_from_nested(data[1]))
    raise ValueError(f"malformed bracket data: {data!r}")


@functools.lru_cache(maxsize=None)
def tree_word_expansion(tree):
    """Expansion of a nested commutator in the word basis.

    Returns a tuple of (word, integer coefficient) pairs; coefficients
    are exact, so the same expansion serves both coefficient modes.
    """
    if isinstance(tree, int):
        return (((tree,), 1),)
    left = tree_word_expansion(tree[0])
    right = tree_word_expansion(tree[1])
    acc = {}
    for wl, cl in left:
        for wr, cr in right:
            c = cl * cr
            acc[wl + wr] = acc.get(wl + wr, 0) + c
            acc[wr + wl] = acc.get(wr + wl, 0) - c
    return tuple(sorted((w, c) for w, c in acc.items() if c != 0))


def bracket_expand(tree, dim, trunc):
    """Tensor expansion of a bracket term, [p,q] = pq - qp."""
    validate_tree(tree, dim)
    if tree_graded_degree(tree) > trunc:
        raise ValueError(
            f"bracket term {bracket_str(tree)} has graded degree "
            f"{tree_graded_degree(tree)} > truncation {trunc}")
    return TensorElement(dim, trunc, dict(tree_word_expansion(tree)))


def standard_bracketing(word):
    """Right-standard Lyndon bracketing.

    A single letter is a leaf; otherwise split w = uv with v the longest
    proper suffix of w that is Lyndon, and return [b(u), b(v)].
    """
    word = tuple(word)
    if not is_lyndon(word):
        raise ValueError(f"{word} is not a Lyndon word")
    if len(word) == 1:
        return word[0]
    for i in range(1, len(word)):
        if is_lyndon(word[i:]):
            return (standard_bracketing(word[:i]), standard_bracketing(word[i:]))
    raise AssertionError("unreachable: every Lyndon word has a Lyndon suffix")


# ---------------------------------------------------------------------------
# Lie polynomials


class LiePolynomial:
    """A finite combination of bracket terms over the alphabet {0..dim}.

    ``terms`` is a tuple of (coefficient, tree) pairs.  When built from
    Lyndon-basis coordinates the coordinate map is kept alongside.
    """

    __slots__ = ("dim", "terms", "lyndon_coords")

    def __init__(self, dim, terms, lyndon_coords=None):
        object.__setattr__(self, "dim", dim)
        clean = []
        for coeff, tree in terms:
            validate_tree(tree, dim)
            if coeff != 0:
                clean.append((coeff, tree))
        object.__setattr__(self, "terms", tuple(clean))
        object.__setattr__(self, "lyndon_coords",
                           dict(lyndon_coords) if lyndon_coords else None)

    def __setattr__(self, name, value):
        raise AttributeError("LiePolynomial is immutable")

    @classmethod
    def zero(cls, dim):
        return cls(dim, ())

    @classmethod
    def from_lyndon_coordinates(cls, coords, dim):
        terms = [(c, standard_bracketing(w)) for w, c in coords.items() if c != 0]
        return cls(dim, terms, lyndon_coords=coords)

    def graded_degree(self):
        return max((tree_graded_degree(t) for _, t in self.terms), default=0)

    def expand(self, trunc):
        """Tensor expansion truncated at graded degree ``trunc``."""
        acc = {}
        for coeff, tree in self.terms:
            for w, c in tree_word_expansion(tree):
                acc[w] = acc.get(w, 0) + coeff * c
        return TensorElement(self.dim, trunc, acc)

    def __add__(self, other):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return LiePolynomial(self.dim, self.terms + other.terms)

    def __rmul__(self, scalar):
        return LiePolynomial(self.dim, [(scalar * c, t) for c, t in self.terms])

    def __repr__(self):
        if not self.terms:
            return "<0>"
        return " + ".join(f"{c}*{bracket_str(t)}" for c, t in self.terms)


def symmetrised_product(items, trunc, dim=None):
    """Average of all orderings of a tensor product.

    ``items`` may contain LiePolynomial or TensorElement values.  The
    empty product is the unit (``dim`` must then be given).
    """
    if not items:
        if dim is None:
            raise ValueError("empty product needs an explicit dim")
        return TensorElement.unit(dim, trunc)
    expanded = [x.expand(trunc) if isinstance(x, LiePolynomial)
                else TensorElement(x.dim, trunc, x.terms)
                for x in items]
    dims = {e.dim for e in expanded}
    if len(dims) != 1:
        raise ValueError("mixed dimensions in symmetrised product")
    return _sym_of_expansions(tuple(expanded), trunc)


def _sym_of_expansions(expanded, trunc):
    n = len(expanded)
    if n == 1:
        return expanded[0]
    exact = all(e.is_exact for e in expanded)
    total = TensorElement.zero(expanded[0].dim, trunc)
    for i, e in enumerate(expanded):
        rest = expanded[:i] + expanded[i + 1:]
        total = total + tensor_product(e, _sym_of_expansions(rest, trunc))
    return total * (Fraction(1, n) if exact else 1.0 / n)


# ---------------------------------------------------------------------------
# symmetrised Lyndon (PBW) basis

# Internally all basis expansions use exact Fraction coefficients; the
# float solve path converts on demand.  A PBW key is a non-decreasing
# tuple of Lyndon words, the empty tuple standing for the unit.


def lyndon_basis_words(dim, trunc):
    """Lyndon words over {0..dim} with graded degree <= trunc, in lex order."""
    return [w for w in lyndon_words(dim + 1, trunc) if graded_degree(w) <= trunc]


@functools.lru_cache(maxsize=None)
def _sym_lyndon_expansion(key, dim, trunc):
    """Word expansion of the symmetrised product of a Lyndon multiset.

    Returns a tuple of (word, Fraction) pairs.  Recursion: the product
    over a multiset of size n is (1/n) * sum over distinct elements e of
    count(e) * expansion(e) (x) sym(multiset minus one e).
    """
    if not key:
        return (((), Fraction(1)),)
    if len(key) == 1:
        return tuple((w, Fraction(c))
                     for w, c in tree_word_expansion(standard_bracketing(key[0])))
    n = len(key)
    acc = {}
    seen = set()
    for i, lyndon in enumerate(key):
        if lyndon in seen:
            continue
        seen.add(lyndon)
        count = key.count(lyndon)
        head = _sym_lyndon_expansion((lyndon,), dim, trunc)
        rest_key = key[:i] + key[i + 1:]
        tail = _sym_lyndon_expansion(rest_key, dim, trunc)
        for wh, ch in head:
            gh = graded_degree(wh)
            for wt, ct in tail:
                if gh + graded_degree(wt) > trunc:
                    continue
                w = wh + wt
                acc[w] = acc.get(w, 0) + count * ch * ct
    scale = Fraction(1, n)
    return tuple(sorted((w, c * scale) for w, c in acc.items() if c != 0))


@functools.lru_cache(maxsize=None)
def pbw_basis(dim, trunc):
    """All PBW keys with total graded degree <= trunc, deterministic order.

    A key is a non-decreasing (lexicographically sorted) tuple of Lyndon
    words; the number of keys of total graded degree g equals the number
    of words of graded degree g.
    """
    lyndons = lyndon_basis_words(dim, trunc)
    degs = [graded_degree(w) for w in lyndons]
    out = []

    def grow(start, budget, prefix):
        out.append(tuple(prefix))
        for idx in range(start, len(lyndons)):
            if degs[idx] <= budget:
                prefix.append(lyndons[idx])
                grow(idx, budget - degs[idx], prefix)
                prefix.pop()

    grow(0, trunc, [])
    return tuple(sorted(out, key=lambda k: (sum(map(graded_degree, k)), k)))


def _class_of_key(key):
    letters = []
    for w in key:
        letters.extend(w)
    return tuple(sorted(letters))


@functools.lru_cache(maxsize=None)
def _pbw_class_tables(dim, trunc):
    """Group PBW keys and words by anagram class (sorted letter multiset).

    Returns a dict: class -> (words tuple, keys tuple).  The matching
    word list is exactly the distinct permutations of the class letters.
    """
    classes = {}
    for key in pbw_basis(dim, trunc):
        classes.setdefault(_class_of_key(key), []).append(key)
    tables = {}
    for cls, keys in classes.items():
        words = sorted(_distinct_permutations(cls))
        if len(words) != len(keys):
            raise AssertionError(
                f"PBW class {cls}: {len(words)} words vs {len(keys)} keys "
                "(implementation bug)")
        tables[cls] = (tuple(words), tuple(keys))
    return tables


def _distinct_permutations(letters):
    if not letters:
        return [()]
    out = []
    seen = set()
    for i, letter in enumerate(letters):
        if letter in seen:
            continue
        seen.add(letter)
        rest = letters[:i] + letters[i + 1:]
        out.extend((letter,) + tail for tail in _distinct_permutations(rest))
    return out


@functools.lru_cache(maxsize=None)
def _class_matrix_exact(cls, dim, trunc):
    """Exact expansion matrix of one anagram class: rows words, cols keys."""
    words, keys = _pbw_class_tables(dim, trunc)[cls]
    pos = {w: i for i, w in enumerate(words)}
    n = len(words)
    mat = [[Fraction(0)] * n for _ in range(n)]
    for j, key in enumerate(keys):
        for w, c in _sym_lyndon_expansion(key, dim, trunc):
            mat[pos[w]][j] = c
    return mat


@functools.lru_cache(maxsize=None)
def _class_matrix_float(cls, dim, trunc):
    mat = np.array([[float(c) for c in row]
                    for row in _class_matrix_exact(cls, dim, trunc)])
    return mat


def _solve_exact(mat, vec):
    """Gaussian elimination over Fractions; pivots exist by the basis theorem."""
    n = len(vec)
    a = [row[:] + [v] for row, v in zip(mat, vec)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise AssertionError("singular PBW class matrix (implementation bug)")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def pbw_coordinates(a, exact=None):
    """Coordinates of a tensor element in the symmetrised Lyndon basis.

    Returns {key: coefficient} with only nonzero entries; keys are
    non-decreasing tuples of Lyndon words, () being the unit.  With
    ``exact`` (default: follow a.is_exact) the solve runs over Fractions.
    """
    if exact is None:
        exact = a.is_exact
    dim, trunc = a.dim, a.trunc
    tables = _pbw_class_tables(dim, trunc)
    by_class = {}
    for w, c in a.terms.items():
        by_class.setdefault(tuple(sorted(w)), {})[w] = c
    coords = {}
    for cls, section in by_class.items():
        if cls == ():
            coords[()] = section[()]
            continue
        if cls not in tables:
            raise AssertionError(f"no PBW class for letters {cls}")
        words, keys = tables[cls]
        if exact:
            vec = [Fraction(section.get(w, 0)) for w in words]
            sol = _solve_exact(_class_matrix_exact(cls, dim, trunc), vec)
        else:
            vec = np.array([float(section.get(w, 0)) for w in words])
            sol = np.linalg.solve(_class_matrix_float(cls, dim, trunc), vec)
        for key, value in zip(keys, sol):
            if value != 0:
                coords[key] = value
    return coords


def pbw_expand(coords, dim, trunc):
    """Inverse of pbw_coordinates: sum of coefficient * symmetrised product."""
    acc = {}
    for key, coeff in coords.items():
        if coeff == 0:
            continue
        for w, c in _sym_lyndon_expansion(tuple(key), dim, trunc):
            acc[w] = acc.get(w, 0) + coeff * c
    return TensorElement(dim, trunc, acc)


def is_lie_element(a, tol=1e-10):
    """True iff all PBW coordinates on multisets of size >= 2 are below tol.

    The logarithm of a group-like element is a Lie series, so it must be
    supported on single-bracket basis monomials.
    """
    if a.coefficient(()) != 0:
        raise ValueError("is_lie_element requires zero constant term")
    coords = pbw_coordinates(a)
    return all(abs(value) <= tol
               for key, value in coords.items() if len(key) >= 2)
