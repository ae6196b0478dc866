"""Flat per-level float arrays for fast tensor arithmetic.

Level k of a series over an alphabet of size s is a numpy array of
length s**k; the flat index of a word is its base-s value with the first
letter most significant, so concatenation is index(u)*s**len(v) +
index(v) and the level-c slice of a product is a sum of outer products.
Graded truncation is a per-level boolean mask.  This is the numeric
workhorse behind formula verification and cubature stepping; the sparse
TensorElement path remains the reference implementation.
"""

import functools

import numpy as np


def word_index(word, s):
    idx = 0
    for letter in word:
        idx = idx * s + letter
    return idx


def index_word(idx, s, length):
    letters = []
    for _ in range(length):
        idx, r = divmod(idx, s)
        letters.append(r)
    return tuple(reversed(letters))


@functools.lru_cache(maxsize=None)
def zero_letter_counts(s, k):
    """Number of 0-letters in each length-k word, indexed flat."""
    if k == 0:
        return np.zeros(1, dtype=np.int64)
    prev = zero_letter_counts(s, k - 1)
    out = np.repeat(prev, s)
    out[0::s] += 1
    return out


@functools.lru_cache(maxsize=None)
def graded_mask(s, m, k):
    """Boolean mask of length-k words with graded degree <= m."""
    return (k + zero_letter_counts(s, k)) <= m


class DenseSeries:
    """Mutable builder for a graded-truncated series; float coefficients."""

    __slots__ = ("s", "m", "levels")

    def __init__(self, s, m, levels=None):
        self.s = s
        self.m = m
        if levels is None:
            levels = [np.zeros(s ** k) for k in range(m + 1)]
        self.levels = levels

    @classmethod
    def unit(cls, s, m):
        out = cls(s, m)
        out.levels[0][0] = 1.0
        return out

    @classmethod
    def from_tensor(cls, element):
        out = cls(element.dim + 1, element.trunc)
        for w, c in element.terms.items():
            out.levels[len(w)][word_index(w, out.s)] += float(c)
        return out

    def copy(self):
        return DenseSeries(self.s, self.m, [lvl.copy() for lvl in self.levels])

    def add_scaled(self, other, factor):
        for mine, theirs in zip(self.levels, other.levels):
            mine += factor * theirs
        return self

    def scale(self, factor):
        for lvl in self.levels:
            lvl *= factor
        return self

    def coefficient(self, word):
        return self.levels[len(word)][word_index(word, self.s)]

    def masked_items(self):
        """Yield (word, coefficient) over all words with graded degree <= m."""
        for k, lvl in enumerate(self.levels):
            mask = graded_mask(self.s, self.m, k)
            for idx in np.nonzero(mask)[0]:
                yield index_word(int(idx), self.s, k), lvl[idx]


def conc(a, b):
    """Concatenation product with graded truncation."""
    s, m = a.s, a.m
    out = DenseSeries(s, m)
    for c in range(m + 1):
        lvl = out.levels[c]
        for x in range(c + 1):
            ax, by = a.levels[x], b.levels[c - x]
            if ax.any() and by.any():
                lvl += np.multiply.outer(ax, by).ravel()
        lvl *= graded_mask(s, m, c)
    return out


def exp(a):
    """Tensor exponential via Horner; requires zero constant term."""
    if a.levels[0][0] != 0.0:
        raise ValueError("dense exp requires zero constant term")
    result = DenseSeries.unit(a.s, a.m)
    for k in range(a.m, 0, -1):
        result = conc(a, result).scale(1.0 / k)
        result.levels[0][0] += 1.0
    return result
