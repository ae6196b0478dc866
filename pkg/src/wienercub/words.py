"""Words over the time-augmented alphabet {0, ..., d} and Lyndon words.

A word is a plain tuple of ints.  Letter 0 is the time component, letters
1..d are Brownian components.  The grading counts the time letter twice,
so that a word scales like T**(graded_degree/2) under Brownian scaling
(time ~ T, each Brownian letter ~ sqrt(T)).
"""

from itertools import product

EMPTY_WORD = ()


def graded_degree(word):
    """Word length plus the number of occurrences of the time letter 0."""
    return len(word) + word.count(0)


def check_word(word, dim):
    """Raise ValueError unless every letter of ``word`` lies in [0, dim]."""
    for letter in word:
        if not 0 <= letter <= dim:
            raise ValueError(f"letter {letter} outside alphabet [0, {dim}]")


def lex_compare(w1, w2):
    """Dictionary order on words: -1, 0 or 1.

    A proper prefix sorts before its extensions; otherwise the first
    differing letter decides.  This is exactly tuple comparison.
    """
    if w1 == w2:
        return 0
    return -1 if tuple(w1) < tuple(w2) else 1


def is_lyndon(word):
    """True iff ``word`` is strictly smaller than all its proper cyclic rotations."""
    k = len(word)
    if k == 0:
        return False
    word = tuple(word)
    return all(word < word[i:] + word[:i] for i in range(1, k))


def lyndon_words(alphabet_size, max_len):
    """All Lyndon words of length <= max_len over {0, ..., alphabet_size-1}.

    Generated by Duval's algorithm, which emits them in lexicographic
    order; the result is deterministic.
    """
    if alphabet_size < 1:
        raise ValueError("alphabet_size must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        out.append(tuple(w))
        m = len(w)
        while len(w) < max_len:
            w.append(w[-m])
        while w and w[-1] == alphabet_size - 1:
            w.pop()
    return out


def words_of_graded_degree(dim, max_degree):
    """All words over {0..dim} with graded degree <= max_degree.

    Ordered by (length, lexicographic), including the empty word.
    """
    out = []
    for length in range(max_degree + 1):
        for w in product(range(dim + 1), repeat=length):
            if graded_degree(w) <= max_degree:
                out.append(w)
    return out


def word_str(word):
    """Render a word as ``(0.1.1)``; the empty word renders as ``()``."""
    return "(" + ".".join(str(letter) for letter in word) + ")"


def parse_word(text):
    """Inverse of word_str."""
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ValueError(f"not a word: {text!r}")
    body = body[1:-1]
    if not body:
        return ()
    return tuple(int(piece) for piece in body.split("."))
