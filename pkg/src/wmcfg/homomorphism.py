"""Weighted string homomorphisms defined by per-symbol monomials."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from . import algebra as alg
from .algebra import Weight, one_weight, plus, times, zero_weight
from .errors import UsageError


@dataclass(frozen=True)
class Monomial:
    """A weighted language with at most one support word, written w @ weight.

    The zero weight only appears as the canonical zero monomial 0.eps.
    """

    word: tuple
    weight: Weight

    def __post_init__(self):
        if self.weight.value == self.weight.algebra.zero and self.word != ():
            raise UsageError("zero monomial must carry the empty word")

    @property
    def is_zero(self):
        return self.weight.value == self.weight.algebra.zero

    def __str__(self):
        return f"'{' '.join(self.word)}' @ {self.weight}"


def monomial(word, weight):
    """Normalizing constructor: a zero weight collapses to 0.eps."""
    word = tuple(word)
    if weight.value == weight.algebra.zero:
        word = ()
    return Monomial(word, weight)


@dataclass(frozen=True)
class WeightedHom:
    """A homomorphism given by one monomial per source symbol.

    ``table`` is a sorted tuple of (symbol, Monomial) pairs, total on the
    source alphabet, with image words over the target alphabet.
    """

    source: frozenset
    target: frozenset
    algebra: alg.Bimonoid
    table: tuple

    def __post_init__(self):
        syms = {s for s, _ in self.table}
        if syms != set(self.source):
            raise UsageError("homomorphism table is not total on the source")
        for s, m in self.table:
            if m.weight.algebra != self.algebra:
                raise UsageError(f"image of {s!r} uses a different algebra")
            for t in m.word:
                if t not in self.target:
                    raise UsageError(f"image of {s!r} leaves the target alphabet")

    @cached_property
    def mapping(self):
        return dict(self.table)

    @property
    def is_alphabetic(self):
        return all(len(m.word) <= 1 for _, m in self.table)

    @property
    def is_unweighted(self):
        return (self.algebra == alg.BOOLEAN
                and all(m.weight.value is True for _, m in self.table))


def make_hom(source, target, algebra, images):
    """Build a WeightedHom from a mapping symbol -> (word, weight)."""
    table = tuple(sorted((s, monomial(w, wt)) for s, (w, wt) in images.items()))
    return WeightedHom(frozenset(source), frozenset(target), algebra, table)


def identity_hom(alphabet, algebra=alg.BOOLEAN):
    return make_hom(alphabet, alphabet,
                    algebra, {s: ((s,), one_weight(algebra)) for s in alphabet})


def apply_hom(h, word):
    """Image of a word: concatenated image words, multiplied image weights."""
    out = []
    weight = one_weight(h.algebra)
    for t in word:
        m = h.mapping.get(t)
        if m is None:
            raise UsageError(f"foreign symbol {t!r}")
        if m.is_zero:
            return monomial((), zero_weight(h.algebra))
        out.extend(m.word)
        weight = times(weight, m.weight)
    return monomial(out, weight)


def compose_alphabetic(h1, h2):
    """Compose a weighted alphabetic homomorphism after an unweighted one.

    Pointwise equal to applying h2 and then h1; the result is again
    alphabetic over h1's algebra.
    """
    if not h1.is_alphabetic:
        raise UsageError("left factor must be alphabetic")
    if not h2.is_alphabetic:
        raise UsageError("right factor must be alphabetic")
    if not h2.is_unweighted:
        raise UsageError("right factor must be an unweighted homomorphism")
    if set(h2.target) != set(h1.source):
        raise UsageError("alphabet mismatch: target of the right factor must "
                         "equal source of the left factor")
    table = []
    for s, m in h2.table:
        if m.word:
            table.append((s, h1.mapping[m.word[0]]))
        else:
            table.append((s, monomial((), one_weight(h1.algebra))))
    return WeightedHom(h2.source, h1.target, h1.algebra, tuple(sorted(table)))


def image_weighted(h, language):
    """Image of a finite (optionally weighted) language.

    Maps every output word to the sum of the images of its preimages; zero
    entries are dropped, so the empty language maps to the empty table.
    """
    if hasattr(language, "items"):
        items = list(language.items())
    else:
        items = [(w, one_weight(h.algebra)) for w in language]
    out = {}
    for word, wt in items:
        if wt.algebra != h.algebra:
            raise UsageError("language weights use a different algebra")
        m = apply_hom(h, word)
        total = times(wt, m.weight)
        if total.value == h.algebra.zero:
            continue
        prev = out.get(m.word)
        out[m.word] = total if prev is None else plus(prev, total)
    return {w: wt for w, wt in out.items() if wt.value != h.algebra.zero}
