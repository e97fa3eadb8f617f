"""Finite state automata with word-labelled transitions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import UsageError


@dataclass(frozen=True)
class Fsa:
    states: frozenset
    alphabet: frozenset
    initial: str
    finals: frozenset
    transitions: frozenset  # of (state, label word, state)

    def __post_init__(self):
        if self.initial not in self.states:
            raise UsageError("initial state unknown")
        if not self.finals <= self.states:
            raise UsageError("final states unknown")
        if self.states & self.alphabet:
            raise UsageError("states and alphabet overlap")
        for q, label, q2 in self.transitions:
            if q not in self.states or q2 not in self.states:
                raise UsageError(f"transition {q}->{q2} uses unknown states")
            for t in label:
                if t not in self.alphabet:
                    raise UsageError(f"transition label symbol {t!r} not in alphabet")

    @cached_property
    def outgoing(self):
        out = {q: [] for q in self.states}
        for q, label, q2 in self.transitions:
            out[q].append((label, q2))
        for q in out:
            out[q].sort()
        return out


def accepts(m, word):
    """True iff some run reads exactly the word.  Foreign symbols simply
    make the word unaccepted."""
    word = tuple(word)
    if any(t not in m.alphabet for t in word):
        return False
    n = len(word)
    seen = {(m.initial, 0)}
    agenda = [(m.initial, 0)]
    while agenda:
        q, pos = agenda.pop()
        if pos == n and q in m.finals:
            return True
        for label, q2 in m.outgoing[q]:
            end = pos + len(label)
            if end <= n and word[pos:end] == label and (q2, end) not in seen:
                seen.add((q2, end))
                agenda.append((q2, end))
    return False


def enumerate_language(m, max_len):
    """Exactly the accepted words of length <= max_len.

    Breadth-first over (state, word) configurations; exponential in the
    bound, intended for desk-scale machines.
    """
    seen = {(m.initial, ())}
    frontier = [(m.initial, ())]
    accepted = set()
    while frontier:
        nxt = []
        for q, word in frontier:
            if q in m.finals:
                accepted.add(word)
            for label, q2 in m.outgoing[q]:
                w2 = word + label
                if len(w2) <= max_len and (q2, w2) not in seen:
                    seen.add((q2, w2))
                    nxt.append((q2, w2))
        frontier = nxt
    return frozenset(accepted)


def _exploded(m):
    """Split word labels into chains of single-symbol transitions."""
    transitions = []
    counter = 0
    for q, label, q2 in sorted(m.transitions):
        if len(label) <= 1:
            transitions.append((q, label, q2))
            continue
        prev = q
        for t in label[:-1]:
            counter += 1
            mid = f"{q}%{counter}"
            transitions.append((prev, (t,), mid))
            prev = mid
        transitions.append((prev, (label[-1],), q2))
    return transitions


def is_deterministic(m):
    """No epsilon labels and, after exploding word labels into chains of
    fresh states, no state with two outgoing transitions on one symbol."""
    by_state = {}
    for q, label, q2 in _exploded(m):
        if not label:
            return False
        key = (q, label[0])
        if key in by_state and by_state[key] != q2:
            return False
        by_state[key] = q2
    return True


def format_fsa(m):
    """Textual dump: initial/final lines then one transition per line."""
    lines = [f"initial {m.initial}"]
    if m.finals:
        lines.append("final " + " ".join(sorted(m.finals)))
    for q, label, q2 in sorted(m.transitions):
        lines.append(f"{q} -- {' '.join(label) if label else 'eps'} --> {q2}")
    return "\n".join(lines) + "\n"
