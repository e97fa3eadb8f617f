"""Grammar transformations: non-deleting normal form, rhs-distinctness,
weight separation into an unweighted marker grammar plus a weight
homomorphism, and the marker-word decoder.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from . import algebra as alg
from .algebra import one_weight
from .errors import DecodeError, UsageError
from .grammar import (Composition, Derivation, Production, SortedSymbol, Term,
                      Var, WeightedMcfg, check_derivation, prune_unproductive)
from .homomorphism import Monomial, WeightedHom

__all__ = [
    "SeparationResult", "to_nondeleting", "make_rhs_distinct",
    "boolean_part", "to_deriv", "marker_name",
]


def _psi_name(nt, psi):
    if not psi:
        return nt
    return f"{nt}[{','.join(str(j) for j in sorted(psi))}]"


def to_nondeleting(g):
    """An equivalent non-deleting grammar of the same fan-out.

    Nonterminals become (symbol, deleted-component-set) pairs discovered by
    search from the initial symbol with nothing deleted; each production is
    specialized per deletion set, dropped variables are removed and the
    surviving ones renumbered.  Deleting every component of a child leaves
    a fan-out-0 nonterminal on the right-hand side, preserving derivation
    structure and weights.
    """
    sort_of = g.sort_of
    start_key = (g.initial, frozenset())
    agenda = [start_key]
    seen = {start_key}
    new_prods = []
    while agenda:
        nt, psi = agenda.pop()
        kept = [j for j in range(1, sort_of[nt] + 1) if j not in psi]
        for p in g.prods_by_lhs[nt]:
            kept_comps = [p.comp.components[j - 1] for j in kept]
            used = {i: set() for i in range(1, p.rank + 1)}
            for comp in kept_comps:
                for item in comp:
                    if isinstance(item, Var):
                        used[item.arg].add(item.comp)
            child_keys = []
            renumber = {}
            for i, b in enumerate(p.rhs, 1):
                child_psi = frozenset(
                    j for j in range(1, sort_of[b] + 1) if j not in used[i])
                child_keys.append((b, child_psi))
                keep = sorted(used[i])
                renumber[i] = {old: new for new, old in enumerate(keep, 1)}
            comps = tuple(
                tuple(item if isinstance(item, Term)
                      else Var(item.arg, renumber[item.arg][item.comp])
                      for item in comp)
                for comp in kept_comps)
            pid = p.id if not psi else f"{p.id}[{','.join(map(str, sorted(psi)))}]"
            new_prods.append((pid, _psi_name(nt, psi), comps,
                              tuple(_psi_name(b, ps) for b, ps in child_keys),
                              tuple(sort_of[b] - len(ps) for b, ps in child_keys),
                              p.weight))
            for key in child_keys:
                if key not in seen:
                    seen.add(key)
                    agenda.append(key)

    nonterminals = tuple(
        SortedSymbol(name, srt)
        for name, srt in sorted((_psi_name(nt, psi), sort_of[nt] - len(psi))
                                for nt, psi in seen))
    productions = tuple(
        Production(pid, lhs, Composition(arg_sorts, comps), rhs, w)
        for pid, lhs, comps, rhs, arg_sorts, w in new_prods)
    out = WeightedMcfg(nonterminals, g.terminals, _psi_name(g.initial, frozenset()),
                       productions, g.algebra)
    out = prune_unproductive(out)
    assert out.is_nondeleting
    return out


def make_rhs_distinct(g):
    """Rename duplicate right-hand-side occurrences to numbered copies.

    The k-th duplicate occurrence of A becomes A#k, whose productions are
    copies of A's with weights kept verbatim; copies are processed in turn
    until no production repeats a nonterminal.
    """
    base_of = {s.name: s.name for s in g.nonterminals}
    sorts = dict(g.sort_of)
    prods = {s.name: list(g.prods_by_lhs[s.name]) for s in g.nonterminals}
    order = [s.name for s in g.nonterminals]
    agenda = list(order)
    changed = False

    def ensure_copy(name, k):
        copy = f"{base_of[name]}#{k}"
        if copy in sorts:
            return copy
        sorts[copy] = sorts[name]
        base_of[copy] = base_of[name]
        prods[copy] = [
            Production(f"{p.id}#{k}", copy, p.comp, p.rhs, p.weight)
            for p in prods[base_of[name]]]
        order.append(copy)
        agenda.append(copy)
        return copy

    while agenda:
        nt = agenda.pop(0)
        fixed = []
        for p in prods[nt]:
            counts = {}
            rhs = []
            for b in p.rhs:
                counts[b] = counts.get(b, 0) + 1
                if counts[b] == 1:
                    rhs.append(b)
                else:
                    rhs.append(ensure_copy(b, counts[b]))
            if tuple(rhs) != p.rhs:
                changed = True
                fixed.append(Production(p.id, p.lhs, p.comp, tuple(rhs), p.weight))
            else:
                fixed.append(p)
        prods[nt] = fixed

    if not changed and len(order) == len(g.nonterminals):
        return g
    nonterminals = tuple(SortedSymbol(n, sorts[n]) for n in order)
    productions = tuple(p for n in order for p in prods[n])
    return WeightedMcfg(nonterminals, g.terminals, g.initial, productions,
                        g.algebra)


def marker_name(rule_id, index):
    return f"{rule_id}^{index}"


@dataclass(frozen=True)
class SeparationResult:
    """An unweighted marker grammar plus the weight homomorphism that
    recovers the original weighted language."""

    source: WeightedMcfg
    boolean_grammar: WeightedMcfg
    weight_hom: WeightedHom
    markers: tuple

    @cached_property
    def production_bijection(self):
        # Marker productions keep their source ids.
        return {p.id: p.id for p in self.boolean_grammar.productions}


def boolean_part(g):
    """Split a non-deleting weighted grammar into its marker grammar and
    weight homomorphism.

    Component j of every rule is prefixed with the fresh marker terminal
    ``<id>^j``; the homomorphism erases markers, keeps terminals, and
    charges the rule's weight on marker 1.
    """
    if not g.is_nondeleting:
        raise UsageError("weight separation needs a non-deleting grammar; "
                         "apply to_nondeleting first")
    markers = []
    for p in g.productions:
        for i in range(1, p.fanout + 1):
            m = marker_name(p.id, i)
            if m in g.terminals:
                raise UsageError(f"marker {m!r} collides with a terminal")
            markers.append(m)
    one_bool = one_weight(alg.BOOLEAN)
    bool_prods = tuple(
        Production(
            p.id, p.lhs,
            Composition(p.comp.arg_sorts, tuple(
                (Term(marker_name(p.id, j)), *comp)
                for j, comp in enumerate(p.comp.components, 1))),
            p.rhs, one_bool)
        for p in g.productions)
    boolean_grammar = WeightedMcfg(
        g.nonterminals, g.terminals | frozenset(markers), g.initial,
        bool_prods, alg.BOOLEAN)

    one = one_weight(g.algebra)
    table = {t: Monomial((t,), one) for t in g.terminals}
    for p in g.productions:
        table[marker_name(p.id, 1)] = Monomial((), p.weight)
        for i in range(2, p.fanout + 1):
            table[marker_name(p.id, i)] = Monomial((), one)
    weight_hom = WeightedHom(
        source=frozenset(table),
        target=g.terminals,
        algebra=g.algebra,
        table=tuple(sorted(table.items())),
    )
    return SeparationResult(g, boolean_grammar, weight_hom, tuple(markers))


def to_deriv(sep, word):
    """Decode a marker-grammar word into the source derivation it encodes.

    Walks the word left to right: at each node the next symbol must be the
    marker of the expected component of a rule with the expected left-hand
    side; terminals are matched literally and variables recurse.
    """
    g = sep.boolean_grammar
    src = sep.source
    word = tuple(word)
    n = len(word)
    marker_info = {}
    for p in src.productions:
        for j in range(1, p.fanout + 1):
            marker_info[marker_name(p.id, j)] = (p.id, j)
    assignment = {}
    pos = 0

    def descend(path, j, expected_lhs):
        nonlocal pos
        if pos >= n:
            raise DecodeError("word ended inside a component", pos)
        info = marker_info.get(word[pos])
        if info is None:
            raise DecodeError(f"expected a rule marker, found {word[pos]!r}", pos)
        rid, idx = info
        p = src.prod_by_id[rid]
        if idx != j:
            raise DecodeError(f"marker {word[pos]!r} opens component {idx}, "
                              f"expected {j}", pos)
        if p.lhs != expected_lhs:
            raise DecodeError(f"rule {rid} derives {p.lhs}, expected "
                              f"{expected_lhs}", pos)
        if path in assignment and assignment[path] != rid:
            raise DecodeError(f"components disagree at node {path}: "
                              f"{assignment[path]} vs {rid}", pos)
        assignment[path] = rid
        pos += 1
        for item in p.comp.components[j - 1]:
            if isinstance(item, Term):
                if pos >= n or word[pos] != item.sym:
                    found = word[pos] if pos < n else "end of word"
                    raise DecodeError(f"expected terminal {item.sym!r}, "
                                      f"found {found}", pos)
                pos += 1
            else:
                descend((*path, item.arg), item.comp, p.rhs[item.arg - 1])

    descend((), 1, src.initial)
    if pos != n:
        raise DecodeError("trailing symbols after the decoded derivation", pos)
    try:
        d = Derivation.from_pos_map(assignment)
        check_derivation(src, d, src.initial)
    except UsageError as exc:
        raise DecodeError(str(exc)) from exc
    return d
