"""Dyck languages, congruence multiple Dyck membership, and the multiple
Dyck grammar over a sorted alphabet.

Opening symbols in the same partition cell are linked: their matched pairs
must be cancelled simultaneously, with the enclosed material (in cell
order) again a member.  Membership is decided by splitting a Dyck word
into shortest pieces and searching over the cell-compatible partitions of
the pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product

from . import algebra as alg
from . import homomorphism as hom
from .errors import ParseError, UsageError
from .grammar import Composition, Production, SortedSymbol, Term, Var, WeightedMcfg


@dataclass(frozen=True)
class BracketAlphabet:
    """Opening symbols, their closing counterparts, and the linked cells.

    ``opening`` and ``closing`` pair positionally; ``cells`` partition the
    opening symbols.
    """

    opening: tuple
    closing: tuple
    cells: tuple

    def __post_init__(self):
        if len(self.opening) != len(self.closing):
            raise UsageError("opening/closing lists differ in length")
        if len(set(self.opening)) != len(self.opening):
            raise UsageError("duplicate opening symbol")
        if len(set(self.closing)) != len(self.closing):
            raise UsageError("duplicate closing symbol")
        if set(self.opening) & set(self.closing):
            raise UsageError("opening and closing alphabets overlap")
        covered = set()
        for cell in self.cells:
            if not cell:
                raise UsageError("empty partition cell")
            if covered & cell:
                raise UsageError("partition cells overlap")
            covered |= cell
        if covered != set(self.opening):
            raise UsageError("partition does not cover the opening alphabet")

    @cached_property
    def close_of(self):
        return dict(zip(self.opening, self.closing))

    @cached_property
    def open_of(self):
        return dict(zip(self.closing, self.opening))

    @cached_property
    def cell_of(self):
        return {sym: cell for cell in self.cells for sym in cell}

    @property
    def dimension(self):
        return max((len(c) for c in self.cells), default=0)

    @property
    def symbols(self):
        return set(self.opening) | set(self.closing)


def bracket_alphabet(opening, cells, closing=None):
    """Build an alphabet; closing symbols default to '~'-prefixed names."""
    opening = tuple(opening)
    if closing is None:
        closing = tuple("~" + s for s in opening)
    return BracketAlphabet(opening, tuple(closing),
                           tuple(frozenset(c) for c in cells))


def _check_symbols(ba, word):
    for i, t in enumerate(word):
        if t not in ba.close_of and t not in ba.open_of:
            raise UsageError(f"foreign symbol {t!r} at position {i}")


def _dyck_scan(ba, word):
    stack = []
    for t in word:
        c = ba.close_of.get(t)
        if c is not None:
            stack.append(c)
        elif stack and stack[-1] == t:
            stack.pop()
        else:
            return False
    return not stack


def is_dyck(ba, word):
    """True iff the word cancels to the empty word by matched-pair removal."""
    word = tuple(word)
    _check_symbols(ba, word)
    return _dyck_scan(ba, word)


def split(ba, word):
    """Cut a Dyck word into the shortest non-empty Dyck words composing it.

    Each piece has the shape: opening symbol, Dyck interior, its closing
    symbol.  The empty word corresponds to the empty tuple.
    """
    word = tuple(word)
    _check_symbols(ba, word)
    if not _dyck_scan(ba, word):
        raise UsageError("split needs a Dyck word")
    pieces = []
    depth = 0
    start = 0
    for i, t in enumerate(word):
        if t in ba.close_of:
            depth += 1
        else:
            depth -= 1
            if depth == 0:
                pieces.append(word[start:i + 1])
                start = i + 1
    return tuple(pieces)


def linked_partitions(ba, sigmas):
    """Partitions of the piece indices whose blocks carry exactly one
    occurrence of every symbol of one cell.

    Deterministic order: blocks are built around the least unused index,
    partner choices ascending.
    """
    n = len(sigmas)
    out = []

    def rec(unused, acc):
        if not unused:
            out.append(tuple(acc))
            return
        i = unused[0]
        cell = ba.cell_of[sigmas[i]]
        partners = sorted(cell - {sigmas[i]})
        pools = [[k for k in unused[1:] if sigmas[k] == t] for t in partners]
        if any(not pool for pool in pools):
            return
        for combo in product(*pools):
            block = tuple(sorted((i, *combo)))
            rest = [k for k in unused if k not in block]
            acc.append(block)
            rec(rest, acc)
            acc.pop()

    rec(list(range(n)), [])
    return tuple(out)


_member_caches = {}


def _member(ba, word, cache):
    hit = cache.get(word)
    if hit is not None:
        return hit
    if not word:
        result = True
    elif not _dyck_scan(ba, word):
        result = False
    else:
        pieces = []
        depth = 0
        start = 0
        for i, t in enumerate(word):
            if t in ba.close_of:
                depth += 1
            else:
                depth -= 1
                if depth == 0:
                    pieces.append(word[start:i + 1])
                    start = i + 1
        sigmas = tuple(p[0] for p in pieces)
        inners = tuple(p[1:-1] for p in pieces)
        result = False
        for blocks in linked_partitions(ba, sigmas):
            if all(_member(ba, sum((inners[i] for i in block), ()), cache)
                   for block in blocks):
                result = True
                break
    cache[word] = result
    return result


def is_member(ba, word):
    """Decide membership in the congruence multiple Dyck language."""
    word = tuple(word)
    _check_symbols(ba, word)
    cache = _member_caches.setdefault(ba, {})
    return _member(ba, word, cache)


def _fmt_block(block):
    return "{" + ",".join(str(i + 1) for i in block) + "}"


def member_trace(ba, word):
    """is_member with a call log mirroring the recursion.

    No memoization and no short-circuiting inside a partition, so the log
    shows every recursive call the plain recursion would make.
    """
    word = tuple(word)
    _check_symbols(ba, word)
    lines = []

    def rec(w, depth):
        pad = "  " * depth
        lines.append(f"{pad}isMember({' '.join(w) if w else 'eps'})")
        if not w:
            lines.append(f"{pad}  return 1  (empty word)")
            return True
        if not _dyck_scan(ba, w):
            lines.append(f"{pad}  return 0  (not a Dyck word)")
            return False
        pieces = split(ba, w)
        sigmas = tuple(p[0] for p in pieces)
        lines.append(f"{pad}  split: sigma = {' '.join(sigmas)}")
        parts = linked_partitions(ba, sigmas)
        lines.append(f"{pad}  partitions: "
                     + (", ".join("{" + ",".join(map(_fmt_block, bl)) + "}"
                                  for bl in parts) if parts else "none"))
        for blocks in parts:
            lines.append(f"{pad}  try {{{','.join(map(_fmt_block, blocks))}}}")
            b = True
            for block in blocks:
                inner = sum((pieces[i][1:-1] for i in block), ())
                b = rec(inner, depth + 1) and b
            if b:
                lines.append(f"{pad}  return 1")
                return True
        lines.append(f"{pad}  return 0")
        return False

    verdict = rec(word, 0)
    return verdict, tuple(lines)


# ---------------------------------------------------------------------------
# The multiple Dyck grammar over an N-sorted alphabet.

_DEFAULT_GUARD = 2
_DEFAULT_MAX_RULES = 10_000


def _interleavings(variables, fanout):
    """All tuples of ``fanout`` sequences using each variable exactly once.

    A tuple corresponds one-to-one to a permutation of the variables plus a
    cut of it into ``fanout`` consecutive (possibly empty) segments.
    """
    for order in permutations(variables):
        for cut in _cuts(len(order), fanout):
            comps = []
            pos = 0
            for size in cut:
                comps.append(order[pos:pos + size])
                pos += size
            yield tuple(comps)


def _cuts(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for head in range(total + 1):
        for rest in _cuts(total - head, parts - 1):
            yield (head, *rest)


def opening_name(symbol, index):
    return f"{symbol}^{index}"


def closing_name(symbol, index):
    return f"~{symbol}^{index}"


def multiple_dyck_grammar(sorted_alphabet, r, allow_large=False,
                          max_rules=_DEFAULT_MAX_RULES):
    """The canonical MCFG generating the multiple Dyck tuples over a sorted
    alphabet, with rank bound ``r``.

    Rule families: (i) every linear non-deleting terminal-free function of
    rank <= r over sorts <= k (including the nullary all-empty one),
    (ii) per symbol of sort s, the wrapping rule that surrounds each of the
    s components with the symbol's indexed bracket pair, and (iii) the
    padding rules that concatenate a sort-1 bracket pair to the left or
    right of any component.
    """
    sorts = dict(sorted_alphabet)
    for name, s in sorts.items():
        if s < 1:
            raise UsageError(f"sorted symbol {name} must have sort >= 1")
    k = max(sorts.values(), default=1)
    if r < k:
        raise UsageError(f"rank bound {r} below the maximal sort {k}")
    if (r > _DEFAULT_GUARD or k > _DEFAULT_GUARD) and not allow_large:
        raise UsageError(
            f"rank/sort {r}/{k} above the desk-scale guard {_DEFAULT_GUARD}; "
            "pass allow_large to override")

    nts = {s: f"A{s}" for s in range(1, k + 1)}
    terminals = []
    for name in sorted(sorts):
        for i in range(1, sorts[name] + 1):
            terminals.append(opening_name(name, i))
            terminals.append(closing_name(name, i))

    one = alg.one_weight(alg.BOOLEAN)
    productions = []
    seen = set()

    def add(pid, lhs_sort, comp, rhs_sorts):
        key = (lhs_sort, comp, rhs_sorts)
        if key in seen:
            return
        seen.add(key)
        productions.append(Production(
            pid, nts[lhs_sort],
            Composition(rhs_sorts, comp),
            tuple(nts[s] for s in rhs_sorts), one))
        if len(productions) > max_rules:
            raise UsageError(f"rule count exceeds the cap {max_rules}")

    counter = 0
    for s in range(1, k + 1):
        for ell in range(0, r + 1):
            for arg_sorts in product(range(1, k + 1), repeat=ell):
                variables = [Var(i + 1, j + 1)
                             for i, si in enumerate(arg_sorts) for j in range(si)]
                for comps in _interleavings(variables, s):
                    counter += 1
                    add(f"f{counter}", s, comps, tuple(arg_sorts))

    for name in sorted(sorts):
        s = sorts[name]
        comp = tuple(
            (Term(opening_name(name, j + 1)), Var(1, j + 1),
             Term(closing_name(name, j + 1)))
            for j in range(s))
        add(f"wrap:{name}", s, comp, (s,))

    unary = sorted(name for name, s in sorts.items() if s == 1)
    for s in range(1, k + 1):
        options = []
        for j in range(1, s + 1):
            opts = [(Var(1, j),)]
            for name in unary:
                pair = (Term(opening_name(name, 1)), Term(closing_name(name, 1)))
                opts.append((Var(1, j), *pair))
                opts.append((*pair, Var(1, j)))
            options.append(opts)
        for idx, comps in enumerate(product(*options), 1):
            add(f"pad:{s}:{idx}", s, tuple(comps), (s,))

    return WeightedMcfg(
        nonterminals=tuple(SortedSymbol(nts[s], s) for s in range(1, k + 1)),
        terminals=frozenset(terminals),
        initial=nts[1],
        productions=tuple(productions),
        algebra=alg.BOOLEAN,
    )


def partition_grammar(ba, r, allow_large=False, max_rules=_DEFAULT_MAX_RULES):
    """The multiple Dyck grammar over the partition viewed as a sorted set
    (sort of a cell = its cardinality), plus the relabelling homomorphism
    sending the cell's i-th indexed bracket to its i-th opening symbol.

    Cell elements are enumerated in sorted order.
    """
    if r < max(ba.dimension, 1):
        raise UsageError(f"rank bound {r} below the partition dimension")
    cells = sorted(ba.cells, key=lambda c: tuple(sorted(c)))
    names = {f"c{i}": cell for i, cell in enumerate(cells, 1)}
    g = multiple_dyck_grammar({n: len(c) for n, c in names.items()}, r,
                              allow_large=allow_large, max_rules=max_rules)
    table = {}
    for n, cell in names.items():
        for i, sym in enumerate(sorted(cell), 1):
            table[opening_name(n, i)] = hom.Monomial((sym,),
                                                     alg.one_weight(alg.BOOLEAN))
            table[closing_name(n, i)] = hom.Monomial((ba.close_of[sym],),
                                                     alg.one_weight(alg.BOOLEAN))
    relabel = hom.WeightedHom(
        source=frozenset(table),
        target=frozenset(ba.symbols),
        algebra=alg.BOOLEAN,
        table=tuple(sorted(table.items())),
    )
    return g, relabel


# ---------------------------------------------------------------------------
# Partition files.
#
#   symbols ( < [ ...          opening symbols
#   closing ) > ] ...          optional, positional; default ~-prefixed
#   cell ( <                   one line per cell


def parse_partition(text):
    opening = None
    closing = None
    cells = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]
        if kind == "symbols":
            opening = tuple(args)
        elif kind == "closing":
            closing = tuple(args)
        elif kind == "cell":
            cells.append(frozenset(args))
        else:
            raise ParseError(f"line {lineno}: unrecognized directive {kind!r}")
    if opening is None:
        raise ParseError("partition file needs a symbols line")
    try:
        return bracket_alphabet(opening, cells, closing)
    except UsageError as exc:
        raise ParseError(str(exc)) from exc


def format_partition(ba):
    lines = [f"symbols {' '.join(ba.opening)}",
             f"closing {' '.join(ba.closing)}"]
    for cell in sorted(ba.cells, key=lambda c: tuple(sorted(c))):
        lines.append("cell " + " ".join(sorted(cell)))
    return "\n".join(lines) + "\n"
