"""Sorted alphabets, composition representations, weighted MCFGs, and
height-bounded derivation semantics.

Words are tuples of tokens (whitespace-separated symbol names), never raw
character strings, so multi-character terminals and bracket symbols stay
unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from pathlib import Path

from . import algebra as alg
from .algebra import Weight, one_weight, parse_weight, sum_weights, times, zero_weight
from .errors import ParseError, UsageError


@dataclass(frozen=True)
class SortedSymbol:
    name: str
    sort: int

    def __post_init__(self):
        if self.sort < 0:
            raise UsageError(f"negative sort for {self.name}")


@dataclass(frozen=True)
class Term:
    """A terminal occurrence inside a composition component."""

    sym: str


@dataclass(frozen=True)
class Var:
    """Component ``comp`` of argument ``arg`` (both 1-based)."""

    arg: int
    comp: int


@dataclass(frozen=True)
class Composition:
    """A linear string function given by its component representation.

    ``components[j-1]`` is the token sequence for output component j; each
    item is a Term or a Var bounded by ``arg_sorts``.
    """

    arg_sorts: tuple
    components: tuple

    def __post_init__(self):
        seen = set()
        for comp in self.components:
            for item in comp:
                if isinstance(item, Var):
                    if not (1 <= item.arg <= len(self.arg_sorts)):
                        raise UsageError(f"variable x{item.arg}.{item.comp} out of rank")
                    if not (1 <= item.comp <= self.arg_sorts[item.arg - 1]):
                        raise UsageError(
                            f"variable x{item.arg}.{item.comp} exceeds sort "
                            f"{self.arg_sorts[item.arg - 1]}")
                    if item in seen:
                        raise UsageError(
                            f"non-linear composition: x{item.arg}.{item.comp} repeats")
                    seen.add(item)
                elif not isinstance(item, Term):
                    raise UsageError(f"bad composition item {item!r}")

    @property
    def arity(self):
        return len(self.arg_sorts)

    @property
    def fanout(self):
        return len(self.components)

    def variables(self):
        return [it for comp in self.components for it in comp if isinstance(it, Var)]

    def terminals(self):
        return [it.sym for comp in self.components for it in comp if isinstance(it, Term)]

    @property
    def is_nondeleting(self):
        needed = {Var(i + 1, j + 1)
                  for i, s in enumerate(self.arg_sorts) for j in range(s)}
        return set(self.variables()) == needed

    @property
    def is_terminal_free(self):
        return not self.terminals()


@dataclass(frozen=True)
class Production:
    id: str
    lhs: str
    comp: Composition
    rhs: tuple
    weight: Weight

    def __post_init__(self):
        if len(self.rhs) != self.comp.arity:
            raise UsageError(f"rule {self.id}: rhs length != composition arity")

    @property
    def rank(self):
        return len(self.rhs)

    @property
    def fanout(self):
        return self.comp.fanout


@dataclass(frozen=True)
class WeightedMcfg:
    """A weighted MCFG; the unweighted case is the boolean algebra with all
    weights equal to one."""

    nonterminals: tuple
    terminals: frozenset
    initial: str
    productions: tuple
    algebra: alg.Bimonoid

    def __post_init__(self):
        sorts = {}
        for sym in self.nonterminals:
            if sym.name in sorts:
                raise UsageError(f"duplicate nonterminal {sym.name}")
            sorts[sym.name] = sym.sort
        if self.initial not in sorts:
            raise UsageError(f"initial symbol {self.initial} is not a nonterminal")
        if sorts[self.initial] != 1:
            raise UsageError(f"initial symbol {self.initial} must have sort 1")
        if self.terminals & sorts.keys():
            raise UsageError("terminal and nonterminal names overlap")
        seen_ids = set()
        for p in self.productions:
            if p.id in seen_ids:
                raise UsageError(f"duplicate rule id {p.id}")
            seen_ids.add(p.id)
            if p.lhs not in sorts:
                raise UsageError(f"rule {p.id}: unknown lhs {p.lhs}")
            if p.comp.fanout != sorts[p.lhs]:
                raise UsageError(
                    f"rule {p.id}: fan-out {p.comp.fanout} != sort({p.lhs})")
            for i, b in enumerate(p.rhs):
                if b not in sorts:
                    raise UsageError(f"rule {p.id}: unknown rhs symbol {b}")
                if p.comp.arg_sorts[i] != sorts[b]:
                    raise UsageError(
                        f"rule {p.id}: argument {i + 1} sort mismatch for {b}")
            for t in p.comp.terminals():
                if t not in self.terminals:
                    raise UsageError(f"rule {p.id}: unknown terminal {t!r}")
            if p.weight.algebra != self.algebra:
                raise UsageError(f"rule {p.id}: weight from a different algebra")
            if p.weight.value == self.algebra.zero:
                raise UsageError(f"rule {p.id}: weight must be nonzero")

    @cached_property
    def sort_of(self):
        return {s.name: s.sort for s in self.nonterminals}

    @cached_property
    def prod_by_id(self):
        return {p.id: p for p in self.productions}

    @cached_property
    def prods_by_lhs(self):
        out = {s.name: [] for s in self.nonterminals}
        for p in self.productions:
            out[p.lhs].append(p)
        return out

    @property
    def weights(self):
        return {p.id: p.weight for p in self.productions}

    @property
    def fanout(self):
        return max((p.fanout for p in self.productions), default=0)

    @property
    def rank(self):
        return max((p.rank for p in self.productions), default=0)

    @property
    def is_nondeleting(self):
        return all(p.comp.is_nondeleting for p in self.productions)


def apply_function(comp, args):
    """Evaluate a composition on string tuples (each a tuple of token tuples)."""
    if len(args) != comp.arity:
        raise UsageError(f"expected {comp.arity} arguments, got {len(args)}")
    for i, (a, s) in enumerate(zip(args, comp.arg_sorts)):
        if len(a) != s:
            raise UsageError(f"argument {i + 1} has {len(a)} components, wants {s}")
    out = []
    for component in comp.components:
        word = []
        for item in component:
            if isinstance(item, Term):
                word.append(item.sym)
            else:
                word.extend(args[item.arg - 1][item.comp - 1])
        out.append(tuple(word))
    return tuple(out)


@dataclass(frozen=True)
class Derivation:
    """A sort-correct tree of production ids."""

    rule: str
    children: tuple = ()

    @property
    def height(self):
        return 1 + max((c.height for c in self.children), default=0)

    def pos_map(self):
        """Positions (tuples of 1-based child indices) to production ids."""
        out = {(): self.rule}
        for i, c in enumerate(self.children, 1):
            for pos, r in c.pos_map().items():
                out[(i, *pos)] = r
        return out

    def listing(self):
        return tuple(sorted(self.pos_map().items()))

    @staticmethod
    def from_pos_map(mapping):
        if () not in mapping:
            raise UsageError("derivation map lacks a root")

        def build(prefix):
            kids = []
            i = 1
            while (*prefix, i) in mapping:
                kids.append(build((*prefix, i)))
                i += 1
            return Derivation(mapping[prefix], tuple(kids))

        d = build(())
        if len(d.pos_map()) != len(mapping):
            raise UsageError("derivation map has unreachable positions")
        return d


def check_derivation(g, d, expected=None):
    """Validate well-sortedness; returns the root's lhs nonterminal."""
    p = g.prod_by_id.get(d.rule)
    if p is None:
        raise UsageError(f"unknown production {d.rule}")
    if expected is not None and p.lhs != expected:
        raise UsageError(f"ill-sorted derivation: {d.rule} derives {p.lhs}, "
                         f"expected {expected}")
    if len(d.children) != p.rank:
        raise UsageError(f"ill-sorted derivation: {d.rule} needs {p.rank} children")
    for b, c in zip(p.rhs, d.children):
        check_derivation(g, c, b)
    return p.lhs


def yield_of(g, d):
    """Bottom-up evaluation of the composition functions along a derivation."""
    check_derivation(g, d)
    return _eval(g, d)


def _eval(g, d):
    p = g.prod_by_id[d.rule]
    return apply_function(p.comp, [_eval(g, c) for c in d.children])


@lru_cache(maxsize=None)
def _derivs(g, nonterminal, max_height):
    if max_height <= 0:
        return ()
    out = []
    for p in g.prods_by_lhs[nonterminal]:
        for kids in product(*(_derivs(g, b, max_height - 1) for b in p.rhs)):
            out.append(Derivation(p.id, kids))
    out.sort(key=Derivation.listing)
    return tuple(out)


def enumerate_derivations(g, nonterminal, max_height):
    """All well-sorted trees of height <= max_height rooted at a nonterminal."""
    if nonterminal not in g.sort_of:
        raise UsageError(f"unknown nonterminal {nonterminal}")
    if max_height < 1:
        raise UsageError("max_height must be at least 1")
    return _derivs(g, nonterminal, max_height)


def derivations_of(g, word, max_height):
    """Derivations from the initial symbol whose yield is the given word."""
    word = tuple(word)
    table = _yield_index(g, max_height)
    return table.get(word, ())


@lru_cache(maxsize=None)
def _yield_index(g, max_height):
    out = {}
    for d in _derivs(g, g.initial, max_height):
        (w,) = _eval(g, d)
        out.setdefault(w, []).append(d)
    return {w: tuple(ds) for w, ds in out.items()}


def derivation_weight(g, d):
    """Product of the rule weights at every position of the derivation."""
    check_derivation(g, d)
    acc = one_weight(g.algebra)
    for rule in d.pos_map().values():
        acc = times(acc, g.prod_by_id[rule].weight)
    return acc


@dataclass(frozen=True)
class SemanticsResult:
    weight: Weight
    truncated: bool


def weighted_semantics(g, word, max_height):
    """Sum of derivation weights over the derivations of the word.

    The result is exact when ``max_height`` provably covers every
    derivation of words of this length; otherwise ``truncated`` is set.
    """
    word = tuple(word)
    table = _semantics_table(g, max_height)
    weight = table.get(word, zero_weight(g.algebra))
    needed = max_height_for_word_len(g, len(word))
    truncated = needed is None or max_height < needed
    return SemanticsResult(weight, truncated)


@lru_cache(maxsize=None)
def _semantics_table(g, max_height):
    out = {}
    for word, ds in _yield_index(g, max_height).items():
        out[word] = sum_weights(g.algebra, (derivation_weight(g, d) for d in ds))
    return out


def prune_unproductive(g):
    """Drop nonterminals that admit no finite subderivation.

    The initial symbol always survives; if it is unproductive the result
    simply has no productions from it (the empty-language case).
    """
    productive = set()
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if p.lhs not in productive and all(b in productive for b in p.rhs):
                productive.add(p.lhs)
                changed = True
    keep = productive | {g.initial}
    return WeightedMcfg(
        nonterminals=tuple(s for s in g.nonterminals if s.name in keep),
        terminals=g.terminals,
        initial=g.initial,
        productions=tuple(p for p in g.productions
                          if p.lhs in productive and all(b in productive for b in p.rhs)),
        algebra=g.algebra,
    )


def is_empty_language(g):
    return not g.prods_by_lhs.get(g.initial)


class _Unbounded(Exception):
    pass


def _splits(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for head in range(total + 1):
        for rest in _splits(total - head, parts - 1):
            yield (head, *rest)


def _max_deriv_stat(g, start, budget, contrib, fold):
    """Max of a per-node statistic over subderivations with <= budget terminals.

    ``contrib(p)`` is the node's own value, ``fold`` combines it with the
    child values (sum for sizes, max for heights).  Returns None when no
    derivation fits; raises _Unbounded on a zero-terminal pump cycle.
    """
    memo = {}
    on_stack = set()

    def best(nt, t):
        key = (nt, t)
        if key in memo:
            return memo[key]
        if key in on_stack:
            raise _Unbounded
        on_stack.add(key)
        out = None
        for p in g.prods_by_lhs[nt]:
            terms = len(p.comp.terminals())
            if terms > t:
                continue
            for split in _splits(t - terms, p.rank):
                vals = [best(b, tb) for b, tb in zip(p.rhs, split)]
                if any(v is None for v in vals):
                    continue
                cand = fold(contrib(p), vals)
                if out is None or cand > out:
                    out = cand
        on_stack.discard(key)
        memo[key] = out
        return out

    return best(start, budget)


@lru_cache(maxsize=None)
def max_height_for_word_len(g, word_len):
    """A height bound covering every derivation of words up to the length.

    Only meaningful for non-deleting grammars (there the yield length equals
    the number of terminal occurrences in the tree); returns None when the
    bound cannot be certified (deleting input, or a pump cycle that adds no
    terminals).
    """
    if not g.is_nondeleting:
        return None
    gp = prune_unproductive(g)
    best = 0
    try:
        for t in range(word_len + 1):
            h = _max_deriv_stat(gp, gp.initial, t, lambda p: 1,
                                lambda own, vals: own + max(vals, default=0))
            if h is not None and h > best:
                best = h
    except _Unbounded:
        return None
    return best if best > 0 else 1


def generated_tuples(g, max_total_len):
    """Least fixpoint of the rule applications, restricted to tuples whose
    component lengths sum to at most the bound.

    Exact for non-deleting grammars: every tuple used in deriving a short
    word is itself short.  Evaluated semi-naively (each round joins at
    least one tuple from the previous round's frontier).
    """
    if not g.is_nondeleting:
        raise UsageError("generated_tuples needs a non-deleting grammar")

    def total(tup):
        return sum(len(c) for c in tup)

    known = {s.name: set() for s in g.nonterminals}
    frontier = {s.name: set() for s in g.nonterminals}
    for p in g.productions:
        if p.rank == 0:
            val = apply_function(p.comp, ())
            if total(val) <= max_total_len:
                frontier[p.lhs].add(val)
    while any(frontier.values()):
        nxt = {s.name: set() for s in g.nonterminals}
        for p in g.productions:
            if p.rank == 0:
                continue
            base = len(p.comp.terminals())
            for mask in range(1, 1 << p.rank):
                pools = [frontier[b] if mask & (1 << i) else known[b]
                         for i, b in enumerate(p.rhs)]
                if any(not pool for pool in pools):
                    continue
                for args in product(*pools):
                    if base + sum(total(a) for a in args) > max_total_len:
                        continue
                    val = apply_function(p.comp, args)
                    if (val not in known[p.lhs] and val not in frontier[p.lhs]
                            and val not in nxt[p.lhs]):
                        nxt[p.lhs].add(val)
        for nt in known:
            known[nt] |= frontier[nt]
        frontier = {nt: nxt[nt] - known[nt] for nt in nxt}
    return known


def bounded_language(g, max_len):
    """The words of length <= max_len generated from the initial symbol."""
    tuples = generated_tuples(g, max_len)
    return frozenset(w for (w,) in tuples[g.initial] if len(w) <= max_len)


# ---------------------------------------------------------------------------
# Grammar file format.
#
#   # comment (whole line)
#   algebra <name>
#   start <NT>
#   rule <id>: <NT> -> [ <comp> (; <comp>)* ] ( <NT>, ... ) @ <weight>
#
# A component is a sequence of tokens: 'terminal' or x<i>.<j>; a single
# `eps` denotes the empty component, and `[]` a fan-out-0 composition.
# The weight suffix is optional and defaults to one.


def _find_unquoted(text, chars, start=0):
    quoted = False
    for i in range(start, len(text)):
        c = text[i]
        if c == "'":
            quoted = not quoted
        elif not quoted and c in chars:
            return i
    return -1


def _split_unquoted(text, sep):
    parts, buf, quoted, depth = [], [], False, 0
    for c in text:
        if c == "'":
            quoted = not quoted
            buf.append(c)
        elif not quoted and c == "[":
            depth += 1
            buf.append(c)
        elif not quoted and c == "]":
            depth -= 1
            buf.append(c)
        elif not quoted and depth == 0 and c == sep:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(c)
    parts.append("".join(buf))
    return parts


def _comp_tokens(text, where):
    tokens, buf, quoted = [], [], False
    for c in text + " ":
        if c == "'":
            quoted = not quoted
            buf.append(c)
        elif c.isspace() and not quoted:
            if buf:
                tokens.append("".join(buf))
                buf = []
        else:
            buf.append(c)
    if quoted:
        raise ParseError(f"{where}: unterminated quote")
    items = []
    for tok in tokens:
        if tok.startswith("'") and tok.endswith("'") and len(tok) >= 3:
            items.append(Term(tok[1:-1]))
        elif tok == "eps":
            items.append("eps")
        elif tok.startswith("x"):
            body = tok[1:].split(".")
            if len(body) != 2 or not all(b.isdigit() for b in body):
                raise ParseError(f"{where}: bad variable token {tok!r}")
            items.append(Var(int(body[0]), int(body[1])))
        else:
            raise ParseError(f"{where}: bad token {tok!r}")
    if "eps" in items:
        if len(items) != 1:
            raise ParseError(f"{where}: eps must stand alone in a component")
        return ()
    return tuple(items)


def _parse_rule_line(line, where):
    body = line[len("rule"):].strip()
    colon = _find_unquoted(body, ":")
    if colon < 0:
        raise ParseError(f"{where}: missing ':' after rule id")
    rid = body[:colon].strip()
    if not rid or any(c.isspace() for c in rid):
        raise ParseError(f"{where}: bad rule id {rid!r}")
    rest = body[colon + 1:].strip()
    arrow = rest.find("->")
    if arrow < 0:
        raise ParseError(f"{where}: missing '->'")
    lhs = rest[:arrow].strip()
    if not lhs:
        raise ParseError(f"{where}: missing lhs")
    rest = rest[arrow + 2:].strip()
    if not rest.startswith("["):
        raise ParseError(f"{where}: composition must start with '['")
    close = _find_unquoted(rest, "]", 1)
    if close < 0:
        raise ParseError(f"{where}: unclosed composition bracket")
    comp_text = rest[1:close]
    rest = rest[close + 1:].strip()
    if not rest.startswith("("):
        raise ParseError(f"{where}: missing rhs list")
    rparen = _find_unquoted(rest, ")", 1)
    if rparen < 0:
        raise ParseError(f"{where}: unclosed rhs list")
    rhs_text = rest[1:rparen]
    tail = rest[rparen + 1:].strip()
    weight_lit = None
    if tail:
        if not tail.startswith("@"):
            raise ParseError(f"{where}: unexpected trailing text {tail!r}")
        weight_lit = tail[1:].strip()
        if not weight_lit:
            raise ParseError(f"{where}: missing weight after '@'")

    if comp_text.strip() == "" and _find_unquoted(comp_text, ";") < 0:
        comps = ()
    else:
        comps = tuple(_comp_tokens(part, where)
                      for part in _split_unquoted(comp_text, ";"))
    rhs = tuple(s.strip() for s in _split_unquoted(rhs_text, ",") if s.strip())
    return rid, lhs, comps, rhs, weight_lit


def parse_grammar(text, base_dir=None):
    """Parse the line-oriented grammar format into a validated WeightedMcfg."""
    algebra = alg.BOOLEAN
    start = None
    raw_rules = []
    for lineno, rawline in enumerate(text.splitlines(), 1):
        line = rawline.strip()
        where = f"line {lineno}"
        if not line or line.startswith("#"):
            continue
        if line.startswith("algebra "):
            if raw_rules:
                raise ParseError(f"{where}: algebra must precede the rules")
            algebra = alg.algebra_by_name(line[len("algebra "):].strip(), base_dir)
        elif line.startswith("start "):
            start = line[len("start "):].strip()
        elif line.startswith("rule ") or line.startswith("rule\t"):
            raw_rules.append((where, *_parse_rule_line(line, where)))
        else:
            raise ParseError(f"{where}: unrecognized directive")
    if start is None:
        raise ParseError("missing start directive")

    sorts = {}
    for where, rid, lhs, comps, rhs, _ in raw_rules:
        fanout = len(comps)
        if lhs in sorts and sorts[lhs] != fanout:
            raise ParseError(f"{where}: {lhs} has fan-out {fanout}, "
                             f"elsewhere {sorts[lhs]}")
        sorts[lhs] = fanout
    needed = {}
    for where, rid, lhs, comps, rhs, _ in raw_rules:
        for i, b in enumerate(rhs, 1):
            top = max((it.comp for comp in comps for it in comp
                       if isinstance(it, Var) and it.arg == i), default=0)
            needed[b] = max(needed.get(b, 0), top)
    for b, n in needed.items():
        if b not in sorts:
            sorts[b] = max(n, 1)
    if start not in sorts:
        sorts[start] = 1

    terminals = set()
    for _, _, _, comps, _, _ in raw_rules:
        for comp in comps:
            terminals.update(it.sym for it in comp if isinstance(it, Term))

    productions = []
    ids = set()
    for where, rid, lhs, comps, rhs, weight_lit in raw_rules:
        if rid in ids:
            raise ParseError(f"{where}: duplicate rule id {rid}")
        ids.add(rid)
        try:
            comp = Composition(tuple(sorts[b] for b in rhs), comps)
            weight = (one_weight(algebra) if weight_lit is None
                      else parse_weight(algebra, weight_lit))
            if weight.value == algebra.zero:
                raise UsageError("weight must be nonzero")
            productions.append(Production(rid, lhs, comp, rhs, weight))
        except UsageError as exc:
            raise ParseError(f"{where}: {exc}") from exc

    nonterminals = tuple(SortedSymbol(n, s) for n, s in sorted(sorts.items()))
    try:
        return WeightedMcfg(nonterminals, frozenset(terminals), start,
                            tuple(productions), algebra)
    except UsageError as exc:
        raise ParseError(str(exc)) from exc


def load_grammar(path):
    path = Path(path)
    return parse_grammar(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _format_comp(comp):
    if not comp.components:
        return "[]"
    parts = []
    for component in comp.components:
        toks = []
        for item in component:
            if isinstance(item, Term):
                toks.append(f"'{item.sym}'")
            else:
                toks.append(f"x{item.arg}.{item.comp}")
        parts.append(" ".join(toks) if toks else "eps")
    return "[" + " ; ".join(parts) + "]"


def format_grammar(g):
    """Render a grammar in the file format (parse_grammar round-trips it)."""
    lines = [f"algebra {g.algebra.name}", f"start {g.initial}"]
    for p in g.productions:
        rhs = ", ".join(p.rhs)
        lines.append(f"rule {p.id}: {p.lhs} -> {_format_comp(p.comp)}({rhs})"
                     f" @ {p.weight}")
    return "\n".join(lines) + "\n"
