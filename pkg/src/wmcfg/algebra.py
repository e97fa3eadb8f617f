"""Pluggable weight algebras: complete commutative strong bimonoids.

Every algebra is a commutative monoid under ``plus`` (identity ``zero``)
and under ``times`` (identity ``one``), with ``zero`` annihilating under
``times``.  Distributivity is NOT assumed and nothing here relies on it.
Carriers are exact: arbitrary-precision rationals, rationals extended
with a signed infinity, booleans, naturals, or finite lattice elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import ParseError, UsageError


class Infinite:
    """A signed infinity adjoined to the rationals."""

    __slots__ = ("sign",)

    def __init__(self, sign):
        self.sign = sign

    def __repr__(self):
        return "inf" if self.sign > 0 else "-inf"


INF = Infinite(1)
NEG_INF = Infinite(-1)


def _ext_add(a, b):
    if isinstance(a, Infinite):
        return a
    if isinstance(b, Infinite):
        return b
    return a + b


def _ext_key(v):
    if v is NEG_INF:
        return (-1, 0)
    if v is INF:
        return (1, 0)
    return (0, v)


def _ext_min(a, b):
    return a if _ext_key(a) <= _ext_key(b) else b


def _ext_max(a, b):
    return a if _ext_key(a) >= _ext_key(b) else b


class Bimonoid:
    """A named weight algebra.  Instances are immutable and compared by name."""

    def __init__(self, name, plus, times, zero, one, parse, fmt, contains, sample):
        self.name = name
        self._plus = plus
        self._times = times
        self.zero = zero
        self.one = one
        self._parse = parse
        self._fmt = fmt
        self._contains = contains
        self._sample = sample

    def plus(self, a, b):
        return self._plus(a, b)

    def times(self, a, b):
        return self._times(a, b)

    def parse(self, text):
        """Parse a literal into a carrier value; raises ParseError."""
        return self._parse(text)

    def format(self, value):
        return self._fmt(value)

    def contains(self, value):
        return self._contains(value)

    def sample(self, rng):
        """Draw a carrier value, with extremes (zero/one/infinities) mixed in."""
        return self._sample(rng)

    def __eq__(self, other):
        return isinstance(other, Bimonoid) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"Bimonoid({self.name})"


def _parse_rational(text):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"not a rational literal: {text!r}") from exc


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Infinite):
        return repr(v)
    return str(v)


def _is_fraction(v):
    return isinstance(v, Fraction) or (isinstance(v, int) and not isinstance(v, bool))


def _rat_parser(lo=None, hi=None, inf=None):
    def parse(text):
        t = text.strip()
        if inf is not None and t == repr(inf):
            return inf
        v = _parse_rational(t)
        if lo is not None and v < lo:
            raise ParseError(f"value {t} below carrier minimum {lo}")
        if hi is not None and v > hi:
            raise ParseError(f"value {t} above carrier maximum {hi}")
        return v

    return parse


def _rat_carrier(lo=None, hi=None, inf=None):
    def contains(v):
        if v is inf and inf is not None:
            return True
        if not _is_fraction(v) or isinstance(v, Infinite):
            return False
        return (lo is None or v >= lo) and (hi is None or v <= hi)

    return contains


def _parse_bool(text):
    t = text.strip()
    if t == "true":
        return True
    if t == "false":
        return False
    raise ParseError(f"boolean literal must be true/false, got {text!r}")


def _parse_nat(text):
    t = text.strip()
    if not t.isdigit():
        raise ParseError(f"natural-number literal expected, got {text!r}")
    return int(t)


def _unit_fraction(rng):
    d = rng.randrange(1, 13)
    return Fraction(rng.randrange(0, d + 1), d)


def _sample_signed(rng):
    return Fraction(rng.randrange(-24, 25), rng.randrange(1, 7))


def _with_extremes(sample, extremes):
    def draw(rng):
        if rng.random() < 0.15:
            return rng.choice(extremes)
        return sample(rng)

    return draw


BOOLEAN = Bimonoid(
    "boolean",
    plus=lambda a, b: a or b,
    times=lambda a, b: a and b,
    zero=False,
    one=True,
    parse=_parse_bool,
    fmt=_fmt_value,
    contains=lambda v: isinstance(v, bool),
    sample=lambda rng: rng.random() < 0.5,
)

PROB = Bimonoid(
    "prob",
    plus=lambda a, b: a + b,
    times=lambda a, b: a * b,
    zero=Fraction(0),
    one=Fraction(1),
    parse=_rat_parser(lo=Fraction(0)),
    fmt=_fmt_value,
    contains=_rat_carrier(lo=Fraction(0)),
    sample=_with_extremes(lambda rng: Fraction(rng.randrange(0, 30), rng.randrange(1, 9)),
                          [Fraction(0), Fraction(1)]),
)

VITERBI = Bimonoid(
    "viterbi",
    plus=max,
    times=lambda a, b: a * b,
    zero=Fraction(0),
    one=Fraction(1),
    parse=_rat_parser(lo=Fraction(0), hi=Fraction(1)),
    fmt=_fmt_value,
    contains=_rat_carrier(lo=Fraction(0), hi=Fraction(1)),
    sample=_with_extremes(_unit_fraction, [Fraction(0), Fraction(1)]),
)

TROPICAL = Bimonoid(
    "tropical",
    plus=_ext_min,
    times=_ext_add,
    zero=INF,
    one=Fraction(0),
    parse=_rat_parser(inf=INF),
    fmt=_fmt_value,
    contains=_rat_carrier(inf=INF),
    sample=_with_extremes(_sample_signed, [INF, Fraction(0)]),
)

ARCTIC = Bimonoid(
    "arctic",
    plus=_ext_max,
    times=_ext_add,
    zero=NEG_INF,
    one=Fraction(0),
    parse=_rat_parser(inf=NEG_INF),
    fmt=_fmt_value,
    contains=_rat_carrier(inf=NEG_INF),
    sample=_with_extremes(_sample_signed, [NEG_INF, Fraction(0)]),
)

PR1 = Bimonoid(
    "pr1",
    plus=lambda a, b: a + b - a * b,
    times=lambda a, b: a * b,
    zero=Fraction(0),
    one=Fraction(1),
    parse=_rat_parser(lo=Fraction(0), hi=Fraction(1)),
    fmt=_fmt_value,
    contains=_rat_carrier(lo=Fraction(0), hi=Fraction(1)),
    sample=_with_extremes(_unit_fraction, [Fraction(0), Fraction(1)]),
)

PR2 = Bimonoid(
    "pr2",
    plus=lambda a, b: min(a + b, Fraction(1)),
    times=lambda a, b: a * b,
    zero=Fraction(0),
    one=Fraction(1),
    parse=_rat_parser(lo=Fraction(0), hi=Fraction(1)),
    fmt=_fmt_value,
    contains=_rat_carrier(lo=Fraction(0), hi=Fraction(1)),
    sample=_with_extremes(_unit_fraction, [Fraction(0), Fraction(1)]),
)

TROPICAL_BIMONOID = Bimonoid(
    "tropical-bimonoid",
    plus=_ext_add,
    times=_ext_min,
    zero=Fraction(0),
    one=INF,
    parse=_rat_parser(lo=Fraction(0), inf=INF),
    fmt=_fmt_value,
    contains=_rat_carrier(lo=Fraction(0), inf=INF),
    sample=_with_extremes(lambda rng: Fraction(rng.randrange(0, 30), rng.randrange(1, 7)),
                          [INF, Fraction(0)]),
)

# Carrier is the non-positive rationals with -inf: zero must annihilate
# under times = max, which forces every element <= 0.
ARCTIC_BIMONOID = Bimonoid(
    "arctic-bimonoid",
    plus=_ext_add,
    times=_ext_max,
    zero=Fraction(0),
    one=NEG_INF,
    parse=_rat_parser(hi=Fraction(0), inf=NEG_INF),
    fmt=_fmt_value,
    contains=_rat_carrier(hi=Fraction(0), inf=NEG_INF),
    sample=_with_extremes(lambda rng: Fraction(-rng.randrange(0, 30), rng.randrange(1, 7)),
                          [NEG_INF, Fraction(0)]),
)

NAT_LCM_GCD = Bimonoid(
    "nat-lcm-gcd",
    plus=math.lcm,
    times=math.gcd,
    zero=1,
    one=0,
    parse=_parse_nat,
    fmt=_fmt_value,
    contains=lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0,
    sample=_with_extremes(lambda rng: rng.randrange(0, 72), [0, 1]),
)


ALGEBRAS = {
    a.name: a
    for a in (
        BOOLEAN, PROB, VITERBI, TROPICAL, ARCTIC, PR1, PR2,
        TROPICAL_BIMONOID, ARCTIC_BIMONOID, NAT_LCM_GCD,
    )
}

_MAX_LATTICE_SIZE = 32
_lattice_registry = {}


def lattice_from_tables(name, elements, bottom, top, join, meet):
    """Build a finite-lattice algebra from explicit join/meet tables.

    ``join`` and ``meet`` map unordered element pairs to elements; pairs
    involving an element and itself, the bottom, or the top may be left
    implicit.  All bimonoid laws are verified over every triple.
    """
    elements = tuple(elements)
    if not elements:
        raise ParseError("lattice needs at least one element")
    if len(set(elements)) != len(elements):
        raise ParseError("duplicate lattice elements")
    if len(elements) > _MAX_LATTICE_SIZE:
        raise ParseError(f"lattice larger than {_MAX_LATTICE_SIZE} elements")
    if bottom not in elements or top not in elements:
        raise ParseError("lattice zero/one must be declared elements")

    def build(table, ident, absorb):
        full = {}
        for a in elements:
            for b in elements:
                key = frozenset((a, b))
                if key in table:
                    v = table[key]
                elif a == b:
                    v = a
                elif ident in key:
                    v = a if b == ident else b
                elif absorb in key:
                    v = absorb
                else:
                    raise ParseError(f"lattice table missing pair {a} {b}")
                if v not in elements:
                    raise ParseError(f"lattice table value {v!r} is not an element")
                full[(a, b)] = v
        return full

    join_full = build(join, ident=bottom, absorb=top)
    meet_full = build(meet, ident=top, absorb=bottom)

    for op, tbl, ident in (("join", join_full, bottom), ("meet", meet_full, top)):
        for a in elements:
            if tbl[(ident, a)] != a:
                raise ParseError(f"{op} identity law fails at {a}")
            for b in elements:
                if tbl[(a, b)] != tbl[(b, a)]:
                    raise ParseError(f"{op} not commutative at {a},{b}")
                for c in elements:
                    if tbl[(tbl[(a, b)], c)] != tbl[(a, tbl[(b, c)])]:
                        raise ParseError(f"{op} not associative at {a},{b},{c}")
    for a in elements:
        if meet_full[(bottom, a)] != bottom:
            raise ParseError(f"zero does not annihilate under meet at {a}")

    def parse(text):
        t = text.strip()
        if t not in elements:
            raise ParseError(f"unknown lattice element {t!r}")
        return t

    return Bimonoid(
        f"lattice:{name}",
        plus=lambda a, b: join_full[(a, b)],
        times=lambda a, b: meet_full[(a, b)],
        zero=bottom,
        one=top,
        parse=parse,
        fmt=str,
        contains=lambda v: v in elements,
        sample=lambda rng: rng.choice(elements),
    )


def load_lattice(path):
    """Load a lattice algebra from a table file.

    Format, one directive per line (``#`` lines are comments):
    ``lattice <name>``, ``elements e1 e2 ...``, ``zero e``, ``one e``,
    ``join a b c`` meaning a v b = c, ``meet a b c`` meaning a ^ b = c.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    name = None
    elements = None
    bottom = top = None
    join, meet = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]
        if kind == "lattice" and len(args) == 1:
            name = args[0]
        elif kind == "elements":
            elements = tuple(args)
        elif kind == "zero" and len(args) == 1:
            bottom = args[0]
        elif kind == "one" and len(args) == 1:
            top = args[0]
        elif kind in ("join", "meet") and len(args) == 3:
            (join if kind == "join" else meet)[frozenset(args[:2])] = args[2]
        else:
            raise ParseError(f"{path}:{lineno}: bad lattice directive {line!r}")
    if name is None or elements is None or bottom is None or top is None:
        raise ParseError(f"{path}: lattice file needs lattice/elements/zero/one lines")

    cached = _lattice_registry.get(name)
    algebra = lattice_from_tables(name, elements, bottom, top, join, meet)
    if cached is not None:
        same = (
            cached.zero == algebra.zero
            and cached.one == algebra.one
            and all(cached.contains(e) for e in elements)
            and all(
                cached.plus(a, b) == algebra.plus(a, b)
                and cached.times(a, b) == algebra.times(a, b)
                for a in elements for b in elements
            )
        )
        if not same:
            raise ParseError(f"lattice name {name!r} already loaded with different tables")
        return cached
    _lattice_registry[name] = algebra
    return algebra


def algebra_by_name(name, base_dir=None):
    """Resolve an algebra name as used in grammar files.

    ``lattice:<file>`` loads a lattice table file, relative to ``base_dir``.
    """
    if name in ALGEBRAS:
        return ALGEBRAS[name]
    if name.startswith("lattice:"):
        ref = name[len("lattice:"):]
        if f"lattice:{ref}" in _lattice_registry:
            return _lattice_registry[f"lattice:{ref}"]
        path = Path(ref)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise ParseError(f"lattice file not found: {path}")
        return load_lattice(path)
    raise ParseError(f"unknown algebra {name!r}")


@dataclass(frozen=True)
class Weight:
    """A carrier value tagged with its algebra."""

    algebra: Bimonoid
    value: object

    def __post_init__(self):
        if not self.algebra.contains(self.value):
            raise UsageError(
                f"value {self.value!r} outside carrier of {self.algebra.name}")

    def __str__(self):
        return self.algebra.format(self.value)


def zero_weight(algebra):
    return Weight(algebra, algebra.zero)


def one_weight(algebra):
    return Weight(algebra, algebra.one)


def _require_same(a, b):
    if a.algebra != b.algebra:
        raise UsageError(
            f"mixed algebras: {a.algebra.name} vs {b.algebra.name}")


def plus(a, b):
    """Additive combination of two weights of the same algebra."""
    _require_same(a, b)
    return Weight(a.algebra, a.algebra.plus(a.value, b.value))


def times(a, b):
    """Multiplicative combination of two weights of the same algebra."""
    _require_same(a, b)
    return Weight(a.algebra, a.algebra.times(a.value, b.value))


def sum_weights(algebra, family):
    """Fold plus over a finite family; the empty family yields zero."""
    acc = zero_weight(algebra)
    for w in family:
        if w.algebra != algebra:
            raise UsageError(
                f"mixed algebras in sum: {w.algebra.name} vs {algebra.name}")
        acc = plus(acc, w)
    return acc


def parse_weight(algebra, literal):
    """Parse a literal (`p/q`, `inf`, `true`, lattice element, ...) exactly."""
    return Weight(algebra, algebra.parse(literal))


def format_weight(w):
    return str(w)
