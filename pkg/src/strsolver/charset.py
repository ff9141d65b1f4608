"""Code-point interval sets and finite alphabets.

Transition labels everywhere in this package are :class:`CharSet` values:
immutable, normalized unions of inclusive code-point intervals.  Keeping
labels as interval sets (rather than single letters) keeps automata small
under large alphabets — ``\\w`` over printable ASCII is three intervals, not
63 edges.

An :class:`Alphabet` fixes the finite universe Σ that complements and the
``.``/negated-class constructs are taken against.  The default is printable
ASCII; tests mostly use tiny alphabets like ``{a, b}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce


def _normalize(intervals):
    """Sort, merge overlapping/adjacent intervals; drop empties."""
    ivs = sorted((lo, hi) for lo, hi in intervals if lo <= hi)
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1] + 1:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class CharSet:
    """A set of code points represented as disjoint inclusive intervals."""

    intervals: tuple

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    # -- constructors -------------------------------------------------

    @staticmethod
    def empty():
        return CharSet(())

    @staticmethod
    def of(chars):
        return CharSet(tuple((ord(c), ord(c)) for c in chars))

    @staticmethod
    def range(lo, hi):
        return CharSet(((ord(lo) if isinstance(lo, str) else lo,
                         ord(hi) if isinstance(hi, str) else hi),))

    # -- set algebra ---------------------------------------------------

    def union(self, other):
        return CharSet(self.intervals + other.intervals)

    def intersect(self, other):
        out = []
        for alo, ahi in self.intervals:
            for blo, bhi in other.intervals:
                lo, hi = max(alo, blo), min(ahi, bhi)
                if lo <= hi:
                    out.append((lo, hi))
        return CharSet(tuple(out))

    def difference(self, other):
        return self.intersect(other.complement_in(self))

    def complement_in(self, universe):
        """Code points of ``universe`` not in ``self``."""
        out = []
        for ulo, uhi in universe.intervals:
            pos = ulo
            for lo, hi in self.intervals:
                if hi < pos or lo > uhi:
                    continue
                if lo > pos:
                    out.append((pos, lo - 1))
                pos = max(pos, hi + 1)
                if pos > uhi:
                    break
            if pos <= uhi:
                out.append((pos, uhi))
        return CharSet(tuple(out))

    # -- queries -------------------------------------------------------

    def __contains__(self, ch):
        cp = ord(ch) if isinstance(ch, str) else ch
        return any(lo <= cp <= hi for lo, hi in self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def __len__(self):
        return sum(hi - lo + 1 for lo, hi in self.intervals)

    def __iter__(self):
        for lo, hi in self.intervals:
            for cp in range(lo, hi + 1):
                yield chr(cp)

    def min_char(self):
        if not self.intervals:
            raise ValueError("empty CharSet has no minimum")
        return chr(self.intervals[0][0])

    def is_subset(self, other):
        return not self.difference(other)

    def __repr__(self):
        parts = []
        for lo, hi in self.intervals:
            if lo == hi:
                parts.append(_show(lo))
            else:
                parts.append("%s-%s" % (_show(lo), _show(hi)))
        return "[%s]" % "".join(parts)


def _show(cp):
    c = chr(cp)
    return c if c.isprintable() and c not in "[]-\\" else "\\u%04x" % cp


def partition_charsets(sets):
    """Split a collection of CharSets into disjoint, union-preserving blocks.

    Returns a list of pairwise-disjoint CharSets whose union equals the union
    of the input, such that every input set is a union of blocks.  Used by
    determinization and product constructions to branch on label pieces that
    behave identically.
    """
    points = set()
    for cs in sets:
        for lo, hi in cs.intervals:
            points.add(lo)
            points.add(hi + 1)
    cuts = sorted(points)
    blocks = []
    for lo, nxt in zip(cuts, cuts[1:] + [None]):
        if nxt is None:
            break
        blk = (lo, nxt - 1)
        if any(CharSet((blk,)).intersect(cs) for cs in sets):
            blocks.append(CharSet((blk,)))
    return blocks


class Alphabet:
    """An ordered finite universe of code points with named classes.

    ``classes`` resolve relative to the universe: e.g. ``digit`` is
    ``[0-9] ∩ Σ``.  The null symbol used by the transducer layer is not a
    code point and can never collide with alphabet letters.
    """

    def __init__(self, charset):
        if isinstance(charset, str):
            charset = CharSet.of(charset)
        self.charset = charset
        self.letters = tuple(sorted(charset, key=ord))

    @staticmethod
    def printable_ascii():
        return Alphabet(CharSet.range(0x20, 0x7E))

    @staticmethod
    def of(chars):
        return Alphabet(CharSet.of(chars))

    def with_letters(self, extra):
        return Alphabet(self.charset.union(CharSet.of(extra)))

    def klass(self, name):
        base = {
            "digit": CharSet.range("0", "9"),
            "upper": CharSet.range("A", "Z"),
            "lower": CharSet.range("a", "z"),
            "word": reduce(CharSet.union, [
                CharSet.range("0", "9"), CharSet.range("A", "Z"),
                CharSet.range("a", "z"), CharSet.of("_")]),
            "space": CharSet.of(" \t\n\r\f\v"),
            "any": self.charset,
        }[name]
        return base.intersect(self.charset)

    def __contains__(self, ch):
        return ch in self.charset

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __repr__(self):
        return "Alphabet(%r)" % (self.charset,)
