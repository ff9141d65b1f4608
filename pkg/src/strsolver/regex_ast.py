"""Regular-expression syntax trees with capture groups and greedy/lazy flags.

Two concrete syntaxes parse into one AST:

* ``js-like`` — the familiar slash-free surface syntax: ``(\\d+)(\\d*)``,
  ``(a*?)*``, classes ``[a-z]``, ``(?:...)`` non-capturing groups, lazy
  quantifiers ``*? +? ?? {m,n}?``.
* ``smtlib-extended`` — s-expression regex terms: ``re.++``, ``re.union``,
  ``re.*`` / ``re.*?``, ``re.+`` / ``re.+?``, ``re.opt`` / ``re.opt?``,
  ``re.loop`` / ``re.loop?``, ``re.range``, ``str.to.re``, ``re.allchar``,
  ``re.all``, and indexed ``(_ re.capture i)``.

Anchors, backreferences and lookaround are rejected with a named
unsupported-feature error.  Loops must have a finite upper bound.

Nodes are immutable and compare structurally; a node's identity within a
larger expression is its pre-order position (see :func:`subexpressions`),
which is what the transducer compiler keys its string variables on.
"""

from __future__ import annotations

from dataclasses import dataclass

from .charset import Alphabet, CharSet
from . import sexpr


class RegexSyntaxError(ValueError):
    def __init__(self, msg, pos=None):
        super().__init__(msg if pos is None else "%s (at position %d)" % (msg, pos))
        self.pos = pos


class UnsupportedFeatureError(RegexSyntaxError):
    def __init__(self, feature, pos=None):
        super().__init__("unsupported regex feature: %s" % feature, pos)
        self.feature = feature


# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Regex:
    pass


@dataclass(frozen=True)
class Empty(Regex):
    """Matches nothing (the empty language)."""


@dataclass(frozen=True)
class Epsilon(Regex):
    """Matches exactly the empty string."""


@dataclass(frozen=True)
class CharClass(Regex):
    chars: CharSet


@dataclass(frozen=True)
class Union(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Concat(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Optional(Regex):
    body: Regex
    lazy: bool = False


@dataclass(frozen=True)
class Star(Regex):
    body: Regex
    lazy: bool = False


@dataclass(frozen=True)
class Plus(Regex):
    body: Regex
    lazy: bool = False


@dataclass(frozen=True)
class Loop(Regex):
    body: Regex
    low: int
    high: int
    lazy: bool = False

    def __post_init__(self):
        if not (0 <= self.low <= self.high):
            raise RegexSyntaxError("loop bounds must satisfy 0 <= low <= high")


@dataclass(frozen=True)
class Group(Regex):
    body: Regex
    index: int


_CHILDREN = {
    Empty: (), Epsilon: (), CharClass: (),
    Union: ("left", "right"), Concat: ("left", "right"),
    Optional: ("body",), Star: ("body",), Plus: ("body",), Loop: ("body",),
    Group: ("body",),
}


def children(e):
    return tuple(getattr(e, f) for f in _CHILDREN[type(e)])


def subexpressions(e):
    """All subexpression occurrences of ``e`` in pre-order.

    Returns a list of ``(node_id, node)`` where ``node_id`` is the pre-order
    index of the occurrence.  Structurally equal subtrees at different
    positions get different ids.
    """
    out = []

    def walk(node):
        out.append((len(out), node))
        for c in children(node):
            walk(c)

    walk(e)
    return out


def group_count(e):
    return max([n.index for _, n in subexpressions(e) if isinstance(n, Group)],
               default=0)


def group_subexpr(e, i):
    """The subexpression recorded by capture group ``i`` (0 = whole regex).

    When a group index occurs several times (a desugared bounded repetition
    duplicates its body), the rightmost occurrence is returned: it belongs to
    the last iteration, which is the one whose capture survives.
    """
    if i == 0:
        return e
    found = None
    for _, n in subexpressions(e):
        if isinstance(n, Group) and n.index == i:
            found = n
    if found is None:
        raise KeyError("capture group %d not found" % i)
    return found


def validate_groups(e):
    """Check indices are exactly 1..k in left-to-right order (pre-desugaring)."""
    seen = [n.index for _, n in subexpressions(e) if isinstance(n, Group)]
    if seen != list(range(1, len(seen) + 1)):
        raise RegexSyntaxError("capture group indices not 1..k in order: %r" % seen)


def desugar_loop(e):
    """Normalize bounded repetitions to the shapes the compiler handles.

    * ``e{0,0}`` becomes ε.
    * ``e{0,n}`` becomes ``(e{1,n})?`` with matching laziness.
    * ``e{m,m}`` becomes an m-fold concatenation.
    * ``e{m,n}`` with 2 <= m < n peels mandatory copies: ``e · e{m-1,n-1}``.
    * ``e{1,n}`` (n > 1) is left for the compiler's chained-copy construction.

    Duplicated bodies keep their original group indices; the capture that
    survives is the rightmost occurrence's (matching the last iteration).
    """
    def walk(node):
        kids = tuple(walk(c) for c in children(node))
        if isinstance(node, Union):
            return Union(*kids)
        if isinstance(node, Concat):
            return Concat(*kids)
        if isinstance(node, Optional):
            return Optional(kids[0], node.lazy)
        if isinstance(node, Star):
            return Star(kids[0], node.lazy)
        if isinstance(node, Plus):
            return Plus(kids[0], node.lazy)
        if isinstance(node, Group):
            return Group(kids[0], node.index)
        if isinstance(node, Loop):
            body = kids[0]
            low, high, lazy = node.low, node.high, node.lazy
            if high == 0:
                return Epsilon()
            if low == 0:
                return Optional(walk(Loop(body, 1, high, lazy)), lazy)
            if low == high == 1:
                return body
            if low == 1:
                return Loop(body, 1, high, lazy)
            return Concat(body, walk(Loop(body, low - 1, high - 1, lazy)))
        return node

    return walk(e)


# ---------------------------------------------------------------------------
# JS-like surface syntax
# ---------------------------------------------------------------------------

class _JsParser:
    def __init__(self, text, alphabet):
        self.text = text
        self.pos = 0
        self.alphabet = alphabet
        self.next_group = 1

    def error(self, msg):
        raise RegexSyntaxError(msg, self.pos)

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else None

    def take(self):
        c = self.peek()
        if c is None:
            self.error("unexpected end of pattern")
        self.pos += 1
        return c

    def parse(self):
        e = self.union()
        if self.pos != len(self.text):
            self.error("unexpected %r" % self.peek())
        return e

    def union(self):
        parts = [self.concat()]
        while self.peek() == "|":
            self.take()
            parts.append(self.concat())
        e = parts[0]
        for p in parts[1:]:
            e = Union(e, p)
        return e

    def concat(self):
        parts = []
        while self.peek() not in (None, "|", ")"):
            parts.append(self.repeat())
        if not parts:
            return Epsilon()
        e = parts[0]
        for p in parts[1:]:
            e = Concat(e, p)
        return e

    def repeat(self):
        e = self.atom()
        c = self.peek()
        if c in ("*", "+", "?"):
            self.take()
            lazy = self.peek() == "?"
            if lazy:
                self.take()
            e = {"*": Star, "+": Plus, "?": Optional}[c](e, lazy)
        elif c == "{":
            e = self.bounded(e)
        if self.peek() in ("*", "+", "?", "{"):
            self.error("nothing to repeat (double quantifier)")
        return e

    def bounded(self, e):
        start = self.pos
        self.take()  # '{'
        digits = ""
        while self.peek() and self.peek().isdigit():
            digits += self.take()
        if not digits:
            self.pos = start
            self.error("malformed {m,n} quantifier")
        low = int(digits)
        if self.peek() == "}":
            self.take()
            high = low
        elif self.peek() == ",":
            self.take()
            digits = ""
            while self.peek() and self.peek().isdigit():
                digits += self.take()
            if not digits:
                raise UnsupportedFeatureError("unbounded repetition {m,}", self.pos)
            high = int(digits)
            if self.peek() != "}":
                self.error("malformed {m,n} quantifier")
            self.take()
        else:
            self.error("malformed {m,n} quantifier")
        if low > high:
            self.error("loop bounds out of order in {%d,%d}" % (low, high))
        lazy = self.peek() == "?"
        if lazy:
            self.take()
        if self.peek() in ("*", "+", "?", "{"):
            self.error("nothing to repeat (double quantifier)")
        return Loop(e, low, high, lazy)

    def atom(self):
        c = self.peek()
        if c is None:
            self.error("unexpected end of pattern")
        if c == "(":
            self.take()
            if self.peek() == "?":
                self.take()
                c2 = self.peek()
                if c2 == ":":
                    self.take()
                    body = self.union()
                    if self.take() != ")":
                        self.error("expected ')'")
                    return body
                if c2 in ("=", "!", "<"):
                    raise UnsupportedFeatureError("lookaround", self.pos)
                self.error("unknown group modifier '?%s'" % c2)
            index = self.next_group
            self.next_group += 1
            body = self.union()
            if self.take() != ")":
                self.error("expected ')'")
            return Group(body, index)
        if c == "[":
            return self.char_class()
        if c in ("^", "$"):
            raise UnsupportedFeatureError("anchor '%s'" % c, self.pos)
        if c in ("*", "+", "?", "{"):
            self.error("nothing to repeat")
        if c == ".":
            self.take()
            return CharClass(self.alphabet.klass("any"))
        if c == "\\":
            return self.escape(in_class=False)
        self.take()
        return self._literal(c)

    def _literal(self, c):
        if c not in self.alphabet:
            return Empty()
        return CharClass(CharSet.of(c))

    def _class_set(self, cs):
        cs = cs.intersect(self.alphabet.charset)
        return Empty() if not cs else CharClass(cs)

    _CLASS_ESCAPES = {
        "d": "digit", "w": "word", "s": "space",
    }
    _CHAR_ESCAPES = {
        "n": "\n", "t": "\t", "r": "\r", "f": "\f", "v": "\v", "0": "\0",
    }

    def escape(self, in_class):
        self.take()  # backslash
        c = self.take()
        if c in self._CLASS_ESCAPES:
            return self._class_set(self.alphabet.klass(self._CLASS_ESCAPES[c]))
        if c in "DWS":
            base = self.alphabet.klass(self._CLASS_ESCAPES[c.lower()])
            return self._class_set(base.complement_in(self.alphabet.charset))
        if c in self._CHAR_ESCAPES:
            return self._literal(self._CHAR_ESCAPES[c])
        if c == "x":
            hx = self.take() + self.take()
            return self._literal(chr(int(hx, 16)))
        if c == "u":
            hx = "".join(self.take() for _ in range(4))
            return self._literal(chr(int(hx, 16)))
        if c.isdigit():
            raise UnsupportedFeatureError("backreference \\%s" % c, self.pos)
        if c == "b":
            raise UnsupportedFeatureError("word boundary \\b", self.pos)
        return self._literal(c)

    def char_class(self):
        self.take()  # '['
        negate = self.peek() == "^"
        if negate:
            self.take()
        cs = CharSet.empty()
        while True:
            c = self.peek()
            if c is None:
                self.error("unterminated character class")
            if c == "]":
                self.take()
                break
            atom = self._class_atom()
            if isinstance(atom, CharSet):  # \d-style escape: no range allowed
                cs = cs.union(atom)
                continue
            if self.peek() == "-" and self.pos + 1 < len(self.text) \
                    and self.text[self.pos + 1] != "]":
                self.take()
                hi = self._class_atom()
                if isinstance(hi, CharSet) or ord(hi) < ord(atom):
                    self.error("bad character range")
                cs = cs.union(CharSet.range(atom, hi))
            else:
                cs = cs.union(CharSet.of(atom))
        if negate:
            cs = cs.complement_in(self.alphabet.charset)
        return self._class_set(cs)

    def _class_atom(self):
        """One class member: a single char, or a CharSet for \\d-style escapes."""
        c = self.take()
        if c != "\\":
            return c
        c = self.take()
        if c in self._CLASS_ESCAPES:
            return self.alphabet.klass(self._CLASS_ESCAPES[c])
        if c in "DWS":
            base = self.alphabet.klass(self._CLASS_ESCAPES[c.lower()])
            return base.complement_in(self.alphabet.charset)
        if c in self._CHAR_ESCAPES:
            return self._CHAR_ESCAPES[c]
        if c == "x":
            return chr(int(self.take() + self.take(), 16))
        if c == "u":
            return chr(int("".join(self.take() for _ in range(4)), 16))
        return c


def _parse_js(text, alphabet):
    p = _JsParser(text, alphabet)
    ast = p.parse()
    validate_groups(ast)
    return ast


# ---------------------------------------------------------------------------
# SMT-LIB-extended syntax
# ---------------------------------------------------------------------------

_LAZY_OPS = {"re.*?": Star, "re.+?": Plus, "re.opt?": Optional}
_GREEDY_OPS = {"re.*": Star, "re.+": Plus, "re.opt": Optional}


def regex_from_sexpr(form, alphabet):
    """Build a Regex from an already-read s-expression form."""

    def conv(f):
        return regex_from_sexpr(f, alphabet)

    if isinstance(form, str):
        if form == "re.allchar":
            return CharClass(alphabet.klass("any"))
        if form == "re.all":
            return Star(CharClass(alphabet.klass("any")))
        if form == "re.none":
            return Empty()
        if form == "re.epsilon":
            return Epsilon()
        raise RegexSyntaxError("unknown regex symbol %r" % form)
    if isinstance(form, sexpr.StrLit):
        raise RegexSyntaxError("raw string in regex position; use str.to.re")
    head = form[0] if form else None
    if isinstance(head, list):
        if len(head) == 3 and head[0] == "_" and head[1] == "re.capture":
            return Group(conv(form[1]), int(head[2]))
        raise RegexSyntaxError("cannot parse regex term %r" % (form,))
    if head in ("str.to.re", "str.to_re"):
        lit = form[1]
        if not isinstance(lit, sexpr.StrLit):
            raise RegexSyntaxError("str.to.re expects a string literal")
        e = Epsilon()
        for ch in lit.value:
            if ch not in alphabet:
                return Empty()
            nxt = CharClass(CharSet.of(ch))
            e = nxt if isinstance(e, Epsilon) else Concat(e, nxt)
        return e
    if head == "re.++":
        parts = [conv(f) for f in form[1:]]
        if not parts:
            return Epsilon()
        e = parts[0]
        for p in parts[1:]:
            e = Concat(e, p)
        return e
    if head == "re.union":
        parts = [conv(f) for f in form[1:]]
        if not parts:
            return Empty()
        e = parts[0]
        for p in parts[1:]:
            e = Union(e, p)
        return e
    if head in _GREEDY_OPS:
        return _GREEDY_OPS[head](conv(form[1]), False)
    if head in _LAZY_OPS:
        return _LAZY_OPS[head](conv(form[1]), True)
    if head in ("re.loop", "re.loop?"):
        m1, m2 = int(form[1]), int(form[2])
        if m1 > m2:
            raise RegexSyntaxError("re.loop bounds out of order")
        return Loop(conv(form[3]), m1, m2, head.endswith("?"))
    if head == "re.range":
        lo, hi = form[1], form[2]
        if not (isinstance(lo, sexpr.StrLit) and isinstance(hi, sexpr.StrLit)
                and len(lo.value) == 1 and len(hi.value) == 1):
            raise RegexSyntaxError("re.range expects two single-char literals")
        cs = CharSet.range(lo.value, hi.value).intersect(alphabet.charset)
        return Empty() if not cs else CharClass(cs)
    if head == "re.comp":
        raise UnsupportedFeatureError("re.comp inside patterns")
    if head in ("re.begin-anchor", "re.end-anchor") or form in (
            "re.begin-anchor", "re.end-anchor"):
        raise UnsupportedFeatureError("anchor %s" % head)
    raise RegexSyntaxError("cannot parse regex term %r" % (form,))


def _parse_smtlib(text, alphabet):
    form = sexpr.parse_one(text)
    ast = regex_from_sexpr(form, alphabet)
    validate_groups(ast)
    return ast


def parse_regex(text, syntax="js-like", alphabet=None):
    """Parse ``text`` into a Regex AST.

    ``syntax`` is ``"js-like"`` or ``"smtlib-extended"``.  ``alphabet``
    defaults to printable ASCII.
    """
    if alphabet is None:
        alphabet = Alphabet.printable_ascii()
    if syntax == "js-like":
        return _parse_js(text, alphabet)
    if syntax == "smtlib-extended":
        return _parse_smtlib(text, alphabet)
    raise ValueError("unknown syntax %r" % syntax)


# ---------------------------------------------------------------------------
# Printing (js-like), for round-trip tests and diagnostics
# ---------------------------------------------------------------------------

_METACHARS = set("\\^$.|?*+()[]{}")


def _print_char(cp):
    c = chr(cp)
    if c in _METACHARS:
        return "\\" + c
    if c == "\t":
        return "\\t"
    if c == "\n":
        return "\\n"
    if c == "\r":
        return "\\r"
    if not c.isprintable():
        return "\\x%02x" % cp
    return c


def _print_class(cs: CharSet):
    if len(cs) == 1:
        return _print_char(cs.intervals[0][0])
    parts = []
    for lo, hi in cs.intervals:
        def show(cp):
            c = chr(cp)
            if c in "\\]^-":
                return "\\" + c
            if not c.isprintable():
                return "\\x%02x" % cp
            return c
        if hi - lo >= 2:
            parts.append("%s-%s" % (show(lo), show(hi)))
        else:
            parts.extend(show(cp) for cp in range(lo, hi + 1))
    return "[%s]" % "".join(parts)


def print_regex(e):
    """Render an AST in js-like syntax (parseable back to an equal AST)."""
    def prec(n):
        if isinstance(n, Union):
            return 0
        if isinstance(n, Concat):
            return 1
        if isinstance(n, (Star, Plus, Optional, Loop)):
            return 2
        return 3

    def wrap(n, minp):
        s = go(n)
        if prec(n) < minp:
            return "(?:%s)" % s
        return s

    def go(n):
        if isinstance(n, Empty):
            return "[]"  # unmatchable: printed as an impossible class
        if isinstance(n, Epsilon):
            return "(?:)"
        if isinstance(n, CharClass):
            return _print_class(n.chars)
        if isinstance(n, Union):
            return "%s|%s" % (go(n.left), go(n.right))
        if isinstance(n, Concat):
            return "%s%s" % (wrap(n.left, 1), wrap(n.right, 2))
        if isinstance(n, Optional):
            return "%s?%s" % (wrap(n.body, 3), "?" if n.lazy else "")
        if isinstance(n, Star):
            return "%s*%s" % (wrap(n.body, 3), "?" if n.lazy else "")
        if isinstance(n, Plus):
            return "%s+%s" % (wrap(n.body, 3), "?" if n.lazy else "")
        if isinstance(n, Loop):
            return "%s{%d,%d}%s" % (wrap(n.body, 3), n.low, n.high,
                                    "?" if n.lazy else "")
        if isinstance(n, Group):
            return "(%s)" % go(n.body)
        raise TypeError(n)

    return go(e)
