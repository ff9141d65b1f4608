"""Reference regex engine used as an independent oracle by the test-suite.

Two deliberately different implementations of regex matching live here:

* :func:`first_match` / :func:`replace` / :func:`replace_all` follow the
  ECMAScript pattern-matching algorithm (continuation-passing backtracking
  with the RepeatMatcher discipline: captures inside a quantified body are
  cleared when an iteration starts, and an optional iteration that consumes
  nothing is rejected).  This is the behavior of JavaScript's `exec`,
  `match`, and `String.prototype.replace`.

* :func:`lang_ends` / :func:`lang_accepts` implement the classical,
  priority-free language semantics by set-of-positions simulation.

Neither shares code with the transducer implementation under test, so
agreement between the two routes is meaningful evidence.
"""

from __future__ import annotations

from strsolver.regex_ast import (
    CharClass,
    Concat,
    Empty,
    Epsilon,
    Group,
    Loop,
    Optional,
    Plus,
    Regex,
    Star,
    Union,
)

# A match result: (end_position, captures) where captures maps group index
# to an (start, end) span or None for a cleared group.  Continuations take
# (pos, captures) and return a result tuple or None for failure.


def _group_indices(node: Regex) -> frozenset[int]:
    """All capture indices occurring inside `node`."""
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Group):
            out.add(n.index)
        stack.extend(_children(n))
    return frozenset(out)


def _children(n: Regex):
    if isinstance(n, (Union, Concat)):
        return (n.left, n.right)
    if isinstance(n, (Optional, Star, Plus, Loop, Group)):
        return (n.body,)
    return ()


def _match(node: Regex, s: str, pos: int, caps: dict, cont):
    if isinstance(node, Empty):
        return None
    if isinstance(node, Epsilon):
        return cont(pos, caps)
    if isinstance(node, CharClass):
        if pos < len(s) and s[pos] in node.chars:
            return cont(pos + 1, caps)
        return None
    if isinstance(node, Union):
        r = _match(node.left, s, pos, caps, cont)
        if r is not None:
            return r
        return _match(node.right, s, pos, caps, cont)
    if isinstance(node, Concat):
        return _match(
            node.left, s, pos, caps,
            lambda p2, c2: _match(node.right, s, p2, c2, cont),
        )
    if isinstance(node, Group):
        def close_group(p2, c2):
            c3 = dict(c2)
            c3[node.index] = (pos, p2)
            return cont(p2, c3)
        return _match(node.body, s, pos, caps, close_group)
    if isinstance(node, Optional):
        return _repeat(node.body, s, 0, 1, not node.lazy, pos, caps, cont)
    if isinstance(node, Star):
        return _repeat(node.body, s, 0, None, not node.lazy, pos, caps, cont)
    if isinstance(node, Plus):
        return _repeat(node.body, s, 1, None, not node.lazy, pos, caps, cont)
    if isinstance(node, Loop):
        return _repeat(
            node.body, s, node.low, node.high, not node.lazy, pos, caps, cont
        )
    raise TypeError(f"unknown node {node!r}")


def _repeat(body, s, lo, hi, greedy, pos, caps, cont):
    """ECMAScript RepeatMatcher.

    `hi` is None for an unbounded quantifier.  An iteration that matches the
    empty string is rejected once the minimum count has been met; captures
    inside `body` are cleared whenever an iteration is entered, while the
    exit continuation sees the uncleared state.
    """
    if hi == 0:
        return cont(pos, caps)
    cleared = dict(caps)
    for i in _group_indices(body):
        cleared[i] = None

    def next_iter(p2, c2):
        if lo == 0 and p2 == pos:
            return None
        return _repeat(
            body, s, max(0, lo - 1), None if hi is None else hi - 1,
            greedy, p2, c2, cont,
        )

    if lo != 0:
        return _match(body, s, pos, cleared, next_iter)
    if greedy:
        r = _match(body, s, pos, cleared, next_iter)
        if r is not None:
            return r
        return cont(pos, caps)
    r = cont(pos, caps)
    if r is not None:
        return r
    return _match(body, s, pos, cleared, next_iter)


def match_at(node: Regex, s: str, start: int, *, end_anchor: bool = False):
    """Match `node` at position `start`, or None.

    Returns (end, captures) with captures mapping group index to a string
    or None for groups that did not participate.  With `end_anchor` the
    match must consume through the end of `s` (a trailing `$`), which acts
    as a failing continuation the matcher backtracks over.
    """
    if end_anchor:
        accept = lambda p, c: (p, c) if p == len(s) else None
    else:
        accept = lambda p, c: (p, c)
    r = _match(node, s, start, {}, accept)
    if r is None:
        return None
    end, spans = r
    caps = {}
    for i in range(1, _max_group(node) + 1):
        span = spans.get(i)
        caps[i] = None if span is None else s[span[0]:span[1]]
    return end, caps


def _max_group(node: Regex) -> int:
    idx = _group_indices(node)
    return max(idx) if idx else 0


def first_match(node: Regex, s: str):
    """Leftmost match: (start, end, captures) or None."""
    for start in range(len(s) + 1):
        r = match_at(node, s, start)
        if r is not None:
            end, caps = r
            return start, end, caps
    return None


def match_group(node: Regex, s: str, index: int):
    """The string captured by group `index` (0 = whole match) in the
    leftmost match, or None when there is no match or the group did not
    participate."""
    r = first_match(node, s)
    if r is None:
        return None
    start, end, caps = r
    if index == 0:
        return s[start:end]
    return caps.get(index)


# Replacement template items: ("lit", text), ("group", i), ("whole",),
# ("before",), ("after",).


def parse_template(text: str):
    """JavaScript replacement-string syntax: $1..$9, $&, $`, $', $$."""
    items = []
    i = 0
    lit = []
    def flush():
        if lit:
            items.append(("lit", "".join(lit)))
            lit.clear()
    while i < len(text):
        c = text[i]
        if c == "$" and i + 1 < len(text):
            n = text[i + 1]
            if n.isdigit() and n != "0":
                flush()
                items.append(("group", int(n)))
                i += 2
                continue
            if n == "&":
                flush()
                items.append(("whole",))
                i += 2
                continue
            if n == "`":
                flush()
                items.append(("before",))
                i += 2
                continue
            if n == "'":
                flush()
                items.append(("after",))
                i += 2
                continue
            if n == "$":
                lit.append("$")
                i += 2
                continue
        lit.append(c)
        i += 1
    flush()
    return items

def expand(rep, s, start, end, caps) -> str:
    out = []
    for item in rep:
        kind = item[0]
        if kind == "lit":
            out.append(item[1])
        elif kind == "group":
            v = caps.get(item[1])
            out.append("" if v is None else v)
        elif kind == "whole":
            out.append(s[start:end])
        elif kind == "before":
            out.append(s[:start])
        elif kind == "after":
            out.append(s[end:])
        else:
            raise ValueError(f"bad replacement item {item!r}")
    return "".join(out)


def replace(
    node: Regex,
    s: str,
    rep,
    *,
    count_all: bool = False,
    anchor_start: bool = False,
    anchor_end: bool = False,
) -> str:
    """`String.prototype.replace` (or replaceAll when `count_all`).

    A zero-length match advances the scan by one position, keeping the
    skipped character — so "b".replace(/a*/g, "X") == "XbX".  The anchor
    flags emulate a leading `^` / trailing `$` on the pattern.
    """
    out = []
    pos = 0
    while pos <= len(s):
        found = None
        # `^` only ever matches at position 0 (no multiline mode).
        limit = 0 if anchor_start else len(s)
        for start in range(pos, limit + 1):
            r = match_at(node, s, start, end_anchor=anchor_end)
            if r is not None:
                found = (start, r)
                break
        if found is None:
            break
        start, (end, caps) = found
        out.append(s[pos:start])
        out.append(expand(rep, s, start, end, caps))
        if end == start:
            if end < len(s):
                out.append(s[end])
            pos = end + 1
        else:
            pos = end
        if not count_all:
            break
    if pos <= len(s):
        out.append(s[pos:])
    return "".join(out)


def replace_all(node: Regex, s: str, rep) -> str:
    return replace(node, s, rep, count_all=True)


# --- classical (priority-free) language semantics ---------------------------


def lang_ends(node: Regex, s: str, starts: frozenset[int]) -> frozenset[int]:
    """All positions where a match of `node` begun at some position in
    `starts` may end, under plain regular-language semantics."""
    if isinstance(node, Empty):
        return frozenset()
    if isinstance(node, Epsilon):
        return starts
    if isinstance(node, CharClass):
        return frozenset(
            i + 1 for i in starts if i < len(s) and s[i] in node.chars
        )
    if isinstance(node, Union):
        return lang_ends(node.left, s, starts) | lang_ends(node.right, s, starts)
    if isinstance(node, Concat):
        return lang_ends(node.right, s, lang_ends(node.left, s, starts))
    if isinstance(node, Group):
        return lang_ends(node.body, s, starts)
    if isinstance(node, Optional):
        return starts | lang_ends(node.body, s, starts)
    if isinstance(node, Star):
        acc = starts
        while True:
            nxt = acc | lang_ends(node.body, s, acc)
            if nxt == acc:
                return acc
            acc = nxt
    if isinstance(node, Plus):
        return lang_ends(Star(node.body), s, lang_ends(node.body, s, starts))
    if isinstance(node, Loop):
        acc = starts
        for _ in range(node.low):
            acc = lang_ends(node.body, s, acc)
        out = acc
        for _ in range(node.high - node.low):
            acc = lang_ends(node.body, s, acc)
            out = out | acc
        return out
    raise TypeError(f"unknown node {node!r}")


def lang_accepts(node: Regex, s: str) -> bool:
    """Whole-string membership of `s` in the language of `node`."""
    return len(s) in lang_ends(node, s, frozenset([0]))
