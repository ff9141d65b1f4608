"""Minimal s-expression reader shared by the SMT front end and regex parsing.

Atoms are returned as strings, string literals as ``StrLit`` wrappers (so
``"abc"`` is distinguishable from the symbol ``abc``), lists as Python lists.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class StrLit:
    value: str


class SexprError(ValueError):
    def __init__(self, msg, pos):
        super().__init__("%s (at offset %d)" % (msg, pos))
        self.msg = msg
        self.pos = pos


def tokenize(text):
    """Yield (kind, value, pos) with kind in {'(', ')', 'atom', 'str'}."""
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield (c, c, i)
            i += 1
        elif c == '"':
            j, buf = i + 1, []
            while True:
                if j >= n:
                    raise SexprError("unterminated string literal", i)
                if text[j] == '"':
                    # SMT-LIB escapes a quote by doubling it
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            yield ("str", "".join(buf), i)
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n();"':
                j += 1
            yield ("atom", text[i:j], i)
            i = j


def parse_all(text):
    """Parse every top-level s-expression in ``text``."""
    return [form for form, _ in parse_all_pos(text)]


def parse_all_pos(text):
    """Like :func:`parse_all` but yields ``(form, offset)`` pairs, the
    offset pointing at each top-level form's first token (for error
    messages that survive the loss of token positions in the tree)."""
    stack, top = [], []
    starts = []
    for kind, value, pos in tokenize(text):
        if not stack:
            starts.append(pos)
        if kind == "(":
            stack.append([])
        elif kind == ")":
            if not stack:
                raise SexprError("unbalanced ')'", pos)
            done = stack.pop()
            (stack[-1] if stack else top).append(done)
        elif kind == "str":
            (stack[-1] if stack else top).append(StrLit(value))
        else:
            (stack[-1] if stack else top).append(value)
    if stack:
        raise SexprError("unbalanced '('", len(text))
    return list(zip(top, starts))


def parse_one(text):
    forms = parse_all(text)
    if len(forms) != 1:
        raise SexprError("expected exactly one s-expression", 0)
    return forms[0]
