"""Regex-dependent string functions compiled to prioritized transducers.

Three functions are covered, all with JavaScript semantics:

* ``extract``: the string captured by group *i* in a whole-string match
  (group 0 is the match itself).  Undefined outside the pattern's
  language; null when the group did not participate in the match.
* ``replace`` / ``replaceAll``: ``String.prototype.replace`` with a
  template replacement — leftmost match, greedy/lazy priorities decide
  the match itself, a zero-length match advances the scan by one
  position, and an unmatched capture reference expands to the empty
  string.

Replacement templates use the JavaScript syntax: ``$1``..``$9`` for
capture references, ``$&`` for the whole match, ``$``` and ``$'``
for the context before and after it, ``$$`` for a literal dollar.
Templates with only literals and capture references compile to a single
copyless machine.  ``$&`` is rewritten away by capturing the whole
pattern in a fresh group.  The context references cannot be produced by
one copyless machine; they compile to a fixed six-step pipeline that
brackets every match with reserved marker letters, uses a copyful
transducer (and its mirror image over the reversed string) to splice the
running prefix into each bracket, and finishes with a plain replaceAll
whose pattern reads the spliced context back out of the brackets.

Anchoring flags on :class:`Replace` / :class:`ReplaceAll` emulate a
leading ``^`` or trailing ``$`` on the pattern (no multiline mode, so
``^`` only ever matches at position 0 — which also means an anchored
replaceAll can replace at most one match and coincides with replace).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Union as _U

from . import regex_ast as ra
from .charset import Alphabet, CharSet
from .psst import BOTTOM, CURRENT, Psst, prune_dead_vars, to_output_psst
from .regex_compile import _all_arcs, _assigned_vars, compile_regex

__all__ = [
    "Lit",
    "GroupRef",
    "WholeMatch",
    "Before",
    "After",
    "Replacement",
    "parse_replacement",
    "is_plain",
    "Extract",
    "Replace",
    "ReplaceAll",
    "StrFunSpec",
    "MARK_OPEN",
    "MARK_CLOSE",
    "extended_alphabet",
    "shift_groups",
    "encode_extract",
    "encode_first_match_extract",
    "encode_replace",
    "encode_replace_all",
    "eliminate_special_refs",
    "encode",
    "apply_spec",
    "reverse_psst",
    "context_marker_psst",
]


# --- replacement templates --------------------------------------------------


@dataclass(frozen=True)
class Lit:
    """A literal piece of the replacement."""

    text: str


@dataclass(frozen=True)
class GroupRef:
    """``$i`` — the string captured by group ``index`` (≥ 1)."""

    index: int


@dataclass(frozen=True)
class WholeMatch:
    """``$&`` — the whole matched substring."""


@dataclass(frozen=True)
class Before:
    """``$``` — the part of the input before the match."""


@dataclass(frozen=True)
class After:
    """``$'`` — the part of the input after the match."""


Segment = _U[Lit, GroupRef, WholeMatch, Before, After]
Replacement = tuple  # tuple[Segment, ...]


def parse_replacement(text: str) -> Replacement:
    """Parse the JavaScript template syntax.

    ``$`` sequences that are not one of the recognized forms (including a
    trailing lone ``$``) stay literal, as in JavaScript.
    """
    segs: list = []
    lit: list[str] = []

    def flush():
        if lit:
            segs.append(Lit("".join(lit)))
            lit.clear()

    i = 0
    while i < len(text):
        c = text[i]
        if c == "$" and i + 1 < len(text):
            n = text[i + 1]
            if n.isdigit() and n != "0":
                flush()
                segs.append(GroupRef(int(n)))
                i += 2
                continue
            if n == "&":
                flush()
                segs.append(WholeMatch())
                i += 2
                continue
            if n == "`":
                flush()
                segs.append(Before())
                i += 2
                continue
            if n == "'":
                flush()
                segs.append(After())
                i += 2
                continue
            if n == "$":
                lit.append("$")
                i += 2
                continue
        lit.append(c)
        i += 1
    flush()
    return tuple(segs)


def is_plain(rep: Replacement) -> bool:
    """True when the template uses only literals and capture references."""
    return all(isinstance(s, (Lit, GroupRef)) for s in rep)


# --- string-function specifications -----------------------------------------


@dataclass(frozen=True)
class Extract:
    group: int
    regex: ra.Regex


@dataclass(frozen=True)
class Replace:
    pattern: ra.Regex
    replacement: Replacement
    anchor_start: bool = False
    anchor_end: bool = False


@dataclass(frozen=True)
class ReplaceAll:
    pattern: ra.Regex
    replacement: Replacement
    anchor_start: bool = False
    anchor_end: bool = False


StrFunSpec = _U[Extract, Replace, ReplaceAll]


# --- helpers ----------------------------------------------------------------


def shift_groups(e: ra.Regex, by: int) -> ra.Regex:
    """Renumber every capturing group index upward by ``by``."""
    if isinstance(e, ra.Group):
        return ra.Group(shift_groups(e.body, by), e.index + by)
    if isinstance(e, (ra.Union, ra.Concat)):
        return type(e)(shift_groups(e.left, by), shift_groups(e.right, by))
    if isinstance(e, (ra.Optional, ra.Star, ra.Plus)):
        return type(e)(shift_groups(e.body, by), e.lazy)
    if isinstance(e, ra.Loop):
        return ra.Loop(shift_groups(e.body, by), e.low, e.high, e.lazy)
    return e


def _concat(*parts: ra.Regex) -> ra.Regex:
    return reduce(ra.Concat, parts)


def _project_to(t: Psst, keep: int):
    """Drop every variable other than ``keep`` from a machine, in place.

    Sound for compiled regex machines, where each variable's update words
    reference that variable only.
    """
    for arcs in _all_arcs(t):
        for a in arcs:
            for x in [x for x in a.assign if x != keep]:
                del a.assign[x]
            for word in a.assign.values():
                assert all(not isinstance(it, int) or it == keep for it in word)


# --- extract ----------------------------------------------------------------


def encode_extract(i: int, e: ra.Regex, alphabet: Alphabet | None = None) -> Psst:
    """The transducer for ``extract_{i,e}``.

    On ``w`` in the language of ``e`` it outputs the capture of group
    ``i`` (the whole string for ``i == 0``), null when the group did not
    participate; on other inputs it has no accepting run.
    """
    c = compile_regex(e, alphabet)
    if i == 0:
        var = c.whole_var
    elif i in c.group_var:
        var = c.group_var[i]
    else:
        raise ValueError(f"group {i} out of range for pattern")
    t = to_output_psst(c.psst, (var,))
    _project_to(t, var)
    t.validate()
    return t


def encode_first_match_extract(
    i: int, reg: ra.Regex, alphabet: Alphabet | None = None
) -> Psst:
    """Group ``i`` of the leftmost match of ``reg`` anywhere in the input
    (``str.match(reg)[i]`` without the global flag).

    Implemented as whole-string extraction over a padded pattern: a lazy
    universal prefix, then ``reg`` captured in a fresh group 1 (its own
    groups shifted up), then a greedy universal suffix.  Laziness of the
    prefix makes the match leftmost; group 0 of ``reg`` becomes group 1.
    """
    alphabet = alphabet or Alphabet.printable_ascii()
    sigma = ra.CharClass(alphabet.charset)
    padded = _concat(
        ra.Star(sigma, lazy=True),
        ra.Group(shift_groups(reg, 1), 1),
        ra.Star(sigma, lazy=False),
    )
    return encode_extract(i + 1, padded, alphabet)


# --- replace / replaceAll ---------------------------------------------------


def _build_replacer(
    pat: ra.Regex,
    rep: Replacement,
    alphabet: Alphabet,
    *,
    repeat: bool,
    anchor_start: bool,
    anchor_end: bool,
) -> Psst:
    """The single-machine replace/replaceAll construction (plain templates).

    One scan state holds the output accumulated so far in ``x0``.  Its
    top-priority move enters the compiled pattern; failing that it copies
    one letter and rescans, so the replaced match is the leftmost one and
    matches are attempted again right after each replacement.  Each
    capture reference gets its own fresh variable mirroring that group's
    updates — mutually distinct so every match edge stays copyless even
    when the template repeats a reference.  Returning from a match resets
    the pattern's variables; the blocked-ε rule then forces a letter (or
    acceptance) before the pattern can re-enter, which is exactly the
    advance-by-one rule for zero-length matches.
    """
    for s in rep:
        if not isinstance(s, (Lit, GroupRef)):
            raise ValueError(f"template segment {s!r} requires elimination first")

    c = compile_regex(pat, alphabet)
    t = Psst(alphabet, c.psst.n_vars)
    t.var_names = list(c.psst.var_names)
    m = t.import_states(c.psst)
    # A trailing-anchored global replace can append one extra replacement
    # for an empty match at the end of the input, but only after a
    # non-empty match — served by a letter-free copy of the pattern.
    m2 = None
    if anchor_end and repeat and not anchor_start:
        m2 = t.import_states(c.psst)

    x0 = t.add_var("out")
    refs = [s.index for s in rep if isinstance(s, GroupRef)]
    yvars: list[int] = []
    for j, gi in enumerate(refs):
        if gi not in c.group_var:
            raise ValueError(f"replacement references group {gi}, not in pattern")
        y = t.add_var(f"y{j}")
        yvars.append(y)
        src = c.group_var[gi]
        for arcs in _all_arcs(t):
            for a in arcs:
                if src in a.assign:
                    a.assign[y] = tuple(
                        y if it == src else it for it in a.assign[src]
                    )

    # The replacement as an assignment word, reference occurrences in order.
    expansion: list = []
    it_y = iter(yvars)
    for s in rep:
        if isinstance(s, Lit):
            expansion.extend(s.text)
        else:
            expansion.append(next(it_y))
    reset = {v: (BOTTOM,) for v in _assigned_vars(c.psst) | set(yvars)}
    match_word = {x0: (x0, *expansion), **reset}
    if m2 is not None:
        for q in range(c.psst.n_states):
            t.delta[m2[q]].clear()

    q_init = t.add_state("r.init")
    q_scan = t.add_state("r.scan")
    t.q0 = q_init
    t.eps(q_init, q_scan, {x0: ()})
    t.eps(q_scan, m[c.psst.q0], {})

    if anchor_end:
        q_stop = t.add_state("r.stop")  # accepts only with no input left
        t.out[q_stop] = (x0,)
        if m2 is not None:
            q_more = t.add_state("r.more")
            t.out[q_more] = (x0,)
            t.eps(q_more, m2[c.psst.q0], {})
            for f in c.psst.f2:
                t.eps(m[f], q_more, match_word)
            for f in c.psst.f1:
                t.eps(m[f], q_stop, match_word)
            for f in c.psst.f1:
                t.eps(m2[f], q_stop, match_word)
        else:
            for f in c.psst.f1 | c.psst.f2:
                t.eps(m[f], q_stop, match_word)
    else:
        if repeat and not anchor_start:
            q_after = q_scan
        else:
            q_after = t.add_state("r.copy")
            t.arc(q_after, alphabet.charset, q_after, {x0: (x0, CURRENT)})
            t.out[q_after] = (x0,)
        for f in c.psst.f1 | c.psst.f2:
            t.eps(m[f], q_after, match_word)

    if anchor_start:
        # No scanning past position 0: the only alternatives to an
        # immediate match are giving up into a verbatim copy of the input.
        q_bail = t.add_state("r.bail")
        t.arc(q_bail, alphabet.charset, q_bail, {x0: (x0, CURRENT)})
        t.out[q_bail] = (x0,)
        t.eps(q_scan, q_bail, {}, tier=2)
    else:
        t.arc(q_scan, alphabet.charset, q_scan, {x0: (x0, CURRENT)})
        t.out[q_scan] = (x0,)

    t.validate()
    return t


def encode_replace_all(
    pat: ra.Regex,
    rep: Replacement,
    alphabet: Alphabet | None = None,
    *,
    anchor_start: bool = False,
    anchor_end: bool = False,
) -> Psst:
    """``replaceAll`` with a plain template (literals and ``$i`` only)."""
    alphabet = alphabet or Alphabet.printable_ascii()
    return _build_replacer(
        pat, rep, alphabet,
        repeat=True, anchor_start=anchor_start, anchor_end=anchor_end,
    )


def encode_replace(
    pat: ra.Regex,
    rep: Replacement,
    alphabet: Alphabet | None = None,
    *,
    anchor_start: bool = False,
    anchor_end: bool = False,
) -> Psst:
    """``replace`` (first match only) with a plain template."""
    alphabet = alphabet or Alphabet.printable_ascii()
    return _build_replacer(
        pat, rep, alphabet,
        repeat=False, anchor_start=anchor_start, anchor_end=anchor_end,
    )


# --- special-reference elimination ------------------------------------------

#: Reserved markers bracketing matches during context-reference
#: elimination; they must lie outside the user alphabet.
MARK_OPEN = "⟨"
MARK_CLOSE = "⟩"


def extended_alphabet(alphabet: Alphabet) -> Alphabet:
    """The user alphabet plus the two reserved markers."""
    if MARK_OPEN in alphabet or MARK_CLOSE in alphabet:
        raise ValueError("alphabet already contains a reserved marker letter")
    return alphabet.with_letters(MARK_OPEN + MARK_CLOSE)


def reverse_psst(alphabet: Alphabet) -> Psst:
    """String reversal: one variable, each letter prepended to it."""
    t = Psst(alphabet, 0)
    x = t.add_var("rev")
    q0 = t.add_state("rev.init")
    q = t.add_state("rev.q")
    t.q0 = q0
    t.eps(q0, q, {x: ()})
    t.arc(q, alphabet.charset, q, {x: (CURRENT, x)})
    t.out[q] = (x,)
    t.validate()
    return t


def context_marker_psst(
    alphabet: Alphabet, trigger: str, other: str, *, skip_spliced: bool = False
) -> Psst:
    """The copyful context inserter over a marker-extended alphabet.

    Letters that are not markers are copied to the output and also
    collected in a side variable; the ``other`` marker is copied
    unchanged; each ``trigger`` marker is replaced by the collection so
    far, bracketed in ``trigger`` on both sides.  With ``trigger`` the
    opening marker this splices the prefix context into every opening
    bracket.

    The suffix pass runs the mirror machine (closing marker as trigger)
    between two reversals — but by then the prefix pass has already
    spliced text into every ``other``-bracket pair, text that is not part
    of the original string and must not be collected.  ``skip_spliced``
    adds a second state for that: between two ``other`` markers letters
    are copied through without being collected.
    """
    t = Psst(alphabet, 0)
    o = t.add_var("out")
    x = t.add_var("pre")
    q0 = t.add_state("mark.init")
    q = t.add_state("mark.q")
    t.q0 = q0
    t.eps(q0, q, {o: (), x: ()})
    plain = alphabet.charset.difference(CharSet.of(trigger + other))
    t.arc(q, plain, q, {o: (o, CURRENT), x: (x, CURRENT)})
    t.arc(q, CharSet.of(trigger), q, {o: (o, trigger, x, trigger)})
    if skip_spliced:
        s = t.add_state("mark.skip")
        t.arc(q, CharSet.of(other), s, {o: (o, other)})
        t.arc(s, plain, s, {o: (o, CURRENT)})
        t.arc(s, CharSet.of(other), q, {o: (o, other)})
    else:
        t.arc(q, CharSet.of(other), q, {o: (o, other)})
    t.out[q] = (o,)
    t.validate()
    return t


def _eliminate_whole_match(pat: ra.Regex, rep: Replacement):
    """Rewrite ``$&`` away by capturing the whole pattern as group 1."""
    if not any(isinstance(s, WholeMatch) for s in rep):
        return pat, rep
    pat = ra.Group(shift_groups(pat, 1), 1)
    rep = tuple(
        GroupRef(1)
        if isinstance(s, WholeMatch)
        else GroupRef(s.index + 1)
        if isinstance(s, GroupRef)
        else s
        for s in rep
    )
    return pat, rep


def eliminate_special_refs(
    f: _U[Replace, ReplaceAll], alphabet: Alphabet | None = None
) -> list[Psst]:
    """Compile a replace/replaceAll specification to a transducer pipeline.

    The result is a chain of machines to be applied in order, the output
    of each feeding the next.  Plain templates (after rewriting ``$&``)
    give a single machine.  Context references give six steps:

    1. the same replacement but with template ``⟨$&⟩`` — every match
       gets bracketed in the reserved markers, nothing else changes;
    2. the context inserter, splicing the text before each match into
       its opening bracket;
    3–5. reversal, the context inserter for closing brackets (thereby
       splicing the text *after* each match), reversal back;
    6. a plain replaceAll over the marker alphabet whose pattern matches
       one whole bracketed block — spliced before-context, the original
       pattern, spliced after-context — and whose template is the
       original one with ``$``` and ``$'`` turned into references
       to the context groups.

    Step 6 re-runs the pattern on exactly the substring it matched in
    step 1, bounded by markers on both sides, so its capture groups come
    out identical to the original match's.
    """
    if not isinstance(f, (Replace, ReplaceAll)):
        raise TypeError(f"expected Replace/ReplaceAll, got {f!r}")
    alphabet = alphabet or Alphabet.printable_ascii()
    repeat = isinstance(f, ReplaceAll)
    pat, rep = _eliminate_whole_match(f.pattern, f.replacement)

    def one_step(pat, rep, alph):
        enc = encode_replace_all if repeat else encode_replace
        return enc(
            pat, rep, alph,
            anchor_start=f.anchor_start, anchor_end=f.anchor_end,
        )

    if is_plain(rep):
        return [one_step(pat, rep, alphabet)]

    ext = extended_alphabet(alphabet)
    k = ra.group_count(pat)
    sigma = ra.CharClass(alphabet.charset)  # markers excluded
    mark = one_step(
        ra.Group(shift_groups(pat, 1), 1),
        (Lit(MARK_OPEN), GroupRef(1), Lit(MARK_CLOSE)),
        ext,
    )
    # ⟨ (Σ*?) ⟨ pat ⟩ (Σ*?) ⟩ — group 1 the spliced before-context,
    # the pattern's groups shifted up by one, group k+2 the after-context.
    block = _concat(
        ra.CharClass(CharSet.of(MARK_OPEN)),
        ra.Group(ra.Star(sigma, lazy=True), 1),
        ra.CharClass(CharSet.of(MARK_OPEN)),
        shift_groups(pat, 1),
        ra.CharClass(CharSet.of(MARK_CLOSE)),
        ra.Group(ra.Star(sigma, lazy=True), k + 2),
        ra.CharClass(CharSet.of(MARK_CLOSE)),
    )
    final_rep = tuple(
        GroupRef(1)
        if isinstance(s, Before)
        else GroupRef(k + 2)
        if isinstance(s, After)
        else GroupRef(s.index + 1)
        if isinstance(s, GroupRef)
        else s
        for s in rep
    )
    return [
        mark,
        context_marker_psst(ext, MARK_OPEN, MARK_CLOSE),
        reverse_psst(ext),
        context_marker_psst(ext, MARK_CLOSE, MARK_OPEN, skip_spliced=True),
        reverse_psst(ext),
        encode_replace_all(block, final_rep, ext),
    ]


def apply_spec(f: StrFunSpec, w: str, alphabet: Alphabet | None = None):
    """Evaluate a string function on a concrete word through its
    transducer pipeline; ``None`` when the result is undefined (no
    match for an extraction) or null (group did not participate)."""
    from .psst import run

    for t in encode(f, alphabet):
        r = run(t, w)
        if not r.accepted or r.output is None:
            return None
        w = r.output
    return w


def encode(f: StrFunSpec, alphabet: Alphabet | None = None) -> list[Psst]:
    """Any string-function specification as a pipeline of transducers.

    Each machine is stripped of variables that cannot reach its output
    word: per-subexpression registers from regex compilation are mostly
    write-only, and dropping them keeps later pre-image constructions —
    whose state spaces grow with the register count — small.
    """
    if isinstance(f, Extract):
        machines = [encode_extract(f.group, f.regex, alphabet)]
    else:
        machines = eliminate_special_refs(f, alphabet)
    out = []
    for t in machines:
        t = prune_dead_vars(t)
        t.validate()
        out.append(t)
    return out
