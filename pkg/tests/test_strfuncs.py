"""String-function encodings, checked three ways: against the frozen
engine fixture, against the backtracking reference matcher, and against
an independent leftmost-scan interpreter that reuses only the compiled
pattern machine (not the replace encoding)."""

from __future__ import annotations

import itertools
import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import refmatch
from strsolver import regex_ast as ra
from strsolver import strfuncs as sf
from strsolver.charset import Alphabet, CharSet
from strsolver.psst import check_copyless, run, run_length_bound, to_output_psst
from strsolver.regex_ast import parse_regex
from strsolver.regex_compile import compile_regex

CASES = json.loads((Path(__file__).parent / "data" / "js_behavior.json").read_text())
REPLACE_CASES = [c for c in CASES if c["kind"] in ("replace", "replace-all")]

AB = Alphabet.of("ab")


def words(alphabet="ab", max_len=5):
    for n in range(max_len + 1):
        for tpl in itertools.product(alphabet, repeat=n):
            yield "".join(tpl)


def apply_pipeline(steps, w: str) -> str:
    for t in steps:
        r = run(t, w)
        assert r.accepted, (w, t.state_names)
        w = r.output
    return w


def fixture_pipeline(case):
    spec_cls = sf.ReplaceAll if case["kind"] == "replace-all" else sf.Replace
    return sf.eliminate_special_refs(
        spec_cls(
            parse_regex(case["regex"]),
            sf.parse_replacement(case["replacement"]),
            case.get("anchorStart", False),
            case.get("anchorEnd", False),
        )
    )


# --- engine fixture ---------------------------------------------------------


@pytest.mark.parametrize("case", REPLACE_CASES, ids=lambda c: c["id"])
def test_replace_fixture(case):
    got = apply_pipeline(fixture_pipeline(case), case["input"])
    assert got == case["expected"]


# --- extraction -------------------------------------------------------------


def test_extract_greedy_first_group():
    t = sf.encode_extract(1, parse_regex(r"(\d+)(\d*)"))
    assert run(t, "2050").output == "2050"
    t2 = sf.encode_extract(2, parse_regex(r"(\d+)(\d*)"))
    assert run(t2, "2050").output == ""


def test_extract_union_skips_low_priority_group():
    # The left union branch matches the whole input, so the group in the
    # right branch never participates and its value is null.
    t = sf.encode_extract(1, parse_regex(r"a+|(a*)"))
    r = run(t, "aa")
    assert r.accepted and r.output is None
    # On the empty input only the right branch matches.
    r = run(t, "")
    assert r.accepted and r.output == ""


def test_extract_whole_is_identity_on_members():
    t = sf.encode_extract(0, parse_regex(r"(a|b)*abb"))
    for w in ["abb", "babb", "aababb"]:
        assert run(t, w).output == w
    assert not run(t, "ab").accepted
    assert not run(t, "").accepted


def test_extract_group_out_of_range():
    with pytest.raises(ValueError):
        sf.encode_extract(2, parse_regex("(a)"))


def test_extract_single_variable_remains():
    t = sf.encode_extract(1, parse_regex(r"(a*)(b*)"))
    used = {
        x
        for arcs in (t.eps1, t.delta, t.eps2)
        for lst in arcs
        for a in lst
        for x in a.assign
    }
    assert len(used) == 1


def test_first_match_simple():
    t = sf.encode_first_match_extract(0, parse_regex("a"))
    assert run(t, "bab").output == "a"
    t = sf.encode_first_match_extract(0, parse_regex("a+"))
    assert run(t, "baab").output == "aa"
    assert not run(t, "b").accepted


def test_first_match_name_pattern():
    case = next(c for c in CASES if c["id"] == "name-reg-first")
    reg = parse_regex(case["regex"])
    exp = case["expected"]["groups"]
    for i, want in enumerate(exp):
        t = sf.encode_first_match_extract(i, reg)
        r = run(t, case["input"])
        assert r.accepted
        assert r.output == want


# --- replacement templates --------------------------------------------------


def test_parse_replacement_forms():
    assert sf.parse_replacement("ab") == (sf.Lit("ab"),)
    assert sf.parse_replacement("$2, $1") == (
        sf.GroupRef(2),
        sf.Lit(", "),
        sf.GroupRef(1),
    )
    assert sf.parse_replacement("$&$`$'") == (
        sf.WholeMatch(),
        sf.Before(),
        sf.After(),
    )
    assert sf.parse_replacement("a$$b") == (sf.Lit("a$b"),)
    # Unrecognized and trailing dollars stay literal, as in the engine.
    assert sf.parse_replacement("$x$") == (sf.Lit("$x$"),)
    assert sf.parse_replacement("$0") == (sf.Lit("$0"),)


@given(st.text(alphabet="ab$&`'123", max_size=10))
def test_parse_replacement_total(text):
    rep = sf.parse_replacement(text)
    assert all(
        isinstance(s, (sf.Lit, sf.GroupRef, sf.WholeMatch, sf.Before, sf.After))
        for s in rep
    )
    for s in rep:
        if isinstance(s, sf.Lit):
            assert s.text


def test_replace_template_reference_out_of_range():
    with pytest.raises(ValueError):
        sf.encode_replace_all(parse_regex("(a)"), sf.parse_replacement("$2"))


# --- copylessness -----------------------------------------------------------

COPYLESS_PAIRS = [
    ("a", "X"),
    ("(a)", "[$1]"),
    (r"(\w+) (\w+)", "$2, $1"),
    ("(a)(b)", "$2$2$1$1"),  # repeated references get distinct variables
    ("(a*)", "<$1>"),
    ("a|b", ""),
    ("(a+)b?", "$1$1"),
    ("((a)|b)+", "{$2$1}"),
]


@pytest.mark.parametrize("pat,rep", COPYLESS_PAIRS, ids=[p for p, _ in COPYLESS_PAIRS])
def test_replacers_are_copyless(pat, rep):
    pat = parse_regex(pat)
    rep = sf.parse_replacement(rep)
    for enc in (sf.encode_replace, sf.encode_replace_all):
        assert check_copyless(enc(pat, rep)) == []
    assert check_copyless(sf.encode_replace(pat, rep, anchor_start=True)) == []
    assert check_copyless(sf.encode_replace(pat, rep, anchor_end=True)) == []


# --- independent leftmost-scan interpreter ----------------------------------


class FirstMatcher:
    """Leftmost match read off the compiled pattern machine alone.

    The pattern is padded as (prefix)(pattern)suffix — with the prefix
    lazy and captured, the pattern captured whole, and the suffix greedy
    — then each relevant variable is read by its own run.  None of the
    replace-encoding machinery (scan state, mirror variables) is used.
    """

    def __init__(self, pat: ra.Regex, alphabet: Alphabet):
        k = ra.group_count(pat)
        sigma = ra.CharClass(alphabet.charset)
        padded = ra.Concat(
            ra.Concat(
                ra.Group(ra.Star(sigma, lazy=True), k + 1),
                ra.Group(pat, k + 2),
            ),
            ra.Star(sigma, lazy=False),
        )
        c = compile_regex(padded, alphabet)
        self.k = k
        self.readers = {
            g: to_output_psst(c.psst, (c.group_var[g],)) for g in range(1, k + 3)
        }

    def first(self, s: str):
        """(before-length, match, captures) of the leftmost match, or None."""
        whole = run(self.readers[self.k + 2], s)
        if not whole.accepted:
            return None
        before = run(self.readers[self.k + 1], s).output
        caps = {i: run(self.readers[i], s).output for i in range(1, self.k + 1)}
        return len(before), whole.output, caps


def interp_replace(pat: ra.Regex, rep, w: str, alphabet, *, count_all: bool) -> str:
    """Scan-and-splice replacement over FirstMatcher results."""
    fm = FirstMatcher(pat, alphabet)
    out = []
    pos = 0
    while pos <= len(w):
        m = fm.first(w[pos:])
        if m is None:
            break
        b, mt, caps = m
        start, end = pos + b, pos + b + len(mt)
        out.append(w[pos:start])
        for s in rep:
            if isinstance(s, sf.Lit):
                out.append(s.text)
            elif isinstance(s, sf.GroupRef):
                v = caps.get(s.index)
                out.append("" if v is None else v)
            elif isinstance(s, sf.WholeMatch):
                out.append(mt)
            elif isinstance(s, sf.Before):
                out.append(w[:start])
            else:
                out.append(w[end:])
        if end == start:
            if end < len(w):
                out.append(w[end])
            pos = end + 1
        else:
            pos = end
        if not count_all:
            break
    if pos <= len(w):
        out.append(w[pos:])
    return "".join(out)


INTERP_PAIRS = [
    ("a", "X"),
    ("a*", "X"),
    ("a*?", "-"),
    ("a|b", "<>"),
    ("(a)", "[$1]"),
    ("(a*)", "[$1]"),
    ("(a|ab)(b|)", "$2/$1"),
    ("((a)|b)+", "{$1$2}"),
    ("a+?", "X"),
    ("(a)(b)", "$2$1"),
    ("a{1,2}", "X"),
    ("(ab)+", "<$1>"),
]


@pytest.mark.parametrize("pat,rep", INTERP_PAIRS, ids=[p for p, _ in INTERP_PAIRS])
def test_three_route_agreement(pat, rep):
    """Encoded machine == independent interpreter == reference matcher."""
    node = parse_regex(pat)
    template = sf.parse_replacement(rep)
    ref_template = refmatch.parse_template(rep)
    t_all = sf.encode_replace_all(node, template, AB)
    t_one = sf.encode_replace(node, template, AB)
    for w in words("ab", 5):
        want_all = refmatch.replace(node, w, ref_template, count_all=True)
        want_one = refmatch.replace(node, w, ref_template, count_all=False)
        assert run(t_all, w).output == want_all, (pat, rep, w)
        assert run(t_one, w).output == want_one, (pat, rep, w)
        assert interp_replace(node, template, w, AB, count_all=True) == want_all
        assert interp_replace(node, template, w, AB, count_all=False) == want_one


@pytest.mark.parametrize("pat,rep", [("a*", "X"), ("(a|ab)(b|)", "$2/$1")])
def test_three_route_agreement_long_words(pat, rep):
    node = parse_regex(pat)
    template = sf.parse_replacement(rep)
    ref_template = refmatch.parse_template(rep)
    t_all = sf.encode_replace_all(node, template, AB)
    for n in (6, 7, 8):
        for w in itertools.islice(words("ab", n), 0, None, 11):
            if len(w) != n:
                continue
            want = refmatch.replace(node, w, ref_template, count_all=True)
            assert run(t_all, w).output == want
            assert interp_replace(node, template, w, AB, count_all=True) == want


ANCHOR_PATTERNS = ["a", "a+", "a*", "(a)b"]


@pytest.mark.parametrize("pat", ANCHOR_PATTERNS)
def test_anchored_replace_matches_reference(pat):
    node = parse_regex(pat)
    rep = sf.parse_replacement("<$&>" if "(" not in pat else "<$1>")
    ref = refmatch.parse_template("<$&>" if "(" not in pat else "<$1>")
    for a_start, a_end in [(True, False), (False, True), (True, True)]:
        spec = sf.Replace(node, rep, a_start, a_end)
        steps = sf.eliminate_special_refs(spec)
        spec_all = sf.ReplaceAll(node, rep, a_start, a_end)
        steps_all = sf.eliminate_special_refs(spec_all)
        for w in words("ab", 4):
            want = refmatch.replace(
                node, w, ref, anchor_start=a_start, anchor_end=a_end
            )
            want_all = refmatch.replace(
                node, w, ref, count_all=True, anchor_start=a_start, anchor_end=a_end
            )
            assert apply_pipeline(steps, w) == want, (pat, a_start, a_end, w)
            assert apply_pipeline(steps_all, w) == want_all, (pat, a_start, a_end, w)


def test_trailing_empty_match_with_end_anchor():
    # A pattern that can match the empty string always matches at the very
    # end under a trailing anchor.
    node = parse_regex("a*")
    rep = sf.parse_replacement("X")
    t = sf.encode_replace(node, rep, anchor_end=True)
    assert run(t, "ab").output == "abX"
    assert run(t, "ba").output == "bX"
    assert run(t, "").output == "X"


# --- termination on empty-matching patterns ---------------------------------

EPS_PATTERNS = ["a*", "a*?", "(a|)", "(|a)", "(a*)(b*)"]


@pytest.mark.parametrize("pat", EPS_PATTERNS)
def test_empty_match_progress_and_bound(pat):
    node = parse_regex(pat)
    t = sf.encode_replace_all(node, sf.parse_replacement("X"), AB)
    for w in words("ab", 4):
        r = run(t, w)
        assert r.accepted
        assert len(r.trace) <= run_length_bound(t, w)


# --- special-reference elimination ------------------------------------------


def test_plain_template_is_single_step():
    spec = sf.ReplaceAll(parse_regex("(a)"), sf.parse_replacement("[$1]"))
    assert len(sf.eliminate_special_refs(spec)) == 1


def test_whole_match_rewrites_to_single_step():
    spec = sf.ReplaceAll(parse_regex("a+"), sf.parse_replacement("[$&]"))
    steps = sf.eliminate_special_refs(spec)
    assert len(steps) == 1
    assert run(steps[0], "xaayaz").output == "x[aa]y[a]z"


def test_context_templates_are_six_steps():
    spec = sf.ReplaceAll(parse_regex("a"), sf.parse_replacement("$`"))
    assert len(sf.eliminate_special_refs(spec)) == 6


def test_context_marker_worked_trace():
    ext = sf.extended_alphabet(Alphabet.printable_ascii())
    t = sf.context_marker_psst(ext, sf.MARK_OPEN, sf.MARK_CLOSE)
    w = "ab" + sf.MARK_OPEN + "c" + sf.MARK_CLOSE + "d" + sf.MARK_OPEN + "e" + sf.MARK_CLOSE + "f"
    want = (
        "ab" + sf.MARK_OPEN + "ab" + sf.MARK_OPEN + "c" + sf.MARK_CLOSE + "d"
        + sf.MARK_OPEN + "abcd" + sf.MARK_OPEN + "e" + sf.MARK_CLOSE + "f"
    )
    assert run(t, w).output == want


def test_context_marker_identity_without_markers():
    ext = sf.extended_alphabet(AB)
    t = sf.context_marker_psst(ext, sf.MARK_OPEN, sf.MARK_CLOSE)
    for w in words("ab", 4):
        assert run(t, w).output == w


@given(st.text(alphabet="abc", max_size=8))
def test_reverse_machine(w):
    t = sf.reverse_psst(Alphabet.printable_ascii())
    assert run(t, w).output == w[::-1]


def test_before_reference_worked_example():
    spec = sf.ReplaceAll(parse_regex("a"), sf.parse_replacement("$`"))
    steps = sf.eliminate_special_refs(spec)
    assert apply_pipeline(steps, "xay") == "xxy"


CONTEXT_PAIRS = [
    ("a", "$`"),
    ("a|b", "$'"),
    ("(a)b", "[$`|$1|$']"),
    ("a*", "{$`}"),
    ("ab", "$'$`"),
]


@pytest.mark.parametrize("pat,rep", CONTEXT_PAIRS, ids=[p + " " + r for p, r in CONTEXT_PAIRS])
def test_context_pipeline_matches_reference(pat, rep):
    node = parse_regex(pat)
    template = sf.parse_replacement(rep)
    ref = refmatch.parse_template(rep)
    steps_all = sf.eliminate_special_refs(sf.ReplaceAll(node, template), AB)
    steps_one = sf.eliminate_special_refs(sf.Replace(node, template), AB)
    for w in words("ab", 4):
        assert apply_pipeline(steps_all, w) == refmatch.replace(
            node, w, ref, count_all=True
        ), (pat, rep, w)
        assert apply_pipeline(steps_one, w) == refmatch.replace(node, w, ref), (
            pat,
            rep,
            w,
        )


def test_marker_collision_rejected():
    bad = Alphabet.printable_ascii().with_letters(sf.MARK_OPEN)
    with pytest.raises(ValueError):
        sf.extended_alphabet(bad)


def test_encode_dispatcher():
    steps = sf.encode(sf.Extract(1, parse_regex("(a)")))
    assert len(steps) == 1
    assert run(steps[0], "a").output == "a"
    steps = sf.encode(sf.ReplaceAll(parse_regex("a"), sf.parse_replacement("b")))
    assert len(steps) == 1
    assert run(steps[0], "aa").output == "bb"
