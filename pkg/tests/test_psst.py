"""Hand-built transducers exercising the run semantics directly:
priority order, the no-repeated-ε rule, null handling, copylessness, and
split-final concatenation."""

import pytest

from strsolver.charset import Alphabet, CharSet
from strsolver.psst import (
    BOTTOM,
    CURRENT,
    Psst,
    check_copyless,
    compare_runs,
    compose_concat,
    enumerate_runs,
    eval_word,
    run,
    run_length_bound,
    to_output_psst,
)

DIGITS = Alphabet.of("0123456789")
AB = Alphabet.of("ab")


def digit_pair_machine() -> Psst:
    """Greedy digits followed by leftover digits: x1 grabs as much as it
    can, x2 only what the lower-priority branch leaves over.  The machine
    outputs x1."""
    t = Psst(DIGITS)
    x1, x2 = t.add_var("x1"), t.add_var("x2")
    q0, q1, q2, q3, q4 = (t.add_state(f"q{i}") for i in range(5))
    d = DIGITS.charset
    t.eps(q0, q1, {x1: ()})
    t.arc(q1, d, q2, {x1: (x1, CURRENT)})
    t.arc(q2, d, q2, {x1: (x1, CURRENT)})
    t.eps(q2, q3, {x2: ()}, tier=2)
    t.arc(q3, d, q3, {x2: (x2, CURRENT)})
    t.eps(q3, q4, tier=2)
    t.out = {q4: (x1,)}
    t.validate()
    return t


def test_digit_pair_accepting_run():
    t = digit_pair_machine()
    r = run(t, "2050")
    assert r.accepted and r.output == "2050"
    path = [s.source for s in r.trace] + [r.trace[-1].target]
    assert path == [0, 1, 2, 2, 2, 2, 3, 4]
    assert [s.sym for s in r.trace] == [None, "2", "0", "5", "0", None, None]
    assert len(r.trace) <= run_length_bound(t, "2050")


def test_digit_pair_priority_order():
    t = digit_pair_machine()
    rs = list(enumerate_runs(t, "10"))
    assert [r.output for r in rs] == ["10", "1"]
    assert compare_runs(t, rs[0].trace, rs[1].trace) < 0
    assert compare_runs(t, rs[1].trace, rs[0].trace) > 0
    assert compare_runs(t, rs[0].trace, rs[0].trace) == 0


def test_digit_pair_rejects_empty_and_letters():
    t = digit_pair_machine()
    assert not run(t, "").accepted


def test_epsilon_cycle_terminates_and_prefers_extension():
    # Two states joined by ε both ways; with each ε-edge usable once per
    # segment, the search visits A→B→A, dead-ends, and accepts at B.  The
    # extension was explored before yielding acceptance at B.
    t = Psst(AB)
    a = t.add_state("A")
    b = t.add_state("B")
    t.eps(a, b)
    t.eps(b, a)
    t.out = {b: ()}
    r = run(t, "")
    assert r.accepted and r.output == ""
    assert len(r.trace) == 1


def test_trailing_epsilon_outranks_prefix():
    # From the accept state an ε-edge leads to another accept state; the
    # longer run (with the trailing ε) must win.
    t = Psst(AB)
    x = t.add_var()
    p = t.add_state()
    q = t.add_state()
    t.eps(p, q, {x: ("y",)})
    t.out = {p: (x,), q: (x,)}
    r = run(t, "")
    assert r.output == "y"
    assert len(r.trace) == 1


def test_letter_beats_low_epsilon():
    t = Psst(AB)
    x = t.add_var()
    s = t.add_state()
    f = t.add_state()
    t.arc(s, CharSet.of("a"), s, {x: (x, "L")})
    t.eps(s, f, {x: (x, "E")}, tier=2)
    t.out = {f: (x,)}
    assert run(t, "aa").output == "LLE"


def test_high_epsilon_beats_letter():
    t = Psst(AB)
    x = t.add_var()
    s = t.add_state()
    m = t.add_state()
    t.eps(s, m, {x: (x, "E")}, tier=1)
    t.arc(s, CharSet.of("a"), s, {x: (x, "L")})
    t.arc(m, CharSet.of("a"), s, {x: (x, "l")})
    t.out = {m: (x,), s: (x,)}
    # the ε into m fires before the letter loop at position 0, the letter
    # returns to s, and the ε fires once more at end of input
    r = run(t, "a")
    assert r.trace[0].tier == 1
    assert r.output == "ElE"


def test_null_evaluation_rules():
    x = 0
    assert eval_word((x,), [None], None) is None
    assert eval_word((x, "c"), [None], None) == "c"
    assert eval_word((BOTTOM,), ["w"], None) is None
    assert eval_word((), [None], None) == ""
    assert eval_word((x,), ["ab"], None) == "ab"


def test_null_output_vs_empty_output():
    t = Psst(AB)
    x = t.add_var()
    s = t.add_state()
    t.out = {s: (x,)}
    assert run(t, "").output is None  # x never written: null, not ""

    t2 = Psst(AB)
    x2 = t2.add_var()
    s2 = t2.add_state()
    f2 = t2.add_state()
    t2.eps(s2, f2, {x2: ()})
    t2.out = {f2: (x2,)}
    assert run(t2, "").output == ""


def test_reset_to_null():
    t = Psst(AB)
    x = t.add_var()
    s = t.add_state()
    m = t.add_state()
    f = t.add_state()
    t.eps(s, m, {x: ("v",)})
    t.eps(m, f, {x: (BOTTOM,)})
    t.out = {f: (x,)}
    assert run(t, "").output is None


def test_check_copyless():
    t = Psst(AB)
    x = t.add_var("x")
    y = t.add_var("y")
    s = t.add_state()
    f = t.add_state()
    t.eps(s, f, {x: (y,)})  # y also kept implicitly: y appears twice
    assert check_copyless(t)

    t2 = Psst(AB)
    x2 = t2.add_var("x")
    y2 = t2.add_var("y")
    s2 = t2.add_state()
    f2 = t2.add_state()
    t2.eps(s2, f2, {x2: (y2,), y2: ("c",)})  # move, not copy
    assert not check_copyless(t2)


def letter_machine(alphabet, c, var, mark):
    """Split-final machine accepting the single letter `c`, recording
    `mark` into `var`."""
    t = Psst(alphabet)
    while t.n_vars <= var:
        t.add_var()
    q0 = t.add_state()
    f = t.add_state()
    t.arc(q0, CharSet.of(c), f, {var: (mark,)})
    t.f2 = {f}
    return t


def epsilon_machine(alphabet, var, mark):
    t = Psst(alphabet)
    while t.n_vars <= var:
        t.add_var()
    q0 = t.add_state()
    f = t.add_state()
    t.eps(q0, f, {var: (mark,)})
    t.f1 = {f}
    return t


def _pad_vars(*machines):
    n = max(m.n_vars for m in machines)
    for m in machines:
        while m.n_vars < n:
            m.add_var()


def test_concat_single_copy_when_left_never_empty():
    ta = letter_machine(AB, "a", 0, "u")
    tb = letter_machine(AB, "b", 1, "v")
    _pad_vars(ta, tb)
    c = compose_concat(ta, tb)
    c.validate()
    assert not c.f1
    t = to_output_psst(c, (0, 1))
    assert run(t, "ab").output == "uv"
    assert not run(t, "a").accepted
    assert not run(t, "").accepted


def test_concat_seam_resets_right_variables():
    ta = letter_machine(AB, "a", 0, "u")
    tb = letter_machine(AB, "b", 1, "v")
    _pad_vars(ta, tb)
    c = compose_concat(ta, tb)
    seams = [arc for q in range(c.n_states) for arc in c.eps1[q] + c.eps2[q]]
    assert any(arc.assign.get(1) == (BOTTOM,) for arc in seams)
    # the left machine's variable is not reset at the seam
    assert all(0 not in arc.assign for arc in seams)


def test_concat_epsilon_left():
    te = epsilon_machine(AB, 0, "e")
    tb = letter_machine(AB, "b", 1, "v")
    _pad_vars(te, tb)
    c = compose_concat(te, tb)
    assert not c.f1  # right side never empty
    t = to_output_psst(c, (0, 1))
    assert run(t, "b").output == "ev"
    assert not run(t, "").accepted


def test_concat_double_copy_split():
    # both sides accept ε: the split finals must separate "everything
    # empty" from "something consumed"
    left = Psst(AB)
    x = left.add_var()
    l0 = left.add_state()
    l1 = left.add_state()
    l2 = left.add_state()
    left.eps(l0, l1, {x: ()})
    left.arc(l0, CharSet.of("a"), l2, {x: ("a",)})
    left.f1, left.f2 = {l1}, {l2}

    right = Psst(AB)
    right.add_var()  # slot 0 belongs to the left machine
    y = right.add_var()
    r0 = right.add_state()
    r1 = right.add_state()
    r2 = right.add_state()
    right.eps(r0, r1, {y: ()})
    right.arc(r0, CharSet.of("b"), r2, {y: ("b",)})
    right.f1, right.f2 = {r1}, {r2}
    _pad_vars(left, right)

    c = compose_concat(left, right)
    c.validate()
    t = to_output_psst(c, (0, 1))
    assert run(t, "").output == ""
    assert run(t, "a").output == "a"
    assert run(t, "b").output == "b"
    assert run(t, "ab").output == "ab"
    # ε-acceptance only through the first copy
    empty_run_end = run(t, "").trace[-1].target
    assert empty_run_end in c.f1
    nonempty_ends = {run(t, w).trace[-1].target for w in ["a", "b", "ab"]}
    assert nonempty_ends <= c.f2


def test_compare_runs_tiers():
    t = digit_pair_machine()
    rs = [r.trace for r in enumerate_runs(t, "205")]
    for earlier, later in zip(rs, rs[1:]):
        assert compare_runs(t, earlier, later) < 0


# --- dead-variable pruning --------------------------------------------------


def test_prune_dead_vars_drops_unread_registers():
    from strsolver.psst import prune_dead_vars

    t = Psst(AB)
    keep, dead = t.add_var("keep"), t.add_var("dead")
    q0 = t.add_state("q0")
    t.arc(q0, AB.charset, q0, {keep: (keep, CURRENT), dead: (dead, CURRENT)})
    t.out = {q0: (keep,)}
    t.validate()
    p = prune_dead_vars(t)
    p.validate()
    assert p.n_vars == 1 and p.var_names == ["keep"]
    for w in ["", "ab", "ba", "aabb"]:
        assert run(p, w).output == run(t, w).output


def test_prune_dead_vars_follows_assignment_chains():
    from strsolver.psst import prune_dead_vars

    t = Psst(AB)
    x, y, z = t.add_var("x"), t.add_var("y"), t.add_var("z")
    q0, q1 = t.add_state("q0"), t.add_state("q1")
    # x feeds the output only through y; z goes nowhere
    t.arc(q0, AB.charset, q0, {x: (x, CURRENT), z: (z, CURRENT)})
    t.eps(q0, q1, {y: (x,)}, tier=2)
    t.out = {q1: (y,)}
    t.validate()
    p = prune_dead_vars(t)
    p.validate()
    assert p.n_vars == 2 and set(p.var_names) == {"x", "y"}
    for w in ["", "a", "abab"]:
        assert run(p, w).output == run(t, w).output


def test_prune_dead_vars_keeps_behavior_of_compiled_machines():
    from strsolver import regex_ast as ra
    from strsolver import strfuncs as sf
    from strsolver.psst import prune_dead_vars
    from strsolver.regex_compile import compile_regex

    e = ra.parse_regex("(a+)(b*)|b(a*)", alphabet=AB)
    c = compile_regex(e, AB)
    t = to_output_psst(c.psst, (c.whole_var,))
    p = prune_dead_vars(t)
    p.validate()
    assert p.n_vars < t.n_vars
    assert not check_copyless(p)
    import itertools

    for n in range(5):
        for tup in itertools.product("ab", repeat=n):
            w = "".join(tup)
            assert run(p, w).output == run(t, w).output, w
