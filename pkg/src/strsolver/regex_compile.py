"""Compilation of regexes to prioritized streaming string transducers.

Every subexpression `e'` of the regex owns one string variable `x_{e'}`
that accumulates the substring currently matched by `e'`; capturing groups
are read off these variables after a run.  Greediness is encoded purely in
ε-transition priorities, so a lazy quantifier differs from its greedy twin
only by a swapped pair of priorities.

Machines are produced in *split-final* form: `f1` states accept runs whose
machine consumed no input, `f2` states runs that consumed at least one
letter.  The split is what makes iteration sound: a quantifier loop re-
enters its body only from an `f2` final, so an iteration that matched the
empty string cannot be repeated — which is exactly the cut-off rule real
regex engines apply to empty iterations, and what keeps runs finite.

Construction notes that are easy to get wrong:

* Star loop-backs reset every body variable to null, implementing the
  fresh-capture semantics of each new iteration; the exit edge does not
  reset, so the last iteration's captures survive.
* An `f1` final of a star body can only loop back (never exit): a body
  iteration that matched ε does not produce a star iteration.
* In `e?`, the body's `f1` finals are dropped entirely: matching `e?` by
  an empty `e` is indistinguishable from skipping it, and the skip branch
  wins.
* In bounded loops `e{1,n}`, the "no more iterations" choice must branch
  off *before* the next copy's entry reset, otherwise declining an extra
  iteration would wipe the captures of the last completed one.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import regex_ast as ra
from .charset import Alphabet
from .psst import BOTTOM, CURRENT, Psst, compose_concat


@dataclass
class CompiledRegex:
    """A split-final machine plus the bookkeeping to read captures off it.

    `node_var[i]` is the variable of the i-th pre-order subexpression of
    `ast` (the desugared tree); `group_var[g]` the variable holding
    capturing group g — for duplicated group indices (loop unrolling) the
    occurrence executed last.
    """

    psst: Psst
    ast: ra.Regex
    node_var: dict[int, int]
    group_var: dict[int, int]
    alphabet: Alphabet

    @property
    def whole_var(self) -> int:
        return self.node_var[0]


def compile_regex(e: ra.Regex, alphabet: Alphabet | None = None) -> CompiledRegex:
    alphabet = alphabet or Alphabet.printable_ascii()
    ast = ra.desugar_loop(e)
    nodes = ra.subexpressions(ast)
    var_names = [f"x{i}" for i, _ in nodes]
    node_var = {i: i for i, _ in nodes}
    group_var: dict[int, int] = {}
    for i, n in nodes:
        if isinstance(n, ra.Group):
            group_var[n.index] = i

    b = _Builder(alphabet, len(nodes), var_names)
    counter = iter(range(len(nodes)))
    t = b.build(ast, counter)
    t.validate()
    return CompiledRegex(t, ast, node_var, group_var, alphabet)


class _Builder:
    def __init__(self, alphabet: Alphabet, n_vars: int, var_names: list[str]):
        self.alphabet = alphabet
        self.n_vars = n_vars
        self.var_names = var_names

    def fresh(self) -> Psst:
        t = Psst(self.alphabet, 0)
        t.n_vars = self.n_vars
        t.var_names = self.var_names
        return t

    def build(self, e: ra.Regex, counter) -> Psst:
        x = next(counter)
        if isinstance(e, ra.Empty):
            return self.empty(x)
        if isinstance(e, ra.Epsilon):
            return self.epsilon(x)
        if isinstance(e, ra.CharClass):
            return self.char_class(x, e)
        if isinstance(e, ra.Group):
            child = self.build(e.body, counter)
            return self.group(child, x, x + 1)
        if isinstance(e, ra.Union):
            left = self.build(e.left, counter)
            right = self.build(e.right, counter)
            return self.union(x, left, right)
        if isinstance(e, ra.Concat):
            left = self.build(e.left, counter)
            right = self.build(e.right, counter)
            return self.concat(x, left, right)
        if isinstance(e, ra.Optional):
            child = self.build(e.body, counter)
            return self.optional(x, child, e.lazy)
        if isinstance(e, ra.Star):
            child = self.build(e.body, counter)
            return self.star(x, child, e.lazy)
        if isinstance(e, ra.Plus):
            child = self.build(e.body, counter)
            return self.plus(x, child, e.lazy)
        if isinstance(e, ra.Loop):
            if e.low != 1 or e.high < 2:
                raise ValueError(f"loop not normalized: {e!r}")
            child = self.build(e.body, counter)
            return self.loop(x, child, e.high, e.lazy)
        raise TypeError(f"unknown node {e!r}")

    # --- leaf machines ----------------------------------------------------

    def empty(self, x: int) -> Psst:
        t = self.fresh()
        t.add_state(f"∅{x}.q0")
        return t

    def epsilon(self, x: int) -> Psst:
        t = self.fresh()
        q0 = t.add_state(f"ε{x}.q0")
        f = t.add_state(f"ε{x}.f")
        t.eps(q0, f, {x: ()})
        t.f1 = {f}
        return t

    def char_class(self, x: int, e: ra.CharClass) -> Psst:
        t = self.fresh()
        q0 = t.add_state(f"c{x}.q0")
        q1 = t.add_state(f"c{x}.q1")
        f = t.add_state(f"c{x}.f")
        t.eps(q0, q1, {x: ()})
        if e.chars:
            t.arc(q1, e.chars, f, {x: (x, CURRENT)})
        t.f2 = {f}
        return t

    # --- combinators ------------------------------------------------------

    def group(self, child: Psst, x: int, x_child: int) -> Psst:
        """The group's variable shadows the child's, update for update —
        including the child's null-resets, so a group inside a loop is
        cleared exactly when its body's variables are."""
        t = self.fresh()
        m = t.import_states(child)
        t.q0 = m[child.q0]
        t.f1 = {m[q] for q in child.f1}
        t.f2 = {m[q] for q in child.f2}
        for arcs in _all_arcs(t):
            for a in arcs:
                if x_child in a.assign:
                    a.assign[x] = tuple(
                        x if it == x_child else it for it in a.assign[x_child]
                    )
        return t

    def union(self, x: int, left: Psst, right: Psst) -> Psst:
        t = self.fresh()
        ml = t.import_states(left)
        mr = t.import_states(right)
        q0 = t.add_state(f"u{x}.q0")
        t.q0 = q0
        t.eps(q0, ml[left.q0], {x: ()}, tier=1)
        t.eps(q0, mr[right.q0], {x: ()}, tier=2)
        _append_on_letters(t, x)
        t.f1 = {ml[q] for q in left.f1} | {mr[q] for q in right.f1}
        t.f2 = {ml[q] for q in left.f2} | {mr[q] for q in right.f2}
        return t

    def concat(self, x: int, left: Psst, right: Psst) -> Psst:
        c = compose_concat(left, right)
        t = self.fresh()
        m = t.import_states(c)
        q0 = t.add_state(f"k{x}.q0")
        t.q0 = q0
        t.eps(q0, m[c.q0], {x: ()})
        _append_on_letters(t, x)
        t.f1 = {m[q] for q in c.f1}
        t.f2 = {m[q] for q in c.f2}
        return t

    def optional(self, x: int, child: Psst, lazy: bool) -> Psst:
        t = self.fresh()
        m = t.import_states(child)
        q0 = t.add_state(f"o{x}.q0")
        f_eps = t.add_state(f"o{x}.fε")
        t.q0 = q0
        enter = (m[child.q0], {x: ()})
        skip = (f_eps, {x: ()})
        for target, assign in ([skip, enter] if lazy else [enter, skip]):
            t.eps(q0, target, assign, tier=1)
        _append_on_letters(t, x)
        # the child's empty-match finals are dropped: an ε-match of the
        # body loses to the skip branch in every context
        t.f1 = {f_eps}
        t.f2 = {m[q] for q in child.f2}
        return t

    def star(self, x: int, child: Psst, lazy: bool) -> Psst:
        t = self.fresh()
        m = t.import_states(child)
        q0 = t.add_state(f"s{x}.q0")
        f_one = t.add_state(f"s{x}.f1")
        f_two = t.add_state(f"s{x}.f2")
        t.q0 = q0
        start = (m[child.q0], {x: ()})
        stop = (f_one, {x: ()})
        for target, assign in ([stop, start] if lazy else [start, stop]):
            t.eps(q0, target, assign, tier=1)
        reset = {v: (BOTTOM,) for v in _assigned_vars(child)}
        for f in child.f1:
            # an empty body iteration may only try again, never exit
            t.eps(m[f], m[child.q0], reset, tier=1)
        for f in child.f2:
            again = (m[child.q0], reset)
            leave = (f_two, {})
            for target, assign in ([leave, again] if lazy else [again, leave]):
                t.eps(m[f], target, assign, tier=1)
        _append_on_letters(t, x)
        t.f1 = {f_one}
        t.f2 = {f_two}
        return t

    def plus(self, x: int, child: Psst, lazy: bool) -> Psst:
        """`e+` as one mandatory copy of the body followed by a variable-
        projected `e*` over the *same* variables.

        Because the two parts share the body's variables, the usual seam
        reset is suppressed; instead the star's iteration-entry edge clears
        the body variables.  Declining any further iteration then keeps the
        mandatory copy's captures (the behaviour real engines have), while
        each started iteration still begins with cleared captures.
        """
        rest = self.star(x, child, lazy)
        project_out(rest, x)
        reset = {v: (BOTTOM,) for v in _assigned_vars(child)}
        for a in rest.eps1[rest.q0]:
            if a.target not in rest.f1:
                a.assign.update(reset)
        c = compose_concat(child, rest, seam_assign={})
        t = self.fresh()
        m = t.import_states(c)
        q0 = t.add_state(f"p{x}.q0")
        t.q0 = q0
        t.eps(q0, m[c.q0], {x: ()})
        _append_on_letters(t, x)
        t.f1 = {m[q] for q in c.f1}
        t.f2 = {m[q] for q in c.f2}
        return t

    def loop(self, x: int, child: Psst, high: int, lazy: bool) -> Psst:
        """`e{1,high}` as chained copies sharing the body's variables.

        Every copy's non-empty finals offer "one more iteration" (into the
        next copy, with the body reset) against "stop here" (into a fresh
        final, captures kept); greediness orders the two.  Only the first
        copy may finish on an empty body match — later copies are optional
        iterations, where empty matches are cut off as dead ends.
        """
        t = self.fresh()
        maps = [t.import_states(child) for _ in range(high)]
        q0 = t.add_state(f"l{x}.q0")
        f_eps = t.add_state(f"l{x}.fε")
        f_end = t.add_state(f"l{x}.f")
        t.q0 = q0
        t.eps(q0, maps[0][child.q0], {x: ()})
        reset = {v: (BOTTOM,) for v in _assigned_vars(child)}
        for i in range(high):
            for f in child.f1:
                if i > 0:
                    continue  # dead end: empty optional iteration
                again = (maps[1][child.q0], reset)
                stay = (f_eps, {})
                for target, assign in ([stay, again] if lazy else [again, stay]):
                    t.eps(maps[i][f], target, assign, tier=1)
            for f in child.f2:
                options = []
                if i + 1 < high:
                    options.append((maps[i + 1][child.q0], reset))
                options.append((f_end, {}))
                if lazy:
                    options.reverse()
                for target, assign in options:
                    t.eps(maps[i][f], target, assign, tier=1)
        _append_on_letters(t, x)
        t.f1 = {f_eps} if child.f1 else set()
        t.f2 = {f_end}
        return t


def _all_arcs(t: Psst):
    for q in range(t.n_states):
        yield t.eps1[q]
        yield t.delta[q]
        yield t.eps2[q]


def _append_on_letters(t: Psst, x: int):
    for q in range(t.n_states):
        for a in t.delta[q]:
            assert x not in a.assign
            a.assign[x] = (x, CURRENT)


def _assigned_vars(t: Psst) -> set[int]:
    vs: set[int] = set()
    for arcs in _all_arcs(t):
        for a in arcs:
            vs.update(a.assign)
    return vs


def project_out(t: Psst, x: int):
    """Remove variable `x` from a machine (in place).  Sound only when no
    other variable's update mentions `x`, which the compiler guarantees:
    each variable's right-hand sides only ever reference itself."""
    for arcs in _all_arcs(t):
        for a in arcs:
            a.assign.pop(x, None)
            for y, word in a.assign.items():
                assert x not in [it for it in word if isinstance(it, int)]
