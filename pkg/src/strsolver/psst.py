"""Prioritized streaming string transducers.

A transducer owns a set of string variables and reads input left to right.
Each state carries three priority-ordered transition lists:

* ``eps1`` — ε-transitions ranked above letter consumption,
* ``delta`` — letter transitions, labelled by character sets,
* ``eps2`` — ε-transitions ranked below letter consumption.

Every transition updates the variables through an assignment: a map from
variable to a word over variables, characters, the current input letter
(:data:`CURRENT`), and the null marker (:data:`BOTTOM`).  Variables absent
from an assignment keep their value.

The transducer's value on an input is the output of its *accepting run*:
the depth-first search that tries transitions in priority order, never
repeats an ε-transition between two letter steps, and stops at the first
run consuming the whole input and ending where ``out`` is defined.  Runs
with trailing ε-steps outrank their own prefixes, so the search only
yields acceptance at a state after exhausting its extensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .charset import Alphabet, CharSet


class _Marker:
    __slots__ = ("_label",)

    def __init__(self, label: str):
        self._label = label

    def __repr__(self) -> str:
        return self._label


#: Null value / reset marker.  As an assignment right-hand side it sets the
#: variable to null; a null variable read inside a longer word contributes
#: the empty string, while an output word consisting of a single null
#: variable makes the whole output null.
BOTTOM = _Marker("⊥")

#: Stands for the input letter being consumed; only meaningful in
#: assignments of letter transitions.
CURRENT = _Marker("@")

Item = object  # int (variable) | str (single char) | BOTTOM | CURRENT
Assign = dict  # int -> tuple[Item, ...]


@dataclass
class LetterArc:
    label: CharSet
    target: int
    assign: Assign


@dataclass
class EpsArc:
    target: int
    assign: Assign


class Psst:
    """Mutable transducer; built by the compiler, then treated as frozen.

    ``out`` maps accepting states to output words.  Machines produced by
    regex compilation instead carry *split finals* ``(f1, f2)`` — states
    accepting the empty input versus non-empty inputs — and are given an
    output via :func:`to_output_psst` once fully assembled.
    """

    def __init__(self, alphabet: Alphabet, n_vars: int = 0):
        self.alphabet = alphabet
        self.n_vars = n_vars
        self.q0 = 0
        self.delta: list[list[LetterArc]] = []
        self.eps1: list[list[EpsArc]] = []
        self.eps2: list[list[EpsArc]] = []
        self.out: dict[int, tuple] = {}
        self.f1: set[int] = set()
        self.f2: set[int] = set()
        self.state_names: list[str] = []
        self.var_names: list[str] = [f"x{v}" for v in range(n_vars)]

    # --- construction -----------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def add_state(self, name: str = "") -> int:
        self.delta.append([])
        self.eps1.append([])
        self.eps2.append([])
        self.state_names.append(name or f"q{len(self.delta) - 1}")
        return len(self.delta) - 1

    def add_var(self, name: str = "") -> int:
        v = self.n_vars
        self.n_vars += 1
        self.var_names.append(name or f"x{v}")
        return v

    def arc(self, q: int, label: CharSet, target: int, assign: Assign | None = None):
        self.delta[q].append(LetterArc(label, target, dict(assign or {})))

    def eps(
        self,
        q: int,
        target: int,
        assign: Assign | None = None,
        *,
        tier: int = 1,
        front: bool = False,
    ):
        lst = self.eps1[q] if tier == 1 else self.eps2[q]
        arc = EpsArc(target, dict(assign or {}))
        lst.insert(0, arc) if front else lst.append(arc)

    def import_states(self, other: "Psst") -> list[int]:
        """Copy `other`'s states and transitions into self, sharing the
        variable space.  Returns the state renumbering map."""
        if other.n_vars > self.n_vars:
            raise ValueError("importing machine with unknown variables")
        m = [self.add_state(n) for n in other.state_names]
        for q in range(other.n_states):
            for a in other.delta[q]:
                self.delta[m[q]].append(LetterArc(a.label, m[a.target], dict(a.assign)))
            for a in other.eps1[q]:
                self.eps1[m[q]].append(EpsArc(m[a.target], dict(a.assign)))
            for a in other.eps2[q]:
                self.eps2[m[q]].append(EpsArc(m[a.target], dict(a.assign)))
        return m

    def eps_edge_count(self) -> int:
        return sum(len(p) for p in self.eps1) + sum(len(p) for p in self.eps2)

    def validate(self):
        """Structural sanity: indices in range, ε-targets distinct per
        state, labels within the alphabet."""
        n = self.n_states
        assert 0 <= self.q0 < n
        for q in range(n):
            seen = set()
            for arcs in (self.eps1[q], self.eps2[q]):
                for a in arcs:
                    assert 0 <= a.target < n
                    assert a.target not in seen, f"duplicate ε-edge {q}->{a.target}"
                    seen.add(a.target)
                    _check_assign(self, a.assign, letter=False)
            for a in self.delta[q]:
                assert 0 <= a.target < n
                assert a.label.is_subset(self.alphabet.charset)
                assert a.label
                _check_assign(self, a.assign, letter=True)
        for q, word in self.out.items():
            assert 0 <= q < n
            for it in word:
                assert it is not CURRENT and it is not BOTTOM
                if isinstance(it, int):
                    assert 0 <= it < self.n_vars
        for q in self.f1 | self.f2:
            assert 0 <= q < n
        assert not (self.f1 & self.f2), "split finals must be disjoint"

    # --- presentation -----------------------------------------------------

    def fmt_word(self, word: tuple) -> str:
        parts = []
        for it in word:
            if isinstance(it, int):
                parts.append(self.var_names[it])
            elif it is BOTTOM:
                parts.append("⊥")
            elif it is CURRENT:
                parts.append("@")
            else:
                parts.append(repr(it))
        return "·".join(parts) if parts else "ε"

    def fmt_assign(self, assign: Assign) -> str:
        if not assign:
            return ""
        return ", ".join(
            f"{self.var_names[x]}:={self.fmt_word(w)}" for x, w in sorted(assign.items())
        )

    def dump(self) -> str:
        lines = [f"initial {self.state_names[self.q0]}"]
        for q in range(self.n_states):
            for a in self.eps1[q]:
                lines.append(
                    f"{self.state_names[q]} --ε₁[{self.fmt_assign(a.assign)}]--> "
                    f"{self.state_names[a.target]}"
                )
            for a in self.delta[q]:
                lines.append(
                    f"{self.state_names[q]} --{a.label}[{self.fmt_assign(a.assign)}]--> "
                    f"{self.state_names[a.target]}"
                )
            for a in self.eps2[q]:
                lines.append(
                    f"{self.state_names[q]} --ε₂[{self.fmt_assign(a.assign)}]--> "
                    f"{self.state_names[a.target]}"
                )
        for q in sorted(self.out):
            lines.append(f"accept {self.state_names[q]} -> {self.fmt_word(self.out[q])}")
        if self.f1 or self.f2:
            lines.append(
                "finals F1={%s} F2={%s}"
                % (
                    ",".join(self.state_names[q] for q in sorted(self.f1)),
                    ",".join(self.state_names[q] for q in sorted(self.f2)),
                )
            )
        return "\n".join(lines)


def _check_assign(t: Psst, assign: Assign, *, letter: bool):
    for x, word in assign.items():
        assert 0 <= x < t.n_vars
        assert isinstance(word, tuple)
        for it in word:
            if isinstance(it, int):
                assert 0 <= it < t.n_vars
            elif it is CURRENT:
                assert letter, "@ outside a letter transition"
            elif it is not BOTTOM:
                assert isinstance(it, str) and len(it) == 1


def to_output_psst(t: Psst, word: tuple) -> Psst:
    """Give a split-final machine a concrete output word at every final."""
    r = _shallow_copy(t)
    r.out = {q: tuple(word) for q in t.f1 | t.f2}
    return r


def _shallow_copy(t: Psst) -> Psst:
    r = Psst(t.alphabet, 0)
    r.n_vars = t.n_vars
    r.var_names = list(t.var_names)
    m = r.import_states(t)
    assert m == list(range(t.n_states))
    r.q0 = t.q0
    r.out = dict(t.out)
    r.f1 = set(t.f1)
    r.f2 = set(t.f2)
    return r


# --- run semantics ---------------------------------------------------------


@dataclass(frozen=True)
class Step:
    """One transition taken by a run.

    `sym` is the consumed letter or None for ε.  `tier` records the
    priority channel (1: high ε, 0: letter, 2: low ε) and `index` the
    position inside that channel's candidate list — together they let two
    runs be compared without re-deriving the machine's ordering.
    """

    source: int
    sym: Optional[str]
    target: int
    tier: int
    index: int


@dataclass
class RunResult:
    accepted: bool
    output: Optional[str]  # None means the null output ⊥
    trace: tuple = ()

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.accepted


def eval_word(word: tuple, val: list, cur: Optional[str]) -> Optional[str]:
    """Value of an assignment/output word under valuation `val`.

    A word that is exactly one null item (a null variable, or the literal
    null marker) evaluates to null; otherwise null pieces read as ε.
    """
    if len(word) == 1:
        it = word[0]
        if it is BOTTOM:
            return None
        if isinstance(it, int) and val[it] is None:
            return None
    parts = []
    for it in word:
        if isinstance(it, int):
            v = val[it]
            if v is not None:
                parts.append(v)
        elif it is CURRENT:
            parts.append(cur)
        elif it is not BOTTOM:
            parts.append(it)
    return "".join(parts)


def _apply(assign: Assign, val: list, cur: Optional[str]) -> list:
    """Apply an assignment simultaneously; returns an undo log."""
    new = {x: eval_word(w, val, cur) for x, w in assign.items()}
    undo = []
    for x, v in new.items():
        undo.append((x, val[x]))
        val[x] = v
    return undo


class _Frame:
    __slots__ = ("q", "pos", "lam", "options", "undo", "traced")

    def __init__(self, q, pos, lam, options, undo, traced):
        self.q = q
        self.pos = pos
        self.lam = lam
        self.options = options
        self.undo = undo
        self.traced = traced


def enumerate_runs(t: Psst, w: str) -> Iterator[RunResult]:
    """All accepting runs, highest priority first.

    Only the first is the transducer's value; the rest exist for testing
    the priority order itself.
    """
    if not t.out:
        raise ValueError("machine has no output function; use to_output_psst")
    val: list = [None] * t.n_vars
    trace: list[Step] = []

    def options(q, pos, lam):
        for i, a in enumerate(t.eps1[q]):
            if (q, a.target) not in lam:
                yield 1, i, a
        if pos < len(w):
            c = w[pos]
            for i, a in enumerate(t.delta[q]):
                if c in a.label:
                    yield 0, i, a
        for i, a in enumerate(t.eps2[q]):
            if (q, a.target) not in lam:
                yield 2, i, a
        if pos == len(w) and q in t.out:
            yield -1, 0, None

    stack = [_Frame(t.q0, 0, frozenset(), options(t.q0, 0, frozenset()), [], False)]
    while stack:
        fr = stack[-1]
        step = next(fr.options, None)
        if step is None:
            for x, v in reversed(fr.undo):
                val[x] = v
            if fr.traced:
                trace.pop()
            stack.pop()
            continue
        tier, idx, arc = step
        if tier == -1:
            yield RunResult(True, eval_word(t.out[fr.q], val, None), tuple(trace))
            continue
        if tier == 0:
            cur = w[fr.pos]
            pos2, lam2 = fr.pos + 1, frozenset()
        else:
            cur = None
            pos2, lam2 = fr.pos, fr.lam | {(fr.q, arc.target)}
        undo = _apply(arc.assign, val, cur)
        trace.append(Step(fr.q, cur, arc.target, tier, idx))
        stack.append(
            _Frame(arc.target, pos2, lam2, options(arc.target, pos2, lam2), undo, True)
        )


def run(t: Psst, w: str) -> RunResult:
    """The transducer's value on `w`: its highest-priority accepting run."""
    for r in enumerate_runs(t, w):
        return r
    return RunResult(False, None, ())


def run_length_bound(t: Psst, w: str) -> int:
    """Static bound on accepting-run length: letters plus, per ε-segment,
    each ε-edge at most once."""
    return len(w) + (len(w) + 1) * t.eps_edge_count()


def compare_steps(t: Psst, a: Step, b: Step) -> int:
    """Priority order of two different transitions from one configuration:
    negative when `a` outranks `b`.

    Within a channel the list position decides; across channels, high-ε
    beats letters beats low-ε.
    """
    rank = {1: 0, 0: 1, 2: 2}
    if a.tier != b.tier:
        return rank[a.tier] - rank[b.tier]
    return a.index - b.index


def compare_runs(t: Psst, ra: tuple, rb: tuple) -> int:
    """Full run comparison: negative when `ra` has higher priority.

    A run extending another by trailing ε-steps outranks it; otherwise the
    first point of divergence decides via :func:`compare_steps`.
    """
    for sa, sb in zip(ra, rb):
        if (sa.source, sa.sym, sa.target, sa.tier, sa.index) != (
            sb.source,
            sb.sym,
            sb.target,
            sb.tier,
            sb.index,
        ):
            return compare_steps(t, sa, sb)
    if len(ra) == len(rb):
        return 0
    # One run is a prefix of the other; the longer continuation consists of
    # ε-steps and takes priority.
    return -1 if len(ra) > len(rb) else 1


def check_copyless(t: Psst) -> list[str]:
    """Violations of the copyless restriction: across one transition's
    whole assignment (implicit identities included) every variable may
    appear at most once on the right-hand sides."""
    bad = []

    def look(q, kind, target, assign):
        counts: dict[int, int] = {}
        for x in range(t.n_vars):
            for it in assign.get(x, (x,)):
                if isinstance(it, int):
                    counts[it] = counts.get(it, 0) + 1
        for x, c in counts.items():
            if c > 1:
                bad.append(
                    f"{t.state_names[q]} -{kind}-> {t.state_names[target]}: "
                    f"{t.var_names[x]} copied {c} times"
                )

    for q in range(t.n_states):
        for a in t.eps1[q]:
            look(q, "ε₁", a.target, a.assign)
        for a in t.delta[q]:
            look(q, str(a.label), a.target, a.assign)
        for a in t.eps2[q]:
            look(q, "ε₂", a.target, a.assign)
    return bad


# --- concatenation ---------------------------------------------------------


def compose_concat(t1: Psst, t2: Psst, seam_assign: dict | None = None) -> Psst:
    """Sequential composition of two split-final machines.

    The seam is an ε-edge from each final of `t1` into `t2`'s initial
    state, resetting every `t2`-variable to null.  Where both machines can
    accept the empty input, a second copy of `t2` keeps the empty/non-empty
    final split exact; when one side cannot, a single copy suffices.

    `seam_assign` overrides the default seam reset.  A caller whose parts
    deliberately share variables (a quantifier unrolled into copies) must
    pass `{}` and attach resets to the edges that start a new iteration
    instead: a reset on the seam itself would also fire on the path that
    declines further iterations and destroy the captures of the last
    completed one.
    """
    if t1.n_vars != t2.n_vars or t1.var_names != t2.var_names:
        raise ValueError("concatenation requires a shared variable space")
    if seam_assign is None:
        reset = {x: (BOTTOM,) for x in _assigned_vars(t2)}
    else:
        reset = seam_assign
    r = Psst(t1.alphabet, t1.n_vars)
    r.var_names = list(t1.var_names)
    m1 = r.import_states(t1)
    r.q0 = m1[t1.q0]

    if not t1.f1:
        # t1 never accepts ε: the result never accepts ε.
        m2 = r.import_states(t2)
        for f in t1.f2:
            r.eps(m1[f], m2[t2.q0], reset)
        r.f1 = set()
        r.f2 = {m2[q] for q in t2.f1 | t2.f2}
    elif not t2.f1:
        # t2 never accepts ε: every completed run is non-empty overall
        # whenever t1's part was, and t2's own part is always non-empty.
        m2 = r.import_states(t2)
        for f in t1.f1 | t1.f2:
            r.eps(m1[f], m2[t2.q0], reset)
        r.f1 = set()
        r.f2 = {m2[q] for q in t2.f2}
    else:
        m2 = r.import_states(t2)
        m2p = r.import_states(t2)
        for f in t1.f1:
            r.eps(m1[f], m2[t2.q0], reset)
        for f in t1.f2:
            r.eps(m1[f], m2p[t2.q0], reset)
        r.f1 = {m2[q] for q in t2.f1}
        r.f2 = (
            {m2[q] for q in t2.f2}
            | {m2p[q] for q in t2.f1}
            | {m2p[q] for q in t2.f2}
        )
    return r


def _assigned_vars(t: Psst) -> set[int]:
    """Variables the machine ever writes — its own working set."""
    vs: set[int] = set()
    for q in range(t.n_states):
        for a in t.eps1[q]:
            vs.update(a.assign)
        for a in t.delta[q]:
            vs.update(a.assign)
        for a in t.eps2[q]:
            vs.update(a.assign)
    return vs


def prune_dead_vars(t: Psst) -> Psst:
    """Copy of ``t`` without variables that cannot influence any output.

    A variable is *live* when an output word mentions it, or when the
    right-hand side of an assignment to a live variable mentions it
    (iterated to a fixpoint — a flow-insensitive over-approximation, so
    only provably inert variables are dropped).  Assignments to dead
    variables are removed and the remaining variables renumbered densely.

    Acceptance is untouched and live variables see exactly the same update
    words, so the input/output relation is preserved.  The payoff is in
    pre-image constructions, whose state spaces grow with the number of
    tracked variables: regex-compiled machines carry one variable per
    subexpression, and after a replacement pattern is applied only the
    referenced groups and the result accumulator remain live.
    """
    live: set[int] = set()
    for word in t.out.values():
        live.update(it for it in word if isinstance(it, int))
    arcs = [a for q in range(t.n_states)
            for a in (*t.eps1[q], *t.delta[q], *t.eps2[q])]
    changed = True
    while changed:
        changed = False
        for a in arcs:
            for x, word in a.assign.items():
                if x not in live:
                    continue
                for it in word:
                    if isinstance(it, int) and it not in live:
                        live.add(it)
                        changed = True
    order = sorted(live)
    remap = {x: i for i, x in enumerate(order)}

    def reword(word: tuple) -> tuple:
        return tuple(remap[it] if isinstance(it, int) else it for it in word)

    r = _shallow_copy(t)
    r.n_vars = len(order)
    r.var_names = [t.var_names[x] for x in order]
    for q in range(r.n_states):
        for a in (*r.eps1[q], *r.delta[q], *r.eps2[q]):
            a.assign = {remap[x]: reword(w) for x, w in a.assign.items()
                        if x in live}
    r.out = {q: reword(w) for q, w in t.out.items()}
    return r
