"""Pre-images of regular languages under prioritized transducers.

``psst_preimage(t, a)`` builds a finite automaton over ``t``'s alphabet
accepting exactly the words ``w`` on which ``t``'s (unique,
highest-priority) accepting run produces a non-null output accepted by
``a``.  Together with :func:`concat_preimage` and :func:`concat_image`
this is the step that lets a solver push regular membership constraints
through string equations.

A naive construction — pair ``t``'s state with an abstraction of the
variable contents and accept whenever the simulated run lands in ``a`` —
is wrong: it accepts ``w`` whenever *some* run of ``t``, not necessarily
the one of highest priority, produces an output in ``a``'s language,
which over-approximates the pre-image.  Soundness requires certifying
along the simulated run that every strictly higher-priority alternative
fails to accept.  Each explored configuration therefore carries two
components besides the transducer state ``q`` and the content
abstraction ``rho``:

* ``lam`` — the ε-edges taken since the last consumed letter.  A run
  never repeats such an edge within one ε-block, so these edges are
  spent both for the simulated run and for any competitor that shares
  the path up to the point where it diverges.
* ``above`` — transducer states reachable along runs of strictly higher
  priority than the simulated one.  The set is stepped under letters and
  closed under ε-moves exactly as those competitors could move, and
  acceptance demands every state in it be output-free; otherwise one of
  them would accept first and the actual output of ``t`` would be
  theirs, not ours.

Acceptance ranks below every pending ε-option, so stopping is also
pre-empted by any output state still ε-reachable from the stopping state
through unspent edges (a run that extends ours by trailing ε-steps
outranks ours).  One blind spot is inherited by design: a state carrying
both an output word and a priority-2 ε-edge would conflate "a competitor
waits here for the next letter" (rank above that edge) with "a
competitor stops here" (rank below it); no transducer built by this
package puts an output on a state with priority-2 edges, and the
constructions assume that shape.

Variable contents are abstracted by how ``a`` can traverse them.  In the
general construction an entry is the full transition relation over
``a``'s states, stored as one successor bitmask per state.  In the
copyless variant (:func:`psst_preimage_copyless`) an entry is a single
guessed (entry, exit) state pair: copylessness means one step never
duplicates a variable's content, so each piece of content is traversed
at most once inside the final output and one guessed path through it
suffices.  Content that ``a`` cannot traverse at all is collapsed to a
dead marker rather than pruned, since the content may still be discarded
later without ever reaching the output.  A null (unassigned) variable is
tracked separately from the empty string: an output word consisting of
exactly one null variable denotes the null result, which no automaton
accepts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .charset import partition_charsets
from .fa import Fa, materialize, trim
from .psst import BOTTOM, CURRENT, Psst, check_copyless

__all__ = [
    "PreimageState",
    "psst_preimage",
    "psst_preimage_copyless",
    "concat_preimage",
    "concat_image",
]


# --- relations over the target automaton's states ---------------------------
#
# A relation is a tuple with one int per automaton state: bit ``q`` of
# row ``p`` is set when the automaton can go from ``p`` to ``q`` reading
# the abstracted content.


def _rel_identity(n: int) -> tuple:
    return tuple(1 << p for p in range(n))


def _rel_compose(r1: tuple, r2: tuple) -> tuple:
    rows = []
    for mask in r1:
        acc = 0
        while mask:
            low = mask & -mask
            mask ^= low
            acc |= r2[low.bit_length() - 1]
        rows.append(acc)
    return tuple(rows)


def _bit_indices(mask: int):
    while mask:
        low = mask & -mask
        mask ^= low
        yield low.bit_length() - 1


class _Dead:
    """Copyless entry for content the target automaton cannot traverse."""

    __slots__ = ()

    def __repr__(self):
        return "<dead>"


_DEAD = _Dead()


@dataclass(frozen=True)
class PreimageState:
    """One configuration of the pre-image automaton.

    ``q`` is the transducer state; ``rho`` gives each variable's content
    abstraction (``None`` while null); ``lam`` is the set of spent
    ε-edges as (source, target) pairs; ``above`` is the set of
    transducer states reachable along strictly higher-priority runs.
    """

    q: int
    rho: tuple
    lam: frozenset
    above: frozenset


# --- helpers over the inputs ------------------------------------------------


def _eps_eliminate(a: Fa):
    """Letter arcs and finals of an ε-free automaton equivalent to ``a``."""
    arcs = []
    finals = set()
    for p in range(a.n_states):
        seen = {p}
        todo = [p]
        while todo:
            r = todo.pop()
            for tgt in a.eps[r]:
                if tgt not in seen:
                    seen.add(tgt)
                    todo.append(tgt)
        row = []
        for r in seen:
            row.extend(a.arcs[r])
            if r in a.finals:
                finals.add(p)
        arcs.append(row)
    return arcs, finals


def _live_vars(t: Psst) -> frozenset:
    """Variables whose content can still reach an output word.

    Dead variables are kept null in ``rho`` so bookkeeping done for their
    benefit cannot split otherwise-equal configurations.
    """
    live = {it for word in t.out.values() for it in word if isinstance(it, int)}
    assigns = []
    for q in range(t.n_states):
        for arc in t.delta[q]:
            assigns.append(arc.assign)
        for e in t.eps1[q]:
            assigns.append(e.assign)
        for e in t.eps2[q]:
            assigns.append(e.assign)
    changed = True
    while changed:
        changed = False
        for assign in assigns:
            for x, word in assign.items():
                if x not in live:
                    continue
                for it in word:
                    if isinstance(it, int) and it not in live:
                        live.add(it)
                        changed = True
    return frozenset(live)


# --- the construction -------------------------------------------------------


class _PreimageAuto:
    """Lazy pre-image automaton, explored through the ``fa`` protocol."""

    def __init__(self, t: Psst, a, copyless: bool):
        t.validate()
        if not isinstance(a, Fa):
            a = materialize(a, t.alphabet)
        self.t = t
        self.copyless = copyless
        self.n = a.n_states
        self.ident = _rel_identity(self.n)
        self.a_arcs, a_finals = _eps_eliminate(a)
        self.a_q0 = a.q0
        self.final_mask = 0
        for f in a_finals:
            self.final_mask |= 1 << f
        self.live = _live_vars(t)
        labels = [arc.label for q in range(t.n_states) for arc in t.delta[q]]
        labels += [lab for row in self.a_arcs for lab, _ in row]
        self._rel_cache: dict[str, tuple] = {}
        self._succ_cache: dict[PreimageState, tuple] = {}
        # Disjoint label blocks refining both machines' arc labels: within
        # a block the applicable transducer arcs and the automaton letter
        # relation are constant, so one representative letter decides both.
        self.blocks = []
        for blk in partition_charsets(labels):
            rep = blk.min_char()
            self.blocks.append((blk, rep, self._letter_rel(rep)))

    def _letter_rel(self, c: str) -> tuple:
        rel = self._rel_cache.get(c)
        if rel is None:
            rows = []
            for p in range(self.n):
                acc = 0
                for lab, tgt in self.a_arcs[p]:
                    if c in lab:
                        acc |= 1 << tgt
                rows.append(acc)
            rel = self._rel_cache[c] = tuple(rows)
        return rel

    # -- ε-reachability inside the transducer ------------------------------

    def _eps_targets(self, q: int):
        for e in self.t.eps1[q]:
            yield e.target
        for e in self.t.eps2[q]:
            yield e.target

    def _closure(self, seed, lam=None) -> frozenset:
        """States ε-reachable (either tier) from ``seed``, not crossing
        edges in ``lam``; the seed itself is included."""
        out = set(seed)
        todo = list(out)
        while todo:
            p = todo.pop()
            for tgt in self._eps_targets(p):
                if lam is not None and (p, tgt) in lam:
                    continue
                if tgt not in out:
                    out.add(tgt)
                    todo.append(tgt)
        return frozenset(out)

    def _letter_step(self, states, rep: str) -> set:
        out = set()
        for p in states:
            for arc in self.t.delta[p]:
                if rep in arc.label:
                    out.add(arc.target)
        return out

    # -- content abstraction updates ---------------------------------------

    def _word_rel(self, word, rho, cur_rel) -> tuple:
        rel = self.ident
        for it in word:
            if it is BOTTOM:
                continue
            if it is CURRENT:
                rel = _rel_compose(rel, cur_rel)
            elif isinstance(it, int):
                entry = rho[it]
                if entry is not None:  # null content reads as ε
                    rel = _rel_compose(rel, entry)
            else:
                rel = _rel_compose(rel, self._letter_rel(it))
        return rel

    def _update_general(self, assign, rho, cur_rel):
        new = list(rho)
        for x, word in assign.items():
            if x not in self.live:
                continue
            if len(word) == 1:
                it = word[0]
                # A one-item word preserves nullity: copy the entry (or
                # the null marker) instead of collapsing it to ε.
                if it is BOTTOM:
                    new[x] = None
                elif isinstance(it, int):
                    new[x] = rho[it]
                elif it is CURRENT:
                    new[x] = cur_rel
                else:
                    new[x] = self._letter_rel(it)
            else:
                new[x] = self._word_rel(word, rho, cur_rel)
        return (tuple(new),)

    def _pair_as_rel(self, pair) -> tuple:
        rows = [0] * self.n
        rows[pair[0]] = 1 << pair[1]
        return tuple(rows)

    def _pair_options(self, word, rho, cur_rel):
        """Candidate copyless entries for one assignment word."""
        if len(word) == 1:
            it = word[0]
            if it is BOTTOM:
                return (None,)
            if isinstance(it, int):
                return (rho[it],)  # moves the entry, whatever its kind
        rel = None
        for it in word:
            if it is BOTTOM:
                continue
            if isinstance(it, int):
                entry = rho[it]
                if entry is None or entry == ():
                    continue  # null / empty content reads as ε
                if entry is _DEAD:
                    return (_DEAD,)
                step = self._pair_as_rel(entry)
            elif it is CURRENT:
                step = cur_rel
            else:
                step = self._letter_rel(it)
            rel = step if rel is None else _rel_compose(rel, step)
        if rel is None:
            return ((),)  # every piece was empty
        opts = tuple(
            (p, q) for p in range(self.n) for q in _bit_indices(rel[p])
        )
        return opts if opts else (_DEAD,)

    def _updates(self, assign, rho, cur_rel):
        """All abstractions reachable by one transition's assignment."""
        if not assign:
            return (rho,)
        if not self.copyless:
            return self._update_general(assign, rho, cur_rel)
        keys = []
        choices = []
        for x, word in assign.items():
            if x not in self.live:
                continue
            keys.append(x)
            choices.append(self._pair_options(word, rho, cur_rel))
        if not keys:
            return (rho,)
        out = []
        for combo in itertools.product(*choices):
            new = list(rho)
            for x, entry in zip(keys, combo):
                new[x] = entry
            out.append(tuple(new))
        return out

    # -- the automaton protocol --------------------------------------------

    @property
    def initial(self) -> PreimageState:
        return PreimageState(
            self.t.q0, (None,) * self.t.n_vars, frozenset(), frozenset()
        )

    def successors(self, s: PreimageState):
        # Product exploration and witness search revisit states many
        # times; the expansion below is pure, so cache it.
        out = self._succ_cache.get(s)
        if out is None:
            out = self._succ_cache[s] = tuple(self._successors(s))
        return out

    def _successors(self, s: PreimageState):
        t = self.t
        q, rho, lam, above = s.q, s.rho, s.lam, s.above

        # Tier-1 ε-options rank above letters.  Diverging at the i-th
        # edge concedes every unspent earlier edge — and whatever those
        # edges can go on to reach without re-crossing ``lam`` — to
        # higher-priority competitors.
        prior: list[int] = []
        for e in t.eps1[q]:
            if (q, e.target) in lam:
                continue
            s2 = above | self._closure(prior, lam)
            lam2 = lam | {(q, e.target)}
            for rho2 in self._updates(e.assign, rho, None):
                yield None, PreimageState(e.target, rho2, lam2, s2)
            prior.append(e.target)

        # Letter options reset ``lam``.  Everything ranked above them —
        # earlier competitors plus the whole unspent tier-1 ε-cone — must
        # consume the same letter to stay ahead, after which all spent
        # edges are live again, so the new set closes without restriction.
        p1_cone = self._closure(
            [e.target for e in t.eps1[q] if (q, e.target) not in lam], lam
        )
        for blk, rep, blk_rel in self.blocks:
            arcs = [arc for arc in t.delta[q] if rep in arc.label]
            if not arcs:
                continue
            stepped = self._letter_step(above | p1_cone, rep)
            sibs: set[int] = set()
            for arc in arcs:
                s2 = self._closure(stepped | sibs)
                for rho2 in self._updates(arc.assign, rho, blk_rel):
                    yield blk, PreimageState(arc.target, rho2, frozenset(), s2)
                sibs.add(arc.target)

        # Tier-2 ε-options rank below letters: the current state itself
        # joins the higher-priority set (a competitor may idle here and
        # win by consuming the next letter), along with every unspent
        # tier-1 target and every earlier unspent tier-2 target.
        p1_unspent = [
            e.target for e in t.eps1[q] if (q, e.target) not in lam
        ]
        prior2: list[int] = []
        for e in t.eps2[q]:
            if (q, e.target) in lam:
                continue
            s2 = above | {q} | self._closure(p1_unspent + prior2, lam)
            lam2 = lam | {(q, e.target)}
            for rho2 in self._updates(e.assign, rho, None):
                yield None, PreimageState(e.target, rho2, lam2, s2)
            prior2.append(e.target)

    def is_final(self, s: PreimageState) -> bool:
        t = self.t
        word = t.out.get(s.q)
        if word is None:
            return False
        # A higher-priority run resting on any output state would be the
        # actual run of the transducer, so the simulated stop loses.
        for p in s.above:
            if p in t.out:
                return False
        # Stopping is the lowest-ranked option: an output state still
        # ε-reachable through unspent edges pre-empts it as well.
        succ = [
            tgt for tgt in self._eps_targets(s.q) if (s.q, tgt) not in s.lam
        ]
        for p in self._closure(succ, s.lam):
            if p in t.out:
                return False
        return self._out_hits(word, s.rho)

    def _out_hits(self, word, rho) -> bool:
        if len(word) == 1 and isinstance(word[0], int) and rho[word[0]] is None:
            return False  # null output: no automaton accepts it
        rel = self.ident
        for it in word:
            if isinstance(it, int):
                entry = rho[it]
                if entry is None:
                    continue  # null reads as ε inside a longer word
                if self.copyless:
                    if entry == ():
                        continue
                    if entry is _DEAD:
                        return False
                    entry = self._pair_as_rel(entry)
                rel = _rel_compose(rel, entry)
            else:
                rel = _rel_compose(rel, self._letter_rel(it))
        return bool(rel[self.a_q0] & self.final_mask)


def psst_preimage(t: Psst, a, spend=None) -> Fa:
    """Automaton for the words whose transducer output lands in ``a``.

    Membership means: ``t``'s run on the word accepts, its output is not
    null, and ``a`` accepts the output.  ``a`` may be a concrete
    :class:`~strsolver.fa.Fa` or any object speaking the same automaton
    protocol (it is materialized over ``t``'s alphabet first).
    ``spend`` is forwarded to :func:`~strsolver.fa.materialize`.
    """
    return trim(
        materialize(_PreimageAuto(t, a, copyless=False), t.alphabet, spend)
    )


def psst_preimage_copyless(t: Psst, a, spend=None) -> Fa:
    """Pre-image tracking one guessed state pair per variable.

    Sound only for copyless transducers — when one step can duplicate a
    variable, the two copies would need independent traversal paths and
    a single guess under-approximates — so a transducer rejected by
    :func:`~strsolver.psst.check_copyless` raises :class:`ValueError`.
    """
    problems = check_copyless(t)
    if problems:
        raise ValueError("transducer is not copyless: " + "; ".join(problems))
    return trim(
        materialize(_PreimageAuto(t, a, copyless=True), t.alphabet, spend)
    )


# --- concatenation ----------------------------------------------------------


def _copy_fa(a: Fa) -> Fa:
    b = Fa(a.alphabet)
    for _ in range(a.n_states):
        b.add_state()
    b.q0 = a.q0
    b.finals = set(a.finals)
    for q in range(a.n_states):
        b.arcs[q] = list(a.arcs[q])
        b.eps[q] = list(a.eps[q])
    return b


def concat_preimage(a: Fa) -> list[tuple[Fa, Fa]]:
    """Splittings of ``a``'s language across a concatenation.

    Returns one pair per state ``q``: the words that can reach ``q``
    from the start, and the words that can complete from ``q`` to a
    final state.  Any ``u·v`` in the language is covered by the state an
    accepting path visits at the boundary, and conversely every
    concatenation from a pair stays inside the language — so
    ``x = y·z ∧ x ∈ L(a)`` holds exactly when some pair accepts ``y``
    and ``z`` respectively.
    """
    pairs = []
    for q in range(a.n_states):
        left = _copy_fa(a)
        left.finals = {q}
        right = _copy_fa(a)
        right.q0 = q
        pairs.append((left, right))
    return pairs


def concat_image(b: Fa, c: Fa) -> Fa:
    """Automaton for the concatenation ``L(b)·L(c)``."""
    assert b.alphabet.charset == c.alphabet.charset, "alphabet mismatch"
    out = Fa(b.alphabet)
    for _ in range(b.n_states + c.n_states):
        out.add_state()
    shift = b.n_states
    for q in range(b.n_states):
        out.arcs[q] = list(b.arcs[q])
        out.eps[q] = list(b.eps[q])
    for q in range(c.n_states):
        out.arcs[shift + q] = [(lab, shift + tgt) for lab, tgt in c.arcs[q]]
        out.eps[shift + q] = [shift + tgt for tgt in c.eps[q]]
    out.q0 = b.q0
    for f in b.finals:
        out.add_eps(f, shift + c.q0)
    out.finals = {shift + f for f in c.finals}
    return out
