"""Nondeterministic finite automata with character-set labels.

Concrete automata (:class:`Fa`) store integer states; the language
algorithms (`accepts`, `witness`, `is_empty`, products) also work on any
object exposing the small duck-typed protocol

    initial          -> state
    successors(s)    -> iterable of (label, state)   # label None means ε
    is_final(s)      -> bool

so on-the-fly constructions (products, transducer pre-images) can be
explored without materializing their state space.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product

from .charset import Alphabet, CharSet, partition_charsets
from . import regex_ast as ra


class Fa:
    """ε-NFA over a fixed alphabet."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self.q0 = 0
        self.arcs: list[list[tuple[CharSet, int]]] = []
        self.eps: list[list[int]] = []
        self.finals: set[int] = set()

    @property
    def n_states(self) -> int:
        return len(self.arcs)

    def add_state(self) -> int:
        self.arcs.append([])
        self.eps.append([])
        return len(self.arcs) - 1

    def arc(self, q: int, label: CharSet, target: int):
        if label:
            self.arcs[q].append((label, target))

    def add_eps(self, q: int, target: int):
        self.eps[q].append(target)

    # protocol ------------------------------------------------------------

    @property
    def initial(self):
        return self.q0

    def successors(self, s):
        for t in self.eps[s]:
            yield None, t
        for label, t in self.arcs[s]:
            yield label, t

    def is_final(self, s) -> bool:
        return s in self.finals

    # conveniences --------------------------------------------------------

    def dot(self) -> str:
        lines = ["digraph fa {", "  rankdir=LR;", '  start [shape=point];']
        for q in range(self.n_states):
            shape = "doublecircle" if q in self.finals else "circle"
            lines.append(f'  q{q} [shape={shape}];')
        lines.append(f"  start -> q{self.q0};")
        for q in range(self.n_states):
            for t in self.eps[q]:
                lines.append(f'  q{q} -> q{t} [label="ε"];')
            for label, t in self.arcs[q]:
                lines.append(f'  q{q} -> q{t} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines)


# --- regex translation -----------------------------------------------------


def regex_to_fa(e: ra.Regex, alphabet: Alphabet | None = None) -> Fa:
    """Thompson-style translation; classical language semantics, so
    priorities, laziness, and groups are irrelevant."""
    alphabet = alphabet or Alphabet.printable_ascii()
    fa = Fa(alphabet)

    def build(n: ra.Regex) -> tuple[int, int]:
        start = fa.add_state()
        end = fa.add_state()
        if isinstance(n, ra.Empty):
            pass
        elif isinstance(n, ra.Epsilon):
            fa.add_eps(start, end)
        elif isinstance(n, ra.CharClass):
            fa.arc(start, n.chars, end)
        elif isinstance(n, ra.Union):
            for side in (n.left, n.right):
                s, t = build(side)
                fa.add_eps(start, s)
                fa.add_eps(t, end)
        elif isinstance(n, ra.Concat):
            s1, t1 = build(n.left)
            s2, t2 = build(n.right)
            fa.add_eps(start, s1)
            fa.add_eps(t1, s2)
            fa.add_eps(t2, end)
        elif isinstance(n, ra.Group):
            s, t = build(n.body)
            fa.add_eps(start, s)
            fa.add_eps(t, end)
        elif isinstance(n, ra.Optional):
            s, t = build(n.body)
            fa.add_eps(start, s)
            fa.add_eps(t, end)
            fa.add_eps(start, end)
        elif isinstance(n, ra.Star):
            s, t = build(n.body)
            fa.add_eps(start, s)
            fa.add_eps(t, s)
            fa.add_eps(t, end)
            fa.add_eps(start, end)
        elif isinstance(n, ra.Plus):
            s, t = build(n.body)
            fa.add_eps(start, s)
            fa.add_eps(t, s)
            fa.add_eps(t, end)
        elif isinstance(n, ra.Loop):
            # full expansion: low mandatory copies, then optional ones
            cur = start
            for _ in range(n.low):
                s2, t2 = build(n.body)
                fa.add_eps(cur, s2)
                cur = t2
            exits = [cur]
            for _ in range(n.high - n.low):
                s2, t2 = build(n.body)
                fa.add_eps(cur, s2)
                cur = t2
                exits.append(cur)
            for x in exits:
                fa.add_eps(x, end)
        else:  # pragma: no cover
            raise TypeError(f"unknown node {n!r}")
        return start, end

    s, t = build(e)
    fa.q0 = s
    fa.finals = {t}
    return fa


def fa_all(alphabet: Alphabet) -> Fa:
    """Automaton for Σ*."""
    fa = Fa(alphabet)
    q = fa.add_state()
    fa.arc(q, alphabet.charset, q)
    fa.finals = {q}
    return fa


def fa_word(alphabet: Alphabet, w: str) -> Fa:
    """Automaton for the single word `w`."""
    fa = Fa(alphabet)
    q = fa.add_state()
    for c in w:
        nxt = fa.add_state()
        fa.arc(q, CharSet.of(c), nxt)
        q = nxt
    fa.finals = {q}
    return fa


# --- generic language algorithms -------------------------------------------


def _closure(auto, states) -> frozenset:
    seen = set(states)
    todo = list(states)
    while todo:
        s = todo.pop()
        for label, t in auto.successors(s):
            if label is None and t not in seen:
                seen.add(t)
                todo.append(t)
    return frozenset(seen)


def _letter_blocks(auto, states) -> list[tuple[str, frozenset]]:
    """Outgoing behavior of a closed state set, split into disjoint label
    blocks; each block is represented by its smallest character."""
    labeled = []
    for s in states:
        for label, t in auto.successors(s):
            if label is not None:
                labeled.append((label, t))
    blocks = partition_charsets([l for l, _ in labeled])
    out = []
    for block in blocks:
        c = block.min_char()
        targets = frozenset(t for l, t in labeled if c in l)
        out.append((c, block, targets))
    return [(c, _closure(auto, tg)) for c, _, tg in sorted(out, key=lambda x: x[0])]


def accepts(auto, w: str) -> bool:
    frontier = _closure(auto, [auto.initial])
    for c in w:
        nxt = set()
        for s in frontier:
            for label, t in auto.successors(s):
                if label is not None and c in label:
                    nxt.add(t)
        if not nxt:
            return False
        frontier = _closure(auto, nxt)
    return any(auto.is_final(s) for s in frontier)


def is_empty(auto) -> bool:
    if isinstance(auto, _Product):
        # Emptiness needs no determinization: reach only tuples of
        # component states, never subsets of a component's state space.
        return _product_is_empty(auto.parts)
    seen = {auto.initial}
    todo = [auto.initial]
    while todo:
        s = todo.pop()
        if auto.is_final(s):
            return False
        for _, t in auto.successors(s):
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return True


def witness(auto):
    """A shortest accepted word, lexicographically least among shortest;
    None iff the language is empty.

    Breadth-first over determinized-on-the-fly state sets: the queue is
    processed in length order, and sibling blocks are expanded smallest
    representative character first, so the first final hit is the answer.
    Any accepted word stays accepted when each letter is replaced by the
    smallest letter of its behavior block, so restricting to block
    representatives preserves the lexicographic minimum.
    """
    start = _closure(auto, [auto.initial])
    queue = deque([(start, "")])
    seen = {start}
    while queue:
        states, word = queue.popleft()
        if any(auto.is_final(s) for s in states):
            return word
        for c, targets in _letter_blocks(auto, states):
            if targets and targets not in seen:
                seen.add(targets)
                queue.append((targets, word + c))
    return None


def enumerate_words(auto, alphabet: Alphabet, max_len: int):
    """All accepted words of length ≤ max_len (ground-truth enumeration
    for small-scale oracles)."""
    letters = list(alphabet.charset)
    out = []
    start = _closure(auto, [auto.initial])

    def walk(states, word):
        if any(auto.is_final(s) for s in states):
            out.append(word)
        if len(word) == max_len:
            return
        for c in letters:
            nxt = set()
            for s in states:
                for label, t in auto.successors(s):
                    if label is not None and c in label:
                        nxt.add(t)
            if nxt:
                walk(_closure(auto, nxt), word + c)

    walk(start, "")
    return out


# --- products --------------------------------------------------------------


class _Product:
    """Lazy synchronized product of several automata (intersection)."""

    def __init__(self, parts):
        self.parts = parts

    @property
    def initial(self):
        return tuple(_closure(p, [p.initial]) for p in self.parts)

    def successors(self, s):
        per_part = []
        for p, states in zip(self.parts, s):
            moves = []
            for st in states:
                for label, t in p.successors(st):
                    if label is not None:
                        moves.append((label, t))
            per_part.append(moves)
        # Split the combined label space so each block moves deterministically.
        blocks = partition_charsets([l for moves in per_part for l, _ in moves])
        for block in blocks:
            c = block.min_char()
            targets = []
            for p, moves in zip(self.parts, per_part):
                tg = {t for l, t in moves if c in l}
                if not tg:
                    targets = None
                    break
                targets.append(_closure(p, tg))
            if targets is not None:
                yield block, tuple(targets)

    def is_final(self, s) -> bool:
        return all(
            any(p.is_final(st) for st in states)
            for p, states in zip(self.parts, s)
        )


def product_intersect(autos: list) -> _Product:
    if not autos:
        raise ValueError("need at least one automaton")
    return _Product(list(autos))


def _product_is_empty(parts: list) -> bool:
    """Reachability of an accepting tuple in the asynchronous product.

    A tuple accepts when every component can ε-reach one of its own
    final states — ε-moves consume nothing, so each component finishes
    the empty remainder independently.  Letter moves synchronize on a
    representative character per behavior block; ε-moves advance one
    component at a time.
    """
    k = len(parts)
    succ: list[dict] = [{} for _ in range(k)]
    accf: list[dict] = [{} for _ in range(k)]

    def moves(i, s):
        m = succ[i].get(s)
        if m is None:
            eps, lets = [], []
            for label, t in parts[i].successors(s):
                if label is None:
                    eps.append(t)
                else:
                    lets.append((label, t))
            m = succ[i][s] = (eps, lets)
        return m

    def accepting(i, s) -> bool:
        v = accf[i].get(s)
        if v is None:
            seen = {s}
            stack = [s]
            v = False
            while stack:
                u = stack.pop()
                if parts[i].is_final(u):
                    v = True
                    break
                for t in moves(i, u)[0]:
                    if t not in seen:
                        seen.add(t)
                        stack.append(t)
            accf[i][s] = v
        return v

    start = tuple(p.initial for p in parts)
    seen = {start}
    stack = [start]
    while stack:
        tup = stack.pop()
        if all(accepting(i, tup[i]) for i in range(k)):
            return False
        per = []
        for i in range(k):
            eps, lets = moves(i, tup[i])
            for t in eps:
                nt = tup[:i] + (t,) + tup[i + 1 :]
                if nt not in seen:
                    seen.add(nt)
                    stack.append(nt)
            per.append(lets)
        labels = [l for lets in per for l, _ in lets]
        if not labels:
            continue
        for block in partition_charsets(labels):
            c = block.min_char()
            tglists = []
            for lets in per:
                tg = [t for l, t in lets if c in l]
                if not tg:
                    break
                tglists.append(tg)
            else:
                for combo in product(*tglists):
                    if combo not in seen:
                        seen.add(combo)
                        stack.append(combo)
    return True


def materialize(auto, alphabet: Alphabet, spend=None) -> Fa:
    """Concrete Fa with the same language as a protocol automaton.

    ``spend``, when given, is called once per discovered state; passing a
    budget's spend method makes a large exploration interruptible at a
    deterministic point.
    """
    fa = Fa(alphabet)
    index: dict = {}

    def state(s):
        if s not in index:
            if spend is not None:
                spend()
            index[s] = fa.add_state()
            if auto.is_final(s):
                fa.finals.add(index[s])
            todo.append(s)
        return index[s]

    todo: list = []
    fa.q0 = state(auto.initial)
    while todo:
        s = todo.pop()
        q = index[s]
        for label, t in auto.successors(s):
            if label is None:
                fa.add_eps(q, state(t))
            else:
                fa.arc(q, label, state(t))
    return fa


def trim(a: Fa) -> Fa:
    """Copy of ``a`` restricted to states on some initial→final path.

    The language is unchanged; pre-image constructions in particular
    produce large numbers of speculative states that never complete, and
    dropping them up front keeps later products small.
    """
    n = a.n_states
    fwd = [False] * n
    todo = [a.q0]
    fwd[a.q0] = True
    while todo:
        q = todo.pop()
        for t in a.eps[q]:
            if not fwd[t]:
                fwd[t] = True
                todo.append(t)
        for _, t in a.arcs[q]:
            if not fwd[t]:
                fwd[t] = True
                todo.append(t)
    back: list[list[int]] = [[] for _ in range(n)]
    for q in range(n):
        for t in a.eps[q]:
            back[t].append(q)
        for _, t in a.arcs[q]:
            back[t].append(q)
    bwd = [False] * n
    todo = [f for f in a.finals if fwd[f]]
    for f in todo:
        bwd[f] = True
    while todo:
        q = todo.pop()
        for p in back[q]:
            if fwd[p] and not bwd[p]:
                bwd[p] = True
                todo.append(p)
    keep = [q for q in range(n) if fwd[q] and bwd[q]]
    out = Fa(a.alphabet)
    if not keep:
        out.add_state()
        return out
    index = {q: out.add_state() for q in keep}
    out.q0 = index[a.q0]
    out.finals = {index[f] for f in a.finals if f in index}
    for q in keep:
        for t in a.eps[q]:
            if t in index:
                out.add_eps(index[q], index[t])
        for label, t in a.arcs[q]:
            if t in index:
                out.arc(index[q], label, index[t])
    return out


# --- complement ------------------------------------------------------------


class StateLimit(Exception):
    """Raised when a bounded construction would exceed its state cap."""


def determinize(a, alphabet: Alphabet, limit: int | None = None) -> Fa:
    """Subset construction (complete: includes the sink state).

    With ``limit`` set, raises :class:`StateLimit` instead of building more
    than ``limit`` subset states, so callers can fall back to the
    nondeterministic original when determinization would blow up.
    """
    fa = Fa(alphabet)
    index: dict[frozenset, int] = {}

    def state(s: frozenset) -> int:
        if s not in index:
            if limit is not None and len(index) >= limit:
                raise StateLimit(len(index))
            index[s] = fa.add_state()
            if any(a.is_final(x) for x in s):
                fa.finals.add(index[s])
            todo.append(s)
        return index[s]

    todo: list[frozenset] = []
    fa.q0 = state(_closure(a, [a.initial]))
    while todo:
        s = todo.pop()
        q = index[s]
        covered = CharSet.empty()
        for block, targets in _det_blocks(a, s):
            fa.arc(q, block, state(targets))
            covered = covered.union(block)
        rest = alphabet.charset.difference(covered)
        if rest:
            fa.arc(q, rest, state(frozenset()))
    return fa


def _det_blocks(a, states: frozenset):
    labeled = []
    for s in states:
        for label, t in a.successors(s):
            if label is not None:
                labeled.append((label, t))
    for block in partition_charsets([l for l, _ in labeled]):
        c = block.min_char()
        targets = frozenset(t for l, t in labeled if c in l)
        yield block, _closure(a, targets)


def complement(a, alphabet: Alphabet | None = None) -> Fa:
    alphabet = alphabet or getattr(a, "alphabet", None) or Alphabet.printable_ascii()
    d = determinize(a, alphabet)
    d.finals = set(range(d.n_states)) - d.finals
    return d


def minimize(a, alphabet: Alphabet | None = None,
             det_limit: int | None = None) -> Fa:
    """Minimal trim DFA for the language of ``a``.

    Determinizes, merges behaviorally equivalent states (Moore partition
    refinement over a global label partition), and drops states that cannot
    reach acceptance.  The result is deterministic but *partial*: missing
    arcs mean rejection.  ``det_limit`` bounds the subset construction
    (:class:`StateLimit` on overflow) so callers can keep the original
    automaton when compaction is not worth it.
    """
    alphabet = alphabet or getattr(a, "alphabet", None) or Alphabet.printable_ascii()
    d = determinize(a, alphabet, det_limit)

    # One global refinement of every arc label: within a block, all states
    # move uniformly, so a block behaves like a single letter.
    blocks = partition_charsets(
        [l for q in range(d.n_states) for l, _ in d.arcs[q]])
    reps = [b.min_char() for b in blocks]
    delta = []
    for q in range(d.n_states):
        row = []
        for c in reps:
            row.append(next(t for l, t in d.arcs[q] if c in l))
        delta.append(row)

    cls = [1 if q in d.finals else 0 for q in range(d.n_states)]
    while True:
        sig: dict = {}
        new = []
        for q in range(d.n_states):
            key = (cls[q], tuple(cls[t] for t in delta[q]))
            new.append(sig.setdefault(key, len(sig)))
        if len(set(new)) == len(set(cls)):
            cls = new
            break
        cls = new

    # Class-level transitions (consistent across members by construction).
    rep_of: dict[int, int] = {}
    for q in range(d.n_states):
        rep_of.setdefault(cls[q], q)
    n_cls = len(rep_of)
    final_cls = {cls[q] for q in d.finals}

    # Keep only classes on some initial→final path.
    fwd = {c: {cls[delta[q][i]] for i in range(len(blocks))}
           for c, q in rep_of.items()}
    reach = {cls[d.q0]}
    todo = [cls[d.q0]]
    while todo:
        c = todo.pop()
        for t in fwd[c]:
            if t not in reach:
                reach.add(t)
                todo.append(t)
    back: dict[int, set] = {c: set() for c in range(n_cls)}
    for c, ts in fwd.items():
        for t in ts:
            back[t].add(c)
    coreach = set(final_cls)
    todo = list(final_cls)
    while todo:
        c = todo.pop()
        for s in back[c]:
            if s not in coreach:
                coreach.add(s)
                todo.append(s)
    keep = reach & coreach

    out = Fa(alphabet)
    ids: dict[int, int] = {}
    order = sorted(keep)
    if cls[d.q0] in keep:
        order.remove(cls[d.q0])
        order.insert(0, cls[d.q0])
    for c in order:
        ids[c] = out.add_state()
        if c in final_cls:
            out.finals.add(ids[c])
    if not ids:  # empty language
        out.add_state()
        return out
    out.q0 = ids[cls[d.q0]]
    for c in order:
        q = rep_of[c]
        merged: dict[int, CharSet] = {}
        for i, b in enumerate(blocks):
            t = cls[delta[q][i]]
            if t in keep:
                merged[t] = merged[t].union(b) if t in merged else b
        for t, label in sorted(merged.items()):
            out.arc(ids[c], label, ids[t])
    return out
