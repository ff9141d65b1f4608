"""Propagation calculus for string constraints, with a decision
procedure for the straight-line fragment.

Constraints are one-sided sequents: finite sets of atoms among variable
(dis)equalities, concatenation equations ``z = x·y``, string-function
equations ``y = f(x)`` (where ``f`` is an extract/replace/replaceAll
specification compiled to transducers), and regular memberships carrying
compiled automata.  Solving propagates regular languages through the
equations:

* backward (the workhorse): a membership on the defined variable is
  pulled through the function's pre-image, or split across the
  concatenation's state-indexed splittings;
* forward, in the cases that stay regular: concatenation images always,
  function images only when the argument language is a singleton (the
  equation is then evaluated and eliminated).

A sequent closes when some variable's membership automata have an empty
intersection.  For straight-line inputs — every variable defined at most
once, definitions acyclic — the strategy below is a decision procedure:
propagate backward in reverse definition order, close or, on an open
branch, extract a model by cutting each input variable to a concrete
witness and evaluating the definitions forward.  The extracted model is
always re-verified against the original formula by direct evaluation.
Non-straight-line inputs are still attempted (propagation may close
them, and grounding may still succeed); ``unknown`` is returned only
when neither happens.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import strfuncs as sf
from .charset import Alphabet
from .fa import (
    Fa,
    StateLimit,
    accepts,
    complement,
    fa_all,
    fa_word,
    is_empty,
    materialize,
    minimize,
    product_intersect,
    trim,
    witness,
)
from .psst import run
from .regex_ast import print_regex

__all__ = [
    "VarEq",
    "VarNeq",
    "ConcatEq",
    "FunEq",
    "Member",
    "Conj",
    "Disj",
    "Neg",
    "Sequent",
    "ProofNode",
    "SlResult",
    "StepBudget",
    "BudgetExceeded",
    "SolveResult",
    "normalize_boolean",
    "check_straightline",
    "solve",
    "verify_model",
    "describe_atom",
    "format_proof",
    "format_model",
]


# --- atoms and formulas -----------------------------------------------------


@dataclass(frozen=True)
class VarEq:
    left: str
    right: str


@dataclass(frozen=True)
class VarNeq:
    left: str
    right: str


@dataclass(frozen=True)
class ConcatEq:
    """``lhs = left · right``."""

    lhs: str
    left: str
    right: str


@dataclass(frozen=True)
class FunEq:
    """``lhs = f(arg)`` for a string-function specification ``spec``
    (:class:`strsolver.strfuncs.Extract`/``Replace``/``ReplaceAll``)."""

    lhs: str
    spec: object
    arg: str


@dataclass(frozen=True)
class Member:
    """``var ∈ L(fa)`` (or its negation while ``polarity`` is False;
    normalization complements the automaton and flips the polarity)."""

    var: str
    fa: object
    polarity: bool = True
    label: str = field(default="", compare=False)


Atom = (VarEq, VarNeq, ConcatEq, FunEq, Member)


@dataclass(frozen=True)
class Conj:
    parts: tuple


@dataclass(frozen=True)
class Disj:
    parts: tuple


@dataclass(frozen=True)
class Neg:
    body: object


def _def_var(eq) -> str:
    return eq.lhs if isinstance(eq, (ConcatEq, FunEq)) else eq.left


def _uses(eq) -> tuple:
    if isinstance(eq, ConcatEq):
        return (eq.left, eq.right)
    if isinstance(eq, FunEq):
        return (eq.arg,)
    return (eq.right,)


def atom_vars(a) -> tuple:
    if isinstance(a, Member):
        return (a.var,)
    if isinstance(a, ConcatEq):
        return (a.lhs, a.left, a.right)
    if isinstance(a, FunEq):
        return (a.lhs, a.arg)
    return (a.left, a.right)


def formula_vars(phi) -> list:
    """Variables of a formula, in first-occurrence order."""
    out: list = []

    def walk(f):
        if isinstance(f, Neg):
            walk(f.body)
        elif isinstance(f, (Conj, Disj)):
            for p in f.parts:
                walk(p)
        else:
            for v in atom_vars(f):
                if v not in out:
                    out.append(v)

    walk(phi)
    return out


def formula_alphabet(phi):
    """First alphabet mentioned by a compiled membership, if any."""
    if isinstance(phi, Neg):
        return formula_alphabet(phi.body)
    if isinstance(phi, (Conj, Disj)):
        for p in phi.parts:
            a = formula_alphabet(p)
            if a is not None:
                return a
        return None
    if isinstance(phi, Member):
        return phi.fa.alphabet
    return None


# --- sequents and proofs ----------------------------------------------------


@dataclass(frozen=True)
class Sequent:
    """A set of atoms, stored in first-derivation order."""

    atoms: tuple

    @staticmethod
    def of(atoms) -> "Sequent":
        seen = []
        for a in atoms:
            if a not in seen:
                seen.append(a)
        return Sequent(tuple(seen))

    def with_atoms(self, *new) -> "Sequent":
        return Sequent.of(self.atoms + tuple(new))

    def without(self, *drop) -> "Sequent":
        return Sequent(tuple(a for a in self.atoms if a not in drop))

    def memberships(self, var) -> list:
        return [
            a for a in self.atoms if isinstance(a, Member) and a.var == var
        ]

    def variables(self) -> list:
        out: list = []
        for a in self.atoms:
            for v in atom_vars(a):
                if v not in out:
                    out.append(v)
        return out


@dataclass
class ProofNode:
    """Proof trees grow upward: ``rule`` produced ``children`` from this
    node's sequent.  A childless node with rule "Close" is a closed leaf;
    a childless node without a rule is open.  The root of a solve() proof
    carries the unnormalized formula and the boolean-normalization macro
    step."""

    sequent: object  # Sequent, or None on the formula root
    rule: str = ""
    note: str = ""
    children: list = field(default_factory=list)
    formula: object = None


# --- boolean normalization (Phase 1) ----------------------------------------


class _FreshNames:
    def __init__(self, used):
        self.used = set(used)
        self.n = 0

    def take(self, hint: str) -> str:
        while True:
            name = f"_{hint}{self.n}"
            self.n += 1
            if name not in self.used:
                self.used.add(name)
                return name


def normalize_boolean(phi, alphabet=None) -> list:
    """Split a formula into sequents of positive atoms (plus variable
    disequalities): conjunction/disjunction/negation are expanded to
    disjunctive normal form, negated memberships become memberships in
    the complement automaton, and a negated equation ``x ≠ f(...)``
    introduces a fresh variable for the function value."""
    alphabet = alphabet or formula_alphabet(phi) or Alphabet.printable_ascii()
    fresh = _FreshNames(formula_vars(phi))
    return [Sequent.of(b) for b in _dnf(phi, False, alphabet, fresh)]


def _dnf(phi, neg, alphabet, fresh):
    if isinstance(phi, Neg):
        return _dnf(phi.body, not neg, alphabet, fresh)
    if isinstance(phi, (Conj, Disj)):
        conjunctive = isinstance(phi, Conj) != neg
        if conjunctive:
            out = [[]]
            for p in phi.parts:
                out = [b + c for b in out for c in _dnf(p, neg, alphabet, fresh)]
            return out
        out = []
        for p in phi.parts:
            out.extend(_dnf(p, neg, alphabet, fresh))
        return out
    return _atom_branches(phi, neg, alphabet, fresh)


def _domain_fa(spec, alphabet):
    """Words on which the function has a (non-null) value."""
    from .preimage import psst_preimage

    lang = fa_all(alphabet)
    for t in reversed(sf.encode(spec, alphabet)):
        lang = psst_preimage(t, lang)
    return lang


def _atom_branches(a, neg, alphabet, fresh):
    """One disjunct (list of atoms) per way of satisfying the possibly
    negated atom."""
    if isinstance(a, Member):
        positive = a.polarity != neg
        if positive:
            return [[replace(a, polarity=True)]]
        return [
            [
                Member(
                    a.var,
                    complement(a.fa, alphabet),
                    True,
                    label=f"complement({a.label or 'L'})",
                )
            ]
        ]
    if isinstance(a, VarEq):
        return [[VarNeq(a.left, a.right) if neg else a]]
    if isinstance(a, VarNeq):
        return [[VarEq(a.left, a.right) if neg else a]]
    if isinstance(a, (ConcatEq, FunEq)):
        if not neg:
            return [[a]]
        y = fresh.take("neq")
        branches = [[VarNeq(_def_var(a), y), replace(a, lhs=y)]]
        if isinstance(a, FunEq) and isinstance(a.spec, sf.Extract):
            # extract is partial: "y differs from f(x)" also holds when
            # f has no value at x, which the fresh-variable disjunct
            # (asserting a value exists) misses.
            branches.append(
                [
                    Member(
                        a.arg,
                        complement(_domain_fa(a.spec, alphabet), alphabet),
                        True,
                        label=f"outside the domain of {describe_spec(a.spec)}",
                    )
                ]
            )
        return branches
    raise TypeError(f"not a formula atom: {a!r}")


# --- straight-line check ----------------------------------------------------


@dataclass
class SlResult:
    is_sl: bool
    order: tuple
    reason: str = ""
    cycle: tuple = ()


def check_straightline(s: Sequent) -> SlResult:
    """Order the sequent's equations so every right-hand side mentions
    only input variables or earlier-defined ones; report the offending
    variable or dependency cycle otherwise."""
    eqs = [a for a in s.atoms if isinstance(a, (VarEq, ConcatEq, FunEq))]
    defs = {}
    for e in eqs:
        v = _def_var(e)
        if v in defs or v in _uses(e):
            why = "defined twice" if v in defs else "defined from itself"
            return SlResult(False, (), f"variable {v} is {why}", (v,))
        defs[v] = e
    order = []
    placed = set()
    remaining = list(eqs)
    while remaining:
        progressed = False
        for e in list(remaining):
            if all(u not in defs or u in placed for u in _uses(e)):
                order.append(e)
                placed.add(_def_var(e))
                remaining.remove(e)
                progressed = True
        if not progressed:
            cycle = []
            v = _def_var(remaining[0])
            while v not in cycle:
                cycle.append(v)
                v = next(
                    u for u in _uses(defs[v]) if u in defs and u not in placed
                )
            return SlResult(
                False, (), "cyclic definitions", tuple(cycle) + (v,)
            )
    return SlResult(True, tuple(order))


# --- budget -----------------------------------------------------------------


class BudgetExceeded(Exception):
    pass


class StepBudget:
    """Deterministic cooperative budget: abstract steps, not wall time.
    Rule applications cost 1; pre-image constructions cost their state
    count, so runaway constructions are interrupted reproducibly."""

    def __init__(self, limit=None):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1):
        self.used += n
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(f"step budget {self.limit} exhausted")


@dataclass
class SolveResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: object  # dict[str, str] | None
    proof: ProofNode
    reason: str = ""


# --- the engine -------------------------------------------------------------


class _Engine:
    def __init__(self, alphabet: Alphabet, budget: StepBudget):
        self.alphabet = alphabet
        self.budget = budget
        self._machines: dict[int, list] = {}
        self._keepalive: list = []
        self._domains: dict = {}

    # -- equation machinery ------------------------------------------------

    def machines(self, eq: FunEq) -> list:
        key = id(eq)
        if key not in self._machines:
            self._keepalive.append(eq)
            self._machines[key] = sf.encode(eq.spec, self.alphabet)
        return self._machines[key]

    def apply_fun(self, eq: FunEq, w: str):
        """Evaluate the function on a concrete word; None when the value
        is undefined (no match) or null (unset group)."""
        for t in self.machines(eq):
            r = run(t, w)
            if not r.accepted or r.output is None:
                return None
            w = r.output
        return w

    def domain_info(self, spec):
        """None when the function has a value on every word; otherwise
        its domain automaton (the pre-image of the universal language)."""
        if spec not in self._domains:
            lang = fa_all(self.alphabet)
            for t in reversed(sf.encode(spec, self.alphabet)):
                lang = self.preimage_fa(t, lang)
            total = is_empty(complement(lang, self.alphabet))
            self._domains[spec] = None if total else lang
        return self._domains[spec]

    # -- per-variable languages --------------------------------------------

    def member_fas(self, s: Sequent, var) -> list:
        return [m.fa for m in s.memberships(var)]

    def var_product(self, s: Sequent, var):
        fas = self.member_fas(s, var)
        if not fas:
            return fa_all(self.alphabet)
        if len(fas) == 1:
            return fas[0]
        return product_intersect(fas)

    def singleton(self, s: Sequent, var):
        """The unique word of the variable's language, or None."""
        self.budget.spend()
        prod = self.var_product(s, var)
        w = witness(prod)
        if w is None:
            return None
        rest = product_intersect(
            self.member_fas(s, var)
            + [complement(fa_word(self.alphabet, w), self.alphabet)]
        )
        return w if is_empty(rest) else None

    # -- housekeeping (Close, =-Prop(-Elim), ≠-Prop-Elim, ≠-Subsume) -------

    def housekeep(self, node: ProofNode):
        """Apply unary bookkeeping rules to a fixpoint, chaining proof
        nodes; returns (leaf, closed?)."""
        cur = node
        while True:
            self.budget.spend()
            s = cur.sequent
            closed = self._close_reason(s)
            if closed is not None:
                cur.rule, cur.note = "Close", closed
                return cur, True
            step = self._housekeep_step(s)
            if step is None:
                return cur, False
            rule, note, s2 = step
            child = ProofNode(s2)
            cur.rule, cur.note, cur.children = rule, note, [child]
            cur = child

    def _close_reason(self, s: Sequent):
        for var in s.variables():
            fas = self.member_fas(s, var)
            if not fas:
                continue
            prod = fas[0] if len(fas) == 1 else product_intersect(fas)
            if is_empty(prod):
                return f"{var} has an empty language"
        eqs = {
            frozenset((a.left, a.right))
            for a in s.atoms
            if isinstance(a, VarEq)
        }
        for a in s.atoms:
            if isinstance(a, VarNeq):
                if a.left == a.right:
                    return f"{a.left} ≠ {a.left} is unsatisfiable"
                if frozenset((a.left, a.right)) in eqs:
                    return f"{a.left} = {a.right} contradicts {a.left} ≠ {a.right}"
        return None

    def _housekeep_step(self, s: Sequent):
        for a in s.atoms:
            if isinstance(a, VarEq):
                for src, dst in ((a.left, a.right), (a.right, a.left)):
                    w = self.singleton(s, src)
                    if w is None:
                        continue
                    if self.singleton(s, dst) == w:
                        # Both sides already pinned to the same word: the
                        # equation carries no further information.
                        return (
                            "=-Prop-Elim",
                            f"{src} and {dst} both fixed to \"{w}\"",
                            s.without(a),
                        )
                    return (
                        "=-Prop-Elim",
                        f"{src} is fixed to \"{w}\"",
                        s.without(a).with_atoms(
                            Member(
                                dst,
                                fa_word(self.alphabet, w),
                                label=f'"{w}"',
                            )
                        ),
                    )
                # plain =-Prop: share membership automata across the
                # equation (by identity, so propagation terminates)
                for src, dst in ((a.left, a.right), (a.right, a.left)):
                    have = {id(f) for f in self.member_fas(s, dst)}
                    for m in s.memberships(src):
                        if id(m.fa) not in have:
                            return (
                                "=-Prop",
                                f"{src} = {dst} shares {m.label or 'a language'}",
                                s.with_atoms(replace(m, var=dst)),
                            )
            elif isinstance(a, VarNeq):
                fx = self.member_fas(s, a.left)
                fy = self.member_fas(s, a.right)
                if (
                    fx
                    and fy
                    and is_empty(product_intersect(fx + fy))
                ):
                    return (
                        "≠-Subsume",
                        f"{a.left} and {a.right} range over disjoint languages",
                        s.without(a),
                    )
                for src, dst in ((a.left, a.right), (a.right, a.left)):
                    w = self.singleton(s, src)
                    if w is not None:
                        return (
                            "≠-Prop-Elim",
                            f"{src} is fixed to \"{w}\"",
                            s.without(a).with_atoms(
                                Member(
                                    dst,
                                    complement(
                                        fa_word(self.alphabet, w),
                                        self.alphabet,
                                    ),
                                    label=f'complement("{w}")',
                                )
                            ),
                        )
        return None

    def _subsume_cleanup(self, node: ProofNode):
        """Drop memberships implied by the rest (presentation only; only
        attempted on small automata)."""
        s = node.sequent
        for m in s.atoms:
            if not isinstance(m, Member):
                continue
            if getattr(m.fa, "n_states", 999) > 16:
                continue
            others = [
                o.fa
                for o in s.memberships(m.var)
                if o is not m
            ]
            if not others:
                continue
            self.budget.spend()
            if is_empty(
                product_intersect(
                    others + [complement(m.fa, self.alphabet)]
                )
            ):
                child = ProofNode(s.without(m))
                node.rule = "Subsume"
                node.note = f"{m.var} ∈ {m.label or '⟨automaton⟩'} is implied"
                node.children = [child]
                return self._subsume_cleanup(child)
        return node

    # -- propagation rules -------------------------------------------------

    def compact_fa(self, fa_obj) -> Fa:
        """A smaller automaton for the same language, best effort.

        Minimization pays off massively before a pre-image — its state
        space scales with the square of the target's size — but the
        subset construction inside can itself explode, so it runs under
        a cap and falls back to a plain trim.
        """
        if not isinstance(fa_obj, Fa):
            fa_obj = materialize(fa_obj, self.alphabet)
        self.budget.spend()
        try:
            return minimize(
                fa_obj,
                self.alphabet,
                det_limit=max(64, 4 * fa_obj.n_states),
            )
        except StateLimit:
            return trim(fa_obj)

    def preimage_fa(self, t, target) -> Fa:
        from .preimage import psst_preimage, psst_preimage_copyless
        from .psst import check_copyless

        target = self.compact_fa(target)
        # The copyless tracker (one guessed state pair per variable)
        # avoids the exponential blow-up in the target automaton; fall
        # back to full transition relations otherwise.  The budget is
        # charged per explored state, so a runaway construction is cut
        # off at a deterministic point rather than after the fact.
        if check_copyless(t):
            b = psst_preimage(t, target, spend=self.budget.spend)
        else:
            b = psst_preimage_copyless(t, target, spend=self.budget.spend)
        self.budget.spend()
        return b

    def is_universal(self, fa_obj) -> bool:
        """True when the automaton accepts every word (only attempted on
        small automata — a miss just means a redundant propagation)."""
        if getattr(fa_obj, "n_states", 1 << 30) > 256:
            return False
        self.budget.spend()
        return is_empty(complement(fa_obj, self.alphabet))

    def bwd_prop(self, node: ProofNode, eq) -> list:
        """Pull the defined variable's memberships back through the
        equation; returns the open-child proof nodes (already attached)."""
        s = node.sequent
        fas = self.member_fas(s, _def_var(eq))
        self.budget.spend()
        target = None
        if fas:
            target = fas[0] if len(fas) == 1 else product_intersect(fas)
            if not isinstance(target, Fa):
                target = materialize(target, self.alphabet)
            if self.is_universal(target):
                target = None  # carries no information
        if isinstance(eq, FunEq) and target is None:
            # No (informative) target language, but the equation still
            # requires the argument to lie in the function's domain.
            dom = self.domain_info(eq.spec)
            if dom is None:
                return []
            child = ProofNode(
                s.with_atoms(
                    Member(
                        eq.arg,
                        dom,
                        label=f"domain of {describe_spec(eq.spec)}",
                    )
                )
            )
            node.rule = "Bwd-Prop"
            node.note = describe_atom(eq)
            node.children = [child]
            return [child]
        if target is None:
            return []
        if isinstance(eq, FunEq):
            lang = target
            for t in reversed(self.machines(eq)):
                lang = self.preimage_fa(t, lang)
            child = ProofNode(
                s.with_atoms(
                    Member(
                        eq.arg,
                        lang,
                        label=f"preimage of {_def_var(eq)}'s language",
                    )
                )
            )
            node.rule = "Bwd-Prop"
            node.note = describe_atom(eq)
            node.children = [child]
            return [child]
        from .preimage import concat_preimage

        children = []
        for left_fa, right_fa in concat_preimage(target):
            if is_empty(left_fa) or is_empty(right_fa):
                continue  # an unsatisfiable disjunct contributes nothing
            children.append(
                ProofNode(
                    s.with_atoms(
                        Member(
                            eq.left, left_fa, label=f"left part of {eq.lhs}"
                        ),
                        Member(
                            eq.right, right_fa, label=f"right part of {eq.lhs}"
                        ),
                    )
                )
            )
        node.rule = "Bwd-Prop"
        node.note = describe_atom(eq)
        node.children = children
        return children

    def fwd_concat(self, node: ProofNode, eq: ConcatEq):
        """Add the (always regular) image constraint of a concatenation."""
        from .preimage import concat_image

        s = node.sequent
        self.budget.spend()
        left = materialize(self.var_product(s, eq.left), self.alphabet)
        right = materialize(self.var_product(s, eq.right), self.alphabet)
        image = concat_image(left, right)
        child = ProofNode(
            s.with_atoms(
                Member(eq.lhs, image, label=f"image of {eq.left}·{eq.right}")
            )
        )
        node.rule = "Fwd-Prop"
        node.note = describe_atom(eq)
        node.children = [child]
        return child

    def fwd_fun_elim(self, node: ProofNode, eq: FunEq):
        """Evaluate a function equation whose argument is a singleton;
        returns (child, closed?) or None when inapplicable."""
        s = node.sequent
        w = self.singleton(s, eq.arg)
        if w is None:
            return None
        v = self.apply_fun(eq, w)
        if v is None:
            node.rule = "Close"
            node.note = (
                f"{describe_atom(eq)} has no value on the only argument \"{w}\""
            )
            return node, True
        child = ProofNode(
            s.without(eq).with_atoms(
                Member(eq.lhs, fa_word(self.alphabet, v), label=f'"{v}"')
            )
        )
        node.rule = "Fwd-Prop-Elim"
        node.note = f'{describe_atom(eq)} evaluates to "{v}"'
        node.children = [child]
        return child, False

    # -- the three phases --------------------------------------------------

    def solve(self, phi) -> SolveResult:
        branches = normalize_boolean(phi, self.alphabet)
        root = ProofNode(
            None,
            rule="Normalize",
            note="boolean rules (∧ ∨ ¬ ∉ ≠) to disjunctive normal form",
            formula=phi,
            children=[ProofNode(s) for s in branches],
        )
        unknowns = []
        for branch in root.children:
            status, model = self._branch(branch, phi)
            if status == "sat":
                return SolveResult("sat", model, root)
            if status == "unknown":
                unknowns.append(model)  # model slot carries the reason
        if unknowns:
            return SolveResult("unknown", None, root, "; ".join(unknowns))
        return SolveResult("unsat", None, root)

    def _branch(self, node: ProofNode, phi):
        sl = check_straightline(node.sequent)
        if sl.is_sl:
            pending = [
                e for e in reversed(sl.order) if isinstance(e, (ConcatEq, FunEq))
            ]
        else:
            pending = [
                a
                for a in reversed(node.sequent.atoms)
                if isinstance(a, (ConcatEq, FunEq))
            ]
        cur, closed = self.housekeep(node)
        if closed:
            return "unsat", None
        if not sl.is_sl:
            cur, closed = self._forward_phase(cur)
            if closed:
                return "unsat", None
        # Phase 2: backward propagation, depth-first over splits.
        open_reasons = []
        stack = [(cur, pending)]
        sat_model = None
        while stack and sat_model is None:
            nd, todo = stack.pop()
            pick = None
            for i, eq in enumerate(todo):
                if eq not in nd.sequent.atoms:
                    continue
                if self.member_fas(nd.sequent, _def_var(eq)):
                    pick = i
                    break
                if (
                    isinstance(eq, FunEq)
                    and self.domain_info(eq.spec) is not None
                ):
                    pick = i
                    break
            if pick is None:
                # Phase 3 on this open goal.
                outcome, payload = self._phase3(nd, sl, phi)
                if outcome == "sat":
                    sat_model = payload
                elif outcome == "unknown":
                    open_reasons.append(payload)
                continue
            eq = todo[pick]
            rest = todo[:pick] + todo[pick + 1 :]
            children = self.bwd_prop(nd, eq)
            if not children and not nd.children:
                # the step carried no information; the goal stays open
                stack.append((nd, rest))
                continue
            for child in reversed(children):
                leaf, closed = self.housekeep(child)
                if not closed:
                    stack.append((leaf, rest))
        if sat_model is not None:
            return "sat", sat_model
        if open_reasons:
            return "unknown", "; ".join(open_reasons)
        return "unsat", None

    def _forward_phase(self, node: ProofNode):
        """For goals outside the straight-line fragment: add concat
        images and evaluate singleton function equations once, so that
        self-referential equations meet a membership to propagate
        backward (their pre-image then closes the goal or not)."""
        cur = node
        for eq in [a for a in cur.sequent.atoms if isinstance(a, ConcatEq)]:
            cur = self.fwd_concat(cur, eq)
            cur, closed = self.housekeep(cur)
            if closed:
                return cur, True
        for eq in [a for a in cur.sequent.atoms if isinstance(a, FunEq)]:
            res = self.fwd_fun_elim(cur, eq)
            if res is None:
                continue
            cur, closed = res
            if closed:
                return cur, True
            cur, closed = self.housekeep(cur)
            if closed:
                return cur, True
        return cur, False

    def _phase3(self, node: ProofNode, sl: SlResult, phi):
        """Ground an open goal: cut each undetermined variable to a
        witness (exploring the complement branch on conflicts), evaluate
        the equations, and verify.  Returns ("sat", model),
        ("closed", None) when every cut branch closes, or
        ("unknown", reason)."""
        defined = {_def_var(e) for e in sl.order} if sl.is_sl else {
            _def_var(a)
            for a in node.sequent.atoms
            if isinstance(a, (VarEq, ConcatEq, FunEq))
        }
        unknown_notes = []
        stack = [node]
        while stack:
            nd = stack.pop()
            nd, closed = self.housekeep(nd)
            if closed:
                continue
            s = nd.sequent
            free = sorted(v for v in s.variables() if v not in defined)
            target = next(
                (v for v in free if self.singleton(s, v) is None), None
            )
            if target is not None:
                prod = self.var_product(s, target)
                w = witness(prod)
                if w is None:  # housekeeping has no membership to see
                    continue
                self.budget.spend()
                word_fa = fa_word(self.alphabet, w)
                left = ProofNode(
                    s.with_atoms(Member(target, word_fa, label=f'"{w}"'))
                )
                right = ProofNode(
                    s.with_atoms(
                        Member(
                            target,
                            complement(word_fa, self.alphabet),
                            label=f'complement("{w}")',
                        )
                    )
                )
                nd.rule = "Cut"
                nd.note = f'{target} ∈ "{w}" or its complement'
                nd.children = [left, right]
                stack.append(right)
                stack.append(left)
                continue
            result = self._ground(nd, sl, phi, free)
            if result is None:
                continue
            outcome, payload = result
            if outcome == "sat":
                return result
            if payload not in unknown_notes:
                unknown_notes.append(payload)
        if unknown_notes:
            return "unknown", "; ".join(unknown_notes)
        return "closed", None

    def _ground(self, nd: ProofNode, sl: SlResult, phi, free):
        """Evaluate the definitions on top of pinned free variables."""
        s = nd.sequent
        model = {}
        for v in free:
            model[v] = self.singleton(s, v)
        order = sl.order if sl.is_sl else _best_effort_order(s)
        cur = nd
        for eq in order:
            if any(model.get(u) is None for u in _uses(eq)):
                return (
                    "unknown",
                    f"cannot ground {describe_atom(eq)}: argument unpinned",
                )
            value = self._eval_eq(eq, model)
            if value is None:
                cur.rule = "Close"
                cur.note = f"{describe_atom(eq)} has no value here"
                return None  # infeasible cut branch; explore siblings
            v = _def_var(eq)
            if model.get(v, value) != value:
                cur.rule = "Close"
                cur.note = f"{describe_atom(eq)} conflicts with {v}'s value"
                return None
            model[v] = value
            child = ProofNode(
                cur.sequent.with_atoms(
                    Member(
                        v, fa_word(self.alphabet, value), label=f'"{value}"'
                    )
                )
            )
            cur.rule = "Fwd-Prop-Elim"
            cur.note = f'{describe_atom(eq)} evaluates to "{value}"'
            cur.children = [child]
            cur, closed = self.housekeep(child)
            if closed:
                return None
        # Any leftover (non-ordered, e.g. self-referential) equations
        # must already hold under the grounding; their variables can only
        # be checked when pinned to a unique word.
        for a in cur.sequent.atoms:
            if isinstance(a, (VarEq, ConcatEq, FunEq)) and a not in order:
                for v in atom_vars(a):
                    if v not in model:
                        w = self.singleton(cur.sequent, v)
                        if w is None:
                            return (
                                "unknown",
                                f"cannot ground {describe_atom(a)}",
                            )
                        model[v] = w
                if not _atom_holds(a, model, self):
                    cur.rule = "Close"
                    cur.note = f"{describe_atom(a)} fails under the grounding"
                    return None
        final = {}
        for v in formula_vars(phi):
            w = model.get(v)
            if w is None:
                w = self.singleton(cur.sequent, v)
            if w is None:
                w = witness(self.var_product(cur.sequent, v)) or ""
            final[v] = w
        leaf = self._subsume_cleanup(cur)
        if not verify_model(phi, final, self.alphabet):
            raise RuntimeError(
                f"extracted model failed verification: {final!r}"
            )
        leaf.rule = "Model"
        leaf.note = ", ".join(f'{v} = "{final[v]}"' for v in sorted(final))
        return "sat", final

    def _eval_eq(self, eq, model):
        if isinstance(eq, VarEq):
            return model[eq.right]
        if isinstance(eq, ConcatEq):
            return model[eq.left] + model[eq.right]
        return self.apply_fun(eq, model[eq.arg])


def _best_effort_order(s: Sequent) -> tuple:
    """A dependency-respecting prefix of the equations (cyclic leftovers
    are checked rather than evaluated)."""
    eqs = [a for a in s.atoms if isinstance(a, (VarEq, ConcatEq, FunEq))]
    defs = {}
    for e in eqs:
        defs.setdefault(_def_var(e), e)
    order = []
    placed = set()
    changed = True
    while changed:
        changed = False
        for e in eqs:
            if e in order or _def_var(e) in placed:
                continue
            if _def_var(e) in _uses(e):
                continue
            if all(u not in defs or u in placed for u in _uses(e)):
                order.append(e)
                placed.add(_def_var(e))
                changed = True
    return tuple(order)


# --- public entry points ----------------------------------------------------


def solve(phi, alphabet=None, budget=None) -> SolveResult:
    """Decide a string-constraint formula.

    Returns ``unsat`` with a closed proof tree, ``sat`` with a verified
    model, or ``unknown`` (only possible outside the straight-line
    fragment, or when a step budget interrupts the search).
    """
    alphabet = alphabet or formula_alphabet(phi) or Alphabet.printable_ascii()
    # The default budget is a generous deterministic cap; it only matters
    # for pathologies (e.g. disequalities over defined variables forcing
    # an unbounded witness search), where it turns divergence into a
    # reproducible "unknown".  Pre-image constructions charge one step
    # per explored state, and realistic regex work reaches the hundreds
    # of thousands, hence the size.
    eng = _Engine(alphabet, budget or StepBudget(2_000_000))
    try:
        return eng.solve(phi)
    except BudgetExceeded as e:
        return SolveResult(
            "unknown", None, ProofNode(None, formula=phi), str(e)
        )


def verify_model(phi, val, alphabet=None) -> bool:
    """Independent check that a valuation satisfies a formula, by direct
    evaluation (runs the transducers; no calculus involved)."""
    alphabet = alphabet or formula_alphabet(phi) or Alphabet.printable_ascii()

    class _Evaluator:
        def __init__(self):
            self._cache = {}

        def apply_fun(self, eq, w):
            key = id(eq)
            if key not in self._cache:
                self._cache[key] = sf.encode(eq.spec, alphabet)
            for t in self._cache[key]:
                r = run(t, w)
                if not r.accepted or r.output is None:
                    return None
                w = r.output
            return w

    ev = _Evaluator()

    def go(f, neg):
        if isinstance(f, Neg):
            return go(f.body, not neg)
        if isinstance(f, (Conj, Disj)):
            conjunctive = isinstance(f, Conj) != neg
            parts = [go(p, neg) for p in f.parts]
            return all(parts) if conjunctive else any(parts)
        return _atom_holds(f, val, ev) != neg

    return go(phi, False)


def _atom_holds(a, val, ev) -> bool:
    if isinstance(a, VarEq):
        return val[a.left] == val[a.right]
    if isinstance(a, VarNeq):
        return val[a.left] != val[a.right]
    if isinstance(a, Member):
        return accepts(a.fa, val[a.var]) == a.polarity
    if isinstance(a, ConcatEq):
        return val[a.lhs] == val[a.left] + val[a.right]
    if isinstance(a, FunEq):
        return ev.apply_fun(a, val[a.arg]) == val[a.lhs]
    raise TypeError(f"not an atom: {a!r}")


# --- presentation -----------------------------------------------------------


def describe_spec(spec) -> str:
    if isinstance(spec, sf.Extract):
        return f"extract[{spec.group}, /{print_regex(spec.regex)}/]"
    kind = "replaceAll" if isinstance(spec, sf.ReplaceAll) else "replace"
    pat = print_regex(spec.pattern)
    if spec.anchor_start:
        pat = "^" + pat
    if spec.anchor_end:
        pat = pat + "$"
    return f"{kind}[/{pat}/ → {format_replacement(spec.replacement)}]"


def format_replacement(rep) -> str:
    out = []
    for part in rep:
        if isinstance(part, sf.Lit):
            out.append(part.text.replace("$", "$$"))
        elif isinstance(part, sf.GroupRef):
            out.append(f"${part.index}")
        elif isinstance(part, sf.WholeMatch):
            out.append("$&")
        elif isinstance(part, sf.Before):
            out.append("$`")
        else:
            out.append("$'")
    return "".join(out)


def describe_atom(a) -> str:
    if isinstance(a, Member):
        lang = a.label or f"⟨{getattr(a.fa, 'n_states', '?')}-state automaton⟩"
        return f"{a.var} {'∈' if a.polarity else '∉'} {lang}"
    if isinstance(a, VarEq):
        return f"{a.left} = {a.right}"
    if isinstance(a, VarNeq):
        return f"{a.left} ≠ {a.right}"
    if isinstance(a, ConcatEq):
        return f"{a.lhs} = {a.left}·{a.right}"
    return f"{a.lhs} = {describe_spec(a.spec)}({a.arg})"


def format_proof(root: ProofNode) -> str:
    """Line-oriented rendering: one node per line, children indented."""
    lines = []

    def walk(n, depth):
        indent = "  " * depth
        if n.sequent is None:
            head = "<formula>"
        elif n.sequent.atoms:
            head = ", ".join(describe_atom(a) for a in n.sequent.atoms)
        else:
            head = "<empty goal>"
        if n.rule:
            tag = f"  [{n.rule}" + (f": {n.note}]" if n.note else "]")
        elif not n.children:
            tag = "  [open]"
        else:
            tag = ""
        lines.append(indent + head + tag)
        for c in n.children:
            walk(c, depth + 1)

    walk(root, 0)
    return "\n".join(lines)


def format_model(model: dict) -> str:
    return "\n".join(f'{v} = "{model[v]}"' for v in sorted(model))
