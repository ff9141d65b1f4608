"""Script front end: an SMT-LIB-style command language over string
constraints.

A script is a sequence of commands — ``declare-fun`` (String constants),
``define-fun`` (string-valued terms, read as straight-line equations),
``assert``, ``check-sat``, ``get-model``, ``push``/``pop``, and
``set-option``.  Terms combine variables, string literals,
concatenation (``str.++``), the regex-dependent functions
``str.replace_cg``, ``str.replace_cg_all`` and ``str.extract``, and the
boolean layer ``str.in.re`` / ``not`` / ``and`` / ``or``.  Regular
expressions use the extended SMT-LIB vocabulary of
:mod:`strsolver.regex_ast` (``re.++``, ``re.union``, ``str.to.re``,
``(_ re.capture i)``, greedy/lazy ``re.*`` … ``re.loop?``).

Replacement arguments are regex terms built only from ``re.++``,
``str.to.re`` and ``(_ re.reference i)`` (reference 0 names the whole
match); a bare string literal is accepted as shorthand for its
``str.to.re``.

``(re.begin-anchor)``/``(re.end-anchor)`` may appear at the outermost
concatenation of a *replace pattern* only, where they pin the match to
the start/end of the subject; anywhere else they are rejected (plain
memberships already constrain the whole string).

String literals may not contain the two code points the replace
encodings reserve as context markers; such scripts are rejected up
front rather than given a silent reinterpretation.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import regex_ast as ra
from . import sexpr
from . import strfuncs as sf
from .calculus import (
    ConcatEq,
    Conj,
    Disj,
    FunEq,
    Member,
    Neg,
    SolveResult,
    StepBudget,
    VarEq,
    solve,
)
from .charset import Alphabet
from .fa import fa_word, regex_to_fa
from .regex_ast import print_regex, validate_groups


class ScriptError(ValueError):
    """A malformed or ill-scoped script; ``pos`` is a character offset
    into the source text when one is known."""

    def __init__(self, msg, pos=None):
        if pos is not None:
            super().__init__("%s (at offset %d)" % (msg, pos))
        else:
            super().__init__(msg)
        self.pos = pos


# --- command AST ------------------------------------------------------------


@dataclass(frozen=True)
class DeclareFun:
    name: str
    pos: int = 0


@dataclass(frozen=True)
class DefineFun:
    name: str
    body: object  # a term
    pos: int = 0


@dataclass(frozen=True)
class Assert:
    form: object  # a boolean term
    pos: int = 0


@dataclass(frozen=True)
class CheckSat:
    pos: int = 0


@dataclass(frozen=True)
class GetModel:
    pos: int = 0


@dataclass(frozen=True)
class Push:
    n: int = 1
    pos: int = 0


@dataclass(frozen=True)
class Pop:
    n: int = 1
    pos: int = 0


@dataclass(frozen=True)
class SetOption:
    option: str
    value: tuple = ()
    pos: int = 0


@dataclass(frozen=True)
class Script:
    commands: tuple = ()

    def __iter__(self):
        return iter(self.commands)

    def __len__(self):
        return len(self.commands)


# --- term AST ---------------------------------------------------------------


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TLit:
    value: str


@dataclass(frozen=True)
class TConcat:
    parts: tuple


@dataclass(frozen=True)
class TFun:
    """Application of a regex-dependent string function to a term."""

    spec: object  # strfuncs.Extract | Replace | ReplaceAll
    arg: object  # a term


@dataclass(frozen=True)
class FInRe:
    term: object
    regex: object  # regex_ast.Regex


@dataclass(frozen=True)
class FNot:
    body: object


@dataclass(frozen=True)
class FAnd:
    parts: tuple


@dataclass(frozen=True)
class FOr:
    parts: tuple


# --- parsing ----------------------------------------------------------------


def _require_literal(text: str, pos):
    for mark in (sf.MARK_OPEN, sf.MARK_CLOSE):
        if mark in text:
            raise ScriptError(
                "string literal contains reserved marker code point "
                f"U+{ord(mark):04X}",
                pos,
            )
    return text


def _numeral(form, what, pos) -> int:
    if not isinstance(form, str) or not form.isdigit():
        raise ScriptError(f"{what} expects a numeral, got {form!r}", pos)
    return int(form)


def _symbol(form, what, pos) -> str:
    if not isinstance(form, str):
        raise ScriptError(f"{what} expects a symbol, got {form!r}", pos)
    return form


def _regex(form, alphabet, pos) -> ra.Regex:
    try:
        e = ra.regex_from_sexpr(form, alphabet)
        validate_groups(e)
        return e
    except ra.RegexSyntaxError as exc:
        raise ScriptError(f"bad regular expression: {exc}", pos) from exc
    except ra.UnsupportedFeatureError as exc:
        raise ScriptError(f"unsupported regular expression: {exc}", pos) from exc


def _is_anchor(form, which) -> bool:
    return form == which or (
        isinstance(form, list) and len(form) == 1 and form[0] == which
    )


def _pattern(form, alphabet, pos):
    """A replace pattern: anchors may appear at the ends of the outermost
    concatenation (and only there); returns (regex, anchor_start,
    anchor_end)."""
    start = end = False
    if isinstance(form, list) and form and form[0] == "re.++":
        inner = form[1:]
        if inner and _is_anchor(inner[0], "re.begin-anchor"):
            start = True
            inner = inner[1:]
        if inner and _is_anchor(inner[-1], "re.end-anchor"):
            end = True
            inner = inner[:-1]
        form = ["re.++"] + inner
    elif _is_anchor(form, "re.begin-anchor"):
        # an anchor alone matches the empty string at the boundary
        return ra.Epsilon(), True, False
    elif _is_anchor(form, "re.end-anchor"):
        return ra.Epsilon(), False, True
    return _regex(form, alphabet, pos), start, end


def _replacement(form, alphabet, pos) -> tuple:
    """A replacement template: ``re.++`` over ``str.to.re`` literals and
    ``(_ re.reference i)``; a bare string literal stands for its own
    ``str.to.re``."""
    if isinstance(form, sexpr.StrLit):
        text = _require_literal(form.value, pos)
        return (sf.Lit(text),) if text else ()
    if form == "re.epsilon":
        return ()
    if isinstance(form, list) and form:
        head = form[0]
        if (
            len(form) == 3
            and head == "_"
            and form[1] == "re.reference"
        ):
            i = _numeral(form[2], "re.reference", pos)
            return (sf.WholeMatch() if i == 0 else sf.GroupRef(i),)
        if head in ("str.to.re", "str.to_re"):
            if len(form) != 2 or not isinstance(form[1], sexpr.StrLit):
                raise ScriptError(
                    "str.to.re in a replacement expects one string literal",
                    pos,
                )
            text = _require_literal(form[1].value, pos)
            return (sf.Lit(text),) if text else ()
        if head == "re.++":
            out: tuple = ()
            for part in form[1:]:
                out = out + _replacement(part, alphabet, pos)
            return out
    raise ScriptError(
        "replacement must use only re.++, str.to.re and (_ re.reference i); "
        f"got {form!r}",
        pos,
    )


def _group_indexes(e: ra.Regex) -> set:
    out = set()

    def walk(n):
        if isinstance(n, ra.Group):
            out.add(n.index)
            walk(n.body)
        elif isinstance(n, (ra.Union, ra.Concat)):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, (ra.Optional, ra.Star, ra.Plus, ra.Loop)):
            walk(n.body)

    walk(e)
    return out


def _check_references(spec, pos):
    groups = _group_indexes(spec.pattern)
    for seg in spec.replacement:
        if isinstance(seg, sf.GroupRef) and seg.index not in groups:
            raise ScriptError(
                f"replacement references group {seg.index}, "
                "which the pattern does not define",
                pos,
            )


class _Names:
    """Parse-time symbol table mirroring the push/pop scopes."""

    def __init__(self):
        self.scopes = [set()]

    def visible(self, name) -> bool:
        return any(name in s for s in self.scopes)

    def add(self, name):
        self.scopes[-1].add(name)

    def push(self, n):
        for _ in range(n):
            self.scopes.append(set())

    def pop(self, n, pos):
        if n >= len(self.scopes):
            raise ScriptError("pop below the initial scope", pos)
        for _ in range(n):
            self.scopes.pop()


def _term(form, alphabet, names, pos):
    if isinstance(form, sexpr.StrLit):
        return TLit(_require_literal(form.value, pos))
    if isinstance(form, str):
        if not names.visible(form):
            raise ScriptError(f"unknown symbol {form!r}", pos)
        return TVar(form)
    if not isinstance(form, list) or not form:
        raise ScriptError(f"cannot parse term {form!r}", pos)
    head = form[0]
    if isinstance(head, list):
        # ((_ str.extract i) e t) — the indexed-identifier spelling
        if len(head) == 3 and head[0] == "_" and head[1] == "str.extract":
            if len(form) != 3:
                raise ScriptError("str.extract expects a regex and a term", pos)
            i = _numeral(head[2], "str.extract index", pos)
            e = _regex(form[1], alphabet, pos)
            if i != 0 and i not in _group_indexes(e):
                raise ScriptError(
                    f"str.extract group {i} is not defined by the pattern", pos
                )
            return TFun(sf.Extract(i, e), _term(form[2], alphabet, names, pos))
        raise ScriptError(f"cannot parse term head {head!r}", pos)
    if head == "str.++":
        if len(form) < 3:
            raise ScriptError("str.++ expects at least two arguments", pos)
        return TConcat(
            tuple(_term(f, alphabet, names, pos) for f in form[1:])
        )
    if head in ("str.replace_cg", "str.replace_cg_all"):
        if len(form) != 4:
            raise ScriptError(
                f"{head} expects a term, a pattern and a replacement", pos
            )
        pattern, a_start, a_end = _pattern(form[2], alphabet, pos)
        rep = _replacement(form[3], alphabet, pos)
        cls = sf.ReplaceAll if head.endswith("_all") else sf.Replace
        spec = cls(pattern, rep, anchor_start=a_start, anchor_end=a_end)
        _check_references(spec, pos)
        return TFun(spec, _term(form[1], alphabet, names, pos))
    if head == "str.extract":
        if len(form) != 4:
            raise ScriptError(
                "str.extract expects a group index, a regex and a term", pos
            )
        i = _numeral(form[1], "str.extract index", pos)
        e = _regex(form[2], alphabet, pos)
        if i != 0 and i not in _group_indexes(e):
            raise ScriptError(
                f"str.extract group {i} is not defined by the pattern", pos
            )
        return TFun(sf.Extract(i, e), _term(form[3], alphabet, names, pos))
    raise ScriptError(f"unknown term operator {head!r}", pos)


def _formula(form, alphabet, names, pos):
    if not isinstance(form, list) or not form:
        raise ScriptError(f"expected a boolean term, got {form!r}", pos)
    head = form[0]
    if head in ("str.in.re", "str.in_re"):
        if len(form) != 3:
            raise ScriptError(f"{head} expects a term and a regex", pos)
        t = _term(form[1], alphabet, names, pos)
        e = _regex(form[2], alphabet, pos)
        return FInRe(t, e)
    if head == "not":
        if len(form) != 2:
            raise ScriptError("not expects one argument", pos)
        return FNot(_formula(form[1], alphabet, names, pos))
    if head in ("and", "or"):
        if len(form) < 2:
            raise ScriptError(f"{head} expects at least one argument", pos)
        parts = tuple(_formula(f, alphabet, names, pos) for f in form[1:])
        return FAnd(parts) if head == "and" else FOr(parts)
    raise ScriptError(f"expected a boolean term, got head {head!r}", pos)


def _command(form, pos, alphabet, names):
    if not isinstance(form, list) or not form:
        raise ScriptError(f"expected a command, got {form!r}", pos)
    head = form[0]
    if head == "declare-fun":
        if (
            len(form) != 4
            or form[2] != []
            or form[3] != "String"
        ):
            raise ScriptError(
                "declare-fun expects (declare-fun name () String)", pos
            )
        name = _symbol(form[1], "declare-fun", pos)
        if names.visible(name):
            raise ScriptError(f"symbol {name!r} is already declared", pos)
        names.add(name)
        return DeclareFun(name, pos)
    if head == "define-fun":
        if len(form) != 5 or form[2] != [] or form[3] != "String":
            raise ScriptError(
                "define-fun expects (define-fun name () String term)", pos
            )
        name = _symbol(form[1], "define-fun", pos)
        if names.visible(name):
            raise ScriptError(f"symbol {name!r} is already declared", pos)
        body = _term(form[4], alphabet, names, pos)
        names.add(name)
        return DefineFun(name, body, pos)
    if head == "assert":
        if len(form) != 2:
            raise ScriptError("assert expects one boolean term", pos)
        return Assert(_formula(form[1], alphabet, names, pos), pos)
    if head == "check-sat":
        if len(form) != 1:
            raise ScriptError("check-sat takes no arguments", pos)
        return CheckSat(pos)
    if head == "get-model":
        if len(form) != 1:
            raise ScriptError("get-model takes no arguments", pos)
        return GetModel(pos)
    if head in ("push", "pop"):
        if len(form) == 1:
            n = 1
        elif len(form) == 2:
            n = _numeral(form[1], head, pos)
        else:
            raise ScriptError(f"{head} expects at most one numeral", pos)
        if head == "push":
            names.push(n)
            return Push(n, pos)
        names.pop(n, pos)
        return Pop(n, pos)
    if head == "set-option":
        if len(form) < 2:
            raise ScriptError("set-option expects an option name", pos)
        return SetOption(_symbol(form[1], "set-option", pos), tuple(form[2:]), pos)
    raise ScriptError(f"unknown command {head!r}", pos)


def parse_script(text: str, alphabet: Alphabet | None = None) -> Script:
    """Parse a script; raises :class:`ScriptError` with a character
    offset on syntax, arity, vocabulary, and scoping mistakes."""
    alphabet = alphabet or Alphabet.printable_ascii()
    try:
        forms = sexpr.parse_all_pos(text)
    except sexpr.SexprError as exc:
        raise ScriptError(exc.msg, exc.pos) from exc
    names = _Names()
    return Script(
        tuple(_command(form, pos, alphabet, names) for form, pos in forms)
    )


# --- execution --------------------------------------------------------------


class _Frame:
    def __init__(self):
        self.decls: list[str] = []
        self.defs: list = []  # DefineFun commands
        self.asserts: list = []  # formula ASTs


@dataclass
class CheckOutcome:
    """One ``check-sat``'s verdict plus everything needed to audit it."""

    status: str  # "sat" | "unsat" | "unknown"
    result: SolveResult
    formula: object  # the Conj handed to the solver
    model: dict | None  # verified model for "sat"
    reason: str = ""


def format_model_lines(names, model) -> str:
    """SMT-LIB ``define-fun`` lines for the given names; a name the
    solver left unconstrained prints as the empty string."""
    out = []
    for name in names:
        value = model.get(name, "") if model else ""
        out.append(f'(define-fun {name} () String "{_quote(value)}")')
    return "\n".join(out)


def _quote(s: str) -> str:
    return s.replace('"', '""')


class Interpreter:
    """Executes commands one at a time; ``run_command`` returns the text
    a conforming front end should print for that command (or None)."""

    def __init__(
        self,
        alphabet: Alphabet | None = None,
        timeout_steps: int | None = None,
    ):
        self.alphabet = alphabet or Alphabet.printable_ascii()
        self.frames = [_Frame()]
        self.checks: list[CheckOutcome] = []
        self.last_sat: CheckOutcome | None = None
        self.options: dict = {}
        self.timeout_steps = timeout_steps
        self._regex_fas: dict = {}

    # -- state views -------------------------------------------------------

    def declared(self) -> list:
        return [n for f in self.frames for n in f.decls]

    def defined(self) -> list:
        return [d.name for f in self.frames for d in f.defs]

    def assertions(self) -> list:
        """The current assertion multiset (document order)."""
        return [a for f in self.frames for a in f.asserts]

    def _known(self, name) -> bool:
        return any(
            name in f.decls or any(d.name == name for d in f.defs)
            for f in self.frames
        )

    # -- command dispatch --------------------------------------------------

    def run_command(self, cmd):
        if isinstance(cmd, DeclareFun):
            if self._known(cmd.name):
                raise ScriptError(
                    f"symbol {cmd.name!r} is already declared", cmd.pos
                )
            self.frames[-1].decls.append(cmd.name)
            return None
        if isinstance(cmd, DefineFun):
            if self._known(cmd.name):
                raise ScriptError(
                    f"symbol {cmd.name!r} is already declared", cmd.pos
                )
            self._check_term_symbols(cmd.body, cmd.pos)
            self.frames[-1].defs.append(cmd)
            return None
        if isinstance(cmd, Assert):
            self._check_formula_symbols(cmd.form, cmd.pos)
            self.frames[-1].asserts.append(cmd.form)
            return None
        if isinstance(cmd, Push):
            for _ in range(cmd.n):
                self.frames.append(_Frame())
            return None
        if isinstance(cmd, Pop):
            if cmd.n >= len(self.frames):
                raise ScriptError("pop below the initial frame", cmd.pos)
            for _ in range(cmd.n):
                self.frames.pop()
            return None
        if isinstance(cmd, SetOption):
            self.options[cmd.option] = cmd.value
            return None
        if isinstance(cmd, CheckSat):
            outcome = self._check_sat()
            self.checks.append(outcome)
            if outcome.status == "sat":
                self.last_sat = outcome
            return outcome.status
        if isinstance(cmd, GetModel):
            if self.last_sat is None:
                raise ScriptError(
                    "get-model requires a preceding sat check-sat", cmd.pos
                )
            names = self.declared() + self.defined()
            return format_model_lines(names, self.last_sat.model)
        raise ScriptError(f"unknown command object {cmd!r}")

    # -- symbol hygiene for programmatically built scripts -----------------

    def _check_term_symbols(self, term, pos):
        if isinstance(term, TVar):
            if not self._known(term.name):
                raise ScriptError(f"unknown symbol {term.name!r}", pos)
        elif isinstance(term, TConcat):
            for p in term.parts:
                self._check_term_symbols(p, pos)
        elif isinstance(term, TFun):
            self._check_term_symbols(term.arg, pos)

    def _check_formula_symbols(self, form, pos):
        if isinstance(form, FInRe):
            self._check_term_symbols(form.term, pos)
        elif isinstance(form, FNot):
            self._check_formula_symbols(form.body, pos)
        elif isinstance(form, (FAnd, FOr)):
            for p in form.parts:
                self._check_formula_symbols(p, pos)

    # -- constraint assembly -----------------------------------------------

    def _fresh(self, used, hint="t"):
        i = len(used)
        while True:
            name = f"_{hint}{i}"
            if name not in used:
                used.add(name)
                return name
            i += 1

    def _regex_fa(self, e):
        key = id(e)
        if key not in self._regex_fas:
            self._regex_fas[key] = (e, regex_to_fa(e, self.alphabet))
        return self._regex_fas[key][1]

    def _define(self, lhs, term, used, atoms):
        """Atoms forcing ``lhs`` to equal the term's value."""
        if isinstance(term, TVar):
            atoms.append(VarEq(lhs, term.name))
        elif isinstance(term, TLit):
            atoms.append(
                Member(
                    lhs,
                    fa_word(self.alphabet, term.value),
                    label=f'"{term.value}"',
                )
            )
        elif isinstance(term, TConcat):
            parts = [self._value_var(p, used, atoms) for p in term.parts]
            cur = parts[0]
            for nxt in parts[1:-1]:
                acc = self._fresh(used, "cat")
                atoms.append(ConcatEq(acc, cur, nxt))
                cur = acc
            atoms.append(ConcatEq(lhs, cur, parts[-1]))
        elif isinstance(term, TFun):
            arg = self._value_var(term.arg, used, atoms)
            atoms.append(FunEq(lhs, term.spec, arg))
        else:
            raise ScriptError(f"cannot evaluate term {term!r}")

    def _value_var(self, term, used, atoms):
        """A variable carrying the term's value, defining it if needed."""
        if isinstance(term, TVar):
            return term.name
        v = self._fresh(used)
        self._define(v, term, used, atoms)
        return v

    def _translate_formula(self, form, used, defs):
        if isinstance(form, FInRe):
            v = self._value_var(form.term, used, defs)
            return Member(v, self._regex_fa(form.regex), label=print_regex(form.regex))
        if isinstance(form, FNot):
            return Neg(self._translate_formula(form.body, used, defs))
        if isinstance(form, (FAnd, FOr)):
            parts = tuple(
                self._translate_formula(p, used, defs) for p in form.parts
            )
            return Conj(parts) if isinstance(form, FAnd) else Disj(parts)
        raise ScriptError(f"cannot translate formula {form!r}")

    def current_formula(self):
        """The conjunction of every definition and assertion in scope.

        Definitions of terms nested inside formulas are hoisted to the
        top level: the string functions are deterministic, so naming a
        subterm's value commutes with the boolean structure around it.
        """
        used = set(self.declared()) | set(self.defined())
        parts: list = []
        for f in self.frames:
            for d in f.defs:
                self._define(d.name, d.body, used, parts)
        for f in self.frames:
            for a in f.asserts:
                defs: list = []
                translated = self._translate_formula(a, used, defs)
                parts.extend(defs)
                parts.append(translated)
        return Conj(tuple(parts))

    def _check_sat(self) -> CheckOutcome:
        phi = self.current_formula()
        budget = (
            StepBudget(self.timeout_steps)
            if self.timeout_steps is not None
            else None
        )
        result = solve(phi, self.alphabet, budget=budget)
        reason = result.reason
        if (
            result.status == "unknown"
            and self.timeout_steps is not None
            and "budget" in reason
        ):
            reason = "timeout"
        return CheckOutcome(
            status=result.status,
            result=result,
            formula=phi,
            model=result.model if result.status == "sat" else None,
            reason=reason,
        )


def execute(
    script: Script,
    alphabet: Alphabet | None = None,
    timeout_steps: int | None = None,
) -> list:
    """Run a parsed script; returns the printable outputs in order (one
    ``sat``/``unsat``/``unknown`` entry per ``check-sat``, one model
    block per ``get-model``)."""
    itp = Interpreter(alphabet, timeout_steps)
    out = []
    for cmd in script:
        r = itp.run_command(cmd)
        if r is not None:
            out.append(r)
    return out
