"""Command-line driver for the script front end.

Reads a constraint script (file argument or stdin), prints one verdict
line per ``check-sat`` plus model blocks for ``get-model``, and can dump
proofs/models, enforce a deterministic timeout, and emit JavaScript
validation artifacts for the regex-dependent functions of satisfiable
checks.

Exit codes: 0 clean run, 1 solver/execution error, 2 parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import strfuncs as sf
from .calculus import Conj, Disj, FunEq, Neg, format_proof
from .charset import Alphabet, CharSet
from .regex_ast import print_regex
from .smt import (
    CheckSat,
    Interpreter,
    ScriptError,
    format_model_lines,
    parse_script,
)

# Conversion rate between the wall-clock flag and the solver's abstract
# step budget; calibrated so pre-image exploration (the dominant cost,
# charged one step per state) stays within the same order of magnitude.
STEPS_PER_MS = 20


def resolve_alphabet(spec: str) -> Alphabet:
    """``ascii`` (printable), ``byte`` (0x00–0xFF), or a file whose
    characters — newlines excluded — form the alphabet."""
    if spec == "ascii":
        return Alphabet.printable_ascii()
    if spec == "byte":
        return Alphabet(CharSet.range(chr(0), chr(0xFF)))
    with open(spec, encoding="utf-8") as fh:
        chars = set(fh.read()) - {"\n", "\r"}
    if not chars:
        raise ValueError(f"alphabet file {spec!r} has no characters")
    return Alphabet.of("".join(sorted(chars)))


def _comment(text: str) -> str:
    return "\n".join("; " + line for line in text.splitlines())


# --- oracle emission --------------------------------------------------------


def _fun_atoms(phi) -> list:
    out = []

    def walk(f):
        if isinstance(f, FunEq):
            out.append(f)
        elif isinstance(f, (Conj, Disj)):
            for p in f.parts:
                walk(p)
        elif isinstance(f, Neg):
            walk(f.body)

    walk(phi)
    return out


def _js_replacement(rep) -> str:
    parts = []
    for seg in rep:
        if isinstance(seg, sf.Lit):
            parts.append(seg.text.replace("$", "$$"))
        elif isinstance(seg, sf.GroupRef):
            parts.append(f"${seg.index}")
        elif isinstance(seg, sf.WholeMatch):
            parts.append("$&")
        elif isinstance(seg, sf.Before):
            parts.append("$`")
        elif isinstance(seg, sf.After):
            parts.append("$'")
    return "".join(parts)


def oracle_case(spec, w: str, alphabet: Alphabet):
    """Manifest entry validating one function application on one input;
    None when the application has no JavaScript counterpart in the
    manifest vocabulary (extraction of a group other than 1)."""
    expected = sf.apply_spec(spec, w, alphabet)
    if isinstance(spec, sf.Extract):
        if spec.group != 1:
            return None
        # extraction is a whole-string match; anchor the JS pattern
        return {
            "kind": "match-group-1",
            "regex": "^" + print_regex(spec.regex) + "$",
            "input": w,
            "expected": expected,
        }
    source = print_regex(spec.pattern)
    if spec.anchor_start:
        source = "^" + source
    if spec.anchor_end:
        source = source + "$"
    return {
        "kind": "replace-all" if isinstance(spec, sf.ReplaceAll) else "replace",
        "regex": source,
        "input": w,
        "replacement": _js_replacement(spec.replacement),
        "expected": expected,
    }


def _js_regex_literal(source: str, flags: str = "") -> str:
    return "/" + source.replace("/", "\\/") + "/" + flags


def _program(case) -> str:
    """A paper-style standalone JavaScript program for one case."""
    subject = json.dumps(case["input"])
    if case["kind"] == "match-group-1":
        reg = _js_regex_literal(case["regex"])
        if case["expected"] is None:
            return (
                f"var x = {subject};\n"
                f"var m = x.match({reg});\n"
                "console.log(m === null || m[1] === undefined ? null : m[1]);\n"
            )
        return f"var x = {subject};\nconsole.log(x.match({reg})[1]);\n"
    flags = "g" if case["kind"] == "replace-all" else ""
    reg = _js_regex_literal(case["regex"], flags)
    rep = json.dumps(case["replacement"])
    return f"var x = {subject};\nconsole.log(x.replace({reg}, {rep}));\n"


def emit_oracle_dir(itp: Interpreter, alphabet: Alphabet, path: str) -> int:
    """Write ``manifest.json`` plus one ``.js`` program per case for
    every function application of every satisfiable check; returns the
    case count."""
    os.makedirs(path, exist_ok=True)
    cases = []
    for outcome in itp.checks:
        if outcome.status != "sat" or outcome.model is None:
            continue
        for eq in _fun_atoms(outcome.formula):
            w = outcome.model.get(eq.arg, "")
            case = oracle_case(eq.spec, w, alphabet)
            if case is None:
                continue
            case = {"id": f"c{len(cases):03d}", **case}
            cases.append(case)
            with open(
                os.path.join(path, case["id"] + ".js"), "w", encoding="utf-8"
            ) as fh:
                fh.write(_program(case))
    with open(
        os.path.join(path, "manifest.json"), "w", encoding="utf-8"
    ) as fh:
        json.dump({"cases": cases}, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return len(cases)


# --- entry point ------------------------------------------------------------


def cli_main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="strsolver",
        description="String-constraint solver for scripts with "
        "regex-dependent string functions.",
    )
    p.add_argument(
        "script",
        nargs="?",
        default="-",
        help="input script; '-' or absent reads stdin",
    )
    p.add_argument(
        "--alphabet",
        default="ascii",
        metavar="SPEC",
        help="ascii | byte | FILE with the alphabet's characters",
    )
    p.add_argument(
        "--dump-proof",
        action="store_true",
        help="print each check's proof tree as comment lines",
    )
    p.add_argument(
        "--dump-model",
        action="store_true",
        help="print a model block after each satisfiable check",
    )
    p.add_argument(
        "--timeout-ms",
        type=int,
        default=None,
        metavar="N",
        help="deterministic budget: interrupt a check after roughly N ms "
        "of solver work and answer unknown",
    )
    p.add_argument(
        "--oracle-dir",
        default=None,
        metavar="PATH",
        help="emit JavaScript validation programs and a manifest for "
        "satisfiable checks",
    )
    args = p.parse_args(argv)

    try:
        alphabet = resolve_alphabet(args.alphabet)
    except (OSError, ValueError) as exc:
        print(f"alphabet error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.script == "-":
            text = sys.stdin.read()
        else:
            with open(args.script, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        print(f"cannot read script: {exc}", file=sys.stderr)
        return 2

    try:
        script = parse_script(text, alphabet)
    except ScriptError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2

    timeout_steps = (
        args.timeout_ms * STEPS_PER_MS if args.timeout_ms is not None else None
    )
    itp = Interpreter(alphabet, timeout_steps)
    for cmd in script:
        try:
            out = itp.run_command(cmd)
        except ScriptError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except Exception as exc:  # solver-level failure: report, don't crash
            print(f"solver error: {exc}", file=sys.stderr)
            return 1
        if out is not None:
            print(out)
        if isinstance(cmd, CheckSat):
            last = itp.checks[-1]
            if last.status == "unknown" and last.reason:
                print(_comment("reason: " + last.reason))
            if args.dump_proof:
                print(_comment(format_proof(last.result.proof)))
            if args.dump_model and last.status == "sat":
                print(
                    format_model_lines(
                        itp.declared() + itp.defined(), last.model
                    )
                )

    if args.oracle_dir is not None:
        try:
            n = emit_oracle_dir(itp, alphabet, args.oracle_dir)
        except OSError as exc:
            print(f"cannot write oracle cases: {exc}", file=sys.stderr)
            return 1
        print(_comment(f"wrote {n} oracle cases to {args.oracle_dir}"))
    return 0


if __name__ == "__main__":
    raise SystemExit(cli_main())
