"""The reference engine must reproduce the frozen node.js fixture exactly.

tests/data/js_behavior.json is generated by make_js_fixture.mjs on a real
JavaScript engine; everything downstream (transducer compilation, the
string functions) is ultimately judged against refmatch, so refmatch itself
is judged here against the engine.
"""

import json
from pathlib import Path

import pytest

import refmatch
from strsolver.regex_ast import parse_regex

FIXTURE = json.loads(
    (Path(__file__).parent / "data" / "js_behavior.json").read_text()
)


def _params():
    return [pytest.param(case, id=case["id"]) for case in FIXTURE]


@pytest.mark.parametrize("case", _params())
def test_fixture_case(case):
    ast = parse_regex(case["regex"])
    s = case["input"]
    if case["kind"] == "exec":
        r = refmatch.first_match(ast, s)
        if case["expected"] is None:
            assert r is None
            return
        assert r is not None
        start, end, caps = r
        groups = [s[start:end]] + [
            caps.get(i) for i in range(1, len(case["expected"]["groups"]))
        ]
        assert start == case["expected"]["index"]
        assert groups == case["expected"]["groups"]
    else:
        rep = refmatch.parse_template(case["replacement"])
        got = refmatch.replace(
            ast,
            s,
            rep,
            count_all=(case["kind"] == "replace-all"),
            anchor_start=case.get("anchorStart", False),
            anchor_end=case.get("anchorEnd", False),
        )
        assert got == case["expected"]


def test_lang_accepts_basics():
    ast = parse_regex("(a|b)*abb")
    assert refmatch.lang_accepts(ast, "abb")
    assert refmatch.lang_accepts(ast, "aababb")
    assert not refmatch.lang_accepts(ast, "ab")
    assert not refmatch.lang_accepts(ast, "abba")


def test_lang_accepts_loop():
    ast = parse_regex("a{2,4}")
    assert [refmatch.lang_accepts(ast, "a" * n) for n in range(6)] == [
        False, False, True, True, True, False,
    ]
