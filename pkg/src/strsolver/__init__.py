"""String-constraint solving with regex-dependent functions.

The package decides satisfiability of straight-line string constraints whose
equations use `extract`, `replace`, and `replaceAll` with real-world regex
semantics (capturing groups, greedy/lazy quantifiers, replacement
references).  Regexes compile to prioritized streaming string transducers;
constraints are solved by propagating regular languages backwards through
pre-images of those transducers.
"""

__version__ = "0.1.0"
