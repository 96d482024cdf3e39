"""Regenerate the benchmark artifacts (eigenvalues, closed-loop runs, figures).

Equivalent to ``robinstab reproduce-paper``; extra arguments are passed through,
e.g. ``python scripts/reproduce_paper.py --out results/benchmark``.
"""
import sys

from robinstab.cli import run_cli

if __name__ == "__main__":
    raise SystemExit(run_cli(["reproduce-paper", *sys.argv[1:]]))
