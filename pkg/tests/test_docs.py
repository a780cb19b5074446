import re
from pathlib import Path

from catalysis.cli import build_parser
from catalysis.conference import load_conference, validate

DOCS = Path(__file__).resolve().parents[1] / "docs"


def test_example_conference_is_valid():
    c = load_conference(DOCS / "example_conference_v1.json")
    assert validate(c) == []
    assert len(c.fellows) == 4


def test_cli_reference_lists_every_subcommand():
    text = (DOCS / "cli.md").read_text()
    sub = next(a for a in build_parser()._actions if a.__class__.__name__ == "_SubParsersAction")
    documented = set(re.findall(r"^## (\S+)$", text, re.M))
    assert documented == set(sub.choices)
