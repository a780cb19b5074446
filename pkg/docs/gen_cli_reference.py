"""Regenerate docs/cli.md from the argument parser: python3 docs/gen_cli_reference.py"""

import os
from pathlib import Path

from catalysis.cli import build_parser


def render() -> str:
    os.environ["COLUMNS"] = "100"  # stable wrapping
    parser = build_parser()
    out = ["# `catalysis` command reference", "",
           "Generated from the argument parser. Do not edit by hand.", "",
           "```", parser.format_help().rstrip(), "```", ""]
    sub = next(a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction")
    for name, p in sub.choices.items():
        out += [f"## {name}", "", "```", p.format_help().rstrip(), "```", ""]
    return "\n".join(out)


if __name__ == "__main__":
    target = Path(__file__).with_name("cli.md")
    target.write_text(render())
    print(f"wrote {target}")
