"""Command-line front end for the fixture rasterizer.

Run as ``python -m pixgen.render.fixture_cli SOURCE OUTPUT``. Exists so the
fixture tool goes through exactly the same subprocess machinery (timeouts,
process groups, stderr capture, exit codes) as every external render tool.
"""

from __future__ import annotations

import argparse
import sys

from .fixture import FixtureFailure, FixtureSourceError, render_fixture_source


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pixgen.render.fixture_cli",
        description="Rasterize a fixture drawing-language source to PNG.",
    )
    parser.add_argument("source", help="fixture source file")
    parser.add_argument("output", help="output PNG path")
    args = parser.parse_args(argv)

    from PIL import Image

    try:
        text = open(args.source, encoding="utf-8").read()
    except OSError as exc:
        print(f"cannot read source: {exc}", file=sys.stderr)
        return 1
    try:
        pixels = render_fixture_source(text)
    except FixtureSourceError as exc:
        print(f"fixture source error: {exc}", file=sys.stderr)
        return 1
    except FixtureFailure as exc:
        print(f"fixture failure: {exc}", file=sys.stderr)
        return 1
    Image.fromarray(pixels, mode="RGB").save(args.output, format="PNG")
    return 0


if __name__ == "__main__":
    sys.exit(main())
