"""Tool shims and the command-line entrypoint.

Generated code is executed as-is after backend setup; it is never
rewritten. Each tool defines how the produced artifact is found and
saved, everything else (argument handling, PNG verification, exception
reporting) is shared.
"""

from __future__ import annotations

import os
import sys
import traceback
from pathlib import Path

EXIT_OK = 0
EXIT_EXCEPTION = 1
EXIT_USAGE = 2
EXIT_IMPORT_FAILURE = 3
EXIT_NO_FIGURE = 4

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _exec_source(source: str, filename: str) -> dict:
    """Run the source in a fresh module namespace.

    sys.exit(0) from generated code counts as normal completion; any
    other SystemExit propagates like an ordinary exception.
    """
    namespace: dict = {"__name__": "__main__", "__file__": filename}
    try:
        exec(compile(source, filename, "exec"), namespace)
    except SystemExit as exc:
        if exc.code not in (None, 0):
            raise
    return namespace


def run_matplotlib(source: str, filename: str, output: str) -> int:
    os.environ["MPLBACKEND"] = "Agg"
    try:
        import matplotlib

        matplotlib.use("Agg", force=True)
        import matplotlib.pyplot as plt
    except ImportError:
        traceback.print_exc()
        return EXIT_IMPORT_FAILURE

    _exec_source(source, filename)
    fignums = plt.get_fignums()
    if not fignums:
        print("no matplotlib figure was created", file=sys.stderr)
        return EXIT_NO_FIGURE
    figure = plt.figure(fignums[-1])
    figure.savefig(output, format="png")
    return EXIT_OK


def run_plotly(source: str, filename: str, output: str) -> int:
    try:
        import plotly.graph_objects as go
        import kaleido  # noqa: F401  the PNG export engine is part of the tool
    except ImportError:
        traceback.print_exc()
        return EXIT_IMPORT_FAILURE

    namespace = _exec_source(source, filename)
    figure = namespace.get("fig")
    if not isinstance(figure, go.Figure):
        figure = next(
            (v for v in namespace.values() if isinstance(v, go.Figure)), None
        )
    if figure is None:
        print("no plotly figure was created", file=sys.stderr)
        return EXIT_NO_FIGURE
    figure.write_image(output, format="png")
    return EXIT_OK


def run_rdkit(source: str, filename: str, output: str) -> int:
    try:
        from rdkit import Chem
        from rdkit.Chem import Draw
    except ImportError:
        traceback.print_exc()
        return EXIT_IMPORT_FAILURE

    namespace = _exec_source(source, filename)
    mol = namespace.get("mol")
    if not isinstance(mol, Chem.Mol):
        mol = next(
            (v for v in namespace.values() if isinstance(v, Chem.Mol)), None
        )
    if mol is None:
        print("no molecule was created", file=sys.stderr)
        return EXIT_NO_FIGURE
    image = Draw.MolToImage(mol, size=(480, 480))
    image.save(output, format="PNG")
    return EXIT_OK


SHIMS = {
    "matplotlib": run_matplotlib,
    "plotly": run_plotly,
    "rdkit": run_rdkit,
}


def _verify_png(output: str) -> int:
    path = Path(output)
    try:
        header = path.read_bytes()[: len(PNG_MAGIC)]
    except OSError:
        print(f"shim reported success but wrote no file at {output}", file=sys.stderr)
        return EXIT_NO_FIGURE
    if header != PNG_MAGIC:
        print(f"output at {output} is not a PNG", file=sys.stderr)
        return EXIT_EXCEPTION
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 3:
        print(
            "usage: python -m pixgen_harness {matplotlib|plotly|rdkit} SOURCE OUTPUT",
            file=sys.stderr,
        )
        return EXIT_USAGE
    tool, source_path, output = args
    shim = SHIMS.get(tool)
    if shim is None:
        print(f"unknown tool {tool!r}; expected one of {sorted(SHIMS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        source = Path(source_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read source {source_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        status = shim(source, source_path, output)
    except Exception:
        traceback.print_exc()
        return EXIT_EXCEPTION
    if status != EXIT_OK:
        return status
    return _verify_png(output)
