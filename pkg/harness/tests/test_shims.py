"""Wire-contract tests for the shims, over a real subprocess boundary."""

from __future__ import annotations

import importlib.util
import subprocess
import sys

import pytest

pytest.importorskip("pixgen_harness")

from pixgen_harness import (
    EXIT_EXCEPTION,
    EXIT_IMPORT_FAILURE,
    EXIT_NO_FIGURE,
    EXIT_OK,
    EXIT_USAGE,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

MATPLOTLIB_SOURCE = """
import matplotlib.pyplot as plt

fig, ax = plt.subplots()
ax.plot([0, 1, 2], [3, 1, 2])
ax.set_title("tiny line")
"""


def _installed(module: str) -> bool:
    return importlib.util.find_spec(module) is not None


def _run(tool: str, source: str, tmp_path):
    src = tmp_path / "source.py"
    src.write_text(source, encoding="utf-8")
    out = tmp_path / "out.png"
    proc = subprocess.run(
        [sys.executable, "-m", "pixgen_harness", tool, str(src), str(out)],
        capture_output=True,
        text=True,
        timeout=120,
        cwd=tmp_path,
    )
    return proc, out


@pytest.mark.skipif(not _installed("matplotlib"), reason="matplotlib not installed")
def test_matplotlib_source_becomes_png(tmp_path):
    proc, out = _run("matplotlib", MATPLOTLIB_SOURCE, tmp_path)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert out.read_bytes().startswith(PNG_MAGIC)


@pytest.mark.skipif(not _installed("matplotlib"), reason="matplotlib not installed")
def test_source_without_figure_exits_no_figure(tmp_path):
    proc, out = _run("matplotlib", "x = 40 + 2\n", tmp_path)
    assert proc.returncode == EXIT_NO_FIGURE
    assert not out.exists()


@pytest.mark.skipif(not _installed("matplotlib"), reason="matplotlib not installed")
def test_raising_source_exits_with_traceback(tmp_path):
    proc, out = _run("matplotlib", "1 / 0\n", tmp_path)
    assert proc.returncode == EXIT_EXCEPTION
    assert "ZeroDivisionError" in proc.stderr
    assert not out.exists()


@pytest.mark.skipif(not _installed("matplotlib"), reason="matplotlib not installed")
def test_clean_sys_exit_still_saves_figure(tmp_path):
    source = MATPLOTLIB_SOURCE + "\nimport sys\nsys.exit(0)\n"
    proc, out = _run("matplotlib", source, tmp_path)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert out.read_bytes().startswith(PNG_MAGIC)


@pytest.mark.skipif(_installed("kaleido"), reason="plotly export engine present")
def test_plotly_without_export_engine_is_import_failure(tmp_path):
    proc, _ = _run("plotly", "fig = None\n", tmp_path)
    assert proc.returncode == EXIT_IMPORT_FAILURE


@pytest.mark.skipif(_installed("rdkit"), reason="rdkit present")
def test_rdkit_missing_is_import_failure(tmp_path):
    proc, _ = _run("rdkit", "mol = None\n", tmp_path)
    assert proc.returncode == EXIT_IMPORT_FAILURE


@pytest.mark.skipif(
    not (_installed("plotly") and _installed("kaleido")),
    reason="plotly export stack not installed",
)
def test_plotly_source_becomes_png(tmp_path):
    source = (
        "import plotly.graph_objects as go\n"
        "fig = go.Figure(go.Bar(x=['a', 'b'], y=[2, 5]))\n"
    )
    proc, out = _run("plotly", source, tmp_path)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert out.read_bytes().startswith(PNG_MAGIC)


@pytest.mark.skipif(not _installed("rdkit"), reason="rdkit not installed")
def test_rdkit_source_becomes_png(tmp_path):
    source = "from rdkit import Chem\nmol = Chem.MolFromSmiles('c1ccccc1O')\n"
    proc, out = _run("rdkit", source, tmp_path)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_wrong_argument_count_is_usage_error(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "pixgen_harness", "matplotlib"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == EXIT_USAGE


def test_unknown_tool_is_usage_error(tmp_path):
    proc, _ = _run("gnuplot", "pass\n", tmp_path)
    assert proc.returncode == EXIT_USAGE


def test_unreadable_source_is_usage_error(tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "pixgen_harness",
            "matplotlib",
            str(tmp_path / "absent.py"),
            str(tmp_path / "out.png"),
        ],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == EXIT_USAGE
