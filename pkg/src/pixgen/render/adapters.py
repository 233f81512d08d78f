"""Per-tool render adapters: thin subprocess wrappers around external tools.

Each adapter knows how to spell one tool's invocation and how to map its
exit status onto the error taxonomy. Availability is probed up front so a
missing binary surfaces as ToolMissingError, which test suites treat as a
skip, never a failure. The fixture adapter has no external dependency and
anchors all hermetic tests.
"""

from __future__ import annotations

import importlib.util
import shutil
import sys
from abc import ABC, abstractmethod
from pathlib import Path

from ..errors import (
    CompileError,
    NoOutputImageError,
    ToolMissingError,
)
from .sandbox import SandboxPolicy, SandboxResult, run_sandboxed

HARNESS_MODULE = "pixgen_harness"

# Exit codes of the harness wire contract (see its module docstring).
_HARNESS_IMPORT_FAILURE = 3
_HARNESS_NO_FIGURE = 4

PDF_RASTER_DPI = 144


class ToolAdapter(ABC):
    """One tool's source naming, availability probe and invocation."""

    tool: str
    source_suffix: str

    @abstractmethod
    def missing_reason(self) -> str | None:
        """None when the tool can run here, else why it cannot."""

    @abstractmethod
    def render(self, source: str, workdir: Path, policy: SandboxPolicy) -> Path:
        """Write source into workdir, run the tool, return the PNG path."""

    def require_available(self) -> None:
        reason = self.missing_reason()
        if reason is not None:
            raise ToolMissingError(f"{self.tool}: {reason}")

    def _write_source(self, workdir: Path, source: str) -> Path:
        path = workdir / f"source{self.source_suffix}"
        path.write_text(source, encoding="utf-8")
        return path

    def _check(self, result: SandboxResult, step: str) -> None:
        if result.exit_code != 0:
            raise CompileError(
                f"{self.tool}: {step} exited {result.exit_code}",
                stderr=result.stderr,
            )

    def _expect_output(self, path: Path) -> Path:
        if not path.is_file() or path.stat().st_size == 0:
            raise NoOutputImageError(f"{self.tool}: no output image at {path.name}")
        return path


def _which_any(*names: str) -> str | None:
    for name in names:
        found = shutil.which(name)
        if found:
            return found
    return None


class FixtureAdapter(ToolAdapter):
    """Hermetic adapter running the bundled declarative rasterizer."""

    tool = "fixture"
    source_suffix = ".fix"

    def missing_reason(self) -> str | None:
        return None

    def render(self, source: str, workdir: Path, policy: SandboxPolicy) -> Path:
        src = self._write_source(workdir, source)
        out = workdir / "out.png"
        result = run_sandboxed(
            [sys.executable, "-m", "pixgen.render.fixture_cli", str(src), str(out)],
            cwd=str(workdir),
            policy=policy,
        )
        self._check(result, "fixture rasterizer")
        return self._expect_output(out)


class HarnessAdapter(ToolAdapter):
    """Python plotting/chemistry tools executed via the harness shim.

    The shim is a separate package; when it is not installed the tool is
    simply unavailable. Exit 3 from the shim means the tool library itself
    failed to import, which is also a missing-tool condition.
    """

    source_suffix = ".py"

    def __init__(self, tool: str):
        self.tool = tool

    def missing_reason(self) -> str | None:
        if importlib.util.find_spec(HARNESS_MODULE) is None:
            return f"harness module {HARNESS_MODULE} not installed"
        return None

    def render(self, source: str, workdir: Path, policy: SandboxPolicy) -> Path:
        src = self._write_source(workdir, source)
        out = workdir / "out.png"
        result = run_sandboxed(
            [sys.executable, "-m", HARNESS_MODULE, self.tool, str(src), str(out)],
            cwd=str(workdir),
            policy=policy,
        )
        if result.exit_code == _HARNESS_IMPORT_FAILURE:
            raise ToolMissingError(
                f"{self.tool}: library import failed in harness",
                stderr=result.stderr,
            )
        if result.exit_code == _HARNESS_NO_FIGURE:
            raise NoOutputImageError(
                f"{self.tool}: source produced no figure", stderr=result.stderr
            )
        self._check(result, "harness")
        return self._expect_output(out)


class CommandAdapter(ToolAdapter):
    """Generic single-command adapter: binary SRC -> PNG."""

    def __init__(self, tool: str, suffix: str, binaries: tuple[str, ...]):
        self.tool = tool
        self.source_suffix = suffix
        self._binaries = binaries

    def missing_reason(self) -> str | None:
        if _which_any(*self._binaries) is None:
            return f"none of {', '.join(self._binaries)} on PATH"
        return None

    def command(self, binary: str, src: Path, out: Path) -> list[str]:
        raise NotImplementedError

    def render(self, source: str, workdir: Path, policy: SandboxPolicy) -> Path:
        binary = _which_any(*self._binaries)
        if binary is None:
            raise ToolMissingError(f"{self.tool}: binary not found")
        src = self._write_source(workdir, source)
        out = workdir / "out.png"
        result = run_sandboxed(
            self.command(binary, src, out), cwd=str(workdir), policy=policy
        )
        self._check(result, Path(binary).name)
        return self._expect_output(out)


class GraphvizAdapter(CommandAdapter):
    def __init__(self):
        super().__init__("graphviz", ".dot", ("dot",))

    def command(self, binary, src, out):
        return [binary, "-Tpng", str(src), "-o", str(out)]


class MermaidAdapter(CommandAdapter):
    def __init__(self):
        super().__init__("mermaid", ".mmd", ("mmdc",))

    def command(self, binary, src, out):
        return [binary, "-i", str(src), "-o", str(out), "--quiet"]


class VegaLiteAdapter(CommandAdapter):
    def __init__(self):
        super().__init__("vegalite", ".vl.json", ("vl-convert",))

    def command(self, binary, src, out):
        return [binary, "vl2png", "-i", str(src), "-o", str(out)]


class SvgAdapter(CommandAdapter):
    def __init__(self):
        super().__init__("svg", ".svg", ("rsvg-convert", "inkscape"))

    def command(self, binary, src, out):
        if Path(binary).name.startswith("inkscape"):
            return [binary, str(src), "--export-type=png", "-o", str(out)]
        return [binary, "-o", str(out), str(src)]


class AsymptoteAdapter(CommandAdapter):
    def __init__(self):
        super().__init__("asymptote", ".asy", ("asy",))

    def command(self, binary, src, out):
        return [binary, "-f", "png", "-o", str(out.with_suffix("")), str(src)]


class LilypondAdapter(CommandAdapter):
    def __init__(self):
        super().__init__("lilypond", ".ly", ("lilypond",))

    def command(self, binary, src, out):
        return [
            binary,
            "--png",
            f"-dresolution={PDF_RASTER_DPI}",
            "-o",
            str(out.with_suffix("")),
            str(src),
        ]


class LatexAdapter(ToolAdapter):
    """TeX source compiled to PDF, then rasterized at a fixed DPI."""

    tool = "latex"
    source_suffix = ".tex"

    def missing_reason(self) -> str | None:
        if _which_any("pdflatex") is None:
            return "pdflatex not on PATH"
        if _which_any("pdftoppm") is None:
            return "pdftoppm not on PATH"
        return None

    def render(self, source: str, workdir: Path, policy: SandboxPolicy) -> Path:
        src = self._write_source(workdir, source)
        compile_result = run_sandboxed(
            [
                "pdflatex",
                "-interaction=nonstopmode",
                "-halt-on-error",
                f"-output-directory={workdir}",
                str(src),
            ],
            cwd=str(workdir),
            policy=policy,
        )
        # pdflatex reports errors on stdout, not stderr.
        if compile_result.exit_code != 0:
            raise CompileError(
                f"{self.tool}: pdflatex exited {compile_result.exit_code}",
                stderr=compile_result.stderr or compile_result.stdout,
            )
        pdf = workdir / "source.pdf"
        if not pdf.is_file():
            raise NoOutputImageError(f"{self.tool}: pdflatex produced no PDF")
        out = workdir / "out"
        raster = run_sandboxed(
            [
                "pdftoppm",
                "-png",
                "-singlefile",
                "-r",
                str(PDF_RASTER_DPI),
                str(pdf),
                str(out),
            ],
            cwd=str(workdir),
            policy=policy,
        )
        self._check(raster, "pdftoppm")
        return self._expect_output(out.with_suffix(".png"))


class HtmlAdapter(ToolAdapter):
    """Headless browser screenshot at a fixed 1024-wide viewport."""

    tool = "html"
    source_suffix = ".html"
    _browsers = ("chromium", "chromium-browser", "google-chrome", "chrome")

    def missing_reason(self) -> str | None:
        if _which_any(*self._browsers) is None:
            return f"no headless browser ({', '.join(self._browsers)}) on PATH"
        return None

    def render(self, source: str, workdir: Path, policy: SandboxPolicy) -> Path:
        binary = _which_any(*self._browsers)
        if binary is None:
            raise ToolMissingError(f"{self.tool}: browser not found")
        src = self._write_source(workdir, source)
        out = workdir / "out.png"
        result = run_sandboxed(
            [
                binary,
                "--headless",
                "--disable-gpu",
                "--no-sandbox",
                "--hide-scrollbars",
                "--window-size=1024,1024",
                f"--screenshot={out}",
                src.resolve().as_uri(),
            ],
            cwd=str(workdir),
            policy=policy,
        )
        self._check(result, Path(binary).name)
        return self._expect_output(out)


def build_adapter_registry() -> dict[str, ToolAdapter]:
    """All render tools: the 11 pipeline tools plus the hermetic fixture."""
    adapters: list[ToolAdapter] = [
        HarnessAdapter("matplotlib"),
        VegaLiteAdapter(),
        HarnessAdapter("plotly"),
        LatexAdapter(),
        HtmlAdapter(),
        GraphvizAdapter(),
        MermaidAdapter(),
        SvgAdapter(),
        AsymptoteAdapter(),
        LilypondAdapter(),
        HarnessAdapter("rdkit"),
        FixtureAdapter(),
    ]
    return {adapter.tool: adapter for adapter in adapters}
