"""Headless shims for executing generated plotting/chemistry code.

Each shim runs one source file in a fresh namespace with a
non-interactive backend preconfigured, locates the figure or molecule
the code produced, and serializes it to a PNG path chosen by the
caller. The exit code is the wire contract:

    0  output written and decodable as PNG
    1  the source raised; traceback on stderr
    2  usage error (bad arguments, unknown tool, unreadable source)
    3  the tool library itself failed to import
    4  the source ran but produced no figure

The shims never open display windows and write nothing except the
requested output file.
"""

from .runner import EXIT_EXCEPTION, EXIT_IMPORT_FAILURE, EXIT_NO_FIGURE, EXIT_OK, EXIT_USAGE, main

__all__ = [
    "EXIT_OK",
    "EXIT_EXCEPTION",
    "EXIT_USAGE",
    "EXIT_IMPORT_FAILURE",
    "EXIT_NO_FIGURE",
    "main",
]
