"""Subprocess execution with a hard wall clock and process-group cleanup.

Render tools run LLM-generated code, so any invocation may loop forever or
fork helpers. Every tool subprocess therefore starts in its own session
(making it a process-group leader) and on timeout the whole group gets
SIGKILL, which also reaps grandchildren a plain kill() would orphan.
"""

from __future__ import annotations

import os
import signal
import subprocess
from dataclasses import dataclass

from ..errors import RenderTimeoutError

# Proxy env vars pointed at a closed local port: best-effort network cutoff
# for tools that honor proxy settings. Process-level isolation, not a jail.
_BLACKHOLE_PROXY = "http://127.0.0.1:9"


@dataclass(frozen=True)
class SandboxPolicy:
    """Resource policy for one render subprocess."""

    wall_timeout: float = 30.0
    max_output_bytes: int = 65536
    network_disabled: bool = True

    def __post_init__(self):
        if self.wall_timeout <= 0:
            raise ValueError("wall_timeout must be positive")


@dataclass(frozen=True)
class SandboxResult:
    exit_code: int
    stdout: str
    stderr: str


def _truncate(data: bytes, limit: int) -> str:
    clipped = data[:limit]
    text = clipped.decode("utf-8", errors="replace")
    if len(data) > limit:
        text += f"\n[truncated {len(data) - limit} bytes]"
    return text


def run_sandboxed(
    cmd: list[str],
    cwd: str,
    policy: SandboxPolicy,
    env_extra: dict[str, str] | None = None,
) -> SandboxResult:
    """Run cmd under the policy; raises RenderTimeoutError on wall timeout.

    Nonzero exits are returned, not raised: the adapter owns the mapping
    from exit status to error type.
    """
    env = dict(os.environ)
    if policy.network_disabled:
        for var in ("http_proxy", "https_proxy", "HTTP_PROXY", "HTTPS_PROXY"):
            env[var] = _BLACKHOLE_PROXY
        env.pop("no_proxy", None)
        env.pop("NO_PROXY", None)
    if env_extra:
        env.update(env_extra)
    proc = subprocess.Popen(
        cmd,
        cwd=cwd,
        stdin=subprocess.DEVNULL,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        env=env,
        start_new_session=True,
    )
    try:
        stdout, stderr = proc.communicate(timeout=policy.wall_timeout)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        stdout, stderr = proc.communicate()
        raise RenderTimeoutError(
            f"{cmd[0]} exceeded {policy.wall_timeout:g}s wall clock",
            stderr=_truncate(stderr, policy.max_output_bytes),
        )
    return SandboxResult(
        exit_code=proc.returncode,
        stdout=_truncate(stdout, policy.max_output_bytes),
        stderr=_truncate(stderr, policy.max_output_bytes),
    )
