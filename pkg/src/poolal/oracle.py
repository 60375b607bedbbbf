"""Label sources for learn mode.

An oracle is any callable ``oracle(x, index) -> float``. Three concrete kinds
are provided: a lookup table, an interactive prompt and an external command
speaking a one-line-in, one-line-out protocol.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import sys

import numpy as np

from poolal.errors import OracleError

PROMPT_SHOWN = 8


def _to_label(text, source):
    text = text.strip() if text is not None else ""
    try:
        value = float(text)
    except ValueError:
        raise OracleError(f"{source} returned a non-numeric label {text!r}") from None
    if not math.isfinite(value):
        raise OracleError(f"{source} returned a non-finite label {text!r}")
    return value


def format_features(x) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(x, dtype=float).ravel())


class LookupOracle:
    """Returns stored labels by pool index."""

    def __init__(self, labels):
        self.labels = np.asarray(labels, dtype=float).ravel()

    def __call__(self, x, index: int) -> float:
        if not 0 <= index < len(self.labels):
            raise OracleError(f"index {index} outside the lookup table of size {len(self.labels)}")
        return float(self.labels[index])


class PromptOracle:
    """Asks a human for each label on a text stream."""

    def __init__(self, stdin=None, stdout=None):
        self.stdin = stdin
        self.stdout = stdout

    def __call__(self, x, index: int) -> float:
        stdin = self.stdin or sys.stdin
        stdout = self.stdout or sys.stdout
        values = np.asarray(x, dtype=float).ravel()
        shown = ", ".join(repr(float(v)) for v in values[:PROMPT_SHOWN])
        if values.size > PROMPT_SHOWN:
            shown += ", ..."
        stdout.write(f"label sample {index}: {shown} ? ")
        stdout.flush()
        line = stdin.readline()
        if not line:
            raise OracleError(f"no answer for sample {index} (end of input)")
        return _to_label(line, "prompt")


class CommandOracle:
    """Runs an external program once per query.

    The child reads ``v1,v2,...,vN`` plus a newline on stdin and must print
    one decimal label on stdout.
    """

    def __init__(self, command, timeout: float | None = None):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise OracleError("empty oracle command")
        self.timeout = timeout

    def __call__(self, x, index: int) -> float:
        try:
            proc = subprocess.run(self.argv, input=format_features(x) + "\n", capture_output=True,
                                  text=True, timeout=self.timeout, check=False)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise OracleError(f"oracle command {self.argv[0]!r} failed: {exc}") from None
        if proc.returncode != 0:
            raise OracleError(
                f"oracle command exited with status {proc.returncode}: {proc.stderr.strip()}"
            )
        return _to_label(proc.stdout, "oracle command")


def label(oracle, x, index: int) -> float:
    """Query ``oracle`` and normalize any failure to :class:`OracleError`."""
    try:
        value = oracle(x, index)
    except OracleError:
        raise
    except Exception as exc:
        raise OracleError(f"oracle failed on sample {index}: {exc!r}") from exc
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise OracleError(f"oracle returned a non-numeric label {value!r}") from None
    if not math.isfinite(value):
        raise OracleError(f"oracle returned a non-finite label {value!r}")
    return value
