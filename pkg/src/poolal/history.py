"""Run-history files: a two-line header followed by one TAB-separated record per fit.

Header::

    #start time: DDMMYYYY-HHmmSS, mode: benchmark, sample selection method: qbc, seed: 5
    #models<TAB>labeled_samples<TAB>labels<TAB>hyperparams<TAB>RMSE<TAB>AUC<TAB>runtime

Body line::

    model_qbc_00003.json<TAB>[1, 2, 3]<TAB>[0.5, 0.3, 0.4]<TAB>{signal_variance=1.0, ...}<TAB>0.02<TAB>0.435<TAB>4.0

Learn-mode files drop the metric and AUC columns. Lists are cumulative, the
metric is the current value, AUC and runtime are running totals. Decimals use
Python's shortest round-trip ``repr``.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from poolal.errors import HistoryError

MODES = ("benchmark", "learn")
METRIC_TOKENS = {"rmse": "RMSE", "r2": "R2"}
_TOKEN_METRICS = {v: k for k, v in METRIC_TOKENS.items()}

_HEADER_RE = re.compile(
    r"#start time: (?P<time>\d{8}-\d{6}), mode: (?P<mode>\w+), "
    r"sample selection method: (?P<method>\w+), seed: (?P<seed>-?\d+)"
)
_TIME_RE = re.compile(r"\d{8}-\d{6}")


def start_stamp(t: float | None = None) -> str:
    """Local time as ``DDMMYYYY-HHmmSS``."""
    return time.strftime("%d%m%Y-%H%M%S", time.localtime(t))


def snapshot_name(method: str, iteration: int) -> str:
    return f"model_{method}_{iteration:05d}.json"


def history_name(mode: str, method: str) -> str:
    return f"output_{mode}_{method}.txt"


@dataclass(frozen=True)
class RunHeader:
    start_time: str
    mode: str
    method: str
    seed: int
    metric: str | None = None

    def __post_init__(self):
        if not _TIME_RE.fullmatch(self.start_time or ""):
            raise HistoryError(f"start time must look like DDMMYYYY-HHmmSS, got {self.start_time!r}")
        if self.mode not in MODES:
            raise HistoryError(f"unknown mode {self.mode!r}")
        if not self.method or not re.fullmatch(r"\w+", self.method):
            raise HistoryError(f"invalid method name {self.method!r}")
        if self.mode == "benchmark" and self.metric not in METRIC_TOKENS:
            raise HistoryError(f"benchmark header needs a metric in {tuple(METRIC_TOKENS)}")
        if self.mode == "learn" and self.metric is not None:
            raise HistoryError("learn header carries no metric")


@dataclass
class RunRecord:
    snapshot_file: str
    labeled: list[int]
    labels: list[float]
    hyperparams: dict[str, float] = field(default_factory=dict)
    metric_value: float | None = None
    auc_cum: float | None = None
    runtime_cum: float = 0.0


def _num(value) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise HistoryError(f"non-finite value {value!r} cannot be written")
    return repr(value)


def format_header(header: RunHeader) -> str:
    line1 = (f"#start time: {header.start_time}, mode: {header.mode}, "
             f"sample selection method: {header.method}, seed: {header.seed}")
    cols = ["#models", "labeled_samples", "labels", "hyperparams"]
    if header.mode == "benchmark":
        cols += [METRIC_TOKENS[header.metric], "AUC"]
    cols.append("runtime")
    return line1 + "\n" + "\t".join(cols) + "\n"


def format_record(record: RunRecord, mode: str) -> str:
    if not record.labeled or len(record.labeled) != len(record.labels):
        raise HistoryError(
            f"record needs matching nonempty labeled/labels lists, got "
            f"{len(record.labeled)} and {len(record.labels)}"
        )
    if not record.snapshot_file or any(c in record.snapshot_file for c in "\t\n"):
        raise HistoryError(f"invalid snapshot filename {record.snapshot_file!r}")
    fields = [
        record.snapshot_file,
        "[" + ", ".join(str(int(i)) for i in record.labeled) + "]",
        "[" + ", ".join(_num(v) for v in record.labels) + "]",
        "{" + ", ".join(f"{k}={_num(v)}" for k, v in record.hyperparams.items()) + "}",
    ]
    if mode == "benchmark":
        if record.metric_value is None or record.auc_cum is None:
            raise HistoryError("benchmark records need metric_value and auc_cum")
        fields += [_num(record.metric_value), _num(record.auc_cum)]
    elif mode != "learn":
        raise HistoryError(f"unknown mode {mode!r}")
    fields.append(_num(record.runtime_cum))
    return "\t".join(fields) + "\n"


def write_header(path, header: RunHeader) -> None:
    Path(path).write_text(format_header(header), encoding="utf-8", newline="\n")


def append_record(path, record: RunRecord, mode: str) -> None:
    line = format_record(record, mode)
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        fh.write(line)


def _parse_list(text, conv, where):
    if not (text.startswith("[") and text.endswith("]")):
        raise HistoryError(f"{where}: expected a bracketed list, got {text!r}")
    inner = text[1:-1]
    if not inner:
        return []
    try:
        return [conv(tok) for tok in inner.split(", ")]
    except ValueError:
        raise HistoryError(f"{where}: malformed list {text!r}") from None


def _parse_params(text, where):
    if not (text.startswith("{") and text.endswith("}")):
        raise HistoryError(f"{where}: expected {{key=value, ...}}, got {text!r}")
    inner = text[1:-1]
    params = {}
    if not inner:
        return params
    for item in inner.split(", "):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise HistoryError(f"{where}: malformed hyperparameter {item!r}")
        try:
            params[key] = float(value)
        except ValueError:
            raise HistoryError(f"{where}: non-numeric hyperparameter {item!r}") from None
    return params


def _parse_float(text, where):
    try:
        value = float(text)
    except ValueError:
        raise HistoryError(f"{where}: non-numeric value {text!r}") from None
    if not math.isfinite(value):
        raise HistoryError(f"{where}: non-finite value {text!r}")
    return value


def parse_header(line1: str, line2: str) -> RunHeader:
    m = _HEADER_RE.fullmatch(line1)
    if m is None:
        raise HistoryError(f"line 1: malformed header {line1!r}")
    mode = m["mode"]
    cols = line2.split("\t")
    metric = None
    if mode == "benchmark":
        if len(cols) != 7 or cols[4] not in _TOKEN_METRICS:
            raise HistoryError("line 2: benchmark column header must have 7 columns with R2 or RMSE")
        metric = _TOKEN_METRICS[cols[4]]
    expected = format_header(RunHeader(m["time"], mode, m["method"], int(m["seed"]), metric))
    if expected.split("\n")[1] != line2:
        raise HistoryError(f"line 2: column header {line2!r} does not match mode {mode!r}")
    return RunHeader(m["time"], mode, m["method"], int(m["seed"]), metric)


def parse_history(path) -> tuple[RunHeader, list[RunRecord]]:
    """Parse a run-history file written by :func:`write_header`/:func:`append_record`."""
    path = Path(path)
    if not path.is_file():
        raise HistoryError(f"history file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise HistoryError(f"{path}: missing header lines")
    header = parse_header(lines[0], lines[1])
    ncols = 7 if header.mode == "benchmark" else 5

    records: list[RunRecord] = []
    for lineno, line in enumerate(lines[2:], start=3):
        where = f"{path}: line {lineno}"
        cols = line.split("\t")
        if len(cols) != ncols:
            raise HistoryError(
                f"{where}: expected {ncols} columns for {header.mode} mode, found {len(cols)}"
            )
        rec = RunRecord(
            snapshot_file=cols[0],
            labeled=_parse_list(cols[1], int, where),
            labels=_parse_list(cols[2], float, where),
            hyperparams=_parse_params(cols[3], where),
            runtime_cum=_parse_float(cols[-1], where),
        )
        if header.mode == "benchmark":
            rec.metric_value = _parse_float(cols[4], where)
            rec.auc_cum = _parse_float(cols[5], where)
        if not rec.snapshot_file:
            raise HistoryError(f"{where}: empty snapshot filename")
        if not rec.labeled or len(rec.labeled) != len(rec.labels):
            raise HistoryError(f"{where}: labeled and labels lists differ in length or are empty")
        if len(set(rec.labeled)) != len(rec.labeled):
            raise HistoryError(f"{where}: duplicate labeled index")
        if records:
            prev = records[-1]
            if (len(rec.labeled) != len(prev.labeled) + 1
                    or rec.labeled[:-1] != prev.labeled or rec.labels[:-1] != prev.labels):
                raise HistoryError(f"{where}: labeled list does not extend the previous line by one")
            if rec.runtime_cum < prev.runtime_cum:
                raise HistoryError(f"{where}: cumulative runtime decreased")
            # r2 can be negative, so its running area may legitimately shrink
            if header.metric == "rmse" and rec.auc_cum < prev.auc_cum:
                raise HistoryError(f"{where}: cumulative AUC decreased")
        records.append(rec)
    return header, records
