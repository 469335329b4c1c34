"""Time-indexed simulation record and its canonical CSV form.

The CSV starts with ``#``-prefixed header lines (format tag, configuration
echo, seed, switch instants, pre-reset determinants), then one column-name
row, then one data row per grid point.  Floats are written with 17
significant digits so a write/read cycle reproduces every value bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import TraceFormatError

FORMAT_TAG = "dremobs-trace 1"


def column_names(n: int, m: int, s: int) -> list[str]:
    names = ["t", "sigma"]
    names += [f"x{i + 1}" for i in range(n)]
    names += [f"xhat{i + 1}" for i in range(n)]
    names += ["y", "ybar"]
    names += [f"z{j + 1}" for j in range(m + n)]
    names += ["delta"]
    names += [f"thetahat{i + 1}_{j + 1}" for i in range(s) for j in range(m)]
    names += [f"theta_err{i + 1}" for i in range(s)]
    names += ["x_err"]
    names += [f"exc{i + 1}" for i in range(s)]
    return names


@dataclass
class SimulationTrace:
    """One row per grid point plus switch-event markers.

    ``meta`` must contain the dimensions ``n``, ``m``, ``s``; the remaining
    entries echo the run configuration.  ``pre_reset_delta`` aligns with
    ``switch_times`` (NaN for the initial reset, which has no prior state).
    """

    meta: dict
    data: np.ndarray
    switch_times: list[float] = field(default_factory=list)
    pre_reset_delta: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise TraceFormatError("trace data must be a 2-D array")
        for key in ("n", "m", "s"):
            if key not in self.meta:
                raise TraceFormatError(f"trace meta is missing '{key}'")
        if self.data.shape[1] != len(self.columns):
            raise TraceFormatError(
                f"trace has {self.data.shape[1]} columns, "
                f"expected {len(self.columns)} for the declared dimensions"
            )
        if len(self.pre_reset_delta) != len(self.switch_times):
            raise TraceFormatError("pre_reset_delta must align with switch_times")
        t = self.data[:, 0]
        if t.shape[0] > 1 and np.any(np.diff(t) <= 0):
            raise TraceFormatError("time column must be strictly increasing")

    # -- schema ------------------------------------------------------------
    @property
    def n(self) -> int:
        return int(self.meta["n"])

    @property
    def m(self) -> int:
        return int(self.meta["m"])

    @property
    def num_subsystems(self) -> int:
        return int(self.meta["s"])

    @property
    def columns(self) -> list[str]:
        return column_names(self.n, self.m, self.num_subsystems)

    def _col(self, name: str) -> int:
        return self.columns.index(name)

    # -- column views --------------------------------------------------
    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def sigma(self) -> np.ndarray:
        return self.data[:, 1].astype(int)

    @property
    def x(self) -> np.ndarray:
        start = 2
        return self.data[:, start : start + self.n]

    @property
    def xhat(self) -> np.ndarray:
        start = 2 + self.n
        return self.data[:, start : start + self.n]

    @property
    def y(self) -> np.ndarray:
        return self.data[:, self._col("y")]

    @property
    def ybar(self) -> np.ndarray:
        return self.data[:, self._col("ybar")]

    @property
    def z(self) -> np.ndarray:
        start = self._col("z1")
        return self.data[:, start : start + self.m + self.n]

    @property
    def delta(self) -> np.ndarray:
        return self.data[:, self._col("delta")]

    @property
    def theta_hat(self) -> np.ndarray:
        start = self._col("thetahat1_1")
        s, m = self.num_subsystems, self.m
        return self.data[:, start : start + s * m].reshape(-1, s, m)

    @property
    def theta_error(self) -> np.ndarray:
        start = self._col("theta_err1")
        return self.data[:, start : start + self.num_subsystems]

    @property
    def x_error(self) -> np.ndarray:
        return self.data[:, self._col("x_err")]

    @property
    def excitation(self) -> np.ndarray:
        start = self._col("exc1")
        return self.data[:, start : start + self.num_subsystems]


def traces_equal(a: SimulationTrace, b: SimulationTrace) -> bool:
    return (
        a.meta == b.meta
        and np.array_equal(a.data, b.data)
        and a.switch_times == b.switch_times
        and np.array_equal(
            np.asarray(a.pre_reset_delta), np.asarray(b.pre_reset_delta), equal_nan=True
        )
    )


def _format_float_list(values) -> str:
    return "[" + ",".join("%.17g" % v for v in values) + "]"


def _parse_float_list(text: str) -> list[float]:
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise TraceFormatError(f"malformed list in trace header: {text!r}")
    body = body[1:-1].strip()
    if not body:
        return []
    return [float(tok) for tok in body.split(",")]


def trace_to_string(trace: SimulationTrace) -> str:
    """Render the canonical CSV text (deterministic byte-for-byte)."""
    lines = [f"# {FORMAT_TAG}"]
    lines.append("# meta: " + json.dumps(trace.meta, sort_keys=True, separators=(",", ":")))
    seed = trace.meta.get("seed")
    lines.append(f"# seed: {seed if seed is not None else 'none'}")
    lines.append("# switch_times: " + _format_float_list(trace.switch_times))
    lines.append("# pre_reset_delta: " + _format_float_list(trace.pre_reset_delta))
    lines.append(",".join(trace.columns))
    sigma_col = 1
    for row in trace.data:
        parts = [
            ("%d" % int(v)) if j == sigma_col else ("%.17g" % v)
            for j, v in enumerate(row)
        ]
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def write_trace(trace: SimulationTrace, path) -> None:
    text = trace_to_string(trace)
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_trace(path) -> SimulationTrace:
    """Parse a trace CSV back into an equal SimulationTrace."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from exc
    if not lines or lines[0] != f"# {FORMAT_TAG}":
        raise TraceFormatError(f"{path}: missing format tag '{FORMAT_TAG}'")
    meta = None
    switch_times: list[float] = []
    pre_reset: list[float] = []
    body_start = None
    for k, line in enumerate(lines[1:], start=1):
        if not line.startswith("#"):
            body_start = k
            break
        content = line[1:].strip()
        if content.startswith("meta:"):
            meta = json.loads(content[len("meta:") :])
        elif content.startswith("switch_times:"):
            switch_times = _parse_float_list(content[len("switch_times:") :])
        elif content.startswith("pre_reset_delta:"):
            pre_reset = _parse_float_list(content[len("pre_reset_delta:") :])
    if meta is None or body_start is None:
        raise TraceFormatError(f"{path}: incomplete trace header")
    header = lines[body_start].split(",")
    rows = lines[body_start + 1 :]
    data = np.empty((len(rows), len(header)))
    for r, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) != len(header):
            raise TraceFormatError(
                f"{path}: row {r} has {len(parts)} fields, expected {len(header)}"
            )
        data[r] = [float(p) for p in parts]
    trace = SimulationTrace(
        meta=meta, data=data, switch_times=switch_times, pre_reset_delta=pre_reset
    )
    if header != trace.columns:
        raise TraceFormatError(f"{path}: column header does not match the declared dimensions")
    return trace
