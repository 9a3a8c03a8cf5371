"""Per-second trace capture and timing metrics.

Each record holds what the victim daemons logged (measured offset, the
correction they commanded, lock state) next to the experimenter's
god-view: the actual client-minus-server phase computed from raw clock
state, bypassing every hook. Metrics are computed from the actual-offset
series unless stated otherwise.

Metric definitions:
  residual offset   mean actual offset over a tail window
  drift slope       ordinary least-squares slope, ns per second
  jitter std        sample std after removing the OLS linear trend
  TIE(t; tau)       x(t + tau) - x(t)
  MTIE(tau)         max over all windows of length tau of the window's
                    peak-to-peak excursion (brute-force sliding window)

The CSV schema is fixed and integer-only:
  t_s,t_server_ns,t_client_ns,measured_offset_ns,correction_ppb,step_ns,actual_offset_ns,servo_state
Non-applicable fields are empty; line endings are LF; byte output is a
pure function of (config, seed).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

CSV_COLUMNS = (
    "t_s",
    "t_server_ns",
    "t_client_ns",
    "measured_offset_ns",
    "correction_ppb",
    "step_ns",
    "actual_offset_ns",
    "servo_state",
)

# Per-interval delta audits skip the lock-in transient by default: with
# default gains both loops settle well within 20 s.
DEFAULT_STEALTH_WINDOW_START_S = 20


class DegenerateWindow(ValueError):
    """Raised when a metric window selects too few samples."""


@dataclass(frozen=True)
class LogRecord:
    t_true_s: int
    t_server_ns: int
    t_client_ns: int
    measured_offset_ns: int
    correction_freq_ppb: int | None
    correction_step_ns: int | None
    actual_offset_ns: int
    servo_state: str


@dataclass
class Trace:
    scenario: str
    seed: int
    records: list[LogRecord] = field(default_factory=list)

    def append(self, record: LogRecord) -> None:
        if self.records and record.t_true_s != self.records[-1].t_true_s + 1:
            raise ValueError(
                f"trace must be gapless 1 Hz: {self.records[-1].t_true_s} -> {record.t_true_s}"
            )
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def window(self, start_s: int | None = None, end_s: int | None = None) -> list[LogRecord]:
        lo = start_s if start_s is not None else -1
        hi = end_s if end_s is not None else math.inf
        return [r for r in self.records if lo <= r.t_true_s <= hi]

    def actual_series(self) -> list[tuple[int, int]]:
        return [(r.t_true_s, r.actual_offset_ns) for r in self.records]


def residual_offset(trace: Trace, window_start_s: int) -> float:
    """Mean actual offset over t >= window_start_s."""
    tail = trace.window(start_s=window_start_s)
    if not tail:
        raise DegenerateWindow(f"no samples at t >= {window_start_s}")
    return sum(r.actual_offset_ns for r in tail) / len(tail)


def _ols(points: list[tuple[int, int]]) -> tuple[Fraction, Fraction]:
    """Exact least-squares (slope, intercept) over integer points."""
    n = len(points)
    sx = sum(t for t, _ in points)
    sy = sum(x for _, x in points)
    sxx = sum(t * t for t, _ in points)
    sxy = sum(t * x for t, x in points)
    denom = n * sxx - sx * sx
    if denom == 0:
        raise DegenerateWindow("all samples at the same instant")
    slope = Fraction(n * sxy - sx * sy, denom)
    intercept = (Fraction(sy) - slope * sx) / n
    return slope, intercept


def drift_slope(
    trace: Trace, window_start_s: int | None = None, window_end_s: int | None = None
) -> float:
    """OLS slope of actual offset vs time, in ns per second."""
    points = [(r.t_true_s, r.actual_offset_ns) for r in trace.window(window_start_s, window_end_s)]
    if len(points) < 10:
        raise DegenerateWindow(f"need >= 10 samples, got {len(points)}")
    slope, _ = _ols(points)
    return float(slope)


def jitter_std(
    trace: Trace, window_start_s: int | None = None, window_end_s: int | None = None
) -> float:
    """Sample std of the actual offset after removing its linear trend."""
    points = [(r.t_true_s, r.actual_offset_ns) for r in trace.window(window_start_s, window_end_s)]
    if len(points) < 10:
        raise DegenerateWindow(f"need >= 10 samples, got {len(points)}")
    slope, intercept = _ols(points)
    residuals = [float(x - (slope * t + intercept)) for t, x in points]
    mean = sum(residuals) / len(residuals)
    var = sum((v - mean) ** 2 for v in residuals) / (len(residuals) - 1)
    return math.sqrt(var)


def tie_mtie(trace: Trace, tau_s: int) -> tuple[list[int], int]:
    """TIE series at lag tau and MTIE over every window of length tau."""
    if tau_s < 1:
        raise ValueError("tau must be >= 1 s")
    xs = [r.actual_offset_ns for r in trace.records]
    if len(xs) <= tau_s:
        raise DegenerateWindow(f"trace of {len(xs)} samples too short for tau={tau_s}")
    tie = [xs[i + tau_s] - xs[i] for i in range(len(xs) - tau_s)]
    mtie = 0
    for i in range(len(xs) - tau_s):
        window = xs[i : i + tau_s + 1]
        mtie = max(mtie, max(window) - min(window))
    return tie, mtie


@dataclass(frozen=True)
class StealthReport:
    """Whether an attack's footprint would trip simple online checks.

    interval_violation_times lists every second whose measured-offset
    change from the previous second exceeds the filter threshold; the
    drift flag compares the fitted actual-offset slope against a
    long-term frequency-accuracy budget.
    """

    filter_threshold_ns: int
    drift_spec_ppb: float
    window_start_s: int
    interval_violation_times: tuple[int, ...]
    max_interval_delta_ns: int
    fitted_drift_ppb: float
    drift_exceeded: bool

    @property
    def filter_tripped(self) -> bool:
        return bool(self.interval_violation_times)


def stealth_check(
    trace: Trace,
    filter_threshold_ns: int,
    drift_spec_ppb: float,
    window_start_s: int | None = None,
) -> StealthReport:
    if filter_threshold_ns <= 0 or drift_spec_ppb <= 0:
        raise ValueError("thresholds must be positive")
    start = DEFAULT_STEALTH_WINDOW_START_S if window_start_s is None else window_start_s
    rows = trace.window(start_s=start)
    if len(rows) < 2:
        raise DegenerateWindow(f"need >= 2 samples at t >= {start}")
    violations = []
    max_delta = 0
    for prev, cur in zip(rows, rows[1:]):
        delta = abs(cur.measured_offset_ns - prev.measured_offset_ns)
        max_delta = max(max_delta, delta)
        if delta > filter_threshold_ns:
            violations.append(cur.t_true_s)
    slope, _ = _ols([(r.t_true_s, r.actual_offset_ns) for r in rows])
    # 1 ns/s of phase drift is 1 ppb of frequency error.
    fitted_ppb = float(slope)
    return StealthReport(
        filter_threshold_ns=filter_threshold_ns,
        drift_spec_ppb=drift_spec_ppb,
        window_start_s=start,
        interval_violation_times=tuple(violations),
        max_interval_delta_ns=max_delta,
        fitted_drift_ppb=fitted_ppb,
        drift_exceeded=abs(fitted_ppb) > drift_spec_ppb,
    )


def trace_to_csv(trace: Trace) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in trace.records:
        out.write(
            f"{r.t_true_s},{r.t_server_ns},{r.t_client_ns},{r.measured_offset_ns},"
            f"{'' if r.correction_freq_ppb is None else r.correction_freq_ppb},"
            f"{'' if r.correction_step_ns is None else r.correction_step_ns},"
            f"{r.actual_offset_ns},{r.servo_state}\n"
        )
    return out.getvalue()


def trace_from_csv(text: str, scenario: str = "", seed: int = 0) -> Trace:
    lines = text.strip("\n").split("\n") if text.strip() else []
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError("unrecognized trace CSV header")
    trace = Trace(scenario=scenario, seed=seed)
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"malformed trace row: {line!r}")
        trace.append(
            LogRecord(
                t_true_s=int(parts[0]),
                t_server_ns=int(parts[1]),
                t_client_ns=int(parts[2]),
                measured_offset_ns=int(parts[3]),
                correction_freq_ppb=int(parts[4]) if parts[4] else None,
                correction_step_ns=int(parts[5]) if parts[5] else None,
                actual_offset_ns=int(parts[6]),
                servo_state=parts[7],
            )
        )
    return trace
