"""Derived-series construction from raw sessions.

Three stages: a trailing moving-average filter that suppresses scheduling
spikes, a backward walk from the steady-zero onset that delimits the
constant-voltage current tail, and a pilot-minus-moving-median difference
series over the constant-current phase that captures how far below the pilot
limit each battery actually charges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Optional

import numpy as np

from .data_model import ChargingSession, Fleet

__all__ = [
    "TailParams",
    "Tail",
    "DeltaSeries",
    "TailRecord",
    "moving_average",
    "moving_median",
    "find_t_start",
    "extract_tail",
    "compute_delta",
    "extract_record",
    "extract_fleet",
]


@dataclass(frozen=True)
class TailParams:
    """Knobs of the tail detector.

    n_avg: moving-average window (samples).
    epsilon: ascent tolerance in amperes for the backward walk.
    t_max: budget of consecutive descending samples before the walk stops.
    zero_threshold: filtered current below this counts as steady zero (A).
    min_tail_len: tails shorter than this are discarded; defaults to n_avg,
        since anything shorter is filter support rather than battery behavior.
    """

    n_avg: int = 25
    epsilon: float = 0.01
    t_max: int = 10
    zero_threshold: float = 0.1
    min_tail_len: int | None = None

    def __post_init__(self):
        if self.n_avg < 1:
            raise ValueError("n_avg must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if self.zero_threshold < 0:
            raise ValueError("zero_threshold must be >= 0")
        if self.min_tail_len is None:
            object.__setattr__(self, "min_tail_len", self.n_avg)
        if self.min_tail_len < 1:
            raise ValueError("min_tail_len must be >= 1")


@dataclass(frozen=True)
class Tail:
    """Filtered current/pilot slice over [t_start - s, t_start] (inclusive)."""

    current_values: np.ndarray
    pilot_values: np.ndarray
    t_start: int
    s: int

    def __post_init__(self):
        cur = np.asarray(self.current_values, dtype=np.float64)
        pil = np.asarray(self.pilot_values, dtype=np.float64)
        object.__setattr__(self, "current_values", cur)
        object.__setattr__(self, "pilot_values", pil)
        if len(cur) != self.s + 1 or len(pil) != self.s + 1:
            raise ValueError("tail slices must have length s + 1")
        if not np.all(np.isfinite(cur)) or np.any(cur < 0):
            raise ValueError("tail current must be finite and non-negative")

    @property
    def begin(self) -> int:
        """First sample index of the tail (= start of the constant-voltage phase)."""
        return self.t_start - self.s


@dataclass(frozen=True)
class DeltaSeries:
    """Pilot-minus-median-current values over the constant-current phase [0, begin)."""

    values: np.ndarray
    n_avg: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if len(vals) < 1:
            raise ValueError("delta series is empty")
        if not np.all(np.isfinite(vals)):
            raise ValueError("delta series contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


def moving_average(values, n_avg: int) -> np.ndarray:
    """Trailing mean of the n_avg samples ending at each index.

    Windows are truncated to the available samples at the head, so the output
    has the same length as the input.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("moving_average needs a non-empty 1-D array")
    if n_avg < 1:
        raise ValueError("n_avg must be >= 1")
    n = x.size
    w = min(n_avg, n)
    out = np.empty(n, dtype=np.float64)
    for t in range(min(w - 1, n)):
        out[t] = np.mean(x[: t + 1])
    if n >= w:
        windows = np.lib.stride_tricks.sliding_window_view(x, w)
        out[w - 1 :] = windows.mean(axis=1)
    return out


def moving_median(values, t: int, n_avg: int) -> float:
    """Median of the samples in [t - floor(n/2), t + ceil(n/2)], clipped to bounds."""
    x = np.asarray(values, dtype=np.float64)
    if not 0 <= t < x.size:
        raise IndexError(f"index {t} out of range for series of length {x.size}")
    lo = max(0, t - n_avg // 2)
    hi = min(x.size, t + (n_avg + 1) // 2 + 1)
    return float(np.median(x[lo:hi]))


def _moving_median_series(x: np.ndarray, length: int, n_avg: int) -> np.ndarray:
    """moving_median evaluated at every index in [0, length), vectorized inside."""
    half_lo = n_avg // 2
    half_hi = (n_avg + 1) // 2
    width = half_lo + half_hi + 1
    out = np.empty(length, dtype=np.float64)
    full_start = half_lo
    full_stop = min(length, x.size - half_hi)
    if full_stop > full_start and x.size >= width:
        windows = np.lib.stride_tricks.sliding_window_view(x, width)
        out[full_start:full_stop] = np.median(
            windows[full_start - half_lo : full_stop - half_lo], axis=1
        )
    else:
        full_start, full_stop = 0, 0
    for t in list(range(0, full_start)) + list(range(full_stop, length)):
        out[t] = moving_median(x, t, n_avg)
    return out


def find_t_start(filtered_current, zero_threshold: float) -> Optional[int]:
    """First index of the final below-threshold run, if that run reaches the end."""
    y = np.asarray(filtered_current, dtype=np.float64)
    if y.size == 0:
        raise ValueError("empty series")
    if y[-1] >= zero_threshold:
        return None
    above = np.nonzero(y >= zero_threshold)[0]
    return int(above[-1]) + 1 if above.size else 0


def extract_tail(session: ChargingSession, params: TailParams) -> Optional[Tail]:
    """Locate the constant-voltage current tail of a session, if present.

    Both series are moving-average filtered; from the steady-zero onset the
    walk proceeds backward, counting non-ascending samples (difference
    <= epsilon) into the tail length s and giving up after t_max consecutive
    ascending samples.  Returns None when no steady-zero onset exists or the
    tail is shorter than min_tail_len.
    """
    filtered_c = moving_average(session.current.values, params.n_avg)
    filtered_p = moving_average(session.pilot.values, params.n_avg)
    t_start = find_t_start(filtered_c, params.zero_threshold)
    if t_start is None:
        return None
    n = 0
    s = 0
    for t in range(t_start, 0, -1):
        if filtered_c[t] - filtered_c[t - 1] > params.epsilon:
            n += 1
        else:
            n = 0
            s += 1
        if n == params.t_max:
            break
    if s < params.min_tail_len:
        return None
    return Tail(
        current_values=filtered_c[t_start - s : t_start + 1],
        pilot_values=filtered_p[t_start - s : t_start + 1],
        t_start=t_start,
        s=s,
    )


def compute_delta(session: ChargingSession, t_tail_begin: int, n_avg: int) -> DeltaSeries:
    """Delta series z(t) = pilot(t) - moving_median(current, t) for t in [0, t_tail_begin)."""
    if t_tail_begin < 1:
        raise ValueError("session has no constant-current phase before the tail")
    c = np.asarray(session.current.values, dtype=np.float64)
    p = np.asarray(session.pilot.values, dtype=np.float64)
    med = _moving_median_series(c, t_tail_begin, n_avg)
    return DeltaSeries(values=p[:t_tail_begin] - med, n_avg=n_avg)


@dataclass(frozen=True)
class TailRecord:
    """Per-session extraction result: the tail, the delta series, and the
    session metadata downstream featurizers need."""

    ev_id: str
    session_id: str
    connection_time: datetime
    duration_s: float
    kwh: float
    t_start: int
    s: int
    tail_current: np.ndarray
    tail_pilot: np.ndarray
    delta: np.ndarray
    n_avg: int = field(default=25)

    def __post_init__(self):
        object.__setattr__(self, "tail_current", np.asarray(self.tail_current, dtype=np.float64))
        object.__setattr__(self, "tail_pilot", np.asarray(self.tail_pilot, dtype=np.float64))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=np.float64))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TailRecord):
            return NotImplemented
        return (
            self.ev_id == other.ev_id
            and self.session_id == other.session_id
            and self.connection_time == other.connection_time
            and self.duration_s == other.duration_s
            and self.kwh == other.kwh
            and self.t_start == other.t_start
            and self.s == other.s
            and self.n_avg == other.n_avg
            and np.array_equal(self.tail_current, other.tail_current)
            and np.array_equal(self.tail_pilot, other.tail_pilot)
            and np.array_equal(self.delta, other.delta)
        )


def extract_record(session: ChargingSession, params: TailParams) -> Optional[TailRecord]:
    """Tail + delta for one session; None when either cannot be produced."""
    tail = extract_tail(session, params)
    if tail is None or tail.begin < 1:
        return None
    delta = compute_delta(session, tail.begin, params.n_avg)
    return TailRecord(
        ev_id=session.ev_id,
        session_id=session.session_id,
        connection_time=session.connection_time,
        duration_s=session.duration_s,
        kwh=session.kwh_delivered,
        t_start=tail.t_start,
        s=tail.s,
        tail_current=tail.current_values,
        tail_pilot=tail.pilot_values,
        delta=delta.values,
        n_avg=params.n_avg,
    )


def extract_fleet(fleet: Fleet, params: TailParams) -> tuple[list[TailRecord], int]:
    """Extract every session of a fleet; returns (records, n_without_tail)."""
    records: list[TailRecord] = []
    skipped = 0
    for session in fleet.iter_sessions():
        rec = extract_record(session, params)
        if rec is None:
            skipped += 1
        else:
            records.append(rec)
    return records, skipped
