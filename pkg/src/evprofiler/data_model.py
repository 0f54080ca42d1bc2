"""Canonical charging-session model: types, ingestion, and eligibility filtering.

A session pairs a charging-current series with the station's pilot series on a
shared timestamp axis.  Sessions are grouped per vehicle into a ``Fleet``.
Ingestion is tolerant: records that violate the session invariants are skipped
and counted per reason code instead of aborting the run.
"""

from __future__ import annotations

import email.utils
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "TimeSeries",
    "ChargingSession",
    "Fleet",
    "IngestReport",
    "RecordError",
    "build_session",
    "session_from_record",
    "session_to_record",
    "adapt_acn_payload",
    "filter_eligible",
    "parse_instant",
    "format_instant",
]


class RecordError(ValueError):
    """A single record cannot become a valid session; carries a reason code."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


def parse_instant(value) -> datetime:
    """Parse an ISO-8601 / RFC-1123 / epoch-seconds instant into aware UTC."""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, (int, float)):
        dt = datetime.fromtimestamp(float(value), tz=timezone.utc)
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            try:
                dt = email.utils.parsedate_to_datetime(value)
            except (TypeError, ValueError) as exc:
                raise RecordError("bad_timestamp", repr(value)) from exc
    else:
        raise RecordError("bad_timestamp", repr(value))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_instant(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()


def _as_readonly_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D sample array")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Ordered (timestamp, value) samples; timestamps are seconds from session start.

    ``nominal_period`` is descriptive metadata only: processing is index-based
    and never resamples.
    """

    timestamps: np.ndarray
    values: np.ndarray
    nominal_period: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "timestamps", _as_readonly_array(self.timestamps))
        object.__setattr__(self, "values", _as_readonly_array(self.values))
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values differ in length")
        if len(self.values) < 1:
            raise ValueError("series must contain at least one sample")
        if not np.all(np.isfinite(self.timestamps)) or not np.all(np.isfinite(self.values)):
            raise ValueError("series contains non-finite samples")
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("current/pilot values must be non-negative")

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
            and self.nominal_period == other.nominal_period
        )


@dataclass(frozen=True)
class ChargingSession:
    """One charging event with paired current and pilot series."""

    session_id: str
    ev_id: str
    connection_time: datetime
    disconnection_time: datetime
    kwh_delivered: float
    current: TimeSeries
    pilot: TimeSeries

    def __post_init__(self):
        if not self.ev_id:
            raise ValueError("session has no EV assigned")
        if not self.session_id:
            raise ValueError("session_id must be non-empty")
        if self.connection_time >= self.disconnection_time:
            raise ValueError("connection_time must precede disconnection_time")
        if not math.isfinite(self.kwh_delivered) or self.kwh_delivered < 0:
            raise ValueError("kwh_delivered must be finite and >= 0")
        if len(self.current) != len(self.pilot) or not np.array_equal(
            self.current.timestamps, self.pilot.timestamps
        ):
            raise ValueError("current and pilot must share identical timestamps")

    @property
    def duration_s(self) -> float:
        return (self.disconnection_time - self.connection_time).total_seconds()

    def __len__(self) -> int:
        return len(self.current)


@dataclass(frozen=True)
class Fleet:
    """Sessions grouped by EV, with provenance and an optional ingestion cutoff."""

    sessions_by_ev: Mapping[str, tuple[ChargingSession, ...]]
    provenance: str = "real"
    cutoff_date: datetime | None = None

    def __post_init__(self):
        if self.provenance not in ("real", "synthetic"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        grouped: dict[str, tuple[ChargingSession, ...]] = {}
        for ev_id in sorted(self.sessions_by_ev):
            sessions = tuple(
                sorted(
                    self.sessions_by_ev[ev_id],
                    key=lambda s: (s.connection_time, s.session_id),
                )
            )
            if not sessions:
                raise ValueError(f"EV group {ev_id!r} is empty")
            if any(s.ev_id != ev_id for s in sessions):
                raise ValueError(f"session filed under wrong EV group {ev_id!r}")
            grouped[ev_id] = sessions
        object.__setattr__(self, "sessions_by_ev", grouped)

    @classmethod
    def from_sessions(
        cls,
        sessions: Iterable[ChargingSession],
        provenance: str = "real",
        cutoff_date: datetime | None = None,
    ) -> "Fleet":
        grouped: dict[str, list[ChargingSession]] = {}
        for session in sessions:
            grouped.setdefault(session.ev_id, []).append(session)
        return cls({ev: tuple(ss) for ev, ss in grouped.items()}, provenance, cutoff_date)

    @property
    def ev_ids(self) -> tuple[str, ...]:
        return tuple(self.sessions_by_ev)

    @property
    def n_sessions(self) -> int:
        return sum(len(ss) for ss in self.sessions_by_ev.values())

    def iter_sessions(self) -> Iterator[ChargingSession]:
        for ev_id in self.sessions_by_ev:
            yield from self.sessions_by_ev[ev_id]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Fleet):
            return NotImplemented
        return (
            self.provenance == other.provenance
            and self.cutoff_date == other.cutoff_date
            and dict(self.sessions_by_ev) == dict(other.sessions_by_ev)
        )


@dataclass
class IngestReport:
    """Counts of ingested and skipped records, keyed by skip reason."""

    n_ingested: int = 0
    skipped: Counter = field(default_factory=Counter)

    @property
    def n_skipped(self) -> int:
        return sum(self.skipped.values())

    def skip(self, reason: str):
        self.skipped[reason] += 1


def _intersect_samples(
    t_a: np.ndarray, v_a: np.ndarray, t_b: np.ndarray, v_b: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Align two sample streams on their shared timestamps, preserving order."""
    shared, idx_a, idx_b = np.intersect1d(t_a, t_b, return_indices=True)
    return shared, v_a[idx_a], v_b[idx_b]


def build_session(
    session_id: str,
    ev_id: str | None,
    connection_time,
    disconnection_time,
    kwh_delivered: float,
    t_current,
    current_a,
    t_pilot,
    pilot_a,
    nominal_period: float | None = None,
) -> ChargingSession:
    """Construct a session, intersecting current/pilot on shared timestamps.

    Raises RecordError with a reason code for anything that cannot become a
    valid session; ingestion layers turn those into per-record skips.
    """
    if not ev_id:
        raise RecordError("missing_ev_id")
    try:
        conn = parse_instant(connection_time)
        disc = parse_instant(disconnection_time)
    except RecordError:
        raise
    except Exception as exc:
        raise RecordError("bad_timestamp", str(exc)) from exc

    t_c = np.asarray(t_current, dtype=np.float64)
    v_c = np.asarray(current_a, dtype=np.float64)
    t_p = np.asarray(t_pilot, dtype=np.float64)
    v_p = np.asarray(pilot_a, dtype=np.float64)
    if t_c.shape != v_c.shape or t_p.shape != v_p.shape:
        raise RecordError("mismatched_lengths")
    if t_c.size == 0 or t_p.size == 0:
        raise RecordError("missing_samples")

    shared, c_vals, p_vals = _intersect_samples(t_c, v_c, t_p, v_p)
    if shared.size == 0:
        raise RecordError("empty_intersection")
    try:
        current = TimeSeries(shared, c_vals, nominal_period)
        pilot = TimeSeries(shared, p_vals, nominal_period)
        return ChargingSession(
            session_id=str(session_id),
            ev_id=str(ev_id),
            connection_time=conn,
            disconnection_time=disc,
            kwh_delivered=float(kwh_delivered),
            current=current,
            pilot=pilot,
        )
    except (TypeError, ValueError) as exc:
        raise RecordError("invalid_session", str(exc)) from exc


def session_from_record(record: Mapping) -> ChargingSession:
    """Build a session from one canonical record (paired or unpaired arrays).

    Paired form carries ``t`` shared by both series; the unpaired form carries
    ``t_current``/``t_pilot`` and is intersected on shared timestamps.
    """
    try:
        if "t" in record:
            t_c = t_p = record["t"]
        else:
            t_c, t_p = record["t_current"], record["t_pilot"]
        return build_session(
            session_id=record["session_id"],
            ev_id=record.get("ev_id"),
            connection_time=record["connection_time"],
            disconnection_time=record["disconnection_time"],
            kwh_delivered=record["kwh"],
            t_current=t_c,
            current_a=record["current_a"],
            t_pilot=t_p,
            pilot_a=record["pilot_a"],
            nominal_period=record.get("nominal_period"),
        )
    except RecordError:
        raise
    except KeyError as exc:
        raise RecordError("missing_field", str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise RecordError("bad_record", str(exc)) from exc


def session_to_record(session: ChargingSession) -> dict:
    """Canonical paired-record form of a session (inverse of session_from_record)."""
    record = {
        "session_id": session.session_id,
        "ev_id": session.ev_id,
        "connection_time": format_instant(session.connection_time),
        "disconnection_time": format_instant(session.disconnection_time),
        "kwh": session.kwh_delivered,
        "t": [float(x) for x in session.current.timestamps],
        "current_a": [float(x) for x in session.current.values],
        "pilot_a": [float(x) for x in session.pilot.values],
    }
    if session.current.nominal_period is not None:
        record["nominal_period"] = session.current.nominal_period
    return record


_ACN_ALIASES = {
    "session_id": ("sessionID", "session_id", "_id", "id"),
    "ev_id": ("userID", "userId", "user_id", "evID", "ev_id"),
    "connection_time": ("connectionTime", "connection_time"),
    "disconnection_time": ("disconnectTime", "disconnection_time", "disconnect_time"),
    "kwh": ("kWhDelivered", "kwh_delivered", "kwh"),
    "current": ("chargingCurrent", "charging_current", "current"),
    "pilot": ("pilotSignal", "pilot_signal", "pilot"),
}


def _acn_field(item: Mapping, key: str):
    for alias in _ACN_ALIASES[key]:
        if alias in item:
            return item[alias]
    return None


def _acn_samples(raw, connection: datetime) -> tuple[list[float], list[float]]:
    """Normalize an ACN sample array into (seconds-from-connection, values)."""
    if raw is None:
        raise RecordError("missing_samples")
    if isinstance(raw, Mapping):
        stamps = raw.get("timestamps")
        values = raw.get("values")
        if stamps is None or values is None or len(stamps) != len(values):
            raise RecordError("missing_samples")
        pairs = list(zip(stamps, values))
    elif isinstance(raw, Sequence):
        pairs = [(p[0], p[1]) for p in raw]
    else:
        raise RecordError("missing_samples")
    if not pairs:
        raise RecordError("missing_samples")
    t_out, v_out = [], []
    for stamp, value in pairs:
        if isinstance(stamp, (int, float)):
            # Epoch seconds and already-relative offsets are distinguished by
            # magnitude: anything before ~2001 as an epoch is taken as relative.
            seconds = float(stamp)
            if seconds > 1e9:
                seconds -= connection.timestamp()
        else:
            seconds = (parse_instant(stamp) - connection).total_seconds()
        t_out.append(seconds)
        v_out.append(float(value))
    return t_out, v_out


def adapt_acn_payload(raw) -> tuple[list[dict], IngestReport]:
    """Map an ACN-Data session document into canonical (unpaired) records.

    Accepts either the API response envelope (``{"_items": [...]}``) or a bare
    list of session documents.  Sessions without an EV/user identifier and
    sessions missing either sample array are dropped with a reason code.
    """
    if isinstance(raw, Mapping):
        items = raw.get("_items", raw.get("items"))
        if items is None:
            raise RecordError("bad_payload", "no _items in document")
    else:
        items = raw
    report = IngestReport()
    records: list[dict] = []
    for item in items:
        ev_id = _acn_field(item, "ev_id")
        if ev_id in (None, ""):
            report.skip("missing_ev_id")
            continue
        try:
            connection = parse_instant(_acn_field(item, "connection_time"))
            t_c, v_c = _acn_samples(_acn_field(item, "current"), connection)
            t_p, v_p = _acn_samples(_acn_field(item, "pilot"), connection)
            records.append(
                {
                    "session_id": str(_acn_field(item, "session_id")),
                    "ev_id": str(ev_id),
                    "connection_time": format_instant(connection),
                    "disconnection_time": format_instant(
                        parse_instant(_acn_field(item, "disconnection_time"))
                    ),
                    "kwh": float(_acn_field(item, "kwh") or 0.0),
                    "t_current": t_c,
                    "current_a": v_c,
                    "t_pilot": t_p,
                    "pilot_a": v_p,
                }
            )
            report.n_ingested += 1
        except RecordError as exc:
            report.skip(exc.reason)
        except (TypeError, ValueError, KeyError, IndexError):
            report.skip("bad_record")
    return records, report


def filter_eligible(fleet: Fleet, min_tailed_sessions: int = 8, tail_params=None) -> Fleet:
    """Keep EVs with at least ``min_tailed_sessions`` tail-bearing sessions.

    Sessions without a detectable tail are dropped from the retained EVs, so
    the result contains employable sessions only.  Idempotent.
    """
    from .extraction import TailParams, extract_tail

    if not fleet.sessions_by_ev:
        raise ValueError("cannot filter an empty fleet")
    params = tail_params if tail_params is not None else TailParams()
    kept: dict[str, tuple[ChargingSession, ...]] = {}
    for ev_id, sessions in fleet.sessions_by_ev.items():
        tailed = tuple(s for s in sessions if extract_tail(s, params) is not None)
        if len(tailed) >= min_tailed_sessions:
            kept[ev_id] = tailed
    return Fleet(kept, provenance=fleet.provenance, cutoff_date=fleet.cutoff_date)
