"""Seeded CC/CV charging-session generator with recorded ground truth.

Each vehicle carries a physical signature (current ceiling, switch point,
decay constant, pilot shortfall, ripple, noise).  A session charges at
constant current until the state of charge hits the switch point, then the
current decays exponentially to a cutoff and stays at exactly zero until
disconnection.  The true constant-voltage onset index and the true pilot
shortfall are returned alongside every session, which is what lets the
pipeline be verified end to end without real measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .data_model import ChargingSession, Fleet, TimeSeries

__all__ = [
    "EVSignature",
    "ScheduleSpec",
    "SessionTruth",
    "FleetTruth",
    "generate_session",
    "generate_fleet",
    "DEFAULT_BASE_SIGNATURE",
    "SIGNATURE_HALF_RANGES",
]

LINE_VOLTAGE = 240.0
DECAY_CUTOFF_A = 0.2
_J_PER_KWH = 3.6e6


@dataclass(frozen=True)
class EVSignature:
    """Per-vehicle physical parameters."""

    i_max: float = 30.0
    soc_switch: float = 0.7
    tau: float = 45.0
    delta_offset: float = 2.0
    ripple_amp: float = 1.6
    ripple_period: float = 35.0
    noise_sigma: float = 0.06
    capacity_kwh: float = 34.0

    def __post_init__(self):
        if self.i_max <= 0:
            raise ValueError("i_max must be > 0")
        if not 0.6 <= self.soc_switch <= 0.8:
            raise ValueError("soc_switch must lie in [0.6, 0.8]")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.delta_offset < 0:
            raise ValueError("delta_offset must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.ripple_period <= 0 or self.capacity_kwh <= 0:
            raise ValueError("ripple_period and capacity_kwh must be > 0")


@dataclass(frozen=True)
class ScheduleSpec:
    """Piecewise-constant pilot schedule plus stochastic grid-side events."""

    levels: tuple[float, ...] = (32.0,)
    change_points: tuple[int, ...] = (0,)
    idle_gap_prob: float = 0.0
    idle_gap_mean: int = 40
    spike_prob: float = 0.0
    spike_magnitude: float = 4.0

    def __post_init__(self):
        if len(self.levels) != len(self.change_points) or not self.levels:
            raise ValueError("levels and change_points must be non-empty and equal length")
        if self.change_points[0] != 0:
            raise ValueError("first change point must be 0")
        if any(b >= a for a, b in zip(self.change_points[1:], self.change_points[:-1])):
            raise ValueError("change points must be increasing")
        if any(level < 0 for level in self.levels):
            raise ValueError("pilot levels must be >= 0")

    def pilot_at(self, n: int) -> np.ndarray:
        """Pilot level at sample indices [0, n), ignoring stochastic events."""
        idx = np.searchsorted(np.asarray(self.change_points), np.arange(n), side="right") - 1
        return np.asarray(self.levels, dtype=np.float64)[idx]


@dataclass(frozen=True)
class SessionTruth:
    tail_onset: int | None
    delta_offset: float


@dataclass(frozen=True)
class FleetTruth:
    signatures: dict
    onsets: dict


def generate_session(
    sig: EVSignature,
    sched: ScheduleSpec,
    soc0: float,
    period: float,
    seed,
    session_id: str = "synthetic",
    ev_id: str = "synthetic-ev",
    connection_time: datetime | None = None,
    max_samples: int = 2400,
) -> tuple[ChargingSession, SessionTruth]:
    """Simulate one charging session.

    Sessions whose schedule never brings the state of charge to the switch
    point within max_samples are emitted without a tail (truth.tail_onset is
    None).  Noise and ripple apply to the constant-current phase, noise alone
    to the decay, and the trailing zero segment is exactly zero.
    """
    if not 0.0 <= soc0 < 1.0:
        raise ValueError("soc0 must lie in [0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if connection_time is None:
        connection_time = datetime(2021, 1, 1, 8, 0, tzinfo=timezone.utc)

    # Draw order is fixed so a seed fully determines the session.
    phase = rng.uniform(0.0, 2.0 * math.pi)
    noise_cc = rng.normal(0.0, sig.noise_sigma, size=max_samples) if sig.noise_sigma > 0 else np.zeros(max_samples)
    spike_hits = (
        np.nonzero(rng.random(max_samples) < sched.spike_prob)[0]
        if sched.spike_prob > 0
        else np.empty(0, dtype=np.int64)
    )
    spike_sizes = rng.uniform(0.5, 1.5, size=spike_hits.size) * sched.spike_magnitude
    gap_starts = (
        np.nonzero(rng.random(max_samples) < sched.idle_gap_prob)[0]
        if sched.idle_gap_prob > 0
        else np.empty(0, dtype=np.int64)
    )
    gap_lengths = 1 + rng.geometric(1.0 / max(1, sched.idle_gap_mean), size=gap_starts.size)

    horizon = np.arange(max_samples)
    pilot = sched.pilot_at(max_samples)
    for start, length in zip(gap_starts, gap_lengths):
        pilot[start : start + length] = 0.0

    ripple = sig.ripple_amp * np.sin(2.0 * math.pi * horizon / sig.ripple_period + phase)
    cc = np.minimum(pilot, sig.i_max) - sig.delta_offset + ripple + noise_cc
    cc = np.where(pilot > 0, np.maximum(cc, 0.0), 0.0)
    cc[spike_hits] += spike_sizes

    soc = soc0 + np.cumsum(cc) * LINE_VOLTAGE * period / (_J_PER_KWH * sig.capacity_kwh)
    reached = np.nonzero(soc >= sig.soc_switch)[0]

    if reached.size == 0:
        current = cc
        pilot_out = pilot
        truth = SessionTruth(tail_onset=None, delta_offset=sig.delta_offset)
    else:
        t_sw = int(reached[0])
        c_sw = max(float(min(pilot[t_sw], sig.i_max) - sig.delta_offset), 1.0)
        n_decay = max(1, math.ceil(sig.tau * math.log(c_sw / DECAY_CUTOFF_A)))
        decay = c_sw * np.exp(-np.arange(n_decay) / sig.tau)
        if sig.noise_sigma > 0:
            decay = np.maximum(decay + rng.normal(0.0, sig.noise_sigma, size=n_decay), 0.0)
        linger = int(rng.integers(40, 161))
        n_total = t_sw + n_decay + linger
        current = np.concatenate([cc[:t_sw], decay, np.zeros(linger)])
        pilot_out = sched.pilot_at(n_total)
        # Gap events only exist inside the simulated horizon.
        m = min(n_total, max_samples)
        pilot_out[:m] = pilot[:m]
        truth = SessionTruth(tail_onset=t_sw, delta_offset=sig.delta_offset)

    n = current.size
    timestamps = np.arange(n, dtype=np.float64) * period
    kwh = float(np.sum(current) * LINE_VOLTAGE * period / _J_PER_KWH)
    session = ChargingSession(
        session_id=session_id,
        ev_id=ev_id,
        connection_time=connection_time,
        disconnection_time=connection_time + timedelta(seconds=float(n) * period),
        kwh_delivered=kwh,
        current=TimeSeries(timestamps, current, nominal_period=period),
        pilot=TimeSeries(timestamps, pilot_out[:n], nominal_period=period),
    )
    return session, truth


DEFAULT_BASE_SIGNATURE = EVSignature()

# Half-widths of the uniform signature draws at signature_spread = 1.
SIGNATURE_HALF_RANGES = {
    "i_max": 6.0,
    "soc_switch": 0.1,
    "tau": 25.0,
    "delta_offset": 1.8,
    "ripple_amp": 0.6,
    "ripple_period": 5.0,
    "noise_sigma": 0.04,
    "capacity_kwh": 10.0,
}

_BASE_PILOT_A = 32.0


def _draw_signature(rng: np.random.Generator, spread: float, base: EVSignature) -> EVSignature:
    values = {}
    for name in sorted(SIGNATURE_HALF_RANGES):
        u = float(rng.uniform(-1.0, 1.0))
        values[name] = getattr(base, name) + spread * SIGNATURE_HALF_RANGES[name] * u
    values["soc_switch"] = min(0.8, max(0.6, values["soc_switch"]))
    values["delta_offset"] = max(0.0, values["delta_offset"])
    values["noise_sigma"] = max(0.0, values["noise_sigma"])
    return EVSignature(**values)


def _draw_schedule(rng: np.random.Generator, max_samples: int) -> ScheduleSpec:
    levels = [_BASE_PILOT_A]
    points = [0]
    if rng.random() < 0.35:
        n_dips = int(rng.integers(1, 3))
        starts = np.sort(rng.integers(30, int(max_samples * 0.8), size=n_dips))
        for start in starts:
            if start <= points[-1]:
                continue
            dip_level = float(rng.uniform(10.0, 26.0))
            duration = int(rng.integers(40, 121))
            points.extend([int(start), int(start) + duration])
            levels.extend([dip_level, _BASE_PILOT_A])
    return ScheduleSpec(
        levels=tuple(levels),
        change_points=tuple(points),
        idle_gap_prob=0.0015,
        idle_gap_mean=40,
        spike_prob=0.002,
        spike_magnitude=4.0,
    )


def generate_fleet(
    n_evs: int,
    sessions_per_ev: int,
    signature_spread: float = 1.0,
    seed: int = 0,
    period: float = 20.0,
    base_signature: EVSignature = DEFAULT_BASE_SIGNATURE,
    start_time: datetime | None = None,
    max_samples: int = 2400,
) -> tuple[Fleet, FleetTruth]:
    """Draw per-EV signatures around the base and simulate every session.

    signature_spread scales the half-widths in SIGNATURE_HALF_RANGES; zero
    spread makes every EV physically identical, which is the
    no-separability control case.
    """
    if n_evs < 1 or sessions_per_ev < 1:
        raise ValueError("need at least one EV and one session per EV")
    if start_time is None:
        start_time = datetime(2021, 1, 1, 8, 0, tzinfo=timezone.utc)

    signatures: dict[str, EVSignature] = {}
    onsets: dict[str, int | None] = {}
    sessions = []
    for e in range(n_evs):
        ev_id = f"ev{e:03d}"
        sig_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(e, 0)))
        sig = _draw_signature(sig_rng, signature_spread, base_signature)
        signatures[ev_id] = sig
        for k in range(sessions_per_ev):
            sess_rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(e, 1, k))
            )
            soc0 = float(sess_rng.uniform(0.10, 0.40))
            sched = _draw_schedule(sess_rng, max_samples)
            connection = start_time + timedelta(
                days=k, minutes=int(sess_rng.integers(0, 600))
            )
            session_id = f"{ev_id}-s{k:04d}"
            session, truth = generate_session(
                sig,
                sched,
                soc0,
                period,
                seed=sess_rng,
                session_id=session_id,
                ev_id=ev_id,
                connection_time=connection,
                max_samples=max_samples,
            )
            sessions.append(session)
            onsets[session_id] = truth.tail_onset
    fleet = Fleet.from_sessions(sessions, provenance="synthetic")
    return fleet, FleetTruth(signatures=signatures, onsets=onsets)
