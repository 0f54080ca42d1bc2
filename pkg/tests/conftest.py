from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from evprofiler import FeatureTable, TailParams, extract_fleet, generate_fleet
from evprofiler.data_model import ChargingSession, TimeSeries


@pytest.fixture(scope="session")
def small_fleet_and_truth():
    return generate_fleet(6, 12, seed=5)


@pytest.fixture(scope="session")
def small_fleet(small_fleet_and_truth):
    return small_fleet_and_truth[0]


@pytest.fixture(scope="session")
def small_records(small_fleet):
    records, _skipped = extract_fleet(small_fleet, TailParams())
    return records


@pytest.fixture(scope="session")
def small_table(small_records):
    return FeatureTable.from_records(small_records, mode="modern")


@pytest.fixture(scope="session")
def small_legacy_table(small_records):
    return FeatureTable.from_records(small_records, mode="legacy")


def make_session(current, pilot=None, period=10.0, ev_id="ev-a", session_id="s-1", kwh=5.0):
    """Hand-built session for unit tests; pilot defaults to a constant 32 A."""
    current = np.asarray(current, dtype=np.float64)
    if pilot is None:
        pilot = np.full(current.size, 32.0)
    t = np.arange(current.size, dtype=np.float64) * period
    start = datetime(2021, 3, 1, 9, 0, tzinfo=timezone.utc)
    return ChargingSession(
        session_id=session_id,
        ev_id=ev_id,
        connection_time=start,
        disconnection_time=start + timedelta(seconds=period * current.size),
        kwh_delivered=kwh,
        current=TimeSeries(t, current, nominal_period=period),
        pilot=TimeSeries(t, pilot, nominal_period=period),
    )


@pytest.fixture
def session_factory():
    return make_session


def synthetic_feature_table(n_evs, rows_per_ev, n_features=8, seed=0, separation=3.0, mode="modern"):
    """Random feature table with per-EV mean offsets; no pipeline involved."""
    rng = np.random.default_rng(seed)
    names = tuple(f"f{i:02d}" for i in range(n_features))
    blocks, ev_ids, session_ids, times = [], [], [], []
    start = datetime(2021, 1, 1, tzinfo=timezone.utc)
    for e in range(n_evs):
        center = rng.normal(0.0, separation, size=n_features)
        blocks.append(center + rng.normal(0.0, 1.0, size=(rows_per_ev, n_features)))
        for k in range(rows_per_ev):
            ev_ids.append(f"ev{e:02d}")
            session_ids.append(f"ev{e:02d}-s{k:03d}")
            times.append(start + timedelta(days=k, hours=e))
    return FeatureTable(
        names=names,
        matrix=np.vstack(blocks),
        ev_ids=tuple(ev_ids),
        session_ids=tuple(session_ids),
        connection_times=tuple(times),
        imputed_counts=tuple(0 for _ in ev_ids),
        mode=mode,
    )


@pytest.fixture
def feature_table_factory():
    return synthetic_feature_table
