import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evprofiler import (
    TailParams,
    compute_delta,
    extract_record,
    extract_tail,
    find_t_start,
    generate_fleet,
    moving_average,
    moving_median,
)

# ---------------------------------------------------------------------------
# Independent transliteration of the published tail-walk pseudocode, kept
# free of any package code so it can arbitrate the implementation.


def oracle_moving_average(x, n_avg):
    out = []
    for t in range(len(x)):
        lo = max(0, t - n_avg + 1)
        window = x[lo : t + 1]
        out.append(sum(window) / len(window))
    return out


def oracle_tail_walk(current, n_avg, epsilon, t_max, zero_threshold, min_tail_len):
    """Returns (t_start, s) or None, walking the filtered series backward."""
    y = oracle_moving_average(list(current), n_avg)
    if y[-1] >= zero_threshold:
        return None
    i = len(y) - 1
    while i >= 0 and y[i] < zero_threshold:
        i -= 1
    t_start = i + 1
    n = 0
    s = 0
    for t in range(t_start, 0, -1):
        if y[t] - y[t - 1] > epsilon:
            n += 1
        else:
            n = 0
            s += 1
        if n == t_max:
            break
    if s < min_tail_len:
        return None
    return t_start, s


# ---------------------------------------------------------------------------
# moving_average


def test_moving_average_constant_preserved():
    assert moving_average([5.0, 5.0, 5.0, 5.0], 3).tolist() == [5.0, 5.0, 5.0, 5.0]


def test_moving_average_truncated_head():
    assert moving_average([2.0, 4.0, 6.0], 2).tolist() == [2.0, 3.0, 5.0]


def test_moving_average_matches_bruteforce_oracle():
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.uniform(0.5, 1.5, size=1000)
        got = moving_average(x, 25)
        want = oracle_moving_average(list(x), 25)
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=0)


def test_moving_average_rejects_empty():
    with pytest.raises(ValueError):
        moving_average([], 3)


@settings(max_examples=50)
@given(
    st.lists(st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=1, max_size=120),
    st.integers(min_value=1, max_value=30),
)
def test_moving_average_within_window_bounds(values, n_avg):
    out = moving_average(values, n_avg)
    for t, y in enumerate(out):
        lo = max(0, t - n_avg + 1)
        window = values[lo : t + 1]
        assert min(window) - 1e-9 <= y <= max(window) + 1e-9


# ---------------------------------------------------------------------------
# moving_median


def test_moving_median_constant():
    x = np.full(40, 7.5)
    assert moving_median(x, 20, 25) == 7.5


def test_moving_median_rejects_spike():
    assert moving_median([1.0, 100.0, 2.0], 1, 2) == 2.0


def test_moving_median_matches_sort_oracle():
    rng = np.random.default_rng(1)
    x = rng.normal(size=500)
    for t in rng.integers(0, 500, size=100):
        lo = max(0, int(t) - 12)
        hi = min(500, int(t) + 13 + 1)
        window = sorted(x[lo:hi])
        m = len(window)
        want = window[m // 2] if m % 2 else (window[m // 2 - 1] + window[m // 2]) / 2
        assert moving_median(x, int(t), 25) == pytest.approx(want, rel=1e-12)


def test_moving_median_index_out_of_range():
    with pytest.raises(IndexError):
        moving_median([1.0, 2.0], 5, 3)


# ---------------------------------------------------------------------------
# find_t_start


def test_find_t_start_basic():
    assert find_t_start([3.0, 3.0, 0.0, 0.0, 0.0], 0.1) == 2


def test_find_t_start_zero_run_not_at_end():
    assert find_t_start([3.0, 3.0, 0.0, 0.0, 3.0], 0.1) is None


def test_find_t_start_all_zero():
    assert find_t_start([0.0, 0.0, 0.0], 0.1) == 0


# ---------------------------------------------------------------------------
# extract_tail


def _plateau_decay_series(rise=25, plateau=100, decay=60, zeros=40):
    """Rise, gently ascending plateau, monotone decay, trailing zeros."""
    up = np.linspace(0.0, 27.0, rise, endpoint=False)
    flat = np.linspace(27.0, 30.0, plateau, endpoint=False)
    down = np.linspace(30.0, 0.0, decay, endpoint=False)
    return np.concatenate([up, flat, down, np.zeros(zeros)]), rise + plateau


def test_extract_tail_recovers_decay_segment(session_factory):
    series, decay_start = _plateau_decay_series()
    tail = extract_tail(session_factory(series), TailParams())
    assert tail is not None
    assert abs(tail.begin - decay_start) <= TailParams().t_max
    assert len(tail.current_values) == tail.s + 1
    assert len(tail.pilot_values) == tail.s + 1


def test_extract_tail_absent_without_trailing_zeros(session_factory):
    series = np.concatenate([np.linspace(0, 30, 50), np.full(100, 30.0)])
    assert extract_tail(session_factory(series), TailParams()) is None


def test_extract_tail_all_zero_is_absent(session_factory):
    # t_start lands at index 0, the walk never runs, s = 0 < min_tail_len.
    assert extract_tail(session_factory(np.zeros(80)), TailParams()) is None


def test_extract_tail_dip_absorbed_by_counter_reset(session_factory):
    # Unfiltered walk (n_avg=1): a 3-sample forward rise inside the decay
    # increments the descending counter but resets before t_max, so the tail
    # keeps extending past the dip.
    decay = list(np.linspace(30.0, 0.5, 60))
    decay[30:33] = [decay[30] + 2.0, decay[30] + 4.0, decay[30] + 6.0]
    series = np.concatenate([np.full(5, 30.0), decay, np.zeros(10)])
    params = TailParams(n_avg=1, epsilon=0.01, t_max=10, zero_threshold=0.1, min_tail_len=5)
    tail = extract_tail(session_factory(series), params)
    oracle = oracle_tail_walk(series, 1, 0.01, 10, 0.1, 5)
    assert tail is not None and oracle is not None
    assert (tail.t_start, tail.s) == oracle
    # the walk continued past the dip: the tail spans more than the post-dip decay
    assert tail.s > 30


def test_extract_tail_agrees_with_transliterated_oracle():
    fleet, _ = generate_fleet(4, 15, seed=17)
    params = TailParams()
    checked = 0
    for session in fleet.iter_sessions():
        got = extract_tail(session, params)
        want = oracle_tail_walk(
            session.current.values,
            params.n_avg,
            params.epsilon,
            params.t_max,
            params.zero_threshold,
            params.min_tail_len,
        )
        if want is None:
            assert got is None
        else:
            assert got is not None
            assert (got.t_start, got.s) == want
        checked += 1
    assert checked == 60


def test_tail_and_delta_partition_prefix(small_records):
    for rec in small_records:
        assert len(rec.delta) == rec.t_start - rec.s
        assert len(rec.tail_current) == rec.s + 1


# ---------------------------------------------------------------------------
# compute_delta


def test_delta_constant_offset(session_factory):
    session = session_factory(np.full(60, 30.0))
    delta = compute_delta(session, 40, 25)
    assert len(delta) == 40
    np.testing.assert_allclose(delta.values, 2.0)


def test_delta_suppresses_spike(session_factory):
    current = np.full(60, 30.0)
    current[25] += 50.0
    delta = compute_delta(session_factory(current), 40, 25)
    np.testing.assert_allclose(delta.values, 2.0)


def test_delta_requires_constant_current_phase(session_factory):
    with pytest.raises(ValueError):
        compute_delta(session_factory(np.full(30, 30.0)), 0, 25)


def test_delta_recovers_known_offset_with_ripple():
    from evprofiler.synth import EVSignature, ScheduleSpec, generate_session

    sig = EVSignature(i_max=40.0, delta_offset=2.0, noise_sigma=0.05, ripple_amp=1.0,
                      ripple_period=30.0, capacity_kwh=40.0)
    sched = ScheduleSpec(levels=(32.0,), change_points=(0,))
    session, _truth = generate_session(sig, sched, soc0=0.2, period=20.0, seed=9)
    rec = extract_record(session, TailParams())
    assert rec is not None
    assert abs(float(rec.delta.mean()) - 2.0) < 0.05


def test_tail_params_validation():
    with pytest.raises(ValueError):
        TailParams(n_avg=0)
    with pytest.raises(ValueError):
        TailParams(epsilon=0.0)
    assert TailParams().min_tail_len == 25
    assert TailParams(n_avg=7).min_tail_len == 7
