"""Feature extraction over (current tail, delta series) and chi-squared top-k selection.

The catalog applies 64 deterministic statistics to each of the two derived
series (prefixed ``tail_`` / ``delta_``), for a fixed 128-entry vector.  The
legacy mode reproduces the original 18-feature scheme (8 per tail for both the
current and pilot tails, plus delivered energy and session duration).
Non-finite catalog outputs (undefined moments on degenerate series) are
replaced by 0 and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from .extraction import DeltaSeries, Tail, TailRecord

__all__ = [
    "CATALOG_NAMES",
    "MODERN_FEATURE_NAMES",
    "LEGACY_FEATURE_NAMES",
    "CATALOG_VERSION",
    "FeatureVector",
    "FeatureTable",
    "LabeledDataset",
    "SelectionModel",
    "catalog_values",
    "featurize",
    "featurize_record",
    "featurize_legacy",
    "fit_selection",
    "apply_selection",
]

CATALOG_VERSION = 1

_ACF_LAGS_BASE = (1, 2, 3, 4, 5)
_ACF_LAGS_EXT = (6, 7, 8, 9, 10)
_QUANTILES = (0.05, 0.1, 0.25, 0.75, 0.9, 0.95)
_N_FFT = 10
_N_HIST_BINS = 10
_FFT_MIN_LEN = 2 * _N_FFT + 1

CATALOG_NAMES: tuple[str, ...] = (
    "mean",
    "median",
    "std",
    "variance",
    "min",
    "max",
    "range",
    "sum",
    "rms",
    "abs_energy",
    "mean_abs_change",
    "mean_change",
    "trend_slope",
    "trend_intercept",
    "trend_corr",
    *[f"autocorr_lag{k}" for k in _ACF_LAGS_BASE],
    *[f"quantile_{int(q * 100):02d}" for q in _QUANTILES],
    "skewness",
    "kurtosis",
    "count_above_mean",
    "count_below_mean",
    "longest_run_above_mean",
    "longest_run_below_mean",
    "n_local_maxima",
    "n_local_minima",
    "mean_crossings",
    "first_value",
    "last_value",
    "length",
    "index_of_max",
    "index_of_min",
    "mean_first_decile",
    "mean_last_decile",
    "hist_entropy",
    *[f"fft_mag_{k}" for k in range(1, _N_FFT + 1)],
    "sum_abs_second_diff",
    *[f"autocorr_lag{k}" for k in _ACF_LAGS_EXT],
    "mean_abs_dev",
    "median_abs_dev",
    "iqr",
    "rmssd",
    "sum_abs_change",
)

MODERN_FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{prefix}_{name}" for prefix in ("tail", "delta") for name in CATALOG_NAMES
)

LEGACY_STATS = ("mean", "mode", "median", "max", "std", "autocorr", "length", "slope")
LEGACY_FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{prefix}_{name}" for prefix in ("ctail", "ptail") for name in LEGACY_STATS
) + ("kwh", "duration_s")


def _longest_run(mask: np.ndarray) -> int:
    best = run = 0
    for hit in mask:
        run = run + 1 if hit else 0
        if run > best:
            best = run
    return best


def _autocorr(x: np.ndarray, mu: float, m2: float, lag: int) -> float:
    n = x.size
    if lag >= n or m2 == 0.0:
        return math.nan
    dev = x - mu
    return float(np.dot(dev[: n - lag], dev[lag:]) / ((n - lag) * m2))


def catalog_values(series) -> tuple[np.ndarray, list[str]]:
    """Evaluate the 64-entry catalog on one series.

    Returns the values in catalog order plus the names of entries whose raw
    result was non-finite and therefore imputed to 0.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("catalog needs a non-empty 1-D series")
    n = x.size
    mu = float(np.mean(x))
    m2 = float(np.mean((x - mu) ** 2))
    sd = math.sqrt(m2)
    d = np.diff(x)
    t = np.arange(n, dtype=np.float64)

    out: list[float] = []
    out.append(mu)
    out.append(float(np.median(x)))
    out.append(sd)
    out.append(m2)
    out.append(float(np.min(x)))
    out.append(float(np.max(x)))
    out.append(float(np.max(x) - np.min(x)))
    out.append(float(np.sum(x)))
    out.append(math.sqrt(float(np.mean(x * x))))
    out.append(float(np.dot(x, x)))
    out.append(float(np.mean(np.abs(d))) if d.size else math.nan)
    out.append(float(np.mean(d)) if d.size else math.nan)

    t_mu = float(np.mean(t))
    t_var = float(np.mean((t - t_mu) ** 2))
    cov = float(np.mean((t - t_mu) * (x - mu)))
    slope = cov / t_var if t_var > 0 else math.nan
    out.append(slope)
    out.append(mu - slope * t_mu if t_var > 0 else math.nan)
    out.append(cov / (math.sqrt(t_var) * sd) if t_var > 0 and sd > 0 else math.nan)

    for lag in _ACF_LAGS_BASE:
        out.append(_autocorr(x, mu, m2, lag))
    for q in _QUANTILES:
        out.append(float(np.quantile(x, q)))

    if m2 > 0:
        m3 = float(np.mean((x - mu) ** 3))
        m4 = float(np.mean((x - mu) ** 4))
        out.append(m3 / m2**1.5)
        out.append(m4 / m2**2 - 3.0)
    else:
        out.append(math.nan)
        out.append(math.nan)

    above = x > mu
    below = x < mu
    out.append(float(np.count_nonzero(above)))
    out.append(float(np.count_nonzero(below)))
    out.append(float(_longest_run(above)))
    out.append(float(_longest_run(below)))
    interior = x[1:-1]
    out.append(float(np.count_nonzero((interior > x[:-2]) & (interior > x[2:]))) if n >= 3 else 0.0)
    out.append(float(np.count_nonzero((interior < x[:-2]) & (interior < x[2:]))) if n >= 3 else 0.0)
    signs = np.sign(x - mu)
    signs = signs[signs != 0]
    out.append(float(np.count_nonzero(np.diff(signs) != 0)) if signs.size else 0.0)

    out.append(float(x[0]))
    out.append(float(x[-1]))
    out.append(float(n))
    out.append(float(np.argmax(x)))
    out.append(float(np.argmin(x)))
    decile = max(1, math.ceil(n / 10))
    out.append(float(np.mean(x[:decile])))
    out.append(float(np.mean(x[-decile:])))

    counts, _ = np.histogram(x, bins=_N_HIST_BINS)
    probs = counts[counts > 0] / n
    out.append(float(-np.sum(probs * np.log(probs))))

    m = n if n >= _FFT_MIN_LEN else _FFT_MIN_LEN
    spectrum = np.fft.rfft(x, m)
    for k in range(1, _N_FFT + 1):
        out.append(float(np.abs(spectrum[k])))

    out.append(float(np.sum(np.abs(np.diff(d)))) if d.size >= 2 else 0.0)

    for lag in _ACF_LAGS_EXT:
        out.append(_autocorr(x, mu, m2, lag))
    out.append(float(np.mean(np.abs(x - mu))))
    out.append(float(np.median(np.abs(x - np.median(x)))))
    out.append(float(np.quantile(x, 0.75) - np.quantile(x, 0.25)))
    out.append(math.sqrt(float(np.mean(d * d))) if d.size else math.nan)
    out.append(float(np.sum(np.abs(d))))

    values = np.asarray(out, dtype=np.float64)
    bad = ~np.isfinite(values)
    imputed = [CATALOG_NAMES[i] for i in np.nonzero(bad)[0]]
    values[bad] = 0.0
    return values, imputed


@dataclass(frozen=True)
class FeatureVector:
    """Named feature values for one session, in global catalog order."""

    values: np.ndarray
    names: tuple[str, ...]
    ev_id: str
    session_id: str
    connection_time: datetime | None = None
    imputed: tuple[str, ...] = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(self.names):
            raise ValueError("values and names differ in length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("feature values must be finite")


def featurize(
    tail: Tail | Sequence[float],
    delta: DeltaSeries | Sequence[float],
    ev_id: str = "",
    session_id: str = "",
    connection_time: datetime | None = None,
) -> FeatureVector:
    """Catalog features of the current tail and the delta series, concatenated."""
    tail_values = tail.current_values if isinstance(tail, Tail) else tail
    delta_values = delta.values if isinstance(delta, DeltaSeries) else delta
    v_tail, imp_tail = catalog_values(tail_values)
    v_delta, imp_delta = catalog_values(delta_values)
    return FeatureVector(
        values=np.concatenate([v_tail, v_delta]),
        names=MODERN_FEATURE_NAMES,
        ev_id=ev_id,
        session_id=session_id,
        connection_time=connection_time,
        imputed=tuple(f"tail_{n}" for n in imp_tail) + tuple(f"delta_{n}" for n in imp_delta),
    )


def featurize_record(record: TailRecord) -> FeatureVector:
    return featurize(
        record.tail_current,
        record.delta,
        ev_id=record.ev_id,
        session_id=record.session_id,
        connection_time=record.connection_time,
    )


def _mode_rounded(x: np.ndarray) -> float:
    """Most frequent value after rounding to 0.1 A; ties go to the smallest value."""
    values, counts = np.unique(np.round(x, 1), return_counts=True)
    return float(values[np.argmax(counts)])


def _legacy_stats(x: np.ndarray) -> tuple[list[float], list[str]]:
    n = x.size
    mu = float(np.mean(x))
    m2 = float(np.mean((x - mu) ** 2))
    t = np.arange(n, dtype=np.float64)
    t_var = float(np.mean((t - np.mean(t)) ** 2))
    slope = (
        float(np.mean((t - np.mean(t)) * (x - mu))) / t_var if t_var > 0 else math.nan
    )
    vals = [
        mu,
        _mode_rounded(x),
        float(np.median(x)),
        float(np.max(x)),
        math.sqrt(m2),
        _autocorr(x, mu, m2, 1),
        float(n),
        slope,
    ]
    arr = np.asarray(vals, dtype=np.float64)
    bad = ~np.isfinite(arr)
    imputed = [LEGACY_STATS[i] for i in np.nonzero(bad)[0]]
    arr[bad] = 0.0
    return [float(v) for v in arr], imputed


def featurize_legacy(record: TailRecord) -> FeatureVector:
    """The original 18-feature scheme: 8 stats per tail (current and pilot),
    plus delivered kWh and session duration."""
    c_vals, c_imp = _legacy_stats(record.tail_current)
    p_vals, p_imp = _legacy_stats(record.tail_pilot)
    values = np.asarray(c_vals + p_vals + [record.kwh, record.duration_s], dtype=np.float64)
    return FeatureVector(
        values=values,
        names=LEGACY_FEATURE_NAMES,
        ev_id=record.ev_id,
        session_id=record.session_id,
        connection_time=record.connection_time,
        imputed=tuple(f"ctail_{n}" for n in c_imp) + tuple(f"ptail_{n}" for n in p_imp),
    )


@dataclass(frozen=True)
class FeatureTable:
    """Feature vectors for many sessions with identical name order."""

    names: tuple[str, ...]
    matrix: np.ndarray
    ev_ids: tuple[str, ...]
    session_ids: tuple[str, ...]
    connection_times: tuple[datetime, ...]
    imputed_counts: tuple[int, ...]
    mode: str = "modern"

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", mat)
        if mat.ndim != 2 or mat.shape[1] != len(self.names):
            raise ValueError("matrix shape does not match names")
        if not (
            mat.shape[0]
            == len(self.ev_ids)
            == len(self.session_ids)
            == len(self.connection_times)
            == len(self.imputed_counts)
        ):
            raise ValueError("row metadata lengths do not match the matrix")
        if self.mode not in ("modern", "legacy"):
            raise ValueError(f"unknown feature mode {self.mode!r}")

    @classmethod
    def from_records(cls, records: Iterable[TailRecord], mode: str = "modern") -> "FeatureTable":
        ordered = sorted(records, key=lambda r: (r.ev_id, r.connection_time, r.session_id))
        if not ordered:
            raise ValueError("no records to featurize")
        build = featurize_record if mode == "modern" else featurize_legacy
        vectors = [build(r) for r in ordered]
        return cls(
            names=vectors[0].names,
            matrix=np.vstack([v.values for v in vectors]),
            ev_ids=tuple(v.ev_id for v in vectors),
            session_ids=tuple(v.session_id for v in vectors),
            connection_times=tuple(v.connection_time for v in vectors),
            imputed_counts=tuple(len(v.imputed) for v in vectors),
            mode=mode,
        )

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def ev_row_indices(self, ev_id: str) -> np.ndarray:
        return np.nonzero(np.asarray(self.ev_ids) == np.asarray(ev_id))[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureTable):
            return NotImplemented
        return (
            self.names == other.names
            and self.mode == other.mode
            and self.ev_ids == other.ev_ids
            and self.session_ids == other.session_ids
            and self.connection_times == other.connection_times
            and self.imputed_counts == other.imputed_counts
            and np.array_equal(self.matrix, other.matrix)
        )


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix plus binary labels (1 = target EV)."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    target_ev: str
    ev_ids: tuple[str, ...]
    session_ids: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2 or X.shape[0] != y.size or X.shape[1] != len(self.names):
            raise ValueError("inconsistent labeled dataset shape")
        if not np.all(np.isin(y, (0, 1))):
            raise ValueError("labels must be binary")
        for label, ev in zip(y, self.ev_ids):
            if (label == 1) != (ev == self.target_ev):
                raise ValueError("positive labels must carry the target EV id")

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.names == other.names
            and self.target_ev == other.target_ev
            and self.ev_ids == other.ev_ids
            and self.session_ids == other.session_ids
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True)
class SelectionModel:
    """Chi-squared top-k selection fitted on training rows.

    Scaling state (per-feature train min/max) is part of the model so that
    apply-time inputs land in [0, 1] exactly like the fit-time inputs.
    """

    names: tuple[str, ...]
    selected: tuple[int, ...]
    scores: np.ndarray
    train_min: np.ndarray
    train_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))
        object.__setattr__(self, "train_min", np.asarray(self.train_min, dtype=np.float64))
        object.__setattr__(self, "train_max", np.asarray(self.train_max, dtype=np.float64))
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("selected indices must be unique")
        if self.selected and (min(self.selected) < 0 or max(self.selected) >= len(self.names)):
            raise ValueError("selected index out of catalog bounds")

    @property
    def selected_names(self) -> tuple[str, ...]:
        return tuple(self.names[i] for i in self.selected)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SelectionModel):
            return NotImplemented
        return (
            self.names == other.names
            and self.selected == other.selected
            and np.array_equal(self.scores, other.scores)
            and np.array_equal(self.train_min, other.train_min)
            and np.array_equal(self.train_max, other.train_max)
        )


def _scale_01(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(span > 0, (X - lo) / np.where(span > 0, span, 1.0), 0.0)
    return np.clip(scaled, 0.0, 1.0)


def fit_selection(X, y, k: int, names: Sequence[str]) -> SelectionModel:
    """Rank features by the chi-squared statistic of their per-class scaled sums.

    Features are min-max scaled to [0, 1] on the training extremes first (the
    statistic needs non-negative inputs); zero-variance features are dropped
    outright.  Ties break toward the lower catalog index.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    names = tuple(names)
    if X.ndim != 2 or X.shape[1] != len(names):
        raise ValueError("matrix shape does not match names")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("selection requires both classes in the training set")
    if not 1 <= k <= len(names):
        raise ValueError(f"k must be in [1, {len(names)}]")

    lo = X.min(axis=0)
    hi = X.max(axis=0)
    eligible = hi > lo
    Xs = _scale_01(X, lo, hi)

    n = y.size
    pos = y == 1
    obs1 = Xs[pos].sum(axis=0)
    obs0 = Xs[~pos].sum(axis=0)
    total = obs0 + obs1
    prior1 = np.count_nonzero(pos) / n
    exp1 = total * prior1
    exp0 = total * (1.0 - prior1)
    with np.errstate(divide="ignore", invalid="ignore"):
        chi2 = np.where(exp0 > 0, (obs0 - exp0) ** 2 / np.where(exp0 > 0, exp0, 1.0), 0.0)
        chi2 = chi2 + np.where(exp1 > 0, (obs1 - exp1) ** 2 / np.where(exp1 > 0, exp1, 1.0), 0.0)
    chi2 = np.where(eligible, chi2, 0.0)

    rank_scores = np.where(eligible, chi2, -np.inf)
    order = np.lexsort((np.arange(len(names)), -rank_scores))
    k_eff = min(k, int(np.count_nonzero(eligible)))
    selected = tuple(int(i) for i in np.sort(order[:k_eff]))
    return SelectionModel(
        names=names,
        selected=selected,
        scores=chi2,
        train_min=lo,
        train_max=hi,
    )


def apply_selection(model: SelectionModel, X, names: Sequence[str] | None = None) -> np.ndarray:
    """Scale with the train extremes, clamp to [0, 1], project to the selected columns."""
    if names is not None and tuple(names) != model.names:
        raise ValueError("feature names do not match the fitted catalog")
    X = np.asarray(X, dtype=np.float64)
    one_row = X.ndim == 1
    if one_row:
        X = X[None, :]
    if X.shape[1] != len(model.names):
        raise ValueError("feature count does not match the fitted catalog")
    projected = _scale_01(X, model.train_min, model.train_max)[:, list(model.selected)]
    return projected[0] if one_row else projected
