"""Per-EV profiling experiments: unbalanced assembly, repeated randomized
splits, metric aggregation, and the sweep protocols (NoF, training size,
degradation windows, legacy comparison).

Randomness is owned by a documented counter scheme: every (sweep point, EV,
iteration) task draws from ``default_rng(SeedSequence([master_seed, *keys]))``
and consumes it in a fixed order (negative sampling, split shuffles, model
seed), so any run is reproducible end to end and parallel execution cannot
change results.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import classifiers
from .features import FeatureTable, LabeledDataset, fit_selection, apply_selection

__all__ = [
    "ExperimentConfig",
    "MetricsEntry",
    "MetricsReport",
    "SweepResult",
    "AssemblyError",
    "compute_metrics",
    "confusion_counts",
    "assemble",
    "assemble_indices",
    "stratified_split",
    "run_profiling",
    "sweep_nof",
    "sweep_train_size",
    "sweep_degradation",
    "compare_legacy",
    "task_rng",
]

METRIC_NAMES = ("precision", "recall", "specificity", "f1", "g_mean")

DEFAULT_NOF_LIST = (10, 25, 50, 100, 150, 200)
DEFAULT_TRAIN_SIZES = tuple(range(7, 57, 7))


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs of one profiling experiment."""

    model: str = "knn"
    q_values: tuple[float, ...] = (1.0,)
    nof: int = 100
    train_fraction: float = 0.8
    iterations: int | None = None
    folds: int = 3
    seed: int = 0
    grid: Mapping[str, Sequence] | None = None

    def __post_init__(self):
        if self.model not in classifiers.MODEL_KINDS:
            raise ValueError(f"unknown model {self.model!r}")
        if not self.q_values or any(q < 1 for q in self.q_values):
            raise ValueError("every q must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.nof < 1:
            raise ValueError("nof must be >= 1")

    @property
    def resolved_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return 25 if self.model in ("rf", "ada") else 100


@dataclass(frozen=True)
class MetricsEntry:
    precision: float
    recall: float
    specificity: float
    f1: float
    g_mean: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def compute_metrics(tp: int, tn: int, fp: int, fn: int) -> MetricsEntry:
    """Precision/recall/specificity/F1/G-Mean with zero-denominator conventions.

    Each value is a single exact-integer division so results agree bit-for-bit
    with rational arithmetic; F1 uses 2TP/(2TP+FP+FN) and G-Mean is the square
    root of (TN*TP)/((TN+FP)*(TP+FN)).
    """
    counts = (tp, tn, fp, fn)
    if any(c < 0 for c in counts):
        raise ValueError("confusion counts must be non-negative")
    if sum(counts) == 0:
        raise ValueError("confusion counts are all zero")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    specificity = tn / (tn + fp) if tn + fp else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    gm_den = (tn + fp) * (tp + fn)
    g_mean = math.sqrt((tn * tp) / gm_den) if gm_den else 0.0
    return MetricsEntry(precision, recall, specificity, f1, g_mean)


def confusion_counts(y_true, y_pred) -> tuple[int, int, int, int]:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    tp = int(np.count_nonzero((y_true == 1) & (y_pred == 1)))
    tn = int(np.count_nonzero((y_true == 0) & (y_pred == 0)))
    fp = int(np.count_nonzero((y_true == 0) & (y_pred == 1)))
    fn = int(np.count_nonzero((y_true == 1) & (y_pred == 0)))
    return tp, tn, fp, fn


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def task_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """The documented counter scheme: one stream per (sweep point, EV, iteration)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=[int(master_seed), *map(int, keys)]))


def assemble_indices(
    ev_ids: Sequence[str], target_ev: str, q: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Row indices and labels for a Q-unbalanced dataset: all target rows plus
    round(q * n_target) non-target rows sampled without replacement."""
    ids = np.asarray(ev_ids)
    pos = np.nonzero(ids == target_ev)[0]
    neg_pool = np.nonzero(ids != target_ev)[0]
    if pos.size < 2:
        raise AssemblyError(f"target {target_ev!r} has {pos.size} vectors; need >= 2")
    n_neg = _round_half_up(q * pos.size)
    if neg_pool.size < n_neg:
        raise AssemblyError(
            f"need {n_neg} non-target vectors for q={q}, only {neg_pool.size} available"
        )
    picked = neg_pool[rng.choice(neg_pool.size, size=n_neg, replace=False)]
    rows = np.concatenate([pos, picked])
    labels = np.concatenate([np.ones(pos.size, dtype=np.int64), np.zeros(n_neg, dtype=np.int64)])
    return rows, labels


def assemble(target_ev: str, table: FeatureTable, q: float, seed) -> LabeledDataset:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rows, labels = assemble_indices(table.ev_ids, target_ev, q, rng)
    return LabeledDataset(
        X=table.matrix[rows],
        y=labels,
        names=table.names,
        target_ev=target_ev,
        ev_ids=tuple(table.ev_ids[i] for i in rows),
        session_ids=tuple(table.session_ids[i] for i in rows),
    )


def stratified_split(
    y: np.ndarray, train_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split keeping round(train_fraction * n_class) rows
    for training (clamped so both sides stay non-empty per class)."""
    train_parts = []
    test_parts = []
    for cls in (1, 0):
        idx = np.nonzero(y == cls)[0]
        perm = rng.permutation(idx)
        n_train = min(max(_round_half_up(train_fraction * idx.size), 1), idx.size - 1)
        train_parts.append(perm[:n_train])
        test_parts.append(perm[n_train:])
    return np.concatenate(train_parts), np.concatenate(test_parts)


def _evaluate_split(
    X: np.ndarray,
    y: np.ndarray,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    names: Sequence[str],
    nof: int,
    model_kind: str,
    grid,
    folds: int,
    model_seed: int,
) -> MetricsEntry:
    """Selection fitted on the training rows only, then grid-search fit and test."""
    sel = fit_selection(X[train_idx], y[train_idx], min(nof, len(names)), names)
    X_train = apply_selection(sel, X[train_idx])
    X_test = apply_selection(sel, X[test_idx])
    model = classifiers.fit(
        model_kind, X_train, y[train_idx], grid=grid, folds=folds, seed=model_seed
    )
    pred = model.predict(X_test)
    return compute_metrics(*confusion_counts(y[test_idx], pred))


def _profile_one_ev(args) -> tuple[str, list[MetricsEntry] | None, str | None]:
    (table, target_ev, ev_index, q, point_keys, config) = args
    entries: list[MetricsEntry] = []
    for it in range(config.resolved_iterations):
        rng = task_rng(config.seed, *point_keys, ev_index, it)
        try:
            rows, labels = assemble_indices(table.ev_ids, target_ev, q, rng)
        except AssemblyError as exc:
            return target_ev, None, str(exc)
        train_idx, test_idx = stratified_split(labels, config.train_fraction, rng)
        model_seed = int(rng.integers(2**31 - 1))
        entry = _evaluate_split(
            table.matrix[rows],
            labels,
            train_idx,
            test_idx,
            table.names,
            config.nof,
            config.model,
            config.grid,
            config.folds,
            model_seed,
        )
        entries.append(entry)
    return target_ev, entries, None


def _mean_entry(entries: Iterable[MetricsEntry]) -> MetricsEntry:
    arr = np.asarray([[getattr(e, m) for m in METRIC_NAMES] for e in entries], dtype=np.float64)
    return MetricsEntry(*(float(v) for v in arr.mean(axis=0)))


def _std_entry(entries: Iterable[MetricsEntry]) -> MetricsEntry:
    arr = np.asarray([[getattr(e, m) for m in METRIC_NAMES] for e in entries], dtype=np.float64)
    return MetricsEntry(*(float(v) for v in arr.std(axis=0)))


@dataclass
class MetricsReport:
    """Per-EV means (over iterations) and their cross-EV aggregate for one q."""

    model: str
    q: float
    nof: int
    iterations: int
    seed: int
    per_ev_mean: dict
    per_ev_std: dict
    aggregate_mean: MetricsEntry
    aggregate_std: MetricsEntry
    skipped: dict = field(default_factory=dict)

    @property
    def n_evs(self) -> int:
        return len(self.per_ev_mean)

    def rows(self) -> list[dict]:
        """Long-format rows; the aggregate scope first, then per-EV scopes."""
        out = []
        for metric in METRIC_NAMES:
            out.append(
                {
                    "scope": "aggregate",
                    "model": self.model,
                    "q": self.q,
                    "nof": self.nof,
                    "metric": metric,
                    "mean": getattr(self.aggregate_mean, metric),
                    "std": getattr(self.aggregate_std, metric),
                    "n_evs": self.n_evs,
                    "iterations": self.iterations,
                    "seed": self.seed,
                }
            )
        for ev_id in sorted(self.per_ev_mean):
            for metric in METRIC_NAMES:
                out.append(
                    {
                        "scope": ev_id,
                        "model": self.model,
                        "q": self.q,
                        "nof": self.nof,
                        "metric": metric,
                        "mean": getattr(self.per_ev_mean[ev_id], metric),
                        "std": getattr(self.per_ev_std[ev_id], metric),
                        "n_evs": 1,
                        "iterations": self.iterations,
                        "seed": self.seed,
                    }
                )
        return out

    @classmethod
    def from_rows(cls, rows: list[dict]) -> "list[MetricsReport]":
        """Rebuild reports (one per (model, q, nof)) from long-format rows."""
        grouped: dict[tuple, dict] = {}
        for row in rows:
            key = (row["model"], float(row["q"]), int(row["nof"]))
            bucket = grouped.setdefault(
                key,
                {
                    "iterations": int(row["iterations"]),
                    "seed": int(row["seed"]),
                    "scopes": {},
                },
            )
            scope = bucket["scopes"].setdefault(row["scope"], {})
            scope[row["metric"]] = (float(row["mean"]), float(row["std"]))
        reports = []
        for (model, q, nof), bucket in grouped.items():
            per_ev_mean, per_ev_std = {}, {}
            agg_mean = agg_std = None
            for scope, metrics in bucket["scopes"].items():
                mean = MetricsEntry(*(metrics[m][0] for m in METRIC_NAMES))
                std = MetricsEntry(*(metrics[m][1] for m in METRIC_NAMES))
                if scope == "aggregate":
                    agg_mean, agg_std = mean, std
                else:
                    per_ev_mean[scope], per_ev_std[scope] = mean, std
            reports.append(
                cls(
                    model=model,
                    q=q,
                    nof=nof,
                    iterations=bucket["iterations"],
                    seed=bucket["seed"],
                    per_ev_mean=per_ev_mean,
                    per_ev_std=per_ev_std,
                    aggregate_mean=agg_mean,
                    aggregate_std=agg_std,
                )
            )
        return reports


def _aggregate_report(
    config: ExperimentConfig,
    q: float,
    results: list[tuple[str, list[MetricsEntry] | None, str | None]],
) -> MetricsReport:
    per_ev_mean: dict[str, MetricsEntry] = {}
    per_ev_std: dict[str, MetricsEntry] = {}
    skipped: dict[str, str] = {}
    for ev_id, entries, reason in results:
        if entries is None:
            skipped[ev_id] = reason
        else:
            per_ev_mean[ev_id] = _mean_entry(entries)
            per_ev_std[ev_id] = _std_entry(entries)
    if not per_ev_mean:
        raise AssemblyError(f"no evaluable EVs at q={q}: {skipped}")
    ev_means = [per_ev_mean[ev] for ev in sorted(per_ev_mean)]
    return MetricsReport(
        model=config.model,
        q=q,
        nof=config.nof,
        iterations=config.resolved_iterations,
        seed=config.seed,
        per_ev_mean=per_ev_mean,
        per_ev_std=per_ev_std,
        aggregate_mean=_mean_entry(ev_means),
        aggregate_std=_std_entry(ev_means),
        skipped=skipped,
    )


def _run_tasks(tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [_profile_one_ev(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_profile_one_ev, tasks))


def run_profiling(
    config: ExperimentConfig,
    table: FeatureTable,
    jobs: int = 1,
    point_prefix: tuple[int, ...] = (),
) -> list[MetricsReport]:
    """One binary classifier per EV, repeated over seeded iterations, for each q.

    Returns one report per q value, aggregated as mean over iterations per EV
    and then mean +/- std over EVs.
    """
    evs = sorted(set(table.ev_ids))
    reports = []
    for qi, q in enumerate(config.q_values):
        tasks = [
            (table, ev, ev_index, q, point_prefix + (qi,), config)
            for ev_index, ev in enumerate(evs)
        ]
        results = _run_tasks(tasks, jobs)
        reports.append(_aggregate_report(config, q, results))
    return reports


@dataclass
class SweepResult:
    kind: str
    rows: list[dict]
    meta: dict = field(default_factory=dict)


def sweep_nof(
    config: ExperimentConfig,
    table: FeatureTable,
    nof_list: Sequence[int] = DEFAULT_NOF_LIST,
    jobs: int = 1,
) -> SweepResult:
    """run_profiling once per NoF value (clamped to the catalog size)."""
    d = len(table.names)
    rows = []
    for ni, nof in enumerate(nof_list):
        eff = min(int(nof), d)
        if eff != nof:
            warnings.warn(f"nof {nof} exceeds catalog size {d}; clamped", stacklevel=2)
        cfg = replace(config, nof=eff)
        for report in run_profiling(cfg, table, jobs=jobs, point_prefix=(ni,)):
            for row in report.rows():
                if row["scope"] != "aggregate":
                    continue
                row = dict(row)
                row["requested_nof"] = int(nof)
                rows.append(row)
    return SweepResult(kind="nof", rows=rows, meta={"nof_list": list(nof_list)})


def _chronological_rows_by_ev(table: FeatureTable) -> dict[str, np.ndarray]:
    # Table rows are already sorted by (ev_id, connection_time, session_id).
    out: dict[str, np.ndarray] = {}
    ids = np.asarray(table.ev_ids)
    for ev in sorted(set(table.ev_ids)):
        out[ev] = np.nonzero(ids == ev)[0]
    return out


def sweep_train_size(
    config: ExperimentConfig,
    table: FeatureTable,
    sizes: Sequence[int] = DEFAULT_TRAIN_SIZES,
    min_charges: int = 70,
    jobs: int = 1,
) -> SweepResult:
    """Chronological training-size sweep.

    Targets are restricted to EVs with at least ``min_charges`` feature rows;
    the test positives are each EV's chronologically last 20% and training
    positives are drawn from the earliest sessions.  Negatives are re-sampled
    per iteration from the full non-target pool (train and test disjoint).
    """
    by_ev = _chronological_rows_by_ev(table)
    eligible = [ev for ev, rows in by_ev.items() if rows.size >= min_charges]
    if not eligible:
        raise AssemblyError(f"no EV has >= {min_charges} feature rows")
    ids = np.asarray(table.ev_ids)
    out_rows = []
    for si, size in enumerate(sizes):
        for qi, q in enumerate(config.q_values):
            per_ev_f1: dict[str, float] = {}
            per_ev_all: dict[str, MetricsEntry] = {}
            for ev_index, ev in enumerate(eligible):
                rows = by_ev[ev]
                n = rows.size
                n_test = max(1, _round_half_up(0.2 * n))
                pool_pos = rows[: n - n_test]
                test_pos = rows[n - n_test :]
                if size > pool_pos.size:
                    continue
                neg_pool = np.nonzero(ids != ev)[0]
                n_tr_neg = _round_half_up(q * size)
                n_te_neg = _round_half_up(q * n_test)
                if neg_pool.size < n_tr_neg + n_te_neg:
                    continue
                entries = []
                for it in range(config.resolved_iterations):
                    rng = task_rng(config.seed, si, qi, ev_index, it)
                    perm = neg_pool[rng.permutation(neg_pool.size)]
                    train_neg = perm[:n_tr_neg]
                    test_neg = perm[n_tr_neg : n_tr_neg + n_te_neg]
                    train_rows = np.concatenate([pool_pos[:size], train_neg])
                    test_rows = np.concatenate([test_pos, test_neg])
                    y_train = (ids[train_rows] == ev).astype(np.int64)
                    y_test = (ids[test_rows] == ev).astype(np.int64)
                    model_seed = int(rng.integers(2**31 - 1))
                    all_rows = np.concatenate([train_rows, test_rows])
                    y_all = np.concatenate([y_train, y_test])
                    entry = _evaluate_split(
                        table.matrix[all_rows],
                        y_all,
                        np.arange(train_rows.size),
                        np.arange(train_rows.size, all_rows.size),
                        table.names,
                        config.nof,
                        config.model,
                        config.grid,
                        config.folds,
                        model_seed,
                    )
                    entries.append(entry)
                per_ev_all[ev] = _mean_entry(entries)
                per_ev_f1[ev] = per_ev_all[ev].f1
            if not per_ev_all:
                continue
            means = [per_ev_all[ev] for ev in sorted(per_ev_all)]
            agg_mean = _mean_entry(means)
            agg_std = _std_entry(means)
            for metric in METRIC_NAMES:
                out_rows.append(
                    {
                        "scope": "aggregate",
                        "model": config.model,
                        "q": q,
                        "nof": config.nof,
                        "train_size": int(size),
                        "metric": metric,
                        "mean": getattr(agg_mean, metric),
                        "std": getattr(agg_std, metric),
                        "n_evs": len(per_ev_all),
                        "iterations": config.resolved_iterations,
                        "seed": config.seed,
                    }
                )
    if not out_rows:
        raise AssemblyError("training-size sweep produced no evaluable (size, q) points")
    return SweepResult(
        kind="train_size",
        rows=out_rows,
        meta={"sizes": list(sizes), "min_charges": min_charges},
    )


def sweep_degradation(
    config: ExperimentConfig,
    table: FeatureTable,
    train_fracs: Sequence[float] = (0.3, 0.6),
    window: float = 0.05,
    top_n: int = 10,
    jobs: int = 1,
) -> SweepResult:
    """Chronological train prefix, then F1 over consecutive test windows.

    The window size is ``window`` (default 5%) of the EV's total rows, so a
    larger training fraction leaves fewer windows.  Emits one row per
    (train_frac, q, window index) plus a per-q mean row (the flat baseline).
    """
    by_ev = _chronological_rows_by_ev(table)
    ranked = sorted(by_ev, key=lambda ev: (-by_ev[ev].size, ev))[:top_n]
    ids = np.asarray(table.ev_ids)
    out_rows = []
    for fi, frac in enumerate(train_fracs):
        if not 0 < frac < 1:
            raise ValueError("train fractions must lie in (0, 1)")
        for qi, q in enumerate(config.q_values):
            window_f1: dict[int, list[float]] = {}
            for ev_index, ev in enumerate(ranked):
                rows = by_ev[ev]
                n = rows.size
                n_train = min(max(_round_half_up(frac * n), 1), n - 1)
                z = max(1, _round_half_up(window * n))
                test_rows_all = rows[n_train:]
                n_win = max(1, test_rows_all.size // z)
                neg_pool = np.nonzero(ids != ev)[0]
                n_tr_neg = _round_half_up(q * n_train)
                bounds = [
                    (w * z, (w + 1) * z if w < n_win - 1 else test_rows_all.size)
                    for w in range(n_win)
                ]
                n_te_neg = [_round_half_up(q * (b - a)) for a, b in bounds]
                if neg_pool.size < n_tr_neg + sum(n_te_neg):
                    continue
                acc: dict[int, list[float]] = {w: [] for w in range(n_win)}
                for it in range(config.resolved_iterations):
                    rng = task_rng(config.seed, fi, qi, ev_index, it)
                    perm = neg_pool[rng.permutation(neg_pool.size)]
                    train_neg = perm[:n_tr_neg]
                    model_seed = int(rng.integers(2**31 - 1))
                    train_rows = np.concatenate([rows[:n_train], train_neg])
                    y_train = (ids[train_rows] == ev).astype(np.int64)
                    sel = fit_selection(
                        table.matrix[train_rows],
                        y_train,
                        min(config.nof, len(table.names)),
                        table.names,
                    )
                    model = classifiers.fit(
                        config.model,
                        apply_selection(sel, table.matrix[train_rows]),
                        y_train,
                        grid=config.grid,
                        folds=config.folds,
                        seed=model_seed,
                    )
                    offset = n_tr_neg
                    for w, (a, b) in enumerate(bounds):
                        test_rows = np.concatenate(
                            [test_rows_all[a:b], perm[offset : offset + n_te_neg[w]]]
                        )
                        offset += n_te_neg[w]
                        y_test = (ids[test_rows] == ev).astype(np.int64)
                        pred = model.predict(apply_selection(sel, table.matrix[test_rows]))
                        entry = compute_metrics(*confusion_counts(y_test, pred))
                        acc[w].append(entry.f1)
                for w, vals in acc.items():
                    window_f1.setdefault(w, []).append(float(np.mean(vals)))
            if not window_f1:
                continue
            window_means = []
            for w in sorted(window_f1):
                vals = np.asarray(window_f1[w])
                window_means.append(float(vals.mean()))
                out_rows.append(
                    {
                        "scope": "aggregate",
                        "model": config.model,
                        "q": q,
                        "nof": config.nof,
                        "train_fraction": frac,
                        "window_index": w,
                        "metric": "f1",
                        "mean": float(vals.mean()),
                        "std": float(vals.std()),
                        "n_evs": int(vals.size),
                        "iterations": config.resolved_iterations,
                        "seed": config.seed,
                    }
                )
            out_rows.append(
                {
                    "scope": "aggregate",
                    "model": config.model,
                    "q": q,
                    "nof": config.nof,
                    "train_fraction": frac,
                    "window_index": "mean",
                    "metric": "f1",
                    "mean": float(np.mean(window_means)),
                    "std": float(np.std(window_means)),
                    "n_evs": len(next(iter(window_f1.values()))),
                    "iterations": config.resolved_iterations,
                    "seed": config.seed,
                }
            )
    if not out_rows:
        raise AssemblyError("degradation sweep produced no evaluable points")
    return SweepResult(
        kind="degradation",
        rows=out_rows,
        meta={"train_fracs": list(train_fracs), "window": window, "top_n": top_n},
    )


def compare_legacy(
    config: ExperimentConfig,
    modern_table: FeatureTable,
    legacy_table: FeatureTable,
    jobs: int = 1,
) -> SweepResult:
    """Modern catalog + selection vs the 18-feature legacy mode on identical
    assemblies, splits, and model seeds."""
    if modern_table.session_ids != legacy_table.session_ids:
        raise ValueError("modern and legacy tables must describe the same sessions")
    evs = sorted(set(modern_table.ev_ids))
    out_rows = []
    for qi, q in enumerate(config.q_values):
        arm_means: dict[str, dict[str, MetricsEntry]] = {"modern": {}, "legacy": {}}
        for ev_index, ev in enumerate(evs):
            arm_entries: dict[str, list[MetricsEntry]] = {"modern": [], "legacy": []}
            failed = False
            for it in range(config.resolved_iterations):
                rng = task_rng(config.seed, qi, ev_index, it)
                try:
                    rows, labels = assemble_indices(modern_table.ev_ids, ev, q, rng)
                except AssemblyError:
                    failed = True
                    break
                train_idx, test_idx = stratified_split(labels, config.train_fraction, rng)
                model_seed = int(rng.integers(2**31 - 1))
                for arm, table, nof in (
                    ("modern", modern_table, config.nof),
                    ("legacy", legacy_table, len(legacy_table.names)),
                ):
                    entry = _evaluate_split(
                        table.matrix[rows],
                        labels,
                        train_idx,
                        test_idx,
                        table.names,
                        nof,
                        config.model,
                        config.grid,
                        config.folds,
                        model_seed,
                    )
                    arm_entries[arm].append(entry)
            if failed:
                continue
            for arm in ("modern", "legacy"):
                arm_means[arm][ev] = _mean_entry(arm_entries[arm])
        for arm in ("modern", "legacy"):
            if not arm_means[arm]:
                raise AssemblyError(f"no evaluable EVs in {arm} arm at q={q}")
            means = [arm_means[arm][ev] for ev in sorted(arm_means[arm])]
            agg_mean = _mean_entry(means)
            agg_std = _std_entry(means)
            nof_used = config.nof if arm == "modern" else len(legacy_table.names)
            for metric in METRIC_NAMES:
                out_rows.append(
                    {
                        "scope": "aggregate",
                        "model": config.model,
                        "q": q,
                        "nof": min(nof_used, len(modern_table.names)),
                        "arm": arm,
                        "metric": metric,
                        "mean": getattr(agg_mean, metric),
                        "std": getattr(agg_std, metric),
                        "n_evs": len(arm_means[arm]),
                        "iterations": config.resolved_iterations,
                        "seed": config.seed,
                    }
                )
    return SweepResult(kind="compare_legacy", rows=out_rows, meta={})
