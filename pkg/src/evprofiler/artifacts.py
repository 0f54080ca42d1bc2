"""On-disk artifact formats with versioned headers.

Record-oriented artifacts (fleets, tails) are JSON Lines with a JSON header
line; tabular artifacts (feature tables, labeled datasets, reports) are CSV
with a ``#meta {...}`` first line; models and selection state are single JSON
documents.  Every loader checks the artifact kind and version and raises
ArtifactVersionError on mismatch.  Floats round-trip exactly via repr, so
persist/load is an identity on values.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import classifiers
from .data_model import (
    Fleet,
    IngestReport,
    RecordError,
    adapt_acn_payload,
    format_instant,
    parse_instant,
    session_from_record,
    session_to_record,
)
from .evaluation import MetricsReport
from .extraction import TailParams, TailRecord
from .features import FeatureTable, LabeledDataset, SelectionModel
from .synth import EVSignature, FleetTruth

__all__ = [
    "ArtifactVersionError",
    "FORMAT_VERSION",
    "save_fleet",
    "load_fleet",
    "ingest_canonical",
    "ingest_acn",
    "save_tails",
    "load_tails",
    "save_feature_table",
    "load_feature_table",
    "save_labeled_dataset",
    "load_labeled_dataset",
    "save_selection",
    "load_selection",
    "save_model",
    "load_model",
    "save_report",
    "load_report",
    "save_sweep",
    "load_sweep",
    "save_truth",
    "persist",
    "load",
    "config_hash",
    "save_manifest",
]

FORMAT_VERSION = 1

_STRING_COLUMNS = {"scope", "model", "metric", "arm", "ev_id", "session_id", "connection_time"}


class ArtifactVersionError(RuntimeError):
    """Artifact header is missing, of the wrong kind, or of the wrong version."""


def _check_header(meta: Mapping, expected_kind: str, path) -> None:
    kind = meta.get("artifact")
    version = meta.get("version")
    if kind != expected_kind or version != FORMAT_VERSION:
        raise ArtifactVersionError(
            f"{path}: expected artifact {expected_kind!r} v{FORMAT_VERSION}, "
            f"found {kind!r} v{version!r}"
        )


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _parse_cell(column: str, text: str):
    if column in _STRING_COLUMNS:
        return text
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


# ---------------------------------------------------------------------------
# JSONL artifacts


def _write_jsonl(path, meta: Mapping, records: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _read_jsonl(path, expected_kind: str) -> tuple[dict, list]:
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.readline()
        if not head.strip():
            raise ArtifactVersionError(f"{path}: empty file, no artifact header")
        try:
            meta = json.loads(head)
        except json.JSONDecodeError as exc:
            raise ArtifactVersionError(f"{path}: unreadable artifact header") from exc
        _check_header(meta, expected_kind, path)
        records = []
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return meta, records


def save_fleet(fleet: Fleet, path) -> None:
    meta = {
        "artifact": "fleet",
        "version": FORMAT_VERSION,
        "provenance": fleet.provenance,
        "cutoff_date": format_instant(fleet.cutoff_date) if fleet.cutoff_date else None,
    }
    _write_jsonl(path, meta, (session_to_record(s) for s in fleet.iter_sessions()))


def _fleet_from_records(records, meta, tolerant: bool) -> tuple[Fleet, IngestReport]:
    report = IngestReport()
    sessions = []
    cutoff = parse_instant(meta["cutoff_date"]) if meta.get("cutoff_date") else None
    for record in records:
        try:
            session = session_from_record(record)
        except RecordError as exc:
            if not tolerant:
                raise
            report.skip(exc.reason)
            continue
        if cutoff is not None and session.connection_time > cutoff:
            report.skip("after_cutoff")
            continue
        sessions.append(session)
        report.n_ingested += 1
    fleet = Fleet.from_sessions(sessions, provenance=meta.get("provenance", "real"), cutoff_date=cutoff)
    return fleet, report


def load_fleet(path) -> Fleet:
    """Strict reader for fleets this tool wrote; any bad record is fatal."""
    meta, records = _read_jsonl(path, "fleet")
    fleet, _ = _fleet_from_records(records, meta, tolerant=False)
    return fleet


def ingest_canonical(path, cutoff_date=None) -> tuple[Fleet, IngestReport]:
    """Tolerant ingestion of a canonical session file: invalid records are
    skipped and counted by reason instead of aborting."""
    meta, records = _read_jsonl(path, "fleet")
    if cutoff_date is not None:
        meta = {**meta, "cutoff_date": format_instant(parse_instant(cutoff_date))}
    return _fleet_from_records(records, meta, tolerant=True)


def ingest_acn(path, cutoff_date=None) -> tuple[Fleet, IngestReport]:
    """Ingest a locally saved ACN-Data API response document."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    records, report = adapt_acn_payload(payload)
    meta = {
        "provenance": "real",
        "cutoff_date": format_instant(parse_instant(cutoff_date)) if cutoff_date else None,
    }
    fleet, build_report = _fleet_from_records(records, meta, tolerant=True)
    for reason, count in report.skipped.items():
        build_report.skipped[reason] += count
    build_report.n_ingested = fleet.n_sessions
    return fleet, build_report


def save_tails(records: Sequence[TailRecord], params: TailParams, path) -> None:
    meta = {
        "artifact": "tails",
        "version": FORMAT_VERSION,
        "params": asdict(params),
    }

    def encode(rec: TailRecord) -> dict:
        return {
            "ev_id": rec.ev_id,
            "session_id": rec.session_id,
            "connection_time": format_instant(rec.connection_time),
            "duration_s": rec.duration_s,
            "kwh": rec.kwh,
            "t_start": rec.t_start,
            "s": rec.s,
            "n_avg": rec.n_avg,
            "tail_current": [float(v) for v in rec.tail_current],
            "tail_pilot": [float(v) for v in rec.tail_pilot],
            "delta": [float(v) for v in rec.delta],
        }

    _write_jsonl(path, meta, (encode(r) for r in records))


def load_tails(path) -> tuple[list[TailRecord], TailParams]:
    meta, raw = _read_jsonl(path, "tails")
    params = TailParams(**meta["params"])
    records = [
        TailRecord(
            ev_id=r["ev_id"],
            session_id=r["session_id"],
            connection_time=parse_instant(r["connection_time"]),
            duration_s=r["duration_s"],
            kwh=r["kwh"],
            t_start=r["t_start"],
            s=r["s"],
            n_avg=r["n_avg"],
            tail_current=r["tail_current"],
            tail_pilot=r["tail_pilot"],
            delta=r["delta"],
        )
        for r in raw
    ]
    return records, params


# ---------------------------------------------------------------------------
# CSV artifacts


def _write_csv(path, meta: Mapping, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("#meta " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def _read_csv(path, expected_kind: str) -> tuple[dict, list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        head = fh.readline()
        if not head.startswith("#meta "):
            raise ArtifactVersionError(f"{path}: missing #meta header line")
        meta = json.loads(head[len("#meta ") :])
        _check_header(meta, expected_kind, path)
        reader = csv.reader(fh)
        columns = next(reader, None)
        if columns is None:
            raise ArtifactVersionError(f"{path}: missing column header")
        return meta, columns, [row for row in reader if row]


def save_feature_table(table: FeatureTable, path) -> None:
    meta = {
        "artifact": "features",
        "version": FORMAT_VERSION,
        "mode": table.mode,
        "catalog": 1,
    }
    columns = ["ev_id", "session_id", "connection_time", "imputed", *table.names]
    rows = (
        [
            table.ev_ids[i],
            table.session_ids[i],
            format_instant(table.connection_times[i]),
            table.imputed_counts[i],
            *table.matrix[i],
        ]
        for i in range(table.n_rows)
    )
    _write_csv(path, meta, columns, rows)


def load_feature_table(path) -> FeatureTable:
    meta, columns, rows = _read_csv(path, "features")
    names = tuple(columns[4:])
    return FeatureTable(
        names=names,
        matrix=np.asarray([[float(v) for v in row[4:]] for row in rows], dtype=np.float64),
        ev_ids=tuple(row[0] for row in rows),
        session_ids=tuple(row[1] for row in rows),
        connection_times=tuple(parse_instant(row[2]) for row in rows),
        imputed_counts=tuple(int(row[3]) for row in rows),
        mode=meta["mode"],
    )


def save_labeled_dataset(dataset: LabeledDataset, path) -> None:
    meta = {
        "artifact": "labeled_dataset",
        "version": FORMAT_VERSION,
        "target_ev": dataset.target_ev,
    }
    columns = ["ev_id", "session_id", "label", *dataset.names]
    rows = (
        [dataset.ev_ids[i], dataset.session_ids[i], int(dataset.y[i]), *dataset.X[i]]
        for i in range(dataset.y.size)
    )
    _write_csv(path, meta, columns, rows)


def load_labeled_dataset(path) -> LabeledDataset:
    meta, columns, rows = _read_csv(path, "labeled_dataset")
    return LabeledDataset(
        X=np.asarray([[float(v) for v in row[3:]] for row in rows], dtype=np.float64),
        y=np.asarray([int(row[2]) for row in rows], dtype=np.int64),
        names=tuple(columns[3:]),
        target_ev=meta["target_ev"],
        ev_ids=tuple(row[0] for row in rows),
        session_ids=tuple(row[1] for row in rows),
    )


REPORT_COLUMNS = (
    "scope",
    "model",
    "q",
    "nof",
    "metric",
    "mean",
    "std",
    "n_evs",
    "iterations",
    "seed",
)


def save_report(reports: Sequence[MetricsReport] | MetricsReport, path, extra_meta=None) -> None:
    if isinstance(reports, MetricsReport):
        reports = [reports]
    meta = {"artifact": "report", "version": FORMAT_VERSION}
    if extra_meta:
        meta.update(extra_meta)
    skipped = {}
    for report in reports:
        for ev, reason in report.skipped.items():
            skipped[f"q={report.q}:{ev}"] = reason
    if skipped:
        meta["skipped"] = skipped
    rows = [row for report in reports for row in report.rows()]
    _write_csv(path, meta, REPORT_COLUMNS, ([row[c] for c in REPORT_COLUMNS] for row in rows))


def load_report(path) -> list[MetricsReport]:
    meta, columns, raw = _read_csv(path, "report")
    rows = [
        {column: _parse_cell(column, value) for column, value in zip(columns, row)}
        for row in raw
    ]
    return MetricsReport.from_rows(rows)


def save_sweep(rows: Sequence[Mapping], kind: str, path, extra_meta=None) -> None:
    meta = {"artifact": "sweep", "version": FORMAT_VERSION, "sweep": kind}
    if extra_meta:
        meta.update(extra_meta)
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    _write_csv(path, meta, columns, ([row.get(c, "") for c in columns] for row in rows))


def load_sweep(path) -> tuple[dict, list[dict]]:
    meta, columns, raw = _read_csv(path, "sweep")
    rows = [
        {column: _parse_cell(column, value) for column, value in zip(columns, row)}
        for row in raw
    ]
    return meta, rows


# ---------------------------------------------------------------------------
# JSON artifacts


def _write_json(path, payload: Mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _read_json(path, expected_kind: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    _check_header(payload, expected_kind, path)
    return payload


def save_selection(model: SelectionModel, path) -> None:
    _write_json(
        path,
        {
            "artifact": "selection",
            "version": FORMAT_VERSION,
            "catalog": 1,
            "names": list(model.names),
            "selected": list(model.selected),
            "scores": [float(v) for v in model.scores],
            "train_min": [float(v) for v in model.train_min],
            "train_max": [float(v) for v in model.train_max],
        },
    )


def load_selection(path) -> SelectionModel:
    payload = _read_json(path, "selection")
    return SelectionModel(
        names=tuple(payload["names"]),
        selected=tuple(payload["selected"]),
        scores=payload["scores"],
        train_min=payload["train_min"],
        train_max=payload["train_max"],
    )


def save_model(model: classifiers.TrainedModel, path) -> None:
    _write_json(
        path,
        {"artifact": "model", "version": FORMAT_VERSION, **model.state_dict()},
    )


def load_model(path) -> classifiers.TrainedModel:
    payload = _read_json(path, "model")
    return classifiers.TrainedModel.from_state(payload)


def save_truth(truth: FleetTruth, path) -> None:
    _write_json(
        path,
        {
            "artifact": "truth",
            "version": FORMAT_VERSION,
            "signatures": {ev: asdict(sig) for ev, sig in sorted(truth.signatures.items())},
            "onsets": {sid: truth.onsets[sid] for sid in sorted(truth.onsets)},
        },
    )


def load_truth(path) -> FleetTruth:
    payload = _read_json(path, "truth")
    return FleetTruth(
        signatures={ev: EVSignature(**sig) for ev, sig in payload["signatures"].items()},
        onsets=dict(payload["onsets"]),
    )


# ---------------------------------------------------------------------------
# Dispatching persist/load and run manifests


def persist(artifact, path) -> None:
    """Type-dispatched save for the round-trippable artifact kinds."""
    if isinstance(artifact, Fleet):
        save_fleet(artifact, path)
    elif isinstance(artifact, LabeledDataset):
        save_labeled_dataset(artifact, path)
    elif isinstance(artifact, MetricsReport):
        save_report(artifact, path)
    elif isinstance(artifact, (list, tuple)) and artifact and isinstance(artifact[0], MetricsReport):
        save_report(artifact, path)
    elif isinstance(artifact, FeatureTable):
        save_feature_table(artifact, path)
    else:
        raise TypeError(f"no persistence for {type(artifact).__name__}")


def load(path):
    """Header-dispatched load; inverse of persist."""
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.readline()
    text = head[len("#meta ") :] if head.startswith("#meta ") else head
    try:
        meta = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactVersionError(f"{path}: unreadable artifact header") from exc
    kind = meta.get("artifact")
    loaders = {
        "fleet": load_fleet,
        "labeled_dataset": load_labeled_dataset,
        "report": load_report,
        "features": load_feature_table,
    }
    if kind not in loaders:
        raise ArtifactVersionError(f"{path}: cannot dispatch artifact kind {kind!r}")
    return loaders[kind](path)


def config_hash(config: Mapping) -> str:
    """Stable under key reordering: hash of the canonical-JSON form."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def save_manifest(path, command: str, config: Mapping, inputs, outputs, seed, tool_version: str, wall_clock_s=None) -> None:
    _write_json(
        path,
        {
            "artifact": "manifest",
            "version": FORMAT_VERSION,
            "command": command,
            "config_hash": config_hash(config),
            "config": dict(config),
            "inputs": [str(p) for p in inputs],
            "outputs": [str(p) for p in outputs],
            "seed": seed,
            "tool_version": tool_version,
            "wall_clock_s": wall_clock_s,
        },
    )
