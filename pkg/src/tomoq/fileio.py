"""File formats: state/protocol JSON schemas, counts CSV, scan and batch CSV
exports, and deterministic report writing.

CSV numbers carry 17 significant digits so round trips are bit-faithful;
reports are JSON with sorted keys and no timestamps, so re-running a command
overwrites identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .protocols import Protocol, ProtocolRow
from .simulation import TrialBatch
from .states import DensityMatrix, PurifiedState

_FMT = "%.17g"


def _fmt(x) -> str:
    return _FMT % float(x)


def state_to_json(rho: DensityMatrix) -> dict:
    m = rho.matrix
    return {"dim": rho.dim, "re": m.real.tolist(), "im": m.imag.tolist()}


def state_from_json(doc: dict) -> DensityMatrix:
    dim = int(doc["dim"])
    m = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    if m.shape != (dim, dim):
        raise ValueError(f"state entries have shape {m.shape}, expected ({dim}, {dim})")
    return DensityMatrix(m)


def purified_to_json(state: PurifiedState) -> dict:
    m = state.matrix
    return {"dim": state.dim, "rank": state.rank,
            "re": m.real.tolist(), "im": m.imag.tolist()}


def purified_from_json(doc: dict) -> PurifiedState:
    dim, rank = int(doc["dim"]), int(doc["rank"])
    m = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    if m.shape != (dim, rank):
        raise ValueError(f"purified entries have shape {m.shape}, expected ({dim}, {rank})")
    return PurifiedState(m)


def protocol_to_json(p: Protocol) -> dict:
    rows = []
    for r in p.rows:
        if r.amplitude is not None:
            rows.append({"re": r.amplitude.real.tolist(),
                         "im": r.amplitude.imag.tolist(),
                         "t": r.exposure})
        else:
            rows.append({"t": r.exposure,
                         "mixture": [{"f": f, "re": x.real.tolist(), "im": x.imag.tolist()}
                                     for f, x in r.mixture]})
    return {"dim": p.dim, "rows": rows, "meta": dict(p.meta)}


def protocol_from_json(doc: dict) -> Protocol:
    dim = int(doc["dim"])
    rows = []
    for j, r in enumerate(doc["rows"]):
        t = float(r["t"])
        if t <= 0:
            raise ValueError(f"row {j}: exposure must be positive")
        if "mixture" in r:
            mix = []
            for comp in r["mixture"]:
                x = np.asarray(comp["re"], float) + 1j * np.asarray(comp["im"], float)
                if x.shape != (dim,):
                    raise ValueError(f"row {j}: mixture row length {x.size}, expected {dim}")
                mix.append((float(comp["f"]), x))
            rows.append(ProtocolRow(amplitude=None, exposure=t, mixture=tuple(mix)))
        else:
            x = np.asarray(r["re"], float) + 1j * np.asarray(r["im"], float)
            if x.shape != (dim,):
                raise ValueError(f"row {j}: amplitude length {x.size}, expected {dim}")
            rows.append(ProtocolRow(amplitude=x, exposure=t))
    return Protocol(dim, tuple(rows), dict(doc.get("meta", {})))


def write_counts_csv(path, protocol: Protocol, counts) -> None:
    counts = np.asarray(counts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row_id", "t", "k"])
        for j, (row, k) in enumerate(zip(protocol.rows, counts)):
            w.writerow([j, _fmt(row.exposure), _fmt(k)])


def read_counts_csv(path):
    """(exposures, counts) from a `row_id,t,k` file; malformed rows are
    reported with their line number."""
    ts, ks = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["row_id", "t", "k"]:
            raise ValueError(f"counts file must have header 'row_id,t,k', got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                t = float(row["t"])
                k = float(row["k"])
            except (TypeError, ValueError):
                raise ValueError(f"counts file row {lineno}: cannot parse {row}") from None
            if t <= 0 or k < 0:
                raise ValueError(f"counts file row {lineno}: need t > 0 and k >= 0, got {row}")
            ts.append(t)
            ks.append(k)
    if not ts:
        raise ValueError("counts file has no data rows")
    return np.array(ts), np.array(ks)


def scan_to_csv(field, path) -> None:
    names = list(field.point_names) + list(field.values) + ["singular"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(len(field.points)):
            row = [_fmt(x) for x in np.atleast_1d(field.points[i])]
            row += [_fmt(field.values[k][i]) for k in field.values]
            row.append(int(field.flags[i]))
            w.writerow(row)


def batch_to_csv(batch: TrialBatch, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "loss", "z", "converged"])
        for i in range(batch.trials):
            w.writerow([i, _fmt(batch.losses[i]), _fmt(batch.z[i]), int(batch.converged[i])])


def write_report(path, doc: dict) -> None:
    """Deterministic JSON report; identical inputs produce identical bytes."""
    Path(path).write_text(json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj
