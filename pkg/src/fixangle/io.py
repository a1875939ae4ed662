"""Artifact writers.  Every file carries a metadata header: config hash, grid
parameters and library versions.

CSV: leading ``# key: value`` lines, then a header row and data rows.  The
timestamp is confined to the header, so bodies are byte-identical across runs.
JSON: ``{"meta": {...}, "data": {...}}``.
Arrays: ``name.npz`` with a ``name.json`` sidecar (meta, array shapes, axes).
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import platform
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__


def versions() -> dict:
    import scipy

    return {"fixangle": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def metadata(config_hash: str, command: str, grid: dict | None = None, **extra) -> dict:
    meta = {"command": command, "config_hash": config_hash, "grid": grid or {}, "versions": versions(),
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    meta.update(extra)
    return meta


def grid_meta(grid) -> dict:
    return {"n": grid.n, "L": grid.L, "h": grid.h, "dt": grid.dt, "t0": grid.t0, "T": grid.T,
            "sponge_width": grid.sponge_width, "shape": list(grid.shape), "nt": grid.nt}


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(to_jsonable(v), sort_keys=True)
    return str(v)


def write_csv(path: str | Path, rows: Sequence[dict], meta: dict, columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    with path.open("w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}: {json.dumps(to_jsonable(v), sort_keys=True)}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for r in rows:
            wr.writerow([_fmt(r.get(c)) for c in columns])
    return path


def read_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """Metadata header and rows (values left as strings)."""
    meta, body = {}, []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].partition(": ")
                meta[k] = json.loads(v)
            else:
                body.append(line)
    return meta, list(csv.DictReader(body))


def csv_body(path: str | Path) -> str:
    return "".join(l for l in Path(path).read_text().splitlines(True) if not l.startswith("# "))


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def write_json(path: str | Path, data: Any, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"meta": to_jsonable(meta), "data": to_jsonable(data)}, indent=2, sort_keys=True))
    return path


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_arrays(path: str | Path, arrays: dict[str, np.ndarray], meta: dict, axes: dict | None = None) -> Path:
    """name.npz plus a name.json sidecar describing shapes and axes."""
    path = Path(path).with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **arrays)
    side = {"arrays": {k: {"shape": list(np.shape(v)), "dtype": str(np.asarray(v).dtype)} for k, v in arrays.items()},
            "axes": axes or {}}
    write_json(path.with_suffix(".json"), side, meta)
    return path


def rows_from_records(records: Iterable[Any]) -> list[dict]:
    return [r.as_row() if hasattr(r, "as_row") else dict(r) for r in records]
