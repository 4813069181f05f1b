"""Field serialization and run manifests.

CSV layout: the header row holds ``t\\y`` followed by the locations ``y_k``;
every further row holds ``t_i`` followed by ``X_{t_i}(y_k)``. Floats are
written with ``repr`` so they round-trip exactly.

Binary layout (little-endian): magic ``b"SPDE1"``, ``uint32`` rows, ``uint32``
columns, ``f64`` horizon ``T``, ``f64`` margin ``b``, then the values as
``f64`` in row-major order.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .model import GridSpec
from .simulate import Field

MAGIC = b"SPDE1"
_HEADER = struct.Struct("<5sIIdd")


def write_field(f: Field, path: str | Path) -> Path:
    """Write ``f`` as CSV if the suffix is ``.csv``, otherwise in the binary layout."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        _write_csv(f, path)
    else:
        _write_bin(f, path)
    return path


def read_field(path: str | Path) -> Field:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _read_bin(path)
    return _read_csv(path)


def _write_csv(f: Field, path: Path) -> None:
    g = f.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t\\y"] + [repr(float(y)) for y in g.locations])
        for t, row in zip(g.times, f.values):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def _read_csv(path: Path) -> Field:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or len(rows[0]) < 3:
        raise ValueError(f"{path}: not a field CSV (need at least 2 times and 2 locations)")
    try:
        y = np.array([float(v) for v in rows[0][1:]])
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed number ({exc})") from None
    if data.ndim != 2 or data.shape[1] != y.size + 1:
        raise ValueError(f"{path}: ragged rows")
    t = data[:, 0]
    g = GridSpec(N=t.size - 1, M=y.size - 1, T=float(t[-1]), b=float(y[0]))
    if not (np.allclose(t, g.times, rtol=0, atol=1e-9 * max(g.T, 1.0))
            and np.allclose(y, g.locations, rtol=0, atol=1e-9)):
        raise ValueError(f"{path}: grid is not equispaced")
    return Field(data[:, 1:], g, {"source": str(path)})


def _write_bin(f: Field, path: Path) -> None:
    g = f.grid
    vals = np.ascontiguousarray(f.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.N + 1, g.M + 1, float(g.T), float(g.b)))
        fh.write(vals.tobytes())


def _read_bin(path: Path) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, rows, cols, T, b = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic")
    body = raw[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise ValueError(f"{path}: expected {rows}x{cols} values, found {len(body) // 8}")
    vals = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(float)
    g = GridSpec(N=rows - 1, M=cols - 1, T=T, b=b)
    return Field(vals, g, {"source": str(path)})


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(output: str | Path, config: dict, seed: int | None = None,
                   inputs: list[str | Path] = (), outputs: list[str | Path] = ()) -> Path:
    """Write ``<output>.manifest.json`` with the config echo, version, timestamp and digests."""
    output = Path(output)
    outs = [output, *outputs] if output.exists() else list(outputs)
    man = {
        "schema": 1,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "seed": seed,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outs},
    }
    mpath = output.with_name(output.name + ".manifest.json")
    mpath.write_text(json.dumps(man, indent=2, sort_keys=True))
    return mpath
