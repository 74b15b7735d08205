"""Ensemble persistence and atomic output files.

Binary layout (little-endian)::

    magic "FRLP" | u32 version | u64 n_samples | u64 n_points | u32 d | f64 H
    | u8 geometry (0 circle, 1 star) | u32 n_lengths | f64[n_lengths] lengths
    | u64 master_seed | u64 first_index | u32 meta_len | meta JSON (utf-8)
    | i32[n_points] branch | f64[n_points] t | f64[n_samples * n_points * d] paths

CSV has one row per (sample, point) with columns
``sample_id, branch, t, x_1 .. x_d`` and a leading ``#`` line holding the
spec as JSON.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError
from .kernel import CircleGeometry, Grid, KernelSpec, StarGeometry
from .sampler import PathEnsemble, SeedSpec

MAGIC = b"FRLP"
VERSION = 1
_HEAD = struct.Struct("<4sIQQIdBI")
_TAIL = struct.Struct("<QQI")


def _atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_json(path, obj):
    """Atomically write ``obj`` as indented JSON."""
    _atomic_write(path, (json.dumps(obj, indent=2, default=_json_default) + "\n").encode())


def write_text(path, text: str):
    _atomic_write(path, text.encode())


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _encode_binary(ens: PathEnsemble, meta=None) -> bytes:
    spec, grid = ens.spec, ens.grid
    lengths = (spec.geometry.T,) if spec.is_circle else spec.geometry.lengths
    meta_b = json.dumps(meta or {}, default=_json_default).encode()
    n, P, d = ens.paths.shape
    parts = [
        _HEAD.pack(MAGIC, VERSION, n, P, d, spec.hurst, 0 if spec.is_circle else 1, len(lengths)),
        np.asarray(lengths, dtype="<f8").tobytes(),
        _TAIL.pack(ens.seed.master_seed, ens.first_index, len(meta_b)),
        meta_b,
        grid.branch.astype("<i4").tobytes(),
        grid.t.astype("<f8").tobytes(),
        np.ascontiguousarray(ens.paths, dtype="<f8").tobytes(),
    ]
    return b"".join(parts)


def _rebuild_grid(geom, branch, t) -> Grid:
    """Grid from stored points, recovering the ``uniform`` flag."""
    try:
        if isinstance(geom, CircleGeometry):
            ref = Grid.circle(geom.T, t.size)
        else:
            counts = np.bincount(branch[1:], minlength=geom.n_branches)
            ref = Grid.star(geom.lengths, counts) if np.all(counts > 0) else None
        uniform = (ref is not None and ref.uniform and np.array_equal(ref.branch, branch)
                   and np.array_equal(ref.t, t))
        return Grid(geom, branch, t, uniform)
    except ValueError as exc:
        raise FormatError(f"invalid grid in file: {exc}") from None


def _take(buf, pos, size):
    if pos + size > len(buf):
        raise FormatError("file is truncated")
    return buf[pos:pos + size], pos + size


def _decode_binary(buf: bytes):
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise FormatError("bad magic: not an FRLP ensemble file")
    head, pos = _take(buf, 0, _HEAD.size)
    _, version, n, P, d, H, gtype, nl = _HEAD.unpack(head)
    if version != VERSION:
        raise FormatError(f"unsupported version {version} (expected {VERSION})")
    if gtype not in (0, 1):
        raise FormatError(f"unknown geometry code {gtype}")
    raw, pos = _take(buf, pos, 8 * nl)
    lengths = tuple(np.frombuffer(raw, dtype="<f8").tolist())
    raw, pos = _take(buf, pos, _TAIL.size)
    seed, first, ml = _TAIL.unpack(raw)
    raw, pos = _take(buf, pos, ml)
    try:
        meta = json.loads(raw.decode()) if ml else {}
    except ValueError as exc:
        raise FormatError(f"corrupt metadata: {exc}") from None
    raw, pos = _take(buf, pos, 4 * P)
    branch = np.frombuffer(raw, dtype="<i4").astype(np.int64)
    raw, pos = _take(buf, pos, 8 * P)
    t = np.frombuffer(raw, dtype="<f8").copy()
    raw, pos = _take(buf, pos, 8 * n * P * d)
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after the path data")
    paths = np.frombuffer(raw, dtype="<f8").reshape(n, P, d).astype(float)
    if gtype == 0:
        if nl != 1:
            raise FormatError("circle header must carry exactly one length")
        spec = KernelSpec.circle(lengths[0], H, d)
        geom = CircleGeometry(lengths[0])
    else:
        spec = KernelSpec.star(lengths, H, d)
        geom = StarGeometry(lengths)
    grid = _rebuild_grid(geom, branch, t)
    return PathEnsemble(spec, grid, paths, SeedSpec(seed), first), meta


def save_ensemble(ens: PathEnsemble, path, fmt: str | None = None, meta=None):
    """Write ``ens`` atomically; format from ``fmt`` or the file suffix."""
    fmt = fmt or ("csv" if str(path).endswith(".csv") else "binary")
    if fmt == "binary":
        _atomic_write(path, _encode_binary(ens, meta))
    elif fmt == "csv":
        _atomic_write(path, _encode_csv(ens, meta).encode())
    else:
        raise FormatError(f"unknown ensemble format {fmt!r}")


def load_ensemble(path, with_meta: bool = False):
    """Read an ensemble written by :func:`save_ensemble` (binary or CSV)."""
    buf = Path(path).read_bytes()
    if buf[:4] == MAGIC:
        ens, meta = _decode_binary(buf)
    elif buf[:1] == b"#":
        ens, meta = _decode_csv(buf.decode())
    else:
        raise FormatError("bad magic: not an FRLP ensemble file or ensemble CSV")
    return (ens, meta) if with_meta else ens


def _encode_csv(ens: PathEnsemble, meta=None) -> str:
    header = {"spec": ens.spec.to_dict(), "seed": ens.seed.master_seed,
              "first_index": ens.first_index, "meta": meta or {}}
    out = _io.StringIO()
    out.write("# " + json.dumps(header, default=_json_default) + "\n")
    w = csv.writer(out, lineterminator="\n")
    d = ens.spec.dim
    w.writerow(["sample_id", "branch", "t"] + [f"x_{i + 1}" for i in range(d)])
    g = ens.grid
    for s in range(ens.n_samples):
        for p in range(g.n_points):
            w.writerow([s, int(g.branch[p]), repr(float(g.t[p]))]
                       + [repr(float(x)) for x in ens.paths[s, p]])
    return out.getvalue()


def _decode_csv(text: str):
    first, _, rest = text.partition("\n")
    try:
        header = json.loads(first[1:])
        spec = KernelSpec.from_dict(header["spec"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"bad CSV header: {exc}") from None
    rows = list(csv.reader(_io.StringIO(rest)))
    d = spec.dim
    if not rows or rows[0] != ["sample_id", "branch", "t"] + [f"x_{i + 1}" for i in range(d)]:
        raise FormatError("unexpected CSV column header")
    try:
        data = np.array(rows[1:], dtype=float).reshape(-1, 3 + d)
    except ValueError as exc:
        raise FormatError(f"malformed CSV rows: {exc}") from None
    sid = data[:, 0].astype(np.int64)
    n = int(sid.max()) + 1 if sid.size else 0
    if n == 0 or data.shape[0] % n:
        raise FormatError("CSV rows do not form complete samples")
    P = data.shape[0] // n
    if not np.array_equal(sid, np.repeat(np.arange(n), P)):
        raise FormatError("CSV sample ids are not contiguous")
    branch = data[:P, 1].astype(np.int64)
    t = data[:P, 2]
    grid = _rebuild_grid(spec.geometry, branch, t)
    paths = data[:, 3:].reshape(n, P, d)
    return PathEnsemble(spec, grid, paths, SeedSpec(header.get("seed", 0)),
                        header.get("first_index", 0)), header.get("meta", {})
