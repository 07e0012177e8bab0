"""Checkpoints, CSV tables and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .spectral import Domain, FieldError, SpectralField

MAGIC = b"SQGF"
VERSION = 1
_HEADER = struct.Struct("<4sII4d")


class CheckpointError(FieldError):
    """Bad magic, unsupported version, or a truncated checkpoint file."""


@dataclass(frozen=True, eq=False)
class Checkpoint:
    theta: SpectralField
    t: float
    alpha: float
    nu: float


def save_checkpoint(path: str | Path, theta: SpectralField, t: float, alpha: float, nu: float) -> Path:
    d = theta.domain
    head = _HEADER.pack(MAGIC, VERSION, d.N, d.L, t, alpha, nu)
    body = np.ascontiguousarray(theta.coeffs, dtype="<c16").tobytes()
    path = Path(path)
    path.write_bytes(head + body)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, L, t, alpha, nu = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}, expected {VERSION}")
    want = _HEADER.size + 16 * n * n
    if len(raw) != want:
        raise CheckpointError(f"{path}: length {len(raw)} bytes, expected {want} for N={n}")
    coeffs = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(n, n).astype(complex)
    return Checkpoint(SpectralField(Domain(L, n), coeffs), t, alpha, nu)


def fmt(x: float) -> str:
    return "%.17g" % x


def write_csv(path: str | Path, columns: Mapping[str, Sequence[float]]) -> Path:
    """Columns in mapping order, 17 significant digits."""
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float) for k in names]
    if len({len(c) for c in data}) > 1:
        raise FieldError("CSV columns differ in length")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([fmt(v) for v in row])
    return path


def write_rows(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return path


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FieldError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def write_json(path: str | Path, doc: Mapping) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(
    out_dir: str | Path,
    config_echo: Mapping,
    files: Sequence[Path],
    started: str,
    finished: str,
    version: str,
) -> Path:
    out = Path(out_dir)
    doc = {
        "config": config_echo,
        "version": version,
        "started": started,
        "finished": finished,
        "files": {Path(f).name: sha256_file(f) for f in files},
    }
    return write_json(out / "manifest.json", doc)


def verify_manifest(path: str | Path) -> None:
    """Raise if any listed file's digest no longer matches."""
    path = Path(path)
    doc = json.loads(path.read_text())
    for name, digest in doc["files"].items():
        actual = sha256_file(path.parent / name)
        if actual != digest:
            raise FieldError(f"digest mismatch for {name}: {actual} != {digest}")
