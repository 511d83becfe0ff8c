"""On-disk eigenbasis cache.

One file per (system, geometry, symmetry block).  Layout, all little-endian:

=========  ==========  ==================================================
offset     type        content
=========  ==========  ==================================================
0          8 bytes     magic ``b"SFIONEB1"``
8          uint32      format version (1)
12         uint32      system kind (0 model atom, 1 two-center)
16         int32       symmetry index (ell or Lambda)
20         int32       parity (+1 gerade, -1 ungerade, 0 none)
24         uint32      number of xi (or r) knots
28         uint32      number of eta knots (0 for the atom)
32         uint32      xi (or r) spline order
36         uint32      eta spline order (0 for the atom)
40         uint32      coefficient rows
44         uint32      number of states (coefficient columns)
48         float64     box (bohr)
56         float64     R (bohr; NaN for the atom)
64         float64     model parameter alpha (NaN for two-center)
72         float64     nuclear charge
80         uint64      payload length in bytes
88         payload     xi knots, eta knots, energies, eta node counts,
                       coefficients (row-major rows x states), float64
=========  ==========  ==================================================

A file whose size disagrees with the header is treated as absent.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"SFIONEB1"
VERSION = 1
_HEADER = struct.Struct("<8sIIiiIIIIIIddddQ")
ATOM, TWO_CENTER = 0, 1


class CacheError(IOError):
    pass


@dataclass(frozen=True, eq=False)
class CachedBasis:
    kind: int
    symmetry: int
    parity: int
    xi_order: int
    eta_order: int
    box: float
    r: float
    alpha: float
    charge: float
    xi_knots: np.ndarray
    eta_knots: np.ndarray
    energies: np.ndarray
    eta_nodes: np.ndarray
    coefficients: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, CachedBasis):
            return NotImplemented
        scalars = ("kind", "symmetry", "parity", "xi_order", "eta_order", "box", "r", "alpha", "charge")
        arrays = ("xi_knots", "eta_knots", "energies", "eta_nodes", "coefficients")
        same = all(_same_float(getattr(self, s), getattr(other, s)) for s in scalars)
        return same and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)


def _same_float(a, b):
    if isinstance(a, float) and math.isnan(a):
        return isinstance(b, float) and math.isnan(b)
    return a == b


def encode(entry: CachedBasis) -> bytes:
    coeffs = np.ascontiguousarray(entry.coefficients, dtype="<f8")
    parts = [np.asarray(a, dtype="<f8").ravel() for a in
             (entry.xi_knots, entry.eta_knots, entry.energies, entry.eta_nodes)] + [coeffs.ravel()]
    payload = b"".join(p.tobytes() for p in parts)
    header = _HEADER.pack(MAGIC, VERSION, entry.kind, entry.symmetry, entry.parity, len(entry.xi_knots),
                          len(entry.eta_knots), entry.xi_order, entry.eta_order, coeffs.shape[0],
                          coeffs.shape[1], entry.box, entry.r, entry.alpha, entry.charge, len(payload))
    return header + payload


def decode(data: bytes) -> CachedBasis:
    if len(data) < _HEADER.size:
        raise CacheError("truncated header")
    (magic, version, kind, sym, parity, n_xi, n_eta, k_xi, k_eta, rows, cols, box, r, alpha, charge,
     n_payload) = _HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise CacheError("not an eigenbasis cache file")
    expected = 8 * (n_xi + n_eta + 2 * cols + rows * cols)
    if n_payload != expected or len(data) != _HEADER.size + n_payload:
        raise CacheError(f"payload length mismatch ({len(data) - _HEADER.size} bytes, header says {n_payload})")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    cuts = np.cumsum([n_xi, n_eta, cols, cols])
    xi, eta, en, nodes, coef = np.split(flat, cuts)
    return CachedBasis(kind, sym, parity, k_xi, k_eta, box, r, alpha, charge, xi, eta, en,
                       nodes.astype(int), coef.reshape(rows, cols))


def write_atomic(path: Path, data: bytes) -> None:
    """Write to a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path, entry: CachedBasis) -> None:
    write_atomic(Path(path), encode(entry))


def load(path) -> CachedBasis | None:
    """Cached entry, or None when the file is missing or corrupt."""
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        return None
    try:
        return decode(data)
    except CacheError:
        return None


def export_text(entry: CachedBasis, path) -> None:
    """Lossless text dump: ``key = value`` header lines then one array per block."""
    lines = [f"{k} = {getattr(entry, k)!r}" for k in
             ("kind", "symmetry", "parity", "xi_order", "eta_order", "box", "r", "alpha", "charge")]
    for name in ("xi_knots", "eta_knots", "energies", "eta_nodes"):
        arr = getattr(entry, name)
        lines.append(f"[{name}] {arr.size}")
        lines.extend(repr(float(x)) for x in arr)
    rows, cols = entry.coefficients.shape
    lines.append(f"[coefficients] {rows} {cols}")
    lines.extend(" ".join(repr(float(x)) for x in row) for row in entry.coefficients)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_text(path) -> CachedBasis:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = {}
    i = 0
    while not lines[i].startswith("["):
        k, v = lines[i].split(" = ")
        head[k] = float(v) if k in ("box", "r", "alpha", "charge") else int(v)
        i += 1
    arrays = {}
    while i < len(lines):
        tag, *dims = lines[i].split()
        name = tag.strip("[]")
        if name == "coefficients":
            rows, cols = map(int, dims)
            block = lines[i + 1:i + 1 + rows]
            arrays[name] = np.array([[float(x) for x in ln.split()] for ln in block]).reshape(rows, cols)
            i += 1 + rows
        else:
            n = int(dims[0])
            arrays[name] = np.array([float(x) for x in lines[i + 1:i + 1 + n]])
            i += 1 + n
    arrays["eta_nodes"] = arrays["eta_nodes"].astype(int)
    return CachedBasis(**head, **arrays)


def cache_root(default=None) -> Path:
    """Cache directory from ``SFION_CACHE``, else ``default``, else ``~/.cache/sfion``."""
    env = os.environ.get("SFION_CACHE")
    if env:
        return Path(env)
    if default is not None:
        return Path(default)
    return Path.home() / ".cache" / "sfion"
