"""Dataset synthesis, image-patch ingestion, and file formats.

Matrices travel in two exchange formats: a binary container (magic
``DMAT``, version byte, row/column counts as little-endian int64, then
row-major little-endian float64 values) that round-trips bit exactly, and
plain CSV with one value per cell.  Datasets carry a JSON sidecar with
provenance.  Every randomized operation takes an explicit seed and is
reproducible bit for bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientPatches, ParseError, SchemaVersionMismatch
from .linalg import atom_matrix

_MAGIC = b"DMAT"
_VERSION = 1
_SCHEMA_VERSION = 1
_VARIANCE_FLOOR = 1e-8


@dataclass
class Dataset:
    """Data points as columns of a (d, T) matrix plus provenance."""

    matrix: np.ndarray
    provenance: dict
    normalized: bool = False

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_points(self) -> int:
        return self.matrix.shape[1]


def synth_dataset(ground_set, num_points, k_planted, s, seed, planted=None) -> Dataset:
    """Sparse linear combinations of a randomly planted sub-dictionary.

    Picks ``k_planted`` atoms uniformly without replacement (or uses the
    given ``planted`` indices), then draws each point as ``s`` planted
    atoms with standard-normal weights.  Provenance records the planted
    indices so recovery can be scored later.
    """
    a = atom_matrix(ground_set)
    n = a.shape[1]
    if not 0 <= s <= k_planted <= n:
        raise ValueError("need 0 <= s <= k_planted <= n")
    rng = np.random.default_rng(seed)
    if planted is None:
        planted = np.sort(rng.choice(n, size=k_planted, replace=False))
    else:
        planted = np.asarray(sorted(int(j) for j in planted))
        if len(planted) != k_planted:
            raise ValueError("planted indices disagree with k_planted")
    y = np.zeros((a.shape[0], num_points))
    for t in range(num_points):
        if s:
            support = rng.choice(planted, size=s, replace=False)
            y[:, t] = a[:, support] @ rng.standard_normal(s)
    provenance = {
        "kind": "synthetic",
        "seed": _seed_repr(seed),
        "planted": [int(j) for j in planted],
        "s": int(s),
    }
    return Dataset(y, provenance)


def extract_patches(image, num_patches, side=8, seed=0) -> Dataset:
    """Sample non-overlapping side x side tiles of a grayscale image.

    Tiles are vectorized row-major, sampled uniformly without
    replacement, and normalized to zero mean and unit variance.  Tiles
    whose variance is below 1e-8 cannot be normalized and are excluded
    from sampling; raises InsufficientPatches when fewer than
    ``num_patches`` usable tiles exist.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or min(img.shape) < side:
        raise ValueError(f"image must be 2D with both sides >= {side}")
    rows, cols = img.shape[0] // side, img.shape[1] // side
    tiles = []
    for i in range(rows):
        for j in range(cols):
            tile = img[i * side : (i + 1) * side, j * side : (j + 1) * side]
            if tile.var() >= _VARIANCE_FLOOR:
                tiles.append(tile.reshape(-1))
    if len(tiles) < num_patches:
        raise InsufficientPatches(
            f"{len(tiles)} usable tiles available, {num_patches} requested"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(tiles), size=num_patches, replace=False)
    y = np.empty((side * side, num_patches))
    for t, idx in enumerate(chosen):
        patch = tiles[idx]
        patch = patch - patch.mean()
        y[:, t] = patch / patch.std()
    provenance = {"kind": "patches", "seed": _seed_repr(seed), "side": int(side)}
    return Dataset(y, provenance, normalized=True)


def _seed_repr(seed):
    if isinstance(seed, (list, tuple, np.ndarray)):
        return [int(x) for x in seed]
    return int(seed)


def save_matrix(path, matrix) -> None:
    """Write a matrix in the binary container format (bit-exact round trip)."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype="<f8"))
    if m.ndim != 2:
        raise ValueError("only 2D matrices are supported")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<B", _VERSION))
        fh.write(struct.pack("<qq", m.shape[0], m.shape[1]))
        fh.write(m.tobytes(order="C"))


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ParseError(f"{path}: bad magic {blob[:4]!r}")
    version = blob[4]
    if version != _VERSION:
        raise SchemaVersionMismatch(f"{path}: format version {version}, expected {_VERSION}")
    rows, cols = struct.unpack("<qq", blob[5:21])
    data = np.frombuffer(blob[21:], dtype="<f8")
    if data.size != rows * cols:
        raise ParseError(f"{path}: payload holds {data.size} values, expected {rows * cols}")
    return data.reshape(rows, cols).astype(float)


def save_matrix_csv(path, matrix) -> None:
    m = np.asarray(matrix, dtype=float)
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if rows and len(cells) != len(rows[0]):
                raise ParseError(
                    f"{path}: row {lineno} has {len(cells)} cells, expected {len(rows[0])}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows)


def _sidecar(path) -> Path:
    return Path(str(path) + ".meta.json")


def save_dataset(path, dataset: Dataset) -> None:
    """Binary matrix plus a JSON sidecar holding provenance."""
    save_matrix(path, dataset.matrix)
    meta = {
        "schema_version": _SCHEMA_VERSION,
        "provenance": dataset.provenance,
        "normalized": dataset.normalized,
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2))


def load_dataset(path) -> Dataset:
    matrix = load_matrix(path)
    sidecar = _sidecar(path)
    if sidecar.exists():
        meta = _load_json(sidecar)
        if meta.get("schema_version") != _SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"{sidecar}: schema version {meta.get('schema_version')}"
            )
        return Dataset(matrix, meta["provenance"], bool(meta["normalized"]))
    return Dataset(matrix, {"kind": "loaded", "path": str(path)})


def save_ground_set(path, ground_set) -> None:
    save_matrix(path, ground_set.matrix)
    meta = {
        "schema_version": _SCHEMA_VERSION,
        "labels": [[name, int(idx)] for name, idx in ground_set.labels],
    }
    _sidecar(path).write_text(json.dumps(meta))


def load_ground_set(path):
    from .groundset import assemble

    matrix = load_matrix(path)
    sidecar = _sidecar(path)
    if sidecar.exists():
        meta = _load_json(sidecar)
        if meta.get("schema_version") != _SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"{sidecar}: schema version {meta.get('schema_version')}"
            )
        labels = [(name, int(idx)) for name, idx in meta["labels"]]
        blocks = []
        start = 0
        while start < len(labels):
            name = labels[start][0]
            stop = start
            while stop < len(labels) and labels[stop][0] == name:
                stop += 1
            blocks.append((name, matrix[:, start:stop]))
            start = stop
        return assemble(blocks)
    return assemble([("loaded", matrix)])


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM (P5) image as a float matrix."""
    with open(path, "rb") as fh:
        blob = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError(f"{path}: truncated header")
        tokens.append(blob[start:pos])
    if tokens[0] != b"P5":
        raise ParseError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric header field") from exc
    if maxval > 255:
        raise ParseError(f"{path}: only 8-bit PGM supported, maxval {maxval}")
    pos += 1
    pixels = np.frombuffer(blob[pos : pos + width * height], dtype=np.uint8)
    if pixels.size != width * height:
        raise ParseError(f"{path}: expected {width * height} pixels, found {pixels.size}")
    return pixels.reshape(height, width).astype(float)
