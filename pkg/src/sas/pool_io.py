"""Binary embedding-pool file format (SASE): definition, reader, writer, validation.

A pool bundles unit-normalized image embeddings, their class labels and ids,
and one unit-normalized text prototype per class. All other modules consume
pools through this one.

File layout, all integers little-endian:

    magic       4 bytes ASCII "SASE"
    version     u32 = 1
    dim         u32
    n_classes   u32
    n_images    u64
    class_names n_classes x (u32 byte-length + UTF-8 bytes)
    prototypes  n_classes x dim float32
    image_ids   n_images  x (u32 byte-length + UTF-8 bytes)
    labels      n_images  x u32
    features    n_images  x dim float32

Reading re-validates every invariant; any byte string either parses to a
valid pool or raises a structured error. write(read(bytes)) is byte-identical
and read(write(pool)) is structurally equal to pool.
"""

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .errors import PoolFormatError, PoolValidationError

MAGIC = b"SASE"
VERSION = 1

# |norm - 1| tolerance on load. float32 quantization of a normalized vector
# moves the norm by ~1e-7, so 1e-6 would reject correctly normalized data.
NORM_TOLERANCE = 1e-4


@dataclass
class EmbeddingPool:
    """In-memory embedding pool. Treat as immutable after construction.

    Attributes:
        dim: embedding dimensionality.
        class_names: one name per class, order defines class indices.
        prototypes: (n_classes, dim) float32, unit rows.
        image_ids: unique id per image.
        labels: (n_images,) int64 class indices.
        features: (n_images, dim) float32, unit rows.
    """

    dim: int
    class_names: list[str]
    prototypes: np.ndarray
    image_ids: list[str]
    labels: np.ndarray
    features: np.ndarray

    _unit_features: np.ndarray | None = field(default=None, repr=False, compare=False)
    _unit_prototypes: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_images(self) -> int:
        return len(self.image_ids)

    def class_indices(self, class_index: int) -> np.ndarray:
        """Pool indices of all images with the given class, ascending."""
        return np.flatnonzero(self.labels == class_index)

    def class_histogram(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=self.n_classes)
        return {name: int(counts[c]) for c, name in enumerate(self.class_names)}

    def unit_features(self) -> np.ndarray:
        """Features as float64 rows re-normalized to unit length (cached)."""
        if self._unit_features is None:
            self._unit_features = _renormalize(self.features)
        return self._unit_features

    def unit_prototypes(self) -> np.ndarray:
        """Prototypes as float64 rows re-normalized to unit length (cached)."""
        if self._unit_prototypes is None:
            self._unit_prototypes = _renormalize(self.prototypes)
        return self._unit_prototypes

    def validate(self, require_populated_classes: bool = False) -> None:
        """Check all pool invariants; raise PoolValidationError on the first failure.

        Args:
            require_populated_classes: additionally require every class to own
                at least one image (the file-format contract). In-memory
                subsets may leave classes empty.
        """
        validate_pool(self, require_populated_classes=require_populated_classes)

    def equals(self, other: "EmbeddingPool") -> bool:
        """Field-by-field structural equality (exact array contents)."""
        return (
            self.dim == other.dim
            and self.class_names == other.class_names
            and self.image_ids == other.image_ids
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.prototypes, other.prototypes)
            and np.array_equal(self.features, other.features)
        )


def _renormalize(rows: np.ndarray) -> np.ndarray:
    out = np.asarray(rows, dtype=np.float64)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    return out / norms


def make_pool(
    class_names: Sequence[str],
    prototypes: np.ndarray,
    image_ids: Sequence[str],
    labels: Sequence[int],
    features: np.ndarray,
) -> EmbeddingPool:
    """Assemble and validate a pool from arrays (casts matrices to float32)."""
    prototypes = np.ascontiguousarray(prototypes, dtype=np.float32)
    features = np.ascontiguousarray(features, dtype=np.float32)
    if prototypes.ndim != 2 or features.ndim != 2:
        raise PoolValidationError("prototypes and features must be 2-D matrices")
    pool = EmbeddingPool(
        dim=int(prototypes.shape[1]),
        class_names=list(class_names),
        prototypes=prototypes,
        image_ids=list(image_ids),
        labels=np.asarray(labels, dtype=np.int64),
        features=features,
    )
    pool.validate()
    return pool


def validate_pool(pool: EmbeddingPool, require_populated_classes: bool = False) -> None:
    if pool.dim < 2:
        raise PoolValidationError(f"dim must be >= 2, got {pool.dim}")
    if pool.n_classes < 2:
        raise PoolValidationError(f"need at least 2 classes, got {pool.n_classes}")
    if pool.prototypes.shape != (pool.n_classes, pool.dim):
        raise PoolValidationError(
            f"prototypes shape {pool.prototypes.shape} != ({pool.n_classes}, {pool.dim})"
        )
    if pool.features.shape != (pool.n_images, pool.dim):
        raise PoolValidationError(
            f"features shape {pool.features.shape} != ({pool.n_images}, {pool.dim})"
        )
    if pool.labels.shape != (pool.n_images,):
        raise PoolValidationError("labels length does not match image count")
    if pool.n_images == 0:
        raise PoolValidationError("pool has no images")

    _check_unit_rows(pool.prototypes, "prototype")
    _check_unit_rows(pool.features, "feature")

    if pool.labels.min(initial=0) < 0 or pool.labels.max(initial=0) >= pool.n_classes:
        bad = int(np.flatnonzero((pool.labels < 0) | (pool.labels >= pool.n_classes))[0])
        raise PoolValidationError(
            f"label {int(pool.labels[bad])} at image {bad} outside [0, {pool.n_classes})"
        )

    if len(set(pool.image_ids)) != pool.n_images:
        seen: set[str] = set()
        for image_id in pool.image_ids:
            if image_id in seen:
                raise PoolValidationError(f"duplicate image_id {image_id!r}")
            seen.add(image_id)

    if require_populated_classes:
        counts = np.bincount(pool.labels, minlength=pool.n_classes)
        for c, count in enumerate(counts):
            if count == 0:
                raise PoolValidationError(
                    f"class {c} ({pool.class_names[c]!r}) has no images"
                )


def _check_unit_rows(matrix: np.ndarray, kind: str) -> None:
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
    if bad.size:
        row = int(bad[0])
        raise PoolValidationError(
            f"{kind} row {row} not unit norm (|v| = {norms[row]:.6g})"
        )


# --- writer -----------------------------------------------------------------

def write_pool(pool: EmbeddingPool, sink: BinaryIO) -> None:
    """Serialize a validated pool to the SASE layout.

    Raises PoolValidationError if the pool violates an invariant (file pools
    must have every class populated) and lets sink I/O errors propagate.
    """
    pool.validate(require_populated_classes=True)
    sink.write(MAGIC)
    sink.write(struct.pack("<I", VERSION))
    sink.write(struct.pack("<IIQ", pool.dim, pool.n_classes, pool.n_images))
    for name in pool.class_names:
        _write_string(sink, name)
    sink.write(np.ascontiguousarray(pool.prototypes, dtype="<f4").tobytes())
    for image_id in pool.image_ids:
        _write_string(sink, image_id)
    sink.write(np.ascontiguousarray(pool.labels, dtype="<u4").tobytes())
    sink.write(np.ascontiguousarray(pool.features, dtype="<f4").tobytes())


def _write_string(sink: BinaryIO, text: str) -> None:
    data = text.encode("utf-8")
    sink.write(struct.pack("<I", len(data)))
    sink.write(data)


def save_pool(pool: EmbeddingPool, path: str | Path) -> None:
    with open(path, "wb") as handle:
        write_pool(pool, handle)


# --- reader -----------------------------------------------------------------

def read_pool(source: BinaryIO) -> EmbeddingPool:
    """Parse and validate a SASE byte stream.

    Raises PoolFormatError for malformed bytes (bad magic/version, truncation,
    trailing data) and PoolValidationError for well-formed bytes that violate
    a pool invariant.
    """
    reader = _Reader(source)
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise PoolFormatError(f"bad magic: expected {MAGIC!r}, got {magic!r}")
    (version,) = struct.unpack("<I", reader.take(4, "version"))
    if version != VERSION:
        raise PoolFormatError(f"unsupported version {version}, expected {VERSION}")
    dim, n_classes, n_images = struct.unpack("<IIQ", reader.take(16, "header"))

    class_names = [reader.take_string(f"class name {i}") for i in range(n_classes)]
    prototypes = reader.take_matrix(n_classes, dim, "prototypes")
    image_ids = [reader.take_string(f"image id {i}") for i in range(n_images)]
    labels_raw = reader.take(4 * n_images, "labels")
    labels = np.frombuffer(labels_raw, dtype="<u4").astype(np.int64)
    features = reader.take_matrix(n_images, dim, "features")
    reader.expect_eof()

    pool = EmbeddingPool(
        dim=int(dim),
        class_names=class_names,
        prototypes=prototypes,
        image_ids=image_ids,
        labels=labels,
        features=features,
    )
    pool.validate(require_populated_classes=True)
    return pool


class _Reader:
    """Sequential reader that reports byte shortfalls per section."""

    def __init__(self, source: BinaryIO):
        self.source = source

    def take(self, count: int, what: str) -> bytes:
        data = self.source.read(count)
        if len(data) != count:
            raise PoolFormatError(
                f"truncated file in {what}: expected {count} bytes, got {len(data)}"
            )
        return data

    def take_string(self, what: str) -> str:
        (length,) = struct.unpack("<I", self.take(4, f"{what} length"))
        data = self.take(length, what)
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise PoolFormatError(f"{what} is not valid UTF-8") from exc

    def take_matrix(self, rows: int, cols: int, what: str) -> np.ndarray:
        data = self.take(4 * rows * cols, what)
        return np.frombuffer(data, dtype="<f4").reshape(rows, cols).copy()

    def expect_eof(self) -> None:
        extra = self.source.read(1)
        if extra:
            rest = len(extra) + len(self.source.read())
            raise PoolFormatError(f"trailing data: {rest} unexpected extra bytes")


def load_pool(path: str | Path) -> EmbeddingPool:
    with open(path, "rb") as handle:
        return read_pool(handle)


def pool_to_bytes(pool: EmbeddingPool) -> bytes:
    buffer = io.BytesIO()
    write_pool(pool, buffer)
    return buffer.getvalue()


def pool_from_bytes(data: bytes) -> EmbeddingPool:
    return read_pool(io.BytesIO(data))


# --- subset -----------------------------------------------------------------

def pool_subset(pool: EmbeddingPool, indices: Sequence[int]) -> EmbeddingPool:
    """New pool restricted to the given image indices.

    Prototypes and class names are kept in full, so classes may end up empty
    in the subset; such pools are fine in memory but cannot be written to file.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty subset not allowed")
    if idx.min() < 0 or idx.max() >= pool.n_images:
        raise ValueError(f"subset index out of range [0, {pool.n_images})")
    if len(np.unique(idx)) != idx.size:
        raise ValueError("subset indices must be unique")
    return EmbeddingPool(
        dim=pool.dim,
        class_names=list(pool.class_names),
        prototypes=pool.prototypes.copy(),
        image_ids=[pool.image_ids[i] for i in idx],
        labels=pool.labels[idx].copy(),
        features=pool.features[idx].copy(),
    )


def summarize_pool(pool: EmbeddingPool) -> str:
    """Human-readable summary used by `sas validate`."""
    lines = [
        f"dim:       {pool.dim}",
        f"classes:   {pool.n_classes}",
        f"images:    {pool.n_images}",
        "per-class histogram:",
    ]
    for name, count in pool.class_histogram().items():
        lines.append(f"  {name}: {count}")
    return "\n".join(lines)
