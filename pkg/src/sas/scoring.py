"""Semantic scores on the unit hypersphere.

Every score is built from one metric: the angular distance
arccos(clamp(v1 . v2)) between unit vectors, with the inner product clamped
to [-1+eps, 1-eps] (eps = 1e-6) for numerical stability. Note the clamp makes
the distance between identical vectors ~1.414e-3 rather than 0; nothing
special-cases equality.

Per image i with class c and prototypes t:
    relevance    = -d(v_i, t_c)                   in [-pi, 0], higher = closer
    separation   = min over c' != c of d(v_i, t_c')   in [0, pi]
    diversity    = mean over same-class j != i of d(v_i, v_j)
    margin       = relevance + separation
    mixed        = margin + lambda * z(diversity)  with per-class z-scoring

Storage is float32; all scores are computed in float64 on re-normalized rows
(arccos is ill-conditioned near +-1, so inputs are renormalized first).
"""

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .floatfmt import fmt_float
from .pool_io import EmbeddingPool

CLAMP_EPS = 1e-6

#: Distance between identical unit vectors under the clamp: acos(1 - 1e-6).
MIN_DISTANCE = math.acos(1.0 - CLAMP_EPS)
#: Distance between antipodal unit vectors under the clamp: acos(-1 + 1e-6).
MAX_DISTANCE = math.acos(-1.0 + CLAMP_EPS)


def angular_distance(v1: np.ndarray, v2: np.ndarray) -> float:
    """Angular distance in radians between two unit vectors.

    Callers pass float64 unit vectors (see EmbeddingPool.unit_features).
    The result lies in [MIN_DISTANCE, MAX_DISTANCE] and is symmetric.
    """
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    if v1.ndim != 1 or v1.shape != v2.shape:
        raise ValueError(f"dimension mismatch: {v1.shape} vs {v2.shape}")
    if not (np.isfinite(v1).all() and np.isfinite(v2).all()):
        raise ValueError("non-finite input vector")
    dot = float(np.dot(v1, v2))
    dot = min(max(dot, -1.0 + CLAMP_EPS), 1.0 - CLAMP_EPS)
    return math.acos(dot)


def clamped_arccos(dots: np.ndarray) -> np.ndarray:
    """Vectorized counterpart of angular_distance on a matrix of inner products."""
    return np.arccos(np.clip(dots, -1.0 + CLAMP_EPS, 1.0 - CLAMP_EPS))


@dataclass
class ScoreTable:
    """Per-image scores over a pool, all float64 arrays of length n_images.

    diversity_static is NaN for images whose class has a single member (the
    mean over "other same-class images" is undefined there); those classes
    are listed in singleton_classes.
    """

    relevance: np.ndarray
    separation: np.ndarray
    diversity_static: np.ndarray
    margin: np.ndarray
    singleton_classes: list[int]
    mixed: np.ndarray | None = None


def target_relevance(pool: EmbeddingPool, image_index: int) -> float:
    """Negated angular distance from an image to its own class prototype."""
    i = _check_index(pool, image_index)
    c = int(pool.labels[i])
    return -angular_distance(pool.unit_features()[i], pool.unit_prototypes()[c])


def non_target_separation(pool: EmbeddingPool, image_index: int) -> float:
    """Minimum angular distance from an image to any other class's prototype."""
    i = _check_index(pool, image_index)
    c = int(pool.labels[i])
    v = pool.unit_features()[i]
    protos = pool.unit_prototypes()
    return min(
        angular_distance(v, protos[other])
        for other in range(pool.n_classes)
        if other != c
    )


def diversity(pool: EmbeddingPool, image_index: int, member_indices: Iterable[int]) -> float:
    """Mean angular distance from one member to the others of a same-class set.

    With member_indices covering the whole class this is the static diversity
    score; with the evolving selected set it is the dynamic variant used
    during sampling. Summation runs in ascending pool-index order.
    """
    i = _check_index(pool, image_index)
    members = sorted(set(int(m) for m in member_indices))
    if i not in members:
        raise ValueError("member_indices must include image_index")
    if len(members) < 2:
        raise ValueError("diversity undefined for singleton set")
    labels = pool.labels
    c = int(labels[i])
    for m in members:
        _check_index(pool, m)
        if int(labels[m]) != c:
            raise ValueError(
                f"member {m} has class {int(labels[m])}, expected {c} (mixed classes)"
            )
    feats = pool.unit_features()
    others = [m for m in members if m != i]
    return sum(angular_distance(feats[i], feats[m]) for m in others) / len(others)


def _check_index(pool: EmbeddingPool, image_index: int) -> int:
    i = int(image_index)
    if not 0 <= i < pool.n_images:
        raise ValueError(f"image index {i} out of range [0, {pool.n_images})")
    return i


def score_pool(pool: EmbeddingPool) -> ScoreTable:
    """Compute relevance, separation, static diversity and margin for every image.

    Deterministic; each image's scores are independent of evaluation order.
    """
    if pool.n_classes < 2:
        raise ValueError("scoring requires at least 2 classes")
    feats = pool.unit_features()
    protos = pool.unit_prototypes()
    labels = pool.labels
    n = pool.n_images

    proto_dist = clamped_arccos(feats @ protos.T)  # (n_images, n_classes)
    rows = np.arange(n)
    relevance = -proto_dist[rows, labels]
    masked = proto_dist.copy()
    masked[rows, labels] = np.inf
    separation = masked.min(axis=1)
    margin = relevance + separation

    diversity_static = np.full(n, np.nan)
    singleton_classes: list[int] = []
    for c in range(pool.n_classes):
        idx = pool.class_indices(c)
        if idx.size == 0:
            continue
        if idx.size == 1:
            singleton_classes.append(c)
            continue
        block = clamped_arccos(feats[idx] @ feats[idx].T)
        diversity_static[idx] = (block.sum(axis=1) - np.diag(block)) / (idx.size - 1)

    return ScoreTable(
        relevance=relevance,
        separation=separation,
        diversity_static=diversity_static,
        margin=margin,
        singleton_classes=singleton_classes,
    )


def mixed_score(table: ScoreTable, pool: EmbeddingPool, lambda_: float) -> np.ndarray:
    """Margin plus lambda times the per-class z-scored static diversity.

    The z-score uses the population standard deviation within each class; a
    class whose diversity values are all equal gets z = 0 throughout.
    """
    if lambda_ < 0:
        raise ValueError(f"lambda must be >= 0, got {lambda_}")
    if table.singleton_classes:
        c = table.singleton_classes[0]
        raise ValueError(
            f"mixed score undefined: class {c} ({pool.class_names[c]!r}) "
            "has a single image, so its diversity is undefined"
        )
    z = np.zeros(pool.n_images)
    for c in range(pool.n_classes):
        idx = pool.class_indices(c)
        if idx.size == 0:
            continue
        values = table.diversity_static[idx]
        if np.all(values == values[0]):
            continue  # zero-variance class: z stays 0
        z[idx] = (values - values.mean()) / values.std()
    return table.margin + lambda_ * z


def scores_to_csv(
    pool: EmbeddingPool,
    table: ScoreTable,
    sink: IO[str],
    lambda_: float | None = None,
) -> None:
    """Write per-image scores as CSV in pool order, 9 significant digits.

    Passing a lambda adds the mixed-score column.
    """
    fields = ["image_id", "class", "relevance", "separation", "diversity_static", "margin"]
    mixed = None
    if lambda_ is not None:
        mixed = mixed_score(table, pool, lambda_)
        fields.append("mixed")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(fields)
    for i in range(pool.n_images):
        row = [
            pool.image_ids[i],
            pool.class_names[int(pool.labels[i])],
            fmt_float(float(table.relevance[i])),
            fmt_float(float(table.separation[i])),
            fmt_float(float(table.diversity_static[i])),
            fmt_float(float(table.margin[i])),
        ]
        if mixed is not None:
            row.append(fmt_float(float(mixed[i])))
        writer.writerow(row)
