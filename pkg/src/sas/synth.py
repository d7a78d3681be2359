"""Synthetic embedding pools with controllable class geometry.

Used as the test substrate for property and statistical checks: prototypes
are (near-)orthonormal random directions, images scatter around their class
prototype with tunable concentration, and a configurable fraction of images
are near-duplicates of earlier images in the same class.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .pool_io import EmbeddingPool, make_pool

logger = logging.getLogger(__name__)

DUPLICATE_PERTURBATION = 1e-3


@dataclass
class SyntheticSpec:
    """Parameters for one generated pool.

    concentration = 0 gives images uniform on the sphere; large values pull
    them toward their class prototype. duplicate_fraction of each class's
    images are near-copies (perturbation of magnitude 1e-3, re-normalized)
    of a random earlier image in the class.
    """

    dim: int
    n_classes: int
    per_class: int
    concentration: float = 0.0
    duplicate_fraction: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.per_class < 1:
            raise ValueError(f"per_class must be >= 1, got {self.per_class}")
        if self.concentration < 0:
            raise ValueError("concentration must be >= 0")
        if not 0.0 <= self.duplicate_fraction < 1.0:
            raise ValueError("duplicate_fraction must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def generate_pool(spec: SyntheticSpec) -> EmbeddingPool:
    """Deterministic pool for a spec; always passes pool validation.

    Per class, original images come first and near-duplicates follow, so the
    last floor(duplicate_fraction * per_class) ids of each class are the
    duplicated ones.
    """
    spec.validate()
    prototypes = _prototypes(spec)
    class_names = [f"class_{c:03d}" for c in range(spec.n_classes)]

    features = []
    image_ids = []
    labels = []
    n_dup = int(spec.duplicate_fraction * spec.per_class)
    n_orig = spec.per_class - n_dup
    for c in range(spec.n_classes):
        rng = np.random.default_rng([spec.seed, 1, c])
        noise = rng.standard_normal((n_orig, spec.dim))
        originals = _unit_rows(spec.concentration * prototypes[c] + noise)
        rows = [originals]
        if n_dup:
            sources = rng.integers(0, n_orig, size=n_dup)
            deltas = _unit_rows(rng.standard_normal((n_dup, spec.dim)))
            rows.append(_unit_rows(originals[sources] + DUPLICATE_PERTURBATION * deltas))
        features.append(np.vstack(rows))
        image_ids.extend(f"{class_names[c]}/img_{k:04d}" for k in range(spec.per_class))
        labels.extend([c] * spec.per_class)

    return make_pool(
        class_names=class_names,
        prototypes=prototypes,
        image_ids=image_ids,
        labels=labels,
        features=np.vstack(features),
    )


def _prototypes(spec: SyntheticSpec) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, 0])
    draws = rng.standard_normal((spec.n_classes, spec.dim))
    if spec.dim < spec.n_classes:
        logger.warning(
            "dim %d < n_classes %d: prototypes cannot be orthonormalized, "
            "falling back to plain normalized Gaussian draws",
            spec.dim,
            spec.n_classes,
        )
        return _unit_rows(draws)
    # Modified Gram-Schmidt; Gaussian rows are independent with probability 1.
    basis = np.empty_like(draws)
    for i in range(spec.n_classes):
        v = draws[i].copy()
        for j in range(i):
            v -= (v @ basis[j]) * basis[j]
        basis[i] = v / np.linalg.norm(v)
    return basis


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)
