"""Reference selectors: uniform random draws and greedy k-center.

Both share the Selection output contract of the sampler module so reports
and sweeps treat them uniformly.
"""

import math

import numpy as np

from .pool_io import EmbeddingPool
from .sampler import (
    ClassSelection,
    Selection,
    SelectionConfig,
    SelectedImage,
    _DistanceCache,
    _build_entries,
    _short_class_warnings,
)
from .scoring import ScoreTable


def select_random(
    pool: EmbeddingPool, table: ScoreTable, config: SelectionConfig
) -> Selection:
    """Uniform per-class sample without replacement.

    Each class draws from its own generator seeded with (seed, class index),
    so adding classes never perturbs earlier classes' draws. Selected entries
    carry the margin and static diversity from the score table for reporting.
    """
    config.validate()
    selection = Selection(config=config)
    _short_class_warnings(pool, config.ipc, selection.warnings)
    for c in range(pool.n_classes):
        idx = pool.class_indices(c)
        take = min(config.ipc, idx.size)
        rng = np.random.default_rng([config.seed, c])
        chosen = sorted(int(i) for i in rng.choice(idx, size=take, replace=False))
        selected = []
        for i in chosen:
            div = float(table.diversity_static[i])
            selected.append(
                SelectedImage(
                    image_id=pool.image_ids[i],
                    pool_index=i,
                    margin=float(table.margin[i]),
                    dynamic_diversity=None if math.isnan(div) else div,
                )
            )
        selection.classes.append(
            ClassSelection(
                class_name=pool.class_names[c],
                class_index=c,
                selected=selected,
                removals=[],
            )
        )
    return selection


def select_kcenter(
    pool: EmbeddingPool, table: ScoreTable, config: SelectionConfig
) -> Selection:
    """Greedy farthest-point selection per class under angular distance.

    Starts from the image nearest its class prototype (highest relevance),
    then repeatedly adds the image whose minimum distance to the selected set
    is largest. Ties always resolve to the lower pool index.
    """
    config.validate()
    dist = _DistanceCache(pool.unit_features())
    selection = Selection(config=config)
    _short_class_warnings(pool, config.ipc, selection.warnings)
    for c in range(pool.n_classes):
        idx = [int(i) for i in pool.class_indices(c)]
        chosen = _kcenter_class(idx, table, dist, min(config.ipc, len(idx)))
        selection.classes.append(
            ClassSelection(
                class_name=pool.class_names[c],
                class_index=c,
                selected=_build_entries(pool, table, chosen, dist),
                removals=[],
            )
        )
    return selection


def _kcenter_class(
    idx: list[int], table: ScoreTable, dist: _DistanceCache, take: int
) -> list[int]:
    if not idx:
        return []
    start = max(idx, key=lambda i: (table.relevance[i], -i))
    chosen = [start]
    min_dist = {i: dist(i, start) for i in idx if i != start}
    while len(chosen) < take:
        nxt = max(min_dist, key=lambda i: (min_dist[i], -i))
        chosen.append(nxt)
        del min_dist[nxt]
        for i in min_dist:
            d = dist(i, nxt)
            if d < min_dist[i]:
                min_dist[i] = d
    return chosen
