"""Random and k-center baseline tests."""

import numpy as np
import pytest

from oracles import oracle_kcenter_class
from sas.baselines import select_kcenter, select_random
from sas.pool_io import make_pool
from sas.sampler import SelectionConfig, selection_to_json
from sas.scoring import angular_distance, score_pool
from sas.synth import SyntheticSpec, generate_pool
from conftest import unit


def e(i, dim):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


# --- random ---------------------------------------------------------------------


def test_random_full_class_regardless_of_seed(random_pool):
    table = score_pool(random_pool)
    ids = None
    for seed in (0, 1, 99):
        sel = select_random(
            random_pool, table, SelectionConfig(ipc=20, selector="random", seed=seed)
        )
        got = [sorted(s.image_id for s in c.selected) for c in sel.classes]
        assert all(len(x) == 20 for x in got)
        if ids is not None:
            assert got == ids
        ids = got


def test_random_same_seed_identical(random_pool):
    table = score_pool(random_pool)
    config = SelectionConfig(ipc=5, selector="random", seed=1234)
    a = selection_to_json(select_random(random_pool, table, config))
    b = selection_to_json(select_random(random_pool, table, config))
    assert a == b


def test_random_different_seeds_differ(random_pool):
    table = score_pool(random_pool)
    a = select_random(random_pool, table, SelectionConfig(ipc=5, selector="random", seed=1))
    b = select_random(random_pool, table, SelectionConfig(ipc=5, selector="random", seed=2))
    assert selection_to_json(a) != selection_to_json(b)


def test_random_unaffected_by_later_classes():
    # per-(seed, class) streams: class 0 draws identically in a 2-class and
    # a 3-class pool built from the same class geometries
    base = generate_pool(SyntheticSpec(dim=8, n_classes=3, per_class=10, seed=7))
    table3 = score_pool(base)
    config = SelectionConfig(ipc=4, selector="random", seed=11)
    three = select_random(base, table3, config)

    from sas.pool_io import pool_subset

    two = pool_subset(base, list(range(20)))  # classes 0 and 1 only (class 2 empty)
    table2 = score_pool(two)
    sel_two = select_random(two, table2, config)
    assert [s.image_id for s in sel_two.classes[0].selected] == [
        s.image_id for s in three.classes[0].selected
    ]


def test_random_marginal_uniformity():
    # 10-image class, ipc=1, 10000 seeds: every image picked 10% +- 1%
    pool = generate_pool(SyntheticSpec(dim=4, n_classes=2, per_class=10, seed=3))
    counts = {image_id: 0 for image_id in pool.image_ids[:10]}
    idx0 = pool.class_indices(0)
    rng_hits = 0
    for seed in range(10_000):
        rng = np.random.default_rng([seed, 0])
        chosen = rng.choice(idx0, size=1, replace=False)
        counts[pool.image_ids[int(chosen[0])]] += 1
        rng_hits += 1
    assert rng_hits == 10_000
    for image_id, count in counts.items():
        assert 0.09 <= count / 10_000 <= 0.11, (image_id, count)


def test_random_fills_scores_from_table(random_pool):
    table = score_pool(random_pool)
    sel = select_random(random_pool, table, SelectionConfig(ipc=3, selector="random"))
    for cls in sel.classes:
        for s in cls.selected:
            assert s.margin == float(table.margin[s.pool_index])
            assert s.dynamic_diversity == float(table.diversity_static[s.pool_index])


# --- k-center -------------------------------------------------------------------


def test_kcenter_ipc1_is_nearest_prototype(random_pool):
    table = score_pool(random_pool)
    sel = select_kcenter(random_pool, table, SelectionConfig(ipc=1, selector="kcenter"))
    for cls in sel.classes:
        idx = random_pool.class_indices(cls.class_index)
        best = idx[np.argmax(table.relevance[idx])]
        assert [s.pool_index for s in cls.selected] == [int(best)]


def test_kcenter_orthogonal_tie_takes_lower_index():
    # three mutually orthogonal images; m0 is nearest the prototype, the two
    # others tie on distance, so the lower pool index joins it
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([unit(1, 0.1, 0, 0), e(3, 4)]),
        image_ids=["m0", "m1", "m2", "o0"],
        labels=[0, 0, 0, 1],
        features=np.array([e(0, 4), e(1, 4), e(2, 4), e(3, 4)]),
    )
    table = score_pool(pool)
    sel = select_kcenter(pool, table, SelectionConfig(ipc=2, selector="kcenter"))
    assert [s.image_id for s in sel.classes[0].selected] == ["m0", "m1"]


@pytest.mark.parametrize("seed", range(6))
def test_kcenter_matches_greedy_oracle(seed):
    pool = generate_pool(
        SyntheticSpec(dim=10, n_classes=2, per_class=15, concentration=2.0, seed=seed)
    )
    table = score_pool(pool)
    sel = select_kcenter(pool, table, SelectionConfig(ipc=4, selector="kcenter"))
    for cls in sel.classes:
        expected = oracle_kcenter_class(pool, table, 4, cls.class_index)
        assert [s.pool_index for s in cls.selected] == expected


def test_kcenter_max_min_property(random_pool):
    table = score_pool(random_pool)
    sel = select_kcenter(random_pool, table, SelectionConfig(ipc=6, selector="kcenter"))
    feats = random_pool.unit_features()
    for cls in sel.classes:
        order = [s.pool_index for s in cls.selected]
        members = set(int(i) for i in random_pool.class_indices(cls.class_index))
        for step in range(1, len(order)):
            prefix = order[:step]
            chosen = order[step]
            chosen_min = min(angular_distance(feats[chosen], feats[p]) for p in prefix)
            for i in members - set(prefix) - {chosen}:
                other_min = min(angular_distance(feats[i], feats[p]) for p in prefix)
                assert chosen_min >= other_min


def test_baseline_cardinality_and_uniqueness(random_pool):
    table = score_pool(random_pool)
    for selector, fn in (("random", select_random), ("kcenter", select_kcenter)):
        sel = fn(random_pool, table, SelectionConfig(ipc=7, selector=selector))
        for cls in sel.classes:
            ids = [s.image_id for s in cls.selected]
            assert len(ids) == 7
            assert len(set(ids)) == 7
