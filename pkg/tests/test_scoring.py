"""Scoring tests: frozen oracle values, loop-oracle equivalence, properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_angular, oracle_mixed, oracle_scores
from sas.pool_io import EmbeddingPool, make_pool
from sas.scoring import (
    angular_distance,
    diversity,
    mixed_score,
    non_target_separation,
    score_pool,
    target_relevance,
)
from sas.synth import SyntheticSpec, generate_pool
from conftest import unit

# acos(1 - 1e-6) and acos(-1 + 1e-6): verified against a 40-digit arccos
# (values 0.001414213680244585... and 3.140178439909548...).
MIN_DIST = 0.0014142136802445852
MAX_DIST = 3.1401784399095485
PI_2 = math.pi / 2


def e(i, dim):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


# --- angular distance ----------------------------------------------------------


@pytest.mark.parametrize("dim", [2, 3, 8, 512])
def test_identical_vectors_hit_clamp(dim):
    v = e(0, dim)
    assert angular_distance(v, v) == pytest.approx(MIN_DIST, abs=1e-15)


def test_orthogonal_vectors():
    assert angular_distance(e(0, 4), e(1, 4)) == pytest.approx(PI_2, abs=1e-15)


def test_antipodal_vectors_hit_clamp():
    v = e(0, 3)
    assert angular_distance(v, -v) == pytest.approx(MAX_DIST, abs=1e-15)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError, match="dimension mismatch"):
        angular_distance(e(0, 3), e(0, 4))


def test_non_finite_rejected():
    v = e(0, 3)
    bad = v.copy()
    bad[1] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        angular_distance(v, bad)
    bad[1] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        angular_distance(bad, v)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_symmetry_and_bounds_random_pairs(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 64))
    a = rng.standard_normal(dim)
    b = rng.standard_normal(dim)
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    d_ab = angular_distance(a, b)
    assert d_ab == angular_distance(b, a)  # exact symmetry
    assert MIN_DIST <= d_ab <= MAX_DIST
    assert abs(d_ab - oracle_angular(a, b)) <= 1e-12


def test_strictly_decreasing_in_inner_product():
    # within the clamp range, larger dot -> smaller distance
    dots = np.linspace(-1 + 1e-6, 1 - 1e-6, 101)
    dists = []
    for dot in dots:
        a = np.array([1.0, 0.0])
        b = np.array([dot, math.sqrt(max(0.0, 1 - dot * dot))])
        b /= np.linalg.norm(b)
        dists.append(angular_distance(a, b))
    diffs = np.diff(dists)
    assert np.all(diffs < 0)


# --- per-image scores -----------------------------------------------------------


def proto_pool():
    """3 classes in 3-D with prototypes e1, e2, normalize(1,1,0)."""
    return make_pool(
        class_names=["c0", "c1", "c2"],
        prototypes=np.array([e(0, 3), e(1, 3), unit(1, 1, 0)]),
        image_ids=["p0", "p1", "p2"],
        labels=[0, 1, 2],
        features=np.array([e(0, 3), e(1, 3), unit(1, 1, 0)]),
    )


def test_relevance_at_own_prototype(proto3=None):
    pool = proto_pool()
    assert target_relevance(pool, 0) == pytest.approx(-MIN_DIST, abs=1e-15)


def test_relevance_orthogonal_prototype():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(1, 3)]),
        image_ids=["p0", "p1"],
        labels=[0, 1],
        features=np.array([e(2, 3), e(1, 3)]),
    )
    assert target_relevance(pool, 0) == pytest.approx(-PI_2, abs=1e-15)


def test_relevance_45_degrees():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(1, 3)]),
        image_ids=["p0", "p1"],
        labels=[0, 1],
        features=np.array([unit(1, 1, 0), e(1, 3)]),
    )
    assert target_relevance(pool, 0) == pytest.approx(-math.pi / 4, abs=1e-12)


def test_separation_minimum_over_other_prototypes():
    pool = proto_pool()
    # image e1 of class 0: distances to e2 (pi/2) and (1,1,0)/sqrt2 (pi/4)
    assert non_target_separation(pool, 0) == pytest.approx(math.pi / 4, abs=1e-12)


def test_separation_at_non_target_prototype():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(1, 3)]),
        image_ids=["p0", "p1"],
        labels=[0, 1],
        features=np.array([e(1, 3), e(1, 3)]),  # class-0 image equals class-1 prototype
    )
    assert non_target_separation(pool, 0) == pytest.approx(MIN_DIST, abs=1e-15)


def test_separation_two_classes_orthogonal():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(1, 3)]),
        image_ids=["p0", "p1"],
        labels=[0, 1],
        features=np.array([e(0, 3), e(0, 3)]),
    )
    assert non_target_separation(pool, 0) == pytest.approx(PI_2, abs=1e-15)


def orthogonal_members_pool():
    return make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 4), e(3, 4)]),
        image_ids=["m0", "m1", "m2", "other"],
        labels=[0, 0, 0, 1],
        features=np.array([e(0, 4), e(1, 4), e(2, 4), e(3, 4)]),
    )


def test_diversity_mutually_orthogonal_members():
    pool = orthogonal_members_pool()
    for i in range(3):
        assert diversity(pool, i, [0, 1, 2]) == pytest.approx(PI_2, abs=1e-15)


def test_diversity_duplicated_vector_is_clamped_not_zero():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(1, 3)]),
        image_ids=["m0", "m1", "other"],
        labels=[0, 0, 1],
        features=np.array([e(0, 3), e(0, 3), e(1, 3)]),
    )
    assert diversity(pool, 0, [0, 1]) == pytest.approx(MIN_DIST, abs=1e-15)


def test_diversity_mean_of_two_angles():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(2, 3)]),
        image_ids=["m0", "m1", "m2", "other"],
        labels=[0, 0, 0, 1],
        features=np.array([e(0, 3), e(1, 3), unit(1, 1, 0), e(2, 3)]),
    )
    # distances from e1: pi/2 and pi/4 -> mean 3*pi/8
    assert diversity(pool, 0, [0, 1, 2]) == pytest.approx(3 * math.pi / 8, abs=1e-12)


def test_diversity_singleton_set_rejected(tiny_pool):
    with pytest.raises(ValueError, match="singleton"):
        diversity(tiny_pool, 0, [0])


def test_diversity_mixed_classes_rejected(tiny_pool):
    with pytest.raises(ValueError, match="mixed classes"):
        diversity(tiny_pool, 0, [0, 3])


def test_diversity_must_include_image(tiny_pool):
    with pytest.raises(ValueError, match="include image_index"):
        diversity(tiny_pool, 0, [1, 2])


def test_invalid_index_rejected(tiny_pool):
    with pytest.raises(ValueError, match="out of range"):
        target_relevance(tiny_pool, 99)
    with pytest.raises(ValueError, match="out of range"):
        non_target_separation(tiny_pool, -6)


# --- score_pool -----------------------------------------------------------------


def test_margin_when_images_equal_orthogonal_prototypes():
    dim = 4
    pool = make_pool(
        class_names=["c0", "c1", "c2"],
        prototypes=np.array([e(0, dim), e(1, dim), e(2, dim)]),
        image_ids=["i0", "i1", "i2"],
        labels=[0, 1, 2],
        features=np.array([e(0, dim), e(1, dim), e(2, dim)]),
    )
    table = score_pool(pool)
    expected = -MIN_DIST + PI_2
    assert np.allclose(table.margin, expected, atol=1e-15)


def test_margin_is_exactly_relevance_plus_separation(random_pool):
    # bitwise equality: margin is produced by the same float64 addition
    table = score_pool(random_pool)
    assert np.array_equal(table.margin, table.relevance + table.separation)


def test_score_ranges(random_pool):
    table = score_pool(random_pool)
    assert np.all(table.relevance <= 0) and np.all(table.relevance >= -math.pi)
    assert np.all(table.separation >= 0) and np.all(table.separation <= math.pi)
    assert np.all(table.diversity_static >= 0)
    assert np.all(table.diversity_static <= math.pi)
    assert np.all(np.abs(table.margin) <= math.pi)


def test_singleton_class_diversity_is_nan_and_flagged():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(1, 3)]),
        image_ids=["a", "b", "c"],
        labels=[0, 0, 1],
        features=np.array([e(0, 3), unit(1, 0.5, 0), e(1, 3)]),
    )
    table = score_pool(pool)
    assert table.singleton_classes == [1]
    assert math.isnan(table.diversity_static[2])
    assert not math.isnan(table.diversity_static[0])


@pytest.mark.parametrize("seed", range(8))
def test_scores_match_loop_oracle(seed):
    pool = generate_pool(
        SyntheticSpec(dim=12, n_classes=3, per_class=10, concentration=3.0, seed=seed)
    )
    table = score_pool(pool)
    expected = oracle_scores(pool)
    np.testing.assert_allclose(table.relevance, expected["relevance"], atol=1e-12, rtol=0)
    np.testing.assert_allclose(table.separation, expected["separation"], atol=1e-12, rtol=0)
    np.testing.assert_allclose(table.diversity_static, expected["diversity"], atol=1e-12, rtol=0)
    np.testing.assert_allclose(table.margin, expected["margin"], atol=1e-12, rtol=0)


def test_rotation_invariance():
    rng = np.random.default_rng(11)
    dim = 24
    base = generate_pool(
        SyntheticSpec(dim=dim, n_classes=4, per_class=8, concentration=5.0, seed=3)
    )
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    rotated = EmbeddingPool(
        dim=dim,
        class_names=base.class_names,
        prototypes=base.unit_prototypes() @ q.T,
        image_ids=base.image_ids,
        labels=base.labels,
        features=base.unit_features() @ q.T,
    )
    rotated.validate()
    t0 = score_pool(base)
    t1 = score_pool(rotated)
    np.testing.assert_allclose(t1.relevance, t0.relevance, atol=1e-9, rtol=0)
    np.testing.assert_allclose(t1.separation, t0.separation, atol=1e-9, rtol=0)
    np.testing.assert_allclose(t1.diversity_static, t0.diversity_static, atol=1e-9, rtol=0)
    np.testing.assert_allclose(t1.margin, t0.margin, atol=1e-9, rtol=0)
    # per-class margin ranking is rotation-invariant
    for c in range(base.n_classes):
        idx = base.class_indices(c)
        assert list(np.argsort(-t0.margin[idx], kind="stable")) == list(
            np.argsort(-t1.margin[idx], kind="stable")
        )


# --- mixed score -----------------------------------------------------------------


def test_mixed_lambda_zero_equals_margin(random_pool):
    table = score_pool(random_pool)
    assert np.array_equal(mixed_score(table, random_pool, 0.0), table.margin)


def test_mixed_zero_variance_class_falls_back_to_margin():
    # class 0: mutually orthogonal members, diversities all exactly pi/2;
    # class 1: an asymmetric triple with genuinely distinct diversities
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 4), e(3, 4)]),
        image_ids=["m0", "m1", "m2", "o0", "o1", "o2"],
        labels=[0, 0, 0, 1, 1, 1],
        features=np.array(
            [e(0, 4), e(1, 4), e(2, 4),
             e(3, 4), unit(0, 0, 0.2, 1), unit(0, 0.7, 0, 1)]
        ),
    )
    table = score_pool(pool)
    mixed = mixed_score(table, pool, 0.2)
    assert np.array_equal(mixed[:3], table.margin[:3])
    assert not np.array_equal(mixed[3:], table.margin[3:])


def test_mixed_hand_computed_zscores():
    # 4 images whose diversities are {0.2, 0.4, 0.6, 0.8}: z is frozen from a
    # hand computation (population std) and cross-checked by the loop oracle.
    class FakeTable:
        pass

    pool = generate_pool(SyntheticSpec(dim=8, n_classes=2, per_class=4, seed=0))
    table = score_pool(pool)
    table.diversity_static = np.array([0.2, 0.4, 0.6, 0.8, 0.5, 0.5, 0.5, 0.5])
    z = np.array([-1.3416407864998738, -0.44721359549995787,
                  0.44721359549995787, 1.341640786499874, 0, 0, 0, 0])
    expected = table.margin + 0.1 * z
    got = mixed_score(table, pool, 0.1)
    np.testing.assert_allclose(got, expected, atol=1e-12, rtol=0)


@pytest.mark.parametrize("lam", [0.0, 0.05, 0.1, 0.2])
def test_mixed_matches_loop_oracle(lam, random_pool):
    table = score_pool(random_pool)
    got = mixed_score(table, random_pool, lam)
    expected = oracle_mixed(random_pool, oracle_scores(random_pool), lam)
    np.testing.assert_allclose(got, expected, atol=1e-12, rtol=0)


def test_mixed_negative_lambda_rejected(random_pool):
    table = score_pool(random_pool)
    with pytest.raises(ValueError, match="lambda"):
        mixed_score(table, random_pool, -0.1)


def test_mixed_singleton_class_rejected():
    pool = make_pool(
        class_names=["c0", "c1"],
        prototypes=np.array([e(0, 3), e(1, 3)]),
        image_ids=["a", "b", "c"],
        labels=[0, 0, 1],
        features=np.array([e(0, 3), unit(1, 0.5, 0), e(1, 3)]),
    )
    table = score_pool(pool)
    with pytest.raises(ValueError, match="single image"):
        mixed_score(table, pool, 0.1)
