import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from topohough.distances import InstabilityWitness, bottleneck, lipschitz_ratio, wasserstein1_points
from topohough.geometry import PointSet


def _diagram(rng, k):
    b = rng.integers(0, 30, k)
    d = b - rng.integers(1, 15, k)
    return np.column_stack([b, d]).astype(float)


def test_w1_single_pair():
    for conv in ("sum", "mean"):
        assert wasserstein1_points([(0, 0)], [(3, 4)], conv) == 5.0


def test_w1_identity_and_pointset():
    pts = np.random.default_rng(0).uniform(0, 255, (20, 2))
    assert wasserstein1_points(PointSet(pts), PointSet(pts[::-1])) == 0.0


def test_w1_mean_is_sum_over_n():
    rng = np.random.default_rng(1)
    a, b = rng.uniform(0, 10, (9, 2)), rng.uniform(0, 10, (9, 2))
    assert wasserstein1_points(a, b, "mean") == pytest.approx(wasserstein1_points(a, b) / 9)


def test_w1_errors():
    with pytest.raises(ValueError):
        wasserstein1_points([(0, 0)], [(0, 0), (1, 1)])
    with pytest.raises(ValueError):
        wasserstein1_points([(0, 0)], [(1, 1)], "median")


@pytest.mark.parametrize("seed", range(50))
def test_w1_matches_permutation_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(0, 50, (7, 2)), rng.uniform(0, 50, (7, 2))
    assert wasserstein1_points(a, b) == pytest.approx(oracles.wasserstein(a, b), rel=1e-12)


def test_bottleneck_to_empty():
    assert bottleneck([(3, 1)], []) == 1.0
    assert bottleneck([], []) == 0.0


def test_bottleneck_identical():
    d = _diagram(np.random.default_rng(3), 8)
    assert bottleneck(d, d) == 0.0
    assert bottleneck(d, d[::-1]) == 0.0


def test_bottleneck_rejects_essential():
    with pytest.raises(ValueError):
        bottleneck([(5, -math.inf)], [(5, 1)])


@pytest.mark.parametrize("seed", range(50))
def test_bottleneck_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    d1 = _diagram(rng, int(rng.integers(0, 7)))
    d2 = _diagram(rng, int(rng.integers(0, 7)))
    assert bottleneck(d1, d2) == oracles.bottleneck(d1, d2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bottleneck_pseudometric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_diagram(rng, int(rng.integers(0, 8))) for _ in range(3))
    ab, ba = bottleneck(a, b), bottleneck(b, a)
    assert ab == ba >= 0
    assert ab <= bottleneck(a, c) + bottleneck(c, b) + 1e-12
    assert bottleneck(a, b) == bottleneck(a[::-1], b[rng.permutation(len(b))])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bottleneck_bounded_by_diagonal_costs(seed):
    # matching everything to the diagonal is always admissible
    rng = np.random.default_rng(seed)
    a, b = _diagram(rng, int(rng.integers(1, 10))), _diagram(rng, int(rng.integers(1, 10)))
    bound = max((a[:, 0] - a[:, 1]).max(), (b[:, 0] - b[:, 1]).max()) / 2
    assert bottleneck(a, b) <= bound


def test_lipschitz_ratio():
    assert lipschitz_ratio(5, 10) == 0.5
    assert lipschitz_ratio(0, 0) == 0
    assert lipschitz_ratio(0, 3) == 0
    with pytest.raises(InstabilityWitness):
        lipschitz_ratio(1.0, 0)
    with pytest.raises(ValueError):
        lipschitz_ratio(-1, 2)
