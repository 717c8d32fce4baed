from itertools import combinations

import numpy as np
import pytest

from rieszgas import PointConfiguration, RieszError, build_cell_index


def brute_pairs(pts, r):
    return {
        (i, j)
        for i, j in combinations(range(len(pts)), 2)
        if np.linalg.norm(pts[i] - pts[j]) < r
    }


def test_cells_assigned_by_floor_division():
    c = PointConfiguration([0.1, 0.9])
    idx = build_cell_index(c, 0.5)
    assert idx.cell_of([0.1]) == (0,)
    assert idx.cell_of([0.9]) == (1,)
    assert set(idx.cells.keys()) == {(0,), (1,)}


def test_every_point_in_exactly_one_cell():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(40, 2))
    idx = build_cell_index(PointConfiguration(pts), 0.3)
    seen = np.concatenate(list(idx.cells.values()))
    assert sorted(seen) == list(range(40))


def test_neighbor_candidates_superset_then_filtered():
    c = PointConfiguration([0.1, 0.9])
    idx = build_cell_index(c, 0.5)
    cand = idx.neighbor_candidates([0.1], 0.5)
    # 0.9 lies in an adjacent cell, so it is a candidate...
    assert 1 in cand
    # ...but the distance filter removes it (0.8 > 0.5)
    pts = c.points[cand]
    within = cand[np.linalg.norm(pts - np.array([0.1]), axis=1) < 0.5]
    assert list(within) == [0]


def test_radius_above_cell_size_rejected():
    idx = build_cell_index(PointConfiguration([0.0, 1.0]), 0.5)
    with pytest.raises(RieszError):
        idx.neighbor_candidates([0.0], 0.8)
    with pytest.raises(RieszError):
        idx.pairs_within(0.8)


def test_bad_cell_size_rejected():
    with pytest.raises(RieszError):
        build_cell_index(PointConfiguration([0.0]), 0.0)


def test_pair_enumeration_matches_brute_force_100_points():
    rng = np.random.default_rng(7)
    pts = rng.random((100, 2))
    idx = build_cell_index(PointConfiguration(pts), 0.15)
    assert idx.pairs_within(0.15) == brute_pairs(pts, 0.15)


def test_completeness_property_1000_random_cases():
    rng = np.random.default_rng(42)
    for case in range(1000):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(2, 14))
        scale = float(rng.uniform(0.5, 3.0))
        pts = rng.uniform(-scale, scale, size=(n, d))
        cell = float(rng.uniform(0.2, 1.5))
        r = float(rng.uniform(0.05, 1.0)) * cell
        idx = build_cell_index(PointConfiguration(pts), cell)
        assert idx.pairs_within(r) == brute_pairs(pts, r), f"case {case}"


def test_neighbor_query_is_superset_on_random_configs():
    rng = np.random.default_rng(9)
    for _ in range(200):
        d = int(rng.integers(1, 3))
        pts = rng.uniform(0, 2, size=(25, d))
        idx = build_cell_index(PointConfiguration(pts), 0.4)
        q = rng.uniform(0, 2, size=d)
        cand = set(idx.neighbor_candidates(q, 0.4).tolist())
        true = {
            int(i) for i in range(25) if np.linalg.norm(pts[i] - q) < 0.4
        }
        assert true <= cand
