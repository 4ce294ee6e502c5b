import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contrailscope.errors import EmptySet, SchemaMismatch, TooFewMembers
from contrailscope.similarity import (
    NeighborIndex,
    ParameterVector,
    ShapeFeatureVector,
    gower_distance,
    gower_partials,
    gower_similarity,
    hausdorff_distance,
    knn_index,
    standardize_features,
)

from helpers import brute_hausdorff


def vec(run_id, categorical=None, numerical=None, ranges=None):
    return ParameterVector(run_id=run_id, categorical=categorical or {},
                           numerical=numerical or {}, ranges=ranges or {})


class TestGower:
    def test_identical_members_distance_zero(self):
        a = vec("A", {"engine": "two-stream"}, {"t": 230.0}, {"t": (200.0, 300.0)})
        b = vec("B", {"engine": "two-stream"}, {"t": 230.0}, {"t": (200.0, 300.0)})
        assert gower_distance(a, b) == 0.0

    def test_hand_computed_example(self):
        # categorical differs (P=0); numeric 220 vs 270 over range 100 (P=0.5)
        # similarity = (0 + 0.5)/2 = 0.25; distance = 0.75
        r = {"t": (200.0, 300.0)}
        a = vec("A", {"engine": "two-stream"}, {"t": 220.0}, r)
        b = vec("B", {"engine": "single-stream"}, {"t": 270.0}, r)
        assert gower_similarity(a, b) == pytest.approx(0.25, abs=1e-12)
        assert gower_distance(a, b) == pytest.approx(0.75, abs=1e-12)

    def test_numeric_at_range_endpoints_contributes_zero(self):
        r = {"t": (200.0, 300.0)}
        a = vec("A", numerical={"t": 200.0}, ranges=r)
        b = vec("B", numerical={"t": 300.0}, ranges=r)
        partials, _, _ = gower_partials(a, b)
        assert partials["t"] == 0.0
        assert gower_distance(a, b) == 1.0

    def test_zero_range_attribute_recorded_as_full_similarity(self):
        r = {"t": (230.0, 230.0)}
        a = vec("A", numerical={"t": 230.0}, ranges=r)
        b = vec("B", numerical={"t": 230.0}, ranges=r)
        partials, zero_range, _ = gower_partials(a, b)
        assert partials["t"] == 1.0
        assert zero_range == ["t"]

    def test_schema_mismatch_strict(self):
        a = vec("A", {"engine": "x"})
        b = vec("B", {"grid": "y"})
        with pytest.raises(SchemaMismatch):
            gower_distance(a, b)

    def test_partial_mode_adjusts_n(self):
        a = vec("A", {"engine": "x", "extra": "1"})
        b = vec("B", {"engine": "x"})
        partials, _, excluded = gower_partials(a, b, strict=False)
        assert list(partials) == ["engine"]
        assert excluded == ["extra"]
        assert gower_distance(a, b, strict=False) == 0.0

    @given(st.lists(st.tuples(st.booleans(), st.floats(0, 1), st.floats(0, 1)),
                    min_size=1, max_size=8))
    @settings(max_examples=200, deadline=None)
    def test_symmetric_bounded_zero_iff_equal(self, attrs):
        cat_a, cat_b, num_a, num_b = {}, {}, {}, {}
        ranges = {}
        for i, (is_cat, va, vb) in enumerate(attrs):
            name = f"a{i}"
            if is_cat:
                cat_a[name] = f"v{va < 0.5}"
                cat_b[name] = f"v{vb < 0.5}"
            else:
                num_a[name], num_b[name] = va, vb
                ranges[name] = (0.0, 1.0)
        x = vec("A", cat_a, num_a, ranges)
        y = vec("B", cat_b, num_b, ranges)
        d_xy = gower_distance(x, y)
        d_yx = gower_distance(y, x)
        assert d_xy == pytest.approx(d_yx, abs=1e-12)
        assert -1e-12 <= d_xy <= 1.0 + 1e-12
        if cat_a == cat_b and num_a == num_b:
            assert d_xy == pytest.approx(0.0, abs=1e-12)
        elif d_xy == 0.0:
            # differences below one ulp of the partial similarity collapse to 0
            assert cat_a == cat_b
            assert all(abs(num_a[k] - num_b[k]) < 1e-12 for k in num_a)

    def test_affine_rescaling_invariance(self, rng):
        names = [f"n{i}" for i in range(5)]
        vals = rng.uniform(10, 20, size=(2, 5))
        ranges = {n: (5.0, 25.0) for n in names}
        a = vec("A", numerical=dict(zip(names, vals[0])), ranges=ranges)
        b = vec("B", numerical=dict(zip(names, vals[1])), ranges=ranges)
        base = gower_distance(a, b)
        scale, shift = 3.5, -40.0
        ranges2 = {n: (5.0 * scale + shift, 25.0 * scale + shift) for n in names}
        a2 = vec("A", numerical={n: v * scale + shift for n, v in a.numerical.items()}, ranges=ranges2)
        b2 = vec("B", numerical={n: v * scale + shift for n, v in b.numerical.items()}, ranges=ranges2)
        assert gower_distance(a2, b2) == pytest.approx(base, abs=1e-12)

    def test_thousand_random_pairs_properties(self, rng):
        names = [f"n{i}" for i in range(4)]
        ranges = {n: (0.0, 1.0) for n in names}
        cats = ["red", "green", "blue"]
        for _ in range(1000):
            def rand_vec(rid):
                return vec(rid,
                           {"c": cats[rng.integers(3)]},
                           {n: float(rng.uniform(0, 1)) for n in names},
                           ranges)
            a, b = rand_vec("A"), rand_vec("B")
            d = gower_distance(a, b)
            assert 0.0 - 1e-12 <= d <= 1.0 + 1e-12
            assert d == pytest.approx(gower_distance(b, a), abs=1e-12)


class TestHausdorff:
    def test_point_pair(self):
        assert hausdorff_distance([(0, 0)], [(3, 4)]) == 5.0

    def test_identity(self, rng):
        pts = rng.normal(0, 1, size=(50, 2))
        assert hausdorff_distance(pts, pts) == 0.0

    def test_matches_brute_force_exactly_200pts(self, rng):
        a = rng.normal(0, 1, size=(200, 2))
        b = rng.normal(0.5, 1.2, size=(200, 2))
        assert hausdorff_distance(a, b) == brute_hausdorff(a, b)

    def test_symmetry_and_triangle_inequality(self, rng):
        a = rng.normal(0, 1, size=(40, 3))
        b = rng.normal(1, 1, size=(35, 3))
        c = rng.normal(-1, 2, size=(30, 3))
        dab = hausdorff_distance(a, b)
        assert dab == hausdorff_distance(b, a)
        assert dab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12

    def test_empty_set_rejected(self):
        with pytest.raises(EmptySet):
            hausdorff_distance(np.empty((0, 2)), [(0, 0)])


class TestKnnIndex:
    def _three_members(self):
        # pairwise Gower distances {AB: 0.1, AC: 0.9, BC: 0.5} via a single
        # numeric attribute with range (0, 1): d(x, y) = |x - y|
        r = {"v": (0.0, 1.0)}
        return [
            vec("A", numerical={"v": 0.0}, ranges=r),
            vec("B", numerical={"v": 0.1}, ranges=r),
            vec("C", numerical={"v": 0.9}, ranges=r),
        ]

    def test_pairwise_table_ordering(self):
        idx = knn_index(self._three_members(), mode="parameters", k=5)
        assert [n for n, _ in idx.neighbors["A"]] == ["B", "C"]
        assert [n for n, _ in idx.neighbors["B"]] == ["A", "C"]
        assert [n for n, _ in idx.neighbors["C"]] == ["B", "A"]
        assert idx.neighbors["A"][0][1] == pytest.approx(0.1, abs=1e-12)

    def test_duplicate_vectors_rank_first_with_zero_distance(self):
        r = {"v": (0.0, 1.0)}
        vecs = [vec("A", numerical={"v": 0.5}, ranges=r),
                vec("B", numerical={"v": 0.5}, ranges=r),
                vec("C", numerical={"v": 0.9}, ranges=r)]
        idx = knn_index(vecs, mode="parameters")
        assert idx.neighbors["A"][0] == ("B", 0.0)

    def test_ties_broken_lexicographically(self):
        r = {"v": (0.0, 1.0)}
        vecs = [vec("M", numerical={"v": 0.5}, ranges=r),
                vec("Z", numerical={"v": 0.6}, ranges=r),
                vec("B", numerical={"v": 0.4}, ranges=r)]
        idx = knn_index(vecs, mode="parameters")
        assert [n for n, _ in idx.neighbors["M"]] == ["B", "Z"]  # equal distance 0.1

    def test_neighbor_lists_exclude_self_and_cap_at_k(self):
        r = {"v": (0.0, 1.0)}
        vecs = [vec(f"R{i}", numerical={"v": i / 10}, ranges=r) for i in range(8)]
        idx = knn_index(vecs, mode="parameters", k=5)
        for rid, lst in idx.neighbors.items():
            assert len(lst) == 5
            assert rid not in [n for n, _ in lst]
            dists = [d for _, d in lst]
            assert dists == sorted(dists)

    def test_permutation_invariance(self, rng):
        r = {"v": (0.0, 1.0)}
        vecs = [vec(f"R{i}", numerical={"v": float(rng.uniform())}, ranges=r) for i in range(10)]
        idx1 = knn_index(vecs, mode="parameters")
        rng.shuffle(vecs)
        idx2 = knn_index(vecs, mode="parameters")
        assert idx1.neighbors == idx2.neighbors

    def test_too_few_members(self):
        with pytest.raises(TooFewMembers):
            knn_index([vec("A")], mode="parameters")

    def test_shape_mode_standardizes(self):
        vecs = [
            ShapeFeatureVector("A", {"area": 1.0, "length": 10.0, "height": 1.0, "slope": 0.0,
                                     "total_particles": 100.0, "total_mass": 1e-12,
                                     "mean_temperature": 230.0}),
            ShapeFeatureVector("B", {"area": 1.1, "length": 10.5, "height": 1.1, "slope": 0.0,
                                     "total_particles": 110.0, "total_mass": 1.1e-12,
                                     "mean_temperature": 231.0}),
            ShapeFeatureVector("C", {"area": 9.0, "length": 20.0, "height": 5.0, "slope": 0.0,
                                     "total_particles": 900.0, "total_mass": 9e-12,
                                     "mean_temperature": 260.0}),
        ]
        idx = knn_index(vecs, mode="shape")
        assert idx.neighbors["A"][0][0] == "B"
        assert "slope" in idx.dropped_features  # zero variance

    def test_hausdorff_mode(self, rng):
        sets = [("A", rng.normal(0, 1, size=(30, 2))),
                ("B", rng.normal(0, 1, size=(30, 2)) + 0.1),
                ("C", rng.normal(20, 1, size=(30, 2)))]
        idx = knn_index(sets, mode="hausdorff")
        assert idx.neighbors["A"][0][0] == "B"

    def test_planted_families_in_feature_space(self, rng):
        vecs = []
        for fam, base in (("N", 0.0), ("W", 50.0)):
            for i in range(5):
                vecs.append(ShapeFeatureVector(f"{fam}{i}", {
                    "area": base + rng.uniform(0, 1), "length": base + rng.uniform(0, 1),
                    "height": base + rng.uniform(0, 1), "slope": rng.uniform(0, 0.1),
                    "total_particles": base * 10 + rng.uniform(0, 5),
                    "total_mass": (base + 1) * 1e-13, "mean_temperature": 230 + base / 10,
                }))
        idx = knn_index(vecs, mode="shape", k=4)
        for rid, lst in idx.neighbors.items():
            fam = rid[0]
            assert all(n[0] == fam for n, _ in lst)


def test_standardize_drops_zero_variance():
    vecs = [ShapeFeatureVector("A", {n: 1.0 for n in
            ("area", "length", "height", "slope", "total_particles", "total_mass", "mean_temperature")}),
            ShapeFeatureVector("B", {**{n: 1.0 for n in
            ("area", "length", "height", "slope", "total_particles", "total_mass", "mean_temperature")},
            "area": 2.0})]
    z, kept, dropped = standardize_features(vecs)
    assert kept == ["area"]
    assert len(dropped) == 6
