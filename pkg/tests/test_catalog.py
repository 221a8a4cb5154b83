import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixsearch.catalog import (
    Catalog,
    CatalogError,
    cluster_reduce,
    cluster_representatives,
    generate_synthetic,
    knn,
    load_catalog,
    save_catalog,
    split,
)


class TestLoad:
    def test_loads_three_item_file(self, catalog_file):
        cat = load_catalog(catalog_file)
        assert (cat.n, cat.d, cat.m) == (3, 2, 1)
        assert cat.attribute_names == ("glossy",)
        assert [it.id for it in cat.items] == [0, 1, 2]

    def test_feature_length_mismatch_names_item(self, tmp_path):
        doc = {"d": 2, "m": 1, "attribute_names": ["a"], "items": [
            {"id": 0, "features": [0.0, 1.0], "attrs": [0.0]},
            {"id": 1, "features": [0.0, 1.0], "attrs": [0.0]},
            {"id": 2, "features": [0.0, 1.0, 2.0], "attrs": [0.0]},
        ]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(CatalogError, match=r"item 2: feature length 3 != 2"):
            load_catalog(path)

    def test_empty_items_rejected(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"d": 1, "m": 1, "attribute_names": ["a"], "items": []}))
        with pytest.raises(CatalogError, match="at least 2 items"):
            load_catalog(path)

    def test_duplicate_ids_rejected(self, tmp_path):
        doc = {"d": 1, "m": 1, "attribute_names": ["a"], "items": [
            {"id": 0, "features": [0.0], "attrs": [0.0]},
            {"id": 0, "features": [1.0], "attrs": [1.0]},
        ]}
        path = tmp_path / "dup.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(CatalogError, match="duplicate id"):
            load_catalog(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "mangled.json"
        path.write_text("{not json")
        with pytest.raises(CatalogError, match="malformed"):
            load_catalog(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CatalogError, match="no such catalog"):
            load_catalog(tmp_path / "absent.json")

    def test_json_round_trip(self, tmp_path, small_catalog):
        path = tmp_path / "cat.json"
        save_catalog(small_catalog, path)
        back = load_catalog(path)
        np.testing.assert_array_equal(back.features, small_catalog.features)
        np.testing.assert_array_equal(back.attrs, small_catalog.attrs)

    def test_csv_round_trip(self, tmp_path, small_catalog):
        path = tmp_path / "cat.csv"
        save_catalog(small_catalog, path)
        back = load_catalog(path)
        np.testing.assert_array_equal(back.features, small_catalog.features)
        np.testing.assert_array_equal(back.attrs, small_catalog.attrs)

    def test_csv_header_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,x0,a0\n0,1.0,2.0\n1,2.0,3.0\n")
        with pytest.raises(CatalogError, match="header"):
            load_catalog(path)


class TestSynthetic:
    def test_deterministic_per_seed(self):
        a = generate_synthetic(100, 8, 4, clusters=5, seed=7)
        b = generate_synthetic(100, 8, 4, clusters=5, seed=7)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.attrs, b.attrs)

    def test_different_seed_differs(self):
        a = generate_synthetic(100, 8, 4, clusters=5, seed=7)
        b = generate_synthetic(100, 8, 4, clusters=5, seed=8)
        assert not np.array_equal(a.features, b.features)

    def test_attr_columns_have_variance(self):
        cat = generate_synthetic(100, 8, 4, clusters=5, seed=7)
        assert (cat.attrs.var(axis=0) > 0).all()

    def test_minimal_catalog(self):
        cat = generate_synthetic(2, 1, 1, clusters=1, seed=0)
        assert (cat.n, cat.d, cat.m) == (2, 1, 1)

    def test_preconditions(self):
        with pytest.raises(CatalogError):
            generate_synthetic(1, 2, 2, clusters=1, seed=0)
        with pytest.raises(CatalogError):
            generate_synthetic(10, 2, 2, clusters=0, seed=0)


class TestClusterReduce:
    def test_k_equals_n_is_identity(self, small_catalog):
        reduced, id_map = cluster_reduce(small_catalog, small_catalog.n, seed=3)
        assert id_map == tuple(range(small_catalog.n))
        np.testing.assert_array_equal(reduced.features, small_catalog.features)
        np.testing.assert_array_equal(reduced.attrs, small_catalog.attrs)

    def test_two_separated_clusters(self):
        # two tight attr clusters around 0 and around 10; brute-force oracle:
        # per group, the member nearest the group mean
        attrs = np.array([[0.1], [0.0], [-0.2], [10.3], [10.0], [9.8]])
        cat = Catalog(features=np.arange(12, dtype=float).reshape(6, 2),
                      attrs=attrs, attribute_names=("a",))
        reduced, id_map = cluster_reduce(cat, 2, seed=0)
        groups = [[0, 1, 2], [3, 4, 5]]
        expected = set()
        for g in groups:
            mean = attrs[g].mean()
            expected.add(g[int(np.argmin([abs(attrs[i, 0] - mean) for i in g]))])
        assert set(id_map) == expected

    def test_k1_representative_is_nearest_global_mean(self, small_catalog):
        reps = cluster_representatives(small_catalog, 1, seed=5)
        mean = small_catalog.attrs.mean(axis=0)
        dists = np.linalg.norm(small_catalog.attrs - mean, axis=1)
        assert reps == (int(np.argmin(dists)),)

    def test_k_greater_than_n_rejected(self, small_catalog):
        with pytest.raises(CatalogError):
            cluster_reduce(small_catalog, small_catalog.n + 1, seed=0)

    def test_output_ids_subset_and_size(self, small_catalog):
        reduced, id_map = cluster_reduce(small_catalog, 10, seed=2)
        assert reduced.n == 10
        assert len(set(id_map)) == 10
        assert set(id_map) <= set(range(small_catalog.n))
        # mapped rows carry the original vectors
        for new_id, old_id in enumerate(id_map):
            np.testing.assert_array_equal(reduced.attrs[new_id], small_catalog.attrs[old_id])

    def test_deterministic(self, small_catalog):
        a = cluster_reduce(small_catalog, 12, seed=9)[1]
        b = cluster_reduce(small_catalog, 12, seed=9)[1]
        assert a == b


class TestSplit:
    def test_sizes_n10(self, small_catalog):
        cat = generate_synthetic(10, 2, 1, clusters=1, seed=4)
        s = split(cat, (0.7, 0.1, 0.2), seed=0)
        assert (len(s.train), len(s.val), len(s.test)) == (7, 1, 2)

    def test_deterministic(self, small_catalog):
        a = split(small_catalog, seed=11)
        b = split(small_catalog, seed=11)
        assert (a.train, a.val, a.test) == (b.train, b.val, b.test)

    def test_bad_ratios(self, small_catalog):
        with pytest.raises(CatalogError):
            split(small_catalog, (0.5, 0.2, 0.2), seed=0)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(2, 300), seed=st.integers(0, 2**31 - 1))
    def test_partition_property(self, n, seed):
        cat = generate_synthetic(n, 2, 1, clusters=1, seed=1)
        s = split(cat, (0.7, 0.1, 0.2), seed=seed)
        ids = sorted(s.train + s.val + s.test)
        assert ids == list(range(n))
        for part, ratio in ((s.train, 0.7), (s.val, 0.1), (s.test, 0.2)):
            assert abs(len(part) - ratio * n) <= 1.0


class TestKnn:
    def test_nearest_trivial(self, tiny_catalog):
        assert knn(tiny_catalog, 0, 1, "nearest") == [1]

    def test_furthest_trivial(self, tiny_catalog):
        assert knn(tiny_catalog, 0, 1, "furthest") == [2]

    def test_matches_brute_force(self):
        cat = generate_synthetic(20, 6, 2, clusters=2, seed=13)
        for anchor in (0, 7, 19):
            dists = {i: float(np.linalg.norm(cat.features[i] - cat.features[anchor]))
                     for i in range(20) if i != anchor}
            by_near = sorted(dists, key=lambda i: (dists[i], i))
            assert knn(cat, anchor, 5, "nearest") == by_near[:5]
            by_far = sorted(dists, key=lambda i: (-dists[i], i))
            assert knn(cat, anchor, 5, "furthest") == by_far[:5]

    def test_disjoint_directions(self, small_catalog):
        near = set(knn(small_catalog, 3, 5, "nearest"))
        far = set(knn(small_catalog, 3, 5, "furthest"))
        assert near.isdisjoint(far)

    def test_errors(self, tiny_catalog):
        with pytest.raises(CatalogError):
            knn(tiny_catalog, 99, 1)
        with pytest.raises(CatalogError):
            knn(tiny_catalog, 0, 3)
