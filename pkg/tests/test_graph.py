import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import linkmark as lm
from linkmark.graph import (EdgeListParseError, NoNegativesAvailable,
                            SelfLoopError, load_dataset, load_features,
                            save_dataset, save_edge_list)


def write(tmp_path, text, name="g.edges"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadEdgeList:
    def test_two_lines(self, tmp_path):
        g = lm.load_edge_list(write(tmp_path, "0 1\n1 2\n"))
        assert g.num_nodes == 3
        assert g.edge_set() == {(0, 1), (1, 2)}

    def test_undirected_dedup(self, tmp_path):
        g = lm.load_edge_list(write(tmp_path, "0 1\n1 0\n"))
        assert g.num_edges == 1

    def test_self_loop_rejected(self, tmp_path):
        with pytest.raises(SelfLoopError) as exc:
            lm.load_edge_list(write(tmp_path, "0 0\n"))
        assert exc.value.line_no == 1

    def test_parse_error_carries_line_number(self, tmp_path):
        with pytest.raises(EdgeListParseError) as exc:
            lm.load_edge_list(write(tmp_path, "0 1\nnope\n"))
        assert exc.value.line_no == 2

    def test_comments_and_header(self, tmp_path):
        g = lm.load_edge_list(write(tmp_path, "# comment\nN 10\n0 1 # trailing\n"))
        assert g.num_nodes == 10
        assert g.edge_set() == {(0, 1)}

    def test_header_too_small_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            lm.load_edge_list(write(tmp_path, "N 3\n0 5\n"))

    def test_roundtrip(self, tmp_path):
        g = lm.generate_sbm(2, 6, 0.5, 0.1, seed=3)
        path = tmp_path / "rt.edges"
        save_edge_list(g, path)
        g2 = lm.load_edge_list(path)
        assert g2.num_nodes == g.num_nodes and g2.edges == g.edges


def test_load_features(tmp_path):
    path = tmp_path / "f.features"
    path.write_text("1 0.5 -0.25\n0 1.0 2.0\n")
    feats = load_features(path, 2)
    assert np.allclose(feats, [[1.0, 2.0], [0.5, -0.25]])
    with pytest.raises(ValueError):
        load_features(path, 3)


class TestGenerateSbm:
    def test_two_cliques(self):
        g = lm.generate_sbm(2, 5, 1.0, 0.0, seed=1)
        assert g.num_edges == 20
        for u, v in g.edges:
            assert u // 5 == v // 5

    def test_empty(self):
        assert lm.generate_sbm(1, 4, 0.0, 0.0, seed=1).num_edges == 0

    def test_edge_count_within_3_sigma(self):
        # binomial oracle: within pairs 2*C(50,2) at p_in, cross pairs 50*50 at p_out
        within, cross = 2 * (50 * 49 // 2), 50 * 50
        mean = 0.3 * within + 0.01 * cross
        var = within * 0.3 * 0.7 + cross * 0.01 * 0.99
        g = lm.generate_sbm(2, 50, 0.3, 0.01, seed=7)
        assert abs(g.num_edges - mean) <= 3 * np.sqrt(var)

    def test_deterministic(self):
        a = lm.generate_sbm(3, 10, 0.4, 0.05, seed=42)
        b = lm.generate_sbm(3, 10, 0.4, 0.05, seed=42)
        assert a.edges == b.edges

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            lm.generate_sbm(2, 5, 1.5, 0.0, seed=1)


class TestInitFeatures:
    def test_deterministic(self, toy_graph):
        a = lm.init_features(toy_graph, 8, seed=3)
        b = lm.init_features(toy_graph, 8, seed=3)
        assert np.array_equal(a.features, b.features)

    def test_shape_and_range(self):
        g = lm.generate_sbm(1, 10, 0.3, 0.0, seed=2)
        g = lm.init_features(g, 8, seed=4)
        assert g.features.shape == (10, 8)
        assert np.all((g.features > -1) & (g.features < 1))

    def test_seeds_differ(self, toy_graph):
        a = lm.init_features(toy_graph, 8, seed=3)
        b = lm.init_features(toy_graph, 8, seed=4)
        assert not np.array_equal(a.features, b.features)


class TestSplitLinks:
    def test_ten_edge_graph_counts(self):
        g = lm.Graph.from_edges(20, [(i, i + 1) for i in range(10)])
        ds = lm.split_links(g, (0.8, 0.1, 0.1), seed=1)
        for split, expect in (("train", 8), ("valid", 1), ("test", 1)):
            pairs, labels = ds.split_arrays(split)
            assert int(labels.sum()) == expect
            assert int((labels == 0).sum()) == expect

    def test_complete_graph_has_no_negatives(self):
        k5 = lm.Graph.from_edges(5, list(itertools.combinations(range(5), 2)))
        with pytest.raises(NoNegativesAvailable):
            lm.split_links(k5, (0.8, 0.1, 0.1), seed=1)

    def test_positive_negative_disjoint(self, toy_graph, toy_dataset):
        pos = {(p.u, p.v) for p in toy_dataset.pairs if p.label == 1}
        neg = {(p.u, p.v) for p in toy_dataset.pairs if p.label == 0}
        assert pos & neg == set()
        assert pos == toy_graph.edge_set()
        assert all(pair not in toy_graph.edge_set() for pair in neg)

    def test_positives_partition_edges(self, toy_graph, toy_dataset):
        per_split = {}
        for split in ("train", "valid", "test"):
            per_split[split] = {(p.u, p.v) for p in toy_dataset.pairs
                                if p.label == 1 and p.split == split}
        assert per_split["train"] | per_split["valid"] | per_split["test"] == toy_graph.edge_set()
        assert not per_split["train"] & per_split["valid"]
        assert not per_split["train"] & per_split["test"]
        assert not per_split["valid"] & per_split["test"]

    def test_mp_adjacency_symmetric_and_train_only(self, toy_dataset):
        mp = toy_dataset.mp_adjacency
        assert (mp != mp.T).nnz == 0
        hidden = [(p.u, p.v) for p in toy_dataset.pairs
                  if p.label == 1 and p.split != "train"]
        for u, v in hidden:
            assert mp[u, v] == 0 and mp[v, u] == 0

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_negatives_never_edges(self, seed):
        g = lm.generate_sbm(2, 8, 0.5, 0.2, seed=5)
        ds = lm.split_links(g, (0.8, 0.1, 0.1), seed=seed)
        for p in ds.pairs:
            if p.label == 0:
                assert (min(p.u, p.v), max(p.u, p.v)) not in g.edge_set()

    def test_rejection_sampler_on_large_sparse_graph(self):
        # 4000 nodes exceed the enumeration bound, forcing rejection sampling
        edges = [(i, i + 1) for i in range(200)]
        g = lm.Graph.from_edges(4000, edges)
        ds = lm.split_links(g, (0.8, 0.1, 0.1), seed=3)
        negs = {(p.u, p.v) for p in ds.pairs if p.label == 0}
        assert len(negs) == g.num_edges
        assert not negs & g.edge_set()


class TestExtractKhop:
    def path_dataset(self):
        g = lm.Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)],
                                features=np.eye(4))
        ds = lm.split_links(g, (1.0, 0.0, 0.0), seed=0)
        return ds

    def test_path_graph_one_hop(self):
        sg = lm.extract_khop(self.path_dataset(), (1, 2), 1)
        assert sg.node_ids == (0, 1, 2, 3)
        assert set(sg.local_edges) == {(0, 1), (2, 3)}  # anchor edge removed
        assert sg.anchor == (1, 2)

    def test_isolated_pair(self):
        g = lm.Graph.from_edges(6, [(0, 1)], features=np.eye(6))
        ds = lm.split_links(g, (1.0, 0.0, 0.0), seed=0)
        sg = lm.extract_khop(ds, (3, 4), 2)
        assert sg.node_ids == (3, 4)
        assert sg.local_edges == ()

    def test_zero_hops(self):
        sg = lm.extract_khop(self.path_dataset(), (1, 2), 0)
        assert sg.node_ids == (1, 2)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(13)
        g = lm.generate_sbm(2, 10, 0.5, 0.1, seed=21)
        g = lm.init_features(g, 4, seed=22)
        ds = lm.split_links(g, (1.0, 0.0, 0.0), seed=0)
        perm = rng.permutation(g.num_nodes)
        relabeled = lm.Graph.from_edges(
            g.num_nodes, [(perm[u], perm[v]) for u, v in g.edges],
            features=g.features[np.argsort(perm)])
        ds_p = lm.split_links(relabeled, (1.0, 0.0, 0.0), seed=0)
        for u, v in list(g.edges)[:10]:
            sg = lm.extract_khop(ds, (u, v), 1)
            sg_p = lm.extract_khop(ds_p, (perm[u], perm[v]), 1)
            assert sg.num_nodes == sg_p.num_nodes
            # same multiset of node ids after mapping back
            assert sorted(perm[list(sg.node_ids)].tolist()) == sorted(sg_p.node_ids)
            assert len(sg.local_edges) == len(sg_p.local_edges)


def test_dataset_roundtrip(tmp_path, toy_dataset):
    path = tmp_path / "ds.npz"
    save_dataset(toy_dataset, path)
    back = load_dataset(path)
    assert back.pairs == toy_dataset.pairs
    assert (back.mp_adjacency != toy_dataset.mp_adjacency).nnz == 0
    assert np.array_equal(back.features, toy_dataset.features)
