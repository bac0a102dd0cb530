import numpy as np
import pytest

from mlcommunity.graph import (
    InputDataError,
    MultiLayerGraph,
    Partition,
    PreconditionError,
    aggregate_graph,
    apply_move,
    init_stats,
    load_multilayer_edgelist,
    load_layer_files,
    load_partition,
    node_profile,
    write_multilayer_edgelist,
    write_partition,
)


@pytest.fixture
def two_layer():
    """Two layers on four nodes; the fixture most tests reason about.

    Layer one: edges (0,1), (2,3), (0,2).  Layer two: edges (0,1), (2,3).
    """
    l1 = np.zeros((4, 4))
    l2 = np.zeros((4, 4))
    for i, j in [(0, 1), (2, 3), (0, 2)]:
        l1[i, j] = l1[j, i] = 1.0
    for i, j in [(0, 1), (2, 3)]:
        l2[i, j] = l2[j, i] = 1.0
    return MultiLayerGraph.from_dense([l1, l2])


def test_basic_shape_and_totals(two_layer):
    g = two_layer
    assert g.n_nodes == 4
    assert g.n_layers == 2
    assert g.layer_totals.tolist() == [6.0, 4.0]
    assert g.grand_total == 10.0
    assert g.degrees.tolist() == [[2, 1, 2, 1], [1, 1, 1, 1]]
    assert g.total_degrees().tolist() == [3, 2, 3, 2]


def test_self_loop_counts_twice_in_degree():
    a = np.array([[1.0, 2.0], [2.0, 0.0]])
    g = MultiLayerGraph.from_dense([a])
    # loop weight 1 contributes 2 to the degree of node 0
    assert g.degrees.tolist() == [[4.0, 2.0]]
    assert g.layer_totals.tolist() == [6.0]
    # round-trips back to the conventional form
    np.testing.assert_allclose(g.to_dense(0), a)


def test_asymmetric_input_rejected():
    a = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(InputDataError):
        MultiLayerGraph.from_dense([a])


def test_negative_weight_rejected():
    a = np.array([[0.0, -1.0], [-1.0, 0.0]])
    with pytest.raises(InputDataError):
        MultiLayerGraph.from_dense([a])


def test_mismatched_layer_shapes_rejected():
    with pytest.raises(InputDataError):
        MultiLayerGraph.from_dense([np.zeros((2, 2)), np.zeros((3, 3))])


def test_aggregate_sums_layers(two_layer):
    agg = two_layer.aggregate()
    assert agg.n_layers == 1
    assert agg.layer_totals.tolist() == [10.0]
    assert aggregate_graph(two_layer).layer_totals.tolist() == [10.0]
    expect = two_layer.to_dense(0) + two_layer.to_dense(1)
    np.testing.assert_allclose(agg.to_dense(0), expect)


def test_restrict_to_cross_layer_connected():
    l1 = np.zeros((5, 5))
    l2 = np.zeros((5, 5))
    l1[0, 1] = l1[1, 0] = 1.0
    l1[2, 3] = l1[3, 2] = 1.0
    l2[0, 1] = l2[1, 0] = 1.0
    l2[3, 4] = l2[4, 3] = 1.0
    g = MultiLayerGraph.from_dense([l1, l2])
    # node 2 has no layer-2 edges, node 4 none in layer 1; dropping 4
    # isolates 3 in layer 2, so only 0 and 1 survive
    sub, removed = g.restrict_to_cross_layer_connected()
    assert sub.n_nodes == 2
    assert list(sub.node_ids) == ["0", "1"]
    assert sorted(removed) == ["2", "3", "4"]


def test_restrict_all_gone_raises():
    l1 = np.zeros((2, 2))
    l2 = np.zeros((2, 2))
    l1[0, 1] = l1[1, 0] = 1.0
    g = MultiLayerGraph.from_dense([l1, l2])
    with pytest.raises(PreconditionError):
        g.restrict_to_cross_layer_connected()


class TestPartition:
    def test_labels_validated(self):
        with pytest.raises(InputDataError):
            Partition(np.array([0, 1]), 2)
        with pytest.raises(InputDataError):
            Partition(np.array([1, 3]), 2)

    def test_compact_renumbers_by_first_appearance(self):
        p = Partition.from_labels([3, 3, 1, 5]).compact()
        assert p.labels.tolist() == [1, 1, 2, 3]
        assert p.k == 3

    def test_community_sizes(self):
        p = Partition.from_labels([1, 1, 2, 2, 2])
        assert p.community_sizes().tolist() == [2, 3]

    def test_z0_is_zero_based(self):
        p = Partition.from_labels([2, 1])
        assert p.z0().tolist() == [1, 0]


def test_init_stats_matches_oracle(two_layer):
    from oracles import e_tables

    part = Partition.from_labels([1, 1, 2, 2])
    stats = init_stats(two_layer, part)
    e_ql, e_q = e_tables(two_layer, part.labels)
    np.testing.assert_allclose(stats.e_ql, e_ql)
    np.testing.assert_allclose(stats.e_q, e_q)
    # frozen values for the fixture
    assert stats.e_ql[0].tolist() == [[2.0, 1.0], [1.0, 2.0]]
    assert stats.e_ql[1].tolist() == [[2.0, 0.0], [0.0, 2.0]]
    assert stats.e_q.tolist() == [[3.0, 3.0], [2.0, 2.0]]


def test_node_profile_excludes_self_loop():
    a = np.array(
        [
            [1.0, 2.0, 0.0],
            [2.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
        ]
    )
    g = MultiLayerGraph.from_dense([a])
    labels0 = np.array([0, 1, 1])
    w, kvec, loop = node_profile(g, labels0, 0, 2)
    assert w.tolist() == [[0.0, 2.0]]
    # degree includes the loop twice; w does not include it at all
    assert kvec.tolist() == [4.0]
    assert loop.tolist() == [2.0]


def test_apply_move_updates_tables(two_layer):
    part = Partition.from_labels([1, 1, 2, 2])
    stats = init_stats(two_layer, part)
    apply_move(stats, 1, 1, 2)
    # node 1 now sits with {2, 3}; layer-1 weight between the groups is 2
    assert stats.labels.tolist() == [1, 2, 2, 2]
    assert stats.e_ql[0].tolist() == [[0.0, 2.0], [2.0, 2.0]]
    assert stats.e_ql[1].tolist() == [[0.0, 1.0], [1.0, 2.0]]
    assert stats.e_q.tolist() == [[2.0, 4.0], [1.0, 3.0]]
    fresh = init_stats(two_layer, Partition.from_labels([1, 2, 2, 2], 2))
    np.testing.assert_allclose(stats.e_ql, fresh.e_ql)


def test_apply_move_wrong_source_rejected(two_layer):
    stats = init_stats(two_layer, Partition.from_labels([1, 1, 2, 2]))
    with pytest.raises(PreconditionError):
        apply_move(stats, 1, 2, 1)


def test_apply_move_randomized_consistency():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(4, 9))
        m = int(rng.integers(1, 4))
        k = int(rng.integers(2, 4))
        mats = []
        for _ in range(m):
            a = np.triu(rng.integers(0, 3, size=(n, n)).astype(float), 1)
            a = a + a.T
            a[np.arange(n), np.arange(n)] = rng.integers(0, 2, size=n)
            if a.sum() == 0:
                a[0, 1] = a[1, 0] = 1.0
            mats.append(a)
        g = MultiLayerGraph.from_dense(mats)
        labels = rng.integers(1, k + 1, size=n)
        labels[:k] = np.arange(1, k + 1)
        stats = init_stats(g, Partition.from_labels(labels, k))
        node = int(rng.integers(0, n))
        src = int(labels[node])
        dst = int(rng.choice([c for c in range(1, k + 1) if c != src]))
        apply_move(stats, node, src, dst)
        labels[node] = dst
        fresh = init_stats(g, Partition.from_labels(labels, k))
        np.testing.assert_allclose(stats.e_ql, fresh.e_ql, atol=1e-9)
        np.testing.assert_allclose(stats.e_q, fresh.e_q, atol=1e-9)


# -- file I/O --------------------------------------------------------------


def test_edgelist_round_trip(tmp_path, two_layer):
    path = tmp_path / "net.edges"
    write_multilayer_edgelist(two_layer, path)
    back = load_multilayer_edgelist(path)
    assert back.n_nodes == two_layer.n_nodes
    np.testing.assert_allclose(back.degrees, two_layer.degrees)
    np.testing.assert_allclose(back.layer_totals, two_layer.layer_totals)
    for m in range(2):
        np.testing.assert_allclose(back.to_dense(m), two_layer.to_dense(m))


def test_edgelist_parses_comments_and_weights(tmp_path):
    path = tmp_path / "net.edges"
    path.write_text("# comment line\nl1 a b 2.5\nl1 b c\nl2 c a 1\n")
    g = load_multilayer_edgelist(path)
    assert g.n_nodes == 3
    assert g.n_layers == 2
    assert list(g.layer_names) == ["l1", "l2"]
    # default weight is 1
    assert g.layer_totals.tolist() == [7.0, 2.0]


def test_edgelist_bad_weight_reports_line(tmp_path):
    path = tmp_path / "net.edges"
    path.write_text("l1 a b 1\nl1 a c oops\n")
    with pytest.raises(InputDataError, match="line 2"):
        load_multilayer_edgelist(path)


def test_edgelist_negative_weight_rejected(tmp_path):
    path = tmp_path / "net.edges"
    path.write_text("l1 a b -2\n")
    with pytest.raises(InputDataError):
        load_multilayer_edgelist(path)


def test_dedup_policies(tmp_path):
    path = tmp_path / "net.edges"
    path.write_text("l1 a b 3\nl1 b a 1\n")
    half = load_multilayer_edgelist(path, dedup="sum-halved")
    assert half.layer_totals.tolist() == [4.0]
    full = load_multilayer_edgelist(path, dedup="sum")
    assert full.layer_totals.tolist() == [8.0]
    mx = load_multilayer_edgelist(path, dedup="max")
    assert mx.layer_totals.tolist() == [6.0]


def test_dedup_sum_halved_one_direction_only(tmp_path):
    # a single stated direction keeps its full weight
    path = tmp_path / "net.edges"
    path.write_text("l1 a b 3\n")
    g = load_multilayer_edgelist(path, dedup="sum-halved")
    assert g.layer_totals.tolist() == [6.0]


def test_load_layer_files(tmp_path):
    (tmp_path / "alpha.edges").write_text("a b 1\n")
    (tmp_path / "beta.edges").write_text("b c 2\n")
    g = load_layer_files([tmp_path / "alpha.edges", tmp_path / "beta.edges"])
    assert g.n_layers == 2
    assert list(g.layer_names) == ["alpha", "beta"]
    assert g.n_nodes == 3


def test_partition_round_trip(tmp_path, two_layer):
    part = Partition.from_labels([1, 1, 2, 2])
    path = tmp_path / "labels.tsv"
    write_partition(part, two_layer.node_ids, path)
    back = load_partition(path, two_layer.node_ids)
    assert back.labels.tolist() == part.labels.tolist()


def test_partition_missing_node_rejected(tmp_path, two_layer):
    path = tmp_path / "labels.tsv"
    path.write_text("0\t1\n1\t1\n2\t2\n")
    with pytest.raises(InputDataError):
        load_partition(path, two_layer.node_ids)
