import pytest

from graphfsa import Graph, bfs_distances, center_node, diameter, is_connected
from graphfsa.graph import eccentricities


def test_rejects_self_loop():
    with pytest.raises(ValueError, match="self-loop"):
        Graph(3, ((0, 0),))


def test_rejects_duplicate_edge():
    with pytest.raises(ValueError, match="duplicate"):
        Graph(3, ((0, 1), (1, 0)))


def test_rejects_out_of_range_edge():
    with pytest.raises(ValueError, match="out of range"):
        Graph(2, ((0, 2),))


def test_ports_must_cover_both_endpoints():
    with pytest.raises(ValueError, match="missing port"):
        Graph(2, ((0, 1),), ports=((0, 1, 0),))


def test_ports_must_be_distinct_per_node():
    ports = ((0, 1, 0), (1, 0, 0), (0, 2, 0), (2, 0, 0))
    with pytest.raises(ValueError, match="slot 0 twice"):
        Graph(3, ((0, 1), (0, 2)), ports=ports)


def test_ports_accepts_mapping():
    g = Graph(2, ((0, 1),), ports={(0, 1): 1, (1, 0): 0})
    assert g.port_map[(0, 1)] == 1
    assert g.port_map[(1, 0)] == 0


def test_graph_is_hashable_and_equal_by_value():
    a = Graph(2, ((0, 1),), ports={(0, 1): 1, (1, 0): 0})
    b = Graph(2, ((0, 1),), ports=((0, 1, 1), (1, 0, 0)))
    assert a == b
    assert hash(a) == hash(b)


def test_degrees_and_neighbors():
    g = Graph(4, ((0, 1), (0, 2), (0, 3)))
    assert g.degrees.tolist() == [3, 1, 1, 1]
    assert g.neighbor_lists[0] == (1, 2, 3)
    assert g.neighbor_matrix.shape == (4, 3)
    assert g.neighbor_matrix[1].tolist() == [0, -1, -1]


def test_bfs_diameter_center():
    g = Graph(4, ((0, 1), (1, 2), (2, 3)))
    assert bfs_distances(g, 0).tolist() == [0, 1, 2, 3]
    assert diameter(g) == 3
    assert eccentricities(g).tolist() == [3, 2, 2, 3]
    assert center_node(g) == 1  # lowest id among the two centers
    assert is_connected(g)
    assert not is_connected(Graph(3, ((0, 1),)))


def test_permuted_relabels_consistently():
    g = Graph(3, ((0, 1), (1, 2)), ports={(0, 1): 1, (1, 0): 0, (1, 2): 1, (2, 1): 0})
    p = [2, 0, 1]
    h = g.permuted(p)
    assert set(h.edges) == {(2, 0), (0, 1)}
    assert h.port_map[(2, 0)] == 1
    assert h.port_map[(0, 2)] == 0


def test_slot_matrix():
    g = Graph(3, ((0, 1), (1, 2)), ports={(0, 1): 1, (1, 0): 0, (1, 2): 1, (2, 1): 0})
    mat = g.slot_matrix(2)
    assert mat[0].tolist() == [-1, 1]
    assert mat[1].tolist() == [0, 2]
    assert mat[2].tolist() == [1, -1]
    with pytest.raises(ValueError, match="no port labels"):
        Graph(2, ((0, 1),)).slot_matrix(2)
