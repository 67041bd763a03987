import os
import tempfile
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.stats import spearmanr

from graph import (Graph, GraphFormatError, GraphKind, adjacency_matrix, degree_histogram, load_edge_list,
                   power_law_digraph, random_digraph, transpose, write_edge_list)

TEST_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'test_utils')
'''test_utils holds tiny edge lists:

two_cycle: 0 <-> 1
path: 0 -> 1
star: 0 -> {1, 2, 3}, with a comment line
duplicates: a repeated edge and a self-loop
malformed: a non-integer id on line 5
empty: comments only
'''


def fixture(name):
    return os.path.join(TEST_DIR, name)


def edge_arrays(max_nodes=12):
    return st.integers(min_value=1, max_value=max_nodes).flatmap(
        lambda n: st.tuples(st.just(n), st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=40)))


class TestLoadEdgeList(unittest.TestCase):
    def test_two_cycle(self):
        g = load_edge_list(fixture('two_cycle.txt'), GraphKind.DIRECTED)
        self.assertEqual((g.n, g.m), (2, 2))
        self.assertEqual(g.out_neighbors(0).tolist(), [1])
        self.assertEqual(g.out_neighbors(1).tolist(), [0])

    def test_undirected_remap(self):
        g = load_edge_list(fixture('pair_undirected.txt'), GraphKind.UNDIRECTED)
        self.assertEqual((g.n, g.m), (2, 2))
        self.assertEqual(g.edges().tolist(), [[0, 1], [1, 0]])
        self.assertEqual(g.node_ids.tolist(), [5, 9])

    def test_duplicates_and_self_loops_dropped(self):
        g = load_edge_list(fixture('duplicates.txt'), GraphKind.DIRECTED)
        self.assertEqual((g.n, g.m), (2, 1))

    def test_comments_skipped(self):
        g = load_edge_list(fixture('star.txt'), GraphKind.DIRECTED)
        self.assertEqual((g.n, g.m), (4, 3))

    def test_sparse_ids_kept_for_output(self):
        g = load_edge_list(fixture('sparse_ids.txt'), GraphKind.DIRECTED)
        self.assertEqual(g.node_ids.tolist(), [10, 20, 30, 40])
        self.assertEqual(g.index_of(30), 2)
        with self.assertRaises(IndexError):
            g.index_of(25)

    def test_malformed_line_number(self):
        with self.assertRaises(GraphFormatError) as cm:
            load_edge_list(fixture('malformed.txt'), GraphKind.DIRECTED)
        self.assertEqual(cm.exception.line_number, 5)

    def test_empty_file_error(self):
        with self.assertRaises(GraphFormatError):
            load_edge_list(fixture('empty.txt'), GraphKind.DIRECTED)

    def test_write_then_load(self):
        g = load_edge_list(fixture('sparse_ids.txt'), GraphKind.DIRECTED)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'out.txt')
            write_edge_list(g, path)
            self.assertEqual(load_edge_list(path, GraphKind.DIRECTED), g)


class TestGraph(unittest.TestCase):
    def test_endpoint_out_of_range(self):
        with self.assertRaises(ValueError):
            Graph.from_edges(2, np.array([[0, 2]]))

    def test_isolated_nodes_allowed(self):
        g = Graph.from_edges(3, np.zeros((0, 2)))
        self.assertEqual((g.n, g.m), (3, 0))
        self.assertFalse(g.has_edges([0], [1])[0])

    def test_has_edges(self):
        g = Graph.from_edges(3, np.array([[0, 1], [1, 2]]))
        self.assertEqual(g.has_edges([0, 1, 2, 1], [1, 2, 0, 0]).tolist(), [True, True, False, False])

    def test_undirected_stores_both_arcs(self):
        g = Graph.from_edges(3, np.array([[0, 1], [1, 2]]), GraphKind.UNDIRECTED)
        self.assertEqual(g.m, 4)
        self.assertTrue(g.has_edges([1, 2], [0, 1]).all())

    def test_adjacency_matrix(self):
        g = Graph.from_edges(3, np.array([[0, 1], [2, 0]]))
        np.testing.assert_array_equal(adjacency_matrix(g).toarray(),
                                      [[0, 1, 0], [0, 0, 0], [1, 0, 0]])

    @settings(max_examples=50, deadline=None)
    @given(edge_arrays())
    def test_adjacency_invariants(self, case):
        n, pairs = case
        g = Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
        g.validate()
        self.assertEqual(g.out_degree.sum(), g.m)
        self.assertEqual(g.in_degree.sum(), g.m)
        expected = {(u, v) for u, v in pairs if u != v}
        self.assertEqual(g.m, len(expected))
        self.assertEqual({tuple(e) for e in g.edges().tolist()}, expected)


class TestTranspose(unittest.TestCase):
    def test_two_cycle_is_self_transpose(self):
        g = Graph.from_edges(2, np.array([[0, 1], [1, 0]]))
        self.assertEqual(transpose(g), g)

    def test_path_reversed(self):
        g = Graph.from_edges(2, np.array([[0, 1]]))
        self.assertEqual(transpose(g).edges().tolist(), [[1, 0]])

    def test_star(self):
        g = load_edge_list(fixture('star.txt'), GraphKind.DIRECTED)
        t = transpose(g)
        self.assertEqual(t.out_degree[0], 0)
        self.assertEqual(t.in_degree[0], 3)
        self.assertEqual(t.out_degree[1:].tolist(), [1, 1, 1])

    @settings(max_examples=50, deadline=None)
    @given(edge_arrays())
    def test_involution(self, case):
        n, pairs = case
        g = Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
        t = transpose(g)
        t.validate()
        self.assertEqual(transpose(t), g)


class TestDegreeHistogram(unittest.TestCase):
    def test_two_cycle(self):
        g = Graph.from_edges(2, np.array([[0, 1], [1, 0]]))
        self.assertEqual(degree_histogram(g, 'out'), {1: 2})

    def test_star(self):
        g = load_edge_list(fixture('star.txt'), GraphKind.DIRECTED)
        self.assertEqual(degree_histogram(g, 'out'), {0: 3, 3: 1})

    def test_invalid_direction(self):
        g = Graph.from_edges(2, np.array([[0, 1]]))
        with self.assertRaises(ValueError):
            degree_histogram(g, 'both')

    @settings(max_examples=50, deadline=None)
    @given(edge_arrays())
    def test_transpose_swaps_directions(self, case):
        n, pairs = case
        g = Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
        self.assertEqual(degree_histogram(g, 'out'), degree_histogram(transpose(g), 'in'))
        self.assertEqual(sum(degree_histogram(g, 'in').values()), n)


class TestGenerators(unittest.TestCase):
    def test_random_digraph_is_seeded(self):
        self.assertEqual(random_digraph(30, 0.1, seed=3), random_digraph(30, 0.1, seed=3))

    def test_random_undirected_is_symmetric(self):
        g = random_digraph(30, 0.2, seed=1, kind=GraphKind.UNDIRECTED)
        self.assertEqual(transpose(g).edges().tolist(), g.edges().tolist())

    def test_power_law_degrees_are_skewed(self):
        g = power_law_digraph(500, seed=0)
        self.assertGreater(g.out_degree.max(), 10 * np.median(g.out_degree))

    def test_power_law_degree_correlation(self):
        correlated = power_law_digraph(1000, seed=2)
        independent = power_law_digraph(1000, seed=2, correlated=False)
        self.assertGreater(spearmanr(correlated.out_degree, correlated.in_degree)[0], 0.5)
        self.assertLess(abs(spearmanr(independent.out_degree, independent.in_degree)[0]), 0.3)


if __name__ == '__main__':
    unittest.main()
