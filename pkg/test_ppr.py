import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from graph import Graph, GraphKind, power_law_digraph, random_digraph
from ppr import (PprParams, backward_push, exact_ppr_column, exact_ppr_matrix, exact_ppr_row, global_pagerank,
                 push_all_targets)

TWO_CYCLE = Graph.from_edges(2, np.array([[0, 1], [1, 0]]))
PATH = Graph.from_edges(2, np.array([[0, 1]]))
STAR = Graph.from_edges(3, np.array([[0, 1], [0, 2]]))


class TestBackwardPush(unittest.TestCase):
    def test_isolated_node(self):
        g = Graph.from_edges(1, np.zeros((0, 2)))
        result = backward_push(g, 0, PprParams(0.5, 0.1))
        self.assertEqual(result.reserves, {0: 0.5})
        self.assertEqual(result.residues, {})
        self.assertEqual(result.pushes, 1)

    def test_two_cycle(self):
        result = backward_push(TWO_CYCLE, 1, PprParams(0.5, 1e-9))
        for u, exact in ((0, 1 / 3), (1, 2 / 3)):
            self.assertLessEqual(result.reserve_of(u), exact + 1e-15)
            self.assertGreaterEqual(result.reserve_of(u), exact - 1e-9)

    def test_star(self):
        result = backward_push(STAR, 1, PprParams(0.5, 1e-9))
        self.assertAlmostEqual(result.reserve_of(0), 0.125, delta=1e-9)
        self.assertAlmostEqual(result.reserve_of(1), 0.5, delta=1e-9)
        self.assertEqual(result.reserve_of(2), 0.0)

    def test_residues_below_threshold(self):
        g = random_digraph(60, 0.08, seed=4)
        p = PprParams(0.2, 1e-3)
        result = backward_push(g, 5, p)
        self.assertTrue(np.all(result.residue_values <= p.r_max))
        self.assertTrue(np.all(result.reserve_values > 0))
        self.assertTrue(np.all(np.diff(result.reserve_nodes) > 0))

    def test_push_budget(self):
        g = random_digraph(60, 0.3, seed=4)
        result = backward_push(g, 5, PprParams(0.2, 1e-6), max_pushes=3)
        self.assertEqual(result.pushes, 3)

    def test_invariant_holds_after_every_push(self):
        g = random_digraph(30, 0.15, seed=3)
        exact = exact_ppr_matrix(g, 0.3, 1e-14)
        previous = np.zeros(g.n)
        for budget in range(1, 51):
            result = backward_push(g, 4, PprParams(0.3, 1e-6), max_pushes=budget)
            reserves = result.dense_reserves(g.n)
            residues = result.dense_residues(g.n)
            np.testing.assert_allclose(reserves + exact @ residues, exact[:, 4], atol=1e-10)
            self.assertTrue(np.all(reserves >= previous))
            self.assertTrue(np.all(residues >= 0))
            previous = reserves

    def test_target_out_of_range(self):
        with self.assertRaises(IndexError):
            backward_push(TWO_CYCLE, 2, PprParams(0.5, 0.1))

    def test_invalid_params(self):
        with self.assertRaises(ValueError):
            PprParams(1.0, 0.1)
        with self.assertRaises(ValueError):
            PprParams(0.5, 0.0)

    def test_workspace_is_reset_between_runs(self):
        g = random_digraph(40, 0.1, seed=2)
        p = PprParams(0.3, 1e-5)
        first = backward_push(g, 7, p)
        backward_push(g, 3, p)
        again = backward_push(g, 7, p)
        np.testing.assert_array_equal(first.reserve_nodes, again.reserve_nodes)
        np.testing.assert_array_equal(first.reserve_values, again.reserve_values)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(5, 40), st.floats(0.02, 0.3), st.floats(0.1, 0.9), st.floats(1e-4, 1e-1),
           st.integers(0, 10_000))
    def test_reserve_error_bounded_by_rmax(self, n, p_edge, alpha, r_max, seed):
        g = random_digraph(n, p_edge, seed=seed)
        v = seed % n
        exact = exact_ppr_column(g, v, alpha, tol=1e-13)
        result = backward_push(g, v, PprParams(alpha, r_max))
        gap = exact - result.dense_reserves(n)
        self.assertTrue(np.all(gap >= -1e-12))
        self.assertTrue(np.all(gap <= r_max + 1e-12))


class TestPushAllTargets(unittest.TestCase):
    def test_independent_of_thread_count(self):
        g = power_law_digraph(300, seed=1)
        p = PprParams(0.5, 1e-4)
        single = push_all_targets(g, p, threads=1)
        pooled = push_all_targets(g, p, threads=4)
        self.assertEqual([r.target for r in pooled], list(range(g.n)))
        for a, b in zip(single, pooled):
            np.testing.assert_array_equal(a.reserve_nodes, b.reserve_nodes)
            np.testing.assert_array_equal(a.reserve_values, b.reserve_values)

    def test_reduce_applied(self):
        counts = push_all_targets(TWO_CYCLE, PprParams(0.5, 1e-3), threads=2, reduce=lambda r: r.pushes)
        self.assertEqual(len(counts), 2)
        self.assertTrue(all(c > 0 for c in counts))


class TestOracles(unittest.TestCase):
    def test_row_two_cycle(self):
        np.testing.assert_allclose(exact_ppr_row(TWO_CYCLE, 0, 0.5, 1e-14), [2 / 3, 1 / 3], atol=1e-12)

    def test_row_of_sink(self):
        g = Graph.from_edges(1, np.zeros((0, 2)))
        np.testing.assert_allclose(exact_ppr_row(g, 0, 0.5, 1e-14), [0.5])

    def test_rows_sum_to_one_without_sinks(self):
        g = random_digraph(30, 0.4, seed=8, kind=GraphKind.UNDIRECTED)
        self.assertTrue(np.all(g.out_degree > 0))
        np.testing.assert_allclose(exact_ppr_matrix(g, 0.3, 1e-13).sum(axis=1), np.ones(g.n), atol=1e-10)

    def test_matrix_agrees_with_rows_and_columns(self):
        g = random_digraph(20, 0.15, seed=6)
        full = exact_ppr_matrix(g, 0.4, 1e-14)
        np.testing.assert_allclose(full[3], exact_ppr_row(g, 3, 0.4, 1e-14), atol=1e-11)
        np.testing.assert_allclose(full[:, 5], exact_ppr_column(g, 5, 0.4, 1e-14), atol=1e-11)

    def test_pagerank_two_cycle(self):
        np.testing.assert_allclose(global_pagerank(TWO_CYCLE, 0.5, 1e-14), [0.5, 0.5], atol=1e-12)

    def test_pagerank_path(self):
        self.assertAlmostEqual(2 * global_pagerank(PATH, 0.5, 1e-14)[1], 0.75, places=10)

    def test_pagerank_is_average_row(self):
        g = random_digraph(25, 0.1, seed=9)
        full = exact_ppr_matrix(g, 0.5, 1e-14)
        np.testing.assert_allclose(g.n * global_pagerank(g, 0.5, 1e-14), full.sum(axis=0), atol=1e-9)

    def test_invalid_tolerance(self):
        with self.assertRaises(ValueError):
            exact_ppr_row(TWO_CYCLE, 0, 0.5, 0.0)


if __name__ == '__main__':
    unittest.main()
