"""Personalized PageRank: backward push and power-iteration oracles"""

# Standard library imports
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

# Third-party imports
import numpy as np
import scipy.sparse as sp
from numba import njit

# Local imports
from graph import Graph
from utils import progress


@dataclass(frozen=True)
class PprParams:
    """Decay factor and push threshold of one backward push run"""
    alpha: float
    r_max: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.r_max > 0.0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")


@dataclass(frozen=True)
class PushResult:
    """
    Sparse reserves pi(x, v) and residues r(x, v) left by a backward push from
    target v. Both node arrays are sorted ascending and hold only non-zero entries.
    """
    target: int
    reserve_nodes: np.ndarray
    reserve_values: np.ndarray
    residue_nodes: np.ndarray
    residue_values: np.ndarray
    pushes: int

    @property
    def reserves(self) -> Dict[int, float]:
        return dict(zip(self.reserve_nodes.tolist(), self.reserve_values.tolist()))

    @property
    def residues(self) -> Dict[int, float]:
        return dict(zip(self.residue_nodes.tolist(), self.residue_values.tolist()))

    def reserve_of(self, u: int) -> float:
        pos = np.searchsorted(self.reserve_nodes, u)
        if pos < len(self.reserve_nodes) and self.reserve_nodes[pos] == u:
            return float(self.reserve_values[pos])
        return 0.0

    def dense_reserves(self, n: int) -> np.ndarray:
        dense = np.zeros(n)
        dense[self.reserve_nodes] = self.reserve_values
        return dense

    def dense_residues(self, n: int) -> np.ndarray:
        dense = np.zeros(n)
        dense[self.residue_nodes] = self.residue_values
        return dense


@njit(nogil=True, cache=True)
def _push_kernel(in_indptr, in_indices, out_degree, target, alpha, r_max, max_pushes,
                 reserve, residue, visited, queued, touched, queue):
    # FIFO over nodes whose residue exceeds r_max; a node sits in the queue at most once
    n = out_degree.shape[0]
    residue[target] = 1.0
    visited[target] = True
    touched[0] = target
    n_touched = 1
    head = 0
    size = 0
    if residue[target] > r_max:
        queue[0] = target
        queued[target] = True
        size = 1

    pushes = 0
    while size > 0:
        if max_pushes >= 0 and pushes >= max_pushes:
            break
        x = queue[head]
        head += 1
        if head == n:
            head = 0
        size -= 1
        queued[x] = False

        r = residue[x]
        residue[x] = 0.0
        reserve[x] += alpha * r
        pushes += 1

        mass = (1.0 - alpha) * r
        for k in range(in_indptr[x], in_indptr[x + 1]):
            y = in_indices[k]
            if not visited[y]:
                visited[y] = True
                touched[n_touched] = y
                n_touched += 1
            residue[y] += mass / out_degree[y]
            if residue[y] > r_max and not queued[y]:
                tail = head + size
                if tail >= n:
                    tail -= n
                queue[tail] = y
                queued[y] = True
                size += 1
    return n_touched, pushes


class _Workspace:
    """Per-thread dense scratch arrays, reset on touched entries only"""

    def __init__(self, n: int):
        self.n = n
        self.reserve = np.zeros(n, dtype=np.float64)
        self.residue = np.zeros(n, dtype=np.float64)
        self.visited = np.zeros(n, dtype=np.bool_)
        self.queued = np.zeros(n, dtype=np.bool_)
        self.touched = np.zeros(n, dtype=np.int64)
        self.queue = np.zeros(n, dtype=np.int64)


_local = threading.local()


def _workspace(n: int) -> _Workspace:
    ws = getattr(_local, "workspace", None)
    if ws is None or ws.n != n:
        ws = _Workspace(n)
        _local.workspace = ws
    return ws


def backward_push(g: Graph, v: int, p: PprParams, max_pushes: Optional[int] = None) -> PushResult:
    """
    Backward push from target v.

    While some residue r(x, v) > r_max, x's reserve grows by alpha * r(x, v)
    and every in-neighbor y of x receives (1 - alpha) * r(x, v) / d_out(y).
    On termination PPR(u, v) - r_max <= pi(u, v) <= PPR(u, v) for every u.

    Args:
        g: Graph to push on
        v: Target node
        p: Decay factor and push threshold
        max_pushes: Stop after this many pushes (residues may then exceed r_max)

    Returns:
        PushResult with sorted sparse reserves and residues

    Raises:
        IndexError: If v is not a node of g
    """
    if not 0 <= v < g.n:
        raise IndexError(f"Target node {v} outside [0, {g.n})")

    ws = _workspace(g.n)
    budget = -1 if max_pushes is None else int(max_pushes)
    n_touched, pushes = _push_kernel(
        g.in_indptr, g.in_indices, g.out_degree, int(v), float(p.alpha), float(p.r_max), budget,
        ws.reserve, ws.residue, ws.visited, ws.queued, ws.touched, ws.queue)

    nodes = np.sort(ws.touched[:n_touched])
    reserve = ws.reserve[nodes]
    residue = ws.residue[nodes]
    ws.reserve[nodes] = 0.0
    ws.residue[nodes] = 0.0
    ws.visited[nodes] = False
    ws.queued[nodes] = False

    has_reserve = reserve > 0.0
    has_residue = residue > 0.0
    return PushResult(
        target=int(v),
        reserve_nodes=nodes[has_reserve],
        reserve_values=reserve[has_reserve],
        residue_nodes=nodes[has_residue],
        residue_values=residue[has_residue],
        pushes=int(pushes),
    )


def push_all_targets(g: Graph, p: PprParams, threads: Optional[int] = None,
                     reduce: Optional[Callable[[PushResult], object]] = None,
                     desc: str = "Backward push") -> List[object]:
    """
    Run backward push from every node of g.

    Runs are independent and read the graph only, so they are spread over a
    thread pool; results come back in target order whatever the thread count.

    Args:
        g: Graph to push on
        p: Push parameters shared by every run
        threads: Worker threads, defaults to the machine's CPU count
        reduce: Optional map applied to each PushResult inside the worker
        desc: Progress bar label

    Returns:
        List indexed by target of PushResult (or reduce(PushResult))
    """
    threads = threads or os.cpu_count() or 1
    reduce = reduce or (lambda result: result)
    chunk = max(1, min(1024, g.n // (threads * 8) or 1))
    starts = list(range(0, g.n, chunk))

    def run_chunk(start):
        return [reduce(backward_push(g, v, p)) for v in range(start, min(start + chunk, g.n))]

    results = []
    with progress(total=g.n, desc=desc) as pbar:
        if threads == 1:
            for start in starts:
                results.extend(run_chunk(start))
                pbar.update(min(chunk, g.n - start))
        else:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                for start, block in zip(starts, executor.map(run_chunk, starts)):
                    results.extend(block)
                    pbar.update(len(block))
    return results


def transition_matrix(g: Graph) -> sp.csr_matrix:
    """Row-stochastic walk matrix D_out^-1 A; rows of sink nodes stay zero"""
    degree = g.out_degree.astype(np.float64)
    inverse = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)
    weights = np.repeat(inverse, g.out_degree)
    return sp.csr_matrix((weights, g.out_indices, g.out_indptr), shape=(g.n, g.n))


def _check_oracle_args(alpha: float, tol: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")


def exact_ppr_row(g: Graph, u: int, alpha: float, tol: float) -> np.ndarray:
    """
    PPR(u, .) by power series, to within tol in every entry.

    Walk mass reaching a sink is lost, so PPR(s, .) = alpha * e_s for a sink s
    and rows of graphs with sinks sum to less than one. Backward push makes the
    same assumption.
    """
    _check_oracle_args(alpha, tol)
    step = transition_matrix(g).T.tocsr()
    walk = np.zeros(g.n)
    walk[u] = 1.0
    ppr = np.zeros(g.n)
    while walk.sum() >= tol:
        ppr += alpha * walk
        walk = (1.0 - alpha) * (step @ walk)
    return ppr


def exact_ppr_column(g: Graph, v: int, alpha: float, tol: float) -> np.ndarray:
    '''PPR(., v) for every source, to within tol in every entry'''
    _check_oracle_args(alpha, tol)
    step = transition_matrix(g)
    walk = np.zeros(g.n)
    walk[v] = 1.0
    ppr = np.zeros(g.n)
    while walk.max() >= tol:
        ppr += alpha * walk
        walk = (1.0 - alpha) * (step @ walk)
    return ppr


def exact_ppr_matrix(g: Graph, alpha: float, tol: float) -> np.ndarray:
    '''Dense all-pairs PPR for small graphs; entry (u, v) is PPR(u, v)'''
    _check_oracle_args(alpha, tol)
    step = transition_matrix(g)
    walk = np.eye(g.n)
    ppr = np.zeros((g.n, g.n))
    while g.n and walk.sum(axis=1).max() >= tol:
        ppr += alpha * walk
        walk = (1.0 - alpha) * (step @ walk)
    return ppr


def global_pagerank(g: Graph, alpha: float, tol: float) -> np.ndarray:
    """
    PageRank as the average PPR row: n * PR(v) = sum_u PPR(u, v) +- n * tol.

    Iterates the PPR recursion from the uniform distribution, with the same
    sink semantics as exact_ppr_row.
    """
    _check_oracle_args(alpha, tol)
    step = transition_matrix(g).T.tocsr()
    walk = np.full(g.n, 1.0 / g.n) if g.n else np.zeros(0)
    pagerank = np.zeros(g.n)
    while walk.sum() >= tol:
        pagerank += alpha * walk
        walk = (1.0 - alpha) * (step @ walk)
    return pagerank
