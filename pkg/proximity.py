"""Sparse transpose-proximity matrix P built from backward push"""

# Standard library imports
import argparse
import time
from dataclasses import dataclass
from typing import Dict, Optional

# Third-party imports
import numpy as np
import pandas as pd
import scipy.sparse as sp

# Local imports
from graph import Graph, transpose
from ppr import PprParams, push_all_targets
from utils import DEFAULT_DICT, FLOAT_FORMAT, METHOD_DICT, fingerprint, log


class ProximityConsistencyError(RuntimeError):
    """An assembled matrix broke a bound that assembly is supposed to guarantee"""


@dataclass(frozen=True)
class StrapConfig:
    """Full parameterization of one embedding run"""
    alpha: float = DEFAULT_DICT['alpha']
    eps: float = DEFAULT_DICT['eps']
    dim: int = DEFAULT_DICT['dim']
    seed: int = DEFAULT_DICT['seed']
    svd_oversample: int = DEFAULT_DICT['svd_oversample']
    svd_power_iters: int = DEFAULT_DICT['svd_power_iters']
    transpose: bool = True
    method: str = "strap"

    def __post_init__(self):
        if self.method not in METHOD_DICT:
            raise ValueError(f"Invalid method: {self.method}. Valid options are: {', '.join(METHOD_DICT)}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.dim < 1:
            raise ValueError(f"dim must be at least 1, got {self.dim}")
        if self.svd_oversample < 0 or self.svd_power_iters < 0:
            raise ValueError("svd_oversample and svd_power_iters must be non-negative")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'StrapConfig':
        """Create a StrapConfig from parsed command-line flags"""
        return cls(
            alpha=args.alpha,
            eps=args.eps,
            dim=args.dim,
            seed=args.seed,
            svd_oversample=args.oversample,
            svd_power_iters=args.power_iters,
            transpose=not getattr(args, "no_transpose", False),
            method=getattr(args, "method", "strap"),
        )

    def check_for(self, n: int) -> None:
        """Raises ValueError if the config cannot embed a graph with n nodes"""
        if self.dim > n:
            raise ValueError(f"dim={self.dim} exceeds the node count n={n}")

    @property
    def fingerprint(self) -> str:
        if self.method == "adj-svd":
            return f"adj_d{self.dim}_s{self.seed}"
        base = fingerprint(self.alpha, self.eps, self.dim, self.seed)
        return base if self.transpose else f"{base}_single"

    def to_dict(self) -> Dict[str, object]:
        return {
            "alpha": self.alpha,
            "eps": self.eps,
            "dim": self.dim,
            "seed": self.seed,
            "svd_oversample": self.svd_oversample,
            "svd_power_iters": self.svd_power_iters,
            "transpose": self.transpose,
            "method": self.method,
        }


@dataclass(frozen=True, eq=False)
class SparseProximityMatrix:
    """
    The n x n matrix P with P[u, v] ~ PPR(u, v) + PPR^T(v, u).

    Stored in canonical CSR form (sorted column indices, no duplicates).
    `transformed` marks whether the entry-wise log has been applied.
    """
    n: int
    matrix: sp.csr_matrix
    eps: float
    alpha: float
    transformed: bool = False

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def triples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(row, col, value) arrays sorted by (row, col)"""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.matrix.indptr))
        return rows, self.matrix.indices.astype(np.int64), self.matrix.data

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __repr__(self) -> str:
        return (f"SparseProximityMatrix(n={self.n}, nnz={self.nnz}, eps={self.eps}, "
                f"transformed={self.transformed})")


def _sppr_entries(g: Graph, p: PprParams, threshold: float, threads: Optional[int], desc: str):
    """Backward push from every target, keeping reserves >= threshold"""
    def keep(result):
        mask = result.reserve_values >= threshold
        return result.reserve_nodes[mask], result.reserve_values[mask], result.pushes

    kept = push_all_targets(g, p, threads=threads, reduce=keep, desc=desc)
    targets = np.repeat(np.arange(g.n, dtype=np.int64), [len(nodes) for nodes, _, _ in kept])
    nodes = np.concatenate([nodes for nodes, _, _ in kept]) if kept else np.zeros(0, dtype=np.int64)
    values = np.concatenate([values for _, values, _ in kept]) if kept else np.zeros(0)
    pushes = sum(count for _, _, count in kept)

    if g.m:
        log(f"{desc}: {pushes} pushes, work constant pushes*alpha*r_max/m = "
            f"{pushes * p.alpha * p.r_max / g.m:.3f}")
    return targets, nodes.astype(np.int64), values, pushes


def build_transpose_proximity(g: Graph, alpha: float, eps: float, threads: Optional[int] = None,
                              transpose_pass: bool = True,
                              timings: Optional[Dict[str, float]] = None) -> SparseProximityMatrix:
    """
    Assemble P from backward pushes on G and on G^T.

    For every target v a push on G with r_max = eps/2 sets P[u, v] = pi(u, v)
    for each u with pi(u, v) >= eps/2. Then for every target u a push on G^T
    adds pi^T(v, u) into P[u, v] for each v with pi^T(v, u) >= eps/2.

    Args:
        g: Input graph
        alpha: Decay factor
        eps: Error parameter
        threads: Worker threads for the pushes
        transpose_pass: False skips the G^T pass (single-sided ablation)
        timings: If given, receives wall-clock seconds under 'push_g' and 'push_gt'

    Returns:
        SparseProximityMatrix with at most 4n/eps stored entries

    Raises:
        ProximityConsistencyError: If the 4n/eps sparsity bound is exceeded
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    params = PprParams(alpha=alpha, r_max=eps / 2.0)
    threshold = eps / 2.0
    timings = timings if timings is not None else {}

    started = time.perf_counter()
    targets, sources, values, _ = _sppr_entries(g, params, threshold, threads, "Backward push on G")
    rows, cols, vals = [sources], [targets], [values]
    timings['push_g'] = time.perf_counter() - started

    started = time.perf_counter()
    if transpose_pass:
        # a push on G^T from target u yields pi^T(v, u), which lands in row u
        targets_t, nodes_t, values_t, _ = _sppr_entries(transpose(g), params, threshold, threads,
                                                        "Backward push on G^T")
        rows.append(targets_t)
        cols.append(nodes_t)
        vals.append(values_t)
    timings['push_gt'] = time.perf_counter() - started

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(g.n, g.n)).tocsr()
    matrix.sum_duplicates()

    bound = 4.0 * g.n / eps
    log(f"Proximity matrix: nnz={matrix.nnz} (bound 4n/eps = {bound:.0f})")
    if matrix.nnz > bound:
        raise ProximityConsistencyError(f"nnz={matrix.nnz} exceeds 4n/eps={bound:.0f}")

    return SparseProximityMatrix(n=g.n, matrix=matrix, eps=eps, alpha=alpha)


def log_transform(P: SparseProximityMatrix) -> SparseProximityMatrix:
    """
    Replace every stored value x by ln((2/eps) * x), keeping the sparsity pattern

    Raises:
        ValueError: If P was already transformed
        ProximityConsistencyError: If a stored value is below eps/2
    """
    if P.transformed:
        raise ValueError("Proximity matrix has already been log-transformed")
    data = P.matrix.data
    if data.size and data.min() < P.eps / 2.0:
        raise ProximityConsistencyError(
            f"Stored value {data.min():.3g} below eps/2={P.eps / 2.0:.3g}; assembly thresholds are broken")

    matrix = P.matrix.copy()
    # clip rounding noise for entries sitting exactly at eps/2
    matrix.data = np.maximum(np.log((2.0 / P.eps) * data), 0.0)
    return SparseProximityMatrix(n=P.n, matrix=matrix, eps=P.eps, alpha=P.alpha, transformed=True)


def _require_untransformed(P: SparseProximityMatrix) -> None:
    if P.transformed:
        raise ValueError("Row and column sums are only meaningful before the log transform")


def proximity_row_sums(P: SparseProximityMatrix) -> np.ndarray:
    """Sum of stored entries per row; tracks d_out(u) up to scale"""
    _require_untransformed(P)
    return np.asarray(P.matrix.sum(axis=1)).ravel()


def proximity_col_sums(P: SparseProximityMatrix) -> np.ndarray:
    """Sum of stored entries per column; tracks d_in(v) up to scale"""
    _require_untransformed(P)
    return np.asarray(P.matrix.sum(axis=0)).ravel()


def write_proximity(P: SparseProximityMatrix, path: str) -> None:
    """Dump P as "u v value" lines sorted by (u, v), dense node ids"""
    rows, cols, values = P.triples()
    pd.DataFrame({"u": rows, "v": cols, "value": values}).to_csv(
        path, sep=' ', header=False, index=False, float_format=FLOAT_FORMAT)
