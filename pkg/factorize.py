"""Randomized truncated SVD and content/context embedding extraction"""

# Standard library imports
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

# Third-party imports
import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse as sp

# Local imports
from proximity import SparseProximityMatrix, StrapConfig
from utils import FLOAT_FORMAT

MatrixLike = Union[SparseProximityMatrix, sp.spmatrix, np.ndarray]


@dataclass(frozen=True, eq=False)
class SvdResult:
    """U (n x d) and V (n x d) with orthonormal columns, sigma non-increasing"""
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.sigma)

    def reconstruct(self) -> np.ndarray:
        """Dense U diag(sigma) V^T"""
        return (self.U * self.sigma) @ self.V.T

    def validate(self, tol: float = 1e-8) -> None:
        """
        Check orthonormality and singular-value ordering

        Raises:
            ValueError: If an invariant is violated
        """
        eye = np.eye(self.dim)
        if np.linalg.norm(self.U.T @ self.U - eye) > tol:
            raise ValueError("Left singular vectors are not orthonormal")
        if np.linalg.norm(self.V.T @ self.V - eye) > tol:
            raise ValueError("Right singular vectors are not orthonormal")
        if np.any(self.sigma < 0) or np.any(np.diff(self.sigma) > 0):
            raise ValueError("Singular values must be non-negative and non-increasing")


@dataclass(frozen=True, eq=False)
class EmbeddingPair:
    """
    Content vectors s_u (rows of `source`) and context vectors t_v (rows of
    `target`); score(u, v) = <s_u, t_v>.
    """
    source: np.ndarray
    target: np.ndarray
    config: Optional[StrapConfig] = None
    node_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.source.shape != self.target.shape:
            raise ValueError(f"Source {self.source.shape} and target {self.target.shape} shapes differ")
        if self.node_ids is None:
            object.__setattr__(self, "node_ids", np.arange(self.source.shape[0], dtype=np.int64))

    @property
    def n(self) -> int:
        return self.source.shape[0]

    @property
    def dim(self) -> int:
        return self.source.shape[1]

    def score_matrix(self) -> np.ndarray:
        """Dense S T^T; only for small n"""
        return self.source @ self.target.T


class _RowBlockOperator:
    """
    Sparse products A @ X and A^T @ X split into row blocks over a thread pool.
    Each output row is computed exactly as in the single-threaded product, so
    results do not depend on the thread count.
    """

    def __init__(self, A, threads: int):
        self.shape = A.shape
        self.threads = max(1, threads)
        if sp.issparse(A):
            A = sp.csr_matrix(A, dtype=np.float64)
            self._blocks = self._split(A)
            self._blocks_t = self._split(A.T.tocsr())
        else:
            self._dense = np.asarray(A, dtype=np.float64)
            self._blocks = None

    def _split(self, A):
        edges = np.linspace(0, A.shape[0], self.threads + 1).astype(int)
        return [A[start:stop] for start, stop in zip(edges[:-1], edges[1:]) if stop > start]

    def _apply(self, blocks, X):
        if len(blocks) == 1:
            return blocks[0] @ X
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return np.vstack(list(executor.map(lambda block: block @ X, blocks)))

    def dot(self, X: np.ndarray) -> np.ndarray:
        if self._blocks is None:
            return self._dense @ X
        return self._apply(self._blocks, X)

    def tdot(self, X: np.ndarray) -> np.ndarray:
        if self._blocks is None:
            return self._dense.T @ X
        return self._apply(self._blocks_t, X)


def _orthonormal_basis(Y: np.ndarray) -> np.ndarray:
    Q, _ = scipy.linalg.qr(Y, mode='economic')
    return Q


def _is_symmetric(A) -> bool:
    if A.shape[0] != A.shape[1]:
        return False
    if sp.issparse(A):
        return (A != A.T).nnz == 0
    return bool(np.array_equal(A, A.T))


def _symmetric_factors(operator: _RowBlockOperator, Q: np.ndarray, dim: int):
    '''Rayleigh-Ritz on Q^T A Q; U = QX, sigma = |lambda|, V = U sign(lambda)'''
    T = Q.T @ operator.dot(Q)
    eigenvalues, X = scipy.linalg.eigh((T + T.T) / 2.0)
    order = np.argsort(-np.abs(eigenvalues), kind="stable")[:dim]
    U = Q @ X[:, order]
    signs = np.sign(eigenvalues[order])
    signs[signs == 0] = 1.0
    return U, np.abs(eigenvalues[order]), U * signs


def randomized_svd(P: MatrixLike, dim: int, seed: int = 0, oversample: int = 10,
                   power_iters: int = 10, threads: Optional[int] = None) -> SvdResult:
    """
    Rank-dim randomized SVD: Gaussian range finder with subspace iteration.

    The test matrix has dim + oversample columns and is re-orthogonalised by QR
    after every product with P or P^T. The result is a (1 + delta)-approximation
    of the best rank-dim Frobenius error, delta shrinking as power_iters grows.
    Work is O(nnz(P) (dim + oversample) power_iters + n (dim + oversample)^2).

    An exactly symmetric P is factored through a symmetric eigendecomposition
    of Q^T P Q instead, so U diag(sigma) V^T is itself symmetric.

    Args:
        P: Proximity matrix, any scipy sparse matrix, or a dense array
        dim: Target rank d
        seed: Seed of the Gaussian test matrix; equal seeds give identical output
        oversample: Extra sampled columns
        power_iters: Subspace iterations
        threads: Worker threads for the sparse products

    Returns:
        SvdResult with the sign of each singular pair fixed so the
        largest-magnitude entry of every U column is positive

    Raises:
        ValueError: If dim < 1 or dim exceeds the matrix dimensions
    """
    A = P.matrix if isinstance(P, SparseProximityMatrix) else P
    n_rows, n_cols = A.shape
    if dim < 1:
        raise ValueError(f"dim must be at least 1, got {dim}")
    if dim > min(n_rows, n_cols):
        raise ValueError(f"dim={dim} exceeds the matrix size {n_rows}x{n_cols}")

    operator = _RowBlockOperator(A, threads or os.cpu_count() or 1)
    samples = min(dim + oversample, n_rows, n_cols)
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((n_cols, samples))

    Q = _orthonormal_basis(operator.dot(omega))
    for _ in range(power_iters):
        Z = _orthonormal_basis(operator.tdot(Q))
        Q = _orthonormal_basis(operator.dot(Z))

    if _is_symmetric(A):
        U, sigma, V = _symmetric_factors(operator, Q, dim)
    else:
        # B = Q^T A, small enough for a dense SVD
        B = operator.tdot(Q).T
        U_small, sigma, Vt = scipy.linalg.svd(B, full_matrices=False)
        U = Q @ U_small[:, :dim]
        sigma = sigma[:dim]
        V = Vt[:dim].T

    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(dim)])
    signs[signs == 0] = 1.0
    result = SvdResult(U=U * signs, sigma=sigma, V=V * signs)
    result.validate()
    return result


def extract_embeddings(svd: SvdResult, config: Optional[StrapConfig] = None,
                       node_ids: Optional[np.ndarray] = None) -> EmbeddingPair:
    """S = U sqrt(Sigma) and T = V sqrt(Sigma), so S T^T = U Sigma V^T"""
    root = np.sqrt(svd.sigma)
    return EmbeddingPair(source=svd.U * root, target=svd.V * root, config=config, node_ids=node_ids)


def score(emb: EmbeddingPair, u: int, v: int) -> float:
    """Inner product <s_u, t_v>"""
    if not (0 <= u < emb.n and 0 <= v < emb.n):
        raise IndexError(f"Node pair ({u}, {v}) outside [0, {emb.n})")
    return float(emb.source[u] @ emb.target[v])


def write_embeddings(emb: EmbeddingPair, path: str) -> None:
    """
    Write embeddings as text: header "n d", then n lines "orig_id f_1 ... f_d"
    for S followed by n lines for T, 17 significant digits. A path ending in
    .npz stores the same layout in numpy's binary format instead.
    """
    if path.endswith(".npz"):
        np.savez(path, node_ids=emb.node_ids, source=emb.source, target=emb.target)
        return
    with open(path, "w") as f:
        f.write(f"{emb.n} {emb.dim}\n")
        for block in (emb.source, emb.target):
            frame = pd.DataFrame(block)
            frame.insert(0, "id", emb.node_ids)
            frame.to_csv(f, sep=' ', header=False, index=False, float_format=FLOAT_FORMAT)


def read_embeddings(path: str) -> EmbeddingPair:
    """
    Read a file written by write_embeddings

    Raises:
        ValueError: If the body does not match the "n d" header
    """
    if path.endswith(".npz"):
        with np.load(path) as data:
            return EmbeddingPair(source=data["source"], target=data["target"], node_ids=data["node_ids"])

    with open(path) as f:
        header = f.readline().split()
    if len(header) != 2 or not all(field.isdigit() for field in header):
        raise ValueError(f"{path}: expected an 'n d' header line")
    n, d = int(header[0]), int(header[1])

    body = pd.read_csv(path, sep=' ', header=None, skiprows=1, float_precision='round_trip')
    if body.shape != (2 * n, d + 1):
        raise ValueError(f"{path}: header says {n}x{d} but body is {body.shape[0]} rows of "
                         f"{body.shape[1] - 1} values")
    ids = body.iloc[:n, 0].to_numpy(dtype=np.int64)
    if not np.array_equal(ids, body.iloc[n:, 0].to_numpy(dtype=np.int64)):
        raise ValueError(f"{path}: source and target blocks list different node ids")
    values = body.iloc[:, 1:].to_numpy(dtype=np.float64)
    return EmbeddingPair(source=values[:n], target=values[n:], node_ids=ids)
