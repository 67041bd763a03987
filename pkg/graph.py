"""Directed/undirected graphs in compressed adjacency form"""

# Standard library imports
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Optional

# Third-party imports
import numpy as np
import pandas as pd
import scipy.sparse as sp

# Local imports
from utils import log


class GraphKind(Enum):
    """Undirected graphs are stored as both directed arcs"""
    DIRECTED = "directed"
    UNDIRECTED = "undirected"


class GraphFormatError(ValueError):
    """Raised for an edge-list file that cannot be parsed"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Immutable graph with sorted out- and in-neighbor lists in CSR layout.

    Node ids are dense integers in [0, n). `node_ids[i]` is the id node i had
    in the input file, so outputs can be written back in the original id space.
    """
    n: int
    m: int
    kind: GraphKind
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    node_ids: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: np.ndarray, kind: GraphKind = GraphKind.DIRECTED,
                   node_ids: Optional[np.ndarray] = None) -> 'Graph':
        """
        Build a Graph from an integer (k, 2) array of dense-id edges

        Self-loops are dropped and duplicate edges collapsed. For undirected
        graphs the reverse of every edge is added.

        Args:
            n: Number of nodes; isolated nodes are allowed
            edges: Array of (u, v) pairs with 0 <= u, v < n
            kind: Directed or undirected
            node_ids: Original ids, defaults to 0..n-1

        Returns:
            Graph: the validated graph

        Raises:
            ValueError: If an endpoint lies outside [0, n)
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if n < 0:
            raise ValueError(f"Node count must be non-negative, got {n}")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError(f"Edge endpoint outside [0, {n})")

        src, dst = edges[:, 0], edges[:, 1]
        if kind is GraphKind.UNDIRECTED:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        keep = src != dst
        keys = np.unique(src[keep] * n + dst[keep])
        src, dst = keys // n, keys % n

        out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_indptr[1:])
        order = np.lexsort((src, dst))
        in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=n), out=in_indptr[1:])

        if node_ids is None:
            node_ids = np.arange(n, dtype=np.int64)

        graph = cls(
            n=int(n),
            m=int(keys.size),
            kind=kind,
            out_indptr=out_indptr,
            out_indices=dst.astype(np.int64),
            in_indptr=in_indptr,
            in_indices=src[order].astype(np.int64),
            node_ids=np.asarray(node_ids, dtype=np.int64),
        )
        graph.validate()
        return graph

    @cached_property
    def out_degree(self) -> np.ndarray:
        """d_out(u) for every node"""
        return np.diff(self.out_indptr)

    @cached_property
    def in_degree(self) -> np.ndarray:
        """d_in(v) for every node"""
        return np.diff(self.in_indptr)

    def out_neighbors(self, u: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[u]:self.out_indptr[u + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[v]:self.in_indptr[v + 1]]

    @cached_property
    def edge_keys(self) -> np.ndarray:
        """Sorted u*n+v keys of every arc, for binary-search membership"""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src * self.n + self.out_indices

    def edges(self) -> np.ndarray:
        """All arcs as an (m, 2) array sorted by (u, v)"""
        return np.column_stack([self.edge_keys // self.n, self.edge_keys % self.n])

    def has_edges(self, u, v) -> np.ndarray:
        """Vectorised membership test for arcs (u[i], v[i])"""
        keys = np.asarray(u, dtype=np.int64) * self.n + np.asarray(v, dtype=np.int64)
        pos = np.searchsorted(self.edge_keys, keys)
        pos = np.minimum(pos, max(self.m - 1, 0))
        if self.m == 0:
            return np.zeros(keys.shape, dtype=bool)
        return self.edge_keys[pos] == keys

    def index_of(self, original_id: int) -> int:
        """Dense id of a node given its original id"""
        pos = int(np.searchsorted(self.node_ids, original_id))
        if pos >= self.n or self.node_ids[pos] != original_id:
            raise IndexError(f"Node {original_id} is not in the graph")
        return pos

    def validate(self) -> None:
        """
        Full-scan consistency check of both adjacency indexes

        Raises:
            ValueError: If any structural invariant is broken
        """
        for name, indptr, indices in (("out", self.out_indptr, self.out_indices),
                                      ("in", self.in_indptr, self.in_indices)):
            if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != self.m:
                raise ValueError(f"Malformed {name}-adjacency pointer array")
            if np.any(np.diff(indptr) < 0):
                raise ValueError(f"Decreasing {name}-adjacency pointer array")
            if indices.size and (indices.min() < 0 or indices.max() >= self.n):
                raise ValueError(f"{name}-neighbor outside [0, {self.n})")
            rows = np.repeat(np.arange(self.n), np.diff(indptr))
            same_row = rows[1:] == rows[:-1]
            if np.any(np.diff(indices)[same_row] <= 0):
                raise ValueError(f"{name}-neighbor lists are not strictly increasing")
            if np.any(rows == indices):
                raise ValueError("Self-loop stored in adjacency")

        in_rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.in_indptr))
        reverse_keys = np.sort(self.in_indices * self.n + in_rows)
        if not np.array_equal(reverse_keys, self.edge_keys):
            raise ValueError("Out- and in-adjacency disagree on the arc set")
        if self.kind is GraphKind.UNDIRECTED:
            mirrored = np.sort((self.edge_keys % self.n) * self.n + self.edge_keys // self.n)
            if not np.array_equal(mirrored, self.edge_keys):
                raise ValueError("Undirected graph is missing a reverse arc")
        if len(self.node_ids) != self.n:
            raise ValueError("Original id table does not match node count")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return False
        return (self.n == other.n and self.m == other.m and self.kind is other.kind
                and np.array_equal(self.out_indptr, other.out_indptr)
                and np.array_equal(self.out_indices, other.out_indices)
                and np.array_equal(self.in_indptr, other.in_indptr)
                and np.array_equal(self.in_indices, other.in_indices)
                and np.array_equal(self.node_ids, other.node_ids))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, kind={self.kind.value})"


def load_edge_list(path: str, kind: GraphKind) -> Graph:
    """
    Load a whitespace-separated "u v" edge list

    Lines starting with '#' are comments. Ids may be any non-negative
    integers; they are remapped to dense [0, n) in ascending order and the
    originals kept in `Graph.node_ids`.

    Raises:
        GraphFormatError: On a malformed line or a file without edges
    """
    pairs = []
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            fields = stripped.split()
            if len(fields) != 2 or not (fields[0].isdigit() and fields[1].isdigit()):
                raise GraphFormatError(f"expected 'u v' with non-negative integer ids, got {stripped!r}",
                                       line_number)
            pairs.append((int(fields[0]), int(fields[1])))

    if not pairs:
        raise GraphFormatError(f"No edges found in {path}")

    raw = np.array(pairs, dtype=np.int64)
    node_ids, dense = np.unique(raw, return_inverse=True)
    graph = Graph.from_edges(len(node_ids), dense.reshape(-1, 2), kind, node_ids=node_ids)

    self_loops = int(np.count_nonzero(raw[:, 0] == raw[:, 1]))
    log(f"Loaded {path}: n={graph.n}, m={graph.m} ({kind.value}), "
        f"dropped {self_loops} self-loops")
    return graph


def write_edge_list(g: Graph, path: str) -> None:
    """Write every arc as "u v" in original ids, sorted by (u, v)"""
    edges = g.node_ids[g.edges()]
    pd.DataFrame(edges).to_csv(path, sep=' ', header=False, index=False)


def transpose(g: Graph) -> Graph:
    """G^T: every arc reversed, which swaps the two adjacency indexes"""
    return Graph(
        n=g.n,
        m=g.m,
        kind=g.kind,
        out_indptr=g.in_indptr,
        out_indices=g.in_indices,
        in_indptr=g.out_indptr,
        in_indices=g.out_indices,
        node_ids=g.node_ids,
    )


def degree_histogram(g: Graph, direction: str) -> Dict[int, int]:
    """
    Histogram of in- or out-degrees

    Args:
        g: Graph to summarise
        direction: 'in' or 'out'

    Returns:
        Dict mapping degree -> number of nodes with that degree
    """
    if direction == "out":
        degrees = g.out_degree
    elif direction == "in":
        degrees = g.in_degree
    else:
        raise ValueError(f"Invalid direction: {direction}. Valid options are: in, out")
    values, counts = np.unique(degrees, return_counts=True)
    return {int(d): int(c) for d, c in zip(values, counts)}


def adjacency_matrix(g: Graph) -> sp.csr_matrix:
    """0/1 adjacency matrix A with A[u, v] = 1 for every arc"""
    data = np.ones(g.m, dtype=np.float64)
    return sp.csr_matrix((data, g.out_indices, g.out_indptr), shape=(g.n, g.n))


def random_digraph(n: int, p: float, seed: int, kind: GraphKind = GraphKind.DIRECTED) -> Graph:
    '''G(n, p) random graph; for undirected graphs each unordered pair is drawn once'''
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if kind is GraphKind.UNDIRECTED:
        mask = np.triu(mask)
    return Graph.from_edges(n, np.argwhere(mask), kind)


def power_law_digraph(n: int, exponent: float = 2.2, avg_degree: float = 10.0, seed: int = 0,
                      correlated: bool = True) -> Graph:
    '''
    Chung-Lu style digraph with power-law in- and out-degrees

    Node i gets expected out- and in-degree proportional to i^(-1/(exponent-1)).
    With `correlated` both weights come from the same ordering, so a node's
    in- and out-degree rise together as in follower and vote networks;
    otherwise the in-weights are permuted independently.
    '''
    rng = np.random.default_rng(seed)
    weights = np.arange(1, n + 1, dtype=np.float64) ** (-1.0 / (exponent - 1.0))
    weights /= weights.sum()
    order = rng.permutation(n)
    out_weights = weights[order]
    in_weights = out_weights if correlated else weights[rng.permutation(n)]
    m_target = int(round(n * avg_degree))
    src = rng.choice(n, size=m_target, p=out_weights)
    dst = rng.choice(n, size=m_target, p=in_weights)
    return Graph.from_edges(n, np.column_stack([src, dst]), GraphKind.DIRECTED)
