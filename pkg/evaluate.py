"""Graph reconstruction, link prediction and degree-distribution evaluation"""

# Standard library imports
import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

# Third-party imports
import altair as alt
import numpy as np
import pandas as pd
from scipy.stats import spearmanr

# Local imports
from factorize import EmbeddingPair
from graph import Graph, GraphKind, degree_histogram
from pipeline import run_method
from proximity import StrapConfig
from utils import DEFAULT_DICT, STAGE_DICT, log, progress

# score entries materialised per block, across all rows of the block
_BLOCK_ENTRIES = 1 << 22
_NEGATIVE_ROUNDS = 100


class SplitError(ValueError):
    """Raised when a link split cannot be drawn from the graph"""


@dataclass(frozen=True)
class ScoredPair:
    """A candidate arc (u, v) with its score <s_u, t_v>"""
    u: int
    v: int
    s: float

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError(f"Self-loop ({self.u}, {self.v}) is not a candidate pair")


@dataclass(frozen=True, eq=False)
class LinkSplit:
    """
    Edge holdout for link prediction.

    train_edges lists arcs (both arcs of each kept edge on undirected graphs).
    test_pos and test_neg list one (u, v) row per hidden edge / sampled
    non-edge; on undirected graphs with u < v.
    """
    train_edges: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    ratio: float
    seed: int
    kind: GraphKind

    def train_graph(self, g: Graph) -> Graph:
        """Training graph on the same node set (and ids) as g"""
        return Graph.from_edges(g.n, self.train_edges, self.kind, node_ids=g.node_ids)

    def validate(self, g: Graph) -> None:
        """
        Full-scan check of the split invariants against g

        Raises:
            SplitError: If any invariant is broken
        """
        pos = self.test_pos
        if self.kind is GraphKind.UNDIRECTED:
            pos = np.vstack([pos, pos[:, ::-1]])
        train_keys = self.train_edges[:, 0] * g.n + self.train_edges[:, 1]
        pos_keys = pos[:, 0] * g.n + pos[:, 1]
        union = np.sort(np.concatenate([train_keys, pos_keys]))
        if not np.array_equal(union, g.edge_keys):
            raise SplitError("Training and positive test edges do not partition the edge set")
        if len(self.test_neg) != len(self.test_pos):
            raise SplitError("Negative and positive test sets differ in size")
        if np.any(self.test_neg[:, 0] == self.test_neg[:, 1]):
            raise SplitError("Self-loop among negative samples")
        if np.any(g.has_edges(self.test_neg[:, 0], self.test_neg[:, 1])):
            raise SplitError("Negative sample is an edge of the graph")
        neg_keys = self.test_neg[:, 0] * g.n + self.test_neg[:, 1]
        if len(np.unique(neg_keys)) != len(neg_keys):
            raise SplitError("Duplicate negative sample")


def _rank(u: np.ndarray, v: np.ndarray, s: np.ndarray, m: int):
    '''Keep the m best pairs by (score desc, u asc, v asc)'''
    order = np.lexsort((v, u, -s))[:m]
    return u[order], v[order], s[order]


def _block_candidates(emb: EmbeddingPair, start: int, stop: int, m: int):
    '''Every pair of rows [start, stop) that could still make the global top m'''
    n = emb.n
    scores = emb.source[start:stop] @ emb.target.T
    rows = np.arange(start, stop)
    scores[rows - start, rows] = -np.inf
    flat = scores.ravel()
    if flat.size - (stop - start) > m:
        kth = np.partition(flat, flat.size - m)[flat.size - m]
        picked = np.flatnonzero(flat >= kth)
    else:
        picked = np.flatnonzero(flat > -np.inf)
    u = start + picked // n
    v = picked % n
    return _rank(u.astype(np.int64), v.astype(np.int64), flat[picked], m)


def top_m_pair_arrays(emb: EmbeddingPair, m: int, block_rows: int = DEFAULT_DICT['block_rows'],
                      threads: Optional[int] = None):
    """
    Array form of top_m_pairs: (u, v, score) arrays in rank order.

    Scores are computed one row block at a time and never all at once; blocks
    run on a thread pool and are merged in block order.
    """
    n = emb.n
    if m < 0 or m > n * (n - 1):
        raise ValueError(f"m={m} must lie in [0, n(n-1)] = [0, {n * (n - 1)}]")
    empty = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
    if m == 0:
        return empty

    rows_per_block = max(1, min(block_rows, _BLOCK_ENTRIES // n))
    starts = list(range(0, n, rows_per_block))
    best_u, best_v, best_s = empty
    with ThreadPoolExecutor(max_workers=threads or os.cpu_count() or 1) as executor:
        blocks = executor.map(lambda start: _block_candidates(emb, start, min(start + rows_per_block, n), m),
                              starts)
        for u, v, s in blocks:
            best_u, best_v, best_s = _rank(np.concatenate([best_u, u]), np.concatenate([best_v, v]),
                                           np.concatenate([best_s, s]), m)
    return best_u, best_v, best_s


def top_m_pairs(emb: EmbeddingPair, m: int, block_rows: int = DEFAULT_DICT['block_rows'],
                threads: Optional[int] = None) -> List[ScoredPair]:
    """
    The m highest-scoring ordered pairs (u, v) with u != v

    Ties are broken by u ascending, then v ascending.

    Raises:
        ValueError: If m exceeds n(n-1)
    """
    u, v, s = top_m_pair_arrays(emb, m, block_rows=block_rows, threads=threads)
    return [ScoredPair(int(a), int(b), float(c)) for a, b, c in zip(u, v, s)]


def _check_shapes(g: Graph, emb: EmbeddingPair) -> None:
    if emb.n != g.n:
        raise ValueError(f"Embedding has {emb.n} nodes but the graph has {g.n}")


def reconstruction_precision(g: Graph, emb: EmbeddingPair, threads: Optional[int] = None) -> float:
    """Fraction of real arcs among the top-m pairs, m = g.m"""
    _check_shapes(g, emb)
    if g.m == 0:
        raise ValueError("Reconstruction precision is undefined on a graph without edges")
    u, v, _ = top_m_pair_arrays(emb, g.m, threads=threads)
    return float(np.count_nonzero(g.has_edges(u, v))) / g.m


def reconstructed_graph(g: Graph, emb: EmbeddingPair, threads: Optional[int] = None) -> Graph:
    """Directed graph made of the top-m pairs, m = g.m"""
    _check_shapes(g, emb)
    u, v, _ = top_m_pair_arrays(emb, g.m, threads=threads)
    return Graph.from_edges(g.n, np.column_stack([u, v]), GraphKind.DIRECTED, node_ids=g.node_ids)


def reconstructed_degree_histograms(g: Graph, emb: EmbeddingPair, threads: Optional[int] = None) -> pd.DataFrame:
    """
    In- and out-degree histograms of g and of its top-m reconstruction

    Returns:
        Tidy DataFrame with columns graph ('original' / 'reconstructed'),
        direction ('in' / 'out'), degree, count
    """
    recon = reconstructed_graph(g, emb, threads=threads)
    frames = []
    for name, graph in (("original", g), ("reconstructed", recon)):
        for direction in ("in", "out"):
            hist = degree_histogram(graph, direction)
            frames.append(pd.DataFrame({
                "graph": name,
                "direction": direction,
                "degree": list(hist.keys()),
                "count": list(hist.values()),
            }))
    return pd.concat(frames, ignore_index=True)


def degree_spearman(g: Graph, emb: EmbeddingPair, direction: str = "out",
                    threads: Optional[int] = None) -> float:
    """Spearman correlation between original and reconstructed per-node degrees"""
    recon = reconstructed_graph(g, emb, threads=threads)
    if direction == "out":
        original, rebuilt = g.out_degree, recon.out_degree
    else:
        original, rebuilt = g.in_degree, recon.in_degree
    return float(spearmanr(original, rebuilt)[0])


def plot_degree_distributions(table: pd.DataFrame, path: str) -> alt.Chart:
    """Log-log chart of the four degree histograms, saved to path (.html or .json)"""
    source = table[(table["degree"] > 0) & (table["count"] > 0)]
    chart = alt.Chart(source).mark_line(point=True).encode(
        x=alt.X("degree:Q", scale=alt.Scale(type="log"), title="Degree"),
        y=alt.Y("count:Q", scale=alt.Scale(type="log"), title="Number of nodes"),
        color=alt.Color("graph:N", scale=alt.Scale(range=['#134B70', '#808080'])),
        column=alt.Column("direction:N", title=""),
        ).configure_view(
            strokeWidth=0.0,
        )
    chart.save(path)
    return chart


def random_embeddings(n: int, dim: int, seed: int) -> EmbeddingPair:
    """Gaussian null-model embeddings"""
    rng = np.random.default_rng(seed)
    return EmbeddingPair(source=rng.standard_normal((n, dim)), target=rng.standard_normal((n, dim)))


def _sample_negatives(g: Graph, needed: int, rng: np.random.Generator, undirected: bool) -> np.ndarray:
    '''Uniform non-edges by rejection sampling, no duplicates, no self-loops'''
    n = g.n
    available = n * (n - 1) - g.m
    if undirected:
        available //= 2
    if available < needed:
        raise SplitError(f"Only {available} non-edges available, {needed} negatives needed")

    chosen: List[int] = []
    seen = set()
    for _ in range(_NEGATIVE_ROUNDS):
        batch = max(2 * (needed - len(chosen)), 16)
        u = rng.integers(0, n, size=batch)
        v = rng.integers(0, n, size=batch)
        if undirected:
            u, v = np.minimum(u, v), np.maximum(u, v)
        ok = (u != v) & ~g.has_edges(u, v)
        for key in (u[ok] * n + v[ok]).tolist():
            if key not in seen:
                seen.add(key)
                chosen.append(key)
                if len(chosen) == needed:
                    keys = np.array(chosen, dtype=np.int64)
                    return np.column_stack([keys // n, keys % n])
    raise SplitError(f"Found only {len(chosen)} of {needed} negatives after {_NEGATIVE_ROUNDS} rounds")


def make_link_split(g: Graph, ratio: float, seed: int) -> LinkSplit:
    """
    Hide a uniform random 1 - ratio share of the edges as positive test samples
    and draw as many non-edges as negatives.

    On undirected graphs an edge and its reverse arc move together.

    Raises:
        ValueError: If ratio is outside (0, 1)
        SplitError: If the graph is too small or too dense for the split
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    undirected = g.kind is GraphKind.UNDIRECTED
    edges = g.edges()
    if undirected:
        edges = edges[edges[:, 0] < edges[:, 1]]
    if len(edges) < 2:
        raise SplitError(f"Need at least 2 edges to split, graph has {len(edges)}")

    rng = np.random.default_rng(seed)
    n_train = min(max(int(round(ratio * len(edges))), 1), len(edges) - 1)
    perm = rng.permutation(len(edges))
    train = edges[np.sort(perm[:n_train])]
    test_pos = edges[np.sort(perm[n_train:])]
    if undirected:
        train = np.vstack([train, train[:, ::-1]])
    test_neg = _sample_negatives(g, len(test_pos), rng, undirected)

    split = LinkSplit(train_edges=train, test_pos=test_pos, test_neg=test_neg,
                      ratio=ratio, seed=seed, kind=g.kind)
    split.validate(g)
    return split


def pair_scores(emb: EmbeddingPair, pairs: np.ndarray) -> np.ndarray:
    """<s_u, t_v> for every row (u, v) of pairs"""
    return np.einsum("ij,ij->i", emb.source[pairs[:, 0]], emb.target[pairs[:, 1]])


def precision_at_k(pos_scores: np.ndarray, neg_scores: np.ndarray, seed: int = 0) -> float:
    """
    Share of positives among the top-|pos| candidates of pos + neg.

    Equal scores are ordered by a seeded random permutation, so a constant
    scorer lands at 0.5 on average rather than at either extreme.
    """
    if len(pos_scores) == 0:
        raise ValueError("No positive samples to rank")
    scores = np.concatenate([pos_scores, neg_scores])
    labels = np.concatenate([np.ones(len(pos_scores)), np.zeros(len(neg_scores))])
    perm = np.random.default_rng(seed).permutation(len(scores))
    order = perm[np.argsort(-scores[perm], kind="stable")]
    return float(labels[order[:len(pos_scores)]].mean())


def _link_prediction_run(g: Graph, config: StrapConfig, ratio: float, seed: int,
                         threads: Optional[int] = None) -> Tuple[float, Dict[str, float]]:
    split = make_link_split(g, ratio, seed)
    emb, timings = run_method(split.train_graph(g), config, threads=threads)
    precision = precision_at_k(pair_scores(emb, split.test_pos), pair_scores(emb, split.test_neg), seed)
    return precision, timings


def link_prediction_precision(g: Graph, config: StrapConfig, ratio: float, seed: int,
                              threads: Optional[int] = None) -> float:
    """
    Train on a `ratio` share of the edges, then rank the balanced set of hidden
    edges and sampled non-edges by score and report precision at |test_pos|.
    """
    return _link_prediction_run(g, config, ratio, seed, threads=threads)[0]


def repeat_link_prediction(g: Graph, config: StrapConfig, ratio: float, seed: int, repeats: int,
                           threads: Optional[int] = None) -> List[float]:
    """Link-prediction precision for seeds seed .. seed + repeats - 1"""
    results = []
    for offset in progress(range(repeats), desc="Link prediction repeats"):
        run_seed = seed + offset
        run_config = dataclasses.replace(config, seed=run_seed)
        results.append(link_prediction_precision(g, run_config, ratio, run_seed, threads=threads))
        log(f"Link prediction seed {run_seed}: {results[-1]:.4f}")
    return results


def parameter_sweep(g: Graph, base_config: StrapConfig, param: str, values: Sequence[float], task: str,
                    seeds: Sequence[int], ratio: float = DEFAULT_DICT['ratio'],
                    threads: Optional[int] = None) -> pd.DataFrame:
    """
    Metric and stage timings for every (value, seed) combination of one swept parameter

    Args:
        g: Input graph
        base_config: Config whose `param` field is overridden per row
        param: 'alpha', 'eps', 'dim' or 'ratio' (training ratio, linkpred only)
        values: Values to sweep
        task: 'reconstruct' or 'linkpred'
        seeds: Seeds repeated for every value
        ratio: Training ratio when not swept

    Returns:
        DataFrame with columns param, value, seed, metric and one time_<stage>
        column per STAGE_DICT stage (seconds; 0 for stages a method skips)
    """
    if param not in ("alpha", "eps", "dim", "ratio"):
        raise ValueError(f"Invalid sweep parameter: {param}. Valid options are: alpha, eps, dim, ratio")
    if task not in ("reconstruct", "linkpred"):
        raise ValueError(f"Invalid task: {task}. Valid options are: reconstruct, linkpred")
    if param == "ratio" and task != "linkpred":
        raise ValueError("The training ratio can only be swept for link prediction")
    if base_config.method == "adj-svd" and param in ("alpha", "eps"):
        raise ValueError(f"adj-svd has no {param} parameter to sweep")

    rows = []
    for value in progress(values, desc=f"Sweeping {param}"):
        for seed in seeds:
            overrides = {"seed": seed}
            if param == "dim":
                overrides["dim"] = int(value)
            elif param != "ratio":
                overrides[param] = float(value)
            config = dataclasses.replace(base_config, **overrides)
            run_ratio = float(value) if param == "ratio" else ratio
            if task == "reconstruct":
                emb, timings = run_method(g, config, threads=threads)
                metric = reconstruction_precision(g, emb, threads=threads)
            else:
                metric, timings = _link_prediction_run(g, config, run_ratio, seed, threads=threads)
            row = {"param": param, "value": value, "seed": seed, "metric": metric}
            row.update({f"time_{stage}": timings.get(stage, 0.0) for stage in STAGE_DICT})
            rows.append(row)
    return pd.DataFrame(rows)
