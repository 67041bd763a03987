"""End-to-end embedding runs: STRAP and the adjacency-SVD baseline"""

# Standard library imports
import time
from typing import Dict, Optional, Tuple

# Local imports
from factorize import EmbeddingPair, extract_embeddings, randomized_svd
from graph import Graph, adjacency_matrix
from proximity import StrapConfig, build_transpose_proximity, log_transform
from utils import STAGE_DICT, log


def run_strap(g: Graph, config: StrapConfig,
              threads: Optional[int] = None) -> Tuple[EmbeddingPair, Dict[str, float]]:
    """
    Sparse transpose proximity -> entry-wise log -> randomized SVD -> U sqrt(S), V sqrt(S)

    Args:
        g: Input graph
        config: Full run parameterization
        threads: Worker threads for pushes and SVD products

    Returns:
        The embedding pair and wall-clock seconds per stage (keys of STAGE_DICT)

    Raises:
        ValueError: If config.dim exceeds the node count
    """
    config.check_for(g.n)
    timings: Dict[str, float] = {}
    P = build_transpose_proximity(g, config.alpha, config.eps, threads=threads,
                                  transpose_pass=config.transpose, timings=timings)

    started = time.perf_counter()
    P = log_transform(P)
    timings['transform'] = time.perf_counter() - started

    started = time.perf_counter()
    svd = randomized_svd(P, config.dim, seed=config.seed, oversample=config.svd_oversample,
                         power_iters=config.svd_power_iters, threads=threads)
    timings['svd'] = time.perf_counter() - started

    for stage, label in STAGE_DICT.items():
        log(f"{label}: {timings[stage]:.2f}s")
    return extract_embeddings(svd, config, node_ids=g.node_ids), timings


def run_adj_svd(g: Graph, config: StrapConfig,
                threads: Optional[int] = None) -> Tuple[EmbeddingPair, Dict[str, float]]:
    '''Baseline: randomized SVD of the raw 0/1 adjacency matrix, no proximity or log'''
    config.check_for(g.n)
    started = time.perf_counter()
    svd = randomized_svd(adjacency_matrix(g), config.dim, seed=config.seed, oversample=config.svd_oversample,
                         power_iters=config.svd_power_iters, threads=threads)
    timings = {'svd': time.perf_counter() - started}
    log(f"{STAGE_DICT['svd']}: {timings['svd']:.2f}s")
    return extract_embeddings(svd, config, node_ids=g.node_ids), timings


METHODS = {
    'strap': run_strap,
    'adj-svd': run_adj_svd,
}


def run_method(g: Graph, config: StrapConfig,
               threads: Optional[int] = None) -> Tuple[EmbeddingPair, Dict[str, float]]:
    """Embed g with the method named by config.method"""
    return METHODS[config.method](g, config, threads=threads)
