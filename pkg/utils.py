import sys

from tqdm.auto import tqdm

DEFAULT_DICT = {
    'alpha' : 0.5,
    'eps' : 1e-5,
    'dim' : 128,
    'seed' : 0,
    'svd_oversample' : 10,
    'svd_power_iters' : 10,
    'ratio' : 0.5,
    'repeats' : 1,
    'block_rows' : 1024,
    }

# wall-clock stages recorded in the run manifest, in pipeline order
STAGE_DICT = {
    'push_g' : "Backward push on G",
    'push_gt' : "Backward push on G^T",
    'transform' : "Entry-wise log transform",
    'svd' : "Randomized SVD",
    }

OUTPUT_DICT = {
    'embedding' : "{stem}_{fingerprint}.emb",
    'manifest' : "{embedding}.manifest",
    'metric' : "{metric}_{fingerprint}.tsv",
    'degree' : "degdist_{graph}_{direction}_{fingerprint}.tsv",
    'chart' : "degdist_{fingerprint}.html",
    'sweep' : "sweep_{param}_{task}_{fingerprint}.tsv",
    }

METRIC_DICT = {
    'reconstruct' : "reconstruction_precision",
    'linkpred' : "link_prediction_precision",
    }

METHOD_DICT = {
    'strap' : "Sparse transpose proximity, log, randomized SVD",
    'adj-svd' : "Randomized SVD of the 0/1 adjacency matrix",
    }

# 17 significant digits round-trips every float64
FLOAT_FORMAT = "%.17g"

QUIET = False


def set_quiet(quiet: bool) -> None:
    '''Silence status lines and progress bars for the rest of the run'''
    global QUIET
    QUIET = quiet


def log(message: str) -> None:
    '''Write a status line to stderr without tearing any live progress bar'''
    if not QUIET:
        tqdm.write(message, file=sys.stderr)


def progress(iterable=None, **kwargs):
    '''tqdm bar on stderr that honours the quiet switch'''
    return tqdm(iterable, disable=QUIET, file=sys.stderr, leave=False, **kwargs)


def fingerprint(alpha: float, eps: float, dim: int, seed: int) -> str:
    '''Config fingerprint carried by every output filename'''
    return f"a{alpha:g}_e{eps:g}_d{dim}_s{seed}"
