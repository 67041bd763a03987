"""Command-line entry point: embed graphs, evaluate embeddings, query PPR"""

# Standard library imports
import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List

# Third-party imports
import numpy as np
import pandas as pd

# Local imports
from evaluate import (degree_spearman, parameter_sweep, plot_degree_distributions,
                      reconstructed_degree_histograms, reconstruction_precision, repeat_link_prediction)
from factorize import EmbeddingPair, read_embeddings, write_embeddings
from graph import Graph, GraphKind, load_edge_list
from pipeline import run_method
from ppr import PprParams, backward_push, exact_ppr_column
from proximity import StrapConfig
from utils import DEFAULT_DICT, FLOAT_FORMAT, METHOD_DICT, METRIC_DICT, OUTPUT_DICT, STAGE_DICT, log, set_quiet


@dataclass
class RunManifest:
    """Sidecar record of one embed run"""
    config: StrapConfig
    input_path: str
    kind: GraphKind
    n: int
    m: int
    timings: Dict[str, float]
    total_seconds: float
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        record: Dict[str, object] = dict(self.config.to_dict())
        record.update({
            "input": self.input_path,
            "kind": self.kind.value,
            "n": self.n,
            "m": self.m,
        })
        for stage in STAGE_DICT:
            record[f"time_{stage}"] = self.timings.get(stage, 0.0)
        record["time_total"] = self.total_seconds
        for i, path in enumerate(self.outputs):
            record[f"output_{i}"] = path
        return record

    def write(self, path: str) -> None:
        pd.Series(self.to_dict()).to_csv(path, sep='\t', header=False)

    @classmethod
    def read(cls, path: str) -> 'RunManifest':
        """
        Parse a manifest written by RunManifest.write

        Raises:
            ValueError: If a required key is missing
        """
        record = pd.read_csv(path, sep='\t', header=None, index_col=0, dtype=str,
                             keep_default_na=False).iloc[:, 0].to_dict()
        try:
            config = StrapConfig(
                alpha=float(record["alpha"]),
                eps=float(record["eps"]),
                dim=int(record["dim"]),
                seed=int(record["seed"]),
                svd_oversample=int(record["svd_oversample"]),
                svd_power_iters=int(record["svd_power_iters"]),
                transpose=record["transpose"] == "True",
                method=record["method"],
            )
            return cls(
                config=config,
                input_path=record["input"],
                kind=GraphKind(record["kind"]),
                n=int(record["n"]),
                m=int(record["m"]),
                timings={stage: float(record[f"time_{stage}"]) for stage in STAGE_DICT},
                total_seconds=float(record["time_total"]),
                outputs=[value for key, value in record.items() if key.startswith("output_")],
            )
        except KeyError as e:
            raise ValueError(f"Manifest {path} is missing field {e}") from e


def embedding_path(output: str, input_path: str, config: StrapConfig) -> str:
    '''An existing directory gets a fingerprinted filename; anything else is used as given'''
    if not os.path.isdir(output):
        return output
    stem = os.path.splitext(os.path.basename(input_path))[0]
    return os.path.join(output, OUTPUT_DICT['embedding'].format(stem=stem, fingerprint=config.fingerprint))


def embedding_tag(embedding: str) -> str:
    '''Config fingerprint from the embedding's manifest, else the embedding file stem'''
    manifest_path = OUTPUT_DICT['manifest'].format(embedding=embedding)
    if os.path.exists(manifest_path):
        return RunManifest.read(manifest_path).config.fingerprint
    return os.path.splitext(os.path.basename(embedding))[0]


def align_embeddings(g: Graph, emb: EmbeddingPair) -> EmbeddingPair:
    """
    Reorder embedding rows into the graph's dense node order

    Raises:
        ValueError: If the embedding covers a different node set
    """
    if emb.n != g.n:
        raise ValueError(f"Embedding has {emb.n} nodes but the graph has {g.n}")
    order = np.argsort(emb.node_ids, kind="stable")
    if not np.array_equal(emb.node_ids[order], g.node_ids):
        raise ValueError("Embedding node ids do not match the graph's node ids")
    return EmbeddingPair(source=emb.source[order], target=emb.target[order],
                         config=emb.config, node_ids=g.node_ids)


def write_metrics(path: str, rows: Dict[str, float]) -> None:
    pd.DataFrame({"metric": list(rows.keys()), "value": list(rows.values())}).to_csv(
        path, sep='\t', header=False, index=False, float_format=FLOAT_FORMAT)
    log(f"Wrote {path}")


def cmd_embed(args: argparse.Namespace) -> int:
    """Run the pipeline and write the embedding file plus its manifest"""
    started = time.perf_counter()
    config = StrapConfig.from_args(args)
    kind = GraphKind(args.kind)
    g = load_edge_list(args.input, kind)
    emb, timings = run_method(g, config, threads=args.threads)

    path = embedding_path(args.output, args.input, config)
    write_embeddings(emb, path)
    manifest_path = OUTPUT_DICT['manifest'].format(embedding=path)
    manifest = RunManifest(config=config, input_path=args.input, kind=kind,
                           n=g.n, m=g.m, timings=timings,
                           total_seconds=time.perf_counter() - started, outputs=[path])
    manifest.write(manifest_path)
    log(f"Wrote {path} and {manifest_path}")
    return 0


def _eval_reconstruct(args: argparse.Namespace, g: Graph) -> int:
    emb = align_embeddings(g, read_embeddings(args.embedding))
    precision = reconstruction_precision(g, emb, threads=args.threads)
    name = METRIC_DICT['reconstruct']
    tag = embedding_tag(args.embedding)
    write_metrics(os.path.join(args.output_dir, OUTPUT_DICT['metric'].format(metric=name, fingerprint=tag)),
                  {name: precision})
    print(f"{name}\t{precision}")
    return 0


def _eval_linkpred(args: argparse.Namespace, g: Graph) -> int:
    config = StrapConfig.from_args(args)
    results = repeat_link_prediction(g, config, args.ratio, args.seed, args.repeats, threads=args.threads)
    series = pd.Series(results)
    mean = float(series.mean())
    std = float(series.std()) if len(series) > 1 else 0.0

    name = METRIC_DICT['linkpred']
    rows = {f"{name}_seed{args.seed + i}": value for i, value in enumerate(results)}
    rows.update({name: mean, f"{name}_std": std})
    write_metrics(os.path.join(args.output_dir,
                               OUTPUT_DICT['metric'].format(metric=name, fingerprint=config.fingerprint)), rows)
    print(f"{name}\t{mean}")
    print(f"{name}_std\t{std}")
    return 0


def _eval_degdist(args: argparse.Namespace, g: Graph) -> int:
    emb = align_embeddings(g, read_embeddings(args.embedding))
    table = reconstructed_degree_histograms(g, emb, threads=args.threads)
    tag = embedding_tag(args.embedding)
    for (name, direction), frame in table.groupby(["graph", "direction"]):
        path = os.path.join(args.output_dir, OUTPUT_DICT['degree'].format(
            graph=name, direction=direction, fingerprint=tag))
        frame[["degree", "count"]].to_csv(path, sep='\t', header=False, index=False)
        log(f"Wrote {path}")
    chart_path = os.path.join(args.output_dir, OUTPUT_DICT['chart'].format(fingerprint=tag))
    plot_degree_distributions(table, chart_path)
    log(f"Wrote {chart_path}")
    for direction in ("out", "in"):
        print(f"{direction}_degree_spearman\t{degree_spearman(g, emb, direction, threads=args.threads)}")
    return 0


def _eval_sweep(args: argparse.Namespace, g: Graph) -> int:
    config = StrapConfig.from_args(args)
    seeds = [args.seed + i for i in range(args.repeats)]
    table = parameter_sweep(g, config, args.param, args.values, args.task, seeds,
                            ratio=args.ratio, threads=args.threads)
    path = os.path.join(args.output_dir, OUTPUT_DICT['sweep'].format(
        param=args.param, task=args.task, fingerprint=config.fingerprint))
    table.to_csv(path, sep='\t', index=False, float_format=FLOAT_FORMAT)
    log(f"Wrote {path}")
    for value, frame in table.groupby("value", sort=False):
        print(f"{METRIC_DICT[args.task]}[{args.param}={value:g}]\t{frame['metric'].mean()}")
    return 0


EVAL_COMMANDS = {
    "reconstruct": _eval_reconstruct,
    "linkpred": _eval_linkpred,
    "degdist": _eval_degdist,
    "sweep": _eval_sweep,
}


def cmd_eval(args: argparse.Namespace) -> int:
    """Run one evaluation protocol and print its headline numbers as metric\\tvalue"""
    g = load_edge_list(args.input, GraphKind(args.kind))
    os.makedirs(args.output_dir, exist_ok=True)
    return EVAL_COMMANDS[args.eval_command](args, g)


def cmd_ppr(args: argparse.Namespace) -> int:
    """Print the sparse reserves pi(u, v) of one backward push, sorted by u"""
    g = load_edge_list(args.input, GraphKind(args.kind))
    v = g.index_of(args.target)
    params = PprParams(alpha=args.alpha, r_max=args.rmax)
    result = backward_push(g, v, params)
    exact = exact_ppr_column(g, v, args.alpha, args.tol) if args.oracle else None

    for u, value in zip(result.reserve_nodes, result.reserve_values):
        line = f"{g.node_ids[u]} {value:.17g}"
        if exact is not None:
            line += f" {exact[u]:.17g}"
        print(line)
    if exact is not None:
        deviation = float(np.max(np.abs(exact - result.dense_reserves(g.n))))
        print(f"max_deviation\t{deviation:.17g}")
    log(f"{result.pushes} pushes")
    return 0


def _add_graph_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="Edge-list file, one 'u v' pair per line")
    kind = parser.add_mutually_exclusive_group(required=True)
    kind.add_argument("--directed", dest="kind", action="store_const", const=GraphKind.DIRECTED.value)
    kind.add_argument("--undirected", dest="kind", action="store_const", const=GraphKind.UNDIRECTED.value)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=DEFAULT_DICT['alpha'], help="Decay factor")
    parser.add_argument("--eps", type=float, default=DEFAULT_DICT['eps'], help="Error parameter")
    parser.add_argument("--dim", type=int, default=DEFAULT_DICT['dim'], help="Embedding dimension")
    parser.add_argument("--seed", type=int, default=DEFAULT_DICT['seed'], help="Random seed")
    parser.add_argument("--oversample", type=int, default=DEFAULT_DICT['svd_oversample'],
                        help="Randomized SVD oversampling")
    parser.add_argument("--power-iters", type=int, default=DEFAULT_DICT['svd_power_iters'],
                        help="Randomized SVD subspace iterations")
    parser.add_argument("--method", choices=list(METHOD_DICT), default="strap",
                        help="Embedding method; adj-svd factorizes the raw adjacency matrix")
    parser.add_argument("--no-transpose", action="store_true",
                        help="Skip the G^T pass (single-sided PPR ablation)")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="Worker threads for pushes, SVD products and scoring")
    parser.add_argument("--quiet", action="store_true", help="No progress bars or status lines")


def build_parser() -> argparse.ArgumentParser:
    argParser = argparse.ArgumentParser(description="Graph embedding via sparse transpose proximities")
    commands = argParser.add_subparsers(dest="command", required=True)

    embed = commands.add_parser("embed", help="Embed a graph")
    _add_graph_flags(embed)
    _add_config_flags(embed)
    _add_run_flags(embed)
    embed.add_argument("--output", required=True,
                       help="Embedding file, or an existing directory for a fingerprinted name")
    embed.set_defaults(func=cmd_embed)

    evaluate = commands.add_parser("eval", help="Evaluate embeddings")
    protocols = evaluate.add_subparsers(dest="eval_command", required=True)
    for name in ("reconstruct", "degdist"):
        protocol = protocols.add_parser(name)
        _add_graph_flags(protocol)
        _add_run_flags(protocol)
        protocol.add_argument("--embedding", required=True, help="Embedding file written by embed")
        protocol.add_argument("--output-dir", default=".", help="Directory for TSV outputs")
        protocol.set_defaults(func=cmd_eval)
    for name in ("linkpred", "sweep"):
        protocol = protocols.add_parser(name)
        _add_graph_flags(protocol)
        _add_config_flags(protocol)
        _add_run_flags(protocol)
        protocol.add_argument("--ratio", type=float, default=DEFAULT_DICT['ratio'], help="Training edge share")
        protocol.add_argument("--repeats", type=int, default=DEFAULT_DICT['repeats'],
                              help="Runs with seeds seed .. seed+repeats-1")
        protocol.add_argument("--output-dir", default=".", help="Directory for TSV outputs")
        protocol.set_defaults(func=cmd_eval)
    sweep = protocols.choices["sweep"]
    sweep.add_argument("--param", required=True, choices=("alpha", "eps", "dim", "ratio"))
    sweep.add_argument("--values", required=True, type=float, nargs="+")
    sweep.add_argument("--task", required=True, choices=("reconstruct", "linkpred"))

    ppr = commands.add_parser("ppr", help="Backward push query for one target node")
    _add_graph_flags(ppr)
    ppr.add_argument("--target", type=int, required=True, help="Target node (original id)")
    ppr.add_argument("--alpha", type=float, default=DEFAULT_DICT['alpha'], help="Decay factor")
    ppr.add_argument("--rmax", type=float, required=True, help="Push threshold")
    ppr.add_argument("--oracle", action="store_true", help="Also print exact PPR and the max deviation")
    ppr.add_argument("--tol", type=float, default=1e-12, help="Oracle tolerance")
    ppr.add_argument("--quiet", action="store_true", help="No status lines")
    ppr.set_defaults(func=cmd_ppr)
    return argParser


def main(argv) -> int:
    args = build_parser().parse_args(argv)
    set_quiet(args.quiet)
    try:
        return args.func(args)
    except (ValueError, IndexError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
