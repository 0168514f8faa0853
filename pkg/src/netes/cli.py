"""Command-line interface.

Subcommands:
    netes run <config.json> [...]   train with one or more experiment configs
    netes scatter <config.json>     family reachability/homogeneity scatter
    netes bound-sweep <config.json> random-instance variance-bound sweep
    netes graph gen ...             generate a graph to an edge-list file
    netes graph stats <path>        degree and metric statistics of a graph
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import diagnostics, harness, metrics, topology
from .harness import ConfigError
from .topology import GraphFamily


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def _cmd_run(args: argparse.Namespace) -> int:
    batches = []
    outdir = None
    for path in args.config:
        config = harness.load_config(path)
        if args.preset:
            config = harness.apply_preset(config, args.preset)
        if args.seeds:
            config.seeds = list(args.seeds)
        if args.out:
            config.output_dir = args.out
        if outdir is None:
            outdir = config.output_dir
        results = harness.run_experiment(config, threads=args.threads)
        batches.append((config, results))
        for r in results:
            status = (
                f"error: {r.error}"
                if r.error
                else f"final={r.final_metric!r} iters={len(r.records)}"
                + (" (plateau)" if r.stopped_at_plateau else "")
            )
            print(f"[{config.name}] seed {r.seed}: {status}")
    written = harness.emit_outputs(batches, outdir)
    print(f"wrote {len(written)} file(s) under {outdir}")
    return 0


def _cmd_scatter(args: argparse.Namespace) -> int:
    data = _load_json(args.config)
    allowed = {"n", "density", "samples_per_family", "seed", "families", "output"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"scatter config: unknown key(s) {sorted(unknown)}")
    families = tuple(
        GraphFamily(f) for f in data.get("families", [f.value for f in metrics.SCATTER_FAMILIES])
    )
    points = metrics.family_scatter(
        n=int(data.get("n", 100)),
        density=float(data.get("density", 0.5)),
        samples_per_family=int(data.get("samples_per_family", 50)),
        seed=int(data.get("seed", 0)),
        families=families,
    )
    output = args.out or data.get("output", "scatter.csv")
    metrics.write_scatter_csv(points, output)
    print(f"wrote {len(points)} scatter points to {output}")
    return 0


def _cmd_bound_sweep(args: argparse.Namespace) -> int:
    data = _load_json(args.config)
    allowed = {"instances", "seed", "n_range", "d_range", "density_range", "output"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"bound-sweep config: unknown key(s) {sorted(unknown)}")
    records = diagnostics.bound_sweep(
        num_instances=int(data.get("instances", 1000)),
        seed=int(data.get("seed", 0)),
        n_range=tuple(data.get("n_range", (6, 40))),
        d_range=tuple(data.get("d_range", (1, 8))),
        density_range=tuple(data.get("density_range", (0.3, 0.9))),
    )
    output = args.out or data.get("output", "bound_sweep.csv")
    diagnostics.write_sweep_csv(records, output)
    held = sum(r.report.holds for r in records)
    print(f"bound held on {held}/{len(records)} instances; wrote {output}")
    return 0 if held == len(records) else 1


def _graph_params(args: argparse.Namespace, family: GraphFamily, n: int) -> dict:
    explicit = {
        key: getattr(args, key)
        for key in ("p", "k", "beta", "m")
        if getattr(args, key) is not None
    }
    if explicit:
        return explicit
    return topology.params_for_density(family, n, args.density)


def _cmd_graph_gen(args: argparse.Namespace) -> int:
    family = GraphFamily(args.family)
    params = _graph_params(args, family, args.n)
    if args.connected:
        g = topology.sample_connected(
            family, args.n, params, args.seed, args.max_attempts
        )
    else:
        g = topology.generate(family, args.n, params, args.seed)
    topology.save_edge_list(g, args.out)
    print(
        f"wrote {g.family.value} graph: n={g.n} edges={g.edge_count} "
        f"connected={topology.is_connected(g)} -> {args.out}"
    )
    return 0


def _cmd_graph_stats(args: argparse.Namespace) -> int:
    g = topology.load_edge_list(args.path)
    stats = topology.degree_stats(g)
    print(f"family={g.family.value} n={g.n} edges={g.edge_count} seed={g.seed}")
    print(
        f"degrees: min={stats.min_degree} max={stats.max_degree} "
        f"mean={stats.mean_degree:.3f}"
    )
    if topology.is_connected(g):
        print(f"reachability={metrics.reachability(g):.6g}")
        print(f"homogeneity={metrics.homogeneity(g):.6g}")
    else:
        print("graph is disconnected; reachability/homogeneity undefined")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netes",
        description="Networked evolution strategies over communication graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run experiment configs")
    run.add_argument("config", nargs="+", help="experiment JSON file(s)")
    run.add_argument("--seeds", type=int, nargs="+", help="override config seeds")
    run.add_argument("--out", help="override output directory")
    run.add_argument("--threads", type=int, default=1, help="parallel seed jobs")
    run.add_argument("--preset", choices=harness.PRESETS, help="ablation preset")
    run.set_defaults(func=_cmd_run)

    scatter = sub.add_parser("scatter", help="family metric scatter CSV")
    scatter.add_argument("config", help="scatter JSON file")
    scatter.add_argument("--out", help="override output CSV path")
    scatter.set_defaults(func=_cmd_scatter)

    sweep = sub.add_parser("bound-sweep", help="variance-bound random sweep")
    sweep.add_argument("config", help="sweep JSON file")
    sweep.add_argument("--out", help="override output CSV path")
    sweep.set_defaults(func=_cmd_bound_sweep)

    graph = sub.add_parser("graph", help="graph utilities")
    graph_sub = graph.add_subparsers(dest="graph_command", required=True)

    gen = graph_sub.add_parser("gen", help="generate a graph edge list")
    gen.add_argument("--family", required=True, choices=[f.value for f in GraphFamily])
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--density", type=float, default=0.5)
    gen.add_argument("--p", type=float, help="edge probability (erdos_renyi)")
    gen.add_argument("--k", type=int, help="ring degree (small_world)")
    gen.add_argument("--beta", type=float, help="rewiring probability (small_world)")
    gen.add_argument("--m", type=int, help="attachment count (scale_free)")
    gen.add_argument("--connected", action="store_true", help="resample until connected")
    gen.add_argument("--max-attempts", type=int, default=100)
    gen.add_argument("--out", required=True, help="edge-list output path")
    gen.set_defaults(func=_cmd_graph_gen)

    stats = graph_sub.add_parser("stats", help="print graph statistics")
    stats.add_argument("path", help="edge-list file")
    stats.set_defaults(func=_cmd_graph_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, topology.TopologyError, topology.ConnectivityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
