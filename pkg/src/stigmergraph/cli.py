"""Command-line front end.

Subcommands: run (execute a config file), sweep (Cartesian parameter grid),
replay (determinism check of a stored run), and one sugar subcommand per
engine (shortest-path, msa, wsd) exposing its parameters as flags.  All
value flags are strings fed through the same key = value pipeline as config
files, so a flag and a config line are interchangeable; flags win.

Exit codes: 0 on completion, including recorded extraction failure; 2 for
invalid configuration, with the message naming the offending field; 1 for
replay divergence and I/O failures.
"""

import argparse
import sys

from . import __version__
from .errors import ConfigError, ReplayDivergenceError, StigmergraphError
from .runner import SweepSpec, parse_config, read_config_file, replay, run, sweep

_COMMON_FLAGS = (("seed", "seed"), ("steps", "steps"), ("trials", "trials"),
                 ("snapshot_every", "snapshot_every"), ("out", "out"))

_ENGINE_FLAGS = {
    "shortest-path": (
        ("graph", "graph", "torus:R,C, tree:N[,seed], or a graph JSON file"),
        ("src", "src", "source vertex id"),
        ("dst", "dst", "destination vertex id"),
        ("ants", "ants", "colony size"),
        ("rho", "rho", "evaporation rate"),
        ("Q", "Q", "deposit quantum per retraced edge"),
        ("q0", "q0", "exploitation threshold"),
        ("gamma", "gamma", "pheromone attraction exponent"),
        ("floor", "floor", "minimum edge weight during selection"),
        ("tabu", "tabu", "tabu length: an int, or 'full' for the whole walk"),
    ),
    "msa": (
        ("input", "input", "factor file, one factor string per line"),
        ("seqs", "seqs", "inline factor strings, comma separated"),
        ("alpha", "alpha", "pheromone weight"),
        ("beta", "beta", "distance-heuristic weight"),
        ("q", "q", "conflict penalty per crossing edge"),
        ("Q", "Q", "deposit per crossed edge"),
        ("rho", "rho", "evaporation rate"),
        ("ants", "ants", "colony size (0 selects 2 per vertex)"),
        ("tabu", "tabu", "tabu length"),
        ("eps_norm", "eps_norm", "normalization guard"),
        ("target", "target", "expected solution column, 1-based (0 disables)"),
    ),
    "wsd": (
        ("tree", "tree", "tree JSON file, or synth:SEED[,words=N,senses=K,dim=D,planted=P]"),
        ("lam", "lambda", "ant life span in cycles"),
        ("eps", "epsilon", "production cost per ant"),
        ("delta", "delta", "pheromone evaporation rate"),
        ("eta", "eta", "attraction floor"),
        ("k", "k", "sigmoid steepness for nest production"),
        ("alpha_color", "alpha_color", "vector marking weight (0 selects 1/lambda)"),
        ("q_w", "q_w", "pheromone deposit per crossing"),
        ("s_bridge", "s_bridge", "similarity threshold for bridge building"),
        ("eps_bridge", "eps_bridge", "bridge eviction threshold"),
        ("fool_frac", "fool_frac", "cargo share surrendered at a fooling nest"),
        ("spawn_always", "spawn_always", "true: one birth per cycle; false: sigmoid-gated"),
        ("dim", "dim", "vector dimension for senseless trees"),
        ("target_word", "target_word", "word scored by the success column"),
        ("planted_tag", "planted_tag", "sense tag counted as a success when ranked first"),
    ),
}


def _add_common(sub):
    sub.add_argument("--config", metavar="FILE", help="flat key = value base config")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override any config key (repeatable)")
    sub.add_argument("--seed", metavar="U64")
    sub.add_argument("--steps", metavar="N")
    sub.add_argument("--trials", metavar="N")
    sub.add_argument("--snapshot-every", dest="snapshot_every", metavar="K")
    sub.add_argument("--out", metavar="DIR")
    sub.add_argument("--workers", type=int, default=1, metavar="N",
                     help="process pool size for sweeps")


def _add_engine_flags(sub, engine):
    for dest, key, help_text in _ENGINE_FLAGS[engine]:
        flag = "--" + key.replace("_", "-")
        sub.add_argument(flag, dest=dest, metavar="V", help=help_text)
    if engine == "wsd":
        sub.add_argument("--cycles", dest="steps", metavar="N",
                         help="alias for --steps")


def _collect(args, engine=None):
    pairs = {}
    if args.config:
        pairs.update(read_config_file(args.config))
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError("set", f"expected KEY=VALUE, got {item!r}")
        pairs[key.strip()] = value.strip()
    if engine:
        pairs["engine"] = engine
        for dest, key, _ in _ENGINE_FLAGS[engine]:
            value = getattr(args, dest, None)
            if value is not None:
                pairs[key] = value
    for dest, key in _COMMON_FLAGS:
        value = getattr(args, dest, None)
        if value is not None:
            pairs[key] = value
    return pairs


def _summarize(result):
    if result.trials:
        wins = sum(1 for rec in result.trials if rec["success"])
        print(f"trials: {wins}/{len(result.trials)} successful")
        for rec in result.trials:
            flag = "-" if rec["success"] is None else ("ok" if rec["success"] else "no")
            print(f"  trial {rec['trial']:3d} seed {rec['seed']:>20}  {flag}  {rec['detail']}")
    else:
        s = result.structure
        if result.extraction_error:
            print(f"extraction failed: {result.extraction_error}")
        elif s["kind"] == "path":
            print(f"path length {s['length']}: " + " ".join(str(v) for v in s["path"]))
        elif s["kind"] == "blocks":
            col = s["classification"]
            where = "unclassified" if col is None else f"solution column {col}"
            print(f"{len(s['blocks'])} blocks ({where}, "
                  f"{'compatible' if s['compatible'] else 'INCOMPATIBLE'})")
            for block in s["blocks"]:
                print("  {" + ", ".join(block) + "}")
        else:
            for line in s["text"]:
                print(f"  {line}")
        if result.success is not None:
            print(f"success: {'yes' if result.success else 'no'}")
    print(f"artifacts: {result.out_dir} ({result.wall_time:.2f}s)")


def _cmd_run(args, engine=None):
    result = run(parse_config(_collect(args, engine)))
    _summarize(result)
    return 0


def _cmd_sweep(args):
    pairs = _collect(args)
    grid = {}
    for item in args.param:
        key, sep, values = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError("param", f"expected KEY=V1,V2,..., got {item!r}")
        grid[key.strip()] = [v.strip() for v in values.split(",")]
    base = parse_config(pairs)
    spec = SweepSpec(base, grid, trials=int(pairs.get("trials", base.trials)),
                     budget=args.budget)
    out = args.out or base.out or None
    rows = sweep(spec, workers=args.workers, out=out, probe_points=args.probe_points)
    keys = list(spec.grid)
    for row in rows:
        cells = " ".join(f"{k}={row[k]}" for k in keys)
        sr = row["success_rate"]
        mc = row["mean_convergence"]
        st = row["structure_stability"]
        print(f"cell {row['cell']:3d} {cells}  success_rate="
              f"{'-' if sr is None else round(sr, 4)} mean_convergence="
              f"{'-' if mc is None else round(mc, 1)} structure_stability="
              f"{'-' if st is None else round(st, 4)}")
    if out:
        print(f"table: {out}/sweep.csv")
    return 0


def _cmd_replay(args):
    result = replay(args.result_dir)
    print(f"replay OK: metrics byte-identical "
          f"(engine={result.engine}, seed={result.seed}, {result.wall_time:.2f}s)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stigmergraph",
        description="Stigmergic ant-colony simulations: paths, alignment blocks, "
                    "sense activations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("run", help="execute a config file")
    _add_common(p)
    p.set_defaults(func=_cmd_run)

    p = subs.add_parser("sweep", help="run a parameter grid and summarize each cell")
    _add_common(p)
    p.add_argument("--param", action="append", default=[], metavar="KEY=V1,V2,...",
                   help="grid axis (repeatable)")
    p.add_argument("--budget", type=int, default=10000, metavar="N",
                   help="maximum cells x trials (default 10000)")
    p.add_argument("--probe-points", dest="probe_points", type=int, default=20,
                   metavar="N", help="structure checkpoints per run (default 20)")
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("replay", help="re-execute a stored run and compare metrics")
    p.add_argument("result_dir", help="directory written by a previous run")
    p.set_defaults(func=_cmd_replay)

    for engine in _ENGINE_FLAGS:
        p = subs.add_parser(engine, help=f"run the {engine} engine")
        _add_common(p)
        _add_engine_flags(p, engine)
        p.set_defaults(func=_cmd_run, engine=engine)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "engine", None):
            return args.func(args, args.engine)
        return args.func(args)
    except ReplayDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StigmergraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
