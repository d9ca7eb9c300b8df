"""Seeded run orchestration: config files, artifact directories, sweeps, replay.

A run is a pure function of (config, seed).  This module materializes that
contract as an output directory: the full config echoed back (defaults
included, so results are self-describing), a metrics CSV with a fixed
per-engine header, DOT+JSON snapshots at a chosen cadence plus the final
state, and a result.json whose "run" object is byte-reproducible; wall time
lives outside it.  replay() re-executes a stored directory and compares the
metrics CSV byte for byte, so any determinism regression surfaces as
ReplayDivergenceError.

Config files are flat ``key = value`` text.  Blank lines and lines starting
with '#' are ignored; keys are case-sensitive (``Q`` is the deposit quantum,
``q`` the conflict penalty).  ``cycles``/``steps``, ``lambda``/``lam`` and
``epsilon``/``eps`` are aliases.  steps left at 0 selects the engine's size
rule (200 per vertex for alignment, 200 per life span for disambiguation).

Fixed metrics CSV headers:
  shortest-path  step,moves,blocked,total_pheromone,goal_hits,extracted_length,deposited
  msa            step,moves,blocked,total_pheromone,net_deposit
  wsd            cycle,moves,blocked,total_pheromone,alive,total_resource,bridges,births

Sweeps execute a Cartesian parameter grid with per-trial seeds
derive_seed(base_seed, cell_index, trial_index) and summarize each cell with
an engine-defined success rate (optimal-path rate, target-classification
rate, or planted-sense rate), the mean convergence step, and a
structure-stability fraction.  Stability has no canonical definition for
these systems; the proxy used here is the share of trailing-half probe
points whose extracted structure equals the final one, and the column is
named structure_stability to flag it as such.  Cells and trials may run on
worker processes; every worker builds its own engine instance and results
merge by cell index, so execution order never changes a number.
"""

import hashlib
import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed

from .colony import EngineParams
from .errors import ConfigError, OracleSizeError, ReplayDivergenceError
from .graph import make_random_tree, make_torus
from .graphio import export_dot, export_json, import_json
from .msa import (
    MsaParams,
    build_alignment_graph,
    classify_solution,
    enumerate_maximal_compatible,
    extract_blocks,
    is_compatible,
    parse_factor_sequences,
    run_msa,
)
from .rng import derive_seed
from .shortest_path import (
    PATH_COLOR,
    PathTask,
    bfs_shortest_length,
    extract_path,
    run_path_task,
)
from .wsd import THEMATIC_SIMILARITY, WsdParams, build_environment, load_tree, run_wsd, synth_corpus

ENGINES = ("shortest-path", "msa", "wsd")

_HEADERS = {
    "shortest-path": ("step", "moves", "blocked", "total_pheromone",
                      "goal_hits", "extracted_length", "deposited"),
    "msa": ("step", "moves", "blocked", "total_pheromone", "net_deposit"),
    "wsd": ("cycle", "moves", "blocked", "total_pheromone", "alive",
            "total_resource", "bridges", "births"),
}

_COMMON_SCHEMA = (
    ("seed", "u64", 0),
    ("steps", "int", None),  # per-engine default, see _STEP_DEFAULT
    ("snapshot_every", "int", 0),
    ("trials", "int", 1),
    ("out", "str", ""),
)

_STEP_DEFAULT = {"shortest-path": 2000, "msa": 0, "wsd": 0}

_SCHEMAS = {
    "shortest-path": (
        ("graph", "str", ""),
        ("src", "int", -1),
        ("dst", "int", -1),
        ("ants", "int", 100),
        ("rho", "float", 0.03),
        ("Q", "float", 1.0),
        ("q0", "float", 0.6),
        ("gamma", "float", 0.0),
        ("floor", "float", 1e-6),
        ("tabu", "tabu", None),
    ),
    "msa": (
        ("input", "str", ""),
        ("seqs", "str", ""),
        ("alpha", "float", 1.0),
        ("beta", "float", 3.0),
        ("q", "float", 1.0),
        ("Q", "float", 1.0),
        ("rho", "float", 0.03),
        ("ants", "int", 0),
        ("tabu", "int", 2),
        ("eps_norm", "float", 1.0),
        ("target", "int", 0),
    ),
    "wsd": (
        ("tree", "str", ""),
        ("lam", "int", 20),
        ("eps", "float", 0.05),
        ("delta", "float", 0.02),
        ("eta", "float", 1e-3),
        ("k", "float", 1.0),
        ("alpha_color", "float", 0.0),
        ("q_w", "float", 1.0),
        ("s_bridge", "float", THEMATIC_SIMILARITY),
        ("eps_bridge", "float", 1e-6),
        ("fool_frac", "float", 1.0),
        ("spawn_always", "bool", True),
        ("dim", "int", 64),
        ("target_word", "str", "target"),
        ("planted_tag", "str", "s0"),
    ),
}

_ALIASES = {"cycles": "steps", "lambda": "lam", "epsilon": "eps"}

# keys a sweep grid may not vary: they select the experiment, not the system
_UNSWEEPABLE = {"engine", "seed", "out", "trials", "snapshot_every"}


def _parse_value(key, kind, raw):
    raw = raw.strip() if isinstance(raw, str) else raw
    try:
        if kind in ("int", "u64"):
            v = int(raw)
        elif kind == "float":
            v = float(raw)
        elif kind == "bool":
            if isinstance(raw, bool):
                return raw
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        elif kind == "tabu":
            if isinstance(raw, str) and raw.lower() in ("full", "none", ""):
                return None
            v = int(raw)
            if v < 0:
                raise ValueError(raw)
            return v
        else:
            return raw if isinstance(raw, str) else str(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot parse {raw!r} as {kind}") from None
    if kind == "u64" and v < 0:
        raise ConfigError(key, f"{v} must be >= 0")
    return v


def _canon(kind, value):
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    if kind == "tabu":
        return "full" if value is None else str(value)
    return str(value)


class RunConfig:
    """One validated run request with a canonical textual echo."""

    __slots__ = ("engine", "values")

    def __init__(self, engine, values):
        self.engine = engine
        self.values = values

    @property
    def seed(self):
        return self.values["seed"]

    @property
    def steps(self):
        return self.values["steps"]

    @property
    def snapshot_every(self):
        return self.values["snapshot_every"]

    @property
    def trials(self):
        return self.values["trials"]

    @property
    def out(self):
        return self.values["out"]

    def schema(self):
        return _COMMON_SCHEMA + _SCHEMAS[self.engine]

    def to_map(self):
        """Flat str -> str mapping that parses back to an equal config."""
        m = {"engine": self.engine}
        for key, kind, _ in self.schema():
            m[key] = _canon(kind, self.values[key])
        return m

    def echo(self):
        """Canonical key = value text, every default included."""
        m = self.to_map()
        lines = [f"{k} = {m[k]}" for k in m]
        return "\n".join(lines) + "\n"

    def replace(self, **overrides):
        """A new config with the given canonical-string overrides applied."""
        m = self.to_map()
        for k, v in overrides.items():
            m[k] = v
        return parse_config(m)


def parse_config(mapping):
    """Build a RunConfig from a flat string mapping; names the bad field."""
    pending = {}
    for key, raw in mapping.items():
        key = _ALIASES.get(key.strip(), key.strip())
        if key in pending:
            raise ConfigError(key, "given more than once (alias collision)")
        pending[key] = raw
    engine = pending.pop("engine", None)
    if engine is None:
        raise ConfigError("engine", "required")
    engine = str(engine).strip()
    if engine not in ENGINES:
        raise ConfigError("engine", f"unknown engine {engine!r}; pick one of {', '.join(ENGINES)}")
    values = {}
    for key, kind, default in _COMMON_SCHEMA + _SCHEMAS[engine]:
        if key in pending:
            values[key] = _parse_value(key, kind, pending.pop(key))
        elif key == "steps":
            values[key] = _STEP_DEFAULT[engine]
        else:
            values[key] = default
    if pending:
        bad = sorted(pending)[0]
        raise ConfigError(bad, f"unknown key for engine {engine}")
    if values["steps"] < 0:
        raise ConfigError("steps", f"{values['steps']} must be >= 0")
    if values["snapshot_every"] < 0:
        raise ConfigError("snapshot_every", f"{values['snapshot_every']} must be >= 0")
    if values["trials"] < 1:
        raise ConfigError("trials", f"{values['trials']} must be >= 1")
    return RunConfig(engine, values)


def read_config_file(path):
    """Flat key = value file -> string mapping; '#' lines are comments."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError("config", f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("config", f"line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(key, f"line {lineno}: duplicate key")
        pairs[key] = value.strip()
    return pairs


def load_config(path, overrides=None):
    """Parse a config file and apply string overrides on top."""
    pairs = read_config_file(path)
    if overrides:
        pairs.update(overrides)
    return parse_config(pairs)


# -- engine adapters -----------------------------------------------------------


def _build_graph(spec, field="graph"):
    """Environment graph from 'torus:R,C', 'tree:N[,seed]', or a JSON file."""
    if spec.startswith("torus:"):
        body = spec[len("torus:"):]
        try:
            rows, cols = (int(x) for x in body.split(","))
        except ValueError:
            raise ConfigError(field, f"torus spec needs 'torus:R,C', got {spec!r}") from None
        return make_torus(rows, cols)
    if spec.startswith("tree:"):
        body = spec[len("tree:"):]
        parts = body.split(",")
        try:
            n = int(parts[0])
            gseed = int(parts[1]) if len(parts) > 1 else 0
            if len(parts) > 2:
                raise ValueError(body)
        except ValueError:
            raise ConfigError(field, f"tree spec needs 'tree:N[,seed]', got {spec!r}") from None
        return make_random_tree(n, gseed)
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(field, f"cannot read {spec!r}: {exc}") from None
    return import_json(text)


def _resolve_tree(spec, field="tree"):
    """Syntax tree from 'synth:SEED[,words=N,senses=K,dim=D,planted=P]' or a JSON file."""
    if spec.startswith("synth:"):
        body = spec[len("synth:"):]
        parts = body.split(",") if body else [""]
        kw = {"n_words": 6, "n_senses": 2, "dim": 64, "planted": 0}
        names = {"words": "n_words", "senses": "n_senses", "dim": "dim", "planted": "planted"}
        try:
            seed = int(parts[0])
            for part in parts[1:]:
                name, _, value = part.partition("=")
                kw[names[name.strip()]] = int(value)
        except (KeyError, ValueError):
            raise ConfigError(
                field,
                f"synth spec needs 'synth:SEED[,words=N,senses=K,dim=D,planted=P]', got {spec!r}",
            ) from None
        return synth_corpus(seed, **kw)
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(field, f"cannot read {spec!r}: {exc}") from None
    return load_tree(text)


def _key(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _block_labels(blocks):
    return sorted(sorted(fv.label for fv in b) for b in blocks)


def _prep_shortest_path(cfg):
    v = cfg.values
    if not v["graph"]:
        raise ConfigError("graph", "required")
    if v["src"] < 0:
        raise ConfigError("src", "required (vertex id)")
    if v["dst"] < 0:
        raise ConfigError("dst", "required (vertex id)")
    spec = v["graph"]

    def params_for(seed):
        return EngineParams(rho=v["rho"], Q=v["Q"], q0=v["q0"], gamma=v["gamma"],
                            floor=v["floor"], tabu_size=v["tabu"], seed=seed)

    g0 = _build_graph(spec)
    PathTask(g0, v["src"], v["dst"], v["ants"], v["steps"], params_for(0))
    oracle = bfs_shortest_length(g0, v["src"], v["dst"])

    def probe(g):
        color = g.ensure_color(PATH_COLOR)
        path = extract_path(g, v["src"], v["dst"], color)
        return _key(list(path) if path else None)

    def execute(seed, snapshot_every=0, on_snapshot=None):
        g = _build_graph(spec)
        task = PathTask(g, v["src"], v["dst"], v["ants"], v["steps"], params_for(seed))
        res = run_path_task(task, snapshot_every=snapshot_every, on_snapshot=on_snapshot)
        path = list(res.path) if res.path else None
        length = len(path) - 1 if path else None
        structure = {"kind": "path", "path": path, "length": length,
                     "first_goal": res.first_goal}
        success = None if oracle is None else bool(path and length == oracle)
        error = None if path else "no path extracted"
        detail = "" if length is None else str(length)
        return res.metrics, structure, _key(path), success, error, detail, g

    return {"total": v["steps"], "probe": probe, "execute": execute}


def _prep_msa(cfg):
    v = cfg.values
    if v["input"] and v["seqs"]:
        raise ConfigError("seqs", "give either input or seqs, not both")
    if v["input"]:
        try:
            with open(v["input"], "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("input", f"cannot read {v['input']!r}: {exc}") from None
    elif v["seqs"]:
        text = "\n".join(s.strip() for s in v["seqs"].split(","))
    else:
        raise ConfigError("input", "required (factor file path, or inline seqs)")
    if v["target"] < 0:
        raise ConfigError("target", f"{v['target']} must be >= 0 (0 disables)")
    seqs = parse_factor_sequences(text)
    align0 = build_alignment_graph(seqs)

    def params_for(seed):
        return MsaParams(alpha=v["alpha"], beta=v["beta"], q=v["q"], Q=v["Q"],
                         rho=v["rho"], n_ants=v["ants"], steps=v["steps"],
                         tabu_size=v["tabu"], eps_norm=v["eps_norm"], seed=seed)

    total = params_for(0).sized(align0.n_vertices)[1]
    target = v["target"]

    def probe(g):
        tau = {eid: g.edges[eid].pheromone.get(align0.color, 0.0)
               for eid in align0.graph.edges}
        return _key(_block_labels(extract_blocks(align0, tau)))

    def execute(seed, snapshot_every=0, on_snapshot=None):
        res = run_msa(seqs, params_for(seed), snapshot_every=snapshot_every,
                      on_snapshot=on_snapshot)
        labels = _block_labels(res.blocks)
        try:
            candidates = enumerate_maximal_compatible(res.align)
            idx = classify_solution(res.blocks, candidates)
            column = None if idx is None else idx + 1
            oracle_ok = True
        except OracleSizeError:
            column = None
            oracle_ok = False
        structure = {"kind": "blocks", "blocks": labels,
                     "compatible": is_compatible(res.blocks),
                     "classification": column}
        if target:
            success = (column == target) if oracle_ok else None
        else:
            success = (column is not None) if oracle_ok else None
        error = None if labels else "empty block set"
        detail = "" if column is None else str(column)
        return res.metrics, structure, _key(labels), success, error, detail, res.align.graph

    return {"total": total, "probe": probe, "execute": execute}


def _prep_wsd(cfg):
    v = cfg.values
    if not v["tree"]:
        raise ConfigError("tree", "required")
    tree = _resolve_tree(v["tree"])

    def params_for(seed):
        return WsdParams(lam=v["lam"], eps=v["eps"], delta=v["delta"], eta=v["eta"],
                         k=v["k"], alpha_color=v["alpha_color"], Q_w=v["q_w"],
                         s_bridge=v["s_bridge"], eps_bridge=v["eps_bridge"],
                         fool_frac=v["fool_frac"], spawn_always=v["spawn_always"],
                         dim=v["dim"], cycles=v["steps"], seed=seed)

    total = params_for(0).sized()
    env0 = build_environment(tree, params_for(0).dim)
    word_nests = []
    for w in range(len(env0.words)):
        nests = [(env0.nests[k].vid, env0.nests[k].tag) for k in env0.word_nests(w)]
        word_nests.append((env0.words[w].surface, nests))
    target_w = None
    surfaces = [surface for surface, _ in word_nests]
    if surfaces.count(v["target_word"]) == 1:
        target_w = surfaces.index(v["target_word"])

    def rankings_from(levels):
        ranks = []
        for _, nests in word_nests:
            pos = [(tag, levels(vid)) for vid, tag in nests]
            pos = [(tag, r) for tag, r in pos if r > 0.0]
            pos.sort(key=lambda pair: -pair[1])  # stable: nest order breaks ties
            ranks.append([tag for tag, _ in pos])
        return ranks

    def probe(g):
        return _key(rankings_from(lambda vid: g.vertices[vid].attrs.get("resource", 0.0)))

    def execute(seed, snapshot_every=0, on_snapshot=None):
        res = run_wsd(tree, params_for(seed), snapshot_every=snapshot_every,
                      on_snapshot=on_snapshot)
        rankings = [[tag for tag, _ in pairs] for pairs in res.activations]
        words = [
            {"word": surface, "activation": {tag: share for tag, share in res.activations[w]}}
            for w, (surface, _) in enumerate(word_nests)
        ]
        structure = {"kind": "activations", "words": words, "text": res.text}
        if target_w is None:
            success = None
        else:
            pairs = res.activations[target_w]
            success = bool(pairs) and pairs[0][0] == v["planted_tag"]
        error = None if any(res.activations) else "every word undecided"
        detail = ""
        if target_w is not None and res.activations[target_w]:
            detail = res.activations[target_w][0][0]
        return res.metrics, structure, _key(rankings), success, error, detail, res.env.graph

    return {"total": total, "probe": probe, "execute": execute}


_PREPARE = {"shortest-path": _prep_shortest_path, "msa": _prep_msa, "wsd": _prep_wsd}


def prepare(cfg):
    """Validate a config end to end (inputs, ranges) without running anything."""
    return _PREPARE[cfg.engine](cfg)


# -- execution -----------------------------------------------------------------


def _metrics_csv_bytes(engine, rows):
    header = _HEADERS[engine]
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        lines.append(",".join([str(i + 1)] + [repr(float(x)) for x in row]))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _write_snapshot(directory, stem, g):
    names = []
    for ext, text in ((".json", export_json(g)), (".dot", export_dot(g))):
        name = stem + ext
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            fh.write(text)
        names.append("snapshots/" + name)
    return names


def _execute(cfg, seed, *, snapshot_dir=None, snapshot_every=0, probe_points=0):
    """One engine run.  Returns a plain dict so results cross process borders.

    snapshot_dir writes files at the snapshot_every cadence plus a final pair;
    probe_points > 0 instead samples the extracted structure at that many
    evenly spaced checkpoints to score convergence and stability.  The two
    modes are exclusive because both ride the engine snapshot callback.
    """
    if snapshot_dir and probe_points:
        raise ValueError("snapshot files and probes are mutually exclusive")
    bundle = _PREPARE[cfg.engine](cfg)
    total = bundle["total"]
    label = _HEADERS[cfg.engine][0]
    probes = []
    snapshots = []

    on_snapshot = None
    engine_every = 0
    if snapshot_dir and snapshot_every > 0:
        os.makedirs(snapshot_dir, exist_ok=True)
        engine_every = snapshot_every

        def on_snapshot(g, done):
            if done < total:
                snapshots.extend(_write_snapshot(snapshot_dir, f"{label}_{done:06d}", g))

    elif probe_points:
        engine_every = max(1, total // probe_points)
        probe = bundle["probe"]

        def on_snapshot(g, done):
            probes.append((done, probe(g)))

    metrics, structure, key, success, error, detail, final_graph = bundle["execute"](
        seed, snapshot_every=engine_every, on_snapshot=on_snapshot)

    if snapshot_dir:
        os.makedirs(snapshot_dir, exist_ok=True)
        snapshots.extend(_write_snapshot(snapshot_dir, "final", final_graph))

    convergence = None
    stability = None
    if probe_points and error is None:
        if not probes or probes[-1][0] != total:
            probes.append((total, key))
        back = len(probes)
        for i in range(len(probes) - 1, -1, -1):
            if probes[i][1] != key:
                break
            back = i
        convergence = probes[back][0] if back < len(probes) else None
        window = [k for done, k in probes if 2 * done >= total]
        stability = sum(1 for k in window if k == key) / len(window)

    return {
        "engine": cfg.engine,
        "seed": seed,
        "total": total,
        "metrics": metrics,
        "structure": structure,
        "key": key,
        "success": success,
        "extraction_error": error,
        "detail": detail,
        "snapshots": snapshots,
        "convergence": convergence,
        "stability": stability,
    }


class RunResult:
    """In-memory mirror of one artifact directory."""

    __slots__ = ("engine", "seed", "config", "structure", "success",
                 "extraction_error", "metrics", "metrics_header", "snapshots",
                 "wall_time", "out_dir", "trials")

    def __init__(self, engine, seed, config, structure, success, extraction_error,
                 metrics, metrics_header, snapshots, wall_time, out_dir, trials):
        self.engine = engine
        self.seed = seed
        self.config = config
        self.structure = structure
        self.success = success
        self.extraction_error = extraction_error
        self.metrics = metrics
        self.metrics_header = metrics_header
        self.snapshots = snapshots
        self.wall_time = wall_time
        self.out_dir = out_dir
        self.trials = trials


def _result_json(run_obj, wall_time):
    doc = {"run": run_obj, "wall_time_s": wall_time}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _trial_run_obj(cfg, outcome, csv_bytes):
    return {
        "engine": cfg.engine,
        "seed": outcome["seed"],
        "steps": outcome["total"],
        "success": outcome["success"],
        "structure": outcome["structure"],
        "extraction_error": outcome["extraction_error"],
        "metrics_rows": len(outcome["metrics"]),
        "metrics_sha256": hashlib.sha256(csv_bytes).hexdigest(),
        "snapshots": outcome["snapshots"],
        "config": cfg.to_map(),
    }


def run(config, *, out=None):
    """Execute a config and write its artifact directory; returns RunResult.

    trials = 1 runs the configured seed directly.  trials > 1 writes one
    trial_NNN subdirectory per trial, seeded derive_seed(seed, 0, t), plus a
    trials.csv table.  Extraction failure is recorded in result.json, never
    raised; only invalid configs and I/O problems raise.
    """
    cfg = config if isinstance(config, RunConfig) else parse_config(config)
    out_dir = out or cfg.out
    if not out_dir:
        raise ConfigError("out", "output directory required")
    if out is not None and out != cfg.out:
        cfg = cfg.replace(out=out)
    prepare(cfg)  # full validation before any artifact exists
    os.makedirs(out_dir, exist_ok=True)
    _write_text(os.path.join(out_dir, "config.txt"), cfg.echo())

    t0 = time.perf_counter()
    if cfg.trials == 1:
        outcome = _execute(cfg, cfg.seed,
                           snapshot_dir=os.path.join(out_dir, "snapshots"),
                           snapshot_every=cfg.snapshot_every)
        csv_bytes = _metrics_csv_bytes(cfg.engine, outcome["metrics"])
        with open(os.path.join(out_dir, "metrics.csv"), "wb") as fh:
            fh.write(csv_bytes)
        wall = time.perf_counter() - t0
        _write_text(os.path.join(out_dir, "result.json"),
                    _result_json(_trial_run_obj(cfg, outcome, csv_bytes), wall))
        return RunResult(cfg.engine, cfg.seed, cfg, outcome["structure"],
                         outcome["success"], outcome["extraction_error"],
                         outcome["metrics"], _HEADERS[cfg.engine],
                         outcome["snapshots"], wall, out_dir, [])

    per_trial = []
    trial_rows = ["trial,seed,success,detail"]
    for t in range(cfg.trials):
        seed_t = derive_seed(cfg.seed, 0, t)
        tdir = os.path.join(out_dir, f"trial_{t:03d}")
        os.makedirs(tdir, exist_ok=True)
        outcome = _execute(cfg, seed_t,
                           snapshot_dir=os.path.join(tdir, "snapshots"),
                           snapshot_every=cfg.snapshot_every)
        csv_bytes = _metrics_csv_bytes(cfg.engine, outcome["metrics"])
        with open(os.path.join(tdir, "metrics.csv"), "wb") as fh:
            fh.write(csv_bytes)
        _write_text(os.path.join(tdir, "result.json"),
                    _result_json(_trial_run_obj(cfg, outcome, csv_bytes), 0.0))
        success = outcome["success"]
        per_trial.append({"trial": t, "seed": seed_t, "success": success,
                          "detail": outcome["detail"]})
        flag = "" if success is None else str(bool(success)).lower()
        trial_rows.append(f"{t},{seed_t},{flag},{outcome['detail']}")
    _write_text(os.path.join(out_dir, "trials.csv"), "\n".join(trial_rows) + "\n")
    wall = time.perf_counter() - t0
    successes = sum(1 for rec in per_trial if rec["success"])
    run_obj = {
        "engine": cfg.engine,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "successes": successes,
        "per_trial": per_trial,
        "config": cfg.to_map(),
    }
    _write_text(os.path.join(out_dir, "result.json"), _result_json(run_obj, wall))
    return RunResult(cfg.engine, cfg.seed, cfg, None, None, None, [],
                     _HEADERS[cfg.engine], [], wall, out_dir, per_trial)


# -- replay --------------------------------------------------------------------


def _compare_csv(stored, fresh, name):
    if stored == fresh:
        return
    stored_lines = stored.split(b"\n")
    fresh_lines = fresh.split(b"\n")
    line = len(stored_lines)
    for i, (a, b) in enumerate(zip(stored_lines, fresh_lines), 1):
        if a != b:
            line = i
            break
    raise ReplayDivergenceError(f"{name} diverges at line {line}")


def replay(result_dir):
    """Re-execute a stored run and assert the metrics CSV is byte-identical.

    Reads config.txt from the directory, reruns every trial with the stored
    seeds, and compares against the stored metrics.csv files without touching
    them.  Raises ReplayDivergenceError on the first mismatch; missing files
    raise the underlying I/O error.
    """
    cfg = parse_config(read_config_file(os.path.join(result_dir, "config.txt")))
    t0 = time.perf_counter()
    if cfg.trials == 1:
        with open(os.path.join(result_dir, "metrics.csv"), "rb") as fh:
            stored = fh.read()
        outcome = _execute(cfg, cfg.seed)
        fresh = _metrics_csv_bytes(cfg.engine, outcome["metrics"])
        _compare_csv(stored, fresh, "metrics.csv")
        wall = time.perf_counter() - t0
        return RunResult(cfg.engine, cfg.seed, cfg, outcome["structure"],
                         outcome["success"], outcome["extraction_error"],
                         outcome["metrics"], _HEADERS[cfg.engine], [], wall,
                         result_dir, [])
    per_trial = []
    for t in range(cfg.trials):
        name = f"trial_{t:03d}/metrics.csv"
        with open(os.path.join(result_dir, name), "rb") as fh:
            stored = fh.read()
        seed_t = derive_seed(cfg.seed, 0, t)
        outcome = _execute(cfg, seed_t)
        _compare_csv(stored, _metrics_csv_bytes(cfg.engine, outcome["metrics"]), name)
        per_trial.append({"trial": t, "seed": seed_t, "success": outcome["success"],
                          "detail": outcome["detail"]})
    wall = time.perf_counter() - t0
    return RunResult(cfg.engine, cfg.seed, cfg, None, None, None, [],
                     _HEADERS[cfg.engine], [], wall, result_dir, per_trial)


# -- parameter sweeps ----------------------------------------------------------


class SweepSpec:
    """A Cartesian grid over one base config.

    grid maps parameter keys to candidate value strings; the product of the
    value lists, crossed with trials, must fit the budget.  Keys that select
    the experiment rather than the system (engine, seed, out, trials,
    snapshot_every) cannot be swept.
    """

    __slots__ = ("base", "grid", "trials", "budget")

    def __init__(self, base, grid=None, trials=1, budget=10000):
        self.base = base if isinstance(base, RunConfig) else parse_config(base)
        cleaned = {}
        schema = {key: kind for key, kind, _ in self.base.schema()}
        for key, raws in (grid or {}).items():
            key = _ALIASES.get(key, key)
            if key in _UNSWEEPABLE:
                raise ConfigError(key, "cannot be swept")
            if key not in schema:
                raise ConfigError(key, f"unknown key for engine {self.base.engine}")
            if not raws:
                raise ConfigError(key, "empty value list")
            kind = schema[key]
            cleaned[key] = [_canon(kind, _parse_value(key, kind, raw)) for raw in raws]
        self.grid = cleaned
        if trials < 1:
            raise ConfigError("trials", f"{trials} must be >= 1")
        if budget < 1:
            raise ConfigError("budget", f"{budget} must be >= 1")
        self.trials = trials
        self.budget = budget

    def cells(self):
        """Override mappings in grid order; an empty grid is one base cell."""
        keys = list(self.grid)
        out = []
        for combo in itertools.product(*(self.grid[k] for k in keys)):
            out.append(dict(zip(keys, combo)))
        return out or [{}]


def _sweep_task(payload):
    cfg = parse_config(payload["cfg"])
    outcome = _execute(cfg, payload["seed"], probe_points=payload["probe_points"])
    return {"success": outcome["success"], "convergence": outcome["convergence"],
            "stability": outcome["stability"]}


def _mean(xs):
    return sum(xs) / len(xs) if xs else None


def _fmt_cell(x):
    return "" if x is None else repr(float(x))


def sweep(spec, *, workers=1, out=None, probe_points=20):
    """Run the grid and summarize each cell; returns the summary rows.

    Every cell/trial pair is an independent run seeded
    derive_seed(base_seed, cell_index, trial_index).  Per cell the table
    reports the engine-defined success rate over trials where success is
    decidable, the mean convergence step among converged trials (probe
    resolution), and the mean structure_stability fraction.  With workers > 1
    trials execute on a process pool; outcomes merge by (cell, trial) index,
    so worker count and completion order never change the table.  The budget
    is enforced before anything runs.
    """
    if not isinstance(spec, SweepSpec):
        spec = SweepSpec(spec)
    cells = spec.cells()
    total_runs = len(cells) * spec.trials
    if total_runs > spec.budget:
        raise ConfigError(
            "budget",
            f"{len(cells)} cells x {spec.trials} trials = {total_runs} runs "
            f"exceeds budget {spec.budget}",
        )
    base_map = spec.base.to_map()
    cell_cfgs = []
    for overrides in cells:
        m = dict(base_map)
        m.update(overrides)
        cell_cfgs.append(m)
    for m in cell_cfgs:
        prepare(parse_config(dict(m)))  # validate the whole grid up front

    base_seed = spec.base.seed
    payloads = {}
    for ci in range(len(cells)):
        for ti in range(spec.trials):
            payloads[(ci, ti)] = {
                "cfg": cell_cfgs[ci],
                "seed": derive_seed(base_seed, ci, ti),
                "probe_points": probe_points,
            }

    outcomes = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_sweep_task, payload): idx
                       for idx, payload in payloads.items()}
            for fut in as_completed(futures):
                outcomes[futures[fut]] = fut.result()
    else:
        for idx, payload in payloads.items():
            outcomes[idx] = _sweep_task(payload)

    keys = list(spec.grid)
    rows = []
    for ci, overrides in enumerate(cells):
        per = [outcomes[(ci, ti)] for ti in range(spec.trials)]
        decided = [o["success"] for o in per if o["success"] is not None]
        convs = [o["convergence"] for o in per if o["convergence"] is not None]
        stabs = [o["stability"] for o in per if o["stability"] is not None]
        row = {"cell": ci}
        for k in keys:
            row[k] = overrides.get(k, base_map[k])
        row["trials"] = spec.trials
        row["success_rate"] = _mean([1.0 if s else 0.0 for s in decided])
        row["mean_convergence"] = _mean([float(c) for c in convs])
        row["structure_stability"] = _mean(stabs)
        rows.append(row)

    if out:
        os.makedirs(out, exist_ok=True)
        header = ["cell"] + keys + ["trials", "success_rate", "mean_convergence",
                                    "structure_stability"]
        lines = [",".join(header)]
        for row in rows:
            cols = [str(row["cell"])] + [row[k] for k in keys] + [
                str(row["trials"]),
                _fmt_cell(row["success_rate"]),
                _fmt_cell(row["mean_convergence"]),
                _fmt_cell(row["structure_stability"]),
            ]
            lines.append(",".join(cols))
        _write_text(os.path.join(out, "sweep.csv"), "\n".join(lines) + "\n")
        spec_lines = [f"{k} = {v}" for k, v in base_map.items()]
        spec_lines += [f"sweep.{k} = {','.join(vs)}" for k, vs in spec.grid.items()]
        spec_lines += [f"sweep.trials = {spec.trials}", f"sweep.budget = {spec.budget}"]
        _write_text(os.path.join(out, "sweep_config.txt"), "\n".join(spec_lines) + "\n")
    return rows
