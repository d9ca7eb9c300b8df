"""Word-sense selection by colored foraging on a morphosyntactic tree.

Every sense of a content word is a nest hanging under the word's node, and
every nest breeds ants colored with its sense vector.  Ants forage the tree
for a conserved resource, tint the nodes they cross with their color, and
follow the tint gradient home; rival senses of one word rob each other,
while nests of thematically close words fool foreign ants into unloading
and grow evanescent bridges between themselves.  After enough cycles the
resource levels of each word's nests are the reading: positive levels,
normalized, are the sense activations.  No objective is evaluated during
the run; the answer condenses in the environment.
"""

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

from ._kernels import get_backend
from .errors import GraphFormatError, InvalidDimensionError, InvalidParameterError
from .graph import EnvironmentGraph
from .rng import DetRng
from .shortest_path import build_csr

TRAIL_COLOR = "trail"

CONTENT_WORD = "content-word"
NODE_KINDS = (CONTENT_WORD, "function-word", "punctuation", "phrase")
NEST_KIND = "nest"

SEARCHING = "searching"
RETURNING = "returning"

# cos(pi/4): vectors closer than this angle count as thematically close.
THEMATIC_SIMILARITY = math.cos(math.pi / 4.0)


# -- conceptual vectors -------------------------------------------------------


def unit_vector(components):
    """Scale to unit Euclidean norm.  The null vector stays null."""
    norm = math.sqrt(sum(x * x for x in components))
    if norm == 0.0:
        return [0.0 for _ in components]
    return [x / norm for x in components]


def cosine_similarity(a, b):
    """Cosine of the angle between two component lists.

    Either operand null gives 0: an unmarked node has no thematic relation
    to anything yet.
    """
    if len(a) != len(b):
        raise InvalidDimensionError(f"dimension mismatch: {len(a)} vs {len(b)}")
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (math.sqrt(na) * math.sqrt(nb))


def angular_distance(a, b):
    """Angle in radians between two vectors; pi/4 bounds thematic closeness."""
    s = cosine_similarity(a, b)
    if s > 1.0:
        s = 1.0
    elif s < -1.0:
        s = -1.0
    return math.acos(s)


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


# -- syntax trees -------------------------------------------------------------


class Sense(NamedTuple):
    """One meaning of a content word: a tag and its unit color vector."""

    tag: str
    vector: tuple


@dataclass
class TreeNode:
    id: int
    part_of_speech: str
    kind: str
    word: str = None
    senses: tuple = ()


@dataclass
class SyntaxTree:
    """Validated morphosyntactic tree with per-content-word sense lists."""

    nodes: list
    edges: list
    dim: int  # shared sense-vector dimension, 0 when no node carries senses

    def content_words(self):
        return [n for n in self.nodes if n.kind == CONTENT_WORD]


def load_tree(source):
    """Parse and validate tree JSON.

    Schema: {"nodes": [{"id", "pos", "kind", "word"?, "senses"?}, ...],
    "edges": [[u, v], ...]} with senses as [{"tag", "vector": [...]}].
    The node set must form a single tree; every content word needs a
    surface form and at least one sense; sense vectors share one dimension,
    contain no negative component, and are stored unit-normalized.
    """
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise GraphFormatError("top-level JSON value must be an object")
    for field in ("nodes", "edges"):
        if field not in doc:
            raise GraphFormatError(f"missing required field '{field}'")

    nodes = []
    by_id = {}
    dim = 0
    for entry in doc["nodes"]:
        if not isinstance(entry, dict) or "id" not in entry:
            raise GraphFormatError(f"malformed node entry: {entry!r}")
        nid = entry["id"]
        if not isinstance(nid, int):
            raise GraphFormatError(f"node id {nid!r} is not an integer")
        if nid in by_id:
            raise GraphFormatError(f"duplicate node id {nid}")
        kind = entry.get("kind")
        if kind not in NODE_KINDS:
            raise GraphFormatError(f"node {nid} has unknown kind {kind!r}")
        word = entry.get("word")
        senses = entry.get("senses")
        if kind == CONTENT_WORD:
            if not word:
                raise GraphFormatError(f"content word {nid} has no surface form")
            if not senses:
                raise GraphFormatError(f"content word {nid} ({word}) has no senses")
        elif senses:
            raise GraphFormatError(f"node {nid} is not a content word but lists senses")
        parsed = []
        tags = set()
        for s in senses or ():
            if not isinstance(s, dict) or "tag" not in s or "vector" not in s:
                raise GraphFormatError(f"node {nid}: malformed sense entry {s!r}")
            tag = s["tag"]
            if tag in tags:
                raise GraphFormatError(f"node {nid}: duplicate sense tag {tag!r}")
            tags.add(tag)
            vec = s["vector"]
            if not vec:
                raise GraphFormatError(f"node {nid}: sense {tag!r} has an empty vector")
            if dim == 0:
                dim = len(vec)
            elif len(vec) != dim:
                raise GraphFormatError(
                    f"node {nid}: sense {tag!r} has dimension {len(vec)}, expected {dim}"
                )
            comps = [float(x) for x in vec]
            if any(x < 0.0 for x in comps):
                raise GraphFormatError(f"node {nid}: sense {tag!r} has negative components")
            if not any(comps):
                raise GraphFormatError(f"node {nid}: sense {tag!r} is the null vector")
            parsed.append(Sense(tag, tuple(unit_vector(comps))))
        node = TreeNode(nid, str(entry.get("pos", "")), kind, word, tuple(parsed))
        by_id[nid] = node
        nodes.append(node)

    edges = []
    adj = {nid: [] for nid in by_id}
    seen = set()
    for entry in doc["edges"]:
        try:
            u, v = entry
        except (TypeError, ValueError) as exc:
            raise GraphFormatError(f"malformed edge entry: {entry!r}") from exc
        if u not in by_id or v not in by_id:
            raise GraphFormatError(f"edge {entry!r} references an unknown node")
        if u == v:
            raise GraphFormatError(f"edge {entry!r} is a self-loop")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise GraphFormatError(f"edge {entry!r} appears twice")
        seen.add(key)
        edges.append((u, v))
        adj[u].append(v)
        adj[v].append(u)

    if nodes:
        if len(edges) != len(nodes) - 1:
            raise GraphFormatError(
                f"a tree over {len(nodes)} nodes needs {len(nodes) - 1} edges, got {len(edges)}"
            )
        frontier = [nodes[0].id]
        reached = {nodes[0].id}
        while frontier:
            nxt = frontier.pop()
            for other in adj[nxt]:
                if other not in reached:
                    reached.add(other)
                    frontier.append(other)
        if len(reached) != len(nodes):
            raise GraphFormatError("tree is not connected")
    elif edges:
        raise GraphFormatError("edges present but no nodes")
    return SyntaxTree(nodes, edges, dim)


def tree_to_json(tree):
    """Inverse of load_tree: a plain dict ready for json.dumps."""
    nodes = []
    for n in tree.nodes:
        entry = {"id": n.id, "pos": n.part_of_speech, "kind": n.kind}
        if n.word is not None:
            entry["word"] = n.word
        if n.senses:
            entry["senses"] = [{"tag": s.tag, "vector": list(s.vector)} for s in n.senses]
        nodes.append(entry)
    return {"nodes": nodes, "edges": [list(e) for e in tree.edges]}


# -- parameters ---------------------------------------------------------------


@dataclass
class WsdParams:
    """Foraging knobs.  alpha_color and cycles left at 0 derive from lam."""

    lam: int = 20          # life span in cycles
    eps: float = 0.05      # production cost per ant
    delta: float = 0.02    # pheromone evaporation rate
    eta: float = 1e-3      # attraction floor
    k: float = 1.0         # sigmoid steepness for nest selection
    alpha_color: float = 0.0   # marking weight; 0 selects 1/lam
    Q_w: float = 1.0       # pheromone deposit per edge crossing
    s_bridge: float = THEMATIC_SIMILARITY
    eps_bridge: float = 1e-6   # bridge eviction threshold
    fool_frac: float = 1.0     # share of cargo surrendered at a fooling nest
    spawn_always: bool = True  # False gates each birth by the same sigmoid
    dim: int = 64          # vector dimension fallback for senseless trees
    cycles: int = 0        # 0 selects 200 * lam
    seed: int = 0

    def __post_init__(self):
        if self.lam < 1:
            raise InvalidParameterError(f"lam {self.lam} must be >= 1")
        if self.eps <= 0.0:
            raise InvalidParameterError(f"eps {self.eps} must be positive")
        if not 0.0 < self.delta < 1.0:
            raise InvalidParameterError(f"delta {self.delta} outside (0, 1)")
        for name in ("eta", "Q_w", "eps_bridge", "k"):
            if getattr(self, name) <= 0.0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.alpha_color == 0.0:
            self.alpha_color = 1.0 / self.lam
        if not 0.0 < self.alpha_color < 1.0:
            raise InvalidParameterError(
                f"alpha_color {self.alpha_color} outside (0, 1)"
            )
        if not -1.0 <= self.s_bridge <= 1.0:
            raise InvalidParameterError(f"s_bridge {self.s_bridge} outside [-1, 1]")
        if not 0.0 <= self.fool_frac <= 1.0:
            raise InvalidParameterError(f"fool_frac {self.fool_frac} outside [0, 1]")
        if self.dim < 1:
            raise InvalidParameterError(f"dim {self.dim} must be >= 1")
        if self.cycles < 0:
            raise InvalidParameterError("cycles must be >= 0")

    def sized(self):
        """Cycle budget: explicit value, else 200 lifespans."""
        return self.cycles if self.cycles else 200 * self.lam


# -- environment --------------------------------------------------------------


class SenseNest(NamedTuple):
    """Nest ordinal record: owning word ordinal, nest vertex, sense tag."""

    word: int
    vid: int
    tag: str


class ContentWord(NamedTuple):
    surface: str
    node_id: int
    vid: int


@dataclass
class WsdAnt:
    """One forager: home nest ordinal, current vertex, cargo in [0,1], age."""

    home: int
    pos: int
    load: float = 0.0
    age: int = 0


class WsdEnvironment:
    """The shared medium the colony reads and writes.

    Vertices 0..T-1 are the tree nodes in input order; behind them each
    sense appends one degree-1 nest vertex under its word.  Resource levels,
    node color vectors, the bridge table and the living colony all live
    here.  Nest colors are invariant for the whole lifetime of the object.
    """

    def __init__(self, tree, dim=None):
        self.tree = tree
        self.dim = tree.dim if tree.dim else (dim if dim else 1)
        self.graph = EnvironmentGraph()
        self.color = self.graph.ensure_color(TRAIL_COLOR)
        self.vid_of = {}
        for node in tree.nodes:
            attrs = {"kind": node.kind, "part_of_speech": node.part_of_speech}
            if node.word is not None:
                attrs["word"] = node.word
            self.vid_of[node.id] = self.graph.add_vertex(attrs)
        for u, v in tree.edges:
            self.graph.add_edge(self.vid_of[u], self.vid_of[v])
        self.words = []
        self.nests = []
        self.nest_color = []
        self.w_indptr = [0]
        for node in tree.nodes:
            if node.kind != CONTENT_WORD:
                continue
            w = len(self.words)
            wvid = self.vid_of[node.id]
            self.words.append(ContentWord(node.word, node.id, wvid))
            for sense in node.senses:
                nvid = self.graph.add_vertex(
                    {"kind": NEST_KIND, "word": node.word, "tag": sense.tag}
                )
                self.graph.add_edge(wvid, nvid)
                self.nests.append(SenseNest(w, nvid, sense.tag))
                self.nest_color.append(sense.vector)
            self.w_indptr.append(len(self.nests))
        n = len(self.graph.vertices)
        # every node starts with one unit of the conserved resource
        self.node_R = [1.0] * n
        self.node_V = [[0.0] * self.dim for _ in range(n)]
        self.is_nest = [False] * n
        self.nest_idx = [-1] * n
        for k, nest in enumerate(self.nests):
            self.is_nest[nest.vid] = True
            self.nest_idx[nest.vid] = k
            self.node_V[nest.vid] = list(self.nest_color[k])
        self.tree_eids = sorted(self.graph.edges)
        self.bridges = {}  # (low ordinal, high ordinal) -> pheromone level
        self.ants = []
        self._refresh_attrs()

    def _refresh_attrs(self):
        for vid, vertex in self.graph.vertices.items():
            vertex.attrs["resource"] = self.node_R[vid]

    def word_ordinal(self, word):
        """Resolve an ordinal or a unique surface form to the word index."""
        if isinstance(word, int):
            if not 0 <= word < len(self.words):
                raise InvalidParameterError(f"word ordinal {word} out of range")
            return word
        hits = [w for w, rec in enumerate(self.words) if rec.surface == word]
        if not hits:
            raise InvalidParameterError(f"unknown content word {word!r}")
        if len(hits) > 1:
            raise InvalidParameterError(
                f"surface {word!r} occurs {len(hits)} times; pass the ordinal"
            )
        return hits[0]

    def word_nests(self, w):
        return range(self.w_indptr[w], self.w_indptr[w + 1])

    def alive_per_word(self):
        counts = [0] * len(self.words)
        for ant in self.ants:
            counts[self.nests[ant.home].word] += 1
        return counts


def build_environment(tree, dim=None):
    """Environment for a SyntaxTree (or anything load_tree accepts)."""
    if not isinstance(tree, SyntaxTree):
        tree = load_tree(tree)
    return WsdEnvironment(tree, dim)


# -- behavioral rules ---------------------------------------------------------


def produce_weights(resources, k=1.0):
    """Sigmoid spawn weights over sibling nests; strictly positive even when
    a nest has borrowed itself far below zero."""
    return [sigmoid(k * r) for r in resources]


def produce_probabilities(resources, k=1.0):
    w = produce_weights(resources, k)
    total = sum(w)
    return [x / total for x in w]


def mode_select(load, rng):
    """Draw the cycle mode: returning with probability equal to the cargo."""
    return RETURNING if rng.next_float() < load else SEARCHING


def attract_search(resource, pheromone, eta):
    """Resource pull damped by traffic; eta keeps empty nodes reachable."""
    top = resource if resource > eta else eta
    return top / (pheromone + 1.0)


def attract_return(similarity, pheromone, eta):
    """Color-gradient pull amplified by traffic."""
    top = similarity if similarity > eta else eta
    return top * (pheromone + 1.0)


def p_search(resources, pheromones, eta):
    """Searching-mode transition distribution over aligned neighbor lists."""
    if not resources or len(resources) != len(pheromones):
        raise InvalidParameterError("neighbor lists empty or mismatched")
    a = [attract_search(r, ph, eta) for r, ph in zip(resources, pheromones)]
    total = sum(a)
    return [x / total for x in a]


def p_return(similarities, pheromones, eta):
    """Returning-mode transition distribution over aligned neighbor lists."""
    if not similarities or len(similarities) != len(pheromones):
        raise InvalidParameterError("neighbor lists empty or mismatched")
    a = [attract_return(s, ph, eta) for s, ph in zip(similarities, pheromones)]
    total = sum(a)
    return [x / total for x in a]


def mark_color(env, vid, ant_color, alpha):
    """Blend an ant's color into a node vector and renormalize.

    Nest vectors are invariant; marking one is a caller bug, not a no-op.
    """
    if env.is_nest[vid]:
        raise InvalidParameterError(f"vertex {vid} is a nest; its color is invariant")
    v = env.node_V[vid]
    norm = 0.0
    for j in range(len(v)):
        x = v[j] + alpha * ant_color[j]
        v[j] = x
        norm += x * x
    if norm > 0.0:
        norm = math.sqrt(norm)
        for j in range(len(v)):
            v[j] /= norm


def transfer_amount(load, available):
    """What fits: free capacity or the whole source, whichever is smaller."""
    room = 1.0 - load
    t = available if available < room else room
    return t if t > 0.0 else 0.0


def pickup(env, ant):
    """Forage the node under the ant; returns the amount taken."""
    nid = ant.pos
    if env.node_R[nid] <= 0.0:
        return 0.0
    t = transfer_amount(ant.load, env.node_R[nid])
    if t > 0.0:
        ant.load += t
        env.node_R[nid] -= t
    return t


def steal(env, ant, foe):
    """Rob a rival sense's nest, clamped like pickup; returns the amount."""
    nid = env.nests[foe].vid
    if env.node_R[nid] <= 0.0:
        return 0.0
    t = transfer_amount(ant.load, env.node_R[nid])
    if t > 0.0:
        ant.load += t
        env.node_R[nid] -= t
    return t


def deliver(env, ant):
    """Drop the whole cargo into the home nest."""
    env.node_R[env.nests[ant.home].vid] += ant.load
    ant.load = 0.0


def maybe_bridge(env, home, here, Q_w, s_bridge):
    """Lay a home-here shortcut when the two nest colors are close enough.

    Idempotent: an existing bridge is left untouched.  True when created.
    """
    s = cosine_similarity(env.nest_color[here], env.nest_color[home])
    if s < s_bridge:
        return False
    key = (home, here) if home < here else (here, home)
    if key in env.bridges:
        return False
    env.bridges[key] = Q_w
    return True


def ant_death(env, ant, eps):
    """Return the cargo plus the banked production cost to the node below."""
    env.node_R[ant.pos] += ant.load + eps


def wsd_cycle(env, params, rng):
    """One full cycle at object level: produce, move, die, evaporate, evict.

    Phase order and arithmetic mirror the kernel batch loop operation for
    operation, so stepping a fresh environment here and running the packed
    state through a kernel from the same seed give identical trajectories.
    Returns the kernels' metrics row: [moves, blocked, total_pheromone,
    alive, total_resources, bridges, births].
    """
    g = env.graph
    K = len(env.nests)
    keep = 1.0 - params.delta
    # 1: production, one candidate ant per content word
    births = 0
    for w in range(len(env.words)):
        lo, hi = env.w_indptr[w], env.w_indptr[w + 1]
        total = 0.0
        weights = []
        for k in range(lo, hi):
            s = sigmoid(params.k * env.node_R[env.nests[k].vid])
            weights.append(s)
            total += s
        u = rng.next_float() * total
        acc = 0.0
        pick = hi - lo - 1
        for i, s in enumerate(weights):
            acc += s
            if u < acc:
                pick = i
                break
        sel = lo + pick
        if not params.spawn_always:
            gate = sigmoid(params.k * env.node_R[env.nests[sel].vid])
            if rng.next_float() >= gate:
                continue
        env.ants.append(WsdAnt(sel, env.nests[sel].vid))
        env.node_R[env.nests[sel].vid] -= params.eps
        births += 1
    # 2: movement, in birth order
    moves = 0
    blocked = 0
    for ant in env.ants:
        returning = rng.next_float() < ant.load
        node = ant.pos
        hk = ant.home
        home_node = env.nests[hk].vid
        cand_n = []
        cand_b = []  # bridge partner ordinal, -1 for tree edges
        cand_e = []
        for nid, eid in g.neighbors(node):
            if not returning and nid == home_node:
                continue
            cand_n.append(nid)
            cand_b.append(-1)
            cand_e.append(eid)
        if env.is_nest[node]:
            kk = env.nest_idx[node]
            for kk2 in range(K):
                if kk2 == kk:
                    continue
                key = (kk, kk2) if kk < kk2 else (kk2, kk)
                if key not in env.bridges:
                    continue
                nid = env.nests[kk2].vid
                if not returning and nid == home_node:
                    continue
                cand_n.append(nid)
                cand_b.append(kk2)
                cand_e.append(-1)
        if not cand_n:
            blocked += 1
            continue
        total = 0.0
        weights = []
        for i in range(len(cand_n)):
            nid = cand_n[i]
            if cand_b[i] < 0:
                ph = g.edges[cand_e[i]].pheromone.get(env.color, 0.0)
            else:
                kk = env.nest_idx[node]
                kk2 = cand_b[i]
                ph = env.bridges[(kk, kk2) if kk < kk2 else (kk2, kk)]
            if returning:
                s = cosine_similarity(env.node_V[nid], env.nest_color[hk])
                a = attract_return(s, ph, params.eta)
            else:
                a = attract_search(env.node_R[nid], ph, params.eta)
            weights.append(a)
            total += a
        u = rng.next_float() * total
        acc = 0.0
        pick = len(weights) - 1
        for i, wgt in enumerate(weights):
            acc += wgt
            if u < acc:
                pick = i
                break
        nid = cand_n[pick]
        ant.pos = nid
        moves += 1
        if cand_b[pick] < 0:
            g.deposit(cand_e[pick], params.Q_w, env.color)
        else:
            kk = env.nest_idx[node]
            kk2 = cand_b[pick]
            key = (kk, kk2) if kk < kk2 else (kk2, kk)
            env.bridges[key] += params.Q_w
        if not env.is_nest[nid]:
            mark_color(env, nid, env.nest_color[hk], params.alpha_color)
            if not returning and env.node_R[nid] > 0.0:
                pickup(env, ant)
        else:
            kk2 = env.nest_idx[nid]
            if nid == home_node:
                deliver(env, ant)
            elif env.nests[kk2].word == env.nests[hk].word:
                if env.node_R[nid] > 0.0:
                    steal(env, ant, kk2)
            else:
                s = cosine_similarity(env.nest_color[kk2], env.nest_color[hk])
                if s >= params.s_bridge:
                    if returning and ant.load > 0.0:
                        give = params.fool_frac * ant.load
                        env.node_R[nid] += give
                        ant.load -= give
                    maybe_bridge(env, hk, kk2, params.Q_w, params.s_bridge)
    # 3: aging and death
    survivors = []
    for ant in env.ants:
        ant.age += 1
        if ant.age >= params.lam:
            ant_death(env, ant, params.eps)
        else:
            survivors.append(ant)
    env.ants = survivors
    # 4: evaporation and bridge eviction
    total_ph = 0.0
    for eid in env.tree_eids:
        ph = g.edges[eid].pheromone
        level = ph.get(env.color, 0.0) * keep
        ph[env.color] = level
        total_ph += level
    bridges = 0
    for key in sorted(env.bridges):
        level = env.bridges[key] * keep
        if level < params.eps_bridge:
            del env.bridges[key]
        else:
            env.bridges[key] = level
            bridges += 1
            total_ph += level
    # 5: metrics
    alive = len(env.ants)
    total_res = 0.0
    for r in env.node_R:
        total_res += r
    for ant in env.ants:
        total_res += ant.load
    total_res += alive * params.eps
    g.step += 1
    return [
        float(moves), float(blocked), total_ph, float(alive),
        total_res, float(bridges), float(births),
    ]


# -- decoding -----------------------------------------------------------------


def decode_activations(env, word):
    """Read one word's sense distribution off its nests.

    Senses at or below zero are inhibited and dropped; surviving levels are
    normalized into shares, sorted by descending share with nest order
    breaking ties.  An empty list means the word is undecided.
    """
    w = env.word_ordinal(word)
    pairs = []
    total = 0.0
    for k in env.word_nests(w):
        r = env.node_R[env.nests[k].vid]
        if r > 0.0:
            pairs.append((env.nests[k].tag, r))
            total += r
    if not pairs:
        return []
    pairs.sort(key=lambda p: -p[1])
    return [(tag, r / total) for tag, r in pairs]


def decode_all(env):
    """Sense shares for every content word, in word order."""
    return [decode_activations(env, w) for w in range(len(env.words))]


def format_activations(word, pairs):
    """Render one reading as word/{tag:share/...}."""
    inner = "/".join(f"{tag}:{share:.6g}" for tag, share in pairs)
    return f"{word}/{{{inner}}}"


# -- kernel-backed runs -------------------------------------------------------


class WsdRunResult:
    __slots__ = ("metrics", "activations", "text", "env", "final")

    def __init__(self, metrics, activations, text, env, final):
        self.metrics = metrics
        self.activations = activations
        self.text = text
        self.env = env
        self.final = final


def _sync_bridge_edges(env):
    """Mirror the bridge table as evictable graph edges for serialization."""
    g = env.graph
    want = {}
    for (a, b), level in env.bridges.items():
        u, v = env.nests[a].vid, env.nests[b].vid
        want[(u, v) if u < v else (v, u)] = level
    for eid in [e for e, edge in g.edges.items() if edge.bridge]:
        edge = g.edges[eid]
        key = (edge.u, edge.v) if edge.u < edge.v else (edge.v, edge.u)
        if key in want:
            edge.pheromone[env.color] = want.pop(key)
        else:
            g.remove_edge(eid)
    for (u, v), level in want.items():
        g.add_bridge(u, v, level, env.color)


def run_wsd(tree, params, *, backend=None, snapshot_every=0, on_snapshot=None):
    """Run the colony through a kernel and decode the activations.

    tree may be a SyntaxTree or anything load_tree accepts.  Snapshot
    callbacks observe the environment graph with pheromone, resources and
    bridges synced at the requested cadence.
    """
    env = build_environment(tree, params.dim)
    kern = get_backend(backend)
    cycles = params.sized()

    indptr, nbrs, eidx, vid_order, eid_order = build_csr(env.graph)
    node_v_flat = []
    for vec in env.node_V:
        node_v_flat.extend(vec)
    nest_color_flat = []
    for vec in env.nest_color:
        nest_color_flat.extend(vec)
    st = kern.wsd_pack(
        indptr, nbrs, eidx,
        [env.graph.edges[e].pheromone.get(env.color, 0.0) for e in eid_order],
        env.node_R, node_v_flat,
        [1 if b else 0 for b in env.is_nest], env.nest_idx,
        [n.vid for n in env.nests], [n.word for n in env.nests],
        nest_color_flat, env.w_indptr, list(range(len(env.nests))), env.dim,
        params.lam, params.eps, params.delta, params.eta, params.Q_w,
        params.k, params.s_bridge, params.eps_bridge, params.alpha_color,
        params.fool_frac, 1 if params.spawn_always else 0,
    )

    def sync():
        snap = kern.wsd_read(st)
        env.node_R = [float(x) for x in snap["node_R"]]
        flat = snap["node_V"]
        d = env.dim
        env.node_V = [list(flat[i * d:(i + 1) * d]) for i in range(len(env.node_R))]
        for i, eid in enumerate(eid_order):
            env.graph.edges[eid].pheromone[env.color] = snap["tree_ph"][i]
        env.bridges = {}
        for a, b, level in snap["bridges"]:
            env.bridges[(a, b) if a < b else (b, a)] = level
        _sync_bridge_edges(env)
        env._refresh_attrs()
        return snap

    rng_state = DetRng(params.seed).getstate()
    metrics = []
    step0 = env.graph.step
    done = 0
    while done < cycles:
        chunk = cycles - done
        if snapshot_every > 0:
            chunk = min(chunk, snapshot_every - done % snapshot_every)
        rows, rng_state = kern.wsd_run(st, chunk, rng_state)
        metrics.extend(rows)
        done += chunk
        env.graph.step = step0 + done
        if snapshot_every > 0 and done % snapshot_every == 0 and on_snapshot:
            sync()
            on_snapshot(env.graph, done)
    final = sync()
    activations = decode_all(env)
    text = [
        format_activations(env.words[w].surface, pairs)
        for w, pairs in enumerate(activations)
    ]
    return WsdRunResult(metrics, activations, text, env, final)


# -- synthetic corpora --------------------------------------------------------


def synth_corpus(seed, n_words=6, n_senses=2, dim=64, planted=0):
    """Random tree with a known-answer polysemous target.

    One target word carries n_senses senses built on disjoint component
    blocks, so distinct senses sit at angular distance pi/2 from each
    other.  Each of the n_words monosemous context words mixes the planted
    sense's vector with its own private axis: similarity to the planted
    sense lands in [0.75, 0.82), inside the pi/4 closeness cone, while any
    two context colors multiply out below the bridging threshold and every
    rival sense stays exactly orthogonal.  The planted nest is therefore
    the sole hub of the thematic star.  Context words attach directly to
    the target word as a modifier chain, so every context nest sits two
    hops from the target's own nests and short-leashed foragers can still
    complete a delivery trip.  All structure and all vectors come from one
    seeded stream, so equal seeds mean equal corpora.
    """
    if n_senses < 1:
        raise InvalidParameterError(f"n_senses {n_senses} must be >= 1")
    if n_words < 0:
        raise InvalidParameterError(f"n_words {n_words} must be >= 0")
    if dim < n_senses + n_words:
        raise InvalidParameterError(
            f"dim {dim} too small: {n_senses} sense blocks plus {n_words} context axes"
        )
    if not 0 <= planted < n_senses:
        raise InvalidParameterError(f"planted index {planted} outside [0, {n_senses})")
    rng = DetRng(seed)
    block = (dim - n_words) // n_senses

    sense_vecs = []
    for j in range(n_senses):
        comps = [0.0] * dim
        for i in range(j * block, (j + 1) * block):
            comps[i] = 0.5 + 0.5 * rng.next_float()  # bounded away from zero
        sense_vecs.append(unit_vector(comps))
    base = sense_vecs[planted]
    context_vecs = []
    for i in range(n_words):
        c = 0.75 + 0.07 * rng.next_float()
        s = math.sqrt(1.0 - c * c)
        comps = [c * x for x in base]
        comps[n_senses * block + i] = s  # private axis, orthogonal to all senses
        context_vecs.append(comps)

    nodes = []
    edges = []

    def add(pos, kind, word=None, senses=()):
        node = TreeNode(len(nodes), pos, kind, word, tuple(senses))
        nodes.append(node)
        return node.id

    root = add("S", "phrase")
    phrases = [root]
    for _ in range(1 + (n_words + 1) // 3):
        parent = phrases[rng.next_below(len(phrases))]
        pid = add("NP" if rng.next_float() < 0.5 else "VP", "phrase")
        edges.append((parent, pid))
        phrases.append(pid)
    target_senses = [Sense(f"s{j}", tuple(sense_vecs[j])) for j in range(n_senses)]
    tid = add("NC", CONTENT_WORD, "target", target_senses)
    edges.append((phrases[rng.next_below(len(phrases))], tid))
    # modifier chain: context words attach to the head they qualify, so every
    # context nest sits two hops from the target's own nests
    for i in range(n_words):
        cid = add(
            "NC", CONTENT_WORD, f"ctx{i}", [Sense("s0", tuple(context_vecs[i]))]
        )
        edges.append((tid, cid))
    for _ in range(len(phrases) - 1):
        fid = add("ART", "function-word", "the")
        edges.append((phrases[rng.next_below(len(phrases))], fid))
    pid = add("PUNCT", "punctuation")
    edges.append((root, pid))
    return SyntaxTree(nodes, edges, dim)
