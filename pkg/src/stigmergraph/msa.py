"""Alignment-block selection over a factor graph.

Sequences reduced to single-letter factors become a graph whose vertices
are the factor occurrences and whose edges link identical symbols on
different sequences.  Ants wander this graph, drawn towards nearby and
lightly-contested edges; every crossing deposits on the edge walked and
penalizes every edge that crosses it.  The signed feedback polarizes the
field until the block structure can be read off the positive edges; no
alignment score is ever computed.
"""

from dataclasses import dataclass
from typing import NamedTuple

from ._kernels import get_backend
from .errors import GraphFormatError, InvalidParameterError, OracleSizeError
from .graph import EnvironmentGraph
from .rng import DetRng
from .shortest_path import build_csr

BLOCK_COLOR = "blocks"
GAP = "-"

_ORACLE_EDGE_LIMIT = 20


class FactorVertex(NamedTuple):
    """One factor occurrence: symbol, sequence index, occurrence index, position."""

    symbol: str
    seq: int
    occ: int
    pos: int

    @property
    def label(self):
        return f"{self.symbol}_{self.seq}.{self.occ}"

    def key(self):
        # ordering used for tie-breaks: label order, structured
        return (self.symbol, self.seq, self.occ)


@dataclass(frozen=True)
class FactorSequence:
    index: int
    symbols: str

    def vertices(self):
        seen = {}
        out = []
        for pos, sym in enumerate(self.symbols):
            occ = seen.get(sym, 0)
            seen[sym] = occ + 1
            out.append(FactorVertex(sym, self.index, occ, pos))
        return out


def parse_factor_sequences(text):
    """Parse one factor string per line into numbered sequences.

    Symbols are uppercase letters only; anything else is reported with its
    1-based line and column.  Trailing blank lines are tolerated, interior
    ones are not.
    """
    if isinstance(text, str):
        lines = text.split("\n")
    else:
        lines = list(text)
    while lines and lines[-1] == "":
        lines.pop()
    seqs = []
    for i, line in enumerate(lines):
        if line == "":
            raise GraphFormatError("empty sequence", line=i + 1, column=1)
        for j, ch in enumerate(line):
            if not ("A" <= ch <= "Z"):
                raise GraphFormatError(
                    f"invalid factor symbol {ch!r}", line=i + 1, column=j + 1
                )
        seqs.append(FactorSequence(i, line))
    if not seqs:
        raise GraphFormatError("no sequences", line=1, column=1)
    return seqs


def relative_distance(p1, len1, p2, len2):
    """Distance between two factors after aligning sequence midpoints.

    Positions are taken relative to the center of their own sequence, so a
    long sequence overhanging a short one does not inflate the distance of
    factors that sit in the same region.  The +1 floor keeps reciprocal
    weights finite when the centered offsets coincide.
    """
    c1 = p1 - (len1 - 1) / 2.0
    c2 = p2 - (len2 - 1) / 2.0
    return abs(c1 - c2) + 1.0


class AlignmentGraph:
    """Factor graph: occurrence vertices, same-symbol cross-sequence edges.

    Wraps an EnvironmentGraph so the generic serialization and decay
    machinery apply; keeps the per-edge distance table and the label maps
    the transition and extraction rules need.
    """

    def __init__(self, seqs):
        if len(seqs) < 2:
            raise InvalidParameterError("need at least 2 sequences")
        self.seqs = seqs
        self.graph = EnvironmentGraph()
        self.color = self.graph.ensure_color(BLOCK_COLOR)
        self.vertex_of = {}  # (symbol, seq, occ) -> vid
        self.factor = {}  # vid -> FactorVertex
        self.dist = {}  # eid -> centered relative distance
        lens = [len(s.symbols) for s in seqs]
        by_symbol = {}
        for s in seqs:
            for fv in s.vertices():
                vid = self.graph.add_vertex(
                    {"symbol": fv.symbol, "seq": fv.seq, "occ": fv.occ, "pos": fv.pos}
                )
                self.vertex_of[fv.key()] = vid
                self.factor[vid] = fv
                by_symbol.setdefault(fv.symbol, []).append(fv)
        for sym in sorted(by_symbol):
            occs = by_symbol[sym]
            for a in range(len(occs)):
                for b in range(a + 1, len(occs)):
                    fa, fb = occs[a], occs[b]
                    if fa.seq == fb.seq:
                        continue
                    eid = self.graph.add_edge(
                        self.vertex_of[fa.key()], self.vertex_of[fb.key()]
                    )
                    self.dist[eid] = relative_distance(
                        fa.pos, lens[fa.seq], fb.pos, lens[fb.seq]
                    )

    @property
    def n_vertices(self):
        return len(self.graph.vertices)

    @property
    def n_edges(self):
        return len(self.graph.edges)

    def endpoints(self, eid):
        e = self.graph.edges[eid]
        return self.factor[e.u], self.factor[e.v]

    def edge_sort_key(self, eid):
        fa, fb = self.endpoints(eid)
        ka, kb = sorted((fa.key(), fb.key()))
        return (ka, kb)

    def tau(self, eid):
        return self.graph.pheromone(eid, self.color)

    def tau_list(self):
        return {eid: self.tau(eid) for eid in self.graph.edges}


def build_alignment_graph(seqs):
    if isinstance(seqs, str) or (seqs and isinstance(seqs[0], str)):
        seqs = parse_factor_sequences(seqs)
    return AlignmentGraph(seqs)


def edges_cross(fa, fb, fc, fd):
    """Sign test: two edges on the same sequence pair with inverted order.

    Arguments are the endpoint factors of the two edges; returns False
    when the edges do not join the same unordered pair of sequences.
    """
    if fa.seq > fb.seq:
        fa, fb = fb, fa
    if fc.seq > fd.seq:
        fc, fd = fd, fc
    if (fa.seq, fb.seq) != (fc.seq, fd.seq):
        return False
    return (fa.pos - fc.pos) * (fb.pos - fd.pos) < 0


class ConflictGraph:
    """One node per alignment edge; heavy pairs cross, light pairs share a factor."""

    def __init__(self, align):
        self.align = align
        self.conflicts = {eid: [] for eid in align.graph.edges}
        self.shared = {eid: [] for eid in align.graph.edges}
        by_pair = {}
        for eid in align.graph.edges:
            fa, fb = align.endpoints(eid)
            pair = (min(fa.seq, fb.seq), max(fa.seq, fb.seq))
            by_pair.setdefault(pair, []).append(eid)
        for eids in by_pair.values():
            for i in range(len(eids)):
                for j in range(i + 1, len(eids)):
                    e, f = eids[i], eids[j]
                    fa, fb = align.endpoints(e)
                    fc, fd = align.endpoints(f)
                    if edges_cross(fa, fb, fc, fd):
                        self.conflicts[e].append(f)
                        self.conflicts[f].append(e)
        vert_edges = {}
        for eid in align.graph.edges:
            e = align.graph.edges[eid]
            vert_edges.setdefault(e.u, []).append(eid)
            vert_edges.setdefault(e.v, []).append(eid)
        for eids in vert_edges.values():
            for i in range(len(eids)):
                for j in range(i + 1, len(eids)):
                    self.shared[eids[i]].append(eids[j])
                    self.shared[eids[j]].append(eids[i])
        for eid in self.conflicts:
            self.conflicts[eid] = sorted(set(self.conflicts[eid]))
            self.shared[eid] = sorted(set(self.shared[eid]))


def build_conflict_graph(align):
    return ConflictGraph(align)


@dataclass
class MsaParams:
    """Walk and feedback knobs for the block-selection engine.

    alpha weighs pheromone attraction, beta the centered-distance
    heuristic.  Q is the deposit per crossing, q the penalty applied to
    every conflicting edge.  n_ants and steps default to 2|V| and 200|V|.
    """

    alpha: float = 1.0
    beta: float = 3.0
    q: float = 1.0
    Q: float = 1.0
    rho: float = 0.03
    n_ants: int = 0
    steps: int = 0
    tabu_size: int = 2
    eps_norm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParameterError("alpha and beta must be >= 0")
        if self.q <= 0 or self.Q <= 0:
            raise InvalidParameterError("feedback quanta must be > 0")
        if not 0.0 <= self.rho < 1.0:
            raise InvalidParameterError(f"rho={self.rho} outside [0, 1)")
        if self.eps_norm <= 0:
            raise InvalidParameterError("eps_norm must be > 0")
        if self.tabu_size < 0:
            raise InvalidParameterError("tabu_size must be >= 0")
        if self.n_ants < 0 or self.steps < 0:
            raise InvalidParameterError("n_ants and steps must be >= 0")

    def sized(self, n_vertices):
        ants = self.n_ants if self.n_ants else 2 * n_vertices
        steps = self.steps if self.steps else 200 * n_vertices
        return ants, steps


def transition_weights(taus, dists, alpha=1.0, beta=1.0, eps_norm=1.0):
    """Unnormalized move weights over one candidate edge menu.

    The heaviest candidate anchors the normalization: weight grows as tau
    approaches the local maximum and shrinks with centered distance.
    Negative pheromone is strictly repulsive.  Weights are finite and
    positive for any finite tau thanks to the eps_norm guard.
    """
    mx = max(taus)
    return [
        (1.0 / (mx - t + eps_norm)) ** alpha * (1.0 / d) ** beta
        for t, d in zip(taus, dists)
    ]


def msa_transition(align, vid, tabu, params, rng):
    """Draw the next hop from vid, or None when every neighbor is tabu."""
    cand = []
    for nid, eid in align.graph.neighbors(vid):
        if nid in tabu:
            continue
        cand.append((nid, eid))
    if not cand:
        return None
    taus = [align.tau(eid) for _, eid in cand]
    dists = [align.dist[eid] for _, eid in cand]
    weights = transition_weights(taus, dists, params.alpha, params.beta, params.eps_norm)
    total = sum(weights)
    u = rng.next_float() * total
    acc = 0.0
    pick = len(cand) - 1
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            pick = i
            break
    return cand[pick]


def msa_deposit(delta, eid, conflicts, params):
    """Queue +Q on the crossed edge and -q on everything crossing it."""
    delta[eid] = delta.get(eid, 0.0) + params.Q
    for other in conflicts.conflicts[eid]:
        delta[other] = delta.get(other, 0.0) - params.q


class MsaRunResult:
    __slots__ = ("metrics", "blocks", "tau", "align")

    def __init__(self, metrics, blocks, tau, align):
        self.metrics = metrics
        self.blocks = blocks
        self.tau = tau
        self.align = align


def run_msa(seqs, params, *, backend=None, snapshot_every=0, on_snapshot=None):
    """Release a supercolony on the factor graph and read off the blocks.

    Ants start uniformly at random over the vertices; each step every ant
    crosses one non-tabu edge, queueing its deposit and conflict
    penalties, and the queue is folded in with evaporation at step end.
    """
    align = build_alignment_graph(seqs)
    conflicts = build_conflict_graph(align)
    kern = get_backend(backend)
    n_ants, steps = params.sized(align.n_vertices)

    indptr, nbrs, eidx, vid_order, eid_order = build_csr(align.graph)
    emap = {eid: i for i, eid in enumerate(eid_order)}
    d = [0.0] * len(eid_order)
    tau0 = [0.0] * len(eid_order)
    for eid, i in emap.items():
        d[i] = align.dist[eid]
        tau0[i] = align.tau(eid)
    c_indptr = [0]
    c_list = []
    for eid in eid_order:
        c_list.extend(emap[f] for f in conflicts.conflicts[eid])
        c_indptr.append(len(c_list))

    rng = DetRng(params.seed)
    positions = [rng.next_below(align.n_vertices) for _ in range(n_ants)]
    st = kern.msa_pack(indptr, nbrs, eidx, c_indptr, c_list, d, tau0,
                       positions, params.tabu_size)

    def sync():
        tau = kern.msa_tau(st)
        for eid, i in emap.items():
            align.graph.edges[eid].pheromone[align.color] = tau[i]
        return tau

    metrics = []
    state = rng.getstate()
    step0 = align.graph.step
    done = 0
    while done < steps:
        chunk = steps - done
        if snapshot_every > 0:
            chunk = min(chunk, snapshot_every - done % snapshot_every)
        rows, state = kern.msa_run(st, chunk, params.alpha, params.beta,
                                   params.Q, params.q, params.rho,
                                   params.eps_norm, state)
        metrics.extend(rows)
        done += chunk
        align.graph.step = step0 + done
        if snapshot_every > 0 and done % snapshot_every == 0 and on_snapshot:
            sync()
            on_snapshot(align.graph, done)
    tau = sync()
    blocks = extract_blocks(align)
    return MsaRunResult(metrics, blocks, tau, align)


# -- block extraction and the compatibility oracle ---------------------------


def _blocks_cross(pa, pb):
    """Induced-pair sign test between two blocks given seq -> pos maps."""
    common = sorted(set(pa) & set(pb))
    for i in range(len(common)):
        for j in range(i + 1, len(common)):
            s, t = common[i], common[j]
            if (pa[s] - pb[s]) * (pa[t] - pb[t]) < 0:
                return True
    return False


def extract_blocks(align, tau=None):
    """Read the block set off the pheromone field.

    Edges are visited by descending tau (ties by endpoint labels) and
    accepted while positive and structurally sound: the growing blocks
    keep at most one factor per sequence, a single symbol, and stay
    pairwise non-crossing.  Connected components of accepted edges are
    the blocks.
    """
    if tau is None:
        tau = align.tau_list()
    order = sorted(tau, key=lambda e: (-tau[e], align.edge_sort_key(e)))
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    comp = {}  # root -> {"verts": set, "pos": {seq: pos}}
    for eid in order:
        if tau[eid] <= 0:
            break
        fa, fb = align.endpoints(eid)
        ra, rb = find(fa.key()), find(fb.key())
        ca = comp.get(ra, {"verts": {fa}, "pos": {fa.seq: fa.pos}})
        cb = comp.get(rb, {"verts": {fb}, "pos": {fb.seq: fb.pos}})
        if ra == rb:
            continue
        if set(ca["pos"]) & set(cb["pos"]):
            continue  # two factors would land on one sequence
        merged_pos = dict(ca["pos"])
        merged_pos.update(cb["pos"])
        ok = True
        for root, c in comp.items():
            if root in (ra, rb) or len(c["verts"]) < 2:
                continue
            if _blocks_cross(merged_pos, c["pos"]):
                ok = False
                break
        if not ok:
            continue
        parent[ra] = rb
        comp[rb] = {"verts": ca["verts"] | cb["verts"], "pos": merged_pos}
        comp.pop(ra, None)
    blocks = set()
    for root, c in comp.items():
        if find(root) == root and len(c["verts"]) >= 2:
            blocks.add(frozenset(c["verts"]))
    return frozenset(blocks)


def is_compatible(block_set):
    """Whether a set of blocks could appear together in one alignment."""
    blocks = [frozenset(b) for b in block_set]
    infos = []
    for b in blocks:
        syms = {fv.symbol for fv in b}
        if len(syms) > 1:
            return False
        pos = {}
        for fv in b:
            if fv.seq in pos:
                return False  # two factors of one sequence
            pos[fv.seq] = fv.pos
        infos.append((b, pos))
    for i in range(len(infos)):
        for j in range(i + 1, len(infos)):
            bi, pi = infos[i]
            bj, pj = infos[j]
            if bi & bj:
                return False
            if _blocks_cross(pi, pj):
                return False
    return True


def _edge_subset_blocks(align, eids):
    """Connected components (>= 2 vertices) of an edge id subset."""
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    members = {}
    for eid in eids:
        fa, fb = align.endpoints(eid)
        ra, rb = find(fa.key()), find(fb.key())
        sa = members.get(ra, {fa})
        sb = members.get(rb, {fb})
        if ra != rb:
            parent[ra] = rb
            members[rb] = sa | sb
            members.pop(ra, None)
        else:
            members[rb] = sa | sb
    return frozenset(
        frozenset(s) for r, s in members.items() if find(r) == r and len(s) >= 2
    )


def enumerate_maximal_compatible(align):
    """All maximal compatible edge subsets, as block sets, by exhaustive search.

    The verification oracle for small instances; refuses anything above
    the edge bound because the search is exponential.
    """
    eids = sorted(align.graph.edges)
    if len(eids) > _ORACLE_EDGE_LIMIT:
        raise OracleSizeError(
            f"{len(eids)} edges exceeds the {_ORACLE_EDGE_LIMIT}-edge oracle bound"
        )

    def compatible(subset):
        return is_compatible(_edge_subset_blocks(align, subset))

    results = set()

    def walk(i, chosen):
        if i == len(eids):
            for e in eids:
                if e not in chosen and compatible(chosen + [e]):
                    return  # extensible, not maximal
            results.add(_edge_subset_blocks(align, chosen))
            return
        e = eids[i]
        if compatible(chosen + [e]):
            walk(i + 1, chosen + [e])
        walk(i + 1, chosen)

    walk(0, [])
    return sorted(
        results,
        key=lambda bs: sorted(sorted(fv.key() for fv in b) for b in bs),
    )


def classify_solution(block_set, candidates):
    """Index of the candidate equal to block_set as a set of blocks, else None."""
    target = frozenset(frozenset(b) for b in block_set)
    for i, cand in enumerate(candidates):
        if frozenset(frozenset(b) for b in cand) == target:
            return i
    return None


def blocks_from_gapped(rows, gap=GAP):
    """Block set described by a gapped alignment.

    Each column groups its non-gap entries by symbol; groups of two or
    more factors form a block.  Used to express reference solutions in
    the same notation alignment tables use.
    """
    counts = [{} for _ in rows]
    pos_counts = [0] * len(rows)
    width = max(len(r) for r in rows)
    blocks = set()
    for col in range(width):
        groups = {}
        for s, row in enumerate(rows):
            ch = row[col] if col < len(row) else gap
            if ch == gap:
                continue
            occ = counts[s].get(ch, 0)
            counts[s][ch] = occ + 1
            pos = pos_counts[s]
            pos_counts[s] += 1
            groups.setdefault(ch, []).append(FactorVertex(ch, s, occ, pos))
        for sym, members in groups.items():
            if len(members) >= 2:
                blocks.add(frozenset(members))
    return frozenset(blocks)
