"""Shortest-path search by pheromone accumulation.

Forward ants wander from a nest towards a destination under the
greedy-or-explore rule; on arrival they retrace their recorded walk in
reverse, one edge per step, depositing a constant quantum on each distinct
walk edge.  Shorter walks are retraced faster and therefore reinforced more
often per unit time, which is the only selection pressure: the optimal path
is read off the pheromone field afterwards, never computed.
"""

from collections import deque

from ._kernels import get_backend
from .colony import (
    FORWARD,
    RETURNING,
    Ant,
    EngineParams,
    choose_next_exploit,
)
from .errors import InvalidParameterError, MissingVertexError

PATH_COLOR = "path"


class PathAnt(Ant):
    """Walker with the return-leg bookkeeping of this engine."""

    __slots__ = ("deposited",)

    def __init__(self, aid, nest, color=0):
        super().__init__(aid, nest, color)
        self.deposited = set()


class PathTask:
    """A validated path-search problem instance."""

    __slots__ = ("graph", "src", "dst", "n_ants", "steps", "params")

    def __init__(self, graph, src, dst, n_ants, steps, params):
        if src not in graph.vertices:
            raise MissingVertexError(src)
        if dst not in graph.vertices:
            raise MissingVertexError(dst)
        if src == dst:
            raise InvalidParameterError("src and dst must differ")
        if n_ants < 1:
            raise InvalidParameterError(f"n_ants={n_ants} must be >= 1")
        if steps < 0:
            raise InvalidParameterError(f"steps={steps} must be >= 0")
        self.graph = graph
        self.src = src
        self.dst = dst
        self.n_ants = n_ants
        self.steps = steps
        self.params = params


class PathRunResult:
    __slots__ = ("metrics", "first_goal", "path", "lengths")

    def __init__(self, metrics, first_goal, path):
        self.metrics = metrics
        self.first_goal = first_goal
        self.path = path
        self.lengths = [int(row[4]) for row in metrics]


def build_csr(g):
    """Compressed adjacency over contiguous indices.

    Returns (indptr, nbrs, eidx, vid_order, eid_order): vertices and edges are
    renumbered by ascending original id; per-vertex neighbor order preserves
    the graph's insertion order, which transition rules rely on.
    """
    vid_order = sorted(g.vertices)
    vmap = {vid: i for i, vid in enumerate(vid_order)}
    eid_order = sorted(g.edges)
    emap = {eid: i for i, eid in enumerate(eid_order)}
    indptr = [0]
    nbrs = []
    eidx = []
    for vid in vid_order:
        for nid, eid in g.neighbors(vid):
            nbrs.append(vmap[nid])
            eidx.append(emap[eid])
        indptr.append(len(nbrs))
    return indptr, nbrs, eidx, vid_order, eid_order


def run_path_task(task, *, backend=None, track_lengths=True,
                  snapshot_every=0, on_snapshot=None):
    """Run the search and write the final pheromone field back to the graph.

    snapshot_every > 0 invokes on_snapshot(graph, steps_done) at that cadence
    with the pheromone synchronized; the run itself is unaffected.  Returns a
    PathRunResult; metrics rows follow the kernel layout.
    """
    g = task.graph
    color = g.ensure_color(PATH_COLOR)
    p = task.params
    indptr, nbrs, eidx, vid_order, eid_order = build_csr(g)
    vmap = {vid: i for i, vid in enumerate(vid_order)}
    tau0 = [g.edges[eid].pheromone.get(color, 0.0) for eid in eid_order]
    kern = get_backend(backend)
    tabu_k = -1 if p.tabu_size is None else p.tabu_size
    st = kern.sp_pack(indptr, nbrs, eidx, tau0, vmap[task.src], vmap[task.dst],
                      task.n_ants, tabu_k, task.steps + 2)

    def sync():
        tau = kern.sp_tau(st)
        for i, eid in enumerate(eid_order):
            g.edges[eid].pheromone[color] = tau[i]

    metrics = []
    rng_state = p.seed
    done = 0
    step0 = g.step
    chunk = snapshot_every if snapshot_every and on_snapshot else task.steps
    while done < task.steps:
        n = min(chunk if chunk > 0 else task.steps, task.steps - done)
        rows, rng_state = kern.sp_run(st, n, p.rho, p.Q, p.q0, p.floor,
                                      rng_state, track_lengths)
        metrics.extend(rows)
        done += n
        if snapshot_every and on_snapshot and done < task.steps:
            sync()
            g.step = step0 + done
            on_snapshot(g, done)
    sync()
    g.step = step0 + task.steps
    info = kern.sp_info(st)
    path = extract_path(g, task.src, task.dst, color)
    first_goal = info["first_goal"]
    return PathRunResult(metrics, None if first_goal < 0 else int(first_goal), path)


def extract_path(g, src, dst, color=0):
    """Read the emergent path off the pheromone field.

    Greedy walk from src crossing the heaviest incident edge to an unvisited
    vertex (ties to the lowest vertex id), with a hop budget of |V|.  Returns
    the vertex list, or None when the walk dead-ends or exhausts the budget.
    """
    visited = {src}
    path = [src]
    cur = src
    for _ in range(len(g.vertices)):
        best_nid = -1
        best_tau = 0.0
        for nid, eid in g.neighbors(cur):
            if nid in visited:
                continue
            t = g.edges[eid].pheromone.get(color, 0.0)
            if best_nid < 0 or t > best_tau or (t == best_tau and nid < best_nid):
                best_nid = nid
                best_tau = t
        if best_nid < 0:
            return None
        visited.add(best_nid)
        path.append(best_nid)
        cur = best_nid
        if cur == dst:
            return path
    return None


def convergence_step(lengths, target):
    """First step index from which every extracted length equals target.

    lengths is the per-step extracted-length series; returns None when the
    series never locks onto target.
    """
    cut = None
    for i in range(len(lengths) - 1, -1, -1):
        if lengths[i] == target:
            cut = i
        else:
            break
    return cut


# -- independent oracles ------------------------------------------------------


def bfs_path(g, src, dst):
    """Breadth-first shortest path as a vertex list; None when unreachable."""
    if src == dst:
        return [src]
    parent = {src: src}
    queue = deque([src])
    while queue:
        cur = queue.popleft()
        for nid, _ in g.neighbors(cur):
            if nid in parent:
                continue
            parent[nid] = cur
            if nid == dst:
                path = [dst]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            queue.append(nid)
    return None


def bfs_shortest_length(g, src, dst):
    """Edge count of the shortest path; None when unreachable."""
    path = bfs_path(g, src, dst)
    return None if path is None else len(path) - 1


def widest_bottleneck(g, src, dst, color=0):
    """Maximin-pheromone oracle: the best worst edge on any src-dst path.

    Binary-searches the sorted distinct pheromone levels for the largest
    threshold that keeps dst reachable through edges at or above it, then
    returns (bottleneck, witness path) with the witness taken breadth-first
    inside the thresholded subgraph.  Returns (None, None) when dst is
    unreachable even with every edge kept.
    """

    def reachable_path(theta):
        if src == dst:
            return [src]
        parent = {src: src}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            for nid, eid in g.neighbors(cur):
                if nid in parent:
                    continue
                if g.edges[eid].pheromone.get(color, 0.0) < theta:
                    continue
                parent[nid] = cur
                if nid == dst:
                    path = [dst]
                    while path[-1] != src:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path
                queue.append(nid)
        return None

    levels = sorted({e.pheromone.get(color, 0.0) for e in g.edges.values()})
    if not levels or reachable_path(levels[0]) is None:
        return None, None
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if reachable_path(levels[mid]) is not None:
            lo = mid
        else:
            hi = mid - 1
    return levels[lo], reachable_path(levels[lo])


# -- object-level stepping (reference semantics for the kernels) --------------


def make_path_advance(dst, goal_log=None):
    """Per-ant advance hook reproducing the kernel's path semantics.

    Usable with colony.step_all; kept as the readable reference that the
    array kernels are tested against.  goal_log, when given, collects the
    step-local ids of ants that reached dst.
    """

    def advance(g, ant, rng, params):
        if ant.mode == FORWARD:
            choice = choose_next_exploit(g, ant, rng, params)
            if choice is None:
                ant.deposited.clear()
                return "blocked"
            ant.advance_to(choice[0])
            if choice[0] == dst:
                ant.mode = RETURNING
                ant.return_index = len(ant.walk) - 1
                if goal_log is not None:
                    goal_log.append(ant.id)
            return "moved"
        i = ant.return_index
        eid = g.edge_between(ant.walk[i - 1], ant.walk[i])
        ant.return_index = i - 1
        ant.location = ant.walk[i - 1]
        if eid not in ant.deposited:
            g.deposit(eid, params.Q, ant.color)
            ant.deposited.add(eid)
        if ant.return_index == 0:
            ant.reset_to_nest()
            ant.deposited.clear()
        return "moved"

    return advance
