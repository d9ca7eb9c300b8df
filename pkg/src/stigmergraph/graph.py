"""Shared environment graph.

The graph is the only communication medium between ants: every engine reads
and writes pheromone on its edges and (for the disambiguation engine) resources
and conceptual vectors on its vertices.  Solutions are never scored against an
objective function; they are read off this structure after the dynamics have
run.

Vertices and edges carry integer ids that are stable for the lifetime of the
graph.  Pheromone is stored per edge as a map from color id to a signed level;
negative levels are legal (the alignment engine's penalty rule drives edges
below zero and never clamps).
"""

from .errors import (
    InvalidDimensionError,
    InvalidParameterError,
    MissingEdgeError,
    MissingVertexError,
    SelfLoopError,
)

# Attribute keys the problem engines may attach to vertices.  Loaders reject
# anything outside this set so that typos fail loudly instead of silently
# producing inert attributes.
DECLARED_VERTEX_ATTRS = frozenset(
    {
        "nest",      # path engine: source marker
        "symbol",    # alignment engine: factor letter
        "seq",       # alignment engine: sequence index (0-based)
        "occ",       # alignment engine: occurrence index within its sequence
        "pos",       # alignment engine: position in the reduced sequence
        "kind",      # disambiguation engine: node kind
        "word",      # disambiguation engine: surface form
        "tag",       # disambiguation engine: sense tag
        "part_of_speech",  # disambiguation engine: morphosyntactic label
        "resource",  # disambiguation engine: resource level
        "vector",    # disambiguation engine: conceptual vector
    }
)


class VertexState:
    __slots__ = ("id", "attrs")

    def __init__(self, vid, attrs=None):
        self.id = vid
        self.attrs = dict(attrs) if attrs else {}

    def __repr__(self):
        return f"VertexState(id={self.id}, attrs={self.attrs})"


class EdgeState:
    """Undirected edge with per-color pheromone.

    bridge=True marks shortcut edges the disambiguation engine may evict once
    their pheromone decays; ordinary edges are permanent.
    """

    __slots__ = ("id", "u", "v", "bridge", "pheromone")

    def __init__(self, eid, u, v, bridge=False, pheromone=None):
        self.id = eid
        self.u = u
        self.v = v
        self.bridge = bridge
        self.pheromone = dict(pheromone) if pheromone else {}

    def other(self, vid):
        return self.v if vid == self.u else self.u

    def __repr__(self):
        kind = "bridge" if self.bridge else "edge"
        return f"EdgeState({kind} {self.id}: {self.u}-{self.v}, ph={self.pheromone})"


class EnvironmentGraph:
    """Undirected multigraph-free graph with colored pheromone fields.

    Neighbor iteration order is edge-insertion order per vertex and is part of
    the determinism contract: transition rules walk candidate lists in this
    order when consuming random draws.
    """

    def __init__(self):
        self.vertices = {}
        self.edges = {}
        self._adj = {}  # vid -> {other_vid: edge_id}, insertion-ordered
        self.colors = []  # color id -> name
        self._color_ids = {}
        self.step = 0
        self._next_vertex = 0
        self._next_edge = 0

    # -- construction -----------------------------------------------------

    def ensure_color(self, name):
        """Intern a color name, returning its stable integer id."""
        cid = self._color_ids.get(name)
        if cid is None:
            cid = len(self.colors)
            self.colors.append(name)
            self._color_ids[name] = cid
        return cid

    def add_vertex(self, attrs=None):
        vid = self._next_vertex
        self._next_vertex += 1
        self.vertices[vid] = VertexState(vid, attrs)
        self._adj[vid] = {}
        return vid

    def add_edge(self, u, v, bridge=False, pheromone=None):
        if u == v:
            raise SelfLoopError(f"self-loop at vertex {u}")
        if u not in self.vertices:
            raise MissingVertexError(u)
        if v not in self.vertices:
            raise MissingVertexError(v)
        if v in self._adj[u]:
            raise InvalidParameterError(f"edge {u}-{v} already present")
        eid = self._next_edge
        self._next_edge += 1
        self.edges[eid] = EdgeState(eid, u, v, bridge=bridge, pheromone=pheromone)
        self._adj[u][v] = eid
        self._adj[v][u] = eid
        return eid

    def remove_edge(self, eid):
        edge = self.edges.pop(eid, None)
        if edge is None:
            raise MissingEdgeError(eid)
        del self._adj[edge.u][edge.v]
        del self._adj[edge.v][edge.u]
        return edge

    def add_bridge(self, u, v, ph0, color=0):
        """Create an evictable shortcut edge seeded with pheromone ph0.

        Idempotent: if any edge already joins u and v, its id is returned
        and nothing changes (several ants may bridge one pair per cycle).
        """
        if u == v:
            raise SelfLoopError(f"self-loop at vertex {u}")
        existing = self._adj.get(u, {}).get(v)
        if existing is not None:
            return existing
        return self.add_edge(u, v, bridge=True, pheromone={color: ph0})

    # -- queries -----------------------------------------------------------

    def neighbors(self, vid):
        """(neighbor id, edge id) pairs in deterministic insertion order."""
        if vid not in self._adj:
            raise MissingVertexError(vid)
        return list(self._adj[vid].items())

    def edge_between(self, u, v):
        eid = self._adj.get(u, {}).get(v)
        if eid is None:
            raise MissingEdgeError((u, v))
        return eid

    def has_edge(self, u, v):
        return v in self._adj.get(u, {})

    def degree(self, vid):
        return len(self._adj[vid])

    def pheromone(self, eid, color=0):
        edge = self.edges.get(eid)
        if edge is None:
            raise MissingEdgeError(eid)
        return edge.pheromone.get(color, 0.0)

    def total_pheromone(self, color=0):
        return sum(e.pheromone.get(color, 0.0) for e in self.edges.values())

    # -- dynamics ----------------------------------------------------------

    def deposit(self, eid, amount, color=0):
        """Add a signed pheromone quantity to one edge field."""
        edge = self.edges.get(eid)
        if edge is None:
            raise MissingEdgeError(eid)
        edge.pheromone[color] = edge.pheromone.get(color, 0.0) + amount

    def evaporate_all(self, rho):
        """Decay every pheromone field once: tau <- (1 - rho) * tau."""
        if not 0.0 <= rho <= 1.0:
            raise InvalidParameterError(f"evaporation rate {rho} outside [0, 1]")
        keep = 1.0 - rho
        for edge in self.edges.values():
            ph = edge.pheromone
            for color in ph:
                ph[color] *= keep


# -- generators -------------------------------------------------------------


def make_torus(rows, cols):
    """Wrap-around grid: row-major vertex ids, right+down edges per vertex.

    rows and cols must both be >= 3 so that wrapping never creates a parallel
    edge; every vertex then has degree exactly 4 and the graph has
    2 * rows * cols edges.
    """
    if rows < 3 or cols < 3:
        raise InvalidDimensionError(f"torus needs rows, cols >= 3, got ({rows}, {cols})")
    g = EnvironmentGraph()
    for _ in range(rows * cols):
        g.add_vertex()
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            g.add_edge(v, r * cols + (c + 1) % cols)
            g.add_edge(v, ((r + 1) % rows) * cols + c)
    return g


def make_random_tree(n, seed):
    """Random recursive tree: vertex i attaches to a uniform earlier vertex."""
    from .rng import DetRng

    if n < 2:
        raise InvalidDimensionError(f"tree needs n >= 2, got {n}")
    rng = DetRng(seed)
    g = EnvironmentGraph()
    g.add_vertex()
    for i in range(1, n):
        g.add_vertex()
        g.add_edge(rng.next_below(i), i)
    return g
