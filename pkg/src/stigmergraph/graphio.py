"""Graph serialization: JSON round-trip and Graphviz DOT snapshots."""

import json

from .errors import GraphFormatError
from .graph import DECLARED_VERTEX_ATTRS, EdgeState, EnvironmentGraph, VertexState


def export_json(g):
    """Serialize a graph to a JSON string.

    Schema (field names are stable):
      {"vertices": [{"id", "attrs"}...],
       "edges": [{"id", "u", "v", "bridge", "pheromone": {color_name: level}}...],
       "step": int}
    """
    doc = {
        "vertices": [{"id": v.id, "attrs": v.attrs} for v in g.vertices.values()],
        "edges": [
            {
                "id": e.id,
                "u": e.u,
                "v": e.v,
                "bridge": e.bridge,
                "pheromone": {
                    (g.colors[c] if 0 <= c < len(g.colors) else str(c)): level
                    for c, level in e.pheromone.items()
                },
            }
            for e in g.edges.values()
        ],
        "step": g.step,
    }
    return json.dumps(doc, indent=2)


def import_json(text, declared_attrs=DECLARED_VERTEX_ATTRS):
    """Parse a graph serialized by export_json.

    Vertex attribute keys outside ``declared_attrs`` are rejected; malformed
    JSON reports the 1-based line and column of the first offending character.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise GraphFormatError("top-level JSON value must be an object")
    for field in ("vertices", "edges", "step"):
        if field not in doc:
            raise GraphFormatError(f"missing required field '{field}'")

    g = EnvironmentGraph()
    for entry in doc["vertices"]:
        try:
            vid = entry["id"]
            attrs = entry.get("attrs", {})
        except (TypeError, KeyError) as exc:
            raise GraphFormatError(f"malformed vertex entry: {entry!r}") from exc
        unknown = set(attrs) - set(declared_attrs)
        if unknown:
            raise GraphFormatError(
                f"vertex {vid} has undeclared attribute keys {sorted(unknown)}"
            )
        if vid in g.vertices:
            raise GraphFormatError(f"duplicate vertex id {vid}")
        g.vertices[vid] = VertexState(vid, attrs)
        g._adj[vid] = {}
        g._next_vertex = max(g._next_vertex, vid + 1)

    for entry in doc["edges"]:
        try:
            eid, u, v = entry["id"], entry["u"], entry["v"]
        except (TypeError, KeyError) as exc:
            raise GraphFormatError(f"malformed edge entry: {entry!r}") from exc
        if u not in g.vertices or v not in g.vertices:
            raise GraphFormatError(f"edge {eid} references unknown vertex")
        if eid in g.edges:
            raise GraphFormatError(f"duplicate edge id {eid}")
        if u == v:
            raise GraphFormatError(f"edge {eid} is a self-loop at vertex {u}")
        if v in g._adj[u]:
            raise GraphFormatError(f"edge {eid} duplicates pair {u}-{v}")
        pher = {
            g.ensure_color(name): float(level)
            for name, level in entry.get("pheromone", {}).items()
        }
        g.edges[eid] = EdgeState(eid, u, v, bridge=bool(entry.get("bridge", False)), pheromone=pher)
        g._adj[u][v] = eid
        g._adj[v][u] = eid
        g._next_edge = max(g._next_edge, eid + 1)

    g.step = int(doc["step"])
    return g


def export_dot(g, color=None):
    """Render the graph as one undirected Graphviz block.

    Edge shade encodes pheromone: levels are linearly rescaled over the
    current min/max so the heaviest edge is darkest (gray0) and the lightest
    is gray100.  When every level is equal the graph carries no signal and all
    edges render gray100.  ``color`` selects one pheromone field; the default
    sums all fields per edge.
    """

    def level(edge):
        if color is not None:
            return edge.pheromone.get(color, 0.0)
        return sum(edge.pheromone.values()) if edge.pheromone else 0.0

    levels = {eid: level(e) for eid, e in g.edges.items()}
    if levels:
        lo = min(levels.values())
        hi = max(levels.values())
    else:
        lo = hi = 0.0
    span = hi - lo

    lines = ["graph stigmergraph {"]
    for vid in g.vertices:
        lines.append(f"  {vid};")
    for eid, edge in g.edges.items():
        shade = 1.0 if span == 0.0 else (hi - levels[eid]) / span
        gray = int(round(shade * 100))
        style = ', style=dashed' if edge.bridge else ""
        lines.append(f"  {edge.u} -- {edge.v} [color=gray{gray}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
