"""Undirected graphs with an ordered tuple of distinguished ports.

Every other module builds on this one: formulas are evaluated on port
graphs, star-free expressions denote sets of them, and contexts are
port graphs with two interfaces.  The conventions that matter:

* graphs are simple (no loops, no multi-edges) and nonempty,
* ports are pairwise distinct vertices; their order is significant,
* vertices may carry an optional string label.

Isomorphism respects ports positionally and labels exactly.  The
canonical form is computed by colour refinement plus an
individualisation search, which is exact (not just a heuristic) and
fast at the sizes this library works with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

__all__ = [
    "GraphError",
    "PortGraph",
    "connected_components",
    "separator_holds",
    "fuse",
    "forget",
    "add_port",
    "permute",
    "ports_only",
    "prime_factors",
    "canonical_cert",
    "canonical_rename",
    "isomorphic",
    "graph_to_json",
    "graph_from_json",
    "dump_graph",
    "load_graph",
    "encode_word",
]


class GraphError(ValueError):
    """Raised for malformed graphs or illegal graph operations."""


def _norm_edge(u: str, v: str) -> tuple[str, str]:
    if u == v:
        raise GraphError(f"loop edge at {u!r}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class PortGraph:
    """Immutable graph with ports.

    Do not call the constructor with unnormalised data; use
    :meth:`PortGraph.build`, which validates and normalises.
    ``labels`` is stored as a sorted tuple of (vertex, label) pairs so
    the whole object is hashable.
    """

    vertices: frozenset[str]
    edges: frozenset[tuple[str, str]]
    ports: tuple[str, ...]
    labels: tuple[tuple[str, str], ...] = ()

    @staticmethod
    def build(
        vertices,
        edges=(),
        ports=(),
        labels=None,
    ) -> "PortGraph":
        vs = frozenset(vertices)
        if not vs:
            raise GraphError("graphs must have at least one vertex")
        for v in vs:
            if not isinstance(v, str):
                raise GraphError(f"vertex names must be strings, got {v!r}")
        es = frozenset(_norm_edge(u, v) for (u, v) in edges)
        for (u, v) in es:
            if u not in vs or v not in vs:
                raise GraphError(f"edge ({u!r}, {v!r}) uses unknown vertices")
        pt = tuple(ports)
        if len(set(pt)) != len(pt):
            raise GraphError("ports must be pairwise distinct")
        for p in pt:
            if p not in vs:
                raise GraphError(f"port {p!r} is not a vertex")
        lab = dict(labels or {})
        for v, c in lab.items():
            if v not in vs:
                raise GraphError(f"label on unknown vertex {v!r}")
            if not isinstance(c, str):
                raise GraphError(f"labels must be strings, got {c!r}")
        return PortGraph(vs, es, pt, tuple(sorted(lab.items())))

    @property
    def arity(self) -> int:
        return len(self.ports)

    @property
    def label_map(self) -> dict[str, str]:
        return dict(self.labels)

    def label_of(self, v: str) -> str | None:
        return dict(self.labels).get(v)

    def has_edge(self, u: str, v: str) -> bool:
        if u == v:
            return False
        return ((u, v) if u < v else (v, u)) in self.edges

    def neighbors(self, v: str) -> frozenset[str]:
        return _adjacency(self)[v]

    def __repr__(self) -> str:  # keep test failures readable
        return (
            f"PortGraph(n={len(self.vertices)}, m={len(self.edges)}, "
            f"ports={self.ports})"
        )


@lru_cache(maxsize=None)
def _adjacency(g: PortGraph) -> dict[str, frozenset[str]]:
    adj: dict[str, set[str]] = {v: set() for v in g.vertices}
    for (u, v) in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    return {v: frozenset(ns) for v, ns in adj.items()}


# ---------------------------------------------------------------------------
# connectivity and separators


@lru_cache(maxsize=None)
def _component_ids(g: PortGraph, removed: frozenset[str]) -> dict[str, int]:
    """Map each vertex outside `removed` to a component id."""
    adj = _adjacency(g)
    ids: dict[str, int] = {}
    next_id = 0
    for start in sorted(g.vertices):
        if start in removed or start in ids:
            continue
        stack = [start]
        ids[start] = next_id
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in removed and w not in ids:
                    ids[w] = next_id
                    stack.append(w)
        next_id += 1
    return ids


def connected_components(g: PortGraph) -> tuple[frozenset[str], ...]:
    """Components as vertex sets, ordered by their smallest vertex name."""
    ids = _component_ids(g, frozenset())
    groups: dict[int, set[str]] = {}
    for v, i in ids.items():
        groups.setdefault(i, set()).add(v)
    return tuple(frozenset(groups[i]) for i in sorted(groups))


def is_connected(g: PortGraph) -> bool:
    return len(connected_components(g)) == 1


def separator_holds(g: PortGraph, x: str, y: str, zs) -> bool:
    """Does the vertex set ``zs`` separate ``x`` from ``y``?

    Convention for the degenerate cases: the atom holds whenever x or y
    is itself in ``zs``; with x and y both outside ``zs`` it holds iff
    they lie in different components of the graph minus ``zs``.  In
    particular a vertex is never separated from itself by a set that
    does not contain it.
    """
    removed = frozenset(zs)
    for v in (x, y, *removed):
        if v not in g.vertices:
            raise GraphError(f"unknown vertex {v!r}")
    if x in removed or y in removed:
        return True
    ids = _component_ids(g, removed)
    return ids[x] != ids[y]


# ---------------------------------------------------------------------------
# the four width operations


def fuse(g: PortGraph, h: PortGraph) -> PortGraph:
    """Glue two graphs of equal arity along their ports, positionwise.

    Port i of the result is the identified pair (port i of g, port i of
    h); edges accumulate.  Non-port vertices of the operands are kept
    apart.  Labels must agree on identified ports.
    """
    if g.arity != h.arity:
        raise GraphError(f"fuse needs equal arities, got {g.arity} and {h.arity}")
    k = g.arity
    gmap = {}
    for v in g.vertices:
        gmap[v] = f"a.{v}"
    hmap = {}
    for v in h.vertices:
        hmap[v] = f"b.{v}"
    for i in range(k):
        name = f"p{i + 1}"
        gmap[g.ports[i]] = name
        hmap[h.ports[i]] = name
    glab = {gmap[v]: c for v, c in g.labels}
    hlab = {hmap[v]: c for v, c in h.labels}
    for v, c in hlab.items():
        if v in glab and glab[v] != c:
            raise GraphError(f"label clash on fused port {v!r}")
    glab.update(hlab)
    verts = set(gmap.values()) | set(hmap.values())
    edges = {_norm_edge(gmap[u], gmap[v]) for (u, v) in g.edges}
    edges |= {_norm_edge(hmap[u], hmap[v]) for (u, v) in h.edges}
    ports = tuple(f"p{i + 1}" for i in range(k))
    return PortGraph.build(verts, edges, ports, glab)


def forget(g: PortGraph) -> PortGraph:
    """Demote the last port to an ordinary vertex."""
    if g.arity == 0:
        raise GraphError("forget on a graph with no ports")
    return PortGraph.build(g.vertices, g.edges, g.ports[:-1], dict(g.labels))


def add_port(g: PortGraph, name: str | None = None) -> PortGraph:
    """Append a fresh isolated vertex as a new last port."""
    if name is None:
        i = len(g.vertices)
        while f"q{i}" in g.vertices:
            i += 1
        name = f"q{i}"
    if name in g.vertices:
        raise GraphError(f"vertex {name!r} already present")
    return PortGraph.build(
        g.vertices | {name}, g.edges, g.ports + (name,), dict(g.labels)
    )


def with_port(g: PortGraph, v: str) -> PortGraph:
    """Promote an existing non-port vertex to a new last port."""
    if v not in g.vertices or v in g.ports:
        raise GraphError(f"{v!r} is not a promotable vertex")
    return PortGraph.build(g.vertices, g.edges, g.ports + (v,), dict(g.labels))


def permute(g: PortGraph, perm: tuple[int, ...]) -> PortGraph:
    """Reorder ports: new port i is old port perm[i] (1-based)."""
    if sorted(perm) != list(range(1, g.arity + 1)):
        raise GraphError(f"{perm!r} is not a permutation of 1..{g.arity}")
    ports = tuple(g.ports[i - 1] for i in perm)
    return PortGraph.build(g.vertices, g.edges, ports, dict(g.labels))


def drop_last_port(g: PortGraph) -> PortGraph:
    """Delete the last port vertex entirely (inverse of add_port)."""
    if g.arity == 0:
        raise GraphError("no port to drop")
    v = g.ports[-1]
    rest = g.vertices - {v}
    if not rest:
        raise GraphError("dropping the port would empty the graph")
    edges = {e for e in g.edges if v not in e}
    labels = {w: c for w, c in g.labels if w != v}
    return PortGraph.build(rest, edges, g.ports[:-1], labels)


# ---------------------------------------------------------------------------
# factorisation


def ports_only(g: PortGraph) -> PortGraph | None:
    """The sub-graph induced on the ports, or None at arity 0."""
    if g.arity == 0:
        return None
    pset = set(g.ports)
    edges = {e for e in g.edges if e[0] in pset and e[1] in pset}
    labels = {v: c for v, c in g.labels if v in pset}
    return PortGraph.build(pset, edges, g.ports, labels)


def nonport_classes(g: PortGraph) -> tuple[frozenset[str], ...]:
    """Group non-port vertices: two are together iff connected in g minus ports."""
    pset = set(g.ports)
    rest = sorted(g.vertices - pset)
    parent = {v: v for v in rest}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for (u, v) in g.edges:
        if u not in pset and v not in pset:
            parent[find(u)] = find(v)
    groups: dict[str, set[str]] = {}
    for v in rest:
        groups.setdefault(find(v), set()).add(v)
    return tuple(frozenset(groups[r]) for r in sorted(groups))


def prime_factors(g: PortGraph) -> tuple[PortGraph, ...]:
    """Fuse-prime factors of g: one per class of non-port vertices.

    Each factor is induced on the ports plus one class (port-port edges
    included in every factor).  Fusing all factors, or the port
    skeleton alone when there are none, reconstructs g up to
    isomorphism.
    """
    classes = nonport_classes(g)
    out = []
    for cls in classes:
        keep = cls | set(g.ports)
        edges = {e for e in g.edges if e[0] in keep and e[1] in keep}
        labels = {v: c for v, c in g.labels if v in keep}
        out.append(PortGraph.build(keep, edges, g.ports, labels))
    return tuple(out)


# ---------------------------------------------------------------------------
# canonical forms

# The engine works on an indexed view: vertices 0..n-1, an adjacency
# bitmask per vertex, and a sortable colour key per vertex.  Ports and
# labels are baked into the colour keys, so plain colour-respecting
# isomorphism on the indexed view is exactly port-and-label-respecting
# isomorphism on the original graph.


def _refine_colors(n: int, adj: list[int], colors: list[int]) -> list[int]:
    while True:
        sigs = []
        for v in range(n):
            row = adj[v]
            nbr = sorted(colors[u] for u in range(n) if row >> u & 1)
            sigs.append((colors[v], tuple(nbr)))
        ranking = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranking[s] for s in sigs]
        if new == colors:
            return colors
        colors = new


def _encode(n: int, adj: list[int], keys: list[str], perm: list[int]) -> bytes:
    pos = {v: i for i, v in enumerate(perm)}
    bits = []
    for i in range(n):
        for j in range(i + 1, n):
            bits.append("1" if adj[perm[i]] >> perm[j] & 1 else "0")
    payload = "|".join(keys[v] for v in perm) + "#" + "".join(bits)
    assert len(pos) == n
    return payload.encode()


def _search_canonical(n: int, adj: list[int], keys: list[str]) -> list[int]:
    """Return the vertex ordering whose encoding is minimal."""
    base = {k: i for i, k in enumerate(sorted(set(keys)))}
    init = [base[k] for k in keys]

    if n <= 5:
        # brute force over colour-respecting orders
        best = None
        groups: dict[int, list[int]] = {}
        for v in range(n):
            groups.setdefault(init[v], []).append(v)
        orders = [[]]
        for c in sorted(groups):
            orders = [
                o + list(p) for o in orders for p in permutations(groups[c])
            ]
        for perm in orders:
            enc = _encode(n, adj, keys, perm)
            if best is None or enc < best[0]:
                best = (enc, perm)
        assert best is not None
        return best[1]

    best: list[bytes | list[int] | None] = [None, None]

    def rec(colors: list[int]) -> None:
        colors = _refine_colors(n, adj, colors)
        groups: dict[int, list[int]] = {}
        for v in range(n):
            groups.setdefault(colors[v], []).append(v)
        target = None
        for c in sorted(groups):
            if len(groups[c]) > 1:
                target = groups[c]
                break
        if target is None:
            perm = sorted(range(n), key=lambda v: colors[v])
            enc = _encode(n, adj, keys, perm)
            if best[0] is None or enc < best[0]:
                best[0], best[1] = enc, perm
            return
        # candidates up to swap automorphisms visible right now
        chosen: list[int] = []
        for u in target:
            dup = False
            for w in chosen:
                if adj[u] & ~(1 << w) == adj[w] & ~(1 << u):
                    dup = True
                    break
            if not dup:
                chosen.append(u)
        for u in chosen:
            child = [c * 2 for c in colors]
            child[u] -= 1
            rec(child)

    rec(init)
    assert best[1] is not None
    return best[1]  # type: ignore[return-value]


def canonical_order(
    vertices: list[str], adj_sets: dict[str, frozenset[str]], keys: dict[str, str]
) -> list[str]:
    """Canonical vertex order for an arbitrary coloured graph.

    ``keys`` assigns each vertex a colour string; orderings may only
    mix vertices with equal keys.  Shared by graphs and contexts.
    """
    idx = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    adj = [0] * n
    for v in vertices:
        for w in adj_sets[v]:
            adj[idx[v]] |= 1 << idx[w]
    key_list = [keys[v] for v in vertices]
    perm = _search_canonical(n, adj, key_list)
    return [vertices[i] for i in perm]


def _graph_color_keys(g: PortGraph) -> dict[str, str]:
    keys = {}
    lab = dict(g.labels)
    for v in g.vertices:
        keys[v] = f"v:{lab.get(v, '')}"
    for i, p in enumerate(g.ports):
        keys[p] = f"P{i:03d}:{lab.get(p, '')}"
    return keys


@lru_cache(maxsize=None)
def canonical_cert(g: PortGraph) -> bytes:
    """A bytestring equal for two graphs iff they are isomorphic."""
    vertices = sorted(g.vertices)
    order = canonical_order(vertices, _adjacency(g), _graph_color_keys(g))
    idx = {v: i for i, v in enumerate(order)}
    n = len(order)
    bits = []
    for i in range(n):
        for j in range(i + 1, n):
            bits.append("1" if g.has_edge(order[i], order[j]) else "0")
    keys = _graph_color_keys(g)
    head = f"g;{n};{g.arity};" + "|".join(keys[v] for v in order)
    return (head + "#" + "".join(bits)).encode()


def canonical_rename(g: PortGraph) -> PortGraph:
    """Isomorphic copy with vertices named v0..v{n-1} in canonical order."""
    vertices = sorted(g.vertices)
    order = canonical_order(vertices, _adjacency(g), _graph_color_keys(g))
    ren = {v: f"v{i}" for i, v in enumerate(order)}
    return PortGraph.build(
        ren.values(),
        [(ren[u], ren[v]) for (u, v) in g.edges],
        tuple(ren[p] for p in g.ports),
        {ren[v]: c for v, c in g.labels},
    )


def isomorphic(g: PortGraph, h: PortGraph) -> bool:
    if g.arity != h.arity or len(g.vertices) != len(h.vertices):
        return False
    if len(g.edges) != len(h.edges):
        return False
    if sorted(c for _, c in g.labels) != sorted(c for _, c in h.labels):
        return False
    return canonical_cert(g) == canonical_cert(h)


# ---------------------------------------------------------------------------
# serialisation

# Graph files are JSON objects:
#   {"vertices": [...], "edges": [[u, v], ...], "ports": [...],
#    "labels": {vertex: label, ...}}
# dump_graph writes a canonical text form (sorted keys, sorted lists),
# so dump(load(dump(g))) == dump(g) byte for byte.


def graph_to_json(g: PortGraph) -> dict:
    out: dict = {
        "vertices": sorted(g.vertices),
        "edges": sorted([u, v] for (u, v) in g.edges),
        "ports": list(g.ports),
    }
    if g.labels:
        out["labels"] = {v: c for v, c in g.labels}
    return out


def graph_from_json(data) -> PortGraph:
    if not isinstance(data, dict):
        raise GraphError("graph JSON must be an object")
    extra = set(data) - {"vertices", "edges", "ports", "labels"}
    if extra:
        raise GraphError(f"unknown graph fields: {sorted(extra)}")
    if "vertices" not in data:
        raise GraphError("graph JSON needs a 'vertices' field")
    edges = data.get("edges", [])
    for e in edges:
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise GraphError(f"bad edge entry: {e!r}")
    return PortGraph.build(
        data["vertices"],
        [tuple(e) for e in edges],
        data.get("ports", ()),
        data.get("labels"),
    )


def dump_graph(g: PortGraph) -> str:
    return json.dumps(graph_to_json(g), indent=2, sort_keys=True) + "\n"


def load_graph(path: str) -> PortGraph:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: not valid JSON ({exc})") from None
    return graph_from_json(data)


# ---------------------------------------------------------------------------
# words as graphs


def encode_word(word: str) -> PortGraph:
    """Encode a finite word as a labelled graph with no ports.

    An anchor vertex labelled 'mark' starts a path; the i-th path
    vertex after the anchor carries the i-th letter as its label.
    Deleting any single path vertex separates what comes before it from
    what comes after, which is how formulas can talk about letter
    order.
    """
    verts = ["w0"] + [f"w{i + 1}" for i in range(len(word))]
    edges = [(verts[i], verts[i + 1]) for i in range(len(word))]
    labels = {"w0": "mark"}
    for i, ch in enumerate(word):
        labels[f"w{i + 1}"] = ch
    return PortGraph.build(verts, edges, (), labels)
