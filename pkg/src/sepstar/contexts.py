"""Contexts: graphs with a left and a right port interface.

A context of width-index k has two partial injective maps from port
indices 1..k to vertices.  Composition glues the right interface of the
first operand to the left interface of the second, index by index;
interface vertices with no partner simply become ordinary vertices, so
composition is total.  A port index mapped to the same vertex on both
sides is *persistent*: that vertex survives the whole context.

The reachability type of a context records, for every pair of interface
references, whether they are linked by a path with no intermediate port
vertices ("inner" path).  Reachability types compose without looking at
the underlying graphs, which is what the recognizer machinery in
`sepstar.monoids` exploits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .graphs import canonical_order

__all__ = [
    "ContextError",
    "Context",
    "ReachType",
    "identity_context",
    "compose",
    "compose_all",
    "persistent_ports",
    "inner_components",
    "bridges",
    "beta",
    "beta_compose",
    "reaches",
    "context_cert",
    "canonical_rename_context",
    "isomorphic_contexts",
    "GeneratorAlphabet",
    "enumerate_generators",
    "build_from_word",
    "crossing_context",
    "hub_context",
    "context_to_json",
    "context_from_json",
    "dump_context",
    "load_context",
]


class ContextError(ValueError):
    """Raised for malformed contexts and illegal compositions."""


def _norm_edge(u: str, v: str) -> tuple[str, str]:
    if u == v:
        raise ContextError(f"loop edge at {u!r}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Context:
    """Immutable context; build instances with :meth:`Context.build`.

    ``left`` and ``right`` have one entry per port index (0-based
    internally, 1-based in all user-facing syntax); ``None`` marks an
    undefined index.
    """

    vertices: frozenset[str]
    edges: frozenset[tuple[str, str]]
    left: tuple[str | None, ...]
    right: tuple[str | None, ...]

    @staticmethod
    def build(vertices, edges, arity: int, left: dict, right: dict) -> "Context":
        vs = frozenset(vertices)
        if not vs:
            raise ContextError("contexts must have at least one vertex")
        for v in vs:
            if not isinstance(v, str):
                raise ContextError(f"vertex names must be strings, got {v!r}")
        es = frozenset(_norm_edge(u, v) for (u, v) in edges)
        for (u, v) in es:
            if u not in vs or v not in vs:
                raise ContextError(f"edge ({u!r}, {v!r}) uses unknown vertices")
        if arity < 0:
            raise ContextError("arity must be nonnegative")

        def side(m: dict, name: str) -> tuple[str | None, ...]:
            out: list[str | None] = [None] * arity
            for i, v in m.items():
                i = int(i)
                if not 1 <= i <= arity:
                    raise ContextError(f"{name} index {i} out of range 1..{arity}")
                if v not in vs:
                    raise ContextError(f"{name} port {i} maps to unknown vertex {v!r}")
                out[i - 1] = v
            defined = [v for v in out if v is not None]
            if len(set(defined)) != len(defined):
                raise ContextError(f"{name} interface must be injective")
            return tuple(out)

        lt = side(left, "left")
        rt = side(right, "right")
        for i, v in enumerate(lt):
            if v is None:
                continue
            for j, w in enumerate(rt):
                if w == v and i != j:
                    raise ContextError(
                        f"vertex {v!r} is left port {i + 1} and right port {j + 1}"
                    )
        return Context(vs, es, lt, rt)

    @property
    def arity(self) -> int:
        return len(self.left)

    def left_map(self) -> dict[int, str]:
        return {i + 1: v for i, v in enumerate(self.left) if v is not None}

    def right_map(self) -> dict[int, str]:
        return {i + 1: v for i, v in enumerate(self.right) if v is not None}

    def port_vertices(self) -> frozenset[str]:
        return frozenset(v for v in self.left + self.right if v is not None)

    def neighbors(self, v: str) -> frozenset[str]:
        return _ctx_adjacency(self)[v]

    def __repr__(self) -> str:
        return (
            f"Context(n={len(self.vertices)}, m={len(self.edges)}, "
            f"left={self.left_map()}, right={self.right_map()})"
        )


@lru_cache(maxsize=None)
def _ctx_adjacency(w: Context) -> dict[str, frozenset[str]]:
    adj: dict[str, set[str]] = {v: set() for v in w.vertices}
    for (u, v) in w.edges:
        adj[u].add(v)
        adj[v].add(u)
    return {v: frozenset(ns) for v, ns in adj.items()}


def persistent_ports(w: Context) -> frozenset[int]:
    """Indices (1-based) whose left and right vertex coincide."""
    return frozenset(
        i + 1
        for i in range(w.arity)
        if w.left[i] is not None and w.left[i] == w.right[i]
    )


def identity_context(k: int) -> Context:
    if k < 1:
        raise ContextError("the identity context needs arity at least 1")
    names = {i + 1: f"p{i + 1}" for i in range(k)}
    return Context.build(names.values(), [], k, names, names)


# ---------------------------------------------------------------------------
# composition


def compose(u: Context, v: Context) -> Context:
    """Glue u's right interface to v's left interface.

    Total: where only one side defines an index, that vertex loses its
    port role.  Distinct operand vertices never collapse together
    (interfaces are injective), so the composite is again simple.
    """
    if u.arity != v.arity:
        raise ContextError(f"compose needs equal arities, got {u.arity}, {v.arity}")
    k = u.arity
    parent: dict[tuple[str, str], tuple[str, str]] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    nodes = [("u", x) for x in u.vertices] + [("v", y) for y in v.vertices]
    for nd in nodes:
        parent[nd] = nd
    for i in range(k):
        a, b = u.right[i], v.left[i]
        if a is not None and b is not None:
            parent[find(("u", a))] = find(("v", b))

    classes: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for nd in nodes:
        classes.setdefault(find(nd), []).append(nd)
    name_of: dict[tuple[str, str], str] = {}
    for idx, root in enumerate(sorted(classes, key=lambda r: min(classes[r]))):
        for nd in classes[root]:
            name_of[nd] = f"z{idx}"

    edges = set()
    for (x, y) in u.edges:
        edges.add(_norm_edge(name_of[("u", x)], name_of[("u", y)]))
    for (x, y) in v.edges:
        edges.add(_norm_edge(name_of[("v", x)], name_of[("v", y)]))
    left = {
        i + 1: name_of[("u", x)] for i, x in enumerate(u.left) if x is not None
    }
    right = {
        i + 1: name_of[("v", y)] for i, y in enumerate(v.right) if y is not None
    }
    return Context.build(set(name_of.values()), edges, k, left, right)


def compose_all(contexts) -> Context:
    """Left fold of compose; needs at least one operand."""
    items = list(contexts)
    if not items:
        raise ContextError("cannot compose an empty sequence")
    acc = items[0]
    for w in items[1:]:
        acc = compose(acc, w)
    return acc


# ---------------------------------------------------------------------------
# inner components and bridges


def inner_components(w: Context) -> tuple[frozenset[tuple[str, str]], ...]:
    """Partition the edges: two edges are together iff they are linked
    by shared non-port vertices (ports do not merge components)."""
    ports = w.port_vertices()
    edges = sorted(w.edges)
    parent = {e: e for e in edges}

    def find(e):
        while parent[e] != e:
            parent[e] = parent[parent[e]]
            e = parent[e]
        return e

    touching: dict[str, tuple[str, str]] = {}
    for e in edges:
        for x in e:
            if x in ports:
                continue
            if x in touching:
                parent[find(e)] = find(touching[x])
            else:
                touching[x] = e
    groups: dict[tuple[str, str], set[tuple[str, str]]] = {}
    for e in edges:
        groups.setdefault(find(e), set()).add(e)
    return tuple(frozenset(groups[r]) for r in sorted(groups))


def bridges(w: Context) -> tuple[frozenset[tuple[str, str]], ...]:
    """Inner components that span the context: they touch a left-port
    vertex and a right-port vertex and avoid persistent vertices.

    Components hanging off a persistent vertex do not count: a
    persistent vertex is available on both interfaces for free and
    never obstructs slicing the context into factors.
    """
    left_vs = frozenset(v for v in w.left if v is not None)
    right_vs = frozenset(v for v in w.right if v is not None)
    pers = frozenset(
        w.left[i - 1] for i in persistent_ports(w)
    )
    out = []
    for comp in inner_components(w):
        touched = {x for e in comp for x in e}
        if touched & pers:
            continue
        if touched & left_vs and touched & right_vs:
            out.append(comp)
    return tuple(out)


# ---------------------------------------------------------------------------
# reachability types

PortRef = tuple[str, int]  # ("L", i) or ("R", i), 1-based


def _norm_pair(p: PortRef, q: PortRef) -> tuple[PortRef, PortRef]:
    return (p, q) if p <= q else (q, p)


@dataclass(frozen=True)
class ReachType:
    """Interface-level abstraction of a context.

    ``reach`` holds unordered pairs of references linked by an inner
    path (no intermediate port vertices; length 0 allowed, so every
    persistent index links its own two references).  Reflexive pairs
    are stored for every defined reference.
    """

    arity: int
    left_defined: frozenset[int]
    right_defined: frozenset[int]
    persistent: frozenset[int]
    reach: frozenset[tuple[PortRef, PortRef]]

    def __post_init__(self):
        assert self.persistent <= self.left_defined & self.right_defined
        for (p, q) in self.reach:
            for side, i in (p, q):
                defined = self.left_defined if side == "L" else self.right_defined
                assert i in defined, f"reach pair uses undefined reference {(side, i)}"


def reaches(rt: ReachType, p: PortRef, q: PortRef) -> bool:
    return p == q or _norm_pair(p, q) in rt.reach


def _refs(rt: ReachType) -> list[PortRef]:
    return [("L", i) for i in sorted(rt.left_defined)] + [
        ("R", j) for j in sorted(rt.right_defined)
    ]


def beta(w: Context) -> ReachType:
    """The reachability type of a concrete context."""
    ports = w.port_vertices()
    inner = sorted(w.vertices - ports)
    parent = {v: v for v in inner}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (x, y) in w.edges:
        if x not in ports and y not in ports:
            parent[find(x)] = find(y)

    adj = _ctx_adjacency(w)
    comp_sets: dict[str, frozenset[str]] = {}
    for p in ports:
        comp_sets[p] = frozenset(find(x) for x in adj[p] if x not in ports)

    def vertex_of(ref: PortRef) -> str:
        side, i = ref
        v = w.left[i - 1] if side == "L" else w.right[i - 1]
        assert v is not None
        return v

    left_def = frozenset(i + 1 for i, v in enumerate(w.left) if v is not None)
    right_def = frozenset(j + 1 for j, v in enumerate(w.right) if v is not None)
    refs = [("L", i) for i in sorted(left_def)] + [("R", j) for j in sorted(right_def)]
    pairs = set()
    for a in range(len(refs)):
        for b in range(a, len(refs)):
            p, q = refs[a], refs[b]
            vp, vq = vertex_of(p), vertex_of(q)
            linked = (
                vp == vq
                or vq in adj[vp]
                or bool(comp_sets[vp] & comp_sets[vq])
            )
            if linked:
                pairs.add(_norm_pair(p, q))
    return ReachType(w.arity, left_def, right_def, persistent_ports(w), frozenset(pairs))


def beta_compose(r1: ReachType, r2: ReachType) -> ReachType:
    """Compose two reachability types; matches beta of the composition.

    Interface references of the two operands are merged into classes
    (persistence links a context's own two references, gluing links
    right of the first to left of the second).  A class is a port of
    the composite iff it contains a left reference of the first operand
    or a right reference of the second.  Composite reachability is
    graph search over classes in which only non-port classes may be
    crossed.
    """
    if r1.arity != r2.arity:
        raise ContextError("reach types must have equal arity")
    nodes = (
        [("u", "L", i) for i in sorted(r1.left_defined)]
        + [("u", "R", i) for i in sorted(r1.right_defined)]
        + [("v", "L", i) for i in sorted(r2.left_defined)]
        + [("v", "R", i) for i in sorted(r2.right_defined)]
    )
    parent = {nd: nd for nd in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        parent[find(a)] = find(b)

    for i in r1.persistent:
        union(("u", "L", i), ("u", "R", i))
    for i in r2.persistent:
        union(("v", "L", i), ("v", "R", i))
    for i in r1.right_defined & r2.left_defined:
        union(("u", "R", i), ("v", "L", i))

    edges: dict[tuple, set[tuple]] = {find(nd): set() for nd in nodes}
    for side, rt in (("u", r1), ("v", r2)):
        for (p, q) in rt.reach:
            a, b = find((side, *p)), find((side, *q))
            edges[a].add(b)
            edges[b].add(a)

    is_port: dict[tuple, bool] = {r: False for r in edges}
    for nd in nodes:
        if nd[0] == "u" and nd[1] == "L":
            is_port[find(nd)] = True
        if nd[0] == "v" and nd[1] == "R":
            is_port[find(nd)] = True

    def cls(ref: PortRef) -> tuple:
        side, i = ref
        return find(("u", "L", i)) if side == "L" else find(("v", "R", i))

    out_refs = [("L", i) for i in sorted(r1.left_defined)] + [
        ("R", j) for j in sorted(r2.right_defined)
    ]
    reachable_from: dict[tuple, set[tuple]] = {}
    for ref in out_refs:
        start = cls(ref)
        if start in reachable_from:
            continue
        seen = {start}
        frontier = [start]
        reached = set()
        while frontier:
            c = frontier.pop()
            for nb in edges[c]:
                if nb in reached:
                    continue
                reached.add(nb)
                if not is_port[nb] and nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        reachable_from[start] = reached

    pairs = set()
    for a in range(len(out_refs)):
        for b in range(a, len(out_refs)):
            p, q = out_refs[a], out_refs[b]
            cp, cq = cls(p), cls(q)
            if cp == cq or cq in reachable_from[cp]:
                pairs.add(_norm_pair(p, q))
    return ReachType(
        r1.arity,
        r1.left_defined,
        r2.right_defined,
        r1.persistent & r2.persistent,
        frozenset(pairs),
    )


# ---------------------------------------------------------------------------
# canonical forms


def _ctx_color_keys(w: Context) -> dict[str, str]:
    keys = {}
    lpos = {v: i + 1 for i, v in enumerate(w.left) if v is not None}
    rpos = {v: i + 1 for i, v in enumerate(w.right) if v is not None}
    for v in w.vertices:
        keys[v] = f"L{lpos.get(v, 0):03d}R{rpos.get(v, 0):03d}"
    return keys


@lru_cache(maxsize=None)
def context_cert(w: Context) -> bytes:
    """Equal for two contexts iff they are isomorphic (interfaces
    preserved index by index)."""
    vertices = sorted(w.vertices)
    order = canonical_order(vertices, _ctx_adjacency(w), _ctx_color_keys(w))
    n = len(order)
    keys = _ctx_color_keys(w)
    pos = {v: i for i, v in enumerate(order)}
    bits = []
    for i in range(n):
        for j in range(i + 1, n):
            e = (order[i], order[j]) if order[i] < order[j] else (order[j], order[i])
            bits.append("1" if e in w.edges else "0")
    head = f"c;{n};{w.arity};" + "|".join(keys[v] for v in order)
    assert len(pos) == n
    return (head + "#" + "".join(bits)).encode()


def canonical_rename_context(w: Context) -> Context:
    vertices = sorted(w.vertices)
    order = canonical_order(vertices, _ctx_adjacency(w), _ctx_color_keys(w))
    ren = {v: f"v{i}" for i, v in enumerate(order)}
    return Context.build(
        ren.values(),
        [(ren[x], ren[y]) for (x, y) in w.edges],
        w.arity,
        {i + 1: ren[v] for i, v in enumerate(w.left) if v is not None},
        {i + 1: ren[v] for i, v in enumerate(w.right) if v is not None},
    )


def isomorphic_contexts(u: Context, v: Context) -> bool:
    if u.arity != v.arity or len(u.vertices) != len(v.vertices):
        return False
    return context_cert(u) == context_cert(v)


# ---------------------------------------------------------------------------
# the generator alphabet


@dataclass(frozen=True)
class GeneratorAlphabet:
    """Contexts with at most arity+1 vertices, one per isomorphism
    class, in a stable order with ids g0, g1, ..."""

    arity: int
    contexts: tuple[Context, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f"g{i}" for i in range(len(self.contexts)))

    def by_id(self, gid: str) -> Context:
        if not gid.startswith("g"):
            raise ContextError(f"unknown generator id {gid!r}")
        try:
            idx = int(gid[1:])
            return self.contexts[idx]
        except (ValueError, IndexError):
            raise ContextError(f"unknown generator id {gid!r}") from None

    def __len__(self) -> int:
        return len(self.contexts)


def _partial_injections(indices: list[int], verts: list[str]):
    """All injective partial maps from `indices` into `verts`."""
    if not indices:
        yield {}
        return
    first, rest = indices[0], indices[1:]
    for sub in _partial_injections(rest, verts):
        yield dict(sub)
        used = set(sub.values())
        for v in verts:
            if v not in used:
                yield {first: v, **sub}


@lru_cache(maxsize=None)
def enumerate_generators(k: int) -> GeneratorAlphabet:
    """The width-k generator alphabet.

    Every context of pathwidth at most k factors into these (at most
    k+1 vertices each); conversely any product of them has pathwidth at
    most k.
    """
    if k < 1:
        raise ContextError("generator alphabets need arity at least 1")
    seen: dict[bytes, Context] = {}
    idx_range = list(range(1, k + 1))
    for n in range(1, k + 2):
        verts = [f"v{i}" for i in range(n)]
        pairs = list(combinations(verts, 2))
        for bits in range(1 << len(pairs)):
            edges = [pairs[i] for i in range(len(pairs)) if bits >> i & 1]
            for left in _partial_injections(idx_range, verts):
                for right in _partial_injections(idx_range, verts):
                    ok = True
                    for i, x in left.items():
                        for j, y in right.items():
                            if x == y and i != j:
                                ok = False
                                break
                        if not ok:
                            break
                    if not ok:
                        continue
                    w = Context.build(verts, edges, k, left, right)
                    cert = context_cert(w)
                    if cert not in seen:
                        seen[cert] = canonical_rename_context(w)
    ordered = sorted(seen.values(), key=lambda w: (len(w.vertices), context_cert(w)))
    return GeneratorAlphabet(k, tuple(ordered))


def build_from_word(k: int, word) -> Context:
    """Compose generators by id ('g12') or inline Context objects."""
    alphabet = enumerate_generators(k)
    items = []
    for w in word:
        if isinstance(w, str):
            items.append(alphabet.by_id(w))
        elif isinstance(w, Context):
            if w.arity != k:
                raise ContextError("word letters must all have the target arity")
            items.append(w)
        else:
            raise ContextError(f"bad word letter {w!r}")
    return compose_all(items)


# ---------------------------------------------------------------------------
# fixtures


def crossing_context() -> Context:
    """Two disjoint wires that swap sides: left 1 connects to right 2's
    partner and vice versa.  Its reachability type squares to the
    identity pattern, which makes powers alternate."""
    return Context.build(
        ["a", "b", "c", "d"],
        [("a", "d"), ("b", "c")],
        2,
        {1: "a", 2: "b"},
        {1: "c", 2: "d"},
    )


def hub_context() -> Context:
    """The crossing plus a central hub adjacent to all four interface
    vertices.  All interface references reach each other, so the
    reachability type is idempotent, yet the parity of the number of
    copies decides whether two disjoint crossing-free paths exist."""
    return Context.build(
        ["a", "b", "c", "d", "z"],
        [("a", "d"), ("b", "c"), ("a", "z"), ("b", "z"), ("z", "c"), ("z", "d")],
        2,
        {1: "a", 2: "b"},
        {1: "c", 2: "d"},
    )


# ---------------------------------------------------------------------------
# serialisation


def context_to_json(w: Context) -> dict:
    return {
        "vertices": sorted(w.vertices),
        "edges": sorted([x, y] for (x, y) in w.edges),
        "arity": w.arity,
        "left": {str(i): v for i, v in w.left_map().items()},
        "right": {str(i): v for i, v in w.right_map().items()},
    }


def context_from_json(data) -> Context:
    if not isinstance(data, dict):
        raise ContextError("context JSON must be an object")
    extra = set(data) - {"vertices", "edges", "arity", "left", "right"}
    if extra:
        raise ContextError(f"unknown context fields: {sorted(extra)}")
    for field in ("vertices", "arity"):
        if field not in data:
            raise ContextError(f"context JSON needs a {field!r} field")
    edges = data.get("edges", [])
    for e in edges:
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise ContextError(f"bad edge entry: {e!r}")

    def intkeys(m, name):
        out = {}
        for key, v in (m or {}).items():
            try:
                out[int(key)] = v
            except (TypeError, ValueError):
                raise ContextError(f"bad {name} index {key!r}") from None
        return out

    return Context.build(
        data["vertices"],
        [tuple(e) for e in edges],
        data["arity"],
        intkeys(data.get("left"), "left"),
        intkeys(data.get("right"), "right"),
    )


def dump_context(w: Context) -> str:
    return json.dumps(context_to_json(w), indent=2, sort_keys=True) + "\n"


def load_context(path: str) -> Context:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContextError(f"{path}: not valid JSON ({exc})") from None
    return context_from_json(data)
