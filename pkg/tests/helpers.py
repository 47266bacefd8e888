"""Shared brute-force oracles and small-graph generators for the tests.

Everything here is deliberately naive: permutation search for
isomorphism, exhaustive enumeration for graph families.  The library
under test must agree with these on small inputs.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations

from sepstar.graphs import PortGraph


def brute_isomorphic(g: PortGraph, h: PortGraph) -> bool:
    """Isomorphism by trying every vertex bijection (ports pinned)."""
    if g.arity != h.arity or len(g.vertices) != len(h.vertices):
        return False
    grest = sorted(g.vertices - set(g.ports))
    hrest = sorted(h.vertices - set(h.ports))
    glab = dict(g.labels)
    hlab = dict(h.labels)
    for image in permutations(hrest):
        m = dict(zip(g.ports, h.ports))
        m.update(zip(grest, image))
        if any(glab.get(v) != hlab.get(m[v]) for v in g.vertices):
            continue
        ok = True
        for u, v in combinations(sorted(g.vertices), 2):
            if g.has_edge(u, v) != h.has_edge(m[u], m[v]):
                ok = False
                break
        if ok:
            return True
    return False


def graphs_on(n: int, arity: int, labels: tuple[str, ...] = ()) -> list[PortGraph]:
    """All graphs with exactly n named vertices, the first `arity` of
    which are the ports, over every edge set (and optional labellings).
    Not deduplicated up to isomorphism."""
    names = [f"n{i}" for i in range(n)]
    ports = tuple(names[:arity])
    pairs = list(combinations(names, 2))
    out = []
    labelings: list[dict[str, str]] = [{}]
    if labels:
        labelings = []
        options = [None, *labels]
        stack = [(0, {})]
        while stack:
            i, cur = stack.pop()
            if i == n:
                labelings.append(dict(cur))
                continue
            for c in options:
                nxt = dict(cur)
                if c is not None:
                    nxt[names[i]] = c
                stack.append((i + 1, nxt))
    for bits in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if bits >> i & 1]
        for lab in labelings:
            out.append(PortGraph.build(names, edges, ports, lab))
    return out


@lru_cache(maxsize=None)
def graph_pool(max_n: int, arity: int) -> tuple[PortGraph, ...]:
    """Unlabelled graphs with arity ports and up to max_n vertices,
    one representative per isomorphism class (via the brute oracle)."""
    reps: list[PortGraph] = []
    for n in range(max(arity, 1), max_n + 1):
        for g in graphs_on(n, arity):
            if not any(brute_isomorphic(g, r) for r in reps):
                reps.append(g)
    return tuple(reps)


def path_graph(n: int, arity: int = 0) -> PortGraph:
    names = [f"u{i}" for i in range(n)]
    edges = [(names[i], names[i + 1]) for i in range(n - 1)]
    return PortGraph.build(names, edges, tuple(names[:arity]))


def cycle_graph(n: int) -> PortGraph:
    names = [f"u{i}" for i in range(n)]
    edges = [(names[i], names[(i + 1) % n]) for i in range(n)]
    return PortGraph.build(names, edges)


def complete_graph(n: int, arity: int = 0) -> PortGraph:
    names = [f"u{i}" for i in range(n)]
    edges = list(combinations(names, 2))
    return PortGraph.build(names, edges, tuple(names[:arity]))


def star_graph(leaves: int) -> PortGraph:
    names = ["hub"] + [f"leaf{i}" for i in range(leaves)]
    edges = [("hub", leaf) for leaf in names[1:]]
    return PortGraph.build(names, edges)


def random_context(rng, k: int, max_n: int):
    """A random context of the given arity with up to max_n vertices."""
    from sepstar.contexts import Context, ContextError

    while True:
        n = rng.randint(1, max_n)
        verts = [f"t{i}" for i in range(n)]
        edges = [p for p in combinations(verts, 2) if rng.random() < 0.4]
        left = {}
        right = {}
        for i in range(1, k + 1):
            if rng.random() < 0.6:
                left[i] = rng.choice(verts)
            if rng.random() < 0.6:
                right[i] = rng.choice(verts)
        try:
            return Context.build(verts, edges, k, left, right)
        except ContextError:
            continue  # injectivity or compatibility failed; redraw
