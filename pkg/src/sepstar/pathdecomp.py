"""Path decompositions of graphs and contexts.

A path decomposition is a sequence of bags (vertex sets) such that
every vertex appears in a contiguous run of bags, every edge has both
endpoints in some bag, and - for contexts - the left ports sit in the
first bag and the right ports in the last.  Width is the largest bag
size minus one.

The module computes exact pathwidth by dynamic programming over vertex
subsets, converts decompositions to and from add/remove instruction
sequences, reorders instruction sequences so that two independent
vertex classes stop interleaving (`dealternate`), and factorises a
context with at least two bridges into pieces that are either small
enough to be alphabet letters or strictly more persistent
(`two_bridge_decompose`).
"""

from __future__ import annotations

from itertools import combinations, permutations

from .contexts import (
    Context,
    ContextError,
    bridges,
    compose_all,
    isomorphic_contexts,
    persistent_ports,
)
from .graphs import PortGraph

__all__ = [
    "DecompositionError",
    "width",
    "normalize",
    "validate_decomposition",
    "pathwidth",
    "optimal_decomposition",
    "graph_pathwidth",
    "context_pathwidth",
    "context_decomposition",
    "is_caterpillar_forest",
    "to_instructions",
    "from_instructions",
    "instruction_width",
    "blocks_of",
    "dealternate",
    "two_bridge_decompose",
]

# exact search keeps one table entry per subset of the free vertices
_EXACT_LIMIT = 18


class DecompositionError(ValueError):
    """Raised for malformed decompositions and failed factorisations."""


def width(bags) -> int:
    bags = list(bags)
    if not bags:
        raise DecompositionError("a decomposition needs at least one bag")
    return max(len(b) for b in bags) - 1


def normalize(bags) -> list[frozenset]:
    """Drop bags that are subsets of a neighbouring bag, repeatedly."""
    out = [frozenset(b) for b in bags]
    changed = True
    while changed and len(out) > 1:
        changed = False
        for i, bag in enumerate(out):
            prev_ok = i > 0 and bag <= out[i - 1]
            next_ok = i + 1 < len(out) and bag <= out[i + 1]
            if prev_ok or next_ok:
                del out[i]
                changed = True
                break
    return out


def validate_decomposition(bags, vertices, edges, first=frozenset(), last=frozenset()):
    bags = [frozenset(b) for b in bags]
    if not bags:
        raise DecompositionError("a decomposition needs at least one bag")
    vertices = frozenset(vertices)
    seen = frozenset().union(*bags)
    if seen - vertices:
        raise DecompositionError(f"unknown vertices in bags: {sorted(seen - vertices)}")
    if vertices - seen:
        raise DecompositionError(f"vertices not covered: {sorted(vertices - seen)}")
    for v in vertices:
        hits = [i for i, b in enumerate(bags) if v in b]
        if hits[-1] - hits[0] + 1 != len(hits):
            raise DecompositionError(f"vertex {v!r} appears in a broken interval")
    for u, v in edges:
        if not any(u in b and v in b for b in bags):
            raise DecompositionError(f"edge {(u, v)!r} is not covered by any bag")
    if not frozenset(first) <= bags[0]:
        raise DecompositionError("left ports must be in the first bag")
    if not frozenset(last) <= bags[-1]:
        raise DecompositionError("right ports must be in the last bag")


# ---------------------------------------------------------------------------
# exact pathwidth
#
# Order the vertices outside `first` by introduction time.  After
# introducing a prefix S, the vertices that must stay in the current
# bag are those of S with a neighbour outside S, plus the members of
# `last`, which have to survive into the final bag.  Introducing x on
# top of S costs a bag of size |active(S)| + 1, and the best order
# gives the pathwidth.


def _pathwidth_table(vertices, edges, first, last):
    verts = sorted(vertices)
    index = {v: i for i, v in enumerate(verts)}
    first = frozenset(first)
    last = frozenset(last)
    if not first <= set(verts) or not last <= set(verts):
        raise DecompositionError("port sets must be subsets of the vertices")
    n = len(verts)
    adj = [0] * n
    for u, v in edges:
        adj[index[u]] |= 1 << index[v]
        adj[index[v]] |= 1 << index[u]
    lmask = sum(1 << index[v] for v in first)
    rmask = sum(1 << index[v] for v in last)
    free = [i for i in range(n) if not lmask >> i & 1]
    if len(free) > _EXACT_LIMIT:
        raise DecompositionError(
            f"exact search handles at most {_EXACT_LIMIT} non-port vertices"
        )

    def active_size(smask):
        count = 0
        bits = smask
        while bits:
            i = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            if rmask >> i & 1 or adj[i] & ~smask:
                count += 1
        return count

    size = 1 << len(free)
    g = [0] * size
    parent = [-1] * size
    g[0] = len(first)
    # when transitions tie, prefer a right port as the last vertex
    # introduced: right ports stay alive to the end anyway, so pulling
    # them in early only lengthens the stretches where both interfaces
    # are pinned alive together
    scan = sorted(
        range(len(free)), key=lambda t: (not rmask >> free[t] & 1, t)
    )
    for m in range(1, size):
        smask = lmask
        bits = m
        while bits:
            t = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            smask |= 1 << free[t]
        best = None
        best_t = -1
        for t in scan:
            if not m >> t & 1:
                continue
            prev = smask & ~(1 << free[t])
            cost = max(g[m & ~(1 << t)], active_size(prev) + 1)
            if best is None or cost < best:
                best = cost
                best_t = t
        g[m] = best
        parent[m] = best_t
    return verts, index, adj, lmask, rmask, free, g, parent


def pathwidth(vertices, edges, first=frozenset(), last=frozenset()) -> int:
    _, _, _, _, _, free, g, _ = _pathwidth_table(vertices, edges, first, last)
    return g[(1 << len(free)) - 1] - 1


def optimal_decomposition(vertices, edges, first=frozenset(), last=frozenset()):
    """A decomposition of minimum width, validated before returning."""
    verts, index, adj, lmask, rmask, free, g, parent = _pathwidth_table(
        vertices, edges, first, last
    )
    order = []
    m = (1 << len(free)) - 1
    while m:
        t = parent[m]
        order.append(free[t])
        m &= ~(1 << t)
    order.reverse()
    bags = [frozenset(first)]
    smask = lmask
    for i in order:
        bag = {verts[i]}
        bits = smask
        while bits:
            j = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            if rmask >> j & 1 or adj[j] & ~smask:
                bag.add(verts[j])
        bags.append(frozenset(bag))
        smask |= 1 << i
    bags = normalize(bags)
    validate_decomposition(bags, vertices, edges, first, last)
    assert width(bags) == g[(1 << len(free)) - 1] - 1
    return bags


def graph_pathwidth(g: PortGraph) -> int:
    return pathwidth(g.vertices, g.edges)


def context_pathwidth(w: Context) -> int:
    return pathwidth(
        w.vertices,
        w.edges,
        frozenset(w.left_map().values()),
        frozenset(w.right_map().values()),
    )


def context_decomposition(w: Context):
    return optimal_decomposition(
        w.vertices,
        w.edges,
        frozenset(w.left_map().values()),
        frozenset(w.right_map().values()),
    )


def _low_overlap_decomposition(w: Context):
    """A minimum-width decomposition of a context that, among the
    optimal introduction orders, keeps each left port co-alive with the
    right port sharing its slot for as few steps as possible.

    Factor searches prefer such orders: a context can only be cut at a
    point where no slot is claimed from both sides at once, so the
    shorter those overlaps, the more cut points survive."""
    left_map = w.left_map()
    right_map = w.right_map()
    first = frozenset(left_map.values())
    last = frozenset(right_map.values())
    verts, index, adj, lmask, rmask, free, g, _ = _pathwidth_table(
        w.vertices, w.edges, first, last
    )
    full = (1 << len(free)) - 1
    limit = g[full]
    pair_masks = [
        (1 << index[left_map[p]], 1 << index[right_map[p]])
        for p in left_map
        if p in right_map and left_map[p] != right_map[p]
    ]

    def active_mask(smask):
        out = 0
        bits = smask
        while bits:
            i = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            if rmask >> i & 1 or adj[i] & ~smask:
                out |= 1 << i
        return out

    size = 1 << len(free)
    amask = [0] * size
    step = [0] * size
    for m in range(size):
        smask = lmask
        bits = m
        while bits:
            t = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            smask |= 1 << free[t]
        a = active_mask(smask)
        amask[m] = a
        step[m] = sum(1 for mu, mv in pair_masks if a & mu and a & mv)

    INF = float("inf")
    h = [INF] * size
    parent = [-1] * size
    h[0] = step[0]
    scan = sorted(
        range(len(free)), key=lambda t: (not rmask >> free[t] & 1, t)
    )
    for m in range(1, size):
        best = INF
        best_t = -1
        for t in scan:
            if not m >> t & 1:
                continue
            prev = m & ~(1 << t)
            if h[prev] == INF or amask[prev].bit_count() + 1 > limit:
                continue
            if h[prev] < best:
                best = h[prev]
                best_t = t
        h[m] = best + step[m] if best_t >= 0 else INF
        parent[m] = best_t

    order = []
    m = full
    while m:
        t = parent[m]
        order.append(free[t])
        m &= ~(1 << t)
    order.reverse()
    bags = [frozenset(first)]
    smask = lmask
    for i in order:
        bag = {verts[i]}
        bits = smask
        while bits:
            j = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            if rmask >> j & 1 or adj[j] & ~smask:
                bag.add(verts[j])
        bags.append(frozenset(bag))
        smask |= 1 << i
    bags = normalize(bags)
    validate_decomposition(bags, w.vertices, w.edges, first, last)
    assert width(bags) == limit - 1
    return bags


def _brute_pathwidth(vertices, edges, first=frozenset(), last=frozenset()) -> int:
    """Reference search over all introduction orders.  Exponential;
    used by tests and kept here so both searches share nothing but the
    problem statement."""
    verts = sorted(vertices)
    first = frozenset(first)
    last = frozenset(last)
    adj = {v: set() for v in verts}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    free = [v for v in verts if v not in first]
    best = None
    for perm in permutations(free):
        placed = set(first)
        high = len(first)
        for x in perm:
            active = {
                v for v in placed if v in last or any(n not in placed for n in adj[v])
            }
            high = max(high, len(active) + 1)
            placed.add(x)
        if best is None or high < best:
            best = high
    return best - 1


def is_caterpillar_forest(g: PortGraph) -> bool:
    """Acyclic, and removing the leaves of each component leaves a
    path.  Equivalent to pathwidth at most 1."""
    adj = {v: set() for v in g.vertices}
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    # forest check via union-find
    parent = {v: v for v in g.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    spine = {v for v in g.vertices if len(adj[v]) >= 2}
    return all(len(adj[v] & spine) <= 2 for v in spine)


# ---------------------------------------------------------------------------
# instruction sequences


def to_instructions(bags, first=frozenset(), last=frozenset()):
    """Flatten a bag sequence into add/remove instructions, starting
    from the left ports and ending at the right ports.  Removals come
    before additions at each bag boundary.  Vertices of ``first`` are
    removed ahead of other vertices and vertices of ``last`` are added
    after other vertices, so interface vertices stay alive for as short
    a stretch as the bag sequence allows; ties break alphabetically."""
    first = frozenset(first)
    last = frozenset(last)
    out = []
    prev = first
    for bag in list(bags) + [last]:
        bag = frozenset(bag)
        for v in sorted(prev - bag, key=lambda u: (u not in first, u)):
            out.append(("remove", v))
        for v in sorted(bag - prev, key=lambda u: (u in last, u)):
            out.append(("add", v))
        prev = bag
    return out


def from_instructions(first, instructions):
    """Replay instructions from the initial bag and return the
    normalized snapshot sequence."""
    current = set(first)
    snapshots = [frozenset(current)]
    gone = set()
    for op, v in instructions:
        if op == "add":
            if v in current:
                raise DecompositionError(f"vertex {v!r} added twice")
            if v in gone:
                raise DecompositionError(f"vertex {v!r} added after removal")
            current.add(v)
        elif op == "remove":
            if v not in current:
                raise DecompositionError(f"vertex {v!r} removed while absent")
            current.discard(v)
            gone.add(v)
        else:
            raise DecompositionError(f"unknown instruction {op!r}")
        snapshots.append(frozenset(current))
    return normalize(snapshots)


def instruction_width(first, instructions) -> int:
    current = len(set(first))
    high = current
    for op, _ in instructions:
        current += 1 if op == "add" else -1
        high = max(high, current)
    return high - 1


def blocks_of(instructions, kind):
    """Maximal runs of instructions whose vertices share a class."""
    out = []
    for _, v in instructions:
        c = kind[v]
        if out and out[-1][0] == c:
            out[-1] = (c, out[-1][1] + 1)
        else:
            out.append((c, 1))
    return out


# ---------------------------------------------------------------------------
# dealternation
#
# Instructions on X-vertices and on Y-vertices may be reordered
# relative to each other (their own internal orders are kept, and
# instructions on other vertices stay pinned to their position in both
# orders).  Valid reorderings are monotone lattice paths through the
# pinned points; bag size at a lattice point is a sum of independent
# prefix contributions.  The first pass finds the smallest achievable
# maximum bag size, the second minimises the number of class blocks
# subject to that bound.


def _lattice_data(instructions, kind, first):
    xs, ys, pins = [], [], []
    netx, nety = [0], [0]
    netp = 0
    for ins in instructions:
        op, v = ins
        delta = 1 if op == "add" else -1
        cls = kind[v]
        if cls == "X":
            xs.append(ins)
            netx.append(netx[-1] + delta)
        elif cls == "Y":
            ys.append(ins)
            nety.append(nety[-1] + delta)
        elif cls == "P":
            pins.append((len(xs), len(ys), ins, netp))
            netp += delta
        else:
            raise DecompositionError(f"vertex {v!r} has unknown class {cls!r}")
    # A gap's cost applies after the pin starting it has executed, so
    # the waypoint carries the pinned net including that pin's delta.
    waypoints = [(0, 0, 0)]
    run = 0
    for i, j, ins, _ in pins:
        run += 1 if ins[0] == "add" else -1
        waypoints.append((i, j, run))
    waypoints.append((len(xs), len(ys), netp))
    base = len(set(first))
    return xs, ys, pins, netx, nety, waypoints, base


def _gap_minimax(i0, j0, i1, j1, cost):
    table = {}
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            here = cost(i, j)
            if i == i0 and j == j0:
                table[i, j] = here
                continue
            options = []
            if i > i0:
                options.append(table[i - 1, j])
            if j > j0:
                options.append(table[i, j - 1])
            table[i, j] = max(here, min(options))
    return table[i1, j1]


def _gap_min_blocks(i0, j0, i1, j1, cost, bound):
    # state: (i, j, last step class); None last = gap not started
    INF = float("inf")
    table = {(i0, j0, None): 0}
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            if cost(i, j) > bound:
                for last in ("X", "Y", None):
                    table.pop((i, j, last), None)
                continue
            for last in ("X", "Y", None):
                cur = table.get((i, j, last), INF)
                if cur is INF:
                    continue
                if i < i1:
                    step = cur + (0 if last == "X" else 1)
                    key = (i + 1, j, "X")
                    if step < table.get(key, INF):
                        table[key] = step
                if j < j1:
                    step = cur + (0 if last == "Y" else 1)
                    key = (i, j + 1, "Y")
                    if step < table.get(key, INF):
                        table[key] = step
    finals = {
        last: table[(i1, j1, last)]
        for last in ("X", "Y", None)
        if (i1, j1, last) in table
    }
    if not finals:
        raise DecompositionError("no path satisfies the width bound")
    best_last = min(finals, key=lambda c: (finals[c], c is None, c))
    # walk back deterministically: prefer ending the current run
    path = []
    i, j, last = i1, j1, best_last
    blocks = finals[best_last]
    while (i, j) != (i0, j0):
        if last == "X":
            prev_candidates = [("X", 0), ("Y", 1), (None, 1)]
            pi, pj = i - 1, j
        else:
            prev_candidates = [("Y", 0), ("X", 1), (None, 1)]
            pi, pj = i, j - 1
        for prev_last, delta in prev_candidates:
            if table.get((pi, pj, prev_last), INF) == blocks - delta:
                path.append(last)
                i, j, last = pi, pj, prev_last
                blocks -= delta
                break
        else:
            raise AssertionError("block reconstruction lost the table trail")
    path.reverse()
    return finals[best_last], path


def dealternate(instructions, kind, first=frozenset()):
    """Reorder X-instructions against Y-instructions (other classes
    pinned) so that the maximum bag size is as small as possible and,
    subject to that, the instructions form as few X/Y blocks as
    possible.  The result never has a larger maximum bag than the
    input sequence."""
    instructions = list(instructions)
    for op, v in instructions:
        if v not in kind:
            raise DecompositionError(f"vertex {v!r} missing from the class map")
    xs, ys, pins, netx, nety, waypoints, base = _lattice_data(
        instructions, kind, first
    )
    for (i0, j0, _), (i1, j1, _) in zip(waypoints, waypoints[1:]):
        if i1 < i0 or j1 < j0:
            raise AssertionError("pinned points out of order")

    best = 0
    for (i0, j0, net0), (i1, j1, _) in zip(waypoints, waypoints[1:]):

        def cost(i, j, _c=base + net0):
            return _c + netx[i] + nety[j]

        best = max(best, _gap_minimax(i0, j0, i1, j1, cost))

    out = []
    xi = yi = 0
    pin_iter = iter(pins + [None])
    for (i0, j0, net0), (i1, j1, _) in zip(waypoints, waypoints[1:]):

        def cost(i, j, _c=base + net0):
            return _c + netx[i] + nety[j]

        _, path = _gap_min_blocks(i0, j0, i1, j1, cost, best)
        for step in path:
            if step == "X":
                out.append(xs[xi])
                xi += 1
            else:
                out.append(ys[yi])
                yi += 1
        nxt = next(pin_iter)
        if nxt is not None:
            out.append(nxt[2])
    assert len(out) == len(instructions)
    assert instruction_width(first, out) <= instruction_width(first, instructions)
    return out


# ---------------------------------------------------------------------------
# two-bridge factorisation
#
# Cutting an instruction sequence at positions where at most `arity`
# vertices are alive yields candidate factors; each alive vertex gets
# one interface slot, constant across all the cuts it survives
# (a vertex that is both a left and a right port of a factor must use
# the same index on both sides).  The outermost cuts are forced to the
# original interface assignment.  A factorisation counts as progress
# when every factor either fits in arity+1 vertices or keeps some
# non-persistent vertex alive across its whole extent, which turns it
# persistent in the factor.


def _alive_sets(first, instructions):
    current = set(first)
    sets = [frozenset(current)]
    for op, v in instructions:
        if op == "add":
            current.add(v)
        else:
            current.discard(v)
        sets.append(frozenset(current))
    return sets


def _try_factorisation(w, instructions, cuts, diag):
    k = w.arity
    left_map = w.left_map()
    right_map = w.right_map()
    pers_idx = persistent_ports(w)
    pers_verts = {left_map[i] for i in pers_idx}
    alive = _alive_sets(frozenset(left_map.values()), instructions)
    m = len(instructions)
    cuts = sorted(set(cuts))
    cuts = [c for c in cuts if 0 < c < m]
    if not cuts:
        diag.append("no interior cut positions")
        return None
    for c in cuts:
        if len(alive[c]) > k:
            diag.append(f"cut {c} keeps {len(alive[c])} vertices alive")
            return None
    bounds = [0] + cuts + [m]

    # every factor must be small or carry a persistence witness
    spans = []
    for a, b in zip(bounds, bounds[1:]):
        verts = set(alive[a]) | set(alive[b])
        for op, v in instructions[a:b]:
            verts.add(v)
        witness = {
            v for v in alive[a] & alive[b] if v not in pers_verts
        }
        if len(verts) > k + 1 and not witness:
            diag.append(
                f"segment {a}..{b} has {len(verts)} vertices and no spanning vertex"
            )
            return None
        spans.append(verts)

    # slot assignment: one run per vertex over the cuts where it is alive
    runs = {}
    for ci, c in enumerate(bounds):
        for v in alive[c]:
            lo, hi = runs.get(v, (ci, ci))
            runs[v] = (min(lo, ci), max(hi, ci))
    forced = {}
    for i, v in left_map.items():
        forced[v] = i
    for i, v in right_map.items():
        if v in forced and forced[v] != i:
            diag.append(f"vertex {v!r} is forced to two different slots")
            return None
        forced[v] = i
    # a left port whose run reaches past cut 0 carries its slot along,
    # so two forced runs that overlap and share a slot cannot both win
    order = sorted(runs, key=lambda v: (runs[v][0], runs[v][1], v))
    slots = {}

    def overlap(u, v):
        (a1, b1), (a2, b2) = runs[u], runs[v]
        return a1 <= b2 and a2 <= b1

    def assign(pos):
        if pos == len(order):
            return True
        v = order[pos]
        choices = [forced[v]] if v in forced else range(1, k + 1)
        for s in choices:
            if any(
                slots.get(u) == s and overlap(u, v) for u in order[:pos]
            ):
                continue
            slots[v] = s
            if assign(pos + 1):
                return True
            del slots[v]
        return False

    # forced runs that never reach an interior cut only constrain the
    # outer boundaries, which is consistent by construction
    for u in order:
        if u not in forced:
            continue
        for v in order:
            if v not in forced or u >= v:
                continue
            if forced[u] == forced[v] and overlap(u, v):
                diag.append(
                    f"slot {forced[u]} is pinned to both {u!r} and {v!r} "
                    "on overlapping stretches"
                )
                return None
    if not assign(0):
        diag.append("no slot assignment fits the cuts")
        return None

    # edges go to the first factor whose span sees both endpoints alive
    positions = {}
    for t in range(m + 1):
        for e in w.edges:
            if e in positions:
                continue
            u, v = e
            if u in alive[t] and v in alive[t]:
                positions[e] = t
    factors = []
    for idx, (a, b) in enumerate(zip(bounds, bounds[1:])):
        edges = {e for e, t in positions.items() if a < t <= b or (idx == 0 and t == 0)}
        left = {slots[v]: v for v in alive[a]}
        right = {slots[v]: v for v in alive[b]}
        try:
            factors.append(Context.build(spans[idx], edges, k, left, right))
        except ContextError as exc:
            diag.append(f"segment {a}..{b} does not form a context: {exc}")
            return None
    fold = compose_all(factors)
    if not isomorphic_contexts(fold, w):
        diag.append("factor product is not isomorphic to the input")
        return None
    base_pers = len(pers_idx)
    for f in factors:
        if len(f.vertices) > k + 1 and len(persistent_ports(f)) <= base_pers:
            diag.append("a large factor gained no persistent ports")
            return None
    return factors


def _valleys(alive, k):
    return [c for c in range(1, len(alive) - 1) if len(alive[c]) <= k]


def _bounded_product(options, cap):
    """First `cap` tuples of the cartesian product, cheapest choices
    first (the head of each option list is the preferred snap)."""
    from itertools import product

    for i, combo in enumerate(product(*options)):
        if i >= cap:
            return
        yield combo


def _snap_candidates(q, alive, k):
    m = len(alive) - 1
    out = []
    for c in (q, q - 1, q + 1, q - 2, q + 2):
        if 0 < c < m and len(alive[c]) <= k and c not in out:
            out.append(c)
    return out


def two_bridge_decompose(w: Context):
    """Factor a context with at least two bridges into contexts that
    are each either small enough to be a single letter (at most
    arity+1 vertices) or have strictly more persistent ports than the
    input.  Raises DecompositionError with accumulated diagnostics
    when no attempted strategy works."""
    k = w.arity
    brs = bridges(w)
    if len(brs) < 2:
        raise DecompositionError(
            f"needs at least two bridges, found {len(brs)}"
        )
    if len(w.vertices) <= k + 1:
        return [w]
    if context_pathwidth(w) > k:
        raise DecompositionError(
            "pathwidth exceeds the arity; not in the width-limited monoid"
        )
    left_set = frozenset(w.left_map().values())
    right_set = frozenset(w.right_map().values())
    ports = w.port_vertices()
    diag: list[str] = []

    mirror = Context.build(
        w.vertices, w.edges, k, w.right_map(), w.left_map()
    )
    decomps = [
        _low_overlap_decomposition(w),
        list(reversed(_low_overlap_decomposition(mirror))),
        context_decomposition(w),
        list(reversed(context_decomposition(mirror))),
    ]

    sequences = []
    seen = set()
    for bags in decomps:
        instructions = to_instructions(bags, left_set, right_set)
        key = tuple(instructions)
        if key not in seen:
            seen.add(key)
            sequences.append(instructions)

    for instructions in sequences:
        alive = _alive_sets(left_set, instructions)
        valleys = _valleys(alive, k)
        tried = set()

        def attempt(cuts):
            key = tuple(sorted({c for c in cuts if 0 < c < len(instructions)}))
            if not key or key in tried:
                return None
            tried.add(key)
            return _try_factorisation(w, instructions, list(key), diag)

        for c in valleys:
            result = attempt((c,))
            if result:
                return result
        budget = 128
        for pair in combinations(valleys, 2):
            result = attempt(pair)
            if result:
                return result
            budget -= 1
            if budget <= 0:
                break
        result = attempt(tuple(valleys))
        if result:
            return result
        for bridge in brs:
            x_verts = {v for e in bridge for v in e if v not in ports}
            if not x_verts:
                continue
            kind = {
                v: ("P" if v in ports else "X" if v in x_verts else "Y")
                for v in w.vertices
            }
            reordered = dealternate(instructions, kind, left_set)
            alive2 = _alive_sets(left_set, reordered)
            boundaries = []
            pos = 0
            for cls, size in blocks_of(reordered, kind):
                pos += size
                boundaries.append(pos)
            options = [
                _snap_candidates(q, alive2, k) for q in boundaries[:-1]
            ]
            options = [opt for opt in options if opt]
            if not options:
                diag.append("no block boundary could be snapped to a thin point")
                continue
            tried_snaps = set()
            for cuts in _bounded_product(options, 64):
                key = tuple(sorted(set(cuts)))
                if key in tried_snaps:
                    continue
                tried_snaps.add(key)
                result = _try_factorisation(w, reordered, cuts, diag)
                if result:
                    return result
    raise DecompositionError(
        "no factorisation found:\n  " + "\n  ".join(dict.fromkeys(diag))
    )
