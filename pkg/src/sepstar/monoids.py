"""Finite monoids, recognizers over generator words, and the
aperiodicity machinery.

A recognizer assigns a monoid element to every generator of a width-k
alphabet; a word of generators is accepted when the product of its
letters lands in the accepting set.  The central decision procedure,
:func:`decide_aperiodic_mod_reachability`, searches the reachable
(monoid element, reachability type) pairs for a word whose reachability
type is idempotent while its monoid element generates a nontrivial
group - the pattern that separates genuinely periodic behaviour from
behaviour that only looks periodic because the interface wiring
changes.

`certify_non_star_free` complements the decision procedure on the
semantic side: it pumps a concrete context with idempotent
reachability type and watches an oracle alternate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .contexts import (
    Context,
    beta,
    beta_compose,
    compose,
    compose_all,
    context_cert,
    enumerate_generators,
    reaches,
)

__all__ = [
    "MonoidError",
    "FiniteMonoid",
    "validate_monoid",
    "is_aperiodic_element",
    "aperiodic_violations",
    "is_aperiodic",
    "GreenData",
    "green_classes",
    "transition_monoid",
    "generated_submonoid",
    "Recognizer",
    "recognizer_image",
    "recognizer_accepts",
    "syntactic_quotient",
    "reach_type_recognizer",
    "parity_recognizer",
    "Verdict",
    "decide_aperiodic_mod_reachability",
    "audit_well_defined",
    "classify_infix_classes",
    "Certificate",
    "certify_non_star_free",
    "oracle_inner_reach",
    "oracle_two_disjoint_paths",
    "monoid_to_json",
    "monoid_from_json",
    "recognizer_to_json",
    "recognizer_from_json",
    "dump_recognizer",
    "load_recognizer",
]


class MonoidError(ValueError):
    """Raised for malformed monoids, recognizers, and queries."""


@dataclass(frozen=True)
class FiniteMonoid:
    """Multiplication table over elements 0..n-1.

    ``table[a][b]`` is the product a*b.  ``zero``, when present, is an
    absorbing element.  Use :meth:`FiniteMonoid.build` on untrusted
    data; internal constructions (transition monoids, quotients) are
    associative by construction and skip the cubic check.
    """

    table: tuple[tuple[int, ...], ...]
    identity: int
    zero: int | None = None

    @staticmethod
    def build(table, identity: int, zero: int | None = None) -> "FiniteMonoid":
        m = FiniteMonoid(tuple(tuple(row) for row in table), identity, zero)
        validate_monoid(m)
        return m

    @property
    def size(self) -> int:
        return len(self.table)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def power(self, a: int, m: int) -> int:
        if m < 1:
            raise MonoidError("powers start at 1")
        acc = a
        for _ in range(m - 1):
            acc = self.table[acc][a]
        return acc


def validate_monoid(m: FiniteMonoid) -> None:
    n = len(m.table)
    if n == 0:
        raise MonoidError("monoids are nonempty")
    for row in m.table:
        if len(row) != n or any(not (0 <= x < n) for x in row):
            raise MonoidError("table is not a square over element indices")
    if not 0 <= m.identity < n:
        raise MonoidError("identity index out of range")
    for a in range(n):
        if m.table[m.identity][a] != a or m.table[a][m.identity] != a:
            raise MonoidError(f"element {m.identity} is not neutral")
    if m.zero is not None:
        if not 0 <= m.zero < n:
            raise MonoidError("zero index out of range")
        for a in range(n):
            if m.table[m.zero][a] != m.zero or m.table[a][m.zero] != m.zero:
                raise MonoidError(f"element {m.zero} is not absorbing")
    for a in range(n):
        for b in range(n):
            ab = m.table[a][b]
            for c in range(n):
                if m.table[ab][c] != m.table[a][m.table[b][c]]:
                    raise MonoidError(f"associativity fails at ({a},{b},{c})")


def is_aperiodic_element(m: FiniteMonoid, a: int) -> bool:
    """True iff the powers of a stabilise: a^t = a^(t+1) for some t."""
    seen = []
    x = a
    for _ in range(m.size + 1):
        if seen and seen[-1] == x:
            return True
        seen.append(x)
        x = m.table[x][a]
    return x == seen[-1]


def aperiodic_violations(m: FiniteMonoid) -> tuple[int, ...]:
    return tuple(a for a in range(m.size) if not is_aperiodic_element(m, a))


def is_aperiodic(m: FiniteMonoid) -> bool:
    return not aperiodic_violations(m)


# ---------------------------------------------------------------------------
# Green's relations


@dataclass(frozen=True)
class GreenData:
    """Equivalence class ids per element for the four relations, plus
    the ideal bitmasks the preorders are defined from."""

    r_class: tuple[int, ...]
    l_class: tuple[int, ...]
    h_class: tuple[int, ...]
    j_class: tuple[int, ...]
    idempotents: frozenset[int]
    right_ideal: tuple[int, ...]  # bitmask of aM
    left_ideal: tuple[int, ...]  # bitmask of Ma
    two_sided_ideal: tuple[int, ...]  # bitmask of MaM

    def j_below(self, a: int, b: int) -> bool:
        """a is an infix of b's ideal: a in MbM."""
        return bool(self.two_sided_ideal[b] >> a & 1)


def green_classes(m: FiniteMonoid) -> GreenData:
    n = m.size
    right = []
    left = []
    for a in range(n):
        r = 0
        l_ = 0
        row = m.table[a]
        for x in range(n):
            r |= 1 << row[x]
            l_ |= 1 << m.table[x][a]
        right.append(r)
        left.append(l_)
    two = []
    for a in range(n):
        mask = 0
        bits = right[a]
        while bits:
            b = (bits & -bits).bit_length() - 1
            mask |= left[b]
            bits &= bits - 1
        two.append(mask)

    def classify(masks):
        ids = {}
        out = []
        for a in range(n):
            out.append(ids.setdefault(masks[a], len(ids)))
        return tuple(out)

    r_class = classify(right)
    l_class = classify(left)
    h_class = classify([(right[a], left[a]) for a in range(n)])
    j_class = classify(two)
    idem = frozenset(a for a in range(n) if m.table[a][a] == a)
    return GreenData(
        r_class,
        l_class,
        h_class,
        j_class,
        idem,
        tuple(right),
        tuple(left),
        tuple(two),
    )


# ---------------------------------------------------------------------------
# construction helpers


def transition_monoid(n_states: int, letters: dict[str, tuple[int, ...]]):
    """Monoid of state transformations generated by the letters.

    Returns (monoid, gen_map) where gen_map sends each letter to its
    element.  Transformations compose left to right: (f*g)(q) = g(f(q)).
    """
    for name, f in letters.items():
        if len(f) != n_states or any(not 0 <= q < n_states for q in f):
            raise MonoidError(f"letter {name!r} is not a transformation")
    ident = tuple(range(n_states))
    elems: dict[tuple[int, ...], int] = {ident: 0}
    order = [ident]
    frontier = [ident]
    gens = {name: tuple(f) for name, f in letters.items()}
    while frontier:
        nxt = []
        for f in frontier:
            for g in gens.values():
                fg = tuple(g[f[q]] for q in range(n_states))
                if fg not in elems:
                    elems[fg] = len(order)
                    order.append(fg)
                    nxt.append(fg)
        frontier = nxt
    table = []
    for f in order:
        row = []
        for g in order:
            fg = tuple(g[f[q]] for q in range(n_states))
            row.append(elems[fg])
        table.append(tuple(row))
    monoid = FiniteMonoid(tuple(table), 0)
    gen_map = {name: elems[f] for name, f in gens.items()}
    return monoid, gen_map


def generated_submonoid(m: FiniteMonoid, generators: dict[str, int]):
    """Elements reachable from the generators, each with the shortest
    word producing it (ties broken lexicographically by generator
    name).  The identity is included with the empty word."""
    items = sorted(generators.items())
    words: dict[int, tuple[str, ...]] = {m.identity: ()}
    frontier = [m.identity]
    while frontier:
        nxt = []
        for a in frontier:
            for name, g in items:
                b = m.table[a][g]
                if b not in words:
                    words[b] = words[a] + (name,)
                    nxt.append(b)
        frontier = nxt
    return words


# ---------------------------------------------------------------------------
# recognizers


@dataclass(frozen=True)
class Recognizer:
    """A monoid morphism from width-`arity` generator words.

    ``gen_map`` must cover the whole generator alphabet for the
    decision procedures; partial maps are tolerated for evaluation
    only.  Keys of gen_map are generator ids ('g0', 'g1', ...).
    """

    monoid: FiniteMonoid
    arity: int
    gen_map: tuple[tuple[str, int], ...]
    accepting: frozenset[int]

    @staticmethod
    def build(monoid, arity, gen_map: dict, accepting) -> "Recognizer":
        acc = frozenset(accepting)
        for a in acc:
            if not 0 <= a < monoid.size:
                raise MonoidError(f"accepting element {a} out of range")
        gm = {}
        for gid, el in gen_map.items():
            if not 0 <= el < monoid.size:
                raise MonoidError(f"generator {gid!r} maps out of range")
            gm[str(gid)] = int(el)
        if arity < 1:
            raise MonoidError("recognizers need arity at least 1")
        return Recognizer(monoid, arity, tuple(sorted(gm.items())), acc)

    def gen_dict(self) -> dict[str, int]:
        return dict(self.gen_map)


def recognizer_image(rec: Recognizer, word) -> int:
    gm = rec.gen_dict()
    acc = rec.monoid.identity
    for gid in word:
        if gid not in gm:
            raise MonoidError(f"generator {gid!r} not mapped by the recognizer")
        acc = rec.monoid.mul(acc, gm[gid])
    return acc


def recognizer_accepts(rec: Recognizer, word) -> bool:
    return recognizer_image(rec, word) in rec.accepting


def syntactic_quotient(rec: Recognizer) -> Recognizer:
    """Collapse elements with identical two-sided behaviour relative to
    the accepting set.  The result recognises the same words with the
    smallest possible monoid for this morphism's image and acceptance."""
    m = rec.monoid
    n = m.size
    acc_mask = 0
    for a in rec.accepting:
        acc_mask |= 1 << a
    behaviour: list[tuple[int, ...]] = []
    for a in range(n):
        rows = []
        for x in range(n):
            xa = m.table[x][a]
            bits = 0
            row = m.table[xa]
            for y in range(n):
                if acc_mask >> row[y] & 1:
                    bits |= 1 << y
            rows.append(bits)
        behaviour.append(tuple(rows))
    ids: dict[tuple[int, ...], int] = {}
    cls = [ids.setdefault(b, len(ids)) for b in behaviour]
    size = len(ids)
    rep = [0] * size
    for a in range(n):
        rep[cls[a]] = a
    table = tuple(
        tuple(cls[m.table[rep[i]][rep[j]]] for j in range(size)) for i in range(size)
    )
    # the syntactic congruence is compatible with the product
    for a in range(n):
        for b in range(n):
            assert cls[m.table[a][b]] == table[cls[a]][cls[b]]
    quotient = FiniteMonoid(table, cls[m.identity])
    accepting = frozenset(cls[a] for a in rec.accepting)
    for a in range(n):
        assert (cls[a] in accepting) == (a in rec.accepting)
    gen_map = {gid: cls[el] for gid, el in rec.gen_map}
    return Recognizer.build(quotient, rec.arity, gen_map, accepting)


# two canonical recognizers --------------------------------------------------


def reach_type_recognizer(k: int) -> Recognizer:
    """The reachability-type recognizer: elements are the composable
    closure of generator types plus an adjoined identity (no concrete
    context acts neutrally on all others, so the closure itself has no
    unit).  Accepting: types linking left 1 to right 1."""
    alphabet = enumerate_generators(k)
    types: dict = {}
    for w in alphabet.contexts:
        rt = beta(w)
        if rt not in types:
            types[rt] = len(types)
    frontier = list(types)
    while frontier:
        nxt = []
        for a in frontier:
            for b in list(types):
                for c in (beta_compose(a, b), beta_compose(b, a)):
                    if c not in types:
                        types[c] = len(types)
                        nxt.append(c)
        frontier = nxt
    order = sorted(types, key=types.get)
    index = {rt: i + 1 for i, rt in enumerate(order)}  # 0 is the identity
    size = len(order) + 1
    table = [[0] * size for _ in range(size)]
    for i in range(size):
        table[0][i] = i
        table[i][0] = i
    for a in order:
        for b in order:
            table[index[a]][index[b]] = index[beta_compose(a, b)]
    monoid = FiniteMonoid(tuple(tuple(r) for r in table), 0)
    gen_map = {
        gid: index[beta(w)] for gid, w in zip(alphabet.ids, alphabet.contexts)
    }
    accepting = frozenset(
        index[rt] for rt in order if reaches(rt, ("L", 1), ("R", 1))
    )
    return Recognizer.build(monoid, k, gen_map, accepting)


def parity_recognizer(k: int, odd_ids) -> Recognizer:
    """Two-element group counting the marked generators mod 2.

    Deliberately *not* aperiodic: words that differ only in how many
    marked letters they use flip between accept and reject.  Used as
    the regression input for the decision procedure."""
    alphabet = enumerate_generators(k)
    odd = set(odd_ids)
    unknown = odd - set(alphabet.ids)
    if unknown:
        raise MonoidError(f"unknown generator ids: {sorted(unknown)}")
    table = ((0, 1), (1, 0))
    monoid = FiniteMonoid(table, 0)
    gen_map = {gid: (1 if gid in odd else 0) for gid in alphabet.ids}
    return Recognizer.build(monoid, k, gen_map, frozenset({1}))


# ---------------------------------------------------------------------------
# the decision procedure


@dataclass(frozen=True)
class Verdict:
    """Outcome of the aperiodicity-modulo-reachability decision.

    ``witness`` is None for a positive verdict; otherwise a shortest
    generator word (ties broken by generator index, over one
    representative per (image, type) pair) whose reachability type is
    idempotent while its monoid image is not aperiodic."""

    aperiodic: bool
    arity: int
    witness: tuple[str, ...] | None
    element: int | None
    pairs_explored: int


def decide_aperiodic_mod_reachability(rec: Recognizer) -> Verdict:
    """Search the reachable (element, reachability type) pairs for an
    aperiodicity violation that survives the wiring abstraction.

    Generators with equal (image, type) pairs act identically, so the
    search runs over one representative per pair; the witness is then
    a genuinely shortest word."""
    alphabet = enumerate_generators(rec.arity)
    gm = rec.gen_dict()
    missing = [gid for gid in alphabet.ids if gid not in gm]
    if missing:
        raise MonoidError(
            f"recognizer does not map generators {missing[:4]}..."
            if len(missing) > 4
            else f"recognizer does not map generators {missing}"
        )
    m = rec.monoid
    letters: dict[tuple, str] = {}
    for gid, w in zip(alphabet.ids, alphabet.contexts):
        key = (gm[gid], beta(w))
        if key not in letters:
            letters[key] = gid
    letter_list = sorted(letters.items(), key=lambda kv: int(kv[1][1:]))

    words: dict[tuple, tuple[str, ...]] = {}
    queue: list[tuple] = []
    for (el, rt), gid in letter_list:
        pair = (el, rt)
        if pair not in words:
            words[pair] = (gid,)
            queue.append(pair)

    def violates(pair) -> bool:
        el, rt = pair
        return beta_compose(rt, rt) == rt and not is_aperiodic_element(m, el)

    qi = 0
    for pair in list(queue):
        if violates(pair):
            return _violation_verdict(rec, words[pair], pair, len(words))
    while qi < len(queue):
        pair = queue[qi]
        qi += 1
        el, rt = pair
        base = words[pair]
        for (gel, grt), gid in letter_list:
            nxt = (m.mul(el, gel), beta_compose(rt, grt))
            if nxt in words:
                continue
            words[nxt] = base + (gid,)
            if violates(nxt):
                return _violation_verdict(rec, words[nxt], nxt, len(words))
            queue.append(nxt)
    return Verdict(True, rec.arity, None, None, len(words))


def _violation_verdict(rec, word, pair, explored) -> Verdict:
    el, rt = pair
    # re-verify the witness against the concrete semantics
    ctx = compose_all(
        [enumerate_generators(rec.arity).by_id(g) for g in word]
    )
    assert beta(ctx) == rt, "witness type mismatch"
    assert recognizer_image(rec, word) == el, "witness image mismatch"
    assert beta_compose(rt, rt) == rt
    assert not is_aperiodic_element(rec.monoid, el)
    return Verdict(False, rec.arity, tuple(word), el, explored)


# ---------------------------------------------------------------------------
# diagnostics


def audit_well_defined(rec: Recognizer, max_len: int):
    """Do isomorphic products get the same monoid image?

    Enumerates all generator words up to max_len (by length, then
    lexicographically) and reports pairs of words whose composed
    contexts are isomorphic but whose images differ.  An empty report
    means the recognizer factors through context isomorphism on this
    range."""
    alphabet = enumerate_generators(rec.arity)
    gm = rec.gen_dict()
    ids = [gid for gid in alphabet.ids if gid in gm]
    seen: dict[bytes, tuple[tuple[str, ...], int]] = {}
    conflicts = []
    level: list[tuple[tuple[str, ...], Context, int]] = []
    for gid in ids:
        w = alphabet.by_id(gid)
        level.append(((gid,), w, gm[gid]))
    for _ in range(max_len):
        next_level = []
        for word, ctx, el in level:
            cert = context_cert(ctx)
            if cert in seen:
                prev_word, prev_el = seen[cert]
                if prev_el != el:
                    conflicts.append((prev_word, word))
            else:
                seen[cert] = (word, el)
            if len(word) < max_len:
                for gid in ids:
                    g = alphabet.by_id(gid)
                    next_level.append(
                        (word + (gid,), compose(ctx, g), rec.monoid.mul(el, gm[gid]))
                    )
        level = next_level
    return conflicts


def classify_infix_classes(rec: Recognizer):
    """Summary of each infix (two-sided) class of the recognizer's
    monoid: size, whether it contains an idempotent, whether its
    group-like part is trivial, and whether the class is reachable as
    the image of a generator word."""
    m = rec.monoid
    green = green_classes(m)
    reachable = set()
    words = generated_submonoid(m, rec.gen_dict())
    for el in words:
        reachable.add(green.j_class[el])
    out = []
    n_classes = max(green.j_class) + 1
    for j in range(n_classes):
        members = [a for a in range(m.size) if green.j_class[a] == j]
        idems = [a for a in members if a in green.idempotents]
        aperiodic = all(is_aperiodic_element(m, a) for a in members)
        out.append(
            {
                "class": j,
                "size": len(members),
                "members": members,
                "idempotents": idems,
                "aperiodic": aperiodic,
                "reachable": j in reachable,
            }
        )
    return out


# ---------------------------------------------------------------------------
# semantic certification


@dataclass(frozen=True)
class Certificate:
    """Evidence that an oracle keeps alternating along the powers of an
    idempotent-type context: values[i] is the oracle at power i+1, and
    from power `threshold` on the values strictly alternate."""

    oracle: str
    powers: int
    values: tuple[bool, ...]
    threshold: int


def oracle_inner_reach(ctx: Context) -> bool:
    """Left port 1 linked to right port 1 by an inner path."""
    return reaches(beta(ctx), ("L", 1), ("R", 1))


def oracle_two_disjoint_paths(ctx: Context) -> bool:
    """Two vertex-disjoint paths: left 1 to right 1 and left 2 to
    right 2.  Backtracking search; exponential in the worst case but
    fast on the layered contexts it is meant for."""
    if ctx.arity < 2:
        raise MonoidError("the disjoint-paths oracle needs arity at least 2")
    s1, s2 = ctx.left[0], ctx.left[1]
    t1, t2 = ctx.right[0], ctx.right[1]
    if None in (s1, s2, t1, t2):
        raise MonoidError("ports 1 and 2 must be defined on both sides")
    if len({s1, s2}) < 2 or len({t1, t2}) < 2:
        return False

    adj = {v: sorted(ctx.neighbors(v)) for v in ctx.vertices}

    def connected_avoiding(a, b, blocked):
        if a in blocked or b in blocked:
            return False
        stack = [a]
        seen = {a}
        while stack:
            v = stack.pop()
            if v == b:
                return True
            for w in adj[v]:
                if w not in blocked and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    if s2 in (s1, t1) or t2 in (s1, t1):
        return False

    path = [s1]
    on_path = {s1}

    def search(v):
        if v == t1:
            return connected_avoiding(s2, t2, on_path)
        for w in adj[v]:
            if w in on_path or w in (s2, t2):
                continue
            on_path.add(w)
            path.append(w)
            if search(w):
                return True
            path.pop()
            on_path.discard(w)
        return False

    return search(s1)


_ORACLES = {
    "reach": oracle_inner_reach,
    "two-disjoint-paths": oracle_two_disjoint_paths,
}


def certify_non_star_free(
    w: Context,
    oracle: str,
    x: Context | None = None,
    y: Context | None = None,
    max_power: int = 8,
) -> Certificate | None:
    """Pump x . w^m . y for m = 1..max_power and look for persistent
    alternation of the oracle.

    Requires beta(w) idempotent, so the interface abstraction of every
    power is the same and any alternation is invisible to reachability
    types.  Returns None when the observed values stabilise or the
    alternation starts too late to be convincing (threshold must leave
    at least four alternating steps)."""
    if oracle not in _ORACLES:
        raise MonoidError(
            f"unknown oracle {oracle!r}; available: {sorted(_ORACLES)}"
        )
    fn = _ORACLES[oracle]
    rt = beta(w)
    if beta_compose(rt, rt) != rt:
        raise MonoidError("the pumped context must have idempotent reachability type")
    if x is not None and x.arity != w.arity:
        raise MonoidError("left dressing has wrong arity")
    if y is not None and y.arity != w.arity:
        raise MonoidError("right dressing has wrong arity")
    values = []
    current = w if x is None else compose(x, w)
    for power in range(1, max_power + 1):
        full = current if y is None else compose(current, y)
        values.append(fn(full))
        current = compose(current, w)
    threshold = None
    for m0 in range(1, max_power + 1):
        tail = values[m0 - 1 :]
        if all(tail[i] != tail[i + 1] for i in range(len(tail) - 1)):
            threshold = m0
            break
    if threshold is None or threshold > max_power - 4:
        return None
    return Certificate(oracle, max_power, tuple(values), threshold)


# ---------------------------------------------------------------------------
# serialisation


def monoid_to_json(m: FiniteMonoid) -> dict:
    out = {
        "size": m.size,
        "identity": m.identity,
        "table": [list(row) for row in m.table],
    }
    if m.zero is not None:
        out["zero"] = m.zero
    return out


def monoid_from_json(data) -> FiniteMonoid:
    if not isinstance(data, dict):
        raise MonoidError("monoid JSON must be an object")
    extra = set(data) - {"size", "identity", "table", "zero"}
    if extra:
        raise MonoidError(f"unknown monoid fields: {sorted(extra)}")
    try:
        table = data["table"]
        identity = data["identity"]
    except KeyError as exc:
        raise MonoidError(f"monoid JSON needs field {exc}") from None
    m = FiniteMonoid.build(table, identity, data.get("zero"))
    if "size" in data and data["size"] != m.size:
        raise MonoidError("declared size does not match the table")
    return m


def recognizer_to_json(rec: Recognizer) -> dict:
    return {
        "monoid": monoid_to_json(rec.monoid),
        "arity": rec.arity,
        "gen_map": {gid: el for gid, el in rec.gen_map},
        "accepting": sorted(rec.accepting),
    }


def recognizer_from_json(data) -> Recognizer:
    if not isinstance(data, dict):
        raise MonoidError("recognizer JSON must be an object")
    extra = set(data) - {"monoid", "arity", "gen_map", "accepting"}
    if extra:
        raise MonoidError(f"unknown recognizer fields: {sorted(extra)}")
    for fieldname in ("monoid", "arity", "gen_map", "accepting"):
        if fieldname not in data:
            raise MonoidError(f"recognizer JSON needs a {fieldname!r} field")
    return Recognizer.build(
        monoid_from_json(data["monoid"]),
        data["arity"],
        data["gen_map"],
        data["accepting"],
    )


def dump_recognizer(rec: Recognizer) -> str:
    return json.dumps(recognizer_to_json(rec), indent=2, sort_keys=True) + "\n"


def load_recognizer(path: str) -> Recognizer:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MonoidError(f"{path}: not valid JSON ({exc})") from None
    return recognizer_from_json(data)
