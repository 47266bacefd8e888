"""Monoid layer: tables, Green's relations, recognizers, the
aperiodicity decision, and semantic certification."""

import json

import pytest

from sepstar.contexts import (
    Context,
    beta,
    beta_compose,
    compose,
    compose_all,
    context_cert,
    crossing_context,
    enumerate_generators,
    hub_context,
    identity_context,
    isomorphic_contexts,
)
from sepstar.monoids import (
    Certificate,
    FiniteMonoid,
    MonoidError,
    Recognizer,
    audit_well_defined,
    certify_non_star_free,
    classify_infix_classes,
    decide_aperiodic_mod_reachability,
    generated_submonoid,
    green_classes,
    is_aperiodic,
    is_aperiodic_element,
    monoid_from_json,
    monoid_to_json,
    oracle_inner_reach,
    oracle_two_disjoint_paths,
    parity_recognizer,
    reach_type_recognizer,
    recognizer_accepts,
    recognizer_from_json,
    recognizer_image,
    recognizer_to_json,
    syntactic_quotient,
    transition_monoid,
    validate_monoid,
)

Z2 = FiniteMonoid.build([[0, 1], [1, 0]], 0)
# two-element semilattice: 1 absorbs
U1 = FiniteMonoid.build([[0, 1], [1, 1]], 0, zero=1)


def find_generator(k, ctx):
    """Generator id of the alphabet element isomorphic to ctx."""
    alphabet = enumerate_generators(k)
    cert = context_cert(ctx)
    for gid, w in zip(alphabet.ids, alphabet.contexts):
        if context_cert(w) == cert:
            return gid
    raise AssertionError("context is not a generator")


def test_build_rejects_bad_tables():
    with pytest.raises(MonoidError):
        FiniteMonoid.build([[0, 1]], 0)  # not square
    with pytest.raises(MonoidError):
        FiniteMonoid.build([[0, 1], [1, 2]], 0)  # entry out of range
    with pytest.raises(MonoidError):
        FiniteMonoid.build([[0, 1], [1, 0]], 1)  # 1 is not neutral
    with pytest.raises(MonoidError):
        FiniteMonoid.build([[0, 1], [1, 0]], 0, zero=1)  # 1 is not absorbing
    # right-neutral only: table[a][e] = a but table[e][a] wrong
    with pytest.raises(MonoidError):
        FiniteMonoid.build([[0, 0], [1, 1]], 0)
    # magma that is not associative: (1*1)*2 = 2 but 1*(1*2) = 1
    with pytest.raises(MonoidError) as err:
        FiniteMonoid.build([[0, 1, 2], [1, 0, 2], [2, 2, 1]], 0)
    assert "associativity" in str(err.value)


def test_mul_and_power():
    assert Z2.mul(1, 1) == 0
    assert Z2.power(1, 1) == 1
    assert Z2.power(1, 2) == 0
    assert Z2.power(1, 5) == 1
    assert U1.power(1, 3) == 1
    with pytest.raises(MonoidError):
        Z2.power(1, 0)


def test_aperiodicity_basics():
    # the nontrivial element of Z2 flips forever
    assert not is_aperiodic_element(Z2, 1)
    assert is_aperiodic_element(Z2, 0)
    assert not is_aperiodic(Z2)
    assert is_aperiodic(U1)


def brute_green(m):
    """Green's relations straight from the definitions."""
    n = m.size
    rset = [frozenset(m.table[a][x] for x in range(n)) for a in range(n)]
    lset = [frozenset(m.table[x][a] for x in range(n)) for a in range(n)]
    jset = [
        frozenset(
            m.table[m.table[x][a]][y] for x in range(n) for y in range(n)
        )
        for a in range(n)
    ]
    return rset, lset, jset


def partition_of(class_ids):
    groups = {}
    for a, c in enumerate(class_ids):
        groups.setdefault(c, set()).add(a)
    return sorted(map(frozenset, groups.values()), key=sorted)


def partition_from_sets(sets):
    groups = {}
    for a, s in enumerate(sets):
        groups.setdefault(s, set()).add(a)
    return sorted(map(frozenset, groups.values()), key=sorted)


def monoid_zoo():
    yield Z2
    yield U1
    # flip-flop: identity plus two resets
    ff, _ = transition_monoid(2, {"a": (0, 0), "b": (1, 1)})
    yield ff
    # full transformation monoid on 3 states
    t3, _ = transition_monoid(3, {"c": (1, 2, 0), "s": (1, 0, 2), "m": (0, 0, 2)})
    assert t3.size == 27
    yield t3
    # a handful of random transition monoids
    import random

    rng = random.Random(20240811)
    for _ in range(6):
        letters = {
            name: tuple(rng.randrange(3) for _ in range(3)) for name in "ab"
        }
        yield transition_monoid(3, letters)[0]


def test_green_classes_match_definitions():
    for m in monoid_zoo():
        data = green_classes(m)
        rset, lset, jset = brute_green(m)
        assert partition_of(data.r_class) == partition_from_sets(rset)
        assert partition_of(data.l_class) == partition_from_sets(lset)
        assert partition_of(data.j_class) == partition_from_sets(jset)
        hset = [(rset[a], lset[a]) for a in range(m.size)]
        assert partition_of(data.h_class) == partition_from_sets(hset)
        for a in range(m.size):
            assert (a in data.idempotents) == (m.mul(a, a) == a)
            for b in range(m.size):
                assert data.j_below(a, b) == (a in jset[b])


def test_green_structure_facts():
    # H refines R and L; R and L refine J; H-classes inside one
    # J-class are equinumerous; an H-class with an idempotent is a
    # group.
    for m in monoid_zoo():
        data = green_classes(m)
        n = m.size
        for a in range(n):
            for b in range(n):
                if data.h_class[a] == data.h_class[b]:
                    assert data.r_class[a] == data.r_class[b]
                    assert data.l_class[a] == data.l_class[b]
                if data.r_class[a] == data.r_class[b]:
                    assert data.j_class[a] == data.j_class[b]
                if data.l_class[a] == data.l_class[b]:
                    assert data.j_class[a] == data.j_class[b]
        by_j = {}
        for a in range(n):
            by_j.setdefault(data.j_class[a], []).append(a)
        for members in by_j.values():
            h_sizes = {}
            for a in members:
                h_sizes[data.h_class[a]] = h_sizes.get(data.h_class[a], 0) + 1
            assert len(set(h_sizes.values())) == 1
        for e in data.idempotents:
            h_members = [a for a in range(n) if data.h_class[a] == data.h_class[e]]
            for a in h_members:
                for b in h_members:
                    assert data.h_class[m.mul(a, b)] == data.h_class[e]
                assert m.mul(e, a) == a and m.mul(a, e) == a
                assert any(
                    m.mul(a, b) == e and m.mul(b, a) == e for b in h_members
                )


def test_transition_monoid_swap_is_z2():
    m, gen_map = transition_monoid(2, {"s": (1, 0)})
    assert m.size == 2
    assert m.identity == 0
    assert not is_aperiodic(m)
    assert m.mul(gen_map["s"], gen_map["s"]) == 0


def test_transition_monoid_resets_give_flip_flop():
    m, gen_map = transition_monoid(2, {"a": (0, 0), "b": (1, 1)})
    assert m.size == 3
    assert is_aperiodic(m)
    a, b = gen_map["a"], gen_map["b"]
    # a reset wins from the right
    assert m.mul(a, b) == b
    assert m.mul(b, a) == a


def test_transition_monoid_rejects_bad_letters():
    with pytest.raises(MonoidError):
        transition_monoid(2, {"a": (0, 2)})
    with pytest.raises(MonoidError):
        transition_monoid(3, {"a": (0, 1)})


def test_generated_submonoid_shortest_words():
    m, gen_map = transition_monoid(4, {"x": (1, 2, 3, 0)})
    assert m.size == 4
    words = generated_submonoid(m, gen_map)
    x = gen_map["x"]
    assert words[m.identity] == ()
    assert words[x] == ("x",)
    assert words[m.mul(x, x)] == ("x", "x")
    # ties break by generator name: y duplicates x but sorts later
    words2 = generated_submonoid(m, {"x": x, "y": x})
    assert words2[x] == ("x",)


def test_recognizer_build_validation():
    with pytest.raises(MonoidError):
        Recognizer.build(Z2, 1, {"g0": 1}, {2})
    with pytest.raises(MonoidError):
        Recognizer.build(Z2, 1, {"g0": 5}, {1})
    with pytest.raises(MonoidError):
        Recognizer.build(Z2, 0, {"g0": 1}, {1})


def test_parity_recognizer_counts_marked_letters():
    rec = parity_recognizer(1, ["g0"])
    assert recognizer_accepts(rec, ["g0"])
    assert not recognizer_accepts(rec, ["g0", "g0"])
    assert recognizer_accepts(rec, ["g0", "g1", "g0", "g0"])
    with pytest.raises(MonoidError):
        parity_recognizer(1, ["g99"])


def test_recognizer_image_requires_mapped_letters():
    rec = Recognizer.build(Z2, 1, {"g0": 1}, {1})
    assert recognizer_image(rec, ["g0"]) == 1
    with pytest.raises(MonoidError):
        recognizer_image(rec, ["g1"])


def test_reach_type_recognizer_accepts_linked_words():
    rec = reach_type_recognizer(1)
    # measured closure at width 1: six composable types plus the
    # adjoined identity
    assert rec.monoid.size == 7
    wire = find_generator(1, identity_context(1))
    left_only = find_generator(
        1, Context.build({"v"}, set(), 1, {1: "v"}, {})
    )
    right_only = find_generator(
        1, Context.build({"v"}, set(), 1, {}, {1: "v"})
    )
    assert recognizer_accepts(rec, [wire])
    assert recognizer_accepts(rec, [wire, wire, wire])
    assert not recognizer_accepts(rec, [left_only, right_only])


def test_syntactic_quotient_collapses_irrelevant_structure():
    # Klein four-group from two independent swaps; accepting ignores
    # the second swap, so the quotient is the two-element group.
    m, gen_map = transition_monoid(4, {"a": (1, 0, 3, 2), "b": (2, 3, 0, 1)})
    assert m.size == 4
    b = gen_map["b"]
    rec = Recognizer.build(m, 1, {"g0": gen_map["a"], "g1": b}, {m.identity, b})
    small = syntactic_quotient(rec)
    assert small.monoid.size == 2
    assert not is_aperiodic(small.monoid)
    # same language on all short words
    import itertools

    for n in range(4):
        for word in itertools.product(["g0", "g1"], repeat=n):
            assert recognizer_accepts(rec, word) == recognizer_accepts(small, word)
    # quotienting again changes nothing
    assert syntactic_quotient(small).monoid.size == 2


def test_decide_positive_on_reach_type_recognizer():
    # every idempotent reachability type maps to an idempotent monoid
    # element here, so no violation can exist
    verdict = decide_aperiodic_mod_reachability(reach_type_recognizer(1))
    assert verdict.aperiodic
    assert verdict.witness is None
    assert verdict.pairs_explored > 0


def test_decide_violation_on_parity():
    # the isolated-vertex generator has idempotent reachability type,
    # so odd/even counting of it is visible modulo reachability
    rec = parity_recognizer(1, ["g0"])
    verdict = decide_aperiodic_mod_reachability(rec)
    assert not verdict.aperiodic
    assert verdict.witness == ("g0",)
    assert verdict.element == 1
    g0 = enumerate_generators(1).by_id("g0")
    rt = beta(g0)
    assert beta_compose(rt, rt) == rt


def test_decide_requires_total_gen_map():
    rec = Recognizer.build(Z2, 1, {"g0": 1}, {1})
    with pytest.raises(MonoidError):
        decide_aperiodic_mod_reachability(rec)


def test_audit_finds_parity_conflicts():
    # parity of isolated-vertex letters is not isomorphism-invariant:
    # g0 . wire is isomorphic to the two-vertex generator that adds a
    # stray vertex next to a persistent port, but only the first word
    # contains g0
    rec = parity_recognizer(1, ["g0"])
    conflicts = audit_well_defined(rec, 2)
    assert conflicts
    alphabet = enumerate_generators(1)
    for word1, word2 in conflicts:
        c1 = compose_all([alphabet.by_id(g) for g in word1])
        c2 = compose_all([alphabet.by_id(g) for g in word2])
        assert isomorphic_contexts(c1, c2)
        assert recognizer_image(rec, word1) != recognizer_image(rec, word2)


def test_audit_clean_on_reach_type_recognizer():
    # reachability types are isomorphism-invariant, so the type
    # recognizer always passes the audit
    assert audit_well_defined(reach_type_recognizer(1), 2) == []


def test_classify_infix_classes():
    rows = classify_infix_classes(parity_recognizer(1, ["g0"]))
    assert len(rows) == 1
    assert rows[0]["size"] == 2
    assert not rows[0]["aperiodic"]
    assert rows[0]["reachable"]
    ff, gen_map = transition_monoid(2, {"a": (0, 0), "b": (1, 1)})
    rec = Recognizer.build(ff, 1, {"g0": gen_map["a"]}, {gen_map["a"]})
    rows = classify_infix_classes(rec)
    # identity sits above the two resets; only the identity class and
    # the reset class touched by g0 words are reachable
    assert [r["aperiodic"] for r in rows] == [True, True]
    sizes = sorted(r["size"] for r in rows)
    assert sizes == [1, 2]


def test_disjoint_paths_oracle_hand_cases():
    parallel = Context.build(
        {"a", "b", "c", "d"},
        {("a", "c"), ("b", "d")},
        2,
        {1: "a", 2: "b"},
        {1: "c", 2: "d"},
    )
    assert oracle_two_disjoint_paths(parallel)
    assert not oracle_two_disjoint_paths(crossing_context())
    assert not oracle_two_disjoint_paths(hub_context())
    assert oracle_two_disjoint_paths(compose(hub_context(), hub_context()))
    with pytest.raises(MonoidError):
        oracle_two_disjoint_paths(identity_context(1))
    # undefined ports are rejected
    half = Context.build({"a", "b"}, set(), 2, {1: "a"}, {2: "b"})
    with pytest.raises(MonoidError):
        oracle_two_disjoint_paths(half)


def test_reach_oracle():
    assert oracle_inner_reach(identity_context(1))
    gap = Context.build({"a", "b"}, set(), 1, {1: "a"}, {1: "b"})
    assert not oracle_inner_reach(gap)


def test_certify_hub_alternates():
    cert = certify_non_star_free(hub_context(), "two-disjoint-paths", max_power=8)
    assert isinstance(cert, Certificate)
    assert cert.threshold == 1
    assert cert.values == (False, True, False, True, False, True, False, True)


def test_certify_rejects_non_idempotent_type():
    with pytest.raises(MonoidError):
        certify_non_star_free(crossing_context(), "two-disjoint-paths")


def test_certify_returns_none_when_stable():
    # reachability-level oracles cannot alternate on idempotent types
    assert certify_non_star_free(hub_context(), "reach") is None
    squared = compose(crossing_context(), crossing_context())
    rt = beta(squared)
    assert beta_compose(rt, rt) == rt
    assert certify_non_star_free(squared, "two-disjoint-paths") is None
    with pytest.raises(MonoidError):
        certify_non_star_free(hub_context(), "no-such-oracle")


def test_certify_with_dressing():
    # dressing with identity contexts must not change the verdict
    cert = certify_non_star_free(
        hub_context(),
        "two-disjoint-paths",
        x=identity_context(2),
        y=identity_context(2),
        max_power=8,
    )
    assert cert is not None and cert.threshold == 1
    with pytest.raises(MonoidError):
        certify_non_star_free(hub_context(), "reach", x=identity_context(1))


def test_monoid_json_round_trip():
    for m in (Z2, U1):
        data = json.loads(json.dumps(monoid_to_json(m)))
        back = monoid_from_json(data)
        assert back == m
    with pytest.raises(MonoidError):
        monoid_from_json({"table": [[0]], "identity": 0, "bogus": 1})
    with pytest.raises(MonoidError):
        monoid_from_json({"identity": 0})
    with pytest.raises(MonoidError):
        monoid_from_json({"table": [[0]], "identity": 0, "size": 5})


def test_recognizer_json_round_trip():
    rec = parity_recognizer(1, ["g0"])
    back = recognizer_from_json(json.loads(json.dumps(recognizer_to_json(rec))))
    assert back == rec
    with pytest.raises(MonoidError):
        recognizer_from_json({"arity": 1})
    with pytest.raises(MonoidError):
        recognizer_from_json(
            {"monoid": monoid_to_json(Z2), "arity": 1, "gen_map": {}, "accepting": [], "x": 1}
        )


def test_validate_monoid_accepts_zoo():
    for m in monoid_zoo():
        validate_monoid(m)
