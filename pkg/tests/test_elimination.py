import itertools

import pytest

from hetfact.elimination import (
    InconsistentEvidenceError,
    OrderingError,
    finalize,
    homogeneous_query,
    order_auto,
    projection,
    query,
    required_eliminations,
    sum_out_step,
    validate_ordering,
)
from hetfact.factor import Variable, builtin_op, make_factor, multiply, sum_out
from hetfact.hf import BastardDeclaration, HeterogeneousFactorization, hf_joint, is_tidy
from hetfact.network import (
    BayesianNetwork,
    FullCPT,
    Node,
    apply_evidence,
    cpt_from_contributions,
    deputing_factor,
    hf_from_network,
    resolve_variable,
)
from hetfact.oracle import brute_joint, brute_marginal, compare
from hetfact.testing import random_network, random_query

GOLDEN_ORDER = ["e3", "e3p", "a", "b", "e1", "e1p", "c"]


def names(hf, *tokens):
    return [resolve_variable(hf, t) for t in tokens]


def chain():
    x, y, z = Variable(0, "x", 2), Variable(1, "y", 2), Variable(2, "z", 2)
    return BayesianNetwork((
        Node(x, (), FullCPT(make_factor([x], [0.4, 0.6]))),
        Node(y, (x,), FullCPT(make_factor([x, y], [0.9, 0.1, 0.2, 0.8]))),
        Node(z, (y,), FullCPT(make_factor([y, z], [0.7, 0.3, 0.5, 0.5]))),
    ))


class TestValidateOrdering:
    def test_golden_order_ok(self, example_hf):
        targets = names(example_hf, "e2", "y")
        assert validate_ordering(example_hf, targets, names(example_hf, *GOLDEN_ORDER)) == []

    def test_deputy_first(self, example_hf):
        order = names(example_hf, "e3", "e3p", "a", "b", "e1p", "e1", "c")
        violations = validate_ordering(example_hf, names(example_hf, "e2", "y"), order)
        assert violations == ["deputy \"e1'\" precedes its bastard 'e1'"]

    def test_missing_variable(self, example_hf):
        order = names(example_hf, *GOLDEN_ORDER[:-1])
        violations = validate_ordering(example_hf, names(example_hf, "e2", "y"), order)
        assert violations == ["partition incomplete: 'c' is missing"]

    def test_target_deputy_not_eliminable(self, example_hf):
        order = names(example_hf, *GOLDEN_ORDER, "e2p")
        violations = validate_ordering(example_hf, names(example_hf, "e2", "y"), order)
        assert any("must not be eliminated" in v for v in violations)

    def test_duplicates(self, example_hf):
        order = names(example_hf, *GOLDEN_ORDER, "c")
        assert any("more than once" in v
                   for v in validate_ordering(example_hf, names(example_hf, "e2", "y"), order))


class TestOrderAuto:
    def test_chain(self):
        hf = hf_from_network(chain())
        ordering = order_auto(hf, [resolve_variable(hf, "z")])
        assert ordering.names == ["x", "y"]

    def test_deputized(self, example_hf):
        targets = names(example_hf, "e2", "y")
        ordering = order_auto(example_hf, targets)
        assert validate_ordering(example_hf, targets, ordering.order) == []

    def test_random_valid(self, rng):
        for _ in range(50):
            net = random_network(rng)
            hf = hf_from_network(net)
            targets, _ = random_query(rng, net)
            assert validate_ordering(hf, targets, order_auto(hf, targets).order) == []


class TestGoldenSteps:
    def test_trace(self, deputized_example, example_hf):
        net, _ = deputized_example
        hf = example_hf
        e3, e3p, a = names(hf, "e3", "e3p", "a")

        hf1, s1 = sum_out_step(hf, e3)
        assert (s1.k, s1.m, s1.kind) == (2, 1, "heterogeneous")
        psi1 = [f for f in hf1.het_factors if e3p in f][0]
        assert set(psi1.names) == {"e1'", "e2'", "e3'"}
        # sum over e3 of (f31 (x) f32) * I3 is P(e3 | e1', e2') with e3 renamed e3'
        cpt = multiply(cpt_from_contributions(net.node("e3")), deputing_factor(e3, e3p))
        assert psi1.allclose(sum_out(cpt, e3), 1e-15)

        hf2, s2 = sum_out_step(hf1, e3p)
        assert (s2.k, s2.m) == (1, 1)
        psi2 = hf2.het_factors[-1]
        assert set(psi2.names) == {"e1'", "e2'", "y"}

        hf3, s3 = sum_out_step(hf2, a)
        assert (s3.k, s3.m) == (2, 1)
        psi3 = hf3.het_factors[-1]
        assert set(psi3.names) == {"e1", "e2"}
        f11 = net.node("e1").spec.contributions[0]
        f21 = net.node("e2").spec.contributions[0]
        pa = net.node("a").spec.factor
        expected = sum_out(multiply(multiply(pa, f11), f21), a)
        assert psi3.allclose(expected, 1e-15)
        assert all(is_tidy(h).ok for h in (hf1, hf2, hf3))

    def test_deputy_step_rejected(self, example_hf):
        with pytest.raises(OrderingError):
            sum_out_step(example_hf, resolve_variable(example_hf, "e1p"))

    def test_absent_variable_warns(self):
        v = Variable(0, "v", 2)
        hf = HeterogeneousFactorization(frozenset({v}), (), (), ())
        with pytest.warns(UserWarning, match="no factor"):
            after, stats = sum_out_step(hf, v)
        assert v not in after.variables and stats.kind == "none"


class TestFinalize:
    def test_golden_result_scope(self, example_hf):
        result, _ = projection(example_hf, names(example_hf, "e2", "y"),
                               names(example_hf, *GOLDEN_ORDER))
        assert set(result.names) == {"e2", "y"}

    def test_no_bastards(self):
        x, y = Variable(0, "x", 2), Variable(1, "y", 2)
        f, g = make_factor([x], [0.4, 0.6]), make_factor([x, y], [1, 2, 3, 4])
        hf = HeterogeneousFactorization(frozenset({x, y}), (), (), (f, g))
        result, _ = finalize(hf, [x, y])
        assert result == multiply(f, g)

    def test_diagonal_collapse(self):
        e, d = Variable(0, "e", 2), Variable(1, "e'", 2)
        f = make_factor([e, d], [0.1, 0.2, 0.3, 0.4])
        hf = HeterogeneousFactorization(
            frozenset({e, d}), (BastardDeclaration(e, builtin_op("or", 2)),), (f,),
            (deputing_factor(e, d),), {e: d})
        result, _ = finalize(hf, [e])
        assert result.flat == pytest.approx([0.1, 0.4], abs=1e-15)

    def test_leftover_variable(self, example_hf):
        with pytest.raises(OrderingError, match="not eliminated"):
            finalize(example_hf, names(example_hf, "e2", "y"))


class TestProjection:
    def test_golden_against_oracle(self, example_net, example_hf):
        result, stats = projection(example_hf, names(example_hf, "e2", "y"),
                                   names(example_hf, *GOLDEN_ORDER))
        assert len(stats.steps) == len(GOLDEN_ORDER)
        assert compare(result, brute_marginal(example_net, ["e2", "y"]), 1e-9).passed

    def test_nothing_to_eliminate(self, example_net, example_hf):
        targets = [v for v in example_hf.variables if not v.name.endswith("'")]
        result, stats = projection(example_hf, targets, [])
        assert stats.steps == []
        assert compare(result, brute_joint(example_net), 1e-12).passed

    def test_two_orderings_agree(self, example_hf):
        targets = names(example_hf, "e2", "y")
        r1, _ = projection(example_hf, targets, names(example_hf, *GOLDEN_ORDER))
        r2, _ = projection(example_hf, targets, order_auto(example_hf, targets).order)
        assert compare(r1, r2, 1e-9).passed

    def test_invalid_ordering_raises(self, example_hf):
        with pytest.raises(OrderingError):
            projection(example_hf, names(example_hf, "e2", "y"), names(example_hf, *GOLDEN_ORDER[:-1]))


class TestQuery:
    def test_posterior_matches_oracle(self, example_net):
        result = query(example_net, ["e2"], {"y": 0}, GOLDEN_ORDER)
        oracle = brute_marginal(example_net, ["e2"], {"y": 0})
        oracle = make_factor(oracle.scope, oracle.table / oracle.table.sum())
        assert compare(result.posterior, oracle, 1e-9).passed
        assert result.posterior.table.sum() == pytest.approx(1.0, abs=1e-12)
        assert result.ordering == ["e3", "e3'", "a", "b", "e1", "e1'", "c"]

    def test_prior_recovery(self, example_net):
        result = query(example_net, ["a"])
        assert result.posterior.flat == pytest.approx([0.7, 0.3], abs=1e-12)

    def test_inconsistent_evidence(self):
        x, y = Variable(0, "x", 2), Variable(1, "y", 2)
        net = BayesianNetwork((
            Node(x, (), FullCPT(make_factor([x], [1.0, 0.0]))),
            Node(y, (x,), FullCPT(make_factor([x, y], [0.5, 0.5, 0.5, 0.5]))),
        ))
        with pytest.raises(InconsistentEvidenceError):
            query(net, ["y"], {"x": 1})

    def test_homogeneous_agrees(self, example_net):
        het = query(example_net, ["e2"], {"y": 0})
        hom = homogeneous_query(example_net, ["e2"], {"y": 0})
        assert compare(het.posterior, hom.posterior, 1e-9).passed

    def test_bastard_evidence_and_target(self, example_net):
        result = query(example_net, ["e1", "e3"], {"e2": 1, "y": 1})
        oracle = brute_marginal(example_net, ["e1", "e3"], {"e2": 1, "y": 1})
        oracle = make_factor(oracle.scope, oracle.table / oracle.table.sum())
        assert compare(result.posterior, oracle, 1e-9).passed


class TestProperties:
    def test_joint_preserved_each_step(self, rng):
        checked = 0
        while checked < 25:
            net = random_network(rng, max_vars=6)
            hf = hf_from_network(net)
            if len(hf.variables) > 9:
                continue
            targets, evidence = random_query(rng, net)
            hf = apply_evidence(hf, evidence)
            for z in order_auto(hf, targets).order:
                before = hf_joint(hf)
                hf, _ = sum_out_step(hf, z)
                assert is_tidy(hf).ok
                assert hf_joint(hf).allclose(sum_out(before, z), 1e-10)
            checked += 1

    def test_ordering_invariance_exhaustive(self, rng):
        for _ in range(4):
            net = random_network(rng, max_vars=5, max_bastards=2)
            hf = hf_from_network(net)
            targets, evidence = random_query(rng, net)
            hf = apply_evidence(hf, evidence)
            required = sorted(required_eliminations(hf, targets))
            reference = None
            count = 0
            for perm in itertools.permutations(required):
                if validate_ordering(hf, targets, perm):
                    continue
                result, _ = projection(hf, targets, perm)
                reference = reference or result
                assert compare(result, reference, 1e-9).passed
                count += 1
            assert count >= 1

    def test_scope_economy(self, rng):
        for _ in range(25):
            net = random_network(rng)
            hf = hf_from_network(net)
            targets, _ = random_query(rng, net)
            for z in order_auto(hf, targets).order:
                neighbours = {z.name}
                for f in hf.het_factors + hf.normal_factors:
                    if z in f:
                        neighbours.update(f.names)
                hf, step = sum_out_step(hf, z)
                assert set(step.scope) == neighbours

    def test_deputy_order_necessary(self, example_net, example_hf):
        targets = names(example_hf, "e2", "y")
        bad = names(example_hf, "e3", "e3p", "a", "b", "e1p", "e1", "c")
        assert validate_ordering(example_hf, targets, bad)
        forced, _ = projection(example_hf, targets, bad, check=False)
        assert compare(forced, brute_marginal(example_net, ["e2", "y"]), 1e-6).max_diff > 1e-6
