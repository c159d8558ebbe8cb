import numpy as np
import pytest

from hetfact.factor import FactorError, Variable, builtin_op, make_factor
from hetfact.network import BayesianNetwork, FullCPT, Node, NoisyCPT, deputize
from hetfact.oracle import (
    StateSpaceError,
    brute_joint,
    brute_marginal,
    compare,
    latent_expand,
    latent_joint,
    project,
)
from hetfact.testing import random_network


@pytest.fixture
def chain():
    x, y = Variable(0, "x", 2), Variable(1, "y", 2)
    return BayesianNetwork((
        Node(x, (), FullCPT(make_factor([x], [0.4, 0.6]))),
        Node(y, (x,), FullCPT(make_factor([x, y], [0.9, 0.1, 0.2, 0.8]))),
    ))


def two_cause(kind, frame, active, inactive):
    c1, c2, e = Variable(0, "c1", 2), Variable(1, "c2", 2), Variable(2, "e", frame)
    contributions = tuple(
        make_factor([c, e], inactive + a) for c, a in zip((c1, c2), active)
    )
    return BayesianNetwork((
        Node(c1, (), FullCPT(make_factor([c1], [0.5, 0.5]))),
        Node(c2, (), FullCPT(make_factor([c2], [0.5, 0.5]))),
        Node(e, (c1, c2), NoisyCPT(builtin_op(kind, frame), contributions)),
    ))


def aggregation_column(net, **parents):
    expanded = latent_expand(net)
    joint = brute_joint(expanded)
    e = net.variable("e")
    sliced = project(joint, [e], {net.variable(k): v for k, v in parents.items()})
    return sliced.table / sliced.table.sum()


class TestBruteJoint:
    def test_chain(self, chain):
        assert brute_joint(chain).flat == pytest.approx([0.36, 0.04, 0.12, 0.48], abs=1e-15)

    def test_normalized(self, example_net, rng):
        assert float(brute_joint(example_net).table.sum()) == pytest.approx(1.0, abs=1e-9)
        for _ in range(20):
            assert float(brute_joint(random_network(rng)).table.sum()) == pytest.approx(1.0, abs=1e-9)

    def test_deputies_summed_out(self, example_net):
        deputized, dmap = deputize(example_net)
        assert compare(brute_marginal(deputized, sorted(example_net.variables)),
                       brute_joint(example_net), 1e-12).passed

    def test_cap(self):
        nodes = []
        for i in range(25):
            v = Variable(i, f"x{i}", 2)
            nodes.append(Node(v, (), FullCPT(make_factor([v], [0.5, 0.5]))))
        with pytest.raises(StateSpaceError, match="exceeds oracle cap"):
            brute_joint(BayesianNetwork(tuple(nodes)))

    def test_custom_cap(self, example_net):
        with pytest.raises(StateSpaceError):
            brute_joint(example_net, cap=64)
        assert brute_joint(example_net, cap=128).size == 128


class TestBruteMarginal:
    def test_chain_marginal(self, chain):
        assert brute_marginal(chain, ["y"]).flat == pytest.approx([0.48, 0.52], abs=1e-15)

    def test_all_variables(self, chain):
        assert brute_marginal(chain, ["x", "y"]) == brute_joint(chain)

    def test_evidence_unnormalized(self, chain):
        assert brute_marginal(chain, ["x"], {"y": 1}).flat == pytest.approx([0.04, 0.48], abs=1e-15)


class TestLatentExpand:
    def test_noisy_or_column(self):
        net = two_cause("or", 2, [[0.2, 0.8], [0.3, 0.7]], [1.0, 0.0])
        col = aggregation_column(net, c1=1, c2=1)
        assert col == pytest.approx([0.06, 0.94], abs=1e-12)

    def test_adder_column(self):
        net = two_cause("sat_add", 3, [[0.5, 0.5, 0.0], [0.4, 0.6, 0.0]], [1.0, 0.0, 0.0])
        col = aggregation_column(net, c1=1, c2=1)
        assert col == pytest.approx([0.2, 0.5, 0.3], abs=1e-12)

    def test_single_parent(self):
        c, e = Variable(0, "c", 2), Variable(1, "e", 3)
        contribution = make_factor([c, e], [0.7, 0.2, 0.1, 0.1, 0.3, 0.6])
        net = BayesianNetwork((
            Node(c, (), FullCPT(make_factor([c], [0.25, 0.75]))),
            Node(e, (c,), NoisyCPT(builtin_op("max", 3), (contribution,))),
        ))
        for value in range(2):
            col = aggregation_column(net, c=value)
            assert col == pytest.approx(contribution.table[value], abs=1e-12)

    def test_only_full_cpts(self, example_net):
        expanded = latent_expand(example_net)
        assert all(isinstance(n.spec, FullCPT) for n in expanded.nodes)
        assert len(expanded.nodes) == len(example_net.nodes) + 7

    def test_aggregation_deterministic(self, example_net):
        expanded = latent_expand(example_net)
        det = expanded.node("e3").spec.factor
        e3 = example_net.variable("e3")
        table = np.moveaxis(det.table, det.axis(e3), -1)
        assert set(np.unique(table)) <= {0.0, 1.0}
        assert np.all(table.sum(axis=-1) == 1.0)

    def test_double_oracle(self, example_net, rng):
        assert compare(latent_joint(example_net), brute_joint(example_net), 1e-12).passed
        for _ in range(20):
            net = random_network(rng)
            assert compare(latent_joint(net), brute_joint(net), 1e-12).passed


class TestCompare:
    x = Variable(0, "x", 2)

    def test_reflexive(self):
        f = make_factor([self.x], [0.4, 0.6])
        c = compare(f, f, 0.0)
        assert c.max_diff == 0.0 and c.passed

    def test_small_difference_fails(self):
        c = compare(make_factor([self.x], [0.4, 0.6]), make_factor([self.x], [0.4, 0.6 + 1e-8]), 1e-9)
        assert not c.passed and c.location == {"x": 1}

    def test_location(self):
        c = compare(make_factor([self.x], [0.4, 0.6]), make_factor([self.x], [0.6, 0.4]), 1e-9)
        assert c.max_diff == pytest.approx(0.2) and c.location == {"x": 0}

    def test_scope_mismatch(self):
        y = Variable(1, "y", 2)
        with pytest.raises(FactorError, match="scope mismatch"):
            compare(make_factor([self.x], [0.4, 0.6]), make_factor([y], [0.4, 0.6]), 1e-9)
