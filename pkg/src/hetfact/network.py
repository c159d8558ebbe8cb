"""Bayesian networks with normal and causal-independence (bastard) nodes.

A bastard node stores one contribution factor per parent instead of a full
CPT; its CPT is the induced combination of those factors under the node's
base operator.  :func:`deputize` gives every bastard node a deputy copy that
takes over its children, and :func:`build_hf` turns the deputized network
into a tidy heterogeneous factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .factor import (
    BaseCombinationOperator,
    Factor,
    FactorError,
    Variable,
    indicator,
    make_factor,
    multiply,
    substitute,
    validate_base_op,
)
from .hf import BastardDeclaration, HeterogeneousFactorization, induced_combine, is_tidy

DEPUTY_SUFFIX = "'"
# users may also write e.g. ``e1p`` for the deputy of ``e1``
DEPUTY_ALIAS = "p"
CPT_TOLERANCE = 1e-9


class NetworkError(ValueError):
    """Raised when a network, node or evidence set is invalid."""


class EvidenceError(NetworkError):
    pass


@dataclass(frozen=True, eq=True)
class FullCPT:
    factor: Factor


@dataclass(frozen=True, eq=True)
class NoisyCPT:
    """Per-parent contribution factors combined under ``op``.

    ``contributions[i]`` has scope ``{variable, parents[i]}``.  ``leak`` is an
    optional extra contribution over the node variable alone.
    """

    op: BaseCombinationOperator
    contributions: tuple[Factor, ...]
    leak: Factor | None = None

    def __post_init__(self):
        object.__setattr__(self, "contributions", tuple(self.contributions))


@dataclass(frozen=True, eq=True)
class Node:
    variable: Variable
    parents: tuple[Variable, ...]
    spec: FullCPT | NoisyCPT

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))

    @property
    def is_bastard(self) -> bool:
        return isinstance(self.spec, NoisyCPT)


def _column_sums(cpt: Factor, var: Variable) -> np.ndarray:
    return cpt.table.sum(axis=cpt.axis(var))


def check_node(node: Node, *, check_normalization: bool = True) -> None:
    """Raise :class:`NetworkError` if a node is locally inconsistent."""
    e = node.variable
    ids = [p.id for p in node.parents]
    if e.id in ids:
        raise NetworkError(f"node {e.name!r} lists itself as a parent")
    if len(set(ids)) != len(ids):
        raise NetworkError(f"node {e.name!r} has a repeated parent")
    if isinstance(node.spec, FullCPT):
        want = sorted((e,) + node.parents)
        if list(node.spec.factor.scope) != want:
            raise NetworkError(
                f"CPT of {e.name!r} has scope {node.spec.factor.names}, "
                f"expected {tuple(v.name for v in want)}"
            )
        cpt = node.spec.factor
    else:
        spec = node.spec
        if not node.parents:
            raise NetworkError(f"bastard node {e.name!r} has no parents")
        if spec.op.frame_size != e.frame_size:
            raise NetworkError(f"operator of {e.name!r} does not match its frame size")
        report = validate_base_op(spec.op)
        if not report.ok:
            raise NetworkError(f"operator of {e.name!r}: " + "; ".join(report.describe()))
        if len(spec.contributions) != len(node.parents):
            raise NetworkError(f"{e.name!r} needs one contribution factor per parent")
        for p, f in zip(node.parents, spec.contributions):
            if list(f.scope) != sorted((e, p)):
                raise NetworkError(
                    f"contribution of {p.name!r} to {e.name!r} has scope {f.names}"
                )
        if spec.leak is not None and list(spec.leak.scope) != [e]:
            raise NetworkError(f"leak of {e.name!r} must be a factor over {e.name!r} only")
        cpt = cpt_from_contributions(node)
    if not check_normalization:
        return
    sums = _column_sums(cpt, e)
    bad = np.abs(sums - 1.0) > CPT_TOLERANCE
    if np.any(bad):
        worst = float(sums[bad].ravel()[0])
        raise NetworkError(
            f"conditional distribution of {e.name!r} does not normalize "
            f"(a column sums to {worst:.12g})"
        )


def cpt_from_contributions(node: Node) -> Factor:
    """Materialize a bastard node's CPT by folding its contributions under its operator."""
    if not isinstance(node.spec, NoisyCPT):
        raise NetworkError(f"{node.variable.name!r} is not a bastard node")
    if not node.parents:
        raise NetworkError(f"bastard node {node.variable.name!r} has no parents")
    factors = list(node.spec.contributions)
    if node.spec.leak is not None:
        factors.append(node.spec.leak)
    result = factors[0]
    for f in factors[1:]:
        result = induced_combine(result, f, node.variable, node.spec.op)
    return result


def node_cpt(node: Node) -> Factor:
    if isinstance(node.spec, FullCPT):
        return node.spec.factor
    return cpt_from_contributions(node)


@dataclass(frozen=True, eq=True)
class BayesianNetwork:
    """Nodes in any order; validated on construction.

    ``labels`` optionally names the frame values of each variable and is only
    used for display and serialization.
    """

    nodes: tuple[Node, ...]
    labels: Mapping[str, tuple[str, ...]] = field(default_factory=dict, compare=False)
    check_normalization: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "labels", dict(self.labels))
        self._validate()

    def _validate(self):
        seen: dict[int, Variable] = {}
        names: set[str] = set()
        for node in self.nodes:
            v = node.variable
            if v.id in seen:
                raise NetworkError(f"variable {v.name!r} is defined by more than one node")
            if v.name in names:
                raise NetworkError(f"duplicate variable name {v.name!r}")
            seen[v.id] = v
            names.add(v.name)
        for node in self.nodes:
            for p in node.parents:
                if seen.get(p.id) != p:
                    raise NetworkError(
                        f"parent {p.name!r} of {node.variable.name!r} is not defined"
                    )
            check_node(node, check_normalization=self.check_normalization)
        cycle = self._find_cycle()
        if cycle:
            raise NetworkError("cycle: " + " -> ".join(cycle))

    def _find_cycle(self) -> list[str] | None:
        parents = {n.variable.id: [p.id for p in n.parents] for n in self.nodes}
        names = {n.variable.id: n.variable.name for n in self.nodes}
        state: dict[int, int] = {}
        stack: list[int] = []

        def visit(u):
            state[u] = 1
            stack.append(u)
            for p in parents[u]:
                if state.get(p) == 1:
                    cyc = stack[stack.index(p):] + [p]
                    return [names[i] for i in reversed(cyc)]
                if p not in state:
                    found = visit(p)
                    if found:
                        return found
            stack.pop()
            state[u] = 2
            return None

        for u in parents:
            if u not in state:
                found = visit(u)
                if found:
                    return found
        return None

    @property
    def variables(self) -> tuple[Variable, ...]:
        return tuple(n.variable for n in self.nodes)

    def node(self, var: Variable | str) -> Node:
        for n in self.nodes:
            if n.variable.name == var or n.variable == var:
                return n
        raise NetworkError(f"unknown variable {getattr(var, 'name', var)!r}")

    def variable(self, name: str) -> Variable:
        return self.node(name).variable

    def topological_order(self) -> list[Node]:
        done: set[int] = set()
        order = []
        pending = list(self.nodes)
        while pending:
            rest = []
            for n in pending:
                if all(p.id in done for p in n.parents):
                    order.append(n)
                    done.add(n.variable.id)
                else:
                    rest.append(n)
            pending = rest
        return order

    def children(self, var: Variable) -> list[Node]:
        return [n for n in self.nodes if var in n.parents]

    def state_space(self) -> int:
        size = 1
        for v in self.variables:
            size *= v.frame_size
        return size


def deputing_factor(e: Variable, e_prime: Variable) -> Factor:
    """The 0/1 identity I(e, e') over a bastard variable and its deputy."""
    if e.frame_size != e_prime.frame_size:
        raise FactorError(f"deputy {e_prime.name!r} frame differs from {e.name!r}")
    return make_factor([e, e_prime], np.eye(e.frame_size).ravel())


def _rename_parents(node: Node, mapping: Mapping[Variable, Variable]) -> Node:
    if not any(p in mapping for p in node.parents):
        return node
    sub = {p: mapping[p] for p in node.parents if p in mapping}
    parents = tuple(sub.get(p, p) for p in node.parents)
    if isinstance(node.spec, FullCPT):
        spec = FullCPT(substitute(node.spec.factor, sub))
    else:
        spec = NoisyCPT(
            node.spec.op,
            tuple(substitute(f, sub) for f in node.spec.contributions),
            node.spec.leak,
        )
    return Node(node.variable, parents, spec)


def deputize(net: BayesianNetwork) -> tuple[BayesianNetwork, dict[Variable, Variable]]:
    """Give every bastard node a deputy that takes over its children.

    Returns the new network and the map from bastard variable to deputy.
    """
    next_id = max((v.id for v in net.variables), default=-1) + 1
    deputies: dict[Variable, Variable] = {}
    for node in net.nodes:
        if node.is_bastard:
            e = node.variable
            deputies[e] = Variable(next_id, e.name + DEPUTY_SUFFIX, e.frame_size)
            next_id += 1
    if not deputies:
        return net, {}
    nodes = []
    labels = dict(net.labels)
    for node in net.nodes:
        nodes.append(_rename_parents(node, deputies))
        if node.variable in deputies:
            e, d = node.variable, deputies[node.variable]
            nodes.append(Node(d, (e,), FullCPT(deputing_factor(e, d))))
            if e.name in labels:
                labels[d.name] = labels[e.name]
    return BayesianNetwork(tuple(nodes), labels), deputies


def build_hf(net: BayesianNetwork, deputy_map: Mapping[Variable, Variable]) -> HeterogeneousFactorization:
    """The tidy HF of a deputized network."""
    deputy_ids = {d.id for d in deputy_map.values()}
    bastards, het, normal = [], [], []
    for node in net.nodes:
        e = node.variable
        if node.is_bastard:
            if e not in deputy_map:
                raise NetworkError(f"bastard {e.name!r} has no deputy; deputize the network first")
            bastards.append(BastardDeclaration(e, node.spec.op))
            het.extend(node.spec.contributions)
            if node.spec.leak is not None:
                het.append(node.spec.leak)
        elif e.id in deputy_ids:
            normal.append(deputing_factor(node.parents[0], e))
        else:
            normal.append(node.spec.factor)
    hf = HeterogeneousFactorization(
        frozenset(net.variables), tuple(bastards), tuple(het), tuple(normal), dict(deputy_map)
    )
    report = is_tidy(hf)
    if not report.ok:
        raise NetworkError("HF is not tidy: " + "; ".join(report.describe()))
    return hf


def hf_from_network(net: BayesianNetwork) -> HeterogeneousFactorization:
    return build_hf(*deputize(net))


def resolve_variable(hf_or_vars, name: str | Variable) -> Variable:
    """Find a variable by name; ``<bastard>p`` resolves to that bastard's deputy.

    An exact name match always wins over the alias.
    """
    if isinstance(name, Variable):
        return name
    if isinstance(hf_or_vars, HeterogeneousFactorization):
        variables = hf_or_vars.variables
    else:
        variables = hf_or_vars
    by_name = {v.name: v for v in variables}
    if name in by_name:
        return by_name[name]
    if name.endswith(DEPUTY_ALIAS):
        alias = name[: -len(DEPUTY_ALIAS)] + DEPUTY_SUFFIX
        if alias in by_name:
            return by_name[alias]
    raise NetworkError(f"unknown variable {name!r}")


def check_evidence(hf: HeterogeneousFactorization, evidence: Mapping[Variable, int]) -> None:
    for var, value in evidence.items():
        if var not in hf.variables:
            raise EvidenceError(f"evidence on unknown variable {var.name!r}")
        if hf.is_deputy(var) or var.name.endswith(DEPUTY_SUFFIX):
            raise EvidenceError(f"evidence on deputy variable {var.name!r} is not allowed")
        if not 0 <= value < var.frame_size:
            raise EvidenceError(f"value {value} out of range for {var.name!r}")


def apply_evidence(hf: HeterogeneousFactorization, evidence: Mapping[Variable, int]) -> HeterogeneousFactorization:
    """Fold observations into the HF as indicator factors, keeping it tidy.

    For a bastard variable the indicator is multiplied into its deputing
    factor, so it remains the only normal factor over that variable.
    """
    if not evidence:
        return hf
    check_evidence(hf, evidence)
    normal = list(hf.normal_factors)
    for var, value in evidence.items():
        lam = indicator(var, value)
        if not hf.is_bastard(var):
            normal.append(lam)
            continue
        deputy = hf.deputy_map.get(var)
        holders = [i for i, g in enumerate(normal) if var in g]
        if deputy is None or len(holders) != 1 or deputy not in normal[holders[0]]:
            raise EvidenceError(f"bastard {var.name!r} has no deputing factor to absorb evidence")
        normal[holders[0]] = multiply(normal[holders[0]], lam)
    result = hf.replace(normal_factors=tuple(normal))
    report = is_tidy(result)
    if not report.ok:
        raise NetworkError("evidence broke tidiness: " + "; ".join(report.describe()))
    return result


def evidence_by_name(net_or_hf, evidence: Mapping[str | Variable, int]) -> dict[Variable, int]:
    variables = net_or_hf.variables
    out = {}
    for key, value in evidence.items():
        var = key if isinstance(key, Variable) else resolve_variable(variables, key)
        if var.name.endswith(DEPUTY_SUFFIX):
            raise EvidenceError(f"evidence on deputy variable {var.name!r} is not allowed")
        out[var] = int(value)
    return out
