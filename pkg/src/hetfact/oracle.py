"""Brute-force reference computations.

Everything here works on one dense array over all network variables, so it
is only usable on small networks; the size is guarded by a hard cap.  The
joint is assembled with plain numpy broadcasting rather than the factor
algebra, and :func:`latent_expand` never touches the combination operators,
which keeps both oracles independent of the elimination engine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .factor import Factor, FactorError, Variable, make_factor
from .network import BayesianNetwork, FullCPT, Node, NoisyCPT, node_cpt

DEFAULT_CAP = 2 ** 20


class StateSpaceError(ValueError):
    """The brute-force state space exceeds the configured cap."""


def _check_cap(variables: Iterable[Variable], cap: int) -> None:
    size = math.prod(v.frame_size for v in variables)
    if size > cap:
        raise StateSpaceError(f"state space {size} exceeds oracle cap {cap}")


def _joint_array(cpts: list[Factor], variables: list[Variable]) -> np.ndarray:
    axis = {v.id: i for i, v in enumerate(variables)}
    joint = np.ones([v.frame_size for v in variables])
    for cpt in cpts:
        positions = [axis[v.id] for v in cpt.scope]
        # move the CPT axes into global order, then pad with singleton axes
        order = np.argsort(positions)
        table = np.transpose(cpt.table, order)
        shape = [1] * len(variables)
        for p in sorted(positions):
            shape[p] = variables[p].frame_size
        joint = joint * table.reshape(shape)
    return joint


def brute_joint(net: BayesianNetwork, cap: int = DEFAULT_CAP) -> Factor:
    """Product of every node's CPT over the full state space."""
    variables = sorted(net.variables)
    _check_cap(variables, cap)
    joint = _joint_array([node_cpt(n) for n in net.nodes], variables)
    return Factor(tuple(variables), joint)


def brute_marginal(net: BayesianNetwork, targets: Iterable[Variable | str],
                   evidence: Mapping[Variable | str, int] | None = None,
                   cap: int = DEFAULT_CAP) -> Factor:
    """Unnormalized marginal over ``targets`` of the joint restricted to ``evidence``."""
    joint = brute_joint(net, cap)
    return project(joint, [_lookup(net, t) for t in targets],
                   {_lookup(net, k): v for k, v in (evidence or {}).items()})


def _lookup(net: BayesianNetwork, var: Variable | str) -> Variable:
    return var if isinstance(var, Variable) else net.variable(var)


def project(joint: Factor, targets: list[Variable],
            evidence: Mapping[Variable, int] | None = None) -> Factor:
    """Zero out assignments inconsistent with ``evidence`` and sum onto ``targets``."""
    table = np.array(joint.table)
    ids = [v.id for v in joint.scope]
    for var, value in (evidence or {}).items():
        mask = np.zeros(var.frame_size)
        mask[value] = 1.0
        shape = [1] * table.ndim
        shape[ids.index(var.id)] = var.frame_size
        table = table * mask.reshape(shape)
    keep = {t.id for t in targets}
    axes = tuple(i for i, v in enumerate(joint.scope) if v.id not in keep)
    table = table.sum(axis=axes)
    return Factor(tuple(v for v in joint.scope if v.id in keep), table)


def latent_expand(net: BayesianNetwork, strict: bool = True) -> BayesianNetwork:
    """Replace each bastard node by per-cause latent variables and a deterministic node.

    For a bastard ``e`` with parents ``c1..cm``, latent ``xi_i`` has the frame
    of ``e`` and CPT ``P(xi_i | c_i)`` taken from the i-th contribution; a
    leak becomes a parentless latent.  ``e`` is then 1-for-1 determined by
    folding the operator table over the latents.  With ``strict`` the latent
    CPTs must each normalize.
    """
    next_id = max(v.id for v in net.variables) + 1
    nodes: list[Node] = []
    for node in net.nodes:
        if not isinstance(node.spec, NoisyCPT):
            nodes.append(node)
            continue
        e, spec = node.variable, node.spec
        sources = list(zip(node.parents, spec.contributions))
        if spec.leak is not None:
            sources.append((None, spec.leak))
        latents = []
        for i, (parent, contribution) in enumerate(sources):
            xi = Variable(next_id, f"{e.name}~xi{i + 1}", e.frame_size)
            next_id += 1
            latents.append(xi)
            if parent is None:
                table = contribution.table
                nodes.append(Node(xi, (), FullCPT(make_factor([xi], table.ravel()))))
            else:
                # contribution axes are (e, parent) in id order
                table = contribution.table if e.id < parent.id else contribution.table.T
                nodes.append(Node(xi, (parent,), FullCPT(make_factor([xi, parent], table.ravel()))))
        det = np.zeros([e.frame_size] * (len(latents) + 1))
        for values in itertools.product(range(e.frame_size), repeat=len(latents)):
            det[values + (spec.op.fold(values),)] = 1.0
        nodes.append(Node(e, tuple(latents), FullCPT(make_factor(latents + [e], det.ravel()))))
    return BayesianNetwork(tuple(nodes), net.labels, check_normalization=strict)


def latent_joint(net: BayesianNetwork, cap: int = DEFAULT_CAP, strict: bool = True) -> Factor:
    """Joint of :func:`latent_expand` with every latent variable summed out."""
    expanded = latent_expand(net, strict=strict)
    original = {v.id for v in net.variables}
    return project(brute_joint(expanded, cap), [v for v in expanded.variables if v.id in original])


def latent_marginal(net: BayesianNetwork, targets: Iterable[Variable | str],
                    evidence: Mapping[Variable | str, int] | None = None,
                    cap: int = DEFAULT_CAP, strict: bool = True) -> Factor:
    expanded = latent_expand(net, strict=strict)
    return project(brute_joint(expanded, cap), [_lookup(net, t) for t in targets],
                   {_lookup(net, k): v for k, v in (evidence or {}).items()})


@dataclass
class Comparison:
    max_diff: float
    location: dict[str, int]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_diff <= self.tolerance

    def __bool__(self):
        return self.passed


def compare(f: Factor, g: Factor, tol: float) -> Comparison:
    """Largest entrywise absolute difference and where it occurs."""
    if [v.id for v in f.scope] != [v.id for v in g.scope]:
        raise FactorError(f"scope mismatch: {f.names} vs {g.names}")
    diff = np.abs(f.table - g.table)
    if diff.size == 0:
        return Comparison(0.0, {}, tol)
    index = np.unravel_index(int(np.argmax(diff)), diff.shape) if diff.ndim else ()
    location = {v.name: int(i) for v, i in zip(f.scope, index)}
    return Comparison(float(diff[index]), location, tol)
