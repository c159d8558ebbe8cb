"""Random networks and factors for property tests and oracle cross-checks."""

from __future__ import annotations

import math

import numpy as np

from .factor import Factor, Variable, builtin_op, make_factor
from .hf import BastardDeclaration
from .network import BayesianNetwork, FullCPT, Node, NoisyCPT

NOISY_KINDS = ("or", "max", "sat_add")


def random_factor(rng: np.random.Generator, scope, zeros: float = 0.1) -> Factor:
    size = math.prod(v.frame_size for v in scope)
    table = rng.uniform(0.0, 1.0, size)
    table[rng.uniform(size=size) < zeros] = 0.0
    return make_factor(list(scope), table)


def _conditional(rng, child: Variable, parent: Variable | None, sparse: bool) -> np.ndarray:
    """Flat table for P(child | parent) laid out over the id-sorted scope."""
    rows = 1 if parent is None else parent.frame_size
    alpha = np.ones(child.frame_size)
    cols = rng.dirichlet(alpha, size=rows)
    if sparse and parent is not None:
        # an inactive cause contributes nothing, as in textbook noisy-OR
        cols[0] = 0.0
        cols[0, 0] = 1.0
    if parent is None or parent.id < child.id:
        return cols.ravel()
    return cols.T.ravel()


def random_cpt(rng, var: Variable, parents: list[Variable]) -> Factor:
    shape = [p.frame_size for p in parents]
    cols = rng.dirichlet(np.ones(var.frame_size), size=math.prod(shape) if shape else 1)
    return make_factor(list(parents) + [var], cols.ravel())


def random_network(rng: np.random.Generator, max_vars: int = 8, max_bastards: int = 3,
                   max_parents: int = 3, kinds=NOISY_KINDS,
                   latent_cap: int = 2 ** 16) -> BayesianNetwork:
    """A random valid network with up to ``max_bastards`` causal-independence nodes.

    Networks whose latent expansion would exceed ``latent_cap`` joint entries
    are redrawn.
    """
    while True:
        n = int(rng.integers(3, max_vars + 1))
        n_bastards = int(rng.integers(0, min(max_bastards, n - 1) + 1))
        bastard_at = set(rng.choice(np.arange(1, n), size=n_bastards, replace=False).tolist())
        ops = {i: str(rng.choice(kinds)) for i in bastard_at}
        variables = []
        for i in range(n):
            frame = 2 if ops.get(i) == "or" else int(rng.integers(2, 4))
            variables.append(Variable(i, f"v{i}", frame))
        nodes = []
        latent_size = math.prod(v.frame_size for v in variables)
        for i, var in enumerate(variables):
            lo = 1 if i in bastard_at else 0
            k = int(rng.integers(lo, min(i, max_parents) + 1))
            parents = [variables[j] for j in sorted(rng.choice(i, size=k, replace=False).tolist())]
            if i in bastard_at:
                sparse = bool(rng.uniform() < 0.5)
                contributions = tuple(
                    make_factor(sorted([var, p]), _conditional(rng, var, p, sparse))
                    for p in parents
                )
                spec = NoisyCPT(builtin_op(ops[i], var.frame_size), contributions)
                latent_size *= var.frame_size ** len(parents)
            else:
                spec = FullCPT(random_cpt(rng, var, parents))
            nodes.append(Node(var, tuple(parents), spec))
        if latent_size <= latent_cap:
            return BayesianNetwork(tuple(nodes))


def random_query(rng: np.random.Generator, net: BayesianNetwork):
    """Random non-empty target set and evidence on disjoint variables."""
    variables = list(net.variables)
    rng.shuffle(variables)
    n_targets = int(rng.integers(1, min(3, len(variables)) + 1))
    targets = variables[:n_targets]
    rest = variables[n_targets:]
    n_ev = int(rng.integers(0, min(2, len(rest)) + 1))
    evidence = {v: int(rng.integers(0, v.frame_size)) for v in rest[:n_ev]}
    return targets, evidence


def random_declarations(rng: np.random.Generator, variables, p_bastard: float = 0.5,
                        kinds=("or", "and", "max", "min", "sat_add", "mod_add")):
    decls = []
    for v in variables:
        if rng.uniform() < p_bastard:
            allowed = [k for k in kinds if v.frame_size == 2 or k not in ("or", "and")]
            decls.append(BastardDeclaration(v, builtin_op(str(rng.choice(allowed)), v.frame_size)))
    return decls
