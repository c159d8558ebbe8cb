"""Variable elimination over tidy heterogeneous factorizations.

Each step sums out one variable ``z``: the heterogeneous factors mentioning
``z`` are combined with the general combination operator, the normal factors
mentioning ``z`` are multiplied, and the two are merged and summed over
``z``.  Only factors that mention ``z`` take part, which is where the
per-parent factorization of causal-independence nodes pays off.

A deputy may only be eliminated after its bastard variable.  Deputies of
target bastard variables are never eliminated; :func:`finalize` collapses
them onto their bastard variables instead.

Operation counts in :class:`StepStats` are deterministic:

* general combination: one multiply-accumulate per summand
  (see :func:`hetfact.hf.combination_cost`);
* multiplication: one per entry of the product;
* summing out: one per entry of the table being summed.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .factor import Factor, Variable, diagonal, multiply, sum_out
from .hf import (
    HeterogeneousFactorization,
    combination_cost,
    general_combine,
    is_tidy,
)
from .network import (
    BayesianNetwork,
    NetworkError,
    apply_evidence,
    evidence_by_name,
    hf_from_network,
    node_cpt,
    resolve_variable,
)

log = logging.getLogger(__name__)


class OrderingError(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid elimination ordering: " + "; ".join(self.violations))


class InconsistentEvidenceError(ValueError):
    pass


class TidinessError(AssertionError):
    pass


@dataclass(frozen=True)
class EliminationOrdering:
    order: tuple[Variable, ...]
    targets: frozenset[Variable]

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.order]


@dataclass
class StepStats:
    variable: str
    k: int
    m: int
    kind: str
    scope: tuple[str, ...]
    ops: int

    @property
    def scope_size(self) -> int:
        return len(self.scope)


@dataclass
class EliminationStats:
    steps: list[StepStats] = field(default_factory=list)
    final_ops: int = 0

    @property
    def total_ops(self) -> int:
        return sum(s.ops for s in self.steps) + self.final_ops

    @property
    def max_scope_size(self) -> int:
        return max((s.scope_size for s in self.steps), default=0)

    def step(self, name: str) -> StepStats:
        for s in self.steps:
            if s.variable == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "steps": [dict(asdict(s), scope=list(s.scope), scope_size=s.scope_size)
                      for s in self.steps],
            "final_ops": self.final_ops,
            "total_ops": self.total_ops,
            "max_scope_size": self.max_scope_size,
        }


def _target_deputies(hf: HeterogeneousFactorization, targets: Iterable[Variable]) -> set[Variable]:
    return {hf.deputy_map[t] for t in targets if t in hf.deputy_map}


def required_eliminations(hf: HeterogeneousFactorization, targets: Iterable[Variable]) -> set[Variable]:
    targets = set(targets)
    return set(hf.variables) - targets - _target_deputies(hf, targets)


def validate_ordering(hf: HeterogeneousFactorization, targets: Iterable[Variable],
                      order: Sequence[Variable]) -> list[str]:
    """Return every violation of the ordering contract; empty means valid."""
    targets = set(targets)
    violations = []
    for t in sorted(targets):
        if t not in hf.variables:
            violations.append(f"target {t.name!r} is not a variable of the HF")
        elif hf.is_deputy(t):
            violations.append(f"target {t.name!r} is a deputy variable")
    seen = set()
    for v in order:
        if v in seen:
            violations.append(f"{v.name!r} appears more than once")
        seen.add(v)
    required = required_eliminations(hf, targets)
    for v in sorted(required - seen):
        violations.append(f"partition incomplete: {v.name!r} is missing")
    for v in order:
        if v not in required and v in hf.variables:
            violations.append(f"{v.name!r} must not be eliminated (target or target deputy)")
        elif v not in hf.variables:
            violations.append(f"{v.name!r} is not a variable of the HF")
    position = {v: i for i, v in enumerate(order)}
    for e, d in hf.deputy_map.items():
        if d in position and e in position and position[d] < position[e]:
            violations.append(f"deputy {d.name!r} precedes its bastard {e.name!r}")
    return violations


def _interaction_graph(hf: HeterogeneousFactorization) -> dict[Variable, set[Variable]]:
    graph: dict[Variable, set[Variable]] = {v: set() for v in hf.variables}
    for f in hf.het_factors + hf.normal_factors:
        for u in f.scope:
            graph[u].update(w for w in f.scope if w != u)
    return graph


def order_auto(hf: HeterogeneousFactorization, targets: Iterable[Variable]) -> EliminationOrdering:
    """Greedy min-fill ordering; a deputy becomes eligible once its bastard is gone.

    Ties are broken by the size of the neighbour clique, then by variable id.
    """
    targets = frozenset(targets)
    graph = _interaction_graph(hf)
    remaining = required_eliminations(hf, targets)
    pending_bastard = {d: e for e, d in hf.deputy_map.items() if e in remaining}
    order = []
    while remaining:
        best, best_key = None, None
        for v in remaining:
            if v in pending_bastard and pending_bastard[v] in remaining:
                continue
            nbrs = list(graph[v])
            fill = sum(
                1 for i, a in enumerate(nbrs) for b in nbrs[i + 1:] if b not in graph[a]
            )
            key = (fill, math.prod(n.frame_size for n in nbrs) * v.frame_size, v.id)
            if best_key is None or key < best_key:
                best, best_key = v, key
        nbrs = graph.pop(best)
        for a in nbrs:
            graph[a].discard(best)
            graph[a].update(n for n in nbrs if n != a)
        remaining.discard(best)
        order.append(best)
    return EliminationOrdering(tuple(order), targets)


def sum_out_step(hf: HeterogeneousFactorization, z: Variable, *,
                 check: bool = True) -> tuple[HeterogeneousFactorization, StepStats]:
    """Eliminate ``z`` from a tidy HF.

    With ``check=False`` the deputy-after-bastard precondition is skipped,
    which is only useful for demonstrating why it exists.
    """
    if check and hf.is_deputy(z):
        raise OrderingError([f"deputy {z.name!r} eliminated before its bastard "
                             f"{hf.bastard_of(z).name!r}"])
    het = [f for f in hf.het_factors if z in f]
    normal = [g for g in hf.normal_factors if z in g]
    k, m = len(het), len(normal)
    ops = 0
    if k == 0 and m == 0:
        warnings.warn(f"{z.name!r} appears in no factor; dropping it", stacklevel=2)
        stats = StepStats(z.name, 0, 0, "none", (z.name,), 0)
        return _drop(hf, z, [], [], None, None), stats

    f = None
    if het:
        f = het[0]
        for other in het[1:]:
            ops += combination_cost(f, other, hf.bastards)
            f = general_combine(f, other, hf.bastards)
    g = None
    if normal:
        g = normal[0]
        for other in normal[1:]:
            g = multiply(g, other)
            ops += g.size
    if f is None:
        combined, kind = g, "normal"
    elif g is None:
        combined, kind = f, "heterogeneous"
    else:
        # plain product: g is bastard-free or z's deputing factor (tidiness)
        combined, kind = multiply(f, g), "heterogeneous"
        ops += combined.size
    ops += combined.size
    h = sum_out(combined, z)
    stats = StepStats(z.name, k, m, kind, tuple(v.name for v in combined.scope), ops)
    new_het = h if kind == "heterogeneous" else None
    new_normal = h if kind == "normal" else None
    return _drop(hf, z, het, normal, new_het, new_normal), stats


def _drop(hf, z, het, normal, new_het, new_normal):
    het_ids = {id(f) for f in het}
    normal_ids = {id(g) for g in normal}
    het_factors = [f for f in hf.het_factors if id(f) not in het_ids]
    normal_factors = [g for g in hf.normal_factors if id(g) not in normal_ids]
    if new_het is not None:
        het_factors.append(new_het)
    if new_normal is not None:
        normal_factors.append(new_normal)
    deputy_map = {e: d for e, d in hf.deputy_map.items() if e != z and d != z}
    return HeterogeneousFactorization(
        hf.variables - {z},
        tuple(d for d in hf.bastards if d.variable != z),
        tuple(het_factors),
        tuple(normal_factors),
        deputy_map,
    )


def finalize(hf: HeterogeneousFactorization, targets: Iterable[Variable]) -> tuple[Factor, int]:
    """Combine what is left once every non-target variable is gone.

    Remaining heterogeneous factors are combined; each remaining deputy is
    then collapsed onto its bastard variable by taking the diagonal, in the
    combined factor and in every normal factor.  A deputing factor collapses
    to its own diagonal, which is all ones unless evidence was folded into
    it.  Returns the factor over the targets and the operation count.
    """
    targets = frozenset(targets)
    allowed = set(targets) | _target_deputies(hf, targets)
    for f in hf.het_factors + hf.normal_factors:
        for v in f.scope:
            if v not in allowed:
                raise OrderingError([f"{v.name!r} was not eliminated before finalizing"])
    ops = 0
    f = None
    for other in hf.het_factors:
        if f is None:
            f = other
        else:
            ops += combination_cost(f, other, hf.bastards)
            f = general_combine(f, other, hf.bastards)
    factors = ([f] if f is not None else []) + list(hf.normal_factors)
    for e, d in hf.deputy_map.items():
        factors = [diagonal(x, e, d) for x in factors]
    result = None
    for x in factors:
        if result is None:
            result = x
        else:
            result = multiply(result, x)
            ops += result.size
    if result is None:
        raise OrderingError(["nothing left to finalize"])
    if set(result.scope) != set(targets):
        missing = sorted(v.name for v in set(targets) - set(result.scope))
        raise OrderingError([f"targets {missing} vanished during elimination"])
    return result, ops


def projection(hf: HeterogeneousFactorization, targets: Iterable[Variable],
               order: Sequence[Variable], *, check: bool = True,
               trace: list | None = None) -> tuple[Factor, EliminationStats]:
    """Sum every variable of ``order`` out of ``hf`` and return the projection onto ``targets``.

    Tidiness is asserted after every step.  ``trace``, if given, receives the
    HF after each step.
    """
    targets = frozenset(targets)
    if check:
        violations = validate_ordering(hf, targets, order)
        if violations:
            raise OrderingError(violations)
    stats = EliminationStats()
    for z in order:
        hf, step = sum_out_step(hf, z, check=check)
        report = is_tidy(hf)
        if not report.ok:
            raise TidinessError(f"after eliminating {z.name!r}: " + "; ".join(report.describe()))
        stats.steps.append(step)
        log.debug("eliminated %s: k=%d m=%d scope=%s", z.name, step.k, step.m, step.scope)
        if trace is not None:
            trace.append(hf)
    result, stats.final_ops = finalize(hf, targets)
    return result, stats


@dataclass
class QueryResult:
    targets: list[str]
    evidence: dict[str, int]
    posterior: Factor
    normalizer: float
    stats: EliminationStats
    ordering: list[str]


def _resolve_targets(variables, targets) -> list[Variable]:
    out = []
    for t in targets:
        v = resolve_variable(variables, t)
        if v not in out:
            out.append(v)
    if not out:
        raise NetworkError("at least one target is required")
    return out


def resolve_ordering(hf: HeterogeneousFactorization, order: Sequence[str | Variable]) -> list[Variable]:
    return [resolve_variable(hf, name) for name in order]


def normalize(marginal: Factor, evidence: Mapping[Variable, int]) -> tuple[Factor, float]:
    z = float(marginal.table.sum())
    if not z > 0:
        shown = ", ".join(f"{v.name}={val}" for v, val in evidence.items())
        raise InconsistentEvidenceError(f"evidence has probability zero: {{{shown}}}")
    return Factor(marginal.scope, marginal.table / z), z


def _run(hf, target_vars, ev, ordering, resolve) -> QueryResult:
    # original variables a user ordering leaves out stay in the projection and
    # are summed out of the final factor, after any evidence has applied
    if ordering is None:
        order = None
        retained = [v for v in ev if v not in target_vars]
    else:
        order = resolve(ordering)
        retained = [v for v in sorted(hf.variables)
                    if v not in target_vars and v not in order and not hf.is_deputy(v)]
    keep = list(target_vars) + retained
    if order is None:
        order = list(order_auto(hf, keep).order)
    marginal, stats = projection(hf, keep, order)
    for v in retained:
        marginal = sum_out(marginal, v)
    posterior, z = normalize(marginal, ev)
    return QueryResult(
        targets=[t.name for t in target_vars],
        evidence={v.name: val for v, val in ev.items()},
        posterior=posterior,
        normalizer=z,
        stats=stats,
        ordering=[v.name for v in order],
    )


def query(net: BayesianNetwork, targets: Sequence[str | Variable],
          evidence: Mapping[str | Variable, int] | None = None,
          ordering: Sequence[str | Variable] | None = None) -> QueryResult:
    """Posterior over ``targets`` given ``evidence``, by heterogeneous elimination.

    ``ordering`` names the variables to eliminate (``e1p`` or ``e1'`` for the
    deputy of ``e1``).  Non-deputy variables left out of it are kept through
    elimination and summed out of the final factor.
    """
    hf = hf_from_network(net)
    target_vars = _resolve_targets(net.variables, targets)
    ev = evidence_by_name(net, evidence or {})
    hf = apply_evidence(hf, ev)
    return _run(hf, target_vars, ev, ordering, lambda o: resolve_ordering(hf, o))


def homogeneous_hf(net: BayesianNetwork) -> HeterogeneousFactorization:
    """All CPTs materialized, no bastard declarations: ordinary factorization."""
    return HeterogeneousFactorization(
        frozenset(net.variables), (), (), tuple(node_cpt(n) for n in net.nodes)
    )


def homogeneous_query(net: BayesianNetwork, targets: Sequence[str | Variable],
                      evidence: Mapping[str | Variable, int] | None = None,
                      ordering: Sequence[str | Variable] | None = None) -> QueryResult:
    """Baseline elimination that ignores causal independence.

    Deputy names in ``ordering`` are dropped since the baseline has no deputies.
    """
    hf = homogeneous_hf(net)
    target_vars = _resolve_targets(net.variables, targets)
    ev = evidence_by_name(net, evidence or {})
    hf = apply_evidence(hf, ev)
    deputized = hf_from_network(net)

    def resolve(o):
        return [v for v in resolve_ordering(deputized, o) if not deputized.is_deputy(v)]

    return _run(hf, target_vars, ev, ordering, resolve)
