"""Heterogeneous factorizations and the combination operators over them.

The induced combination ``f (x)_e g`` convolves the two operands over the
values of ``e`` according to the base operator of ``e``, and multiplies
pointwise over every other shared variable.  The general combination does
the same for every declared bastard variable shared by both operands; with
no shared bastard variable it is plain multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .factor import (
    BaseCombinationOperator,
    Factor,
    FactorError,
    Variable,
    multiply,
    product,
    scalar,
    union_scope,
    validate_base_op,
)


@dataclass(frozen=True)
class BastardDeclaration:
    variable: Variable
    op: BaseCombinationOperator

    def __post_init__(self):
        if self.op.frame_size != self.variable.frame_size:
            raise FactorError(
                f"operator for {self.variable.name!r} has frame size {self.op.frame_size}, "
                f"variable has {self.variable.frame_size}"
            )
        report = validate_base_op(self.op)
        if not report.ok:
            raise FactorError(
                f"operator for {self.variable.name!r} is invalid: " + "; ".join(report.describe())
            )


@dataclass(frozen=True, eq=False)
class HeterogeneousFactorization:
    """Variables, bastard declarations, heterogeneous and normal factors.

    ``deputy_map`` maps a bastard variable to its deputy while the bastard is
    still present.  Every transformation returns a new instance.
    """

    variables: frozenset[Variable]
    bastards: tuple[BastardDeclaration, ...]
    het_factors: tuple[Factor, ...]
    normal_factors: tuple[Factor, ...]
    deputy_map: Mapping[Variable, Variable] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", frozenset(self.variables))
        object.__setattr__(self, "bastards", tuple(self.bastards))
        object.__setattr__(self, "het_factors", tuple(self.het_factors))
        object.__setattr__(self, "normal_factors", tuple(self.normal_factors))
        object.__setattr__(self, "deputy_map", dict(self.deputy_map))
        ids = {v.id for v in self.variables}
        for f in self.het_factors + self.normal_factors:
            for v in f.scope:
                if v.id not in ids:
                    raise FactorError(f"factor variable {v.name!r} is not in the HF")
        bastard_ids = [d.variable.id for d in self.bastards]
        if len(set(bastard_ids)) != len(bastard_ids):
            raise FactorError("bastard variables must be distinct")
        deputies = list(self.deputy_map.values())
        if len({d.id for d in deputies}) != len(deputies):
            raise FactorError("a deputy variable serves two bastard variables")
        for e, d in self.deputy_map.items():
            if e.id not in bastard_ids:
                raise FactorError(f"{e.name!r} has a deputy but is not a bastard variable")
            if d.id in bastard_ids:
                raise FactorError(f"deputy {d.name!r} is declared bastard")

    @property
    def bastard_variables(self) -> frozenset[Variable]:
        return frozenset(d.variable for d in self.bastards)

    def is_bastard(self, var: Variable) -> bool:
        return any(d.variable.id == var.id for d in self.bastards)

    def is_deputy(self, var: Variable) -> bool:
        return any(d.id == var.id for d in self.deputy_map.values())

    def bastard_of(self, deputy: Variable) -> Variable | None:
        for e, d in self.deputy_map.items():
            if d.id == deputy.id:
                return e
        return None

    def replace(self, **changes) -> HeterogeneousFactorization:
        return replace(self, **changes)


def _shared_bastards(f: Factor, g: Factor, decls: Sequence[BastardDeclaration]):
    ops = {d.variable.id: d.op for d in decls}
    return [(v, ops[v.id]) for v in f.scope if v.id in ops and v in g]


def general_combine(f: Factor, g: Factor, decls: Sequence[BastardDeclaration]) -> Factor:
    """Combine ``f`` and ``g``, convolving over every shared declared bastard variable.

    Bastard variables present in only one operand behave like any other
    private variable of that operand.
    """
    scope = union_scope(f, g)
    shared = _shared_bastards(f, g, decls)
    if not shared:
        return multiply(f, g)
    for v, op in shared:
        if op.frame_size != v.frame_size:
            raise FactorError(f"operator frame does not match {v.name!r}")
    label = {v.id: i for i, v in enumerate(scope)}
    f_labels = [label[v.id] for v in f.scope]
    g_labels = [label[v.id] for v in g.scope]
    operands: list = [f.table, f_labels, g.table, g_labels]
    next_label = len(scope)
    for v, op in shared:
        out = label[v.id]
        a, b = next_label, next_label + 1
        next_label += 2
        f_labels[f_labels.index(out)] = a
        g_labels[g_labels.index(out)] = b
        operands += [op.pair_tensor(), [out, a, b]]
    table = np.einsum(*operands, list(range(len(scope))), optimize=False)
    return Factor(scope, table)


def induced_combine(f: Factor, g: Factor, e: Variable, op: BaseCombinationOperator) -> Factor:
    """Combine ``f`` and ``g`` on the single variable ``e`` under ``op``."""
    if e not in f or e not in g:
        raise FactorError(f"{e.name!r} must appear in both operands")
    if op.frame_size != e.frame_size:
        raise FactorError(f"operator frame size {op.frame_size} does not match {e.name!r}")
    return general_combine(f, g, [BastardDeclaration(e, op)])


def combination_cost(f: Factor, g: Factor, decls: Sequence[BastardDeclaration]) -> int:
    """Multiply-accumulate count of :func:`general_combine` on ``f`` and ``g``.

    One operation per summand: each output entry over a shared bastard
    variable ``e`` sums one product per pair of values, so ``e`` contributes
    ``|frame(e)|**2`` rather than ``|frame(e)|``.
    """
    shared = {v.id for v, _ in _shared_bastards(f, g, decls)}
    return math.prod(
        v.frame_size ** 2 if v.id in shared else v.frame_size for v in union_scope(f, g)
    )


def combine_factors(factors: Iterable[Factor], decls: Sequence[BastardDeclaration]) -> Factor:
    result = None
    for f in factors:
        result = f if result is None else general_combine(result, f, decls)
    return scalar(1.0) if result is None else result


def combine_all_het(hf: HeterogeneousFactorization) -> Factor:
    return combine_factors(hf.het_factors, hf.bastards)


def hf_joint(hf: HeterogeneousFactorization) -> Factor:
    return multiply(combine_all_het(hf), product(hf.normal_factors))


@dataclass
class TidyReport:
    violations: list[tuple[Variable, Factor]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def describe(self) -> list[str]:
        return [
            f"bastard {e.name!r} in normal factor over ({', '.join(f.names)})"
            for e, f in self.violations
        ]


def is_tidy(hf: HeterogeneousFactorization) -> TidyReport:
    """Each bastard variable may sit in at most one normal factor, of scope size two."""
    report = TidyReport()
    for decl in hf.bastards:
        e = decl.variable
        holders = [g for g in hf.normal_factors if e in g]
        if len(holders) > 1:
            report.violations.extend((e, g) for g in holders)
        elif holders and len(holders[0].scope) != 2:
            report.violations.append((e, holders[0]))
    return report
