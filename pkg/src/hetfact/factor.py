"""Discrete variables, dense factor tables and base combination operators.

A :class:`Factor` stores a non-negative table over an ordered scope of
variables.  The scope is always kept sorted by variable id, and the table is
a C-ordered numpy array whose axes follow the scope, so the *last* scope
variable varies fastest in the flattened table.  For a factor over ``x`` and
``y`` (``x.id < y.id``, both binary) the flat table reads::

    index  x  y
      0    0  0
      1    0  1
      2    1  0
      3    1  1

Factors and operators are immutable once built.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class FactorError(ValueError):
    """Raised on malformed factors or invalid factor operations."""


@dataclass(frozen=True, order=True)
class Variable:
    """A discrete variable taking values ``0 .. frame_size - 1``."""

    id: int
    name: str = field(compare=False)
    frame_size: int = field(compare=False)

    def __post_init__(self):
        if self.frame_size < 1:
            raise FactorError(f"variable {self.name!r}: frame_size must be positive")

    def __eq__(self, other):
        if not isinstance(other, Variable):
            return NotImplemented
        return (self.id, self.name, self.frame_size) == (other.id, other.name, other.frame_size)

    def __hash__(self):
        return hash((self.id, self.name, self.frame_size))

    def __repr__(self):
        return f"Variable({self.name}#{self.id}, {self.frame_size})"


class Factor:
    """Dense non-negative table over a scope sorted by variable id.

    Use :func:`make_factor` to build one from a flat list in an arbitrary
    scope order.  The constructor is a trusted fast path and expects a
    sorted scope and a table already shaped by the frame sizes.
    """

    __slots__ = ("scope", "table")

    def __init__(self, scope: tuple[Variable, ...], table: np.ndarray):
        table = np.array(table, dtype=float)
        table.setflags(write=False)
        object.__setattr__(self, "scope", tuple(scope))
        object.__setattr__(self, "table", table)

    def __setattr__(self, name, value):
        raise AttributeError("Factor is immutable")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.scope)

    @property
    def size(self) -> int:
        return int(self.table.size)

    @property
    def flat(self) -> list[float]:
        return self.table.ravel().tolist()

    def __contains__(self, var: Variable) -> bool:
        return any(v.id == var.id for v in self.scope)

    def axis(self, var: Variable) -> int:
        for i, v in enumerate(self.scope):
            if v.id == var.id:
                return i
        raise FactorError(f"{var.name!r} is not in scope {self.names}")

    def __eq__(self, other):
        if not isinstance(other, Factor):
            return NotImplemented
        return self.scope == other.scope and np.array_equal(self.table, other.table)

    __hash__ = None

    def allclose(self, other: Factor, tol: float) -> bool:
        return self.scope == other.scope and bool(
            np.all(np.abs(self.table - other.table) <= tol)
        )

    def __repr__(self):
        return f"Factor({', '.join(self.names)}; {self.flat})"


def make_factor(scope: Sequence[Variable], table: Iterable[float]) -> Factor:
    """Build a factor from a flat table indexed in the order of ``scope``.

    The flat table follows row-major order for the scope *as given* (last
    variable fastest); the returned factor is re-ordered by variable id.
    """
    scope = list(scope)
    ids = [v.id for v in scope]
    if len(set(ids)) != len(ids):
        raise FactorError(f"duplicate variable in scope {[v.name for v in scope]}")
    values = np.asarray(list(table) if not isinstance(table, np.ndarray) else table,
                        dtype=float).ravel()
    shape = tuple(v.frame_size for v in scope)
    expected = math.prod(shape)
    if values.size != expected:
        raise FactorError(
            f"table length {values.size} does not match scope size {expected} "
            f"for {[v.name for v in scope]}"
        )
    if not np.all(np.isfinite(values)):
        raise FactorError("factor entries must be finite")
    if np.any(values < 0):
        raise FactorError("factor entries must be non-negative")
    perm = sorted(range(len(scope)), key=lambda i: scope[i].id)
    arr = values.reshape(shape).transpose(perm) if scope else values.reshape(())
    return Factor(tuple(scope[i] for i in perm), arr)


def scalar(value: float = 1.0) -> Factor:
    return make_factor([], [value])


def ones(scope: Sequence[Variable]) -> Factor:
    return make_factor(scope, np.ones(math.prod(v.frame_size for v in scope)))


def indicator(var: Variable, value: int) -> Factor:
    """0/1 factor over ``var`` that is 1 exactly at ``value``."""
    if not 0 <= value < var.frame_size:
        raise FactorError(f"value {value} out of range for {var.name!r}")
    table = np.zeros(var.frame_size)
    table[value] = 1.0
    return make_factor([var], table)


def evaluate(f: Factor, assignment: Mapping[Variable, int]) -> float:
    """Look up ``f`` at an assignment; variables outside the scope are ignored."""
    by_id = {v.id: val for v, val in assignment.items()}
    index = []
    for v in f.scope:
        if v.id not in by_id:
            raise FactorError(f"assignment does not cover {v.name!r}")
        val = by_id[v.id]
        if not 0 <= val < v.frame_size:
            raise FactorError(f"value {val} out of range for {v.name!r}")
        index.append(val)
    return float(f.table[tuple(index)])


def union_scope(*factors: Factor) -> tuple[Variable, ...]:
    by_id: dict[int, Variable] = {}
    for f in factors:
        for v in f.scope:
            prev = by_id.get(v.id)
            if prev is not None and prev.frame_size != v.frame_size:
                raise FactorError(
                    f"frame mismatch on {v.name!r}: {prev.frame_size} vs {v.frame_size}"
                )
            by_id[v.id] = v
    return tuple(sorted(by_id.values()))


def broadcast_table(f: Factor, scope: Sequence[Variable]) -> np.ndarray:
    """View of ``f.table`` with singleton axes for variables of ``scope`` not in ``f``."""
    present = {v.id for v in f.scope}
    return f.table.reshape([v.frame_size if v.id in present else 1 for v in scope])


def multiply(f: Factor, g: Factor) -> Factor:
    scope = union_scope(f, g)
    return Factor(scope, broadcast_table(f, scope) * broadcast_table(g, scope))


def product(factors: Iterable[Factor]) -> Factor:
    result = None
    for f in factors:
        result = f if result is None else multiply(result, f)
    return scalar(1.0) if result is None else result


def sum_out(f: Factor, z: Variable) -> Factor:
    axis = f.axis(z)
    return Factor(f.scope[:axis] + f.scope[axis + 1:], f.table.sum(axis=axis))


def slice_factor(f: Factor, z: Variable, value: int) -> Factor:
    """Restrict ``f`` to ``z = value`` and drop ``z`` from the scope."""
    axis = f.axis(z)
    if not 0 <= value < z.frame_size:
        raise FactorError(f"value {value} out of range for {z.name!r}")
    return Factor(f.scope[:axis] + f.scope[axis + 1:], np.take(f.table, value, axis=axis))


def substitute(f: Factor, mapping: Mapping[Variable, Variable]) -> Factor:
    """Rename scope variables (frames must agree); the result is re-sorted."""
    by_id = {old.id: new for old, new in mapping.items()}
    scope = []
    for v in f.scope:
        new = by_id.get(v.id, v)
        if new.frame_size != v.frame_size:
            raise FactorError(f"cannot substitute {new.name!r} for {v.name!r}: frame mismatch")
        scope.append(new)
    if len({v.id for v in scope}) != len(scope):
        raise FactorError("substitution maps two scope variables to one")
    perm = sorted(range(len(scope)), key=lambda i: scope[i].id)
    return Factor(tuple(scope[i] for i in perm), f.table.transpose(perm))


def diagonal(f: Factor, keep: Variable, drop: Variable) -> Factor:
    """Collapse ``drop`` onto ``keep``: result(keep=v, ...) = f(keep=v, drop=v, ...).

    If only ``drop`` is in scope it is simply renamed to ``keep``.
    """
    if drop not in f:
        return f
    if keep not in f:
        return substitute(f, {drop: keep})
    if keep.frame_size != drop.frame_size:
        raise FactorError(f"frame mismatch between {keep.name!r} and {drop.name!r}")
    i, j = f.axis(keep), f.axis(drop)
    # np.diagonal moves the diagonal axis to the end
    table = np.diagonal(f.table, axis1=i, axis2=j)
    rest = [v for v in f.scope if v.id not in (keep.id, drop.id)]
    return make_factor(rest + [keep], table.ravel())


# -- base combination operators ---------------------------------------------


@dataclass(frozen=True)
class BaseCombinationOperator:
    """Binary operator on a frame ``0 .. frame_size - 1`` given by its Cayley table."""

    frame_size: int
    table: tuple[tuple[int, ...], ...]
    kind: str | None = field(default=None, compare=False)

    def __post_init__(self):
        table = tuple(tuple(int(x) for x in row) for row in self.table)
        if len(table) != self.frame_size or any(len(r) != self.frame_size for r in table):
            raise FactorError(f"operator table must be {self.frame_size}x{self.frame_size}")
        object.__setattr__(self, "table", table)

    def __call__(self, a: int, b: int) -> int:
        return self.table[a][b]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.table, dtype=int)

    def fold(self, values: Iterable[int]) -> int:
        values = list(values)
        acc = values[0]
        for v in values[1:]:
            acc = self.table[acc][v]
        return acc

    def pair_tensor(self) -> np.ndarray:
        """0/1 tensor ``T[out, a, b] = [a * b == out]`` used by the combination kernels."""
        n = self.frame_size
        t = np.zeros((n, n, n))
        for a in range(n):
            for b in range(n):
                t[self.table[a][b], a, b] = 1.0
        return t


@dataclass
class OperatorReport:
    closure: list[tuple[int, int]] = field(default_factory=list)
    commutativity: list[tuple[int, int]] = field(default_factory=list)
    associativity: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.closure or self.commutativity or self.associativity)

    def describe(self) -> list[str]:
        out = [f"closure fails at ({a},{b})" for a, b in self.closure]
        out += [f"commutativity fails at ({a},{b})" for a, b in self.commutativity]
        out += [f"associativity fails at ({a},{b},{c})" for a, b, c in self.associativity]
        return out


def validate_base_op(op: BaseCombinationOperator) -> OperatorReport:
    """Exhaustively check closure, commutativity and associativity."""
    n = op.frame_size
    t = op.table
    report = OperatorReport()
    for a, b in itertools.product(range(n), repeat=2):
        if not 0 <= t[a][b] < n:
            report.closure.append((a, b))
        if a < b and t[a][b] != t[b][a]:
            report.commutativity.append((a, b))
    if report.closure:
        return report
    for a, b, c in itertools.product(range(n), repeat=3):
        if t[t[a][b]][c] != t[a][t[b][c]]:
            report.associativity.append((a, b, c))
    return report


BUILTIN_OPS = ("or", "and", "max", "min", "sat_add", "mod_add")


def builtin_op(kind: str, frame_size: int) -> BaseCombinationOperator:
    if kind not in BUILTIN_OPS:
        raise FactorError(f"unknown operator {kind!r}; expected one of {BUILTIN_OPS}")
    if kind in ("or", "and") and frame_size != 2:
        raise FactorError(f"operator {kind!r} requires frame size 2, got {frame_size}")
    if frame_size < 2:
        raise FactorError(f"operator {kind!r} requires frame size >= 2")
    fn = {
        "or": lambda a, b: a | b,
        "and": lambda a, b: a & b,
        "max": max,
        "min": min,
        "sat_add": lambda a, b: min(a + b, frame_size - 1),
        "mod_add": lambda a, b: (a + b) % frame_size,
    }[kind]
    r = range(frame_size)
    return BaseCombinationOperator(frame_size, tuple(tuple(fn(a, b) for b in r) for a in r), kind)
