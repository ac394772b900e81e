"""Static solvability checks for split Poisson systems.

The checks read the structure matrix's dependency pattern only; they say
whether each subsystem dZ/dt = R(Z) grad H_k can be reduced to scalar
autonomous ODEs and quadratures.  ``check_dependency_pattern`` in
:mod:`poissonint.core` verifies that a registered pattern is truthful.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import DependencyPattern


def _deps(pattern: DependencyPattern, i: int, j: int) -> frozenset | None:
    return pattern[i][j]


def _within(pattern, i, j, allowed: Iterable[int]) -> bool:
    deps = _deps(pattern, i, j)
    return deps is None or deps <= frozenset(allowed)


def _zero(pattern, i, j) -> bool:
    return _deps(pattern, i, j) is None


def block_form_two_way(pattern: DependencyPattern, p: Sequence[int], q: Sequence[int]) -> bool:
    """R = [[O, A], [-A^T, O]] with a_ij a function of p_i and q_j only."""
    if any(not _zero(pattern, a, b) for a in p for b in p):
        return False
    if any(not _zero(pattern, a, b) for a in q for b in q):
        return False
    for i, pi in enumerate(p):
        for j, qj in enumerate(q):
            if not (_within(pattern, pi, qj, (pi, qj)) and _within(pattern, qj, pi, (pi, qj))):
                return False
    return True


def block_form_n_plus_one(pattern: DependencyPattern, p: Sequence[int], q: Sequence[int]) -> bool:
    """R = [[O, A], [-A^T, C]]; a_ij depends on q_j, c_ij on all p and q_j."""
    if any(not _zero(pattern, a, b) for a in p for b in p):
        return False
    for pi in p:
        for qj in q:
            if not (_within(pattern, pi, qj, (qj,)) and _within(pattern, qj, pi, (qj,))):
                return False
    for qi in q:
        for qj in q:
            if qi != qj and not _within(pattern, qi, qj, tuple(p) + (qj,)):
                return False
        if not _zero(pattern, qi, qi):
            return False
    return True


def pairwise_form(pattern: DependencyPattern) -> bool:
    """Every r_ij depends on z_i and z_j only (fully separable Hamiltonians)."""
    m = len(pattern)
    for i in range(m):
        if not _zero(pattern, i, i):
            return False
        for j in range(m):
            if i != j and not _within(pattern, i, j, (i, j)):
                return False
    return True


@dataclass
class SubsystemPlan:
    """How one subsystem reduces: frozen support, then solve order."""

    support: frozenset
    order: list = field(default_factory=list)   # (index, "constant" | "scalar" | "quadrature")
    solvable: bool = True
    reason: str = ""


def subsystem_plan(pattern: DependencyPattern, support: Iterable[int]) -> SubsystemPlan:
    """Reduce dZ/dt = R grad H_k, where H_k depends on ``support`` only.

    The support variables are frozen iff the support block of R vanishes.
    Each remaining z_j moves with rate sum_{l in support} r_jl * dH_k/dz_l,
    a scalar autonomous ODE when the r_jl depend on frozen variables and
    z_j only, or a plain quadrature when they depend on frozen and already
    solved variables but not on z_j.
    """
    support = frozenset(support)
    m = len(pattern)
    plan = SubsystemPlan(support)
    for a in support:
        for b in support:
            if not _zero(pattern, a, b):
                plan.solvable = False
                plan.reason = f"r[{a},{b}] is not identically zero, support is not frozen"
                return plan
    remaining = [j for j in range(m) if j not in support]
    solved: set[int] = set()
    while remaining:
        progress = False
        for j in list(remaining):
            deps = set()
            active = False
            for l in support:
                d = _deps(pattern, j, l)
                if d is not None:
                    active = True
                    deps |= d
            if not active:
                kind = "constant"
            elif deps <= support | {j}:
                kind = "scalar"
            elif deps <= support | solved:
                kind = "quadrature"
            else:
                continue
            plan.order.append((j, kind))
            solved.add(j)
            remaining.remove(j)
            progress = True
        if not progress:
            plan.solvable = False
            plan.reason = f"variables {remaining} are coupled beyond scalar/quadrature form"
            return plan
    return plan


def split_is_solvable(pattern: DependencyPattern, supports: Sequence[Iterable[int]]) -> bool:
    return all(subsystem_plan(pattern, s).solvable for s in supports)
