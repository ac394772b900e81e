"""Composition of exact subflows into Poisson integrators of orders 1, 2 and 4.

Subflows work on plain tuples of floats internally (a step of a 4th-order
scheme calls a dozen of them, and numpy overhead dominates at this size);
the public entry points take and return numpy vectors.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import coefficients
from .core import PoissonSystem, ScalarField, as_state
from .errors import IntegrationAborted, PoissonIntError
from .scalar_flow import ScalarAutonomousODE, solve_scalar_flow
from .theorems import subsystem_plan
from .trajectory import TrajectoryRecord

TupleFlow = Callable[[float, tuple], tuple]


@dataclass(frozen=True)
class SubFlow:
    """Exact flow (t, z) -> z' of one Hamiltonian piece.

    ``flow`` acts on tuples of floats; ``piece`` is the Hamiltonian it flows,
    used by the checks and the conservation tests.
    """

    flow: TupleFlow
    label: str
    piece: ScalarField | None = None

    def __call__(self, t: float, z) -> np.ndarray:
        z = as_state(z)
        if t == 0:
            return z
        return np.array(self.flow(float(t), tuple(z.tolist())))


@dataclass(frozen=True)
class SplitSystem:
    system: PoissonSystem
    subflows: tuple[SubFlow, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "subflows", tuple(self.subflows))
        if not self.subflows:
            raise ValueError("a split needs at least one subflow")

    def reversed(self) -> "SplitSystem":
        return SplitSystem(self.system, self.subflows[::-1], self.name + "-reversed")

    def pieces_sum_residual(self, points) -> float:
        """Largest relative gap between sum of piece Hamiltonians and H."""
        pieces = [s.piece for s in self.subflows]
        if any(p is None for p in pieces):
            raise ValueError("every subflow needs its piece Hamiltonian for this check")
        worst = 0.0
        for z in np.atleast_2d(points):
            full = self.system.hamiltonian(z)
            total = math.fsum(p(z) for p in pieces)
            worst = max(worst, abs(total - full) / max(abs(full), 1e-300))
        return worst


@dataclass(frozen=True)
class CompositionScheme:
    """Pairs (alpha_i, beta_i): one step is Phi*_{beta_1 h}, Phi_{alpha_1 h}, ..., Phi_{alpha_s h}."""

    pairs: tuple[tuple[float, float], ...]
    declared_order: int
    name: str

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((float(a), float(b)) for a, b in self.pairs))

    def consistency_residual(self) -> float:
        return abs(math.fsum(a + b for a, b in self.pairs) - 1.0)

    def palindrome_residual(self) -> float:
        mirrored = [(b, a) for a, b in reversed(self.pairs)]
        return max(max(abs(a - c), abs(b - d)) for (a, b), (c, d) in zip(self.pairs, mirrored))

    def validate(self, tol: float = 1e-14) -> None:
        if self.consistency_residual() > tol:
            raise ValueError(f"{self.name}: coefficients do not sum to 1")
        if self.palindrome_residual() > tol:
            raise ValueError(f"{self.name}: coefficients are not palindromic")


@dataclass(frozen=True)
class Integrator:
    step: Callable[[float, np.ndarray], np.ndarray]
    declared_order: int
    name: str
    system: PoissonSystem | None = None
    options: dict = field(default_factory=dict)


# --- elementary maps -------------------------------------------------------

def _apply(flows: Sequence[TupleFlow], plan: Iterable[tuple[int, float]], h: float, z: tuple) -> tuple:
    for idx, c in plan:
        z = flows[idx](c * h, z)
    return z


def _raw(split: SplitSystem) -> list[TupleFlow]:
    return [s.flow for s in split.subflows]


def first_order_map(split: SplitSystem, h: float, z) -> np.ndarray:
    """Phi_h: subflows in list order, each for time h."""
    z = as_state(z, split.system.dim)
    if h == 0:
        return z
    k = len(split.subflows)
    return np.array(_apply(_raw(split), [(i, 1.0) for i in range(k)], h, tuple(z.tolist())))


def adjoint_map(split: SplitSystem, h: float, z) -> np.ndarray:
    """Phi*_h = (Phi_{-h})^{-1}: subflows in reversed order, each for time h."""
    z = as_state(z, split.system.dim)
    if h == 0:
        return z
    k = len(split.subflows)
    return np.array(_apply(_raw(split), [(i, 1.0) for i in reversed(range(k))], h, tuple(z.tolist())))


def _merge(plan: list[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
    """Fuse neighbouring calls of the same exact flow: phi_a o phi_b = phi_{a+b}."""
    out: list[tuple[int, float]] = []
    for idx, c in plan:
        if out and out[-1][0] == idx:
            out[-1] = (idx, out[-1][1] + c)
        else:
            out.append((idx, c))
    return tuple((i, c) for i, c in out if c != 0.0)


def composition_plan(k: int, sequence: Sequence[tuple[str, float]]) -> tuple[tuple[int, float], ...]:
    """Flatten ("phi" | "adj", coefficient) stages into (subflow index, time factor)."""
    plan: list[tuple[int, float]] = []
    for kind, c in sequence:
        if c == 0.0:
            continue
        order = range(k) if kind == "phi" else reversed(range(k))
        plan.extend((i, c) for i in order)
    return _merge(plan)


def strang_sequence(variant: str = "printed") -> list[tuple[str, float]]:
    if variant == "printed":        # Phi*_{h/2} o Phi_{h/2}: Phi first
        return [("phi", 0.5), ("adj", 0.5)]
    if variant == "alternative":    # Phi_{h/2} o Phi*_{h/2}
        return [("adj", 0.5), ("phi", 0.5)]
    raise ValueError(f"unknown Strang variant {variant!r}")


def scheme_sequence(scheme: CompositionScheme) -> list[tuple[str, float]]:
    seq: list[tuple[str, float]] = []
    for alpha, beta in scheme.pairs:
        seq.append(("adj", beta))
        seq.append(("phi", alpha))
    return seq


def strang_step(split: SplitSystem, h: float, z, variant: str = "printed") -> np.ndarray:
    z = as_state(z, split.system.dim)
    if h == 0:
        return z
    plan = composition_plan(len(split.subflows), strang_sequence(variant))
    return np.array(_apply(_raw(split), plan, h, tuple(z.tolist())))


def symmetric_composition_step(scheme: CompositionScheme, split: SplitSystem, h: float, z) -> np.ndarray:
    z = as_state(z, split.system.dim)
    if h == 0:
        return z
    plan = composition_plan(len(split.subflows), scheme_sequence(scheme))
    return np.array(_apply(_raw(split), plan, h, tuple(z.tolist())))


def builtin_schemes() -> list[CompositionScheme]:
    schemes = [
        CompositionScheme(coefficients.MCLACHLAN_S5_ORDER4, 4, "4thEPI1"),
        CompositionScheme(coefficients.BLANES_MOAN_S6_ORDER4, 4, "4thEPI2"),
    ]
    for s in schemes:
        s.validate()
    return schemes


SPLITTING_METHODS = ("1stEPI", "2ndEPI", "4thEPI1", "4thEPI2")


def _stepper(split: SplitSystem, plan) -> Callable:
    flows = _raw(split)
    dim = split.system.dim

    def step(h, z):
        z = as_state(z, dim)
        if h == 0:
            return z
        return np.array(_apply(flows, plan, float(h), tuple(z.tolist())))

    step.plan = plan
    return step


def make_integrator(name: str, split: SplitSystem, strang_variant: str = "printed",
                    scheme: CompositionScheme | None = None) -> Integrator:
    """Build 1stEPI, 2ndEPI, 4thEPI1, 4thEPI2, or "custom" from ``scheme``."""
    k = len(split.subflows)
    if name == "1stEPI":
        seq, order = [("phi", 1.0)], 1
    elif name == "2ndEPI":
        seq, order = strang_sequence(strang_variant), 2
    elif name in ("4thEPI1", "4thEPI2"):
        scheme = {s.name: s for s in builtin_schemes()}[name]
        seq, order = scheme_sequence(scheme), 4
    elif name == "custom":
        if scheme is None:
            raise ValueError("custom integrator needs a scheme")
        scheme.validate()
        seq, order = scheme_sequence(scheme), scheme.declared_order
    else:
        raise ValueError(f"unknown splitting method {name!r}")
    plan = composition_plan(k, seq)
    return Integrator(_stepper(split, plan), order, name, split.system,
                      {"strang_variant": strang_variant} if name == "2ndEPI" else {})


# --- trajectories ----------------------------------------------------------

def integrate(integ: Integrator, z0, h: float, n_steps: int, stride: int = 1,
              system: PoissonSystem | None = None) -> TrajectoryRecord:
    """Take n_steps steps of size h; keep every ``stride``-th state (and the last)."""
    system = system or integ.system
    if system is None:
        raise ValueError("integrator carries no system; pass one explicitly")
    if not h > 0:
        raise ValueError("h must be positive")
    if n_steps < 0 or int(n_steps) != n_steps:
        raise ValueError("n_steps must be a non-negative integer")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    z = as_state(z0, system.dim)
    keep = [0]
    states = [z]
    step = integ.step
    t0 = time.perf_counter()
    for n in range(1, n_steps + 1):
        try:
            z = step(h, z)
        except (PoissonIntError, ArithmeticError, ValueError) as exc:
            raise IntegrationAborted(n, exc) from exc
        if n % stride == 0 or n == n_steps:
            keep.append(n)
            states.append(z)
    elapsed = time.perf_counter() - t0
    arr = np.vstack(states)
    times = np.array(keep, dtype=float) * h
    energies = system.hamiltonian.many(arr)
    return TrajectoryRecord(times, arr, energies, integ.name, float(h), elapsed,
                            {"n_steps": int(n_steps), "stride": int(stride), "system": system.name})


# --- generic fallback subflow ------------------------------------------------

def frozen_support_subflow(system: PoissonSystem, piece: ScalarField, support: Iterable[int],
                           label: str, domains: dict | None = None, tol: float = 1e-13) -> SubFlow:
    """Exact flow of piece H_k built from the scalar-flow solver.

    H_k depends only on ``support``; when the support block of R vanishes,
    those variables are frozen and every other variable obeys a scalar
    autonomous ODE (or is constant).  Variables needing a plain quadrature
    over already-solved ones are not handled here; the model modules supply
    closed forms for those.  ``domains`` maps a variable index to a callable
    z0 -> (lo, hi) restricting that variable's scalar ODE.
    """
    pattern = system.structure.dependency_pattern
    if pattern is None:
        raise ValueError("system has no dependency pattern")
    plan = subsystem_plan(pattern, support)
    if not plan.solvable:
        raise ValueError(plan.reason)
    if any(kind == "quadrature" for _, kind in plan.order):
        raise ValueError("quadrature-type variables need a closed-form subflow")
    supp = sorted(plan.support)
    domains = domains or {}
    R = system.structure

    def flow(t: float, z: tuple) -> tuple:
        if t == 0:
            return z
        z0 = np.array(z, dtype=float)
        g = piece.grad(z0)
        sign = 1.0 if t > 0 else -1.0
        out = list(z)
        for j, kind in plan.order:
            if kind == "constant":
                continue

            def f(s, j=j):
                w = z0.copy()
                w[j] = s
                row = R(w)[j]
                return sign * math.fsum(row[l] * g[l] for l in supp)

            dom = domains[j](z0) if j in domains else (-math.inf, math.inf)
            out[j] = solve_scalar_flow(ScalarAutonomousODE(f, dom), z[j], abs(t), tol).unwrap()
        return tuple(out)

    return SubFlow(flow, label, piece)
