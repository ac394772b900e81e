"""Guiding-centre motion Z = (x, y, z, u) with K(Z) Zdot = grad H.

H = u^2/2 + mu |B(X)| + phi(X).  With D = a12 b3 - a13 b2 + a23 b1 the
inverse of K is

    R = (1/D) [[0, -b3, b2, a23], [b3, 0, -b1, -a13],
               [-b2, b1, 0, a12], [-a23, a13, -a12, 0]].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import DependencyPattern, PoissonSystem, ScalarField, StructureMatrixField
from ..errors import DegenerateStructure, DegenerateSubflow, NonConvergence, NonMonotone
from ..splitting import SplitSystem, SubFlow
from ..theorems import block_form_two_way, pairwise_form

DEGENERACY_FACTOR = 1e-10
CUBIC_TOL = 1e-13
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GyrocenterSystem:
    """Fields are closed-form callables on X = (x, y, z) (or Z for ``a_entries``).

    ``A`` and ``B`` are kept for the curl check only; the dynamics use
    ``b``, ``a_entries``, ``mod_b`` and ``phi``.
    """

    mu: float
    A: Callable
    B: Callable
    b: Callable            # X -> (b1, b2, b3)
    a_entries: Callable    # Z -> (a12, a13, a23)
    mod_b: Callable        # vectorized |B|
    grad_mod_b: Callable
    phi: Callable          # vectorized
    grad_phi: Callable
    pattern: DependencyPattern | None = None
    closed_vector_field: Callable | None = None
    name: str = "gyrocenter"

    def denominator(self, z) -> float:
        b1, b2, b3 = self.b(z[:3])
        a12, a13, a23 = self.a_entries(z)
        return a12 * b3 - a13 * b2 + a23 * b1

    def structure_matrix(self, z) -> np.ndarray:
        b1, b2, b3 = self.b(z[:3])
        a12, a13, a23 = self.a_entries(z)
        t1, t2, t3 = a12 * b3, a13 * b2, a23 * b1
        d = t1 - t2 + t3
        if abs(d) <= DEGENERACY_FACTOR * (1.0 + abs(t1) + abs(t2) + abs(t3)):
            raise DegenerateStructure(f"K(Z) is singular at {tuple(z)} (D = {d!r})")
        return np.array([[0.0, -b3, b2, a23],
                         [b3, 0.0, -b1, -a13],
                         [-b2, b1, 0.0, a12],
                         [-a23, a13, -a12, 0.0]]) / d

    def k_matrix(self, z) -> np.ndarray:
        b1, b2, b3 = self.b(z[:3])
        a12, a13, a23 = self.a_entries(z)
        return np.array([[0.0, a12, a13, -b1],
                         [-a12, 0.0, a23, -b2],
                         [-a13, -a23, 0.0, -b3],
                         [b1, b2, b3, 0.0]])

    def hamiltonian(self, z):
        z = np.asarray(z, dtype=float)
        return 0.5 * z[3] ** 2 + self.mu * self.mod_b(z[:3]) + self.phi(z[:3])

    def grad_h(self, z) -> np.ndarray:
        g = np.empty(4)
        g[:3] = self.mu * np.asarray(self.grad_mod_b(z[:3])) + np.asarray(self.grad_phi(z[:3]))
        g[3] = z[3]
        return g

    def as_poisson_system(self) -> PoissonSystem:
        structure = StructureMatrixField(4, self.structure_matrix, self.pattern)
        ham = ScalarField(self.hamiltonian, self.grad_h, vectorized=True)
        return PoissonSystem(4, structure, ham, self.name, self.closed_vector_field)


def gyro_structure(sys: GyrocenterSystem, z) -> np.ndarray:
    return sys.structure_matrix(np.asarray(z, dtype=float))


def real_cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _piece(h, g) -> ScalarField:
    return ScalarField(h, g, vectorized=True)


# --- Example 1 ---------------------------------------------------------------

def _ex1_A(x):
    c = x[2] ** 3 / (3.0 * SQRT2)
    return (c, -c, 0.0 * c)


def _ex1_B(x):
    c = x[2] ** 2 / SQRT2
    return (c, c, 0.0 * c)


_EX1_B_UNIT = (1.0 / SQRT2, 1.0 / SQRT2, 0.0)


def _ex1_a(z):
    c = z[2] * z[2] / SQRT2
    return (0.0, -c, c)


def _ex1_H1_flow(t: float, z: tuple) -> tuple:
    x, y, w, u = z
    arg = w ** 3 + 3.0 * SQRT2 * (y - x) * t
    w1 = real_cbrt(arg)
    if w1 == 0.0:
        raise DegenerateStructure("the z coordinate reaches 0 where |B| vanishes")
    return (x, y, w1, u - SQRT2 * (x + y) * t)


def gyro_example1_definition(mu: float = 0.01) -> GyrocenterSystem:
    """b = (1, 1, 0)/sqrt2, |B| = z^2, phi = x^2 + y^2."""
    pattern = [
        [None, None, frozenset({2}), frozenset()],
        [None, None, frozenset({2}), frozenset()],
        [frozenset({2}), frozenset({2}), None, None],
        [frozenset(), frozenset(), None, None],
    ]

    def vf(z):
        x, y, w, u = z
        if w == 0.0:
            raise DegenerateStructure("z = 0")
        return np.array([SQRT2 * mu / w + u / SQRT2, -SQRT2 * mu / w + u / SQRT2,
                         SQRT2 * (y - x) / (w * w), -SQRT2 * (x + y)])

    return GyrocenterSystem(
        mu=mu, A=_ex1_A, B=_ex1_B, b=lambda x: _EX1_B_UNIT, a_entries=_ex1_a,
        mod_b=lambda x: x[2] ** 2, grad_mod_b=lambda x: (0.0, 0.0, 2.0 * x[2]),
        phi=lambda x: x[0] ** 2 + x[1] ** 2, grad_phi=lambda x: (2.0 * x[0], 2.0 * x[1], 0.0),
        pattern=pattern, closed_vector_field=vf, name="gy-ex1")


def build_gyro_example1(mu: float = 0.01):
    """Example 1 with the split H1 = x^2 + y^2, H2 = mu z^2 + u^2/2."""
    sys = gyro_example1_definition(mu)
    pattern = sys.pattern
    system = sys.as_poisson_system()

    def h2_flow(t: float, z: tuple) -> tuple:
        x, y, w, u = z
        if w == 0.0:
            raise DegenerateStructure("z = 0")
        sx = SQRT2 * mu / w
        ux = u / SQRT2
        return (x + (sx + ux) * t, y + (ux - sx) * t, w, u)

    h1 = _piece(lambda z: np.asarray(z)[0] ** 2 + np.asarray(z)[1] ** 2,
                lambda z: np.array([2.0 * z[0], 2.0 * z[1], 0.0, 0.0]))
    h2 = _piece(lambda z: mu * np.asarray(z)[2] ** 2 + 0.5 * np.asarray(z)[3] ** 2,
                lambda z: np.array([0.0, 0.0, 2.0 * mu * z[2], z[3]]))
    split = SplitSystem(system, [SubFlow(_ex1_H1_flow, "H1=x^2+y^2", h1),
                                 SubFlow(h2_flow, "H2=mu*z^2+u^2/2", h2)], "gy-ex1/2-way")
    if not block_form_two_way(pattern, (0, 1), (2, 3)):
        raise AssertionError("gy-ex1 structure is not of two-block form")
    return system, split


# --- Example 2 ---------------------------------------------------------------

def _cubic_closed_form(c1: float, c3: float, y0: float, rhs: float) -> float | None:
    """Increment to the single real root of c3 y^3 + c1 y = c3 y0^3 + c1 y0 + rhs.

    Uses the hyperbolic form of Cardano's formula; returns None when it is
    not applicable or not finite.
    """
    try:
        k = y0 * (c1 + c3 * y0 * y0) + rhs
        if c3 == 0.0:
            return rhs / c1
        if c1 == 0.0:
            return math.copysign(abs(k / c3) ** (1.0 / 3.0), k) - y0
        r = math.sqrt(c1 / (3.0 * c3))
        y = 2.0 * r * math.sinh(math.asinh(k / (2.0 * c3 * r ** 3)) / 3.0)
    except (ArithmeticError, ValueError):
        return None
    d = y - y0
    return d if math.isfinite(d) else None


def solve_monotone_cubic(c1: float, c3: float, y0: float, rhs: float, tol: float = CUBIC_TOL) -> float:
    """Root y of c1*y + c3*y^3 = c1*y0 + c3*y0^3 + rhs, via the increment d = y - y0.

    A closed-form root is polished by Newton on
    d * (c1 + c3 * (3 y0^2 + 3 y0 d + d^2)) = rhs; if that does not settle, a
    Newton iteration with a bisection safeguard inside an expanding bracket takes over.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if c1 * c3 < 0 or (c1 == 0 and c3 == 0):
        raise NonMonotone(f"cubic {c1!r}*y + {c3!r}*y^3 is not monotone")
    if rhs == 0.0:
        return y0
    s = 1.0 if (c1 > 0 or c3 > 0) else -1.0
    c1, c3, rhs = s * c1, s * c3, s * rhs

    d = _cubic_closed_form(c1, c3, y0, rhs)
    if d is not None:
        # polish the closed-form root on the increment equation, which keeps
        # full relative precision in d when |d| << |y0|
        q = 3.0 * y0 * y0
        for _ in range(3):
            y = y0 + d
            slope = c1 + 3.0 * c3 * y * y
            if not slope > 0:
                break
            nd = d - (d * (c1 + c3 * (q + 3.0 * y0 * d + d * d)) - rhs) / slope
            if abs(nd - d) <= tol * max(abs(y0 + nd), abs(nd), 1e-300):
                return y0 + nd
            d = nd

    def g(d):
        return d * (c1 + c3 * (3.0 * y0 * y0 + 3.0 * y0 * d + d * d)) - rhs

    def dg(d):
        y = y0 + d
        return c1 + 3.0 * c3 * y * y

    # bracket: g increasing, g(0) = -rhs
    lo, hi = (0.0, 0.0)
    step = abs(rhs) / max(dg(0.0), 1e-300)
    step = step if step > 0 else 1.0
    if rhs > 0:
        hi = step
        while g(hi) < 0:
            lo, hi = hi, 2.0 * hi
    else:
        lo = -step
        while g(lo) > 0:
            lo, hi = 2.0 * lo, lo
    d = min(max(rhs / max(dg(0.0), 1e-300), lo), hi)
    for it in range(100):
        gd = g(d)
        if gd == 0.0:
            return y0 + d
        if gd < 0:
            lo = d
        else:
            hi = d
        slope = dg(d)
        nd = d - gd / slope if slope > 0 else 0.5 * (lo + hi)
        if not lo <= nd <= hi:
            nd = 0.5 * (lo + hi)
        if abs(nd - d) <= tol * max(abs(y0 + nd), abs(nd), 1e-300):
            return y0 + nd
        d = nd
    raise NonConvergence(100, abs(g(d)), "cubic subflow equation did not converge")


def gyro_example2_definition(mu: float = 0.001, a: float = 1.0, b: float = 1.0) -> GyrocenterSystem:
    """B = (0, 0, a x^2 + b y^2), phi = 2 z^2."""
    if not (a > 0 and b > 0):
        raise ValueError("gy-ex2 needs a > 0 and b > 0")
    xy = frozenset({0, 1})
    pattern = [
        [None, xy, None, None],
        [xy, None, None, None],
        [None, None, None, frozenset()],
        [None, None, frozenset(), None],
    ]

    def vf(z):
        x, y, w, u = z
        d = a * x * x + b * y * y
        if d <= DEGENERACY_FACTOR * (1.0 + d):
            raise DegenerateStructure("a x^2 + b y^2 vanishes")
        return np.array([-2.0 * mu * b * y / d, 2.0 * mu * a * x / d, u, -4.0 * w])

    return GyrocenterSystem(
        mu=mu,
        A=lambda x: (-b * x[1] ** 3 / 3.0, a * x[0] ** 3 / 3.0, 0.0 * x[2]),
        B=lambda x: (0.0 * x[0], 0.0 * x[0], a * x[0] ** 2 + b * x[1] ** 2),
        b=lambda x: (0.0, 0.0, 1.0),
        a_entries=lambda z: (a * z[0] * z[0] + b * z[1] * z[1], 0.0, 0.0),
        mod_b=lambda x: a * x[0] ** 2 + b * x[1] ** 2,
        grad_mod_b=lambda x: (2.0 * a * x[0], 2.0 * b * x[1], 0.0),
        phi=lambda x: 2.0 * x[2] ** 2, grad_phi=lambda x: (0.0, 0.0, 4.0 * x[2]),
        pattern=pattern, closed_vector_field=vf, name="gy-ex2")


def build_gyro_example2(mu: float = 0.001, a: float = 1.0, b: float = 1.0, tol: float = CUBIC_TOL):
    """Example 2 with the split mu a x^2, mu b y^2, 2 z^2, u^2/2."""
    sys = gyro_example2_definition(mu, a, b)
    pattern = sys.pattern
    system = sys.as_poisson_system()

    def h1_flow(t: float, z: tuple) -> tuple:
        x, y, w, u = z
        if x == 0.0:
            raise DegenerateSubflow("H1 subflow undefined at x = 0")
        # (x0/2) y + b/(6 a x0) y^3 = mu t + const
        return (x, solve_monotone_cubic(0.5 * x, b / (6.0 * a * x), y, mu * t, tol), w, u)

    def h2_flow(t: float, z: tuple) -> tuple:
        x, y, w, u = z
        if y == 0.0:
            raise DegenerateSubflow("H2 subflow undefined at y = 0")
        # (y0/2) x + a/(6 b y0) x^3 = -mu t + const
        return (solve_monotone_cubic(0.5 * y, a / (6.0 * b * y), x, -mu * t, tol), y, w, u)

    def h3_flow(t: float, z: tuple) -> tuple:
        return (z[0], z[1], z[2], z[3] - 4.0 * z[2] * t)

    def h4_flow(t: float, z: tuple) -> tuple:
        return (z[0], z[1], z[2] + z[3] * t, z[3])

    def arr(z):
        return np.asarray(z, dtype=float)

    pieces = [
        _piece(lambda z: mu * a * arr(z)[0] ** 2, lambda z: np.array([2 * mu * a * z[0], 0, 0, 0.0])),
        _piece(lambda z: mu * b * arr(z)[1] ** 2, lambda z: np.array([0, 2 * mu * b * z[1], 0, 0.0])),
        _piece(lambda z: 2.0 * arr(z)[2] ** 2, lambda z: np.array([0, 0, 4.0 * z[2], 0.0])),
        _piece(lambda z: 0.5 * arr(z)[3] ** 2, lambda z: np.array([0, 0, 0, 1.0 * z[3]])),
    ]
    flows = [h1_flow, h2_flow, h3_flow, h4_flow]
    labels = ["H1=mu*a*x^2", "H2=mu*b*y^2", "H3=2*z^2", "H4=u^2/2"]
    split = SplitSystem(system, [SubFlow(f, l, p) for f, l, p in zip(flows, labels, pieces)],
                        "gy-ex2/4-way")
    if not pairwise_form(pattern):
        raise AssertionError("gy-ex2 structure is not pairwise")
    return system, split


EXAMPLE1_Z0 = (30.0, 40.0, 60.0, 70.0)
EXAMPLE2_Z0 = (30.0, 20.0, 40.0, 50.0)
