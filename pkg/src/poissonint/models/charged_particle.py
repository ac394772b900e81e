"""Charged particle in static fields: Z = (x1, x2, x3, v1, v2, v3).

R(Z) = [[O, I/m], [-I/m, -q Bhat(X)/m^2]] and H = m|V|^2/2 + q phi(X).
The kinetic piece m v_i^2/2 moves x_i on a straight line and turns V by
(q/m) e_i x L with L the integral of B along that segment; each field
supplies L in closed form.  The potential piece freezes X and pushes V with
the frozen electric field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core import PoissonSystem, ScalarField, StructureMatrixField
from ..errors import DomainExit
from ..splitting import SplitSystem, SubFlow
from ..theorems import block_form_n_plus_one, split_is_solvable

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class EMField:
    """Static fields with E = -grad phi.

    ``line_integral(axis, X, d)`` returns the integral of B(X + s e_axis)
    for s in [0, d]; ``B_deps[k]`` lists the position indices B_k depends on;
    ``phi_parts`` optionally splits phi into terms of one coordinate each
    (index, value, derivative) for totally separable potentials.
    """

    B: Callable[[Sequence[float]], Vec3]
    phi: Callable  # accepts (3,) or (3, N)
    grad_phi: Callable[[Sequence[float]], Vec3]
    line_integral: Callable[[int, Sequence[float], float], Vec3]
    B_deps: tuple[frozenset, frozenset, frozenset]
    singular_set: str
    in_domain: Callable[[Sequence[float]], bool]
    phi_parts: tuple | None = None

    def E(self, x) -> np.ndarray:
        return -np.asarray(self.grad_phi(x), dtype=float)


def bhat(b) -> np.ndarray:
    b1, b2, b3 = b
    return np.array([[0.0, -b3, b2], [b3, 0.0, -b1], [-b2, b1, 0.0]])


@dataclass(frozen=True)
class ChargedParticleSystem:
    field: EMField
    m: float = 1.0
    q: float = 1.0
    name: str = "charged-particle"

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("mass must be positive")

    def _check(self, x):
        if not self.field.in_domain(x):
            raise DomainExit(f"position {tuple(x)} is in the singular set ({self.field.singular_set})")

    def structure_matrix(self, z) -> np.ndarray:
        self._check(z[:3])
        m, q = self.m, self.q
        r = np.zeros((6, 6))
        r[:3, 3:] = np.eye(3) / m
        r[3:, :3] = -np.eye(3) / m
        r[3:, 3:] = -q * bhat(self.field.B(z[:3])) / m ** 2
        return r

    def dependency_pattern(self):
        pat = [[None] * 6 for _ in range(6)]
        for i in range(3):
            pat[i][3 + i] = frozenset()
            pat[3 + i][i] = frozenset()
        deps = self.field.B_deps
        # Bhat entries: (0,1) ~ B3, (0,2) ~ B2, (1,2) ~ B1
        for (i, j), k in (((0, 1), 2), ((0, 2), 1), ((1, 2), 0)):
            if deps[k] is not None:
                pat[3 + i][3 + j] = deps[k]
                pat[3 + j][3 + i] = deps[k]
        return pat

    def hamiltonian(self, z):
        z = np.asarray(z, dtype=float)
        return 0.5 * self.m * (z[3] ** 2 + z[4] ** 2 + z[5] ** 2) + self.q * self.field.phi(z[:3])

    def grad_h(self, z) -> np.ndarray:
        g = np.empty(6)
        g[:3] = self.q * np.asarray(self.field.grad_phi(z[:3]))
        g[3:] = self.m * np.asarray(z[3:])
        return g

    def vector_field(self, z) -> np.ndarray:
        """X' = V, V' = (q/m)(E + V x B)."""
        x = (float(z[0]), float(z[1]), float(z[2]))
        self._check(x)
        v1, v2, v3 = float(z[3]), float(z[4]), float(z[5])
        b1, b2, b3 = self.field.B(x)
        g1, g2, g3 = self.field.grad_phi(x)
        k = self.q / self.m
        return np.array([v1, v2, v3,
                         k * (v2 * b3 - v3 * b2 - g1),
                         k * (v3 * b1 - v1 * b3 - g2),
                         k * (v1 * b2 - v2 * b1 - g3)])

    def as_poisson_system(self) -> PoissonSystem:
        structure = StructureMatrixField(6, self.structure_matrix, self.dependency_pattern())
        ham = ScalarField(self.hamiltonian, self.grad_h, vectorized=True)
        return PoissonSystem(6, structure, ham, self.name, self.vector_field)

    # --- subflows --------------------------------------------------------

    def kinetic_flow(self, axis: int) -> Callable[[float, tuple], tuple]:
        """Exact flow of m v_axis^2 / 2 (axis in 0..2) on tuples."""
        qm = self.q / self.m
        field = self.field

        def flow(t: float, z: tuple) -> tuple:
            d = z[3 + axis] * t
            x = list(z[:3])
            lx, ly, lz = field.line_integral(axis, z[:3], d)
            x[axis] += d
            if not field.in_domain(x):
                raise DomainExit(f"straight path leaves the field domain ({field.singular_set})")
            v1, v2, v3 = z[3], z[4], z[5]
            # dV = (q/m) e_axis x L
            if axis == 0:
                v2 -= qm * lz
                v3 += qm * ly
            elif axis == 1:
                v1 += qm * lz
                v3 -= qm * lx
            else:
                v1 -= qm * ly
                v2 += qm * lx
            return (x[0], x[1], x[2], v1, v2, v3)

        return flow

    def potential_flow(self) -> Callable[[float, tuple], tuple]:
        """Exact flow of q phi(X): X frozen, V += (q/m) E(X0) t."""
        qm = self.q / self.m
        field = self.field

        def flow(t: float, z: tuple) -> tuple:
            x = z[:3]
            if not field.in_domain(x):
                raise DomainExit(f"position {x} is in the singular set ({field.singular_set})")
            g1, g2, g3 = field.grad_phi(x)
            s = -qm * t
            return (z[0], z[1], z[2], z[3] + s * g1, z[4] + s * g2, z[5] + s * g3)

        return flow

    def potential_part_flow(self, k: int) -> Callable[[float, tuple], tuple]:
        """Exact flow of q phi_k(x_k) for a totally separable potential."""
        qm = self.q / self.m
        idx, _, dphi = self.field.phi_parts[k]
        field = self.field

        def flow(t: float, z: tuple) -> tuple:
            if not field.in_domain(z[:3]):
                raise DomainExit(f"position {z[:3]} is in the singular set ({field.singular_set})")
            out = list(z)
            out[3 + idx] -= qm * t * dphi(z[idx])
            return tuple(out)

        return flow

    def kinetic_piece(self, axis: int) -> ScalarField:
        m = self.m

        def h(z):
            z = np.asarray(z, dtype=float)
            return 0.5 * m * z[3 + axis] ** 2

        def g(z):
            out = np.zeros(6)
            out[3 + axis] = m * z[3 + axis]
            return out

        return ScalarField(h, g, vectorized=True)

    def potential_piece(self) -> ScalarField:
        q = self.q

        def h(z):
            return q * self.field.phi(np.asarray(z, dtype=float)[:3])

        def g(z):
            out = np.zeros(6)
            out[:3] = q * np.asarray(self.field.grad_phi(z[:3]))
            return out

        return ScalarField(h, g, vectorized=True)

    def potential_part_piece(self, k: int) -> ScalarField:
        q = self.q
        idx, val, dphi = self.field.phi_parts[k]

        def h(z):
            return q * val(np.asarray(z, dtype=float)[idx])

        def g(z):
            out = np.zeros(6)
            out[idx] = q * dphi(z[idx])
            return out

        return ScalarField(h, g, vectorized=True)

    def kinetic_subflows(self) -> list[SubFlow]:
        return [SubFlow(self.kinetic_flow(i), f"H{i + 1}=m*v{i + 1}^2/2", self.kinetic_piece(i))
                for i in range(3)]

    def four_way_split(self, system: PoissonSystem) -> SplitSystem:
        flows = self.kinetic_subflows()
        flows.append(SubFlow(self.potential_flow(), "H4=q*phi(X)", self.potential_piece()))
        return SplitSystem(system, flows, self.name + "/4-way")

    def six_way_split(self, system: PoissonSystem) -> SplitSystem:
        if self.field.phi_parts is None:
            raise ValueError("potential is not totally separable")
        flows = self.kinetic_subflows()
        for k in range(len(self.field.phi_parts)):
            idx = self.field.phi_parts[k][0]
            flows.append(SubFlow(self.potential_part_flow(k), f"H{4 + k}=q*phi_{idx + 1}(x{idx + 1})",
                                 self.potential_part_piece(k)))
        return SplitSystem(system, flows, self.name + "/6-way")


POSITION = (0, 1, 2)
VELOCITY = (3, 4, 5)


def theorem_two_applies(system: PoissonSystem) -> bool:
    """n+1 block pattern with p = X, q = V (kinetics split per axis)."""
    return block_form_n_plus_one(system.structure.dependency_pattern, POSITION, VELOCITY)


# --- Example 1: B = (0, 0, x1^2 + x2^2), phi = 1e-3 / sqrt(x1^2 + x2^2) ---------

_EX1_K = 1e-3


def _ex1_B(x):
    return (0.0, 0.0, x[0] * x[0] + x[1] * x[1])


def _ex1_phi(x):
    return _EX1_K / np.sqrt(x[0] ** 2 + x[1] ** 2)


def _ex1_grad_phi(x):
    r2 = x[0] * x[0] + x[1] * x[1]
    c = -_EX1_K / (r2 * math.sqrt(r2))
    return (c * x[0], c * x[1], 0.0)


def _ex1_line(axis, x, d):
    x1, x2 = x[0], x[1]
    if axis == 0:
        return (0.0, 0.0, d * (x1 * x1 + x1 * d + d * d / 3.0) + x2 * x2 * d)
    if axis == 1:
        return (0.0, 0.0, x1 * x1 * d + d * (x2 * x2 + x2 * d + d * d / 3.0))
    return (0.0, 0.0, (x1 * x1 + x2 * x2) * d)


def _ex1_domain(x):
    return x[0] != 0.0 or x[1] != 0.0


EXAMPLE1_FIELD = EMField(
    B=_ex1_B, phi=_ex1_phi, grad_phi=_ex1_grad_phi, line_integral=_ex1_line,
    B_deps=(None, None, frozenset({0, 1})),
    singular_set="the x3 axis x1 = x2 = 0",
    in_domain=_ex1_domain,
)

EXAMPLE1_Z0 = (0.5, -1.0, 0.0, 0.1, 0.1, 0.0)


def build_example1(m: float = 1.0, q: float = 1.0):
    """Example 1 and its kinetics-then-potential 4-way split."""
    cp = ChargedParticleSystem(EXAMPLE1_FIELD, m, q, "cp-ex1")
    system = cp.as_poisson_system()
    split = cp.four_way_split(system)
    if not split_is_solvable(system.structure.dependency_pattern, [{3}, {4}, {5}, {0, 1, 2}]):
        raise AssertionError("cp-ex1 split is not solvable")
    return system, split


# --- Example 2: cyclic B, logarithmic potential --------------------------------

_EX2_K = (1e-4, 1e-4, 2e-4)


def _ex2_B(x):
    x1, x2, x3 = x[0], x[1], x[2]
    return (-x3 / math.sqrt(x2 * x2 + x3 * x3),
            -x1 / math.sqrt(x1 * x1 + x3 * x3),
            -x2 / math.sqrt(x1 * x1 + x2 * x2))


def _ex2_phi(x):
    return _EX2_K[0] * np.log(x[0]) + _EX2_K[1] * np.log(x[1]) + _EX2_K[2] * np.log(x[2])


def _ex2_grad_phi(x):
    return (_EX2_K[0] / x[0], _EX2_K[1] / x[1], _EX2_K[2] / x[2])


def _sqrt_delta(c, x, d):
    """sqrt(c^2 + (x+d)^2) - sqrt(c^2 + x^2) without cancellation."""
    a = math.sqrt(c * c + (x + d) ** 2)
    b = math.sqrt(c * c + x * x)
    return d * (2.0 * x + d) / (a + b) if a + b > 0 else 0.0


def _asinh_delta(c, x, d):
    """asinh((x+d)/|c|) - asinh(x/|c|)."""
    c = abs(c)
    return math.asinh((x + d) / c) - math.asinh(x / c)


def _ex2_line(axis, x, d):
    x1, x2, x3 = x[0], x[1], x[2]
    if axis == 0:
        return (-x3 * d / math.sqrt(x2 * x2 + x3 * x3),
                -_sqrt_delta(x3, x1, d),
                -x2 * _asinh_delta(x2, x1, d))
    if axis == 1:
        return (-x3 * _asinh_delta(x3, x2, d),
                -x1 * d / math.sqrt(x1 * x1 + x3 * x3),
                -_sqrt_delta(x1, x2, d))
    return (-_sqrt_delta(x2, x3, d),
            -x1 * _asinh_delta(x1, x3, d),
            -x2 * d / math.sqrt(x1 * x1 + x2 * x2))


def _ex2_domain(x):
    return x[0] > 0.0 and x[1] > 0.0 and x[2] > 0.0


EXAMPLE2_FIELD = EMField(
    B=_ex2_B, phi=_ex2_phi, grad_phi=_ex2_grad_phi, line_integral=_ex2_line,
    B_deps=(frozenset({1, 2}), frozenset({0, 2}), frozenset({0, 1})),
    singular_set="outside the open positive octant",
    in_domain=_ex2_domain,
    phi_parts=tuple((i, (lambda s, k=_EX2_K[i]: k * np.log(s)), (lambda s, k=_EX2_K[i]: k / s))
                    for i in range(3)),
)

EXAMPLE2_Z0 = (1.0, 2.0, 1.0, 1.0, 2.0, 2.0)


def build_example2(m: float = 1.0, q: float = 1.0):
    """Example 2 with its 4-way split (kinetics, potential) and 6-way split
    (kinetics, then one logarithmic term per coordinate)."""
    cp = ChargedParticleSystem(EXAMPLE2_FIELD, m, q, "cp-ex2")
    system = cp.as_poisson_system()
    four = cp.four_way_split(system)
    six = cp.six_way_split(system)
    pattern = system.structure.dependency_pattern
    if not split_is_solvable(pattern, [{3}, {4}, {5}, {0, 1, 2}]):
        raise AssertionError("cp-ex2 4-way split is not solvable")
    if not split_is_solvable(pattern, [{3}, {4}, {5}, {0}, {1}, {2}]):
        raise AssertionError("cp-ex2 6-way split is not solvable")
    return system, four, six
