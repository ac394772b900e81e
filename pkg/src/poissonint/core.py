"""Poisson systems dZ/dt = R(Z) grad H(Z) and numerical structure verifiers.

States are 1-D float64 numpy arrays at every public boundary.  Matrix
residuals use the max-abs entry norm, vector distances the Euclidean norm.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFiniteValue

GRADIENT_FD_STEP = 1e-6
JACOBIAN_FD_STEP = 1e-5

# pattern[i][j]: None -> entry identically zero; frozenset -> variables it may depend on
DependencyPattern = Sequence[Sequence[Optional[frozenset]]]


def as_state(z, dim: int | None = None) -> np.ndarray:
    """Validate ``z`` and return it as a fresh float64 vector."""
    arr = np.array(z, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"state must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"state has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"state contains non-finite components: {arr}")
    return arr


def _finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise NonFiniteValue(f"{what} is not finite: {value}")
    return value


@dataclass(frozen=True)
class StructureMatrixField:
    """A state-dependent m x m structure matrix R(Z)."""

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    dependency_pattern: DependencyPattern | None = None

    def __call__(self, z) -> np.ndarray:
        z = as_state(z, self.dim)
        r = np.asarray(self.evaluate(z), dtype=float)
        if r.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"structure matrix has shape {r.shape}, expected "
                                    f"({self.dim}, {self.dim})")
        return _finite(r, "structure matrix")


@dataclass(frozen=True)
class ScalarField:
    """A scalar function with an optional closed-form gradient.

    When ``vectorized`` is set, ``evaluate`` also accepts an (m, N) array of
    N states and returns N values; ``integrate`` relies on this to compute
    energies of a whole trajectory at once.
    """

    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    fd_step: float = GRADIENT_FD_STEP
    vectorized: bool = False

    def __call__(self, z) -> float:
        return float(_finite(self.evaluate(np.asarray(z, dtype=float)), "scalar field"))

    def grad(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.gradient is not None:
            return _finite(np.asarray(self.gradient(z), dtype=float), "gradient")
        return central_gradient(self.evaluate, z, self.fd_step)

    def fd_grad(self, z) -> np.ndarray:
        return central_gradient(self.evaluate, np.asarray(z, dtype=float), self.fd_step)

    def many(self, states: np.ndarray) -> np.ndarray:
        """Evaluate on the rows of an (N, m) array."""
        states = np.asarray(states, dtype=float)
        if self.vectorized:
            return np.asarray(self.evaluate(states.T), dtype=float).reshape(-1)
        return np.array([float(self.evaluate(row)) for row in states])


def central_gradient(func, z: np.ndarray, step: float = GRADIENT_FD_STEP) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    for j in range(z.shape[0]):
        e = np.zeros_like(z)
        e[j] = step * max(1.0, abs(z[j]))
        out[j] = (func(z + e) - func(z - e)) / (2.0 * e[j])
    return _finite(out, "finite-difference gradient")


@dataclass(frozen=True)
class PoissonSystem:
    """dZ/dt = R(Z) grad H(Z).

    ``vector_field`` is an optional closed form of R(Z) grad H(Z); the
    implicit Runge-Kutta baselines call it many times per step.
    """

    dim: int
    structure: StructureMatrixField
    hamiltonian: ScalarField
    name: str = "poisson-system"
    vector_field: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.structure.dim != self.dim:
            raise DimensionMismatch(f"structure dimension {self.structure.dim} != system "
                                    f"dimension {self.dim}")

    def energy(self, z) -> float:
        return self.hamiltonian(z)


def eval_vector_field(sys: PoissonSystem, z) -> np.ndarray:
    z = as_state(z, sys.dim)
    if sys.vector_field is not None:
        return _finite(np.asarray(sys.vector_field(z), dtype=float), "vector field")
    return structure_times_gradient(sys, z)


def structure_times_gradient(sys: PoissonSystem, z) -> np.ndarray:
    """R(z) grad H(z) evaluated literally, never through the closed-form shortcut."""
    z = as_state(z, sys.dim)
    return _finite(sys.structure(z) @ sys.hamiltonian.grad(z), "vector field")


def poisson_bracket(f: ScalarField, g: ScalarField, R: StructureMatrixField, z) -> float:
    z = as_state(z, R.dim)
    return float(f.grad(z) @ R(z) @ g.grad(z))


def check_skew_symmetry(R: StructureMatrixField, z) -> float:
    """max |r_ij + r_ji|."""
    r = R(z)
    return float(np.max(np.abs(r + r.T)))


def structure_derivatives(R: StructureMatrixField, z, fd_step: float = JACOBIAN_FD_STEP) -> np.ndarray:
    """dR[l] = dR/dz_l by central differences, shape (m, m, m)."""
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    z = as_state(z, R.dim)
    m = R.dim
    out = np.empty((m, m, m))
    for l in range(m):
        e = np.zeros(m)
        e[l] = fd_step
        out[l] = (R(z + e) - R(z - e)) / (2.0 * fd_step)
    return out


def check_jacobi_identity(R: StructureMatrixField, z, fd_step: float = JACOBIAN_FD_STEP) -> float:
    """Max over (i, j, k) of the cyclic sum in the Jacobi compatibility condition."""
    r = R(z)
    dr = structure_derivatives(R, z, fd_step)
    cyclic = (np.einsum("lij,lk->ijk", dr, r)
              + np.einsum("ljk,li->ijk", dr, r)
              + np.einsum("lki,lj->ijk", dr, r))
    return float(np.max(np.abs(_finite(cyclic, "Jacobi cyclic sum"))))


def check_dependency_pattern(R: StructureMatrixField, z, fd_step: float = JACOBIAN_FD_STEP) -> float:
    """Largest violation of the registered dependency pattern at ``z``.

    Entries declared identically zero must vanish; derivatives with respect to
    variables outside an entry's declared set must vanish (up to FD noise).
    """
    if R.dependency_pattern is None:
        raise ValueError("structure field has no dependency pattern")
    r = R(z)
    dr = structure_derivatives(R, z, fd_step)
    worst = 0.0
    m = R.dim
    for i in range(m):
        for j in range(m):
            deps = R.dependency_pattern[i][j]
            if deps is None:
                worst = max(worst, abs(r[i, j]), float(np.max(np.abs(dr[:, i, j]))))
                continue
            for l in range(m):
                if l not in deps:
                    worst = max(worst, abs(dr[l, i, j]))
    return worst


def numerical_jacobian(flow_map: Callable[[np.ndarray], np.ndarray], z,
                       fd_step: float = JACOBIAN_FD_STEP) -> np.ndarray:
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    z = as_state(z)
    m = z.shape[0]
    jac = np.empty((m, m))
    for j in range(m):
        e = np.zeros(m)
        e[j] = fd_step
        jac[:, j] = (np.asarray(flow_map(z + e), dtype=float)
                     - np.asarray(flow_map(z - e), dtype=float)) / (2.0 * fd_step)
    return _finite(jac, "numerical Jacobian")


def check_poisson_map(flow_map, R: StructureMatrixField, z, fd_step: float = JACOBIAN_FD_STEP,
                      form: str = "pushforward") -> float:
    """Structure residual of a map at ``z``, max-abs entry norm.

    form="pushforward" (default): J R(z) J^T - R(map(z)), the condition the
    Poisson tensor satisfies under an exact flow.  form="transpose":
    J^T R(map(z)) J - R(z); for a state-dependent R this is the condition
    on R^{-1} rather than R, and it fails even for exact flows unless R is
    constant and canonical.
    """
    z = as_state(z, R.dim)
    jac = numerical_jacobian(flow_map, z, fd_step)
    image = np.asarray(flow_map(z), dtype=float)
    if form == "pushforward":
        res = jac @ R(z) @ jac.T - R(image)
    elif form == "transpose":
        res = jac.T @ R(image) @ jac - R(z)
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(np.max(np.abs(_finite(res, "Poisson-map residual"))))


def constant_structure(matrix) -> StructureMatrixField:
    """A state-independent structure matrix (canonical J^-1 and friends)."""
    mat = np.array(matrix, dtype=float)
    m = mat.shape[0]
    pattern = [[None if mat[i, j] == 0.0 else frozenset() for j in range(m)] for i in range(m)]
    return StructureMatrixField(m, lambda z: mat.copy(), pattern)


def canonical_structure(n: int) -> StructureMatrixField:
    """J^{-1} for canonical coordinates (p, q): [[0, -I], [I, 0]]."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return constant_structure(np.block([[zero, -eye], [eye, zero]]))


def probe_points(seed: int, center, half_width, n: int) -> np.ndarray:
    """Deterministic uniform points in the box center +- half_width, shape (n, m)."""
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    half_width = np.broadcast_to(np.asarray(half_width, dtype=float), center.shape)
    return center + rng.uniform(-1.0, 1.0, size=(n, center.shape[0])) * half_width
