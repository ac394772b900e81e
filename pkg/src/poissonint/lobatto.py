"""Implicit Lobatto IIIA Runge-Kutta methods (orders 4 and 6) with a Newton stage solver."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .core import JACOBIAN_FD_STEP, PoissonSystem, as_state, eval_vector_field
from .errors import NonConvergence, NonFiniteValue
from .splitting import Integrator

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ButcherTableau:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    classical_order: int
    name: str = ""

    def __post_init__(self):
        for key in ("A", "b", "c"):
            arr = np.array(getattr(self, key), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)
        s = len(self.b)
        if self.A.shape != (s, s) or self.c.shape != (s,):
            raise ValueError("inconsistent tableau shapes")

    @property
    def stages(self) -> int:
        return len(self.b)

    def order_condition_residual(self) -> float:
        """max over k <= order of |sum b_i c_i^(k-1) - 1/k|."""
        return max(abs(float(self.b @ self.c ** (k - 1)) - 1.0 / k)
                   for k in range(1, self.classical_order + 1))

    def row_sum_residual(self) -> float:
        return float(np.max(np.abs(self.A.sum(axis=1) - self.c)))


def lobatto_order4() -> ButcherTableau:
    A = [[0.0, 0.0, 0.0],
         [5.0 / 24.0, 1.0 / 3.0, -1.0 / 24.0],
         [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]]
    return ButcherTableau(A, [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [0.0, 0.5, 1.0], 4, "4thloba")


def lobatto_order6() -> ButcherTableau:
    r5 = math.sqrt(5.0)
    A = [[0.0, 0.0, 0.0, 0.0],
         [(11 + r5) / 120, (25 - r5) / 120, (25 - 13 * r5) / 120, (-1 + r5) / 120],
         [(11 - r5) / 120, (25 + 13 * r5) / 120, (25 + r5) / 120, (-1 - r5) / 120],
         [1 / 12, 5 / 12, 5 / 12, 1 / 12]]
    return ButcherTableau(A, [1 / 12, 5 / 12, 5 / 12, 1 / 12],
                          [0.0, (5 - r5) / 10, (5 + r5) / 10, 1.0], 6, "6thloba")


@dataclass(frozen=True)
class ImplicitSolveSettings:
    """Newton settings.

    jacobian_mode "finite-difference" rebuilds the stage Jacobian from
    finite differences of f at every stage on every iteration; "frozen"
    differences f once at the step's start point and reuses one LU
    factorisation (simplified Newton).
    """

    tol: float = 1e-12
    max_iter: int = 50
    jacobian_mode: str = "finite-difference"
    fd_step: float = JACOBIAN_FD_STEP

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.jacobian_mode not in ("finite-difference", "frozen"):
            raise ValueError(f"unknown jacobian_mode {self.jacobian_mode!r}")


def _rhs(sys: PoissonSystem):
    if sys.vector_field is not None:
        vf = sys.vector_field
        return lambda y: np.asarray(vf(y), dtype=float)
    return lambda y: eval_vector_field(sys, y)


def _fd_jacobian(f, y, fy, step):
    m = y.shape[0]
    jac = np.empty((m, m))
    for j in range(m):
        e = step * max(1.0, abs(y[j]))
        yp = y.copy()
        yp[j] += e
        jac[:, j] = (f(yp) - fy) / e
    return jac


def rk_step(tab: ButcherTableau, sys: PoissonSystem, z, h: float,
            settings: ImplicitSolveSettings | None = None, f=None) -> np.ndarray:
    """One implicit RK step z -> z + h sum b_i f(Y_i)."""
    z = as_state(z, sys.dim)
    out = z + rk_increment(tab, sys, z, h, settings, f)
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("RK step produced non-finite state")
    return out


def rk_increment(tab: ButcherTableau, sys: PoissonSystem, z, h: float,
                 settings: ImplicitSolveSettings | None = None, f=None) -> np.ndarray:
    """The update h sum b_i f(Y_i) of one implicit RK step from z.

    Stage values Y_i = z + h sum_j a_ij f(Y_j) are found by Newton's method
    from the trivial predictor Y_i = z.  Rows of A that vanish give explicit
    stages and are excluded from the unknowns.  Convergence: max-norm stage
    residual <= tol, relaxed to a few ulps of the state scale when tol sits
    below the rounding floor of the residual itself.
    """
    settings = settings or ImplicitSolveSettings()
    z = as_state(z, sys.dim)
    if h == 0:
        return np.zeros_like(z)
    f = f or _rhs(sys)
    s, m = tab.stages, sys.dim
    A = tab.A
    implicit = [i for i in range(s) if np.any(A[i] != 0.0)]
    Y = np.tile(z, (s, 1))
    F = np.empty((s, m))
    for i in range(s):
        F[i] = f(Y[i])
    n = len(implicit)
    Ai = A[implicit]          # (n, s)
    eye = np.eye(n * m)
    lu = None
    if settings.jacobian_mode == "frozen":
        J0 = _fd_jacobian(f, z, F[0], settings.fd_step)
        M = eye - h * np.kron(A[np.ix_(implicit, implicit)], J0)
        lu = lu_factor(M)
    resid_norm = math.inf
    for it in range(1, settings.max_iter + 1):
        G = Y[implicit] - z - h * (Ai @ F)
        resid_norm = float(np.max(np.abs(G)))
        if not math.isfinite(resid_norm):
            raise NonFiniteValue("stage residual is not finite")
        floor = 8.0 * _EPS * max(1.0, float(np.max(np.abs(Y))))
        if resid_norm <= max(settings.tol, floor):
            break
        if lu is None:
            blocks = [_fd_jacobian(f, Y[j], F[j], settings.fd_step) for j in implicit]
            M = eye.copy()
            for a, i in enumerate(implicit):
                for b_, j in enumerate(implicit):
                    if A[i, j] != 0.0:
                        M[a * m:(a + 1) * m, b_ * m:(b_ + 1) * m] -= h * A[i, j] * blocks[b_]
            delta = np.linalg.solve(M, -G.reshape(-1))
        else:
            delta = lu_solve(lu, -G.reshape(-1))
        Y[implicit] += delta.reshape(n, m)
        for i in implicit:
            F[i] = f(Y[i])
    else:
        raise NonConvergence(settings.max_iter, resid_norm)
    return h * (tab.b @ F)


RK_METHODS = {"4thloba": lobatto_order4, "6thloba": lobatto_order6}


def make_rk_integrator(name: str, sys: PoissonSystem,
                       settings: ImplicitSolveSettings | None = None) -> Integrator:
    try:
        tab = RK_METHODS[name]()
    except KeyError:
        raise ValueError(f"unknown Runge-Kutta method {name!r}") from None
    settings = settings or ImplicitSolveSettings()
    f = _rhs(sys)

    def step(h, z):
        return rk_step(tab, sys, z, h, settings, f)

    return Integrator(step, tab.classical_order, name, sys, {"jacobian_mode": settings.jacobian_mode})
