"""Errors, orders, energy drift and timings computed from trajectories."""
from __future__ import annotations

import math
import statistics
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import PoissonSystem, as_state
from .errors import DegenerateFit, GridMismatch, ReferenceGateFailure, TimingConflict, ZeroInitialEnergy
from .lobatto import ImplicitSolveSettings, make_rk_integrator
from .splitting import Integrator, integrate
from .trajectory import TrajectoryRecord

# well below the rounding floor, so reference Newton runs to a few ulps: a
# stop at 1e-13 leaves a per-step bias that accumulates over 10^6 steps
REFERENCE_TOL = 1e-16
GATE_TOL = 1e-10


@dataclass
class ConvergenceReport:
    stepsizes: np.ndarray
    errors: np.ndarray
    slope: float
    intercept: float
    residual: float
    dropped: list = field(default_factory=list)


def relative_energy_error_series(traj: TrajectoryRecord) -> np.ndarray:
    """|H(Z_n) - H(Z_0)| / |H(Z_0)|."""
    e0 = traj.energies[0]
    if e0 == 0.0:
        raise ZeroInitialEnergy("initial energy is zero; relative error undefined")
    return np.abs(traj.energies - e0) / abs(e0)


def global_error(traj: TrajectoryRecord, ref: TrajectoryRecord,
                 groups: Sequence[Sequence[int]]) -> tuple[float, ...]:
    """Per index group, max over the grid of the Euclidean distance to ``ref``."""
    if traj.states.shape != ref.states.shape:
        raise GridMismatch(f"state arrays differ: {traj.states.shape} vs {ref.states.shape}")
    scale = max(1.0, float(np.max(np.abs(ref.times))))
    if np.max(np.abs(traj.times - ref.times)) > 1e-12 * scale:
        raise GridMismatch("time grids differ")
    diff = traj.states - ref.states
    return tuple(float(np.max(np.linalg.norm(diff[:, list(g)], axis=1))) for g in groups)


def estimate_order(points: Sequence[tuple[float, float]], floor: float = 0.0) -> ConvergenceReport:
    """Least-squares slope of log GE against log h.

    Points with GE <= floor (or non-finite) sit at the rounding floor and
    are dropped with a warning; fewer than three usable points raise
    ``DegenerateFit``.
    """
    if len(points) < 3:
        raise DegenerateFit("need at least three (h, GE) points")
    kept, dropped = [], []
    for h, ge in points:
        if not (math.isfinite(ge) and ge > floor and h > 0):
            dropped.append((h, ge))
        else:
            kept.append((h, ge))
    if dropped:
        warnings.warn(f"dropped {len(dropped)} point(s) at the rounding floor: {dropped}", stacklevel=2)
    if len(kept) < 3:
        raise DegenerateFit(f"only {len(kept)} usable points after dropping {dropped}")
    hs = np.array([p[0] for p in kept])
    ges = np.array([p[1] for p in kept])
    x, y = np.log(hs), np.log(ges)
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    if not math.isfinite(slope):
        raise DegenerateFit("fitted slope is not finite")
    return ConvergenceReport(hs, ges, float(slope), float(intercept), resid, dropped)


def drift_slope(series, times, skip_fraction: float = 0.0) -> float:
    """Least-squares linear slope of ``series`` against ``times``.

    ``skip_fraction`` discards that leading share of samples as transient.
    """
    series = np.asarray(series, dtype=float)
    times = np.asarray(times, dtype=float)
    if series.shape != times.shape:
        raise ValueError("series and times differ in length")
    start = int(len(series) * skip_fraction)
    s, t = series[start:], times[start:]
    if len(s) < 100:
        raise ValueError("drift_slope needs at least 100 samples")
    tc = t - t.mean()
    return float(np.dot(tc, s - s.mean()) / np.dot(tc, tc))


def reference_trajectory(sys: PoissonSystem, z0, h: float, n_steps: int, refinement: int = 20,
                         tol: float = REFERENCE_TOL, jacobian_mode: str = "frozen",
                         stride: int = 1) -> TrajectoryRecord:
    """6thloba at h/refinement, subsampled onto the grid of step h (every ``stride``-th point)."""
    if refinement < 1:
        raise ValueError("refinement must be >= 1")
    integ = make_rk_integrator("6thloba", sys, ImplicitSolveSettings(tol=tol, jacobian_mode=jacobian_mode))
    rec = integrate(integ, z0, h / refinement, n_steps * refinement, stride=refinement * stride)
    rec.times = np.arange(len(rec.times), dtype=float) * (h * stride)
    if stride > 1 and n_steps % stride:
        rec.times[-1] = n_steps * h
    rec.stepsize = float(h)
    rec.method_name = f"6thloba/ref{refinement}"
    rec.meta["refinement"] = refinement
    return rec


def gate_discrepancy(a: TrajectoryRecord, b: TrajectoryRecord) -> float:
    """Max-abs state difference scaled by max(1, |state|)."""
    if a.states.shape != b.states.shape:
        raise GridMismatch("reference grids differ")
    scale = max(1.0, float(np.max(np.abs(b.states))))
    return float(np.max(np.abs(a.states - b.states))) / scale


def gated_reference(sys: PoissonSystem, z0, h: float, n_steps: int, refinement: int = 20,
                    gate_tol: float = GATE_TOL, stride: int = 1, **kw) -> tuple[TrajectoryRecord, float]:
    """Reference at 2*refinement, validated against one at ``refinement``."""
    coarse = reference_trajectory(sys, z0, h, n_steps, refinement, stride=stride, **kw)
    fine = reference_trajectory(sys, z0, h, n_steps, 2 * refinement, stride=stride, **kw)
    disc = gate_discrepancy(coarse, fine)
    if not disc <= gate_tol:
        raise ReferenceGateFailure(disc, gate_tol)
    return fine, disc


# --- timing ------------------------------------------------------------------

_parallel_sweeps = 0


class parallel_sweep:
    """Context manager marking a parallel sweep; timing refuses to run inside one."""

    def __enter__(self):
        global _parallel_sweeps
        _parallel_sweeps += 1
        return self

    def __exit__(self, *exc):
        global _parallel_sweeps
        _parallel_sweeps -= 1
        return False


def timing_run(integrators: Sequence[Integrator], z0, h: float, T: float,
               repeats: int = 5, warmup_steps: int | None = None) -> dict[str, float]:
    """Median wall-clock seconds over ``repeats`` runs of each integrator on [0, T].

    One warm-up run (``warmup_steps`` steps, default the full run) precedes the timed ones.
    Repeats are taken round-robin across the integrators, so a slow stretch of the
    machine lands on every method rather than on whichever happened to be running.
    """
    if _parallel_sweeps:
        raise TimingConflict("refusing to time while a parallel sweep is active")
    n_steps = int(round(T / h))
    for integ in integrators:
        z = as_state(z0)
        step = integ.step
        for _ in range(n_steps if warmup_steps is None else warmup_steps):
            z = step(h, z)
    samples: dict[str, list[float]] = {integ.name: [] for integ in integrators}
    for _ in range(repeats):
        for integ in integrators:
            step = integ.step
            z = as_state(z0)
            t0 = time.perf_counter()
            for _ in range(n_steps):
                z = step(h, z)
            samples[integ.name].append(time.perf_counter() - t0)
    return {name: statistics.median(v) for name, v in samples.items()}
