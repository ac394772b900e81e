"""Exact flow of scalar autonomous ODEs dq/dt = f(q) by quadrature inversion.

The time to travel from q0 to x is F(x) = int_{q0}^{x} dq / f(q).  While f
keeps the sign of f(q0), F is strictly monotone, so q(t) = F^{-1}(t).  The
solver marches outward from q0 in segments, accumulating F, until either

* the accumulated time passes t (root-find inside the last segment),
* f reaches a zero s with F(s) <= t: the solution settles at s,
* F converges while q runs off to infinity: finite escape time,
* the march reaches the edge of the declared domain: ``DomainExit``.

Segments shrink whenever |f| drops by more than half across one, so zeros
are approached geometrically and never stepped over.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

from scipy import integrate, optimize

from .errors import BlowUp, DomainExit, NonFiniteValue, QuadratureFailure

EQUILIBRIUM_THRESHOLD = 1e-14
MAX_SEGMENTS = 20000
_EPS = 2.220446049250313e-16
_TINY = 1e-300
_DECAY = 0.95


@dataclass(frozen=True)
class ScalarAutonomousODE:
    f: Callable[[float], float]
    domain: tuple[float, float] = (-math.inf, math.inf)

    def contains(self, q: float) -> bool:
        lo, hi = self.domain
        return lo < q < hi


@dataclass(frozen=True)
class FlowOutcome:
    """Result of :func:`solve_scalar_flow`.

    kind is "value" (q(t) returned), "equilibrium" (the solution rests at
    ``value``, either from the start or after reaching a zero of f in finite
    time) or "blow_up" (q escapes to infinity at ``escape_time`` < t).
    """

    kind: str
    value: float | None = None
    escape_time: float | None = None

    def unwrap(self) -> float:
        if self.kind == "blow_up":
            raise BlowUp(self.escape_time)
        return self.value


def is_equilibrium(fq: float, q: float) -> bool:
    return abs(fq) <= EQUILIBRIUM_THRESHOLD * (1.0 + abs(q))


def _quad(func, lo: float, hi: float, epsabs: float) -> float:
    if hi <= lo:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr, info, *msg = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=1e-13,
                                                   limit=200, full_output=1)
    if not math.isfinite(value):
        raise QuadratureFailure(f"non-finite integral on [{lo!r}, {hi!r}]")
    if msg and abserr > max(100.0 * epsabs, 1e-12 * abs(value), 1e-14):
        raise QuadratureFailure(f"quadrature on [{lo!r}, {hi!r}] failed: {msg[0]} "
                                f"(error estimate {abserr:.2e})")
    return value


class _ZeroInside(Exception):
    def __init__(self, q):
        self.q = q


class _Marcher:
    """Helper holding the oriented problem g(q) = sign * f(q) > 0."""

    def __init__(self, ode: ScalarAutonomousODE, q0: float, sign: float, tol: float):
        self.ode = ode
        self.sign = sign
        self.tol = tol
        self.q0 = q0

    def g(self, q: float) -> float:
        val = self.ode.f(q)
        if not math.isfinite(val):
            raise NonFiniteValue(f"f({q!r}) = {val!r}")
        return self.sign * val

    def time_between(self, u: float, w: float) -> float:
        """Travel time from u to w (both on the march, w ahead of u)."""
        lo, hi = (u, w) if u <= w else (w, u)
        return _quad(self._inverse, lo, hi, epsabs=max(1e-3 * self.tol, 1e-16))

    def _inverse(self, q: float) -> float:
        gq = self.g(q)
        if gq <= 0:
            raise _ZeroInside(q)
        return 1.0 / gq

    def ahead(self, u: float, w: float) -> bool:
        return (w - u) * self.sign > 0

    def root_in(self, a: float, b: float, elapsed: float, t: float) -> float:
        """x in [a, b] with elapsed + time(a -> x) = t."""
        def resid(x):
            return elapsed + self.time_between(a, x) - t

        lo, hi = (a, b) if a <= b else (b, a)
        r_lo, r_hi = resid(lo), resid(hi)
        if r_lo == 0.0:
            return lo
        if r_hi == 0.0:
            return hi
        if r_lo * r_hi > 0:
            # quadrature noise at the bracket ends; fall back to the nearer end
            return a if abs(resid(a)) <= abs(resid(b)) else b
        xtol = max(1e-3 * self.tol * min(abs(lo), abs(hi)), _TINY)
        return optimize.brentq(resid, lo, hi, xtol=xtol, rtol=4 * _EPS, maxiter=200)

    def first_zero(self, a: float, b: float) -> float:
        """First point from a toward b where g stops being positive."""
        good, bad = a, b
        for _ in range(2200):
            mid = 0.5 * (good + bad)
            if mid == good or mid == bad:
                break
            if self.g(mid) > 0:
                good = mid
            else:
                bad = mid
        return bad if self.g(bad) == 0.0 else good


def solve_scalar_flow(ode: ScalarAutonomousODE, q0: float, t: float, tol: float = 1e-12) -> FlowOutcome:
    """Flow dq/dt = f(q) from q0 for time t >= 0."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    q0 = float(q0)
    if not ode.contains(q0):
        raise DomainExit(f"q0={q0!r} outside domain {ode.domain}")
    f0 = ode.f(q0)
    if not math.isfinite(f0):
        raise NonFiniteValue(f"f({q0!r}) = {f0!r}")
    if is_equilibrium(f0, q0):
        return FlowOutcome("equilibrium", q0)
    if t == 0:
        return FlowOutcome("value", q0)
    if abs(f0) * t <= 16 * _EPS * max(abs(q0), _TINY):
        # displacement below float resolution; one Euler step is exact to rounding
        return FlowOutcome("value", q0 + f0 * t)

    sign = 1.0 if f0 > 0 else -1.0
    m = _Marcher(ode, q0, sign, tol)
    lo, hi = ode.domain
    edge = hi if sign > 0 else lo

    a, ga = q0, abs(f0)
    elapsed = 0.0
    step = min(abs(f0) * t, 0.1 * (1.0 + abs(q0)))
    prev_contrib = None
    shrinking_tail = 0

    for _ in range(MAX_SEGMENTS):
        resolution = 16 * _EPS * max(abs(a), _TINY)
        if step <= resolution:
            # the march cannot advance: a zero (or the domain edge) is reached
            if math.isfinite(edge) and abs(edge - a) <= 2 * resolution + 1e-12 * abs(edge):
                raise DomainExit(f"solution reaches the domain edge {edge!r} at t={elapsed!r}")
            return FlowOutcome("equilibrium", a)

        b = a + sign * step
        if math.isfinite(edge) and not m.ahead(b, edge):
            b = a + 0.5 * (edge - a)
            step = abs(b - a)
            if b == a:
                raise DomainExit(f"solution reaches the domain edge {edge!r} at t={elapsed!r}")
        if math.isinf(b):
            return FlowOutcome("blow_up", escape_time=elapsed)

        gb = m.g(b)
        gmid = m.g(0.5 * (a + b))
        if gb <= 0 or gmid <= 0:
            return _approach_zero(m, a, m.first_zero(a, b), elapsed, t)
        if gb < 0.5 * ga or gmid < 0.5 * ga:
            step *= 0.5
            continue

        try:
            contrib = m.time_between(a, b)
        except _ZeroInside as hit:
            # a zero touched without a sign change at the sampled points
            return _approach_zero(m, a, m.first_zero(a, hit.q), elapsed, t)
        if elapsed + contrib >= t:
            return FlowOutcome("value", m.root_in(a, b, elapsed, t))
        elapsed += contrib

        # finite escape: contributions shrinking geometrically while |q| grows
        if prev_contrib is not None and contrib < _DECAY * prev_contrib and abs(b) > abs(a):
            shrinking_tail += 1
            ratio = contrib / prev_contrib
            tail = contrib * ratio / (1.0 - ratio)
            if shrinking_tail >= 3 and tail < 1e-3 * tol * max(1.0, elapsed):
                escape = elapsed + tail
                if t >= escape:
                    if math.isfinite(edge):
                        raise DomainExit(f"solution leaves the domain at t={escape!r}")
                    return FlowOutcome("blow_up", escape_time=escape)
        else:
            shrinking_tail = 0
        if abs(b) > 1e300:
            return FlowOutcome("blow_up", escape_time=elapsed)
        prev_contrib = contrib
        a, ga = b, gb
        step *= 2.0
    raise QuadratureFailure(f"march did not terminate within {MAX_SEGMENTS} segments")


def _approach_zero(m: _Marcher, a: float, s: float, elapsed: float, t: float) -> FlowOutcome:
    """Integrate from a toward the zero s of f over dyadic pieces.

    Geometric decay of the piece contributions means F(s) is finite; once
    F(s) <= t is certain (with a factor-2 margin on the tail estimate) the
    solution has settled at s.
    """
    d = s - a
    u = a
    prev = None
    decays = 0
    floor = 1024 * _EPS * max(abs(s), _TINY)
    k = 1
    while True:
        w = s - d * 0.5 ** k
        if abs(s - w) <= floor:
            return FlowOutcome("value", s)
        contrib = m.time_between(u, w)
        if elapsed + contrib >= t:
            return FlowOutcome("value", m.root_in(u, w, elapsed, t))
        elapsed += contrib
        if prev is not None and contrib < _DECAY * prev:
            decays += 1
            ratio = contrib / prev
            tail = contrib * ratio / (1.0 - ratio)
            if decays >= 3 and elapsed + 2.0 * tail < t:
                return FlowOutcome("equilibrium", s)
        else:
            decays = 0
        prev = contrib
        u = w
        k += 1
