"""Experiment configurations, named presets and the runners behind the CLI."""
from __future__ import annotations

import inspect
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import core
from .diagnostics import (drift_slope, estimate_order, gate_discrepancy, global_error, parallel_sweep,
                          reference_trajectory, relative_energy_error_series, timing_run)
from .errors import ConfigError, ReferenceGateFailure
from .lobatto import RK_METHODS, ImplicitSolveSettings, make_rk_integrator
from .models import MODEL_BUILDERS, EXAMPLE_MODELS, build_model
from .splitting import SPLITTING_METHODS, Integrator, SplitSystem, integrate, make_integrator

PI = math.pi
METHODS = SPLITTING_METHODS + tuple(RK_METHODS)

DEFAULT_Z0 = {
    "cp-ex1": (0.5, -1.0, 0.0, 0.1, 0.1, 0.0),
    "cp-ex2": (1.0, 2.0, 1.0, 1.0, 2.0, 2.0),
    "gy-ex1": (30.0, 40.0, 60.0, 70.0),
    "gy-ex2": (30.0, 20.0, 40.0, 50.0),
    "sanity-oscillator": (1.0, 0.0),
}

# half-widths of the probe boxes around DEFAULT_Z0 used by the structural checks
PROBE_HALF_WIDTH = {
    "cp-ex1": (0.2, 0.2, 0.2, 0.05, 0.05, 0.05),
    "cp-ex2": (0.3, 0.5, 0.3, 0.5, 0.5, 0.5),
    "gy-ex1": (5.0, 5.0, 5.0, 5.0),
    "gy-ex2": (5.0, 5.0, 5.0, 5.0),
    "sanity-oscillator": (0.5, 0.5),
}

VERIFY_STEP = {"cp-ex1": PI / 40, "cp-ex2": PI / 40, "gy-ex1": 1 / 16, "gy-ex2": 0.05,
               "sanity-oscillator": 0.1}

GROUPS = {6: ((0, 1, 2), (3, 4, 5)), 4: ((0, 1, 2), (3,)), 2: ((0,), (1,))}

COMMANDS = ("simulate", "convergence", "energy-drift", "bench", "verify")


@dataclass
class ExperimentConfig:
    command: str
    system: str
    methods: list = field(default_factory=lambda: ["2ndEPI"])
    z0: list | None = None
    h: float | None = None
    h_ladder: list | None = None
    T: float | None = None
    n_steps: int | None = None
    params: dict = field(default_factory=dict)
    split: str | None = None
    strang_variant: str = "printed"
    seed: int = 0
    out: str | None = None
    stride: int | None = None
    refinement: int = 20
    gate_tol: float = 1e-10
    rk_tol: float = 1e-12
    jacobian_mode: str = "frozen"
    skip_fraction: float = 0.1
    repeats: int = 5
    n_points: int = 20
    synthetic: bool = False
    corrupt_structure: bool = False
    full_T: float | None = None

    # --- derived ---------------------------------------------------------
    def model_params(self) -> dict:
        p = dict(self.params)
        if self.system == "cp-ex2" and self.split:
            p["split"] = self.split
        return p

    def initial_state(self) -> np.ndarray:
        return np.array(self.z0 if self.z0 is not None else DEFAULT_Z0[self.system], dtype=float)

    def steps_for(self, h: float) -> int:
        if self.n_steps is not None:
            return int(self.n_steps)
        n = self.T / h
        k = round(n)
        if abs(n - k) > 1e-9 * max(1.0, n):
            raise ConfigError(f"T={self.T!r} is not a whole number of steps of h={h!r}")
        return int(k)


def _num(value, what):
    if isinstance(value, str):
        try:
            value = _eval_number(value)
        except ValueError as exc:
            raise ConfigError(f"{what}: {exc}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{what} must be finite")
    return float(value)


def _eval_number(text: str) -> float:
    """Numbers may be written as 'pi/40' or '1000*pi' in config files."""
    import ast
    import operator

    ops = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg}

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    return float(ev(ast.parse(text, mode="eval").body))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Normalise numbers and reject inconsistent configurations with ConfigError."""
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.synthetic:
        if cfg.command != "convergence":
            raise ConfigError("synthetic mode exists for convergence only")
    elif cfg.system not in MODEL_BUILDERS:
        raise ConfigError(f"unknown system {cfg.system!r}; choose from {sorted(MODEL_BUILDERS)}")
    if not cfg.methods or not isinstance(cfg.methods, (list, tuple)):
        raise ConfigError("methods must be a non-empty list")
    for m in cfg.methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {list(METHODS)}")
    if cfg.command != "verify":
        if (cfg.h is None) == (cfg.h_ladder is None):
            raise ConfigError("give exactly one of h and h_ladder")
        if cfg.command == "convergence" and cfg.h_ladder is None:
            raise ConfigError("convergence needs h_ladder")
        if cfg.command != "convergence" and cfg.h is None:
            raise ConfigError(f"{cfg.command} needs h")
        if (cfg.T is None) == (cfg.n_steps is None):
            raise ConfigError("give exactly one of T and n_steps")
    if cfg.h is not None:
        cfg.h = _num(cfg.h, "h")
        if cfg.h <= 0:
            raise ConfigError("h must be positive")
    if cfg.h_ladder is not None:
        cfg.h_ladder = sorted((_num(x, "h_ladder entry") for x in cfg.h_ladder), reverse=True)
        if len(cfg.h_ladder) < 3:
            raise ConfigError("h_ladder needs at least 3 rungs")
        if min(cfg.h_ladder) <= 0:
            raise ConfigError("h_ladder entries must be positive")
        h0 = cfg.h_ladder[0]
        for h in cfg.h_ladder:
            k = h0 / h
            if abs(k - round(k)) > 1e-9 * k:
                raise ConfigError(f"ladder rung {h!r} does not divide the coarsest rung {h0!r}")
    if cfg.T is not None:
        cfg.T = _num(cfg.T, "T")
        if cfg.T <= 0:
            raise ConfigError("T must be positive")
    if cfg.n_steps is not None:
        if isinstance(cfg.n_steps, bool) or not isinstance(cfg.n_steps, int) or cfg.n_steps < 0:
            raise ConfigError("n_steps must be a non-negative integer")
        if cfg.command == "convergence":
            raise ConfigError("convergence needs T, not n_steps")
    if cfg.command == "convergence" and not cfg.synthetic:
        for h in cfg.h_ladder:
            cfg.steps_for(h)
    elif cfg.h is not None:
        cfg.steps_for(cfg.h)
    if cfg.synthetic:
        return cfg
    builder = MODEL_BUILDERS[cfg.system]
    accepted = set(inspect.signature(builder).parameters)
    for key in cfg.model_params():
        if key not in accepted:
            raise ConfigError(f"system {cfg.system} takes no parameter {key!r} (accepts {sorted(accepted)})")
    for key, value in cfg.params.items():
        cfg.params[key] = _num(value, f"params.{key}")
    if cfg.split is not None and cfg.system != "cp-ex2":
        raise ConfigError("split selection exists for cp-ex2 only")
    if cfg.z0 is not None:
        try:
            cfg.z0 = [_num(v, "z0 entry") for v in cfg.z0]
        except TypeError:
            raise ConfigError("z0 must be a list of numbers") from None
    dim = len(DEFAULT_Z0[cfg.system])
    if len(cfg.initial_state()) != dim:
        raise ConfigError(f"z0 has length {len(cfg.initial_state())}, {cfg.system} has dimension {dim}")
    if cfg.strang_variant not in ("printed", "alternative"):
        raise ConfigError("strang_variant must be 'printed' or 'alternative'")
    if cfg.jacobian_mode not in ("finite-difference", "frozen"):
        raise ConfigError("jacobian_mode must be 'finite-difference' or 'frozen'")
    if cfg.stride is not None and (not isinstance(cfg.stride, int) or cfg.stride < 1):
        raise ConfigError("stride must be a positive integer")
    if not isinstance(cfg.refinement, int) or cfg.refinement < 1:
        raise ConfigError("refinement must be a positive integer")
    if not 0 <= cfg.skip_fraction < 1:
        raise ConfigError("skip_fraction must lie in [0, 1)")
    if not isinstance(cfg.n_points, int) or cfg.n_points < 1:
        raise ConfigError("n_points must be a positive integer")
    try:
        build_model(cfg.system, **cfg.model_params())
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def config_from_dict(data: dict, command: str | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    if command is not None:
        data.setdefault("command", command)
        if data["command"] != command:
            raise ConfigError(f"config is for {data['command']!r}, not {command!r}")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("command", "system"):
        if key not in data:
            raise ConfigError(f"config needs {key!r}")
    return validate(ExperimentConfig(**data))


def load_config(path: str, command: str | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return config_from_dict(data, command)


def config_metadata(cfg: ExperimentConfig) -> dict:
    """Config fields worth recording in CSV headers (sorted, no output path)."""
    d = asdict(cfg)
    d.pop("out", None)
    d.pop("command", None)
    return {k: json.dumps(d[k], sort_keys=True) for k in sorted(d)}


# --- presets -----------------------------------------------------------------

ALL_FIVE = ["2ndEPI", "4thEPI1", "4thEPI2", "4thloba", "6thloba"]
SPLIT_THREE = ["2ndEPI", "4thEPI1", "4thEPI2"]
ORBIT_FOUR = ["2ndEPI", "4thloba", "4thEPI2", "6thloba"]

PRESETS: dict[str, dict] = {
    "fig1": dict(command="convergence", system="cp-ex1", methods=SPLIT_THREE,
                 h_ladder=[PI / 40, PI / 80, PI / 160, PI / 320], T=1000 * PI, refinement=5),
    "fig2": dict(command="simulate", system="cp-ex1", methods=ORBIT_FOUR, h=PI / 10, T=1000 * PI),
    "fig3": dict(command="energy-drift", system="cp-ex1", methods=ALL_FIVE, h=PI / 40,
                 T=1e4 * PI, full_T=1e6 * PI),
    "fig4": dict(command="convergence", system="cp-ex2", methods=SPLIT_THREE,
                 h_ladder=[PI / 40, PI / 80, PI / 160, PI / 320], T=100 * PI, refinement=10),
    "fig5": dict(command="energy-drift", system="cp-ex2", methods=ALL_FIVE, h=PI / 10,
                 T=1e4 * PI, full_T=1e5 * PI),
    "fig6": dict(command="convergence", system="gy-ex1", methods=SPLIT_THREE,
                 h_ladder=[1 / 16, 1 / 32, 1 / 64, 1 / 128], T=100.0, refinement=20),
    "fig7": dict(command="simulate", system="gy-ex1", methods=ORBIT_FOUR, h=0.25, T=20000.0),
    "fig8": dict(command="energy-drift", system="gy-ex1", methods=ALL_FIVE, h=0.125,
                 T=1e4, full_T=60000.0),
    "fig9": dict(command="convergence", system="gy-ex2", methods=SPLIT_THREE,
                 h_ladder=[0.05, 0.025, 0.0125, 0.00625], T=20.0, refinement=20),
    "fig10": dict(command="energy-drift", system="gy-ex2", methods=ALL_FIVE, h=0.1,
                  T=1e4, full_T=50000.0),
    "table1": dict(command="bench", system="cp-ex2", methods=ALL_FIVE, h=PI / 10, T=1000 * PI),
    "table2": dict(command="bench", system="gy-ex2", methods=ALL_FIVE, h=0.1, T=200.0),
}


def preset_config(name: str, full: bool = False, **overrides) -> ExperimentConfig:
    try:
        data = dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    data["methods"] = list(data["methods"])
    if full and data.get("full_T") is not None:
        data["T"] = data["full_T"]
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)


# --- jobs (picklable, for worker pools) ----------------------------------------

@dataclass(frozen=True)
class TrajectoryJob:
    system: str
    params: tuple
    method: str
    z0: tuple
    h: float
    n_steps: int
    stride: int = 1
    strang_variant: str = "printed"
    rk_tol: float = 1e-12
    jacobian_mode: str = "frozen"
    refinement: int = 0          # > 0: a 6thloba reference on the h grid

    def run(self):
        system, split = build_model(self.system, **dict(self.params))
        if self.refinement:
            return reference_trajectory(system, self.z0, self.h, self.n_steps, self.refinement,
                                        jacobian_mode=self.jacobian_mode, stride=self.stride)
        integ = build_integrator(self.method, system, split, self.strang_variant, self.rk_tol,
                                 self.jacobian_mode)
        return integrate(integ, self.z0, self.h, self.n_steps, stride=self.stride)


def _run_job(job: TrajectoryJob):
    return job.run()


def build_integrator(method: str, system, split: SplitSystem, strang_variant: str = "printed",
                     rk_tol: float = 1e-12, jacobian_mode: str = "frozen") -> Integrator:
    if method in RK_METHODS:
        return make_rk_integrator(method, system, ImplicitSolveSettings(tol=rk_tol, jacobian_mode=jacobian_mode))
    return make_integrator(method, split, strang_variant=strang_variant)


def run_jobs(jobs: Sequence[TrajectoryJob], threads: int = 1) -> list:
    if threads <= 1 or len(jobs) <= 1:
        return [job.run() for job in jobs]
    with parallel_sweep(), ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_job, jobs))


def _job(cfg: ExperimentConfig, method: str, h: float, n_steps: int, stride: int = 1,
         refinement: int = 0) -> TrajectoryJob:
    return TrajectoryJob(cfg.system, tuple(sorted(cfg.model_params().items())), method,
                         tuple(cfg.initial_state().tolist()), h, n_steps, stride, cfg.strang_variant,
                         cfg.rk_tol, cfg.jacobian_mode, refinement)


def default_stride(n_steps: int, target: int = 5000) -> int:
    return max(1, n_steps // target)


# --- runners -----------------------------------------------------------------

def run_simulate(cfg: ExperimentConfig, threads: int = 1) -> list:
    n = cfg.steps_for(cfg.h)
    stride = cfg.stride or 1
    return run_jobs([_job(cfg, m, cfg.h, n, stride) for m in cfg.methods], threads)


def trajectory_rows(traj) -> list:
    rel = relative_energy_error_series(traj) if traj.energies[0] != 0 else np.full(len(traj), math.nan)
    steps = np.rint(traj.times / traj.stepsize).astype(int)
    return [[int(steps[i]), float(traj.times[i]), *map(float, traj.states[i]), float(traj.energies[i]),
             float(rel[i])] for i in range(len(traj))]


@dataclass
class ConvergenceResult:
    rows: list                 # (method, h, GE_X, GE_VU)
    slopes: dict               # method -> (slope_X, slope_VU)
    gate_discrepancy: float | None
    reference_energy_drift: float | None


def synthetic_convergence(cfg: ExperimentConfig) -> ConvergenceResult:
    """Built-in self-test: GE = 0.3 h^2 exactly."""
    rows, slopes = [], {}
    for m in cfg.methods:
        pts = [(h, 0.3 * h * h) for h in cfg.h_ladder]
        rows.extend([m, h, ge, ge] for h, ge in pts)
        s = estimate_order(pts).slope
        slopes[m] = (s, s)
    return ConvergenceResult(rows, slopes, None, None)


def run_convergence(cfg: ExperimentConfig, threads: int = 1) -> ConvergenceResult:
    if cfg.synthetic:
        return synthetic_convergence(cfg)
    ladder = cfg.h_ladder
    h0 = ladder[0]
    n0 = cfg.steps_for(h0)
    jobs = [_job(cfg, "6thloba", h0, n0, refinement=cfg.refinement),
            _job(cfg, "6thloba", h0, n0, refinement=2 * cfg.refinement)]
    for m in cfg.methods:
        for h in ladder:
            k = int(round(h0 / h))
            jobs.append(_job(cfg, m, h, n0 * k, stride=k))
    results = run_jobs(jobs, threads)
    coarse, ref = results[0], results[1]
    disc = gate_discrepancy(coarse, ref)
    if not disc <= cfg.gate_tol:
        raise ReferenceGateFailure(disc, cfg.gate_tol)
    groups = GROUPS[ref.states.shape[1]]
    rows, slopes = [], {}
    it = iter(results[2:])
    for m in cfg.methods:
        pts = []
        for h in ladder:
            traj = next(it)
            ge = global_error(traj, ref, groups)
            pts.append((h, ge))
            rows.append([m, h, ge[0], ge[1]])
        slopes[m] = tuple(estimate_order([(h, ge[g]) for h, ge in pts]).slope for g in range(2))
    drift = float(np.max(relative_energy_error_series(ref)))
    return ConvergenceResult(rows, slopes, disc, drift)


@dataclass
class DriftResult:
    series: dict               # method -> (times, rel errors)
    slopes: dict               # method -> drift slope
    maxima: dict               # method -> max rel error


def run_energy_drift(cfg: ExperimentConfig, threads: int = 1) -> DriftResult:
    n = cfg.steps_for(cfg.h)
    stride = cfg.stride or default_stride(n)
    trajs = run_jobs([_job(cfg, m, cfg.h, n, stride) for m in cfg.methods], threads)
    series, slopes, maxima = {}, {}, {}
    for m, tr in zip(cfg.methods, trajs):
        rel = relative_energy_error_series(tr)
        series[m] = (tr.times, rel)
        maxima[m] = float(np.max(rel))
        slopes[m] = drift_slope(rel, tr.times, cfg.skip_fraction) if len(rel) >= 100 else math.nan
    return DriftResult(series, slopes, maxima)


def run_bench(cfg: ExperimentConfig) -> dict:
    system, split = build_model(cfg.system, **cfg.model_params())
    integs = [build_integrator(m, system, split, cfg.strang_variant, cfg.rk_tol, cfg.jacobian_mode)
              for m in cfg.methods]
    n = cfg.steps_for(cfg.h)
    return timing_run(integs, cfg.initial_state(), cfg.h, n * cfg.h, repeats=cfg.repeats)


# --- structural verification ---------------------------------------------------

@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    status: str        # PASS | FAIL | FAIL-expected | INFO

    @property
    def failed(self) -> bool:
        return self.status == "FAIL"


def _status(value, tol):
    return "PASS" if value <= tol else "FAIL"


def corrupted(system: core.PoissonSystem, center, width) -> core.PoissonSystem:
    """Negative control: f(z_0) R(z), still skew but not Jacobi.

    A non-constant multiple of a nondegenerate structure of rank >= 4 never
    satisfies Jacobi; f varies by O(1) across the probe box.
    """
    base = system.structure
    c0, w0 = float(center[0]), float(width[0])

    def ev(z):
        return (1.0 + 0.5 * math.tanh(2.0 * (z[0] - c0) / w0)) * base.evaluate(z)

    return replace(system, structure=core.StructureMatrixField(system.dim, ev, None), vector_field=None)


def run_verify(cfg: ExperimentConfig) -> list[CheckResult]:
    system, split = build_model(cfg.system, **cfg.model_params())
    z0 = cfg.initial_state()
    if cfg.corrupt_structure:
        system = corrupted(system, z0, PROBE_HALF_WIDTH[cfg.system])
        split = SplitSystem(system, split.subflows, split.name)
    pts = core.probe_points(cfg.seed, z0, PROBE_HALF_WIDTH[cfg.system], cfg.n_points)
    R = system.structure
    h = cfg.h or VERIFY_STEP[cfg.system]
    out: list[CheckResult] = []

    def worst(fn):
        return max(fn(p) for p in pts)

    out.append(CheckResult("skew-symmetry", worst(lambda p: core.check_skew_symmetry(R, p)), 1e-13, ""))
    out.append(CheckResult("jacobi-identity", worst(lambda p: core.check_jacobi_identity(R, p)), 1e-6, ""))
    if R.dependency_pattern is not None:
        out.append(CheckResult("dependency-pattern", worst(lambda p: core.check_dependency_pattern(R, p)),
                               1e-6, ""))
    if all(s.piece is not None for s in split.subflows):
        out.append(CheckResult("pieces-sum-to-H", split.pieces_sum_residual(pts), 1e-10, ""))
    if system.vector_field is not None:
        out.append(CheckResult("closed-form-vector-field", worst(
            lambda p: float(np.max(np.abs(core.eval_vector_field(system, p)
                                          - core.structure_times_gradient(system, p))))
            / max(1.0, float(np.max(np.abs(core.structure_times_gradient(system, p)))))), 1e-8, ""))
    out.extend(_model_checks(cfg, pts))
    for sub in split.subflows:
        out.append(CheckResult(f"poisson-map[{sub.label}]",
                               worst(lambda p: core.check_poisson_map(lambda w: sub(h, w), R, p)), 1e-6, ""))
    splitting_worst = 0.0
    for m in SPLITTING_METHODS:
        integ = make_integrator(m, split, cfg.strang_variant)
        v = worst(lambda p: core.check_poisson_map(lambda w: integ.step(h, w), R, p))
        splitting_worst = max(splitting_worst, v)
        out.append(CheckResult(f"poisson-map[{m}]", v, 1e-5, ""))
    for c in out:
        if not c.status:
            c.status = _status(c.value, c.tolerance)
    rk = make_rk_integrator("4thloba", system)
    v = worst(lambda p: core.check_poisson_map(lambda w: rk.step(h, w), R, p))
    # the baseline is not a Poisson map; this line is informational either way
    status = "FAIL-expected" if v > 10 * splitting_worst else "INFO"
    out.append(CheckResult("poisson-map[4thloba]", v, 1e-5, status))
    return out


def _model_checks(cfg: ExperimentConfig, pts) -> list[CheckResult]:
    from .models import charged_particle as cp, gyrocenter as gy

    out = []
    if cfg.system.startswith("cp-"):
        field_ = cp.EXAMPLE1_FIELD if cfg.system == "cp-ex1" else cp.EXAMPLE2_FIELD

        def e_err(p):
            x = p[:3]
            fd = -core.central_gradient(field_.phi, x)
            e = field_.E(x)
            return float(np.max(np.abs(e - fd))) / max(float(np.max(np.abs(e))), 1e-300)

        out.append(CheckResult("E=-grad(phi)", max(e_err(p) for p in pts), 1e-5, ""))
    elif cfg.system.startswith("gy-"):
        gsys = gyro_definition(cfg.system, cfg.params)
        out.append(CheckResult("R*K=I", max(float(np.max(np.abs(gsys.structure_matrix(p) @ gsys.k_matrix(p)
                                                                  - np.eye(4)))) for p in pts), 1e-10, ""))
        out.append(CheckResult("B=curl(A)", max(curl_residual(gsys, p) for p in pts), 1e-6, ""))
        if cfg.system == "gy-ex1":
            out.append(CheckResult("D=z^2", max(abs(gsys.denominator(p) - p[2] ** 2) / p[2] ** 2 for p in pts),
                                   1e-10, ""))
    return out


def gyro_definition(name: str, params: dict):
    """The GyrocenterSystem behind a registered gyrocenter model."""
    from .models import gyrocenter as gy

    make = {"gy-ex1": gy.gyro_example1_definition, "gy-ex2": gy.gyro_example2_definition}[name]
    return make(**params)


def curl_residual(gsys, x, step: float = 1e-5) -> float:
    """Relative max-abs gap between B and a central-difference curl of A."""
    x = np.asarray(x[:3], dtype=float)
    jac = np.empty((3, 3))   # jac[i, j] = dA_i / dx_j
    for j in range(3):
        e = np.zeros(3)
        e[j] = step * max(1.0, abs(x[j]))
        jac[:, j] = (np.asarray(gsys.A(x + e), dtype=float) - np.asarray(gsys.A(x - e), dtype=float)) / (2 * e[j])
    curl = np.array([jac[2, 1] - jac[1, 2], jac[0, 2] - jac[2, 0], jac[1, 0] - jac[0, 1]])
    b = np.asarray(gsys.B(x), dtype=float)
    return float(np.max(np.abs(curl - b))) / max(float(np.max(np.abs(b))), 1e-300)
