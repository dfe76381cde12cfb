"""Time integration: CFL-controlled step selection, the ghost-fill /
sweep / update loop, and built-in initial conditions for each kernel."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .grid import (AuxField, BoundaryCondition, GridSpec, StateField, fill_ghost)
from .kernels import DESCRIPTORS, Kernel, make_kernel
from .parallel import Backend, Serial
from .sweep import CellWise, Strategy, apply_update, sweep


@dataclass(frozen=True)
class TimestepController:
    """CFL-target step selection with optional cap and fixed override."""

    cfl_target: float = 0.9
    dt_max: float | None = None
    fixed_dt: float | None = None

    def __post_init__(self):
        if not 0.0 < self.cfl_target < 1.0:
            raise ValueError(f"cfl_target must lie in (0, 1), got {self.cfl_target}")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if self.fixed_dt is not None and not self.fixed_dt > 0:
            raise ValueError(f"fixed_dt must be positive, got {self.fixed_dt}")


def choose_dt(max_sx: float, max_sy: float, dx: float, dy: float,
              ctl: TimestepController, remaining: float | None = None) -> float:
    """Largest stable step: dt = cfl_target / (max_sx/dx + max_sy/dy).

    The summed-directions form is what the unsplit donor-cell update's
    stability region requires.  Clamped by dt_max and by the remaining time;
    fixed_dt bypasses the formula (but not the clamps).  A stationary field
    (both speeds zero) without fixed_dt is an error rather than dt=inf, so
    configuration mistakes cannot hide behind an infinite step.
    """
    if ctl.fixed_dt is not None:
        dt = ctl.fixed_dt
    else:
        if max_sx < 0 or max_sy < 0:
            raise ValueError(f"wave speeds must be >= 0, got {max_sx}, {max_sy}")
        rate = max_sx / dx + max_sy / dy
        if rate == 0.0:
            raise ValueError("all wave speeds are zero; a stationary field needs fixed_dt")
        dt = ctl.cfl_target / rate
    if ctl.dt_max is not None:
        dt = min(dt, ctl.dt_max)
    if remaining is not None:
        dt = min(dt, remaining)
    return dt


@dataclass(frozen=True)
class SimulationConfig:
    """One complete simulation setup.  Exactly one of t_final/num_steps."""

    spec: GridSpec
    kernel: str
    ic: str
    strategy: Strategy = CellWise()
    backend: Backend = Serial()
    bc_x: BoundaryCondition = BoundaryCondition.PERIODIC
    bc_y: BoundaryCondition = BoundaryCondition.PERIODIC
    t_final: float | None = None
    num_steps: int | None = None
    kernel_params: dict | None = None

    def __post_init__(self):
        if self.kernel not in DESCRIPTORS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if (self.t_final is None) == (self.num_steps is None):
            raise ValueError("exactly one of t_final and num_steps must be set")
        if self.t_final is not None and not self.t_final >= 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if self.num_steps is not None and self.num_steps < 0:
            raise ValueError(f"num_steps must be >= 0, got {self.num_steps}")


@dataclass
class StepReport:
    """What one step did: step size, realized CFL, and phase wall times."""

    dt: float
    cfl: float
    sweep_ms: float
    update_ms: float
    max_speed_x: float
    max_speed_y: float


# initial condition -> kernel parameters it implies
IC_DEFAULT_PARAMS = {
    "advection-gaussian": {"u": 1.0, "v": 1.0},
    "acoustics-pulse": {"rho": 1.0, "bulk": 1.0},
    "acoustics-var-interface": {},
    "euler-sod-x": {"gamma": 1.4},
    "euler-uniform": {"gamma": 1.4},
}

# the kernel each initial condition is meant to exercise
IC_KERNEL = {
    "advection-gaussian": "advection",
    "acoustics-pulse": "acoustics-const",
    "acoustics-var-interface": "acoustics-var",
    "euler-sod-x": "euler",
    "euler-uniform": "euler",
}

DEFAULT_IC = {
    "advection": "advection-gaussian",
    "acoustics-const": "acoustics-pulse",
    "acoustics-var": "acoustics-var-interface",
    "euler": "euler-sod-x",
}

SOD_LEFT = (1.0, 0.0, 0.0, 2.5)       # density 1, at rest, pressure 1 (gamma 1.4)
SOD_RIGHT = (0.125, 0.0, 0.0, 0.25)   # density 1/8, at rest, pressure 0.1


def gaussian_profile(spec: GridSpec):
    """Unit-amplitude Gaussian bump centered in the domain.

    Width is min(domain extent)/16, so the tails are far below double
    precision at the boundary and the profile is effectively periodic.
    """
    cx, cy = 0.5 * spec.width, 0.5 * spec.height
    sigma = min(spec.width, spec.height) / 16.0

    def profile(x, y):
        return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * sigma * sigma))

    return profile


def _centers(spec: GridSpec):
    return np.meshgrid(spec.x_centers(), spec.y_centers(), indexing="ij")


def initial_condition(name: str, spec: GridSpec) -> tuple[StateField, AuxField, dict]:
    """Build interior state/aux for a named initial condition.

    Returns the kernel parameters the condition implies alongside the fields.
    Ghost cells are left zero; they are filled from the boundary conditions
    at step time.
    """
    params = IC_DEFAULT_PARAMS.get(name)
    if params is None:
        raise ValueError(f"unknown initial condition {name!r}; "
                         f"available: {', '.join(IC_DEFAULT_PARAMS)}")
    kernel = IC_KERNEL[name]
    want_eqn = DESCRIPTORS[kernel].num_eqn
    want_aux = DESCRIPTORS[kernel].num_aux
    if spec.num_eqn != want_eqn or spec.num_aux != want_aux:
        raise ValueError(
            f"{name} needs num_eqn={want_eqn}, num_aux={want_aux}; "
            f"grid has num_eqn={spec.num_eqn}, num_aux={spec.num_aux}"
        )

    state = StateField(spec)
    aux = AuxField(spec)
    xx, yy = _centers(spec)

    if name == "advection-gaussian":
        state.interior[0] = gaussian_profile(spec)(xx, yy)
    elif name == "acoustics-pulse":
        state.interior[0] = gaussian_profile(spec)(xx, yy)  # pressure bump at rest
    elif name == "acoustics-var-interface":
        cx, cy = 0.25 * spec.width, 0.5 * spec.height
        sigma = min(spec.width, spec.height) / 16.0
        state.interior[0] = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma * sigma))
        left = xx < 0.5 * spec.width
        aux.interior[0] = 1.0
        aux.interior[1] = np.where(left, 1.0, 3.0)
    elif name == "euler-sod-x":
        left = xx < 0.5 * spec.width
        for comp in range(4):
            state.interior[comp] = np.where(left, SOD_LEFT[comp], SOD_RIGHT[comp])
    elif name == "euler-uniform":
        for comp in range(4):
            state.interior[comp] = SOD_LEFT[comp]

    return state, aux, dict(params)


def resolve_kernel(config: SimulationConfig) -> Kernel:
    """Bind the configured kernel, defaulting parameters from the IC."""
    params = dict(IC_DEFAULT_PARAMS.get(config.ic, {}))
    params.update(config.kernel_params or {})
    return make_kernel(config.kernel, **params)


def step(state: StateField, aux: AuxField | None, config: SimulationConfig,
         ctl: TimestepController, remaining: float | None = None
         ) -> tuple[StateField, StepReport]:
    """One ghost-fill / sweep / choose-dt / update cycle.

    The step size comes from this sweep's own max wave speeds, so the first
    step needs no pre-pass.  Mutates and returns `state`.
    """
    kernel = resolve_kernel(config)
    spec = config.spec

    fill_ghost(state, config.bc_x, config.bc_y)
    if aux is not None and aux.num_comp:
        fill_ghost(aux, config.bc_x, config.bc_y)

    t0 = time.perf_counter()
    fluct, stats = sweep(state, aux, kernel, config.strategy, config.backend)
    t1 = time.perf_counter()
    dt = choose_dt(stats.max_speed_x, stats.max_speed_y, spec.dx, spec.dy, ctl, remaining)
    apply_update(state, fluct, dt, backend=config.backend)
    t2 = time.perf_counter()

    cfl = dt * (stats.max_speed_x / spec.dx + stats.max_speed_y / spec.dy)
    report = StepReport(dt=dt, cfl=cfl, sweep_ms=(t1 - t0) * 1e3,
                        update_ms=(t2 - t1) * 1e3,
                        max_speed_x=stats.max_speed_x, max_speed_y=stats.max_speed_y)
    return state, report


def run(config: SimulationConfig, ctl: TimestepController | None = None
        ) -> tuple[StateField, list[StepReport]]:
    """Integrate from the named initial condition to t_final or num_steps.

    The last step's dt is truncated to land on t_final exactly.
    """
    ctl = ctl if ctl is not None else TimestepController()
    state, aux, _ = initial_condition(config.ic, config.spec)
    reports: list[StepReport] = []

    if config.num_steps is not None:
        for _ in range(config.num_steps):
            state, rep = step(state, aux, config, ctl)
            reports.append(rep)
        return state, reports

    t = 0.0
    tol = 1e-14 * max(1.0, config.t_final)
    while config.t_final - t > tol:
        state, rep = step(state, aux, config, ctl, remaining=config.t_final - t)
        reports.append(rep)
        t += rep.dt
    return state, reports
