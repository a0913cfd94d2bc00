"""Fixed-step time integration with declarative, always-bounded stop conditions.

VelocityVerlet is the production scheme (symplectic, second order, one force
evaluation per step).  RK4 is carried as an independent cross-check: same
trajectories to O(dt^2) accuracy, entirely different arithmetic, no shared
update code.  Both run at fixed dt so results are bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional, Union

import numpy as np

from . import _kernels
from .dynamics import (
    DEFAULT_COINCIDENCE_FLOOR,
    CoincidentParticles,
    ModelParams,
    State,
    total_energy,
)

__all__ = [
    "Scheme",
    "IntegratorConfig",
    "TimeLimit",
    "ExitRadius",
    "Composite",
    "StopReason",
    "StepBudgetExhausted",
    "Trajectory",
    "IntegrationDiagnostics",
    "IntegrationResult",
    "step",
    "integrate",
]

AccelFn = Callable[[float, float], tuple[float, float]]


class Scheme(Enum):
    VELOCITY_VERLET = "VelocityVerlet"
    RK4 = "RK4"


class StopReason(Enum):
    TIME_LIMIT = "TimeLimit"
    EXIT_RADIUS = "ExitRadius"


class StepBudgetExhausted(RuntimeError):
    """max_steps hit before any stop predicate fired.

    Distinct from a legitimate TimeLimit stop: hitting the budget means the
    caller's stop condition never triggered within the allotted work.
    """

    def __init__(self, steps: int):
        self.steps = steps
        super().__init__(f"step budget exhausted after {steps} steps with no stop predicate satisfied")


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = Scheme.VELOCITY_VERLET
    dt: float = 1e-3
    max_steps: int = 10_000_000
    coincidence_floor: float = DEFAULT_COINCIDENCE_FLOOR

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt!r}")
        if not (isinstance(self.max_steps, int) and self.max_steps > 0):
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps!r}")
        if not (self.coincidence_floor >= 0.0):
            raise ValueError(f"coincidence_floor must be >= 0, got {self.coincidence_floor!r}")


@dataclass(frozen=True)
class TimeLimit:
    """Stop once state.t reaches this absolute time."""

    t_max: float

    def __post_init__(self):
        if not math.isfinite(self.t_max):
            raise ValueError(f"t_max must be finite, got {self.t_max!r}")


@dataclass(frozen=True)
class ExitRadius:
    """Stop once |R| >= radius with the center of mass moving outward (R*V > 0)."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive and finite, got {self.radius!r}")


@dataclass(frozen=True)
class Composite:
    """Any-of combination of stop conditions."""

    conditions: tuple

    def __init__(self, conditions: Iterable):
        object.__setattr__(self, "conditions", tuple(conditions))


StopCondition = Union[TimeLimit, ExitRadius, Composite]


@dataclass(frozen=True)
class Trajectory:
    """Sampled states: the initial point, every rec-stride-th step, and the final point."""

    t: np.ndarray
    x1: np.ndarray
    v1: np.ndarray
    x2: np.ndarray
    v2: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def R(self) -> np.ndarray:
        return 0.5 * (self.x1 + self.x2)

    @property
    def V(self) -> np.ndarray:
        return 0.5 * (self.v1 + self.v2)

    @property
    def r(self) -> np.ndarray:
        return 0.5 * (self.x2 - self.x1)

    @property
    def w(self) -> np.ndarray:
        return 0.5 * (self.v2 - self.v1)


@dataclass(frozen=True)
class IntegrationDiagnostics:
    steps: int
    energy_initial: float
    # Peak of |E(t) - E(0)| / |E(0)| sampled after every step.  NaN when a
    # custom acceleration hook is active (model energy is not meaningful then).
    max_energy_drift: float
    trajectory: Optional[Trajectory] = None


@dataclass(frozen=True)
class IntegrationResult:
    final: State
    reason: StopReason
    diagnostics: IntegrationDiagnostics


def _normalize_stop(stop: StopCondition) -> tuple[Optional[float], Optional[float]]:
    """Flatten a stop condition into (t_limit, exit_radius), each minimal or None."""
    t_limit: Optional[float] = None
    radius: Optional[float] = None
    queue = [stop]
    while queue:
        cond = queue.pop()
        if isinstance(cond, TimeLimit):
            t_limit = cond.t_max if t_limit is None else min(t_limit, cond.t_max)
        elif isinstance(cond, ExitRadius):
            radius = cond.radius if radius is None else min(radius, cond.radius)
        elif isinstance(cond, Composite):
            queue.extend(cond.conditions)
        else:
            raise TypeError(f"not a stop condition: {cond!r}")
    return t_limit, radius


def _steps_to_reach(t0: float, t_limit: float, dt: float) -> int:
    """Smallest step count i with t0 + i*dt >= t_limit, robust to last-bit slop."""
    ratio = (t_limit - t0) / dt
    if ratio <= 0.0:
        return 0
    return int(math.ceil(ratio - max(1e-9, 8e-16 * ratio)))


def step(
    state: State,
    params: ModelParams,
    cfg: IntegratorConfig,
    accel_fn: Optional[AccelFn] = None,
) -> State:
    """Advance one fixed step of cfg.dt under cfg.scheme.

    accel_fn, when given, replaces the model forces entirely (testing seam);
    it maps (x1, x2) -> (a1, a2).
    """
    accel = accel_fn if accel_fn is not None else _model_accel(params)
    floor = cfg.coincidence_floor
    dt = cfg.dt
    x1, v1, x2, v2 = state.x1, state.v1, state.x2, state.v2
    if abs(x1 - x2) < floor:
        raise CoincidentParticles(x1, x2, floor)
    if cfg.scheme is Scheme.VELOCITY_VERLET:
        h2 = 0.5 * dt
        a1, a2 = accel(x1, x2)
        v1 += h2 * a1
        v2 += h2 * a2
        x1 += dt * v1
        x2 += dt * v2
        if abs(x1 - x2) < floor:
            raise CoincidentParticles(x1, x2, floor)
        a1, a2 = accel(x1, x2)
        v1 += h2 * a1
        v2 += h2 * a2
    else:
        h2 = 0.5 * dt
        a1, b1 = accel(x1, x2)
        xa1, xa2 = x1 + h2 * v1, x2 + h2 * v2
        va1, va2 = v1 + h2 * a1, v2 + h2 * b1
        _check_floor(xa1, xa2, floor)
        a2_, b2 = accel(xa1, xa2)
        xb1, xb2 = x1 + h2 * va1, x2 + h2 * va2
        vb1, vb2 = v1 + h2 * a2_, v2 + h2 * b2
        _check_floor(xb1, xb2, floor)
        a3, b3 = accel(xb1, xb2)
        xc1, xc2 = x1 + dt * vb1, x2 + dt * vb2
        vc1, vc2 = v1 + dt * a3, v2 + dt * b3
        _check_floor(xc1, xc2, floor)
        a4, b4 = accel(xc1, xc2)
        sixth = dt / 6.0
        x1 = x1 + sixth * (v1 + 2.0 * va1 + 2.0 * vb1 + vc1)
        x2 = x2 + sixth * (v2 + 2.0 * va2 + 2.0 * vb2 + vc2)
        v1 = v1 + sixth * (a1 + 2.0 * a2_ + 2.0 * a3 + a4)
        v2 = v2 + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if abs(x1 - x2) < floor:
            raise CoincidentParticles(x1, x2, floor)
    return State(t=state.t + dt, x1=x1, v1=v1, x2=x2, v2=v2)


def _check_floor(x1: float, x2: float, floor: float) -> None:
    if abs(x1 - x2) < floor:
        raise CoincidentParticles(x1, x2, floor)


def _model_accel(params: ModelParams) -> AccelFn:
    k, alpha, n, A, beta = params.k, params.alpha, params.n, params.A, params.beta

    def accel(x1: float, x2: float) -> tuple[float, float]:
        a1, a2, _, _ = _kernels._accel(x1, x2, k, alpha, n, A, beta)
        return a1, a2

    return accel


def integrate(
    state: State,
    params: ModelParams,
    cfg: IntegratorConfig,
    stop: StopCondition,
    *,
    record_every: Optional[int] = None,
    accel_fn: Optional[AccelFn] = None,
) -> IntegrationResult:
    """Run fixed steps until a stop predicate fires.

    Stop predicates are evaluated after each step; cfg.max_steps always bounds
    the run, and hitting it without a predicate firing raises
    StepBudgetExhausted.  A separation below cfg.coincidence_floor raises
    CoincidentParticles.  record_every=m keeps every m-th step in the returned
    trajectory (plus the initial and final points); note m=1 on a long run
    stores five float64 arrays of one entry per step.

    Results are bitwise deterministic for identical inputs and configuration.
    """
    t_limit, exit_radius = _normalize_stop(stop)
    n_time = None if t_limit is None else _steps_to_reach(state.t, t_limit, cfg.dt)
    if n_time is None:
        n_limit = cfg.max_steps
    else:
        n_limit = min(n_time, cfg.max_steps)
    time_binds = n_time is not None and n_time <= cfg.max_steps

    stride = 0
    if record_every is not None:
        if not (isinstance(record_every, int) and record_every >= 1):
            raise ValueError(f"record_every must be a positive integer, got {record_every!r}")
        stride = record_every

    if stride > 0:
        cap = n_limit // stride + 1
        rec_t = np.empty(cap)
        rec_x1 = np.empty(cap)
        rec_v1 = np.empty(cap)
        rec_x2 = np.empty(cap)
        rec_v2 = np.empty(cap)
    else:
        rec_t = rec_x1 = rec_v1 = rec_x2 = rec_v2 = _EMPTY

    exit_arg = exit_radius if exit_radius is not None else -1.0

    if accel_fn is not None:
        e0 = math.nan
        status, steps, x1, v1, x2, v2, maxd, nrec = _run_hooked(
            state, cfg, n_limit, exit_arg, stride,
            rec_t, rec_x1, rec_v1, rec_x2, rec_v2, accel_fn,
        )
        rel_drift = math.nan
    else:
        e0 = total_energy(state, params, cfg.coincidence_floor)
        runner = _kernels._run_verlet if cfg.scheme is Scheme.VELOCITY_VERLET else _kernels._run_rk4
        status, steps, x1, v1, x2, v2, maxd, nrec = runner(
            state.x1, state.v1, state.x2, state.v2, state.t, cfg.dt, n_limit,
            params.k, params.alpha, params.n, params.A, params.beta,
            cfg.coincidence_floor, exit_arg, e0,
            stride, rec_t, rec_x1, rec_v1, rec_x2, rec_v2,
        )
        denom = abs(e0) if abs(e0) > 1e-300 else 1.0
        rel_drift = maxd / denom

    final = State(t=state.t + steps * cfg.dt, x1=x1, v1=v1, x2=x2, v2=v2)

    if status == _kernels.STATUS_COINCIDENT:
        raise CoincidentParticles(x1, x2, cfg.coincidence_floor)

    trajectory = None
    if stride > 0:
        trajectory = _assemble_trajectory(
            state, final, steps, stride, nrec, rec_t, rec_x1, rec_v1, rec_x2, rec_v2
        )

    diag = IntegrationDiagnostics(
        steps=steps,
        energy_initial=e0,
        max_energy_drift=rel_drift,
        trajectory=trajectory,
    )

    if status == _kernels.STATUS_EXIT:
        return IntegrationResult(final=final, reason=StopReason.EXIT_RADIUS, diagnostics=diag)
    # Ran every allotted step without a predicate firing.
    if time_binds and steps == n_limit:
        return IntegrationResult(final=final, reason=StopReason.TIME_LIMIT, diagnostics=diag)
    raise StepBudgetExhausted(steps)


_EMPTY = np.empty(0)


def _assemble_trajectory(initial, final, steps, stride, nrec, rec_t, rec_x1, rec_v1, rec_x2, rec_v2):
    head = 1
    tail = 1 if (steps > 0 and steps % stride != 0) else 0
    m = head + nrec + tail
    t = np.empty(m)
    x1 = np.empty(m)
    v1 = np.empty(m)
    x2 = np.empty(m)
    v2 = np.empty(m)
    t[0], x1[0], v1[0], x2[0], v2[0] = initial.t, initial.x1, initial.v1, initial.x2, initial.v2
    t[1 : 1 + nrec] = rec_t[:nrec]
    x1[1 : 1 + nrec] = rec_x1[:nrec]
    v1[1 : 1 + nrec] = rec_v1[:nrec]
    x2[1 : 1 + nrec] = rec_x2[:nrec]
    v2[1 : 1 + nrec] = rec_v2[:nrec]
    if tail:
        t[-1], x1[-1], v1[-1], x2[-1], v2[-1] = final.t, final.x1, final.v1, final.x2, final.v2
    return Trajectory(t=t, x1=x1, v1=v1, x2=x2, v2=v2)


def _run_hooked(state, cfg, nsteps, exit_radius, rec_stride, rec_t, rec_x1, rec_v1, rec_x2, rec_v2, accel):
    """Plain-Python mirror of the compiled runners for custom-force tests."""
    floor = cfg.coincidence_floor
    dt = cfg.dt
    verlet = cfg.scheme is Scheme.VELOCITY_VERLET
    x1, v1, x2, v2 = state.x1, state.v1, state.x2, state.v2
    t0 = state.t
    nrec = 0
    steps = 0
    if abs(x1 - x2) < floor:
        return _kernels.STATUS_COINCIDENT, steps, x1, v1, x2, v2, math.nan, nrec
    h2 = 0.5 * dt
    status = _kernels.STATUS_RAN_ALL
    if verlet:
        a1, a2 = accel(x1, x2)
    for i in range(nsteps):
        if verlet:
            v1 += h2 * a1
            v2 += h2 * a2
            x1 += dt * v1
            x2 += dt * v2
            if abs(x1 - x2) < floor:
                steps = i + 1
                status = _kernels.STATUS_COINCIDENT
                break
            a1, a2 = accel(x1, x2)
            v1 += h2 * a1
            v2 += h2 * a2
        else:
            c1, d1 = accel(x1, x2)
            xa1, xa2 = x1 + h2 * v1, x2 + h2 * v2
            va1, va2 = v1 + h2 * c1, v2 + h2 * d1
            c2, d2 = accel(xa1, xa2)
            xb1, xb2 = x1 + h2 * va1, x2 + h2 * va2
            vb1, vb2 = v1 + h2 * c2, v2 + h2 * d2
            c3, d3 = accel(xb1, xb2)
            xc1, xc2 = x1 + dt * vb1, x2 + dt * vb2
            vc1, vc2 = v1 + dt * c3, v2 + dt * d3
            c4, d4 = accel(xc1, xc2)
            sixth = dt / 6.0
            x1 = x1 + sixth * (v1 + 2.0 * va1 + 2.0 * vb1 + vc1)
            x2 = x2 + sixth * (v2 + 2.0 * va2 + 2.0 * vb2 + vc2)
            v1 = v1 + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            v2 = v2 + sixth * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
            if abs(x1 - x2) < floor:
                steps = i + 1
                status = _kernels.STATUS_COINCIDENT
                break
        steps = i + 1
        if rec_stride > 0 and steps % rec_stride == 0 and nrec < rec_t.shape[0]:
            rec_t[nrec] = t0 + steps * dt
            rec_x1[nrec] = x1
            rec_v1[nrec] = v1
            rec_x2[nrec] = x2
            rec_v2[nrec] = v2
            nrec += 1
        if exit_radius > 0.0:
            R = 0.5 * (x1 + x2)
            V = 0.5 * (v1 + v2)
            if (R >= exit_radius or R <= -exit_radius) and R * V > 0.0:
                status = _kernels.STATUS_EXIT
                break
    return status, steps, x1, v1, x2, v2, math.nan, nrec
