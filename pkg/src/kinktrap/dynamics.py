"""Forces, energy, and coordinate transforms for the bound pair in a Gaussian well.

Two unit-mass particles on a line are bonded by a harmonic spring plus a
short-range power-law repulsion, and both feel a finite attractive Gaussian
well centered at the origin.  Sign convention: the external potential energy
is U_ext(x) = -A exp(-beta x^2), so A > 0 means attractive and the external
force is F(x) = -2 A beta x exp(-beta x^2), pointing toward the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ModelParams",
    "State",
    "CMState",
    "CoincidentParticles",
    "equilibrium_separation",
    "external_force",
    "external_potential",
    "accelerations",
    "total_energy",
    "to_cm",
    "from_cm",
]

# Below this separation the repulsion is numerically meaningless; integration
# must abort rather than emit garbage.
DEFAULT_COINCIDENCE_FLOOR = 1e-12


class CoincidentParticles(RuntimeError):
    """Raised when |x1 - x2| falls below the configured floor."""

    def __init__(self, x1: float, x2: float, floor: float):
        self.x1 = x1
        self.x2 = x2
        self.floor = floor
        super().__init__(
            f"particle separation |{x1!r} - {x2!r}| = {abs(x1 - x2)!r} "
            f"below floor {floor!r}; the repulsive core has been breached"
        )


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the pair-plus-well model.

    k      spring constant of the bond (> 0)
    alpha  strength of the short-range repulsion (> 0)
    n      repulsion exponent, a small positive integer
    A      well depth; A > 0 is attractive, A = 0 removes the well
    beta   inverse-square well width (> 0)
    """

    k: float = 1.0
    alpha: float = 1.0
    n: int = 2
    A: float = 2.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.k > 0.0):
            raise ValueError(f"k must be positive, got {self.k!r}")
        if not (self.alpha > 0.0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if not math.isfinite(self.A):
            raise ValueError(f"A must be finite, got {self.A!r}")


@dataclass(frozen=True)
class State:
    """Phase-space point in lab coordinates."""

    t: float
    x1: float
    v1: float
    x2: float
    v2: float


@dataclass(frozen=True)
class CMState:
    """Center-of-mass / relative coordinates.

    R = (x1 + x2)/2 and r = (x2 - x1)/2, so r is HALF the interparticle
    separation; w and V are the matching velocities.
    """

    t: float
    R: float
    V: float
    r: float
    w: float


def equilibrium_separation(params: ModelParams) -> float:
    """Separation where spring pull and core repulsion balance: (n alpha / k)^(1/(n+2))."""
    return (params.n * params.alpha / params.k) ** (1.0 / (params.n + 2))


def external_potential(x: float, params: ModelParams) -> float:
    """Potential energy of one particle in the well: -A exp(-beta x^2)."""
    return -params.A * math.exp(-params.beta * x * x)


def external_force(x: float, params: ModelParams) -> float:
    """Force from the well on a particle at x: -2 A beta x exp(-beta x^2)."""
    return (-2.0 * params.A * params.beta) * x * math.exp(-params.beta * x * x)


def _abs_pow_int(base: float, exponent: int) -> float:
    # |base|**exponent by repeated multiplication; exponent is a small integer,
    # and this keeps the arithmetic identical to the compiled kernels.
    out = 1.0
    b = abs(base)
    for _ in range(exponent):
        out *= b
    return out


def _separation_checked(x1: float, x2: float, floor: float) -> float:
    sep = abs(x1 - x2)
    if sep < floor:
        raise CoincidentParticles(x1, x2, floor)
    return sep


def accelerations(
    state: State,
    params: ModelParams,
    coincidence_floor: float = DEFAULT_COINCIDENCE_FLOOR,
) -> tuple[float, float]:
    """Accelerations (a1, a2) for unit masses.

    a1 = -k (x1 - x2) + n alpha (x1 - x2)/|x1 - x2|^(n+2) + F(x1), and a2 is
    the mirror image.  The internal part is computed once and negated so the
    action-reaction pair cancels exactly in floating point.
    """
    dx = state.x1 - state.x2
    sep = _separation_checked(state.x1, state.x2, coincidence_floor)
    internal = -params.k * dx + params.n * params.alpha * dx / _abs_pow_int(dx, params.n + 2)
    a1 = internal + external_force(state.x1, params)
    a2 = -internal + external_force(state.x2, params)
    return a1, a2


def total_energy(
    state: State,
    params: ModelParams,
    coincidence_floor: float = DEFAULT_COINCIDENCE_FLOOR,
) -> float:
    """Conserved energy: kinetic + spring + repulsion + well terms."""
    dx = state.x1 - state.x2
    sep = _separation_checked(state.x1, state.x2, coincidence_floor)
    kinetic = 0.5 * (state.v1 * state.v1 + state.v2 * state.v2)
    spring = 0.5 * params.k * dx * dx
    repulsion = params.alpha / _abs_pow_int(dx, params.n)
    # well terms paired before the grand total so particle exchange is exact
    well = external_potential(state.x1, params) + external_potential(state.x2, params)
    return kinetic + spring + repulsion + well


def to_cm(state: State) -> CMState:
    """Lab -> center-of-mass/relative coordinates."""
    return CMState(
        t=state.t,
        R=0.5 * (state.x1 + state.x2),
        V=0.5 * (state.v1 + state.v2),
        r=0.5 * (state.x2 - state.x1),
        w=0.5 * (state.v2 - state.v1),
    )


def from_cm(cm: CMState) -> State:
    """Center-of-mass/relative -> lab coordinates; inverse of to_cm to 1 ulp."""
    return State(
        t=cm.t,
        x1=cm.R - cm.r,
        v1=cm.V - cm.w,
        x2=cm.R + cm.r,
        v2=cm.V + cm.w,
    )
