"""Second-order particle scheme: frozen per-particle markers and a pressure law.

Each chunk carries a marker w (its speed in vacuum); the follower speed is
w - p(density), the front particle moves at the last marker.  Markers never
change during the evolution.  The density, velocity and marker fields are
reconstructed chunk-wise, with the vacuum extension outside the hull carrying
equal marker and velocity values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atomize import ArzAtomization
from .core import _frozen_array, PiecewiseConstantDensity, bisect_root
from .integrator import IntegratorConfig, integrate
from .lwr import StateCorruptionError


@dataclass(frozen=True)
class PressureModel:
    """Increasing pressure p(rho); admissible laws vanish at vacuum."""

    def __call__(self, rho):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def admissible(self) -> bool:
        """True when p(0+)=0, p'>0 and 2p' + rho p'' > 0 on a sampled grid."""
        rho = np.linspace(1e-9, 10.0, 513)
        p = self(rho)
        if not np.all(np.isfinite(p)):
            return False
        if self(1e-12) < -1e-9 or abs(float(self(1e-12))) > 1e-6:
            return False
        dp = np.gradient(p, rho)
        if np.any(dp <= 0):
            return False
        ddp = np.gradient(dp, rho)
        return bool(np.all(2.0 * dp + rho * ddp > -1e-9))


@dataclass(frozen=True)
class PowerLawPressure(PressureModel):
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def __call__(self, rho):
        return np.asarray(rho, dtype=float) ** self.gamma

    def inverse(self, y):
        yq = np.asarray(y, dtype=float)
        if np.any(yq < 0):
            raise ValueError("power-law pressure is nonnegative")
        return yq ** (1.0 / self.gamma)

    def admissible(self) -> bool:
        return True


@dataclass(frozen=True)
class LinearPressure(PressureModel):
    slope: float

    def __post_init__(self):
        if self.slope <= 0:
            raise ValueError("slope must be positive")

    def __call__(self, rho):
        return self.slope * np.asarray(rho, dtype=float)

    def inverse(self, y):
        return np.asarray(y, dtype=float) / self.slope

    def admissible(self) -> bool:
        return True


@dataclass(frozen=True)
class LogScaledPressure(PressureModel):
    """p(rho) = coefficient * ln(rho); diverges at vacuum, so not admissible."""

    coefficient: float

    def __post_init__(self):
        if self.coefficient <= 0:
            raise ValueError("coefficient must be positive")

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            return self.coefficient * np.log(r)

    def inverse(self, y):
        return np.exp(np.asarray(y, dtype=float) / self.coefficient)

    def admissible(self) -> bool:
        return False


@dataclass(frozen=True)
class CustomPressure(PressureModel):
    fn: object
    inverse_bracket: tuple[float, float] = (0.0, 1e6)

    def __call__(self, rho):
        return np.asarray(self.fn(rho), dtype=float)

    def inverse(self, y):
        yq = np.atleast_1d(np.asarray(y, dtype=float))
        lo, hi = self.inverse_bracket
        out = np.array([bisect_root(lambda r, t=t: float(self.fn(r)) - t, lo, hi)
                        for t in yq])
        return out if np.ndim(y) else float(out[0])


@dataclass(frozen=True)
class ArzParticleState:
    """Positions plus frozen markers; marker i belongs to the chunk behind particle i+1."""

    t: float
    positions: np.ndarray
    chunk_mass: float
    markers: np.ndarray
    pressure: PressureModel

    def __post_init__(self):
        _frozen_array(self, "positions", self.positions)
        _frozen_array(self, "markers", self.markers)
        if len(self.markers) != len(self.positions) - 1:
            raise ValueError("one marker per chunk required")
        if np.any(np.diff(self.positions) <= 0):
            raise StateCorruptionError("positions must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.positions) - 1


def _rhs_array(positions, chunk_mass, markers, pressure) -> np.ndarray:
    gaps = np.diff(positions)
    out = np.empty_like(positions)
    out[:-1] = markers - pressure(chunk_mass / gaps)
    out[-1] = markers[-1]
    return out


def rhs_arz(state: ArzParticleState) -> tuple[np.ndarray, bool]:
    """Velocities w_i - p(density_i); the front particle rides its marker.

    Returns (velocities, negative_speed_flag); negative follower speeds can
    only arise for pressure laws violating the vacuum condition and are
    flagged rather than rejected.
    """
    if np.any(np.diff(state.positions) <= 0):
        raise StateCorruptionError("non-increasing positions")
    v = _rhs_array(state.positions, state.chunk_mass, state.markers, state.pressure)
    return v, bool(np.any(v[:-1] < 0))


def reconstruct_fields(state: ArzParticleState):
    """Chunk-wise marker field W, velocity field V, and density p^{-1}(W - V).

    Outside the hull W = V (vacuum extension with the edge markers).  The
    returned densities are exactly the chunk densities; the vacuum extension
    has density zero by construction for admissible pressure laws.
    """
    gaps = np.diff(state.positions)
    dens = state.chunk_mass / gaps
    v = state.markers - state.pressure(dens)
    w_field = PiecewiseConstantDensityLike(state.positions, state.markers,
                                           state.markers[0], state.markers[-1])
    v_field = PiecewiseConstantDensityLike(state.positions, v,
                                           state.markers[0], state.markers[-1])
    rho = PiecewiseConstantDensity(state.positions, dens)
    return w_field, v_field, rho


@dataclass(frozen=True)
class PiecewiseConstantDensityLike:
    """Step function with constant extensions outside the hull (for W and V fields)."""

    breakpoints: np.ndarray
    values: np.ndarray
    left_value: float
    right_value: float

    def __post_init__(self):
        _frozen_array(self, "breakpoints", self.breakpoints)
        _frozen_array(self, "values", self.values)

    def evaluate(self, x):
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.breakpoints, xq, side="right") - 1, 0,
                      len(self.values) - 1)
        out = self.values[idx]
        out = np.where(xq < self.breakpoints[0], self.left_value, out)
        out = np.where(xq >= self.breakpoints[-1], self.right_value, out)
        return out if np.ndim(x) else float(out[0])


@dataclass
class ArzTrajectory:
    """Sampled run of the second-order scheme; markers stored once (frozen)."""

    times: np.ndarray
    positions: np.ndarray
    chunk_mass: float
    markers: np.ndarray
    pressure: PressureModel
    pressure_admissible: bool
    negative_speed_flagged: bool
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def n(self) -> int:
        return self.positions.shape[1] - 1

    @property
    def mass(self) -> float:
        return self.chunk_mass * self.n

    def state_at(self, k: int) -> ArzParticleState:
        return ArzParticleState(float(self.times[k]), self.positions[k],
                                self.chunk_mass, self.markers, self.pressure)

    def density_at(self, k: int) -> PiecewiseConstantDensity:
        return PiecewiseConstantDensity(self.positions[k],
                                        self.chunk_mass / np.diff(self.positions[k]))

    def max_gap_series(self) -> np.ndarray:
        return np.max(np.diff(self.positions, axis=1), axis=1)


def evolve_arz(init: ArzAtomization, pressure: PressureModel, t_final: float,
               cfg: IntegratorConfig = IntegratorConfig(),
               n_samples: int = 100) -> ArzTrajectory:
    """Integrate the marker-carrying system; markers are never mutated.

    For admissible pressure laws the per-chunk maximal density p^{-1}(w_i)
    yields a lower gap guard; otherwise only strict ordering is guarded and
    negative follower speeds are flagged in the trajectory.
    """
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    ell = init.chunk_mass
    markers = np.array(init.markers)
    markers.setflags(write=False)
    admissible = pressure.admissible()

    if admissible and np.all(markers > 0):
        rho_cap = pressure.inverse(markers)
        floors = (ell / rho_cap) * (1.0 - 2.5e-10)
    else:
        gaps0 = np.diff(init.positions)
        floors = np.full_like(gaps0, 1e-12 * float(np.min(gaps0)))

    neg_flag = False

    def rhs(t, y):
        nonlocal neg_flag
        v = _rhs_array(y, ell, markers, pressure)
        if not admissible and not neg_flag and np.any(v[:-1] < 0):
            neg_flag = True
        return v

    def ordered(t, y):
        return bool(np.all(np.diff(y) >= floors))

    samples = np.linspace(0.0, t_final, n_samples)
    sol = integrate(rhs, init.positions, (0.0, t_final), cfg, guards=(ordered,),
                    sample_times=samples, dense=False)
    return ArzTrajectory(sol.sample_ts, sol.sample_ys, ell, markers, pressure,
                         admissible, neg_flag, sol.n_steps, sol.n_rejected)


def density_ode_rhs(state: ArzParticleState) -> np.ndarray:
    """Right-hand side of the chunk-density form of the dynamics.

    dR_i/dt = -(R_i^2/ell) [v_{i+1}(R_{i+1}) - v_i(R_i)], with the front term
    -(R^2/ell) p(R) for the last chunk; used as an independent consistency
    check against finite differences of the position evolution.
    """
    gaps = np.diff(state.positions)
    dens = state.chunk_mass / gaps
    v = state.markers - state.pressure(dens)
    out = np.empty_like(dens)
    out[:-1] = -(dens[:-1] ** 2 / state.chunk_mass) * (v[1:] - v[:-1])
    out[-1] = -(dens[-1] ** 2 / state.chunk_mass) * float(state.pressure(dens[-1]))
    return out
