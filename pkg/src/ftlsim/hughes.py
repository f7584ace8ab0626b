"""Two-sided particle scheme for corridor evacuation with a moving turning point.

The turning point, defined by equality of the cost integrals toward the two
exits, splits the particles into a left-moving and a right-moving group.  The
chunk right of the last left-mover is reported as vacuum (a deliberate one-
chunk mass bookkeeping error).  The turning point is recomputed at every
accepted step; when it crosses a particle position, that particle (and any
particle it skipped because of the vacuum-chunk offset) flips direction and
the integration restarts at the located event time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atomize import HughesAtomization
from .core import PiecewiseConstantDensity, VelocityModel, _frozen_array
from .hughes_cost import CostModel, turning_point
from .integrator import EventSpec, IntegratorConfig, integrate
from .lwr import StateCorruptionError


class TurningPointCollision(RuntimeError):
    """Turning point reached a particle while direction switching is disabled."""

    def __init__(self, t: float, particle: int):
        super().__init__(f"turning point collided with particle {particle} at t={t}")
        self.t = t
        self.particle = particle


@dataclass(frozen=True)
class HughesState:
    """Positions plus the split index: particles 0..split move left, the rest right."""

    t: float
    positions: np.ndarray
    chunk_mass: float
    model: VelocityModel
    cost: CostModel
    split_index: int

    def __post_init__(self):
        _frozen_array(self, "positions", self.positions)
        if np.any(np.diff(self.positions) <= 0):
            raise StateCorruptionError("positions must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.positions) - 1


def chunk_values(positions: np.ndarray, chunk_mass: float, split_index: int) -> np.ndarray:
    """Chunk densities with the turning-point chunk forced to vacuum."""
    vals = chunk_mass / np.diff(positions)
    if 0 <= split_index < len(vals):
        vals[split_index] = 0.0
    return vals


def corridor_density(positions: np.ndarray, chunk_mass: float,
                     split_index: int) -> PiecewiseConstantDensity:
    return PiecewiseConstantDensity(positions, chunk_values(positions, chunk_mass,
                                                            split_index))


def compute_turning_point(positions: np.ndarray, chunk_mass: float, split_index: int,
                          cost: CostModel) -> tuple[float, float]:
    return turning_point(corridor_density(positions, chunk_mass, split_index), cost)


def slot_of(xi: float, positions: np.ndarray) -> int:
    """Index j with positions[j] <= xi < positions[j+1]; -1 or n outside the hull."""
    n = len(positions) - 1
    if xi < positions[0]:
        return -1
    if xi >= positions[-1]:
        return n
    return int(np.searchsorted(positions, xi, side="right") - 1)


def _rhs_array(positions: np.ndarray, chunk_mass: float, model: VelocityModel,
               split_index: int) -> np.ndarray:
    n = len(positions) - 1
    gaps = np.diff(positions)
    speeds = model.eval_clamped(chunk_mass / gaps)
    out = np.empty(n + 1)
    out[0] = -model.v_max
    out[-1] = model.v_max
    i0 = min(max(split_index, -1), n)
    if i0 >= 1:
        out[1 : i0 + 1] = -speeds[: i0]          # left group reads the gap behind
    if i0 <= n - 2:
        out[i0 + 1 : n] = speeds[i0 + 1 :]       # right group reads the gap ahead
    return out


def rhs_hughes(state: HughesState) -> np.ndarray:
    """Backward speed law left of the split, forward right of it, +-v_max at the ends."""
    if np.any(np.diff(state.positions) <= 0):
        raise StateCorruptionError("non-increasing positions")
    return _rhs_array(state.positions, state.chunk_mass, state.model, state.split_index)


@dataclass
class SwitchEvent:
    t: float
    particle: int
    new_direction: int       # -1: joined the left group, +1: joined the right group
    turning_point_before: float
    turning_point_after: float


@dataclass
class HughesTrajectory:
    """Sampled evacuation run with the turning-point track and switch log."""

    times: np.ndarray
    positions: np.ndarray
    split_indices: np.ndarray
    turning_points: np.ndarray
    chunk_mass: float
    model: VelocityModel
    cost: CostModel
    events: list[SwitchEvent]
    max_balance_residual: float
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def n(self) -> int:
        return self.positions.shape[1] - 1

    def density_at(self, k: int) -> PiecewiseConstantDensity:
        return corridor_density(self.positions[k], self.chunk_mass,
                                int(self.split_indices[k]))

    def corridor_mass_at(self, k: int) -> float:
        """Mass of the reported density inside (-1, 1)."""
        return self.density_at(k).restrict(-1.0, 1.0).mass

    def mass_accounting_at(self, k: int) -> dict:
        """Left/right of the turning point plus the vacuum-chunk bookkeeping error."""
        d = self.density_at(k)
        xi = float(self.turning_points[k])
        lo, hi = d.breakpoints[0], d.breakpoints[-1]
        left = d.restrict(min(lo, xi) - 1.0, xi).mass if xi > lo else 0.0
        right = d.restrict(xi, max(hi, xi) + 1.0).mass if xi < hi else 0.0
        split = int(self.split_indices[k])
        vacuum_error = self.chunk_mass if 0 <= split <= self.n - 1 else 0.0
        return {
            "mass_left_of_turning_point": left,
            "mass_right_of_turning_point": right,
            "vacuum_chunk_error": vacuum_error,
            "total_chunks": self.chunk_mass * self.n,
        }


def evolve_hughes(init: HughesAtomization, model: VelocityModel, cost: CostModel,
                  t_final: float, cfg: IntegratorConfig = IntegratorConfig(),
                  switching: bool = True, n_samples: int = 100) -> HughesTrajectory:
    """Integrate the two-sided system, flipping particle directions at crossings.

    The turning point is recomputed from the current density at every
    accepted step (the balance is solved exactly, residual at roundoff) and
    watched against the two particles bracketing it.  Because zeroing the
    vacuum chunk offsets the balance root by up to one chunk, the bracketing
    slot can differ from the direction split; a crossing therefore flips
    every left-mover right of the crossed position (downward crossings) or
    every right-mover left of it (upward crossings), which is a single
    particle in the generic case.  With switching off the first crossing
    aborts the run with a TurningPointCollision.
    """
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    ell = init.chunk_mass
    n = init.n
    gaps0 = np.diff(init.positions)
    sup0 = float(np.max(ell / gaps0))
    gap_floor = (ell / sup0) * (1.0 - 2.5e-10)

    grid = np.linspace(0.0, t_final, n_samples)
    state_pos = np.array(init.positions)
    split = init.split_index
    t = 0.0
    residual_max = 0.0
    events: list[SwitchEvent] = []
    sample_ts: list[float] = []
    sample_ys: list[np.ndarray] = []
    sample_split: list[int] = []
    n_steps = n_rejected = 0
    h_carry = None

    def xi_of(y, i0):
        nonlocal residual_max
        xi, res = compute_turning_point(y, ell, i0, cost)
        residual_max = max(residual_max, abs(res))
        return xi

    while t < t_final:
        i0 = split
        slot = slot_of(xi_of(state_pos, i0), state_pos)

        def rhs(tt, y, _i0=i0):
            return _rhs_array(y, ell, model, _i0)

        def ordered(tt, y):
            return bool(np.min(np.diff(y)) >= gap_floor)

        ev = []
        ev_kinds = []
        if 0 <= slot <= n:
            ev.append(EventSpec(lambda tt, y, _i0=i0, _j=slot: xi_of(y, _i0) - y[_j],
                                direction=-1, terminal=True))
            ev_kinds.append(("down", slot))
        if -1 <= slot <= n - 1:
            ev.append(EventSpec(lambda tt, y, _i0=i0, _j=slot: y[_j + 1] - xi_of(y, _i0),
                                direction=-1, terminal=True))
            ev_kinds.append(("up", slot + 1))

        window_samples = grid[(grid > t) & (grid <= t_final)] if t > 0 else grid
        wcfg = cfg if h_carry is None else \
            IntegratorConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.safety,
                             cfg.event_tol, h_carry, cfg.max_steps)
        sol = integrate(rhs, state_pos, (t, t_final), wcfg, events=ev,
                        guards=(ordered,), sample_times=window_samples, dense=False)
        h_carry = sol.last_step
        n_steps += sol.n_steps
        n_rejected += sol.n_rejected
        sample_ts.extend(sol.sample_ts.tolist())
        sample_ys.extend(sol.sample_ys)
        sample_split.extend([i0] * len(sol.sample_ts))

        if sol.status == "event":
            rec = sol.events[-1]
            kind, particle = ev_kinds[rec.index]
            if not switching:
                raise TurningPointCollision(rec.t, particle)
            if rec.t <= t:
                raise RuntimeError(f"direction switching stalled at t={t}")
            t = rec.t
            state_pos = rec.y
            xi_before = xi_of(state_pos, i0)
            if kind == "down":
                new_split = min(i0, particle - 1)
                flipped = range(new_split + 1, i0 + 1)
                new_dir = +1
            else:
                new_split = max(i0, particle)
                flipped = range(i0 + 1, new_split + 1)
                new_dir = -1
            split = max(-1, min(new_split, n))
            xi_after = xi_of(state_pos, split)
            for p in flipped:
                events.append(SwitchEvent(t, p, new_dir, xi_before, xi_after))
        else:
            t = sol.t_end
            state_pos = sol.y_end

    sample_ts_arr = np.array(sample_ts)
    sample_ys_arr = np.array(sample_ys)
    split_arr = np.array(sample_split, dtype=int)
    xis = np.array([xi_of(sample_ys_arr[k], split_arr[k])
                    for k in range(len(sample_ts_arr))])
    return HughesTrajectory(sample_ts_arr, sample_ys_arr, split_arr, xis, ell, model,
                            cost, events, residual_max, n_steps, n_rejected)
