"""Split initial densities into equal-mass particle chunks.

Each scheme gets its own atomization: hull-anchored positions for the Cauchy
problem, queue-extended positions for the Dirichlet problem, positions plus
frozen per-chunk markers for the second-order model, and positions plus the
initial turning point for the two-sided evacuation scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PiecewiseConstantDensity, VelocityModel, _frozen_array
from .hughes_cost import CostModel, turning_point


class AtomizationError(ValueError):
    pass


@dataclass(frozen=True)
class Atomization:
    """n+1 hull-anchored positions; each inter-particle chunk carries mass L/n."""

    positions: np.ndarray
    chunk_mass: float

    def __post_init__(self):
        _frozen_array(self, "positions", self.positions)

    @property
    def n(self) -> int:
        return len(self.positions) - 1


@dataclass(frozen=True)
class IbvpAtomization:
    """Interior positions on [0, 1] plus N queuing particles in (-inf, 0).

    ``positions[0]`` is particle -N; ``positions[N]`` is particle 0 at x=0;
    ``positions[N + n]`` is particle n at x=1.  The leftmost queue chunk
    carries the remainder mass q_n, every other chunk carries chunk_mass.
    """

    positions: np.ndarray
    n: int
    n_queue: int
    chunk_mass: float
    queue_remainder: float
    queue_total: float

    def __post_init__(self):
        _frozen_array(self, "positions", self.positions)

    def chunk_masses(self) -> np.ndarray:
        out = np.full(self.n + self.n_queue, self.chunk_mass)
        out[0] = self.queue_remainder
        return out


@dataclass(frozen=True)
class ArzAtomization:
    """Hull-anchored positions plus one frozen marker per chunk."""

    positions: np.ndarray
    chunk_mass: float
    markers: np.ndarray

    def __post_init__(self):
        _frozen_array(self, "positions", self.positions)
        _frozen_array(self, "markers", self.markers)

    @property
    def n(self) -> int:
        return len(self.positions) - 1


@dataclass(frozen=True)
class HughesAtomization:
    """Hull-anchored positions, initial turning point, and split index."""

    positions: np.ndarray
    chunk_mass: float
    turning_point: float
    split_index: int

    def __post_init__(self):
        _frozen_array(self, "positions", self.positions)

    @property
    def n(self) -> int:
        return len(self.positions) - 1


def _invert_cumulative(density: PiecewiseConstantDensity, targets: np.ndarray) -> np.ndarray:
    """Exact inversion of the piecewise-linear cumulative mass map.

    A target landing exactly on a flat (vacuum) stretch resolves to the far
    end of the gap; interior targets are solved analytically per segment.
    """
    nodes = density.cumulative_nodes()
    bps = density.breakpoints
    vals = density.values
    idx = np.searchsorted(nodes, targets, side="right") - 1
    idx = np.clip(idx, 0, len(vals) - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = bps[idx] + (targets - nodes[idx]) / vals[idx]
    exact = targets == nodes[idx]
    out[exact] = bps[idx][exact]
    if np.any(~np.isfinite(out)):
        raise AtomizationError("cumulative inversion hit a vacuum segment interior")
    return out


def atomize_compact(density: PiecewiseConstantDensity, n: int) -> Atomization:
    """Hull-anchored equal-mass split: x_0 = min supp, x_n = max supp."""
    if n < 3:
        raise AtomizationError("need at least 3 chunks")
    mass = density.mass
    if not mass > 0:
        raise AtomizationError("initial density has zero mass")
    lo, hi = density.support()
    ell = mass / n
    interior = _invert_cumulative(density, ell * np.arange(1, n))
    positions = np.concatenate(([lo], interior, [hi]))
    if not np.all(np.diff(positions) > 0):
        raise AtomizationError("atomization produced non-increasing positions")
    return Atomization(positions, ell)


def atomize_ibvp(density: PiecewiseConstantDensity, rho0_initial: float, n: int,
                 t_final: float, model: VelocityModel) -> IbvpAtomization:
    """Mass-split the interior datum on (0,1) and prepend the particle queue.

    The queue carries total mass Q = 2 T v_max rho_max in N = ceil(Q/ell)
    particles spaced ell/rho0; the leftmost chunk carries the remainder
    q = Q - ell (N-1) in (0, ell].
    """
    if not rho0_initial > 0:
        raise AtomizationError("left boundary datum at t=0 must be positive")
    lo, hi = density.breakpoints[0], density.breakpoints[-1]
    if abs(lo) > 1e-12 or abs(hi - 1.0) > 1e-12:
        raise AtomizationError("interior datum must cover exactly (0, 1)")
    if density.values.min() <= 0:
        raise AtomizationError("interior datum must be bounded away from zero")
    mass = density.mass
    if not mass > 0:
        raise AtomizationError("initial density has zero mass")
    ell = mass / n
    interior = _invert_cumulative(density, ell * np.arange(1, n))
    inner = np.concatenate(([0.0], interior, [1.0]))

    queue_total = 2.0 * t_final * model.v_max * model.rho_max
    n_queue = int(np.ceil(queue_total / ell))
    remainder = queue_total - ell * (n_queue - 1)
    spacing = ell / rho0_initial
    queue = np.arange(-n_queue + 1, 0) * spacing
    leftmost = queue[0] - remainder / rho0_initial if n_queue > 1 else -remainder / rho0_initial
    positions = np.concatenate(([leftmost], queue, inner))
    return IbvpAtomization(positions, n=n, n_queue=n_queue, chunk_mass=ell,
                           queue_remainder=remainder, queue_total=queue_total)


def _piecewise_ess_sup(breakpoints: np.ndarray, values: np.ndarray,
                       a: float, b: float) -> float:
    """Essential supremum of a step function over [a, b] (positive-measure overlap)."""
    lo = np.maximum(breakpoints[:-1], a)
    hi = np.minimum(breakpoints[1:], b)
    overlap = hi > lo
    if not np.any(overlap):
        raise AtomizationError("marker function does not cover a chunk interval")
    return float(np.max(values[overlap]))


def atomize_arz(density: PiecewiseConstantDensity, marker_breakpoints, marker_values,
                n: int, allow_negative_markers: bool = False) -> ArzAtomization:
    """Positions as atomize_compact; marker_i = ess-sup of the marker field per chunk."""
    base = atomize_compact(density, n)
    mb = np.asarray(marker_breakpoints, dtype=float)
    mv = np.asarray(marker_values, dtype=float)
    if len(mb) != len(mv) + 1 or not np.all(np.diff(mb) > 0):
        raise AtomizationError("invalid marker step function")
    lo, hi = density.support()
    if mb[0] > lo + 1e-12 or mb[-1] < hi - 1e-12:
        raise AtomizationError("marker field must cover the support hull")
    markers = np.array([
        _piecewise_ess_sup(mb, mv, base.positions[i], base.positions[i + 1])
        for i in range(base.n)
    ])
    if not allow_negative_markers and np.any(markers < 0):
        raise AtomizationError(
            "negative marker on the support; pass allow_negative_markers to proceed")
    return ArzAtomization(base.positions, base.chunk_mass, markers)


def atomize_hughes(density: PiecewiseConstantDensity, n: int,
                   cost: CostModel) -> HughesAtomization:
    """Positions as atomize_compact plus the initial turning point and split index.

    If the balance root collides with a particle position, that position is
    nudged by 1e-9*ell toward the lighter neighbouring chunk so the turning
    point falls strictly between two particles.
    """
    lo, hi = density.support()
    if lo < -1.0 or hi > 1.0:
        raise AtomizationError("datum must be supported in (-1, 1)")
    base = atomize_compact(density, n)
    positions = np.array(base.positions)
    ell = base.chunk_mass
    discrete = PiecewiseConstantDensity(positions, ell / np.diff(positions))
    xi, _ = turning_point(discrete, cost)

    hit = np.nonzero(positions == xi)[0]
    if len(hit):
        i = int(hit[0])
        if 0 < i < n:
            left = ell / (positions[i] - positions[i - 1])
            right = ell / (positions[i + 1] - positions[i])
            step = 1e-9 * ell * (1.0 if right < left else -1.0)
        else:
            step = 1e-9 * ell * (1.0 if i == 0 else -1.0)
        positions[i] += step
        discrete = PiecewiseConstantDensity(positions, ell / np.diff(positions))
        xi, _ = turning_point(discrete, cost)

    if xi <= positions[0]:
        split = -1
    elif xi >= positions[-1]:
        split = n
    else:
        split = int(np.searchsorted(positions, xi, side="right") - 1)
    return HughesAtomization(positions, ell, xi, split)
