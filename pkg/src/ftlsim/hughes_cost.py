"""Running-cost model and turning-point balance for the two-sided evacuation scheme."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    PiecewiseConstantDensity,
    VelocityModel,
    golden_section_maximize,
)


@dataclass(frozen=True)
class CostModel:
    """Running cost c(rho) with c(0)=1, c' >= 0, c'' > 0, finite up to r_cap."""

    c: Callable
    dc: Callable
    d2c: Callable
    r_cap: float

    def __post_init__(self):
        if not self.r_cap > 0:
            raise ValueError("r_cap must be positive")
        if abs(float(self.c(0.0)) - 1.0) > 1e-9:
            raise ValueError("cost must be normalized to c(0) = 1")
        grid = np.linspace(0.0, self.r_cap * (1.0 - 1e-9), 257)
        cv = np.asarray(self.c(grid), dtype=float)
        if not np.all(np.isfinite(cv)):
            raise ValueError("cost must be finite on [0, r_cap)")
        if np.any(np.diff(cv) < -1e-12):
            raise ValueError("cost must be nondecreasing")
        if np.any(np.asarray(self.d2c(grid), dtype=float) <= 0):
            raise ValueError("cost must be strictly convex")


def reciprocal_velocity_cost(model: VelocityModel, r_cap: float | None = None) -> CostModel:
    """The usual cost 1/v(rho); requires v_max = 1 so that c(0) = 1."""
    if abs(model.v_max - 1.0) > 1e-12:
        raise ValueError("reciprocal cost needs unit free speed to satisfy c(0) = 1")

    def c(rho):
        return 1.0 / model(rho)

    def dc(rho):
        v = model(rho)
        return -model.deriv(rho) / v**2

    def d2c(rho):
        v = model(rho)
        dv = model.deriv(rho)
        return (2.0 * dv**2 - v * model.deriv2(rho)) / v**3

    return CostModel(c, dc, d2c, model.rho_max if r_cap is None else r_cap)


def turning_point(density: PiecewiseConstantDensity, cost: CostModel,
                  domain: tuple[float, float] = (-1.0, 1.0)) -> tuple[float, float]:
    """Root of G(xi) = int_{-1}^{xi} c(rho) - int_{xi}^{1} c(rho) on the corridor.

    G is piecewise linear and strictly increasing (c >= 1), so the root is
    solved exactly on the segment where G changes sign.  Returns (xi,
    residual); the residual is the recomputed G(xi), at roundoff level.
    """
    restricted = density.restrict(domain[0], domain[1])
    costs = np.asarray(cost.c(restricted.values), dtype=float)
    widths = np.diff(restricted.breakpoints)
    nodes = np.concatenate(([0.0], np.cumsum(costs * widths)))
    total = nodes[-1]
    g_nodes = 2.0 * nodes - total
    i = int(np.searchsorted(g_nodes, 0.0, side="left"))
    i = min(max(i, 1), len(g_nodes) - 1)
    seg = i - 1
    xi = restricted.breakpoints[seg] - g_nodes[seg] / (2.0 * costs[seg])
    residual = g_nodes[seg] + 2.0 * costs[seg] * (xi - restricted.breakpoints[seg])
    return float(xi), float(residual)


@dataclass(frozen=True)
class SmallnessReport:
    """Outcome of the well-separation criterion for the evacuation model."""

    satisfied: bool
    sup_density: float
    lipschitz_const: float   # max of c''(rho)*rho on [0, R]
    boundary_const: float    # c'(R)*R
    lhs: float
    rhs: float


def smallness_check(density: PiecewiseConstantDensity, model: VelocityModel,
                    cost: CostModel) -> SmallnessReport:
    """Evaluate (v_max/2) [L*TV(rho) + 3C] < v(R) with L, C the cost constants."""
    R = density.sup()
    if R >= model.rho_max:
        raise ValueError("criterion needs sup density strictly below rho_max")
    if R > cost.r_cap:
        raise ValueError("cost not finite at the sup density")

    def neg_g(rho):
        return float(cost.d2c(rho)) * rho

    grid = np.linspace(0.0, R, 1025)
    gv = np.asarray(cost.d2c(grid), dtype=float) * grid
    k = int(np.argmax(gv))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    arg = golden_section_maximize(neg_g, lo, hi) if hi > lo else grid[k]
    lip = max(float(gv[k]), neg_g(arg))

    bnd = float(cost.dc(R)) * R
    tv = density.total_variation(extend_by_zero=True)
    lhs = 0.5 * model.v_max * (lip * tv + 3.0 * bnd)
    rhs = float(model(R))
    return SmallnessReport(bool(lhs < rhs), R, lip, bnd, lhs, rhs)
