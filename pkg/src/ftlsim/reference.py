"""Ground-truth solvers: Godunov finite volumes, exact Riemann fans, benchmarks.

The Godunov scheme is first order with the exact Riemann flux and serves as
the entropy-consistent comparator; the self-similar Lax solutions provide
closed-form references for single jumps and non-interacting compositions of
jumps.  exact_ptd is the closed-form final state of the staged boundary-data
benchmark (preset ibvp-ptd).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BoundaryData,
    DomainError,
    FluxModel,
    Greenshields,
    PiecewiseConstantDensity,
    PiecewiseLinearFunction,
)
from .hughes_cost import CostModel, turning_point


# ---------------------------------------------------------------------------
# exact Riemann solutions
# ---------------------------------------------------------------------------


def godunov_flux(rho_l: float, rho_r: float, flux: FluxModel) -> float:
    """Exact Godunov numerical flux for a unimodal concave flux function."""
    rho_max = flux.velocity.rho_max
    if not (0.0 <= rho_l <= rho_max and 0.0 <= rho_r <= rho_max):
        raise DomainError("states outside [0, rho_max]")
    hat = flux.rho_hat
    if rho_l <= rho_r:
        return min(flux(rho_l), flux(rho_r))
    if rho_r <= hat <= rho_l:
        return flux(hat)
    return flux(rho_l) if rho_l < hat else flux(rho_r)


@dataclass(frozen=True)
class RiemannSolution:
    """Self-similar Lax solution of a single jump: shock, rarefaction, or constant."""

    rho_l: float
    rho_r: float
    flux: FluxModel
    kind: str          # "constant" | "shock" | "rarefaction"
    speed: float       # shock speed (Rankine-Hugoniot); 0 otherwise
    edge_lo: float     # rarefaction fan edge speeds
    edge_hi: float

    def value(self, xi):
        """Density at similarity coordinate xi = x/t."""
        x = np.atleast_1d(np.asarray(xi, dtype=float))
        if self.kind == "constant":
            out = np.full_like(x, self.rho_l)
        elif self.kind == "shock":
            out = np.where(x < self.speed, self.rho_l, self.rho_r)
        else:
            out = np.empty_like(x)
            lo, hi = self.edge_lo, self.edge_hi
            out[x <= lo] = self.rho_l
            out[x >= hi] = self.rho_r
            mid = (x > lo) & (x < hi)
            if isinstance(self.flux.velocity, Greenshields):
                vm, rm = self.flux.velocity.v_max, self.flux.velocity.rho_max
                out[mid] = 0.5 * rm * (1.0 - x[mid] / vm)
            else:
                out[mid] = [self.flux.deriv_inverse(float(s)) for s in x[mid]]
        return out if np.ndim(xi) else float(out[0])

    def wave_span(self) -> tuple[float, float]:
        """Smallest and largest wave speeds of the fan."""
        if self.kind == "constant":
            return 0.0, 0.0
        if self.kind == "shock":
            return self.speed, self.speed
        return self.edge_lo, self.edge_hi

    def snapshot(self, t: float, center: float = 0.0, n_fan_nodes: int = 257
                 ) -> PiecewiseLinearFunction:
        """Profile at time t > 0 on x, exact for the linear speed law."""
        if not t > 0:
            raise ValueError("snapshot requires t > 0")
        big = 1e30
        if self.kind == "constant":
            return PiecewiseLinearFunction(
                np.array([-big, big]), np.array([self.rho_l]), np.array([self.rho_l]))
        if self.kind == "shock":
            s = center + self.speed * t
            return PiecewiseLinearFunction(
                np.array([-big, s, big]),
                np.array([self.rho_l, self.rho_r]),
                np.array([self.rho_l, self.rho_r]))
        lo, hi = center + self.edge_lo * t, center + self.edge_hi * t
        if isinstance(self.flux.velocity, Greenshields):
            xs = np.array([-big, lo, hi, big])
            fan = self.value(np.array([self.edge_lo, self.edge_hi]))
            return PiecewiseLinearFunction(
                xs,
                np.array([self.rho_l, fan[0], self.rho_r]),
                np.array([self.rho_l, fan[1], self.rho_r]))
        # generic model: dense piecewise-linear sampling of the fan profile
        xi = np.linspace(self.edge_lo, self.edge_hi, n_fan_nodes)
        vals = self.value(xi)
        xs = np.concatenate(([-big], center + xi * t, [big]))
        y_start = np.concatenate(([self.rho_l], vals[:-1], [self.rho_r]))
        y_end = np.concatenate(([self.rho_l], vals[1:], [self.rho_r]))
        return PiecewiseLinearFunction(xs, y_start, y_end)


def lax_riemann(rho_l: float, rho_r: float, flux: FluxModel) -> RiemannSolution:
    """Entropy solution of the single-jump problem for a concave flux.

    Upward jumps are shocks at Rankine-Hugoniot speed; downward jumps open a
    rarefaction between the characteristic speeds of the two states.
    """
    rho_max = flux.velocity.rho_max
    if not (0.0 <= rho_l <= rho_max and 0.0 <= rho_r <= rho_max):
        raise DomainError("states outside [0, rho_max]")
    if rho_l == rho_r:
        return RiemannSolution(rho_l, rho_r, flux, "constant", 0.0, 0.0, 0.0)
    if rho_l < rho_r:
        speed = (flux(rho_r) - flux(rho_l)) / (rho_r - rho_l)
        return RiemannSolution(rho_l, rho_r, flux, "shock", float(speed), 0.0, 0.0)
    return RiemannSolution(rho_l, rho_r, flux, "rarefaction", 0.0,
                           float(flux.deriv(rho_l)), float(flux.deriv(rho_r)))


def riemann_composition(datum: PiecewiseConstantDensity, flux: FluxModel,
                        t: float) -> PiecewiseLinearFunction:
    """Exact solution at time t of a multi-jump datum while fans do not interact.

    The datum is extended by zero outside its breakpoints, so the support
    edges spawn waves too.  Raises if any two neighbouring fans overlap by t.
    """
    if not t > 0:
        raise ValueError("composition requires t > 0")
    bps = datum.breakpoints
    vals = np.concatenate(([0.0], datum.values, [0.0]))
    fans = []
    for j in range(len(bps)):
        a, b = vals[j], vals[j + 1]
        if a != b:
            fans.append((float(bps[j]), lax_riemann(a, b, flux)))
    if not fans:
        raise ValueError("datum has no jumps")
    big = 1e30
    xs = [-big]
    y_start: list[float] = []
    y_end: list[float] = []

    def push(x_right, a, b):
        if x_right > xs[-1]:
            xs.append(float(x_right))
            y_start.append(float(a))
            y_end.append(float(b))

    prev_hi = -big
    for center, fan in fans:
        lo_s, hi_s = fan.wave_span()
        lo, hi = center + lo_s * t, center + hi_s * t
        if lo < prev_hi - 1e-13 * max(1.0, abs(prev_hi)):
            raise ValueError(f"waves interact before t={t}")
        push(lo, fan.rho_l, fan.rho_l)
        if fan.kind == "rarefaction":
            snap = fan.snapshot(t, center=center)
            inner = snap.x[(snap.x > lo) & (snap.x < hi)]
            nodes = np.concatenate(([lo], inner, [hi]))
            for kk in range(len(nodes) - 1):
                a_val, b_val = snap.eval_within(nodes[kk], nodes[kk + 1])
                push(nodes[kk + 1], a_val, b_val)
        prev_hi = max(prev_hi, hi)
    push(big, fans[-1][1].rho_r, fans[-1][1].rho_r)
    return PiecewiseLinearFunction(np.array(xs), np.array(y_start), np.array(y_end))


PTD_SHOCK_POSITION = 0.2 * (9.0 - 2.0 * math.sqrt(5.0))


def exact_ptd(x):
    """Closed-form density at time 2 for the staged boundary-data benchmark."""
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xq < -1e-12) or np.any(xq > 1.0 + 1e-12):
        raise DomainError("benchmark solution defined on [0, 1]")
    xq = np.clip(xq, 0.0, 1.0)
    out = np.where(xq <= 0.8, 0.5 * (1.0 - xq),
                   np.where(xq <= PTD_SHOCK_POSITION, 0.1, 0.5 * (2.0 - xq)))
    return out if np.ndim(x) else float(out[0])


def exact_ptd_profile() -> PiecewiseLinearFunction:
    s = PTD_SHOCK_POSITION
    xs = np.array([0.0, 0.8, s, 1.0])
    return PiecewiseLinearFunction(
        xs,
        np.array([0.5, 0.1, 0.5 * (2.0 - s)]),
        np.array([0.1, 0.1, 0.5]))


# ---------------------------------------------------------------------------
# Godunov finite-volume solvers
# ---------------------------------------------------------------------------


@dataclass
class GodunovResult:
    edges: np.ndarray
    cells: np.ndarray
    t: float
    n_steps: int

    def density(self) -> PiecewiseConstantDensity:
        return PiecewiseConstantDensity(self.edges, np.clip(self.cells, 0.0, None))


def _interface_fluxes(left: np.ndarray, right: np.ndarray, flux: FluxModel) -> np.ndarray:
    """Vectorized exact Godunov flux over state pairs."""
    hat = flux.rho_hat
    f_l = flux(left)
    f_r = flux(right)
    out = np.where(left <= right, np.minimum(f_l, f_r),
                   np.where(left < hat, f_l, np.where(right > hat, f_r, flux(hat))))
    return out


def godunov_lwr(flux: FluxModel, edges: np.ndarray, cells0: np.ndarray, t_final: float,
                boundary: str = "zero",
                boundary_left: BoundaryData | None = None,
                boundary_right: BoundaryData | None = None,
                cfl: float = 0.9) -> GodunovResult:
    """First-order Godunov update on a uniform grid.

    boundary "zero": ghost cells hold vacuum (perfect outflow/exits).
    boundary "dirichlet": ghost cells carry the time-sampled boundary data, so
    the boundary flux realizes the admissible trace automatically.
    """
    edges = np.asarray(edges, dtype=float)
    dx = float(edges[1] - edges[0])
    if not np.allclose(np.diff(edges), dx):
        raise ValueError("grid must be uniform")
    cells = np.array(cells0, dtype=float)
    if boundary == "dirichlet" and (boundary_left is None or boundary_right is None):
        raise ValueError("dirichlet mode needs both boundary data")
    speed = flux.max_wave_speed()
    dt = cfl * dx / speed
    n_steps = max(1, int(math.ceil(t_final / dt)))
    dt = t_final / n_steps
    if dt * speed / dx > 1.0 + 1e-12:
        raise RuntimeError("CFL violation")
    t = 0.0
    for _ in range(n_steps):
        if boundary == "zero":
            gl = gr = 0.0
        else:
            gl = boundary_left.value_at(t)
            gr = boundary_right.value_at(t)
        ext = np.concatenate(([gl], cells, [gr]))
        fluxes = _interface_fluxes(ext[:-1], ext[1:], flux)
        cells = cells - (dt / dx) * (fluxes[1:] - fluxes[:-1])
        t += dt
    return GodunovResult(edges, cells, t, n_steps)


def godunov_hughes(flux: FluxModel, cost: CostModel, edges: np.ndarray,
                   cells0: np.ndarray, t_final: float, cfl: float = 0.9) -> GodunovResult:
    """Two-sided Godunov comparator for the evacuation model on (-1, 1).

    Each step recomputes the turning point from the cell averages with the
    same balance solve as the particle scheme; interfaces left of it use the
    mirrored (leftward) flux, interfaces right of it the standard one.  Ghost
    cells hold vacuum to mimic perfect exits.
    """
    edges = np.asarray(edges, dtype=float)
    dx = float(edges[1] - edges[0])
    cells = np.array(cells0, dtype=float)
    speed = flux.max_wave_speed()
    dt = cfl * dx / speed
    n_steps = max(1, int(math.ceil(t_final / dt)))
    dt = t_final / n_steps
    for _ in range(n_steps):
        xi, _ = turning_point(PiecewiseConstantDensity(edges, np.clip(cells, 0.0, None)),
                              cost)
        ext = np.concatenate(([0.0], cells, [0.0]))
        right_dir = edges >= xi
        f_fwd = _interface_fluxes(ext[:-1], ext[1:], flux)
        f_bwd = -_interface_fluxes(ext[1:], ext[:-1], flux)
        fluxes = np.where(right_dir, f_fwd, f_bwd)
        cells = cells - (dt / dx) * (fluxes[1:] - fluxes[:-1])
    return GodunovResult(edges, cells, t_final, n_steps)
