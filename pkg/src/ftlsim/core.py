"""Speed laws, flux functions, and exact piecewise-constant density calculus.

Value types shared by all particle schemes: velocity models v(rho) with
derivatives, the induced flux f = rho*v(rho), piecewise-constant densities
with closed-form mass / total-variation / pseudo-inverse / Wasserstein
functionals, piecewise-linear reference profiles, and step-in-time boundary
data.  Everything here is an immutable value; all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class DomainError(ValueError):
    """Argument outside the admissible density/speed range."""


class MassMismatchError(ValueError):
    """Wasserstein distance requested between densities of different mass."""


def _frozen_array(obj, name, value):
    arr = np.asarray(value, dtype=float).copy()
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)


# ---------------------------------------------------------------------------
# velocity models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VelocityModel:
    """Decreasing speed law on [0, rho_max] with v(0)=v_max, v(rho_max)=0."""

    v_max: float
    rho_max: float

    def __post_init__(self):
        if self.v_max <= 0 or self.rho_max <= 0:
            raise ValueError("v_max and rho_max must be positive")
        self._check_endpoints()

    def _check_endpoints(self):
        rel = max(self.v_max, 1.0)
        if abs(float(self(0.0)) - self.v_max) > 1e-12 * rel:
            raise ValueError("speed law must satisfy v(0) = v_max")
        if abs(float(self(self.rho_max))) > 1e-12 * rel:
            raise ValueError("speed law must satisfy v(rho_max) = 0")
        grid = np.linspace(0.0, self.rho_max, 257)
        v = self(grid)
        if not np.all(np.diff(v) < 0):
            raise ValueError("speed law must be strictly decreasing")

    def __call__(self, rho):
        raise NotImplementedError

    def deriv(self, rho):
        raise NotImplementedError

    def deriv2(self, rho):
        raise NotImplementedError

    def eval_clamped(self, rho):
        """v evaluated with rho clipped to [0, rho_max].

        Used inside ODE right-hand sides where trial Runge-Kutta stages may
        transiently poke just outside the admissible range; accepted states
        are kept in range by the step guards.
        """
        return self(np.clip(rho, 0.0, self.rho_max))

    def satisfies_v2(self, samples: int = 1025) -> bool:
        """True if rho -> rho*v'(rho) is non-increasing on [0, rho_max]."""
        grid = np.linspace(0.0, self.rho_max, samples)
        g = grid * self.deriv(grid)
        return bool(np.all(np.diff(g) <= 1e-12 * max(self.v_max, 1.0)))


@dataclass(frozen=True)
class Greenshields(VelocityModel):
    """Linear speed law v(rho) = v_max (1 - rho/rho_max)."""

    def __call__(self, rho):
        return self.v_max * (1.0 - np.asarray(rho, dtype=float) / self.rho_max)

    def deriv(self, rho):
        return np.broadcast_to(-self.v_max / self.rho_max, np.shape(rho)).astype(float) \
            if np.ndim(rho) else -self.v_max / self.rho_max

    def deriv2(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float)) if np.ndim(rho) else 0.0


@dataclass(frozen=True)
class PipesMunjal(VelocityModel):
    """v(rho) = v_max (1 - (rho/rho_max)^alpha), alpha > 0."""

    alpha: float = 2.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        super().__post_init__()

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float) / self.rho_max
        return self.v_max * (1.0 - r**self.alpha)

    def deriv(self, rho):
        r = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            out = -self.v_max * self.alpha * r ** (self.alpha - 1.0) / self.rho_max**self.alpha
        return out

    def deriv2(self, rho):
        r = np.asarray(rho, dtype=float)
        a = self.alpha
        with np.errstate(divide="ignore"):
            out = -self.v_max * a * (a - 1.0) * r ** (a - 2.0) / self.rho_max**a
        return out


@dataclass(frozen=True)
class GreenbergModified(VelocityModel):
    """Logarithmic law v(rho) = v_max log((rho_max+a)/(rho+a)) / log((rho_max+a)/a)."""

    alpha: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        super().__post_init__()

    def _scale(self):
        return self.v_max / math.log((self.rho_max + self.alpha) / self.alpha)

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        return self._scale() * np.log((self.rho_max + self.alpha) / (r + self.alpha))

    def deriv(self, rho):
        r = np.asarray(rho, dtype=float)
        return -self._scale() / (r + self.alpha)

    def deriv2(self, rho):
        r = np.asarray(rho, dtype=float)
        return self._scale() / (r + self.alpha) ** 2


@dataclass(frozen=True)
class UnderwoodModified(VelocityModel):
    """Exponential law v(rho) = v_max (e^-rho - e^-rho_max) / (1 - e^-rho_max)."""

    def _scale(self):
        return self.v_max / (1.0 - math.exp(-self.rho_max))

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        return self._scale() * (np.exp(-r) - math.exp(-self.rho_max))

    def deriv(self, rho):
        return -self._scale() * np.exp(-np.asarray(rho, dtype=float))

    def deriv2(self, rho):
        return self._scale() * np.exp(-np.asarray(rho, dtype=float))


@dataclass(frozen=True)
class TabulatedVelocity(VelocityModel):
    """Monotone linear interpolation of strictly decreasing (rho, v) samples."""

    rho_samples: np.ndarray = field(default=None)  # type: ignore[assignment]
    v_samples: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        _frozen_array(self, "rho_samples", self.rho_samples)
        _frozen_array(self, "v_samples", self.v_samples)
        if self.rho_samples.ndim != 1 or self.rho_samples.shape != self.v_samples.shape:
            raise ValueError("rho_samples and v_samples must be matching 1-d arrays")
        if not np.all(np.diff(self.rho_samples) > 0):
            raise ValueError("rho_samples must be strictly increasing")
        if not np.all(np.diff(self.v_samples) < 0):
            raise ValueError("tabulated speeds must be strictly decreasing")
        if self.rho_samples[0] != 0.0 or self.rho_samples[-1] != self.rho_max:
            raise ValueError("samples must cover [0, rho_max]")
        super().__post_init__()

    def __call__(self, rho):
        return np.interp(np.asarray(rho, dtype=float), self.rho_samples, self.v_samples)

    def deriv(self, rho):
        r = np.atleast_1d(np.asarray(rho, dtype=float))
        idx = np.clip(np.searchsorted(self.rho_samples, r, side="right") - 1, 0,
                      len(self.rho_samples) - 2)
        slopes = np.diff(self.v_samples) / np.diff(self.rho_samples)
        out = slopes[idx]
        return out if np.ndim(rho) else float(out[0])

    def deriv2(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float)) if np.ndim(rho) else 0.0


def velocity_eval(model: VelocityModel, rho) -> float | np.ndarray:
    """v(rho), rejecting arguments outside [0, rho_max]."""
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0.0) or np.any(r > model.rho_max * (1.0 + 1e-15)):
        raise DomainError(f"density outside [0, {model.rho_max}]")
    out = model(np.clip(r, 0.0, model.rho_max))
    return float(out) if np.ndim(rho) == 0 else out


# ---------------------------------------------------------------------------
# flux
# ---------------------------------------------------------------------------


def golden_section_maximize(fn: Callable[[float], float], a: float, b: float,
                            tol: float = 1e-12) -> float:
    """Argmax of a unimodal function on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
    return 0.5 * (a + b)


def bisect_root(fn: Callable[[float], float], a: float, b: float,
                xtol: float = 1e-14, max_iter: int = 200) -> float:
    """Root of a sign-changing function by plain bisection (deterministic)."""
    fa, fb = fn(a), fn(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise ValueError("bisect_root requires a sign change")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0 or (b - a) < xtol:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


@dataclass(frozen=True)
class FluxModel:
    """Flux f(rho) = rho*v(rho) with precomputed interior maximizer rho_hat."""

    velocity: VelocityModel
    rho_hat: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.rho_hat is None:
            if type(self.velocity) is Greenshields:
                hat = 0.5 * self.velocity.rho_max
            else:
                hat = golden_section_maximize(self._f_scalar, 0.0, self.velocity.rho_max)
            object.__setattr__(self, "rho_hat", float(hat))
        if not (0.0 < self.rho_hat < self.velocity.rho_max):
            raise ValueError("flux maximizer must be interior")

    def _f_scalar(self, rho: float) -> float:
        return rho * float(self.velocity(rho))

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        out = r * self.velocity(r)
        return float(out) if np.ndim(rho) == 0 else out

    def deriv(self, rho):
        r = np.asarray(rho, dtype=float)
        out = self.velocity(r) + r * self.velocity.deriv(r)
        return float(out) if np.ndim(rho) == 0 else out

    def max_wave_speed(self) -> float:
        grid = np.linspace(0.0, self.velocity.rho_max, 1025)
        return float(np.max(np.abs(self.deriv(grid))))

    def deriv_inverse(self, xi: float) -> float:
        """Solve f'(rho) = xi on [0, rho_max]; requires f' decreasing (concave f)."""
        lo, hi = 0.0, self.velocity.rho_max
        flo, fhi = self.deriv(lo), self.deriv(hi)
        if xi >= flo:
            return lo
        if xi <= fhi:
            return hi
        return bisect_root(lambda r: self.deriv(r) - xi, lo, hi)


def flux_eval(model: FluxModel, rho) -> float | np.ndarray:
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0.0) or np.any(r > model.velocity.rho_max * (1.0 + 1e-15)):
        raise DomainError(f"density outside [0, {model.velocity.rho_max}]")
    return model(rho)


# ---------------------------------------------------------------------------
# piecewise-constant densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseConstantDensity:
    """Nonnegative step function; implicitly zero outside [breakpoints[0], breakpoints[-1]].

    All functionals (mass, TV, pseudo-inverse, L1 and Wasserstein distances)
    are computed exactly segment by segment; there is no grid sampling
    anywhere.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        _frozen_array(self, "breakpoints", self.breakpoints)
        _frozen_array(self, "values", self.values)
        if self.breakpoints.ndim != 1 or len(self.breakpoints) < 2:
            raise ValueError("need at least two breakpoints")
        if len(self.values) != len(self.breakpoints) - 1:
            raise ValueError("values must have one entry per segment")
        if not np.all(np.diff(self.breakpoints) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(self.values < -1e-12):
            raise ValueError("density values must be nonnegative")
        if np.any(self.values < 0):
            v = np.clip(self.values, 0.0, None)
            _frozen_array(self, "values", v)

    @property
    def mass(self) -> float:
        return float(np.sum(self.values * np.diff(self.breakpoints)))

    def sup(self) -> float:
        return float(np.max(self.values)) if len(self.values) else 0.0

    def support(self) -> tuple[float, float]:
        """Hull [min supp, max supp] of the positive part."""
        pos = np.nonzero(self.values > 0)[0]
        if len(pos) == 0:
            raise ValueError("density has empty support")
        return float(self.breakpoints[pos[0]]), float(self.breakpoints[pos[-1] + 1])

    def evaluate(self, x):
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.searchsorted(self.breakpoints, xq, side="right") - 1
        inside = (idx >= 0) & (idx <= len(self.values) - 1) & (xq < self.breakpoints[-1])
        out = np.zeros_like(xq)
        out[inside] = self.values[idx[inside]]
        return out if np.ndim(x) else float(out[0])

    def cumulative_at(self, x):
        """Cumulative mass from the left edge of the support."""
        nodes = np.concatenate(([0.0], np.cumsum(self.values * np.diff(self.breakpoints))))
        return np.interp(np.asarray(x, dtype=float), self.breakpoints, nodes,
                         left=0.0, right=nodes[-1])

    def cumulative_nodes(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.values * np.diff(self.breakpoints))))

    def total_variation(self, extend_by_zero: bool = False) -> float:
        tv = float(np.sum(np.abs(np.diff(self.values))))
        if extend_by_zero:
            tv += float(self.values[0]) + float(self.values[-1])
        return tv

    def translate(self, shift: float) -> "PiecewiseConstantDensity":
        return PiecewiseConstantDensity(self.breakpoints + shift, self.values)

    def restrict(self, a: float, b: float) -> "PiecewiseConstantDensity":
        """Restriction to [a, b], padded with explicit zeros where unsupported."""
        if not a < b:
            raise ValueError("empty restriction interval")
        inner = self.breakpoints[(self.breakpoints > a) & (self.breakpoints < b)]
        bps = np.concatenate(([a], inner, [b]))
        vals = self.evaluate(bps[:-1])
        return PiecewiseConstantDensity(bps, np.atleast_1d(vals))

    def pseudo_inverse(self) -> "PseudoInverse":
        return pseudo_inverse(self)


@dataclass(frozen=True)
class PseudoInverse:
    """X(z) = inf{x : cumulative(x) > z} on [0, L): affine on mass chunks, jumps at vacuum."""

    total_mass: float
    z_starts: np.ndarray  # (k,) start mass of each mass-carrying segment
    z_ends: np.ndarray
    x_starts: np.ndarray
    x_ends: np.ndarray

    def __post_init__(self):
        for name in ("z_starts", "z_ends", "x_starts", "x_ends"):
            _frozen_array(self, name, getattr(self, name))

    def evaluate(self, z):
        zq = np.atleast_1d(np.asarray(z, dtype=float))
        idx = np.clip(np.searchsorted(self.z_starts, zq, side="right") - 1, 0,
                      len(self.z_starts) - 1)
        width = self.z_ends[idx] - self.z_starts[idx]
        frac = (zq - self.z_starts[idx]) / width
        out = self.x_starts[idx] + frac * (self.x_ends[idx] - self.x_starts[idx])
        return out if np.ndim(z) else float(out[0])


def pseudo_inverse(d: PiecewiseConstantDensity) -> PseudoInverse:
    widths = np.diff(d.breakpoints)
    seg_mass = d.values * widths
    if not np.sum(seg_mass) > 0:
        raise ValueError("pseudo-inverse requires positive mass")
    keep = seg_mass > 0
    nodes = np.concatenate(([0.0], np.cumsum(seg_mass)))
    return PseudoInverse(
        total_mass=float(nodes[-1]),
        z_starts=nodes[:-1][keep],
        z_ends=nodes[1:][keep],
        x_starts=d.breakpoints[:-1][keep],
        x_ends=d.breakpoints[1:][keep],
    )


def _integrate_abs_linear(widths, d_a, d_b):
    """Exact integral of |linear| on intervals with endpoint values d_a, d_b."""
    same = d_a * d_b >= 0.0
    out = np.empty_like(widths)
    out[same] = 0.5 * widths[same] * (np.abs(d_a[same]) + np.abs(d_b[same]))
    cross = ~same
    aa, bb = np.abs(d_a[cross]), np.abs(d_b[cross])
    out[cross] = 0.5 * widths[cross] * (aa * aa + bb * bb) / (aa + bb)
    return float(np.sum(out))


def wasserstein_scaled(d1: PiecewiseConstantDensity, d2: PiecewiseConstantDensity,
                       rel_tol: float = 1e-10) -> float:
    """Scaled 1-Wasserstein distance: the L1 norm of the pseudo-inverse difference.

    Both densities must carry the same mass L (to rel_tol relative); the
    integral over [0, L] is evaluated exactly on the merged mass grid.
    """
    X1, X2 = pseudo_inverse(d1), pseudo_inverse(d2)
    L1, L2 = X1.total_mass, X2.total_mass
    if abs(L1 - L2) > rel_tol * max(L1, L2):
        raise MassMismatchError(f"masses differ: {L1} vs {L2}")
    L = min(L1, L2)
    nodes = np.union1d(np.concatenate((X1.z_starts, X2.z_starts)), [0.0, L])
    nodes = nodes[(nodes >= 0.0) & (nodes <= L)]
    za, zb = nodes[:-1], nodes[1:]
    widths = zb - za
    ok = widths > 0
    za, zb, widths = za[ok], zb[ok], widths[ok]
    mid = 0.5 * (za + zb)

    def ends(X: PseudoInverse):
        idx = np.clip(np.searchsorted(X.z_starts, mid, side="right") - 1, 0,
                      len(X.z_starts) - 1)
        w = X.z_ends[idx] - X.z_starts[idx]
        slope = (X.x_ends[idx] - X.x_starts[idx]) / w
        return (X.x_starts[idx] + (za - X.z_starts[idx]) * slope,
                X.x_starts[idx] + (zb - X.z_starts[idx]) * slope)

    a1, b1 = ends(X1)
    a2, b2 = ends(X2)
    return _integrate_abs_linear(widths, a1 - a2, b1 - b2)


def total_variation(d: PiecewiseConstantDensity, extend_by_zero: bool = False) -> float:
    return d.total_variation(extend_by_zero)


def l1_distance(d1: PiecewiseConstantDensity, d2: PiecewiseConstantDensity,
                domain: tuple[float, float] | None = None) -> float:
    """Exact L1 distance between two step functions (zero outside support)."""
    lo = min(d1.breakpoints[0], d2.breakpoints[0])
    hi = max(d1.breakpoints[-1], d2.breakpoints[-1])
    if domain is not None:
        lo, hi = max(lo, domain[0]), min(hi, domain[1])
        if not lo < hi:
            return 0.0
    nodes = np.union1d(d1.breakpoints, d2.breakpoints)
    nodes = np.union1d(nodes[(nodes > lo) & (nodes < hi)], [lo, hi])
    starts = nodes[:-1]
    widths = np.diff(nodes)
    diff = d1.evaluate(starts) - d2.evaluate(starts)
    return float(np.sum(np.abs(diff) * widths))


# ---------------------------------------------------------------------------
# piecewise-linear reference profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseLinearFunction:
    """Continuous-per-segment linear profile with possible jumps at breakpoints."""

    x: np.ndarray        # (m+1,)
    y_start: np.ndarray  # (m,) value at the left edge of each segment
    y_end: np.ndarray    # (m,) value at the right edge

    def __post_init__(self):
        _frozen_array(self, "x", self.x)
        _frozen_array(self, "y_start", self.y_start)
        _frozen_array(self, "y_end", self.y_end)
        if not np.all(np.diff(self.x) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.y_start) != len(self.x) - 1 or len(self.y_end) != len(self.x) - 1:
            raise ValueError("segment value arrays must match breakpoints")

    def evaluate(self, x):
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.x, xq, side="right") - 1, 0, len(self.y_start) - 1)
        w = self.x[idx + 1] - self.x[idx]
        frac = (xq - self.x[idx]) / w
        out = self.y_start[idx] + frac * (self.y_end[idx] - self.y_start[idx])
        out[(xq < self.x[0]) | (xq > self.x[-1])] = 0.0
        return out if np.ndim(x) else float(out[0])

    def eval_within(self, a, b):
        """Values at a+ and b- using the segments covering (a, b); no zero cutoff."""
        mid = 0.5 * (a + b)
        idx = np.clip(np.searchsorted(self.x, mid, side="right") - 1, 0, len(self.y_start) - 1)
        w = self.x[idx + 1] - self.x[idx]
        slope = (self.y_end[idx] - self.y_start[idx]) / w
        return (self.y_start[idx] + (a - self.x[idx]) * slope,
                self.y_start[idx] + (b - self.x[idx]) * slope)


def l1_distance_to_linear(d: PiecewiseConstantDensity, g: PiecewiseLinearFunction,
                          domain: tuple[float, float]) -> float:
    """Exact L1 distance between a step density and a piecewise-linear profile."""
    lo, hi = domain
    if not lo < hi:
        return 0.0
    nodes = np.union1d(d.breakpoints, g.x)
    nodes = np.union1d(nodes[(nodes > lo) & (nodes < hi)], [lo, hi])
    a, b = nodes[:-1], nodes[1:]
    widths = b - a
    v = d.evaluate(a)
    ga, gb = g.eval_within(a, b)
    # outside g's breakpoint span the profile is zero
    outside = (b <= g.x[0]) | (a >= g.x[-1])
    ga = np.where(outside, 0.0, ga)
    gb = np.where(outside, 0.0, gb)
    return _integrate_abs_linear(widths, v - ga, v - gb)


# ---------------------------------------------------------------------------
# boundary data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryData:
    """Piecewise-constant-in-time boundary datum; right-continuous in t.

    ``values[i]`` holds on [times[i], times[i+1]); a jump placed exactly at a
    rearrangement instant therefore takes effect in the window opening there.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        _frozen_array(self, "times", self.times)
        _frozen_array(self, "values", self.values)
        if len(self.times) != len(self.values) or len(self.times) == 0:
            raise ValueError("times and values must be equal-length and nonempty")
        if self.times[0] != 0.0:
            raise ValueError("boundary data must start at t = 0")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("jump times must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("boundary densities must be nonnegative")

    @classmethod
    def constant(cls, value: float) -> "BoundaryData":
        return cls(np.array([0.0]), np.array([float(value)]))

    def value_at(self, t) -> float | np.ndarray:
        idx = np.clip(np.searchsorted(self.times, np.asarray(t, dtype=float),
                                      side="right") - 1, 0, len(self.values) - 1)
        out = self.values[idx]
        return float(out) if np.ndim(t) == 0 else out

    def minimum(self) -> float:
        return float(np.min(self.values))

    def maximum(self) -> float:
        return float(np.max(self.values))

    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values))))
