"""Invariant checkers and error metrics over sampled trajectories.

Every checker is a pure function of its trajectory and returns an
InvariantEntry with the worst violation, where it happened, and a pass flag
against the stated tolerance; reports serialize to plain dicts for the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arz import ArzTrajectory
from .core import (
    PiecewiseConstantDensity,
    PiecewiseLinearFunction,
    l1_distance,
    l1_distance_to_linear,
    wasserstein_scaled,
)
from .hughes import HughesTrajectory
from .ibvp import IbvpTrajectory
from .lwr import CauchyTrajectory


@dataclass
class InvariantEntry:
    name: str
    passed: bool
    tolerance: float
    worst: float
    worst_time: float | None = None
    worst_index: int | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "tolerance": self.tolerance,
            "worst": self.worst,
            "worst_time": self.worst_time,
            "worst_index": self.worst_index,
            "note": self.note,
        }


@dataclass
class InvariantReport:
    entries: list[InvariantEntry] = field(default_factory=list)

    def add(self, entry: InvariantEntry) -> None:
        self.entries.append(entry)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "entries": [e.to_dict() for e in self.entries]}

    def __getitem__(self, name: str) -> InvariantEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def _worst_gap_entry(name, times, gap_matrix, floors, slack=1e-9):
    """Lower-bound check: every gap >= floor (1 - slack)."""
    margin = gap_matrix - floors * (1.0 - slack)
    k, i = np.unravel_index(np.argmin(margin), margin.shape)
    worst = float(-margin[k, i])
    return InvariantEntry(name, worst <= 0.0, 0.0, max(worst, 0.0),
                          float(times[k]), int(i))


def check_max_principle(traj, sup_density: float | None = None) -> InvariantReport:
    """Gap bounds: lower for the line schemes, two-sided for the Dirichlet scheme."""
    report = InvariantReport()
    if isinstance(traj, CauchyTrajectory):
        r = sup_density or traj.initial_sup_density
        gaps = np.diff(traj.positions, axis=1)
        report.add(_worst_gap_entry("min_gap", traj.times, gaps,
                                    traj.chunk_mass / r))
    elif isinstance(traj, HughesTrajectory):
        gaps = np.diff(traj.positions, axis=1)
        sup0 = float(np.max(traj.chunk_mass / np.diff(traj.positions[0])))
        r = sup_density or sup0
        report.add(_worst_gap_entry("min_gap", traj.times, gaps,
                                    traj.chunk_mass / r))
    elif isinstance(traj, ArzTrajectory):
        gaps = np.diff(traj.positions, axis=1)
        if traj.pressure_admissible and np.all(traj.markers > 0):
            caps = traj.pressure.inverse(traj.markers)
            report.add(_worst_gap_entry("min_gap_per_marker", traj.times, gaps,
                                        traj.chunk_mass / caps))
        else:
            worst = float(np.min(gaps))
            report.add(InvariantEntry(
                "ordering", worst > 0.0, 0.0, max(-worst, 0.0),
                note="pressure law not vacuum-admissible; only ordering checked"))
    elif isinstance(traj, IbvpTrajectory):
        gaps = np.diff(traj.positions, axis=1)
        masses = traj.chunk_masses()
        r = sup_density or max(traj.initial_sup_density, traj.boundary0.maximum(),
                               traj.boundary1.maximum())
        report.add(_worst_gap_entry("min_gap", traj.times, gaps, masses / r))
        delta = traj.data_floor()
        if delta > 1e-12:
            ceil = (masses / delta) * (1.0 + 1e-9)
            margin = ceil - gaps
            k, i = np.unravel_index(np.argmin(margin), margin.shape)
            worst = float(-margin[k, i])
            report.add(InvariantEntry("max_gap", worst <= 0.0, 0.0, max(worst, 0.0),
                                      float(traj.times[k]), int(i)))
        else:
            report.add(InvariantEntry(
                "max_gap", True, 0.0, 0.0,
                note="data touch vacuum; upper gap bound not applicable"))
    else:
        raise TypeError(f"unsupported trajectory {type(traj)}")
    return report


def check_oleinik(traj: CauchyTrajectory, slack: float = 1e-6) -> InvariantEntry:
    """One-sided bound t * R_i * (xdot_{i+1} - xdot_i) <= ell for decreasing rho*v'."""
    if not traj.model.satisfies_v2():
        return InvariantEntry("one_sided_lipschitz", True, slack, 0.0,
                              note="model lacks the decreasing rho*v' property; skipped")
    ell = traj.chunk_mass
    worst = -np.inf
    w_t, w_i = None, None
    for k, t in enumerate(traj.times):
        if t <= 0:
            continue
        dens = traj.chunk_densities_at(k)
        vel = traj.velocities_at(k)
        z = t * dens * np.diff(vel)
        i = int(np.argmax(z))
        if z[i] > worst:
            worst, w_t, w_i = float(z[i]), float(t), i
    if worst == -np.inf:
        return InvariantEntry("one_sided_lipschitz", True, slack, 0.0)
    excess = worst - ell * (1.0 + slack)
    return InvariantEntry("one_sided_lipschitz", excess <= 0.0, slack,
                          worst / ell, w_t, w_i,
                          note="worst reported as max z / ell")


def check_tv(traj, initial_datum: PiecewiseConstantDensity | None = None,
             slack: float = 1e-8) -> InvariantEntry:
    """TV non-increase (line scheme) or the data-bound TV estimate (Dirichlet)."""
    if isinstance(traj, CauchyTrajectory):
        tvs = np.array([traj.density_at(k).total_variation(extend_by_zero=True)
                        for k in range(len(traj.times))])
        rises = np.diff(tvs)
        k = int(np.argmax(rises)) if len(rises) else 0
        worst = float(np.max(rises)) if len(rises) else 0.0
        return InvariantEntry("tv_nonincreasing", worst <= slack, slack, max(worst, 0.0),
                              float(traj.times[k + 1]) if len(rises) else None)
    if isinstance(traj, IbvpTrajectory):
        if initial_datum is not None:
            interior0 = initial_datum
        else:
            interior0 = traj.interior_density_at(0)
        b0, b1 = traj.boundary0, traj.boundary1
        bound = (interior0.total_variation(extend_by_zero=False)
                 + b0.total_variation() + b1.total_variation()
                 + abs(b0.value_at(0.0) - float(interior0.values[0]))
                 + abs(b1.value_at(0.0) - float(interior0.values[-1])))
        tvs = np.array([traj.full_density_at(k).total_variation(extend_by_zero=False)
                        for k in range(len(traj.times))])
        k = int(np.argmax(tvs))
        worst = float(tvs[k])
        tol = 1e-6
        return InvariantEntry("tv_bounded_by_data", worst <= bound + tol, tol,
                              worst, float(traj.times[k]),
                              note=f"bound from data C={bound:.12g}")
    raise TypeError(f"unsupported trajectory {type(traj)}")


def check_wasserstein_lipschitz(traj, constant: float | None = None,
                                max_lag: float = np.inf,
                                slack: float = 1e-6) -> InvariantEntry:
    """W(rho(t), rho(s)) <= constant * |t - s| over sample pairs.

    Default constant is v_max times the transported mass (each particle moves
    at most at v_max, and the pseudo-inverse interpolates particle positions).
    For the Dirichlet scheme only pairs inside one rearrangement window are
    compared; the rearrangement jumps are genuine and reported separately.
    """
    if isinstance(traj, CauchyTrajectory):
        dens = [traj.density_at(k) for k in range(len(traj.times))]
        groups = [np.zeros(len(traj.times), dtype=int)]
        cbase = traj.model.v_max * traj.mass
        times = traj.times
    elif isinstance(traj, IbvpTrajectory):
        dens = [traj.full_density_at(k) for k in range(len(traj.times))]
        groups = [np.array([traj.window_of(k) for k in range(len(traj.times))])]
        cbase = traj.model.v_max * traj.total_mass
        times = traj.times
    else:
        raise TypeError(f"unsupported trajectory {type(traj)}")
    c = constant if constant is not None else cbase
    group = groups[0]
    worst_ratio = 0.0
    w_pair = None
    for a in range(len(times)):
        for b in range(a + 1, len(times)):
            dt = float(times[b] - times[a])
            if dt > max_lag:
                break
            if dt <= 0 or group[a] != group[b]:
                continue
            w = wasserstein_scaled(dens[a], dens[b])
            ratio = w / (c * dt)
            if ratio > worst_ratio:
                worst_ratio = ratio
                w_pair = (float(times[a]), float(times[b]))
    passed = worst_ratio <= 1.0 + slack
    return InvariantEntry("wasserstein_lipschitz", passed, slack, worst_ratio,
                          w_pair[1] if w_pair else None,
                          note=f"constant={c:.12g}; worst pair {w_pair}")


def rearrangement_jump_report(traj: IbvpTrajectory) -> dict:
    """Measured Wasserstein jumps across rearrangements, scaled by tau (not asserted)."""
    masses = traj.chunk_masses()
    ratios = []
    for k in range(len(traj.rearrange_times)):
        pre = PiecewiseConstantDensity(traj.pre_positions[k],
                                       masses / np.diff(traj.pre_positions[k]))
        post = PiecewiseConstantDensity(traj.post_positions[k],
                                        masses / np.diff(traj.post_positions[k]))
        ratios.append(wasserstein_scaled(pre, post) / traj.tau)
    return {
        "times": [float(t) for t in traj.rearrange_times],
        "jump_over_tau": [float(r) for r in ratios],
        "max_jump_over_tau": float(np.max(ratios)) if ratios else 0.0,
    }


def check_mass_conservation(traj, rel_tol: float = 1e-12) -> InvariantEntry:
    """Total transported mass stays equal to the atomized mass at all samples."""
    if isinstance(traj, IbvpTrajectory):
        target = traj.total_mass
        vals = [traj.full_density_at(k).mass for k in range(len(traj.times))]
    elif isinstance(traj, (CauchyTrajectory, ArzTrajectory)):
        target = traj.mass
        vals = [traj.density_at(k).mass for k in range(len(traj.times))]
    elif isinstance(traj, HughesTrajectory):
        target = traj.chunk_mass * traj.n
        vals = [PiecewiseConstantDensity(
            traj.positions[k],
            traj.chunk_mass / np.diff(traj.positions[k])).mass
            for k in range(len(traj.times))]
    else:
        raise TypeError(f"unsupported trajectory {type(traj)}")
    errs = np.abs(np.array(vals) - target) / target
    k = int(np.argmax(errs))
    worst = float(errs[k])
    return InvariantEntry("mass_conservation", worst <= rel_tol, rel_tol, worst,
                          float(traj.times[k]))


def check_finite_speed(traj: CauchyTrajectory, slack: float = 1e-9) -> InvariantEntry:
    """Support stays inside [x_0(0), x_n(0) + v_max t]."""
    lo0 = traj.positions[0, 0]
    hi0 = traj.positions[0, -1]
    vmax = traj.model.v_max
    worst = 0.0
    w_t = None
    for k, t in enumerate(traj.times):
        over = max(lo0 - traj.positions[k, 0],
                   traj.positions[k, -1] - (hi0 + vmax * t))
        if over > worst:
            worst, w_t = float(over), float(t)
    return InvariantEntry("finite_speed", worst <= slack, slack, worst, w_t)


def check_density_ode_consistency(traj, rel_tol: float, abs_tol: float = 1e-9,
                                  stride: int = 7) -> InvariantEntry:
    """Evolve the density-form dynamics independently and compare chunk densities.

    Positions are the primary unknowns; the chunk densities also satisfy an
    autonomous system of their own.  Over every stride-th sample interval the
    density system is integrated (at a hundredfold tighter tolerance) from
    the position-derived densities and compared at the interval end.  The
    allowance is ten times the position-route tolerance amplified by the
    exact density/position sensitivity R^2/ell.
    """
    from .integrator import IntegratorConfig, integrate

    ell = traj.chunk_mass
    if isinstance(traj, ArzTrajectory):
        markers = traj.markers
        pressure = traj.pressure

        def rate(t, dens):
            d = np.clip(dens, 1e-300, None)
            v = markers - pressure(d)
            out = np.empty_like(d)
            out[:-1] = -(d[:-1] ** 2 / ell) * (v[1:] - v[:-1])
            out[-1] = -(d[-1] ** 2 / ell) * np.asarray(pressure(d[-1]), dtype=float)
            return out
    elif isinstance(traj, CauchyTrajectory):
        model = traj.model

        def rate(t, dens):
            d = np.clip(dens, 0.0, None)
            v = model.eval_clamped(d)
            out = np.empty_like(d)
            out[:-1] = -(d[:-1] ** 2 / ell) * (v[1:] - v[:-1])
            out[-1] = -(d[-1] ** 2 / ell) * (model.v_max - v[-1])
            return out
    else:
        raise TypeError(f"unsupported trajectory {type(traj)}")

    icfg = IntegratorConfig(rel_tol=rel_tol * 1e-2, abs_tol=abs_tol * 1e-2)
    worst = 0.0
    w_t = None
    for k in range(0, len(traj.times) - 1, stride):
        t0, t1 = float(traj.times[k]), float(traj.times[k + 1])
        if not t1 > t0:
            continue
        d0 = ell / np.diff(traj.positions[k])
        d1 = ell / np.diff(traj.positions[k + 1])
        sol = integrate(rate, d0, (t0, t1), icfg)
        err = float(np.max(np.abs(sol.y_end - d1)))
        r_max = float(max(np.max(d0), np.max(d1)))
        x_scale = float(np.max(np.abs(traj.positions[k + 1])))
        allow = 10.0 * (rel_tol * x_scale + abs_tol) * r_max**2 / ell
        score = err / allow
        if score > worst:
            worst, w_t = score, t1
    return InvariantEntry("density_ode_consistency", worst <= 1.0, 1.0, worst, w_t)


def l1_error(density: PiecewiseConstantDensity, reference,
             domain: tuple[float, float]) -> float:
    """Exact L1 distance of a step density to a step or piecewise-linear reference."""
    if isinstance(reference, PiecewiseConstantDensity):
        return l1_distance(density, reference, domain)
    if isinstance(reference, PiecewiseLinearFunction):
        return l1_distance_to_linear(density, reference, domain)
    raise TypeError("reference must be piecewise constant or piecewise linear")


@dataclass
class ConvergenceTable:
    labels: list[str]
    errors: list[float]

    @property
    def orders(self) -> list[float]:
        return [float(np.log2(self.errors[i] / self.errors[i + 1]))
                for i in range(len(self.errors) - 1)]

    def fitted_order(self) -> float:
        """Least-squares slope of log2(error) against refinement level."""
        lev = np.arange(len(self.errors), dtype=float)
        loge = np.log2(np.array(self.errors))
        a = np.vstack([lev, np.ones_like(lev)]).T
        slope = np.linalg.lstsq(a, -loge, rcond=None)[0][0]
        return float(slope)

    def strictly_decreasing(self) -> bool:
        return all(self.errors[i + 1] < self.errors[i]
                   for i in range(len(self.errors) - 1))

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "errors": self.errors,
            "orders": self.orders,
            "fitted_order": self.fitted_order() if len(self.errors) > 1 else None,
        }


def convergence_table(runner, levels) -> ConvergenceTable:
    """Run `runner(level) -> error` over refinement levels; deterministic."""
    labels = [str(lv) for lv in levels]
    errors = [float(runner(lv)) for lv in levels]
    return ConvergenceTable(labels, errors)
