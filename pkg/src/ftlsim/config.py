"""Declarative scenario configuration, validation, and run orchestration.

A scenario is a plain JSON-compatible dict (see README for the schema); this
module validates it field by field, builds the model objects, runs the
matching scheme, and produces the invariant report plus scheme-specific
extras.  Everything is deterministic: rerunning a config reproduces every
number bit for bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from . import arz as arz_mod
from . import diagnostics as diag
from . import hughes as hughes_mod
from . import ibvp as ibvp_mod
from . import lwr as lwr_mod
from .atomize import atomize_arz, atomize_compact, atomize_hughes, atomize_ibvp
from .core import (
    BoundaryData,
    FluxModel,
    Greenshields,
    GreenbergModified,
    PiecewiseConstantDensity,
    PipesMunjal,
    TabulatedVelocity,
    UnderwoodModified,
    VelocityModel,
)
from .hughes_cost import reciprocal_velocity_cost, smallness_check
from .integrator import IntegratorConfig
from .reference import (
    exact_ptd_profile,
    godunov_hughes,
    godunov_lwr,
    riemann_composition,
)

MODELS = ("lwr_cauchy", "lwr_ibvp", "hughes", "arz")
VELOCITY_KINDS = ("greenshields", "pipes_munjal", "greenberg_modified",
                  "underwood_modified", "tabulated")
PRESSURE_KINDS = ("power_law", "linear", "log_scaled")
REFERENCES = ("none", "riemann_composition", "exact_ptd", "godunov")


@dataclass
class ScenarioConfig:
    name: str
    model: str
    velocity: dict
    initial: dict
    n: int
    t_final: float
    samples: int = 100
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    m: int | None = None
    boundary0: dict | None = None
    boundary1: dict | None = None
    pressure: dict | None = None
    initial_velocity: list | None = None
    cost: dict | None = None
    switching: bool = True
    snapshots_at: list | None = None
    reference: str = "none"
    allow_negative_markers: bool = False
    godunov_cells: int | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        errors = validate_dict(raw)
        if errors:
            raise ConfigError(errors)
        known = {f: raw.get(f) for f in cls.__dataclass_fields__ if f in raw}
        return cls(**known)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid scenario config: " + "; ".join(errors))
        self.errors = errors


def _check_density_spec(raw, errors, key="initial"):
    spec = raw.get(key)
    if not isinstance(spec, dict):
        errors.append(f"{key}: required object with breakpoints/values")
        return
    b = spec.get("breakpoints")
    v = spec.get("values")
    if not isinstance(b, list) or not isinstance(v, list) or len(b) != len(v) + 1:
        errors.append(f"{key}: breakpoints must be one longer than values")
        return
    if any(b[i + 1] <= b[i] for i in range(len(b) - 1)):
        errors.append(f"{key}.breakpoints: must be strictly increasing")
    if any(x < 0 for x in v):
        errors.append(f"{key}.values: must be nonnegative")


def _check_boundary_spec(raw, errors, key):
    spec = raw.get(key)
    if not isinstance(spec, dict):
        errors.append(f"{key}: required for lwr_ibvp")
        return
    t = spec.get("times")
    v = spec.get("values")
    if not isinstance(t, list) or not isinstance(v, list) or len(t) != len(v) or not t:
        errors.append(f"{key}: times and values must be equal-length lists")
        return
    if t[0] != 0:
        errors.append(f"{key}.times: must start at 0")
    if any(t[i + 1] <= t[i] for i in range(len(t) - 1)):
        errors.append(f"{key}.times: must be strictly increasing")
    if any(x < 0 for x in v):
        errors.append(f"{key}.values: must be nonnegative")


def validate_dict(raw: dict) -> list[str]:
    """Field-level validation; returns a list of messages naming offending keys."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        return ["config must be an object"]
    model = raw.get("model")
    if model not in MODELS:
        errors.append(f"model: must be one of {MODELS}")
        return errors
    if not isinstance(raw.get("name"), str) or not raw.get("name"):
        errors.append("name: required nonempty string")
    vel = raw.get("velocity")
    if not isinstance(vel, dict) or vel.get("kind") not in VELOCITY_KINDS:
        errors.append(f"velocity.kind: must be one of {VELOCITY_KINDS}")
    else:
        if not isinstance(vel.get("v_max"), (int, float)) or vel["v_max"] <= 0:
            errors.append("velocity.v_max: positive number required")
        if not isinstance(vel.get("rho_max"), (int, float)) or vel["rho_max"] <= 0:
            errors.append("velocity.rho_max: positive number required")
    _check_density_spec(raw, errors)
    n = raw.get("n")
    if not isinstance(n, int) or n < 3:
        errors.append("n: integer >= 3 required")
    t_final = raw.get("t_final")
    if not isinstance(t_final, (int, float)) or t_final <= 0:
        errors.append("t_final: positive number required")
    if model == "lwr_ibvp":
        m = raw.get("m")
        if not isinstance(m, int) or m < 1:
            errors.append("m: integer >= 1 required for lwr_ibvp")
        _check_boundary_spec(raw, errors, "boundary0")
        _check_boundary_spec(raw, errors, "boundary1")
    if model == "arz":
        p = raw.get("pressure")
        if not isinstance(p, dict) or p.get("kind") not in PRESSURE_KINDS:
            errors.append(f"pressure.kind: must be one of {PRESSURE_KINDS}")
        iv = raw.get("initial_velocity")
        init = raw.get("initial", {})
        n_seg = len(init.get("values", [])) if isinstance(init, dict) else 0
        if not isinstance(iv, list) or len(iv) != n_seg:
            errors.append("initial_velocity: one speed per initial segment required")
        elif any(not isinstance(x, (int, float)) or x < 0 for x in iv):
            errors.append("initial_velocity: speeds must be nonnegative")
    if raw.get("reference", "none") not in REFERENCES:
        errors.append(f"reference: must be one of {REFERENCES}")
    if "samples" in raw and (not isinstance(raw["samples"], int) or raw["samples"] < 2):
        errors.append("samples: integer >= 2 required")
    return errors


def build_velocity(spec: dict) -> VelocityModel:
    kind = spec["kind"]
    v_max, rho_max = float(spec["v_max"]), float(spec["rho_max"])
    if kind == "greenshields":
        return Greenshields(v_max, rho_max)
    if kind == "pipes_munjal":
        return PipesMunjal(v_max, rho_max, float(spec.get("alpha", 2.0)))
    if kind == "greenberg_modified":
        return GreenbergModified(v_max, rho_max, float(spec.get("alpha", 0.1)))
    if kind == "underwood_modified":
        return UnderwoodModified(v_max, rho_max)
    return TabulatedVelocity(v_max, rho_max,
                             np.asarray(spec["rho_samples"], dtype=float),
                             np.asarray(spec["v_samples"], dtype=float))


def build_pressure(spec: dict) -> arz_mod.PressureModel:
    kind = spec["kind"]
    if kind == "power_law":
        return arz_mod.PowerLawPressure(float(spec["gamma"]))
    if kind == "linear":
        return arz_mod.LinearPressure(float(spec["slope"]))
    return arz_mod.LogScaledPressure(float(spec["coefficient"]))


def build_density(spec: dict) -> PiecewiseConstantDensity:
    return PiecewiseConstantDensity(np.asarray(spec["breakpoints"], dtype=float),
                                    np.asarray(spec["values"], dtype=float))


def build_boundary(spec: dict) -> BoundaryData:
    return BoundaryData(np.asarray(spec["times"], dtype=float),
                        np.asarray(spec["values"], dtype=float))


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trajectory: Any
    report: diag.InvariantReport
    extras: dict = field(default_factory=dict)
    reference_error: float | None = None

    @property
    def passed(self) -> bool:
        return self.report.passed


def _integrator_config(config: ScenarioConfig) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=config.rel_tol, abs_tol=config.abs_tol)


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Atomize, evolve, check invariants, and (optionally) compare to a reference."""
    model = build_velocity(config.velocity)
    density = build_density(config.initial)
    cfg = _integrator_config(config)

    if config.model == "lwr_cauchy":
        atom = atomize_compact(density, config.n)
        traj = lwr_mod.evolve_cauchy(atom, model, config.t_final, cfg, config.samples)
        report = diag.check_max_principle(traj)
        report.add(diag.check_mass_conservation(traj))
        report.add(diag.check_tv(traj))
        report.add(diag.check_oleinik(traj))
        report.add(diag.check_finite_speed(traj))
        report.add(diag.check_wasserstein_lipschitz(traj, max_lag=0.1))
        report.add(diag.check_density_ode_consistency(traj, config.rel_tol,
                                                      config.abs_tol))
        extras = {}
        ref_err = None
        if config.reference == "riemann_composition":
            flux = FluxModel(model)
            profile = riemann_composition(density, flux, config.t_final)
            final = traj.density_at(len(traj.times) - 1)
            lo = min(final.breakpoints[0], density.breakpoints[0]) - 0.5
            hi = max(final.breakpoints[-1], density.breakpoints[-1]) + 0.5
            ref_err = diag.l1_error(final, profile, (lo, hi))
        return ScenarioResult(config, traj, report, extras, ref_err)

    if config.model == "lwr_ibvp":
        b0 = build_boundary(config.boundary0)
        b1 = build_boundary(config.boundary1)
        atom = atomize_ibvp(density, b0.value_at(0.0), config.n, config.t_final, model)
        traj = ibvp_mod.evolve_ibvp(atom, model, b0, b1, config.t_final, config.m,
                                    cfg, config.samples)
        report = diag.check_max_principle(traj)
        report.add(diag.check_mass_conservation(traj))
        report.add(diag.check_tv(traj, initial_datum=density))
        extras = {
            "rearrangement_jumps": diag.rearrangement_jump_report(traj),
            "crossings": {
                "times": traj.rearrange_times.tolist(),
                "h0": traj.h0_series.tolist(),
                "h1": traj.h1_series.tolist(),
            },
        }
        flux = FluxModel(model)
        trace = ibvp_mod.boundary_trace_check(traj, flux)
        extras["boundary_trace"] = {
            "max_left_discrepancy": trace.max_left_discrepancy,
            "max_right_discrepancy": trace.max_right_discrepancy,
        }
        ref_err = None
        if config.reference == "exact_ptd":
            final = traj.interior_density_at(len(traj.times) - 1)
            ref_err = diag.l1_error(final, exact_ptd_profile(), (0.0, 1.0))
        elif config.reference == "godunov":
            cells = config.godunov_cells or config.n
            edges = np.linspace(0.0, 1.0, cells + 1)
            cell0 = density.evaluate(0.5 * (edges[:-1] + edges[1:]))
            g = godunov_lwr(flux, edges, cell0, config.t_final, "dirichlet", b0, b1)
            final = traj.interior_density_at(len(traj.times) - 1)
            ref_err = diag.l1_error(final, g.density(), (0.0, 1.0))
        return ScenarioResult(config, traj, report, extras, ref_err)

    if config.model == "hughes":
        cost = reciprocal_velocity_cost(model)
        atom = atomize_hughes(density, config.n, cost)
        traj = hughes_mod.evolve_hughes(atom, model, cost, config.t_final, cfg,
                                        config.switching, config.samples)
        report = diag.check_max_principle(traj)
        corridor = np.array([traj.corridor_mass_at(k) for k in range(len(traj.times))])
        rises = np.diff(corridor)
        worst = float(np.max(rises)) if len(rises) else 0.0
        report.add(diag.InvariantEntry("corridor_mass_nonincreasing",
                                       worst <= 1e-9, 1e-9, max(worst, 0.0)))
        report.add(diag.InvariantEntry("turning_point_residual",
                                       traj.max_balance_residual <= 1e-10, 1e-10,
                                       traj.max_balance_residual))
        inside = (traj.turning_points > -1.0) & (traj.turning_points < 1.0)
        report.add(diag.InvariantEntry("turning_point_in_corridor",
                                       bool(np.all(inside)), 0.0,
                                       float(np.sum(~inside))))
        small = smallness_check(density, model, cost)
        extras = {
            "smallness": asdict(small),
            "switch_events": [
                {"t": e.t, "particle": e.particle, "new_direction": e.new_direction,
                 "turning_point_before": e.turning_point_before,
                 "turning_point_after": e.turning_point_after}
                for e in traj.events
            ],
            "mass_accounting_final": traj.mass_accounting_at(len(traj.times) - 1),
        }
        ref_err = None
        if config.reference == "godunov":
            flux = FluxModel(model)
            cells = config.godunov_cells or config.n
            edges = np.linspace(-1.0, 1.0, cells + 1)
            cell0 = density.evaluate(0.5 * (edges[:-1] + edges[1:]))
            g = godunov_hughes(flux, cost, edges, cell0, config.t_final)
            final = traj.density_at(len(traj.times) - 1)
            ref_err = diag.l1_error(final, g.density(), (-1.0, 1.0))
        return ScenarioResult(config, traj, report, extras, ref_err)

    if config.model == "arz":
        pressure = build_pressure(config.pressure)
        velocities = np.asarray(config.initial_velocity, dtype=float)
        markers = velocities + np.asarray(pressure(density.values), dtype=float)
        atom = atomize_arz(density, density.breakpoints, markers, config.n,
                           allow_negative_markers=config.allow_negative_markers)
        traj = arz_mod.evolve_arz(atom, pressure, config.t_final, cfg, config.samples)
        report = diag.check_max_principle(traj)
        report.add(diag.check_mass_conservation(traj))
        report.add(diag.check_density_ode_consistency(traj, config.rel_tol))
        if traj.pressure_admissible:
            drop = float(traj.positions[0, 0] - np.min(traj.positions[:, 0]))
            report.add(diag.InvariantEntry("left_support_anchor", drop <= 1e-9,
                                           1e-9, max(drop, 0.0)))
        extras = {
            "pressure_admissible": traj.pressure_admissible,
            "negative_speed_flagged": traj.negative_speed_flagged,
            "markers": traj.markers.tolist(),
            "max_gap_series": traj.max_gap_series().tolist(),
        }
        return ScenarioResult(config, traj, report, extras, None)

    raise ConfigError([f"model: unknown {config.model}"])
