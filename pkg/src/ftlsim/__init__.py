"""Deterministic follow-the-leader particle approximations of macroscopic flow models."""

from .core import (
    BoundaryData,
    DomainError,
    FluxModel,
    Greenshields,
    GreenbergModified,
    MassMismatchError,
    PiecewiseConstantDensity,
    PiecewiseLinearFunction,
    PipesMunjal,
    PseudoInverse,
    TabulatedVelocity,
    UnderwoodModified,
    VelocityModel,
    flux_eval,
    l1_distance,
    l1_distance_to_linear,
    pseudo_inverse,
    total_variation,
    velocity_eval,
    wasserstein_scaled,
)
from .atomize import (
    Atomization,
    AtomizationError,
    ArzAtomization,
    HughesAtomization,
    IbvpAtomization,
    atomize_arz,
    atomize_compact,
    atomize_hughes,
    atomize_ibvp,
)
from .integrator import EventSpec, IntegratorConfig, StepUnderflowError, integrate
from .lwr import (
    CauchyTrajectory,
    ParticleState,
    StateCorruptionError,
    discrete_density,
    evolve_cauchy,
    phantom_extension,
    rhs_cauchy,
)
from .ibvp import (
    IbvpState,
    IbvpTrajectory,
    QueueUnderflowError,
    boundary_trace_check,
    evolve_ibvp,
    rearrange,
    rhs_ibvp,
)
from .hughes import (
    HughesState,
    HughesTrajectory,
    TurningPointCollision,
    evolve_hughes,
    rhs_hughes,
)
from .hughes_cost import (
    CostModel,
    SmallnessReport,
    reciprocal_velocity_cost,
    smallness_check,
    turning_point,
)
from .arz import (
    ArzParticleState,
    ArzTrajectory,
    CustomPressure,
    LinearPressure,
    LogScaledPressure,
    PowerLawPressure,
    PressureModel,
    evolve_arz,
    reconstruct_fields,
    rhs_arz,
)
from .reference import (
    GodunovResult,
    RiemannSolution,
    exact_ptd,
    exact_ptd_profile,
    godunov_flux,
    godunov_hughes,
    godunov_lwr,
    lax_riemann,
    riemann_composition,
)
from .diagnostics import (
    ConvergenceTable,
    InvariantEntry,
    InvariantReport,
    check_density_ode_consistency,
    check_finite_speed,
    check_mass_conservation,
    check_max_principle,
    check_oleinik,
    check_tv,
    check_wasserstein_lipschitz,
    convergence_table,
    l1_error,
    rearrangement_jump_report,
)
from .config import ConfigError, ScenarioConfig, ScenarioResult, run_scenario, validate_dict
from .presets import PRESETS, get_preset, preset_names
