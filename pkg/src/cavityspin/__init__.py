"""Free rotation of a rigid brick with a viscous-fluid-filled cavity.

Library layout: geometry (mass properties and the quadrature oracle),
fluid (staggered-grid solver in the body frame), coupling (momentum
updates and the coupled step), diagnostics (energy and conservation
bookkeeping), asymptotics (terminal-axis classification and prediction),
driver/cli (batch runs and artifacts), plots (report figures).
"""

from .asymptotics import (
    AxisVerdict,
    ClassifyTolerances,
    PredictionReport,
    classify_limit,
    predict_axis,
    predict_from_inertia,
    scaling_transform,
)
from .config import ConfigError, RunConfig, Tolerances, load_config
from .coupling import (
    CoupledState,
    InertiaOps,
    PicardError,
    RigidState,
    StepReport,
    advance_angular_momentum,
    advance_linear_momentum,
    advance_orientation,
    coupled_step,
    make_coupled_state,
    omega_from_state,
    rigid_euler_reference,
    rodrigues,
)
from .diagnostics import (
    BudgetReport,
    ConservationReport,
    EnergyBreakdown,
    TimeSeriesRecord,
    decay_fit,
    energy_breakdown,
    energy_budget,
    read_csv,
    write_csv,
)
from .driver import RunResult, prepare_run, simulate
from .fluid import (
    CflError,
    FluidParams,
    FluidState,
    InitSpec,
    MacGrid,
    NumericsError,
    ProjectionError,
    SimulationError,
    dissipation_rate,
    fluid_angular_momentum,
    fluid_kinetic_energy,
    initialize_velocity,
    make_grid,
    mean_velocity,
    project,
    step_fluid,
)
from .geometry import (
    GeometryError,
    GeometrySpec,
    InertiaData,
    PrincipalAxes,
    compose_total_inertia,
    compute_mass_properties,
    principal_axes,
    quadrature_inertia_oracle,
)
from .reference import REFERENCE_NAMES, reference_config, write_reference_configs

__version__ = "0.1.0"
