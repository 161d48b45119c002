"""Explicit symplectic shadowed Runge-Kutta integrators for charged particles."""
from ._backend import set_backend, use_numba
from .composition import (
    CompositionSchedule,
    Method,
    ScheduleSegment,
    Trajectory,
    build_schedule,
    essrk_step,
    gamma_for,
    hamiltonian_rhs,
    integrate,
    make_stepper,
    parse_method,
    rk4_baseline_step,
)
from .fields import (
    FieldError,
    FieldModel,
    FiniteDifferenceField,
    ParametricField,
    ParticleProps,
    TokamakField,
    UniformField,
    ZeroField,
    effective_potential,
    effective_potential_gradient,
    field_consistency_check,
)
from .maps import KickStages, StepFailure, drift, kick, kick_generating_data, kick_stages
from .system import EnsembleSystem, HarmonicInteraction, Interaction, PhaseState
from .tableau import BUTCHER6, EULER, MIDPOINT, RK4, ButcherTableau, tableau_for_order

__version__ = "0.1.0"
