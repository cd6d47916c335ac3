"""Prescribed-time reach-avoid control via a QP-steered virtual confinement zone.

A CBF-QP steers the center of a fixed-radius ball through moving obstacles
into a shrinking target set while an approximation-free logarithmic-barrier
law confines the (unknown) true plant inside the ball, so the ball's
reach-avoid guarantee transfers to the plant.
"""

__version__ = "0.1.0"

from .barriers import (
    BarrierEval,
    ClassKappa,
    Obstacle,
    ShrinkSchedule,
    TargetSet,
    eval_avoidance,
    eval_reach,
    gamma_eval,
    radius_at,
    rate_of,
)
from .confinement import (
    ConfinementBreachError,
    ConfinementLaw,
    ErrorState,
    confinement_control,
    small_error_slope,
    zeta,
)
from .oracles import FdConfig, fd_gradient, sphere_sample
from .plant import PlantModel, benchmark_plant, integrator_plant, plant_derivative
from .qp import (
    GridInfeasibleError,
    QpInputError,
    QpProblem,
    QpSolution,
    brute_force_qp,
    check_kkt,
    solve_qp,
)
from .scenario import (
    CheckResult,
    Scenario,
    ScenarioInvalidError,
    ValidationReport,
    benchmark_scenario,
    sphere_containment_violations,
    tightened_unsafe_distance,
    uniform_alphas,
    validate,
)
from .scenario_io import (
    ScenarioParseError,
    load_scenario,
    parse_scenario,
    scenario_hash,
    serialize_scenario,
)
from .simulator import (
    RunMetrics,
    VerificationReport,
    SimState,
    SimTrace,
    SimulationAbort,
    compute_metrics,
    read_trace,
    run,
    step,
    verify_trace,
    write_trace,
)
from .virtual import (
    ConstraintRow,
    QpInfeasibleError,
    VirtualSystem,
    assemble_rows,
    barrier_values,
    regularity_margin,
    virtual_control,
)
