"""Repeated-significance test plans for continuously monitored, unbounded tests."""

from .errors import (
    BudgetExhaustedError,
    DegenerateThresholdError,
    DivergentSeriesError,
    DomainError,
    MonitorStoppedError,
    PlanError,
    RepsigError,
)
from .monitor import Continue, Monitor, StopSignificant, new_monitor, run_stream, stop_time
from .numeric import pseries_head, pseries_tail, two_sided_p, two_sided_z, zeta
from .plan import (
    ConstantPolicy,
    CustomPolicy,
    Finding,
    FractionPolicy,
    TestPlan,
    baseline_z,
    load_plan,
    min_z_threshold,
    plan_from_dict,
    policy_from_dict,
    validate_plan,
)
from .simulate import (
    BrownianDrift,
    BrownianNull,
    IidUniformNull,
    SimulationReport,
    simulate,
    sweep,
)
from .spending import (
    CustomSchedule,
    GeometricSchedule,
    HeadlessPSeriesSchedule,
    PSeriesSchedule,
    schedule_from_dict,
)
from .worst_case import AlphaEstimate, corollary_bound, corollary_sum, estimate_alpha, worst_case_alpha

__version__ = "0.1.0"
