"""Participatory-budgeting rules, exact control solvers, and strength measures."""

from .core import (
    Instance,
    InvalidInstanceError,
    Outcome,
    PbError,
    Project,
    Rational,
    TieBreakOrder,
    TraceEvent,
    UnknownProjectError,
    make_instance,
    total_cost,
    validate_instance,
)
from .rules import (
    GREEDY_FAMILY,
    Rule,
    equal_shares,
    equal_shares_with_payments,
    evaluate,
    greedy_av,
    greedy_cost,
    minimal_q,
    phragmen,
    processing_order,
)
from .control import (
    ControlAnswer,
    ControlQuery,
    DpTable,
    Goal,
    Operation,
    TimeBudgetExceeded,
    brute_force_control,
    count_solutions,
    dp_add_control,
    dp_delete_control,
    greedy_unit_cost_control,
    prune_after_distinguished,
    solve_control,
)
from .measures import (
    ProjectStrength,
    RivalryMatrix,
    StrengthReport,
    WinProbability,
    baseline_add_measure,
    baseline_cost_measure,
    cheapest_deletion,
    compute_strength_report,
    min_deletion_size,
    pearson,
    rivalry,
    rivalry_matrix,
    win_probability,
)
from .reductions import (
    BUILDERS,
    BuiltControlInstance,
    Rx3cInstance,
    build_greedyav_ccac,
    build_greedyav_ccdc,
    build_greedyav_dcac,
    build_greedyav_dcdc,
    build_phragmen_ccac,
    build_phragmen_ccdc,
    build_phragmen_dcac,
    build_phragmen_dcdc,
    no_cover_instance,
    planted_cover_instance,
    random_rx3c_instance,
    rx3c_has_exact_cover,
)
from . import pabulib

__version__ = "0.1.0"

__all__ = [
    "BUILDERS",
    "BuiltControlInstance",
    "ControlAnswer",
    "ControlQuery",
    "DpTable",
    "GREEDY_FAMILY",
    "Goal",
    "Instance",
    "InvalidInstanceError",
    "Operation",
    "Outcome",
    "PbError",
    "Project",
    "ProjectStrength",
    "Rational",
    "RivalryMatrix",
    "Rule",
    "Rx3cInstance",
    "StrengthReport",
    "TieBreakOrder",
    "TimeBudgetExceeded",
    "TraceEvent",
    "UnknownProjectError",
    "WinProbability",
    "baseline_add_measure",
    "baseline_cost_measure",
    "brute_force_control",
    "build_greedyav_ccac",
    "build_greedyav_ccdc",
    "build_greedyav_dcac",
    "build_greedyav_dcdc",
    "build_phragmen_ccac",
    "build_phragmen_ccdc",
    "build_phragmen_dcac",
    "build_phragmen_dcdc",
    "cheapest_deletion",
    "compute_strength_report",
    "count_solutions",
    "dp_add_control",
    "dp_delete_control",
    "equal_shares",
    "equal_shares_with_payments",
    "evaluate",
    "greedy_av",
    "greedy_cost",
    "greedy_unit_cost_control",
    "make_instance",
    "min_deletion_size",
    "minimal_q",
    "no_cover_instance",
    "pabulib",
    "pearson",
    "phragmen",
    "planted_cover_instance",
    "processing_order",
    "prune_after_distinguished",
    "random_rx3c_instance",
    "rivalry",
    "rivalry_matrix",
    "rx3c_has_exact_cover",
    "solve_control",
    "total_cost",
    "validate_instance",
    "win_probability",
]
