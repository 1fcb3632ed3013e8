"""Domain-decomposed constrained least squares with Kalman solvers and
graph-Laplacian diffusion load balancing (DyDD)."""

from .balancing import (
    BalanceSchedule,
    BalanceTrace,
    ProcessorGraph,
    SpatialDecomposition,
    balance,
    balance_metric,
    build_laplacian,
    check_and_split,
    compute_imbalance,
    migrate,
    schedule,
)
from .decomposition import (
    DDSolveReport,
    IndexDecomposition,
    LocalSolution,
    assemble_global,
    dd_solve,
    extend_vector,
    local_solve,
    overlap_penalty,
    reduced_objective,
    restrict_matrix,
)
from .errors import DyddError
from .estimation import (
    CLSProblem,
    KFState,
    cls_objective,
    cls_solve,
    kf_assimilate_cls,
    kf_correct,
    kf_predict,
    stack,
    varkf_objective,
)
from .geometry import Rect, Region
from .harness import run_balance, run_experiment, run_monolithic, solve_scenario
from .linalg import laplacian_solve, spd_solve, weighted_normal_solve
from .parallel import AdditiveWorkerPool
from .registry import EXAMPLE_CASES, example_scenario
from .reporting import ScenarioReport, emit_report, report_from_json, report_to_csv, report_to_json
from .scenarios import Scenario, generate_scenario, load_scenario, scenario_from_dict

__version__ = "0.1.0"

__all__ = [
    "AdditiveWorkerPool",
    "BalanceSchedule",
    "BalanceTrace",
    "CLSProblem",
    "DDSolveReport",
    "DyddError",
    "EXAMPLE_CASES",
    "IndexDecomposition",
    "KFState",
    "LocalSolution",
    "ProcessorGraph",
    "Rect",
    "Region",
    "Scenario",
    "ScenarioReport",
    "SpatialDecomposition",
    "assemble_global",
    "balance",
    "balance_metric",
    "build_laplacian",
    "check_and_split",
    "cls_objective",
    "cls_solve",
    "compute_imbalance",
    "dd_solve",
    "emit_report",
    "example_scenario",
    "extend_vector",
    "generate_scenario",
    "kf_assimilate_cls",
    "kf_correct",
    "kf_predict",
    "laplacian_solve",
    "load_scenario",
    "local_solve",
    "migrate",
    "overlap_penalty",
    "reduced_objective",
    "report_from_json",
    "report_to_csv",
    "report_to_json",
    "restrict_matrix",
    "run_balance",
    "run_experiment",
    "run_monolithic",
    "scenario_from_dict",
    "schedule",
    "solve_scenario",
    "spd_solve",
    "stack",
    "varkf_objective",
    "weighted_normal_solve",
]
