"""opsched: moldable-operation scheduling on a simulated manycore machine.

Per-operation intra-op parallelism is tuned by hill climbing over a
profiled cost model; a discrete-event scheduler then co-runs ready
operations under configurable strategies and reports makespan,
utilization, and co-run statistics.
"""

from ._backend import BACKEND
from .cost import CostCurve, InterferenceContext, SOLO, calibrate_from_samples, exec_time, optimal_width
from .graph import DataflowGraph, GraphGenSpec, OpKey, OpNode, generate_synthetic, parse_graph, ready_set, serialize_graph
from .machine import Allocation, AllocationState, MachineModel
from .perf_model import RegressionModel, TunedWidth, TunerConfig, accuracy, fit_regression, hill_climb, predict, tune_graph
from .profiler import ProfileHistory, profile_op, profiling_cost
from .reporting import RunReport, build_report, compare, corun_stats, export_chrome_trace, utilization
from .scheduler import ScheduleEvent, ScheduleTrace, StrategyConfig, baseline_schedule, dispatch_step, simulate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Allocation",
    "AllocationState",
    "CostCurve",
    "DataflowGraph",
    "GraphGenSpec",
    "InterferenceContext",
    "MachineModel",
    "OpKey",
    "OpNode",
    "ProfileHistory",
    "RegressionModel",
    "RunReport",
    "SOLO",
    "ScheduleEvent",
    "ScheduleTrace",
    "StrategyConfig",
    "TunedWidth",
    "TunerConfig",
    "accuracy",
    "baseline_schedule",
    "build_report",
    "calibrate_from_samples",
    "compare",
    "corun_stats",
    "dispatch_step",
    "exec_time",
    "export_chrome_trace",
    "fit_regression",
    "generate_synthetic",
    "hill_climb",
    "optimal_width",
    "parse_graph",
    "predict",
    "profile_op",
    "profiling_cost",
    "ready_set",
    "serialize_graph",
    "simulate",
    "tune_graph",
    "utilization",
]
