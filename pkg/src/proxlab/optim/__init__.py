"""Training algorithms and the experiment loop."""

from .runner import Problem, Trace, TraceRecord, build_problem, run, warm_start
from .steps import (
    ALGORITHMS,
    SGD,
    Adam,
    Momentum,
    OptimizerState,
    Schedule,
    apply_prox,
    freeze_if_due,
    init_state,
    make_inner,
    quantize_groups,
    signs_history,
    step,
    step_binaryconnect,
    step_fullprecision,
    step_lazyprox,
    step_proxquant,
    trajectory,
)

__all__ = [
    "ALGORITHMS",
    "Adam",
    "Momentum",
    "OptimizerState",
    "Problem",
    "SGD",
    "Schedule",
    "Trace",
    "TraceRecord",
    "apply_prox",
    "build_problem",
    "freeze_if_due",
    "init_state",
    "make_inner",
    "quantize_groups",
    "run",
    "signs_history",
    "step",
    "step_binaryconnect",
    "step_fullprecision",
    "step_lazyprox",
    "step_proxquant",
    "trajectory",
    "warm_start",
]
