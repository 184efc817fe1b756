"""Epoch loop: build the problem from a config, train, and emit trace records."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from ..data import Dataset, batches, gen_blobs, load_csv
from ..errors import NumericError
from ..model import (
    MlpSpec,
    Objective,
    error_rate,
    init_params,
    mlp_objective,
    scalar_quadratic,
    shifted_quadratic,
    toy_pair,
)
from ..regularize import RegSpec, reg_grad, reg_value
from .steps import Schedule, init_state, make_inner, quantize_groups, step

log = logging.getLogger(__name__)

__all__ = ["Problem", "Trace", "TraceRecord", "build_problem", "run", "warm_start"]


@dataclass
class TraceRecord:
    step: int
    epoch: int
    loss: float
    f_lambda: float
    grad_norm: float
    step_proximity: float
    sign_change: float
    quantized_error: float
    error: Optional[float] = None
    layer_sign_change: Optional[list] = None
    final: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trace:
    seed: int
    algorithm: str
    records: list = field(default_factory=list)
    failed: bool = False
    message: str = ""
    full_precision_error: Optional[float] = None
    theta: Optional[np.ndarray] = None

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]


@dataclass
class Problem:
    """Objective plus evaluation hooks for one seed.

    ``evaluate(theta)`` returns the error metric (test error for
    classification, loss value for synthetic objectives).
    """

    objective: Objective
    evaluate: Callable[[np.ndarray], float]
    theta0: np.ndarray
    n_train: int
    dataset: Optional[Dataset] = None
    spec: Optional[MlpSpec] = None


def _dataset(cfg) -> Dataset:
    d = cfg.dataset
    if d.kind == "blobs":
        return gen_blobs(d.seed, d.n, d.classes, d.dim, d.spread, d.separation, standardize=d.standardize)
    return load_csv(d.path, d.label_column, seed=d.seed, standardize=d.standardize)


def build_problem(cfg, seed: int) -> Problem:
    d = cfg.dataset
    if d.kind == "objective":
        if d.name == "quadratic":
            obj = scalar_quadratic()
        elif d.name == "shifted_quadratic":
            obj = shifted_quadratic(d.center)
        else:
            obj = toy_pair(1 if d.name == "toy+1" else -1)
        if d.init is not None:
            theta0 = np.asarray(d.init, dtype=float).ravel()
        else:
            theta0 = np.random.default_rng(seed).uniform(-1, 1, obj.dim)
        return Problem(obj, obj.value, theta0, 1)

    ds = _dataset(cfg)
    xtr, ytr = ds.subset("train")
    xte, yte = ds.subset("test")
    if xte.shape[0] == 0:
        xte, yte = xtr, ytr
    spec = MlpSpec((ds.features.shape[1], *cfg.model.hidden, ds.num_classes), cfg.model.activation, cfg.model.loss)
    obj = mlp_objective(spec, xtr, ytr)
    theta0 = init_params(spec, np.random.default_rng(seed))
    return Problem(obj, lambda th: error_rate(spec, th, xte, yte), theta0, len(ytr), ds, spec)


def _inner(cfg):
    o = cfg.optimizer
    if o.name == "adam":
        return make_inner("adam", beta1=o.beta1, beta2=o.beta2, eps=o.eps)
    if o.name == "momentum":
        return make_inner("momentum", momentum=o.momentum)
    return make_inner("sgd")


def _epoch_batches(problem, cfg, seed, epoch):
    if problem.dataset is None:
        return [None]
    return batches(problem.n_train, cfg.batch_size, seed, epoch)


def warm_start(cfg, seed: int, problem: Optional[Problem] = None) -> np.ndarray:
    """Full-precision pre-training with Adam; returns the starting parameters."""
    problem = problem or build_problem(cfg, seed)
    theta = problem.theta0
    if cfg.warmstart.epochs <= 0:
        return theta
    state = init_state(theta, "fullprecision", inner=make_inner("adam"))
    sched = Schedule(eta=cfg.warmstart.eta)
    spec = cfg.reg_spec
    for epoch in range(cfg.warmstart.epochs):
        for b in _epoch_batches(problem, cfg, seed + 7919, epoch):
            step(state, problem.objective, spec, sched, b)
    return state.theta


def _layer_sign_change(problem, theta0, theta):
    if problem.spec is None:
        return None
    return [float(np.mean((theta0[g] >= 0) != (theta[g] >= 0))) for g in problem.objective.quant_groups()]


def _record(problem, spec, lam, state, theta0, epoch, final=False) -> TraceRecord:
    obj = problem.objective
    theta = state.theta
    loss, g = obj.value_and_grad(theta, None)
    mask = obj.mask()
    r = sum(reg_value(spec, theta[gr]) for gr in obj.quant_groups())
    f_lambda = loss + lam * r
    if spec.differentiable and lam > 0:
        g = g.copy()
        for gr in obj.quant_groups():
            g[gr] += lam * reg_grad(spec, theta[gr])
    prox_dist = 0.0 if state.prev_theta is None else float(np.linalg.norm(theta - state.prev_theta))
    qtheta = quantize_groups(theta, obj, spec)
    return TraceRecord(
        step=state.t,
        epoch=epoch,
        loss=float(loss),
        f_lambda=float(f_lambda),
        grad_norm=float(np.linalg.norm(g)),
        step_proximity=prox_dist,
        sign_change=float(np.mean((theta0[mask] >= 0) != (theta[mask] >= 0))),
        quantized_error=float(problem.evaluate(qtheta)),
        error=float(problem.evaluate(theta)),
        layer_sign_change=_layer_sign_change(problem, theta0, theta),
        final=final,
    )


def run(cfg, seed: Optional[int] = None, theta0=None, algorithm: Optional[str] = None) -> Trace:
    """Train one seed and return its trace.

    One record is emitted at epoch 0, every ``log_every`` epochs, and after
    the last step. Non-finite values abort the run with ``failed=True`` and
    the records gathered so far.
    """
    seed = cfg.seeds[0] if seed is None else seed
    algorithm = algorithm or cfg.algorithm
    problem = build_problem(cfg, seed)
    spec: RegSpec = cfg.reg_spec
    trace = Trace(seed, algorithm)
    try:
        start = warm_start(cfg, seed, problem) if theta0 is None else np.array(theta0, dtype=float)
    except NumericError as exc:
        trace.failed, trace.message = True, f"warm start diverged: {exc}"
        return trace
    trace.full_precision_error = float(problem.evaluate(start))

    steps_per_epoch = len(_epoch_batches(problem, cfg, seed, 0))
    sc = cfg.schedule
    sched = Schedule(
        eta=sc.eta,
        lam=sc.lam,
        homotopy=sc.homotopy,
        decay_steps=tuple(int(e) * steps_per_epoch for e in sc.decay_epochs),
        decay_factor=sc.decay_factor,
        freeze_step=None if sc.freeze_epoch is None else sc.freeze_epoch * steps_per_epoch,
    )
    state = init_state(start, algorithm, inner=_inner(cfg), prox_scaling=cfg.optimizer.prox_scaling)
    lam_now = lambda: 0.0 if algorithm == "fullprecision" else sched.lam_at(state.t)  # noqa: E731
    trace.records.append(_record(problem, spec, lam_now(), state, start, 0, final=cfg.epochs == 0))

    try:
        for epoch in range(1, cfg.epochs + 1):
            for b in _epoch_batches(problem, cfg, seed, epoch):
                step(state, problem.objective, spec, sched, b)
            last = epoch == cfg.epochs
            if last or epoch % cfg.log_every == 0:
                trace.records.append(_record(problem, spec, lam_now(), state, start, epoch, final=last))
    except NumericError as exc:
        log.warning("seed %d diverged: %s", seed, exc)
        trace.failed, trace.message = True, str(exc)
    trace.theta = state.theta
    return trace
