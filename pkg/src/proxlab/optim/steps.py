"""ProxQuant, BinaryConnect and lazy prox-gradient steps, plus inner optimizers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import NumericError, UnsupportedOperationError
from ..model import Objective
from ..prox import prox, soft_threshold
from ..quantize import sign
from ..regularize import RegSpec, hard_quantize

__all__ = [
    "ALGORITHMS",
    "Adam",
    "Momentum",
    "OptimizerState",
    "SGD",
    "Schedule",
    "apply_prox",
    "freeze_if_due",
    "init_state",
    "make_inner",
    "quantize_groups",
    "step",
    "step_binaryconnect",
    "step_fullprecision",
    "step_lazyprox",
    "step_proxquant",
    "signs_history",
    "trajectory",
]

ALGORITHMS = ("proxquant", "binaryconnect", "lazyprox", "fullprecision")

BINARY = RegSpec("binary-l1")


@dataclass(frozen=True)
class Schedule:
    """Learning-rate and regularization-strength sequences.

    With ``homotopy`` the strength grows as ``lam * t`` (t counts optimizer
    steps); otherwise it is the constant ``lam``. The learning rate is
    multiplied by ``decay_factor`` at every step listed in ``decay_steps``.
    At ``freeze_step`` the quantized coordinates are replaced by their hard
    quantization and held fixed from then on.
    """

    eta: float = 0.01
    lam: float = 0.0
    homotopy: bool = False
    decay_steps: tuple[int, ...] = ()
    decay_factor: float = 0.1
    freeze_step: Optional[int] = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        if self.lam < 0:
            raise ValueError(f"regularization strength must be nonnegative, got {self.lam}")

    def eta_at(self, t: int) -> float:
        n = sum(1 for s in self.decay_steps if t >= s)
        return self.eta * self.decay_factor**n

    def lam_at(self, t: int) -> float:
        return self.lam * t if self.homotopy else self.lam


class SGD:
    name = "sgd"

    def update(self, theta, grad, lr, active=None):
        d = lr * grad
        if active is not None:
            d = np.where(active, d, 0.0)
        return theta - d

    def effective_lr(self, lr):
        return lr


class Momentum(SGD):
    name = "momentum"

    def __init__(self, momentum: float = 0.9):
        self.momentum = momentum
        self.buf = None

    def update(self, theta, grad, lr, active=None):
        if self.buf is None:
            self.buf = np.zeros_like(theta)
        g = grad if active is None else np.where(active, grad, 0.0)
        self.buf = self.momentum * self.buf + g
        d = lr * self.buf
        if active is not None:
            d = np.where(active, d, 0.0)
        return theta - d


class Adam:
    """Adam with bias correction; ``lr`` is supplied per step by the schedule."""

    name = "adam"

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = self.v = None
        self.count = 0

    def update(self, theta, grad, lr, active=None):
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        g = grad if active is None else np.where(active, grad, 0.0)
        self.count += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g * g
        mhat = self.m / (1 - self.beta1**self.count)
        vhat = self.v / (1 - self.beta2**self.count)
        d = lr * mhat / (np.sqrt(vhat) + self.eps)
        if active is not None:
            d = np.where(active, d, 0.0)
        return theta - d

    def effective_lr(self, lr):
        if self.v is None:
            return lr
        vhat = self.v / (1 - self.beta2 ** max(self.count, 1))
        return lr / (np.sqrt(vhat) + self.eps)


def make_inner(name: str = "sgd", **kw):
    name = name.lower()
    if name == "sgd":
        return SGD()
    if name == "momentum":
        return Momentum(**kw)
    if name == "adam":
        return Adam(**kw)
    raise ValueError(f"unknown inner optimizer {name!r}")


@dataclass
class OptimizerState:
    """Mutable training state owned by a single run.

    ``eval_point`` is where the most recent gradient was evaluated, which is
    what distinguishes the three algorithms.
    """

    theta: np.ndarray
    inner: object = field(default_factory=SGD)
    algorithm: str = "proxquant"
    t: int = 0
    frozen: bool = False
    prox_scaling: str = "base"
    eval_point: Optional[np.ndarray] = None
    prev_theta: Optional[np.ndarray] = None


def init_state(theta0, algorithm: str = "proxquant", inner=None, prox_scaling: str = "base") -> OptimizerState:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if prox_scaling not in ("base", "adaptive"):
        raise ValueError(f"prox_scaling must be 'base' or 'adaptive', got {prox_scaling!r}")
    theta = np.array(theta0, dtype=float).ravel()
    return OptimizerState(theta, inner if inner is not None else SGD(), algorithm, prox_scaling=prox_scaling)


def quantize_groups(theta, objective: Objective, spec: RegSpec = BINARY) -> np.ndarray:
    """Copy of ``theta`` with every quantized group hard-quantized."""
    out = np.array(theta, dtype=float)
    for g in objective.quant_groups():
        out[g] = hard_quantize(spec, out[g])
    return out


def apply_prox(theta, objective: Objective, spec: RegSpec, strength, rounds: int = 2) -> np.ndarray:
    """Apply ``prox_{strength R}`` to every quantized group of ``theta``.

    ``strength`` may be an array (per-coordinate) for the binary kinds only.
    """
    out = np.array(theta, dtype=float)
    vector = np.ndim(strength) > 0
    for g in objective.quant_groups():
        if not vector:
            out[g] = prox(spec, out[g], strength, rounds=rounds).point
        elif spec.kind == "binary-l1":
            out[g] = soft_threshold(out[g], sign(out[g]), strength[g])
        elif spec.kind == "binary-l2":
            out[g] = (out[g] + 2 * strength[g] * sign(out[g])) / (1 + 2 * strength[g])
        else:
            raise UnsupportedOperationError(f"per-coordinate prox strength is not supported for {spec.kind!r}")
    return out


def freeze_if_due(state: OptimizerState, objective: Objective, spec: RegSpec, schedule: Schedule) -> bool:
    """Hard-quantize the quantized groups once ``freeze_step`` is reached."""
    if state.frozen or schedule.freeze_step is None or state.t < schedule.freeze_step:
        return False
    state.theta = quantize_groups(state.theta, objective, spec)
    state.frozen = True
    return True


def _active(state, objective):
    return ~objective.mask() if state.frozen else None


def _check_finite(theta, t):
    if not np.all(np.isfinite(theta)):
        raise NumericError(f"parameters became non-finite at step {t}")


def _finish(state, new_theta):
    _check_finite(new_theta, state.t)
    state.prev_theta = state.theta
    state.theta = new_theta
    state.t += 1
    return state


def step_proxquant(state: OptimizerState, objective: Objective, spec: RegSpec, schedule: Schedule,
                   batch=None, rounds: int = 2) -> OptimizerState:
    """Gradient step on the full-precision parameters followed by a prox step.

    The prox strength is ``eta_t * lam_t``; with ``prox_scaling="adaptive"``
    the base rate is replaced by the inner optimizer's per-coordinate rate.
    """
    freeze_if_due(state, objective, spec, schedule)
    t = state.t
    eta = schedule.eta_at(t)
    state.eval_point = state.theta
    g = objective.grad(state.theta, batch)
    theta = state.inner.update(state.theta, g, eta, _active(state, objective))
    lam = schedule.lam_at(t)
    if not state.frozen and lam > 0:
        rate = state.inner.effective_lr(eta) if state.prox_scaling == "adaptive" else eta
        theta = apply_prox(theta, objective, spec, rate * lam, rounds=rounds)
    return _finish(state, theta)


def step_binaryconnect(state: OptimizerState, objective: Objective, schedule: Schedule,
                       batch=None, spec: RegSpec = BINARY) -> OptimizerState:
    """Straight-through step: gradient at the quantized point, update on theta.

    Only the quantized groups are quantized for the gradient evaluation;
    biases pass through at full precision.
    """
    freeze_if_due(state, objective, spec, schedule)
    eta = schedule.eta_at(state.t)
    state.eval_point = quantize_groups(state.theta, objective, spec)
    g = objective.grad(state.eval_point, batch)
    theta = state.inner.update(state.theta, g, eta, _active(state, objective))
    return _finish(state, theta)


def step_lazyprox(state: OptimizerState, objective: Objective, spec: RegSpec, schedule: Schedule,
                  batch=None, rounds: int = 2) -> OptimizerState:
    """Gradient at ``prox_{lam_t R}(theta)``, accumulated on theta."""
    freeze_if_due(state, objective, spec, schedule)
    eta = schedule.eta_at(state.t)
    lam = schedule.lam_at(state.t)
    if state.frozen or lam == 0:
        state.eval_point = state.theta
    else:
        state.eval_point = apply_prox(state.theta, objective, spec, lam, rounds=rounds)
    g = objective.grad(state.eval_point, batch)
    theta = state.inner.update(state.theta, g, eta, _active(state, objective))
    return _finish(state, theta)


def step_fullprecision(state: OptimizerState, objective: Objective, schedule: Schedule, batch=None) -> OptimizerState:
    eta = schedule.eta_at(state.t)
    state.eval_point = state.theta
    theta = state.inner.update(state.theta, objective.grad(state.theta, batch), eta)
    return _finish(state, theta)


def step(state: OptimizerState, objective: Objective, spec: RegSpec, schedule: Schedule, batch=None) -> OptimizerState:
    """Dispatch on ``state.algorithm``."""
    if state.algorithm == "proxquant":
        return step_proxquant(state, objective, spec, schedule, batch)
    if state.algorithm == "binaryconnect":
        return step_binaryconnect(state, objective, schedule, batch, spec=spec)
    if state.algorithm == "lazyprox":
        return step_lazyprox(state, objective, spec, schedule, batch)
    return step_fullprecision(state, objective, schedule, batch)


def trajectory(state: OptimizerState, objective: Objective, spec: RegSpec, schedule: Schedule,
               steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Run ``steps`` full-batch steps; return iterates and gradient points.

    Row ``t`` of the first array is theta_t (row 0 is the start); row ``t`` of
    the second is where the gradient of step ``t`` was taken.
    """
    thetas = [state.theta.copy()]
    points = []
    for _ in range(steps):
        step(state, objective, spec, schedule)
        thetas.append(state.theta.copy())
        points.append(state.eval_point.copy())
    return np.array(thetas), np.array(points)


def signs_history(thetas: Sequence[np.ndarray]) -> np.ndarray:
    return np.where(np.asarray(thetas) >= 0, 1, -1)
