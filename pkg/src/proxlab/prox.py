"""Proximal operators ``argmin_x 1/2 ||x - theta||^2 + lam * R(x)``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .quantize import _as_vector, alt_quantize, sign, ternary_quantize
from .regularize import RegSpec, reg_value, smoothed_w

__all__ = [
    "ProxResult",
    "prox",
    "prox_binary_l1",
    "prox_binary_l2",
    "prox_kbit",
    "prox_smoothed_w",
    "prox_smoothed_w_exact",
    "prox_ternary",
    "soft_threshold",
]


@dataclass
class ProxResult:
    """Output of a prox operator.

    ``objective`` is ``1/2 ||point - theta||^2 + lam * R(point)``.
    Alternating operators also fill ``iterations`` and ``history`` (the joint
    objective after every half-step).
    """

    point: np.ndarray
    objective: float
    iterations: int = 0
    history: list[float] = field(default_factory=list)


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not lam >= 0:
        raise ValueError(f"prox strength must be nonnegative, got {lam}")
    return lam


def _objective(x, theta, lam, r) -> float:
    return 0.5 * float(np.sum((x - theta) ** 2)) + lam * r


def soft_threshold(x, center, lam) -> np.ndarray:
    """Shrink ``x`` toward ``center`` by ``lam``, stopping at ``center``."""
    x = np.asarray(x, dtype=float)
    d = x - center
    # step from x rather than from center so tiny entries keep their sign
    return np.where(np.abs(d) > lam, x - np.sign(d) * lam, center)


def prox_binary_l1(theta, lam: float) -> ProxResult:
    x = _as_vector(theta)
    lam = _check_lam(lam)
    s = sign(x)
    out = soft_threshold(x, s, lam)
    r = reg_value(RegSpec("binary-l1"), out)
    return ProxResult(out, _objective(out, x, lam, r))


def prox_binary_l2(theta, lam: float) -> ProxResult:
    """Exact prox of ``sum_j min((x_j - 1)^2, (x_j + 1)^2)``.

    The squared penalty has curvature 2, so the minimizer is
    ``(theta + 2 lam sign(theta)) / (1 + 2 lam)``.
    """
    x = _as_vector(theta)
    lam = _check_lam(lam)
    out = (x + 2 * lam * sign(x)) / (1 + 2 * lam)
    r = reg_value(RegSpec("binary-l2"), out)
    return ProxResult(out, _objective(out, x, lam, r))


def prox_kbit(theta, lam: float, k: int, rounds: int = 2, iters: int = 20) -> ProxResult:
    """Alternating prox for the k-bit squared-distance regularizer.

    Alternates the closed-form interpolation
    ``x = (theta + 2 lam B a) / (1 + 2 lam)`` with re-quantizing ``x``.
    Re-quantization is warm-started from the previous codebook and the
    better of that and a fresh greedy start is kept, which keeps the joint
    objective non-increasing at every half-step.
    """
    x0 = _as_vector(theta)
    lam = _check_lam(lam)
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    cb = alt_quantize(x0, k, iters)
    x = x0.copy()
    history = [_objective(x, x0, lam, cb.residual)]
    for _ in range(rounds):
        x = (x0 + 2 * lam * cb.reconstruct()) / (1 + 2 * lam)
        history.append(_objective(x, x0, lam, float(np.sum((x - cb.reconstruct()) ** 2))))
        warm = alt_quantize(x, k, iters, init=cb)
        fresh = alt_quantize(x, k, iters)
        cb = fresh if fresh.residual < warm.residual else warm
        history.append(_objective(x, x0, lam, cb.residual))
    return ProxResult(x, history[-1], iterations=rounds, history=history)


def prox_ternary(theta, lam: float, rounds: int = 2) -> ProxResult:
    """Approximate ternary prox: re-quantize and interpolate, ``rounds`` times."""
    x0 = _as_vector(theta)
    lam = _check_lam(lam)
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    x = x0.copy()
    history = []
    for _ in range(rounds):
        q, _ = ternary_quantize(x)
        x = (x0 + 2 * lam * q) / (1 + 2 * lam)
        history.append(_objective(x, x0, lam, float(np.sum((x - q) ** 2))))
    r = reg_value(RegSpec("ternary-l2"), x)
    return ProxResult(x, _objective(x, x0, lam, r), iterations=rounds, history=history)


def prox_smoothed_w(theta, lam: float, eps: float) -> ProxResult:
    """Closed-form prox of the smoothed W regularizer.

    Valid for ``lam >= 1`` and ``|theta| <= 1``, where the minimizer always
    sits in the quadratic well around ``sign(theta)``:
    ``(eps * theta + lam * sign(theta)) / (eps + lam)``.
    """
    x = _as_vector(theta)
    lam = float(lam)
    if lam < 1:
        raise DomainError(f"closed form needs lam >= 1, got {lam}")
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    if np.any(np.abs(x) > 1):
        raise DomainError("closed form needs |theta| <= 1 in every coordinate")
    out = (eps * x + lam * sign(x)) / (eps + lam)
    r = float(np.sum(smoothed_w(out, eps)))
    return ProxResult(out, _objective(out, x, lam, r))


def _smoothed_w_candidates(a: np.ndarray, lam: float, eps: float) -> np.ndarray:
    # stationary point of each quadratic piece, clipped into the piece, plus
    # the breakpoints; the global minimizer over t >= 0 is among them
    curv = 1 - lam / eps
    first = a / curv if curv != 0 else np.zeros_like(a)
    stat = np.stack(
        [
            np.clip(first, 0.0, eps),
            np.clip(a + lam, eps, 1 - eps),
            np.clip((eps * a + lam) / (eps + lam), 1 - eps, 1 + eps),
            np.maximum(a - lam, 1 + eps),
        ],
        axis=1,
    )
    edges = np.broadcast_to(np.array([0.0, eps, 1 - eps, 1 + eps]), stat.shape)
    return np.concatenate([stat, edges], axis=1)


def prox_smoothed_w_exact(theta, lam: float, eps: float) -> ProxResult:
    """Exact prox of the smoothed W regularizer for any ``lam >= 0``.

    The minimizer shares the sign of ``theta`` (sign(0) = +1), so the scalar
    problem is solved on ``t >= 0`` by comparing every piece's stationary
    point with the breakpoints.
    """
    x = _as_vector(theta)
    lam = _check_lam(lam)
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    a = np.abs(x)
    cand = _smoothed_w_candidates(a, lam, eps)
    vals = 0.5 * (cand - a[:, None]) ** 2 + lam * smoothed_w(cand, eps)
    t = cand[np.arange(a.size), np.argmin(vals, axis=1)]
    out = sign(x) * t
    r = float(np.sum(smoothed_w(out, eps)))
    return ProxResult(out, _objective(out, x, lam, r))


def prox(spec: RegSpec, theta, lam: float, rounds: int = 2) -> ProxResult:
    """Dispatch to the prox operator matching ``spec``.

    ``smoothed-w`` uses the closed form where it is defined and the exact
    piecewise solver everywhere else; the two agree on the shared domain.
    """
    if spec.kind == "binary-l1":
        return prox_binary_l1(theta, lam)
    if spec.kind == "binary-l2":
        return prox_binary_l2(theta, lam)
    if spec.kind == "kbit-l2":
        return prox_kbit(theta, lam, spec.k, rounds=rounds, iters=spec.iters)
    if spec.kind == "ternary-l2":
        return prox_ternary(theta, lam, rounds=rounds)
    x = _as_vector(theta)
    if lam >= 1 and np.all(np.abs(x) <= 1):
        return prox_smoothed_w(x, lam, spec.epsilon)
    return prox_smoothed_w_exact(x, lam, spec.epsilon)
