"""Quantization-inducing regularizers (distance to a quantized set)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UnsupportedOperationError
from .quantize import _as_vector, alt_quantize, sign, ternary_quantize

__all__ = [
    "KINDS",
    "RegSpec",
    "hard_quantize",
    "reg_grad",
    "reg_value",
    "smoothed_w",
    "smoothed_w_grad",
]

KINDS = ("binary-l1", "binary-l2", "kbit-l2", "ternary-l2", "smoothed-w")


@dataclass(frozen=True)
class RegSpec:
    """Which regularizer to use.

    ``k`` is required for ``kbit-l2`` only and ``epsilon`` (in (0, 1/2])
    for ``smoothed-w`` only.
    """

    kind: str
    k: Optional[int] = None
    epsilon: Optional[float] = None
    iters: int = 20

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer kind {self.kind!r}; expected one of {KINDS}")
        if (self.k is not None) != (self.kind == "kbit-l2"):
            raise ValueError("k must be given exactly when kind is 'kbit-l2'")
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if (self.epsilon is not None) != (self.kind == "smoothed-w"):
            raise ValueError("epsilon must be given exactly when kind is 'smoothed-w'")
        if self.epsilon is not None and not 0 < self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2], got {self.epsilon}")

    @property
    def differentiable(self) -> bool:
        return self.kind == "smoothed-w"


def smoothed_w(theta, eps: float) -> np.ndarray:
    """Per-coordinate smoothed W-shaped regularizer.

    Even, piecewise quadratic/linear, zero exactly at +-1, with breakpoints
    at ``eps``, ``1 - eps`` and ``1 + eps``.
    """
    a = np.abs(np.asarray(theta, dtype=float))
    return np.select(
        [a < eps, a < 1 - eps, a < 1 + eps],
        [-(a**2) / (2 * eps) + 1 - eps, -a + 1 - eps / 2, (a - 1) ** 2 / (2 * eps)],
        default=a - 1 - eps / 2,
    )


def smoothed_w_grad(theta, eps: float) -> np.ndarray:
    x = np.asarray(theta, dtype=float)
    a = np.abs(x)
    da = np.select(
        [a < eps, a < 1 - eps, a < 1 + eps],
        [-a / eps, -np.ones_like(a), (a - 1) / eps],
        default=1.0,
    )
    # the |.| kink at 0 is harmless: da vanishes there
    return np.sign(x) * da


def hard_quantize(spec: RegSpec, theta) -> np.ndarray:
    """Nearest point of the quantized set that ``spec`` penalizes distance to."""
    x = _as_vector(theta)
    if spec.kind in ("binary-l1", "binary-l2", "smoothed-w"):
        return sign(x)
    if spec.kind == "ternary-l2":
        return ternary_quantize(x)[0]
    return alt_quantize(x, spec.k, spec.iters).reconstruct()


def reg_value(spec: RegSpec, theta) -> float:
    """Regularizer value R(theta).

    For ``kbit-l2`` and ``ternary-l2`` the distance is measured to the output
    of the corresponding (heuristic) quantizer, so the value is an upper
    bound on the true infimum.
    """
    x = _as_vector(theta)
    if spec.kind == "binary-l1":
        return float(np.sum(np.minimum(np.abs(x - 1), np.abs(x + 1))))
    if spec.kind == "binary-l2":
        return float(np.sum(np.minimum((x - 1) ** 2, (x + 1) ** 2)))
    if spec.kind == "smoothed-w":
        return float(np.sum(smoothed_w(x, spec.epsilon)))
    return float(np.sum((x - hard_quantize(spec, x)) ** 2))


def reg_grad(spec: RegSpec, theta) -> np.ndarray:
    if not spec.differentiable:
        raise UnsupportedOperationError(f"regularizer {spec.kind!r} is not differentiable")
    return smoothed_w_grad(_as_vector(theta), spec.epsilon)
