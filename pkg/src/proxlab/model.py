"""Differentiable objectives: 1-D test functions and a small MLP."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, NumericError
from .quantize import sign

__all__ = [
    "MlpSpec",
    "Objective",
    "error_rate",
    "init_params",
    "mlp_forward_backward",
    "mlp_objective",
    "mlp_predict",
    "scalar_quadratic",
    "shifted_quadratic",
    "toy_pair",
]


@dataclass
class Objective:
    """A loss with its gradient.

    ``value_and_grad(theta, batch)`` returns ``(loss, grad)``; ``batch`` is an
    index array for data-backed objectives and ignored otherwise.
    ``groups`` lists the parameter slices that are quantized (all of theta
    when None). ``smoothness`` is the gradient Lipschitz constant when known.
    """

    dim: int
    value_and_grad: Callable[[np.ndarray, Optional[np.ndarray]], tuple[float, np.ndarray]]
    smoothness: Optional[float] = None
    groups: Optional[tuple[slice, ...]] = None
    name: str = ""
    extras: dict = field(default_factory=dict)

    def value(self, theta, batch=None) -> float:
        return self.value_and_grad(np.asarray(theta, dtype=float), batch)[0]

    def grad(self, theta, batch=None) -> np.ndarray:
        return self.value_and_grad(np.asarray(theta, dtype=float), batch)[1]

    def quant_groups(self) -> tuple[slice, ...]:
        return self.groups if self.groups is not None else (slice(0, self.dim),)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.dim, dtype=bool)
        for g in self.quant_groups():
            m[g] = True
        return m


def scalar_quadratic() -> Objective:
    """``L(theta) = theta^2 / 2`` in one dimension."""

    def vg(theta, batch=None):
        return 0.5 * float(theta @ theta), theta.copy()

    return Objective(1, vg, smoothness=1.0, name="quadratic")


def shifted_quadratic(center) -> Objective:
    """``L(theta) = ||theta - center||^2 / 2``."""
    c = np.asarray(center, dtype=float).ravel()

    def vg(theta, batch=None):
        r = theta - c
        return 0.5 * float(r @ r), r

    return Objective(c.size, vg, smoothness=1.0, name="shifted_quadratic", extras={"center": c})


def toy_pair(which: int) -> Objective:
    """``f(x) = |x + which/2| - 1/2``; subgradient uses sign(0) = +1.

    The two members have identical derivatives at +-1 but opposite
    minimizers over {-1, +1}: -1 for ``which=+1`` and +1 for ``which=-1``.
    """
    if which not in (1, -1):
        raise ValueError(f"which must be +1 or -1, got {which}")
    shift = 0.5 * which

    def vg(theta, batch=None):
        return float(np.sum(np.abs(theta + shift) - 0.5)), sign(theta + shift)

    return Objective(1, vg, name=f"toy{which:+d}")


@dataclass(frozen=True)
class MlpSpec:
    """Fully connected network; ``widths = (inputs, hidden..., outputs)``."""

    widths: tuple[int, ...]
    activation: str = "tanh"
    loss: str = "cross-entropy"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise ValueError(f"invalid layer widths {self.widths}")
        if self.activation not in ("tanh", "relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.loss not in ("cross-entropy", "squared"):
            raise ValueError(f"unknown loss {self.loss!r}")

    @property
    def layers(self) -> list[tuple[int, int]]:
        return list(zip(self.widths[:-1], self.widths[1:]))

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layers)

    def slices(self) -> list[tuple[slice, slice]]:
        """(weight, bias) slices of the flat parameter vector, per layer."""
        out, pos = [], 0
        for i, o in self.layers:
            w = slice(pos, pos + i * o)
            b = slice(w.stop, w.stop + o)
            out.append((w, b))
            pos = b.stop
        return out

    def weight_groups(self) -> tuple[slice, ...]:
        # biases stay full precision
        return tuple(w for w, _ in self.slices())

    def unpack(self, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        if params.shape != (self.n_params,):
            raise DimensionError(f"expected {self.n_params} parameters, got {params.shape}")
        return [(params[w].reshape(i, o), params[b]) for (w, b), (i, o) in zip(self.slices(), self.layers)]


def init_params(spec: MlpSpec, rng: np.random.Generator) -> np.ndarray:
    parts = []
    for i, o in spec.layers:
        parts.append(rng.normal(0.0, 1.0 / np.sqrt(i), size=i * o))
        parts.append(np.zeros(o))
    return np.concatenate(parts)


def _act(spec, z):
    return np.tanh(z) if spec.activation == "tanh" else np.maximum(z, 0.0)


def _act_grad(spec, z, h):
    return 1.0 - h**2 if spec.activation == "tanh" else (z > 0).astype(float)


def _forward(spec, layers, x):
    hs, zs = [x], []
    for idx, (w, b) in enumerate(layers):
        with np.errstate(invalid="ignore", over="ignore"):
            z = hs[-1] @ w + b
        if not np.all(np.isfinite(z)):
            raise NumericError(f"non-finite pre-activation in layer {idx}", layer=idx)
        zs.append(z)
        hs.append(_act(spec, z) if idx < len(layers) - 1 else z)
    return hs, zs


def mlp_predict(spec: MlpSpec, params, x) -> np.ndarray:
    hs, _ = _forward(spec, spec.unpack(np.asarray(params, dtype=float)), np.asarray(x, dtype=float))
    return hs[-1]


def error_rate(spec: MlpSpec, params, x, y) -> float:
    if len(y) == 0:
        return float("nan")
    return float(np.mean(np.argmax(mlp_predict(spec, params, x), axis=1) != y))


def mlp_forward_backward(spec: MlpSpec, params, x, y) -> tuple[float, np.ndarray]:
    """Mean loss over the batch and its gradient w.r.t. the flat parameters."""
    params = np.asarray(params, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if x.shape[0] == 0:
        raise DimensionError("empty batch")
    layers = spec.unpack(params)
    hs, zs = _forward(spec, layers, x)
    n = x.shape[0]
    out = hs[-1]
    onehot = np.zeros_like(out)
    onehot[np.arange(n), y] = 1.0
    if spec.loss == "cross-entropy":
        shifted = out - out.max(axis=1, keepdims=True)
        logz = np.log(np.sum(np.exp(shifted), axis=1))
        loss = float(np.mean(logz - shifted[np.arange(n), y]))
        dz = (np.exp(shifted - logz[:, None]) - onehot) / n
    else:
        r = out - onehot
        loss = 0.5 * float(np.sum(r * r)) / n
        dz = r / n
    if not np.isfinite(loss):
        raise NumericError("non-finite loss", layer=len(layers) - 1)

    grad = np.empty_like(params)
    for idx in range(len(layers) - 1, -1, -1):
        w, _ = layers[idx]
        ws, bs = spec.slices()[idx]
        grad[ws] = (hs[idx].T @ dz).ravel()
        grad[bs] = dz.sum(axis=0)
        if idx > 0:
            dz = (dz @ w.T) * _act_grad(spec, zs[idx - 1], hs[idx])
    return loss, grad


def mlp_objective(spec: MlpSpec, x, y) -> Objective:
    """Objective over a fixed data matrix; ``batch`` selects rows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)

    def vg(theta, batch=None):
        if batch is None:
            return mlp_forward_backward(spec, theta, x, y)
        return mlp_forward_backward(spec, theta, x[batch], y[batch])

    return Objective(spec.n_params, vg, groups=spec.weight_groups(), name="mlp", extras={"spec": spec})

