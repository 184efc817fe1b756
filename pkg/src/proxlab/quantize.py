"""Hard quantizers: sign, ternary (asymmetric TWN) and alternating multi-bit."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidCodebookError

__all__ = [
    "Codebook",
    "TernaryLevels",
    "alt_quantize",
    "row_wise",
    "sign",
    "sign_quantize",
    "ternary_quantize",
]


def _as_vector(theta) -> np.ndarray:
    x = np.asarray(theta, dtype=float)
    if x.ndim != 1:
        x = x.ravel()
    if x.size == 0:
        raise DimensionError("expected a nonempty parameter vector")
    return x


def sign(x) -> np.ndarray:
    """Componentwise sign with ``sign(0) = +1``."""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, 1.0, -1.0)


def sign_quantize(theta) -> np.ndarray:
    """Project onto ``{-1, +1}^d``."""
    return sign(_as_vector(theta))


@dataclass(frozen=True)
class TernaryLevels:
    delta: float
    pos_level: float
    neg_level: float


def ternary_quantize(theta) -> tuple[np.ndarray, TernaryLevels]:
    """Ternary quantizer with separate positive and negative levels.

    The threshold is ``0.7 * mean(|theta|)``; each level is the mean of the
    entries beyond the threshold on its side (0 when that side is empty).
    """
    x = _as_vector(theta)
    delta = 0.7 / x.size * float(np.sum(np.abs(x)))
    pos = x >= delta
    neg = (x <= -delta) & ~pos
    pos_level = float(np.mean(x[pos])) if pos.any() else 0.0
    neg_level = float(np.mean(x[neg])) if neg.any() else 0.0
    out = np.zeros_like(x)
    out[pos] = pos_level
    out[neg] = neg_level
    return out, TernaryLevels(delta, pos_level, neg_level)


@dataclass
class Codebook:
    """Multi-bit factorization ``theta ~ signs @ levels``.

    ``signs`` is ``(d, k)`` with entries in {-1, +1}; ``levels`` has length k.
    ``residuals`` records ``||theta - signs @ levels||^2`` after the
    initialization and after every alternating round.
    """

    levels: np.ndarray
    signs: np.ndarray
    residuals: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.levels.size

    def reconstruct(self) -> np.ndarray:
        return self.signs @ self.levels

    @property
    def residual(self) -> float:
        return self.residuals[-1]


def _fit_levels(signs: np.ndarray, x: np.ndarray) -> np.ndarray:
    if signs.shape[1] == 1:
        # exact least squares for a single column, and bitwise equal to mean|x|
        # when the column is sign(x)
        return np.array([np.mean(signs[:, 0] * x)])
    # minimum-norm solution when columns coincide
    return np.linalg.pinv(signs) @ x


def _best_signs(levels: np.ndarray, x: np.ndarray) -> np.ndarray:
    # every sign row is an independent choice among 2^k candidates;
    # +1-first ordering makes ties resolve like sign(0) = +1
    k = levels.size
    cands = np.array(list(itertools.product((1.0, -1.0), repeat=k)))
    values = cands @ levels
    err = (x[:, None] - values[None, :]) ** 2
    return cands[np.argmin(err, axis=1)]


def _greedy_init(x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    r = x.copy()
    signs = np.empty((x.size, k))
    levels = np.empty(k)
    for i in range(k):
        b = sign(r)
        a = float(np.mean(np.abs(r)))
        signs[:, i] = b
        levels[i] = a
        r = r - a * b
    return levels, signs


def alt_quantize(theta, k: int = 1, iters: int = 20, init: Codebook | None = None) -> Codebook:
    """Alternating multi-bit quantization of a vector.

    Starts from greedy residual peeling (or from ``init`` when given) and
    alternates an exact sign update given the levels with a least-squares
    level update given the signs. Neither half-step can increase the
    residual, so ``residuals`` is non-increasing.

    Parameters
    ----------
    theta : array_like
        Vector to quantize, length d.
    k : int
        Number of bits (levels).
    iters : int
        Number of alternating rounds.
    init : Codebook, optional
        Warm start; must have matching ``(d, k)``.
    """
    x = _as_vector(theta)
    if k < 1:
        raise InvalidCodebookError(f"bit count must be >= 1, got {k}")
    if k > x.size:
        raise InvalidCodebookError(f"bit count {k} exceeds dimension {x.size}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if init is not None:
        if init.signs.shape != (x.size, k):
            raise InvalidCodebookError("warm-start codebook has the wrong shape")
        levels, signs = init.levels.astype(float).copy(), init.signs.astype(float).copy()
    else:
        levels, signs = _greedy_init(x, k)

    residuals = [float(np.sum((x - signs @ levels) ** 2))]
    for _ in range(iters):
        if k == 1 and init is None:
            # (sign(x), mean|x|) is already the exact minimizer
            residuals.append(residuals[-1])
            continue
        new_signs = _best_signs(levels, x)
        new_levels = _fit_levels(new_signs, x)
        res = float(np.sum((x - new_signs @ new_levels) ** 2))
        if res < residuals[-1]:
            signs, levels = new_signs, new_levels
        else:
            # ties and pinv round-off keep the current codebook
            res = residuals[-1]
        residuals.append(res)
    return Codebook(levels=levels, signs=signs, residuals=residuals)


def row_wise(theta, k: int = 1, iters: int = 20) -> list[Codebook]:
    """Quantize each row of a matrix with its own codebook."""
    m = np.asarray(theta, dtype=float)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2 or m.size == 0:
        raise DimensionError("expected a nonempty 2-D matrix")
    return [alt_quantize(row, k, iters) for row in m]
