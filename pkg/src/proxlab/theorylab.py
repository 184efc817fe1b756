"""Numerical checks of the convergence and non-convergence results.

Every ``verify_*`` function is deterministic given its arguments and returns a
:class:`VerificationReport` whose status is computed from the measured
quantities and the tolerances stored alongside them.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DimensionError
from .model import Objective, scalar_quadratic, shifted_quadratic, toy_pair
from .optim import Schedule, build_problem, init_state, run, trajectory, warm_start
from .quantize import sign
from .regularize import RegSpec, smoothed_w, smoothed_w_grad

__all__ = [
    "VerificationReport",
    "composite_minimum",
    "longest_constant_run",
    "sign_change",
    "sign_change_experiment",
    "verify_theorem1",
    "verify_theorem2",
    "verify_theorem3",
    "verify_toy_failure",
    "REGISTRY",
    "run_named",
]


@dataclass
class VerificationReport:
    name: str
    status: str  # "pass" | "fail" | "inconclusive"
    measured: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    seed: Optional[int] = None
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _status(ok: bool, inconclusive: bool = False) -> str:
    if not ok:
        return "fail"
    return "inconclusive" if inconclusive else "pass"


def sign_change(theta1, theta2) -> float:
    """Fraction of coordinates whose signs differ (sign(0) = +1)."""
    a = np.asarray(theta1, dtype=float).ravel()
    b = np.asarray(theta2, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise DimensionError("empty parameter vectors")
    return float(np.sum(np.abs(sign(a) - sign(b)))) / (2 * a.size)


def longest_constant_run(signs: np.ndarray) -> int:
    """Length of the longest stretch of consecutive identical sign rows."""
    signs = np.asarray(signs)
    if len(signs) == 0:
        return 0
    best = cur = 1
    for prev, nxt in zip(signs[:-1], signs[1:]):
        cur = cur + 1 if np.array_equal(prev, nxt) else 1
        best = max(best, cur)
    return best


# --- toy failure case -------------------------------------------------------

def verify_toy_failure(theta0: float = 0.3, eta: float = 0.1, steps: int = 1000, lam_rate: float = 0.05) -> VerificationReport:
    """BinaryConnect cannot tell the two toy functions apart; ProxQuant can."""
    binary = RegSpec("binary-l1")
    bc_signs, bc_answer, pq_answer, wrong = {}, {}, {}, {}
    for which in (1, -1):
        obj = toy_pair(which)
        th, _ = trajectory(init_state([theta0], "binaryconnect"), obj, binary, Schedule(eta=eta), steps)
        bc_signs[which] = sign(th[:, 0])
        bc_answer[which] = float(sign(th[-1:, 0])[0])
        sched = Schedule(eta=eta, lam=lam_rate, homotopy=True)
        th, _ = trajectory(init_state([theta0], "proxquant"), obj, binary, sched, steps)
        pq_answer[which] = float(sign(th[-1:, 0])[0])
        best = min((-1.0, 1.0), key=lambda s: obj.value([s]))
        wrong[which] = bc_answer[which] != best

    th, _ = trajectory(init_state([-1.0], "proxquant"), toy_pair(1), binary,
                       Schedule(eta=eta, lam=lam_rate, homotopy=True), steps)
    from_optimum = sign(th[:, 0])

    identical = bool(np.array_equal(bc_signs[1], bc_signs[-1]))
    measured = {
        "bc_signs_identical": identical,
        "bc_answer": {"+1": bc_answer[1], "-1": bc_answer[-1]},
        "bc_wrong_on_some": bool(wrong[1] or wrong[-1]),
        "pq_answer": {"+1": pq_answer[1], "-1": pq_answer[-1]},
        "pq_from_optimum_final": float(from_optimum[-1]),
    }
    ok = identical and measured["bc_wrong_on_some"] and pq_answer[1] == -1.0 and pq_answer[-1] == 1.0
    ok = ok and from_optimum[-1] == -1.0
    return VerificationReport("toy_failure", _status(ok), measured,
                              {"theta0": theta0, "eta": eta, "steps": steps, "lam_rate": lam_rate})


# --- Theorem 1 --------------------------------------------------------------

def _golden_refine(f, a: float, b: float, c: float) -> tuple[float, float]:
    res = minimize_scalar(f, bracket=(a, b, c), method="golden", tol=1e-12)
    return float(res.x), float(res.fun)


def composite_minimum(center: float, lam: float, eps: float, width: float = 1e-6) -> float:
    """Global minimum of ``(t - center)^2 / 2 + lam * R(t)`` over the reals.

    A grid of spacing ``width`` covering every minimizer locates the basin,
    then golden-section search refines inside the neighbouring grid cells.
    """
    lo = min(-1.5, center - 1.0) - lam
    hi = max(1.5, center + 1.0) + lam
    grid = np.arange(lo, hi + width, width)
    vals = 0.5 * (grid - center) ** 2 + lam * smoothed_w(grid, eps)
    i = int(np.argmin(vals))
    best = float(vals[i])
    if 0 < i < grid.size - 1 and vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
        f = lambda t: 0.5 * (t - center) ** 2 + lam * float(smoothed_w(t, eps))  # noqa: E731
        _, fx = _golden_refine(f, grid[i - 1], grid[i], grid[i + 1])
        best = min(best, fx)
    return best


def _theorem1_composites(seed: int):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-0.5, 0.5, 3)
    return [("quadratic", scalar_quadratic(), np.zeros(1)),
            ("shifted_quadratic", shifted_quadratic(centers), centers)]


def verify_theorem1(T_values: Sequence[int] = (10, 100, 1000), n_inits: int = 20, seed: int = 0,
                    eps: float = 0.2, lam: float = 1.0, inits: Optional[Sequence] = None) -> VerificationReport:
    """Check the stationarity bound with constant 18 and the proximity bound.

    ProxQuant runs with batch gradients, step ``1/(2 beta)`` and fixed
    ``lam`` on quadratic + smoothed-W composites. ``F*`` is located per
    coordinate since the composites are separable.
    """
    spec = RegSpec("smoothed-w", epsilon=eps)
    rng = np.random.default_rng(seed)
    T_values = sorted(int(T) for T in T_values)
    Tmax = T_values[-1]
    rows, ok = [], True
    atol = 1e-12
    for name, obj, center in _theorem1_composites(seed):
        beta = obj.smoothness
        eta = 1.0 / (2 * beta)
        fstar = sum(composite_minimum(float(c), lam, eps) for c in center)
        starts = inits if inits is not None else rng.uniform(-1, 1, (n_inits, obj.dim))
        for th0 in starts:
            th0 = np.broadcast_to(np.asarray(th0, dtype=float), (obj.dim,))
            thetas, _ = trajectory(init_state(th0, "proxquant"), obj, spec, Schedule(eta=eta, lam=lam), Tmax)
            F = lambda th: obj.value(th) + lam * float(np.sum(smoothed_w(th, eps)))  # noqa: E731
            gap = F(thetas[0]) - fstar
            moves = np.linalg.norm(np.diff(thetas, axis=0), axis=1)  # moves[t-1] = |theta_t - theta_{t-1}|
            for T in T_values:
                t_best = int(np.argmin(moves[:T])) + 1
                tb = thetas[t_best]
                gF = obj.grad(tb) + lam * smoothed_w_grad(tb, eps)
                lhs = float(gF @ gF)
                rhs = 18 * beta * gap / T
                prox_lhs = float(moves[t_best - 1] ** 2)
                prox_rhs = 2 * gap / (beta * T)
                good = lhs <= rhs + atol and prox_lhs <= prox_rhs + atol
                ok &= good
                rows.append({"composite": name, "theta0": th0.tolist(), "T": T, "lhs": lhs, "rhs": rhs,
                             "ratio": lhs / rhs if rhs > 0 else 0.0, "proximity_lhs": prox_lhs,
                             "proximity_rhs": prox_rhs, "ok": good})
    measured = {"max_ratio": max(r["ratio"] for r in rows),
                "max_proximity_ratio": max(r["proximity_lhs"] / r["proximity_rhs"] if r["proximity_rhs"] > 0 else 0.0
                                           for r in rows),
                "runs": rows}
    return VerificationReport("theorem1", _status(ok), measured,
                              {"C": 18, "atol": atol, "eps": eps, "lam": lam, "T_values": T_values}, seed=seed)


# --- Theorem 2 --------------------------------------------------------------

def oscillation_start(eta: float, lam: float, eps: float) -> float:
    """Initialization on which lazy prox-gradient flips sign every step."""
    return eta * lam / (2 * lam + (2 - eta) * eps)


def verify_theorem2(etas: Sequence[float] = (0.1, 0.25, 0.5), eps: float = 0.2, lam: float = 1.0,
                    steps: int = 1000, pq_tol: float = 1e-6, tol: float = 1e-10) -> VerificationReport:
    """Lazy prox-gradient oscillates between +-theta0; ProxQuant converges."""
    spec = RegSpec("smoothed-w", epsilon=eps)
    obj = scalar_quadratic()
    stationary = np.array([0.0, lam / (eps + lam), -lam / (eps + lam)])
    grad_F = lambda th: th + lam * smoothed_w_grad(th, eps)  # noqa: E731
    per_eta, ok = [], True
    for eta in etas:
        th0 = oscillation_start(eta, lam, eps)
        sched = Schedule(eta=eta, lam=lam)
        lazy, _ = trajectory(init_state([th0], "lazyprox"), obj, spec, sched, steps)
        t = np.arange(steps + 1)
        residual = float(np.max(np.abs(lazy[:, 0] - (-1.0) ** t * th0)))
        margin = float(np.min(np.abs(stationary - th0)))
        floor = float(abs(grad_F(np.array([th0]))[0]))
        lazy_min_grad = float(np.min(np.abs(grad_F(lazy[:, 0]))))
        pq, _ = trajectory(init_state([th0], "proxquant"), obj, spec, sched, steps)
        pq_grads = np.abs(grad_F(pq[:, 0]))
        pq_min_grad = float(np.min(pq_grads))
        pq_final = float(pq[-1, 0])
        good = (residual <= tol and margin > 0 and lazy_min_grad >= floor * (1 - 1e-9)
                and pq_min_grad <= pq_tol and float(np.min(np.abs(stationary - pq_final))) <= pq_tol)
        ok &= good
        per_eta.append({"eta": eta, "theta0": th0, "max_oscillation_residual": residual,
                        "stationary_margin": margin, "grad_floor": floor, "lazy_min_grad": lazy_min_grad,
                        "proxquant_min_grad": pq_min_grad, "proxquant_final": pq_final, "ok": good})
    measured = {"max_oscillation_residual": max(r["max_oscillation_residual"] for r in per_eta),
                "stationary_points": stationary.tolist(), "runs": per_eta}
    return VerificationReport("theorem2", _status(ok), measured,
                              {"oscillation": tol, "proxquant_grad": pq_tol, "eps": eps, "lam": lam, "steps": steps})


# --- Theorem 3 --------------------------------------------------------------

def fixed_point_condition(objective: Objective, s: np.ndarray, zero_tol: float = 0.0) -> bool:
    """``sign(grad L(s)_i) = -s_i`` on every coordinate with nonzero gradient."""
    g = objective.grad(s)
    nz = np.abs(g) > zero_tol
    return bool(np.all(np.sign(g[nz]) == -s[nz]))


def verify_theorem3(objective: Objective, candidates: Optional[Sequence] = None, horizon: int = 10_000,
                    eta: float = 0.1, init_scale: float = 0.1, decay: bool = False, window: int = 1000,
                    seed: int = 0) -> VerificationReport:
    """Compare the analytic fixed-point condition with BinaryConnect simulations.

    Each candidate ``s`` seeds ``theta0 = init_scale * s``. A sign change
    inside ``horizon`` confirms "not fixed"; a stable run confirms "fixed"
    only when the condition also says so, otherwise it is inconclusive.
    With ``decay`` the rate is ``eta / sqrt(t + 1)`` (still summing to
    infinity). When no fixed point exists, the longest stretch of constant
    signs from a generic start must stay below ``window``.
    """
    d = objective.dim
    if candidates is None:
        if d > 16:
            raise DimensionError(f"d={d} is too large to enumerate; pass explicit candidates")
        candidates = [np.array(s, dtype=float) for s in itertools.product((1.0, -1.0), repeat=d)]
    spec = RegSpec("binary-l1")
    rows, ok, inconclusive, fixed = [], True, False, []
    for s in candidates:
        s = np.asarray(s, dtype=float)
        cond = fixed_point_condition(objective, s)
        signs = _bc_signs(objective, init_scale * s, horizon, eta, decay, spec)
        stable = bool(np.all(signs == s))
        if cond and stable:
            verdict = "agree"
            fixed.append(s.tolist())
        elif not cond and not stable:
            verdict = "agree"
        elif not cond and stable:
            verdict = "inconclusive"
            inconclusive = True
        else:
            verdict = "disagree"
            ok = False
        rows.append({"s": s.tolist(), "condition": cond, "stable": stable, "verdict": verdict})

    measured = {"fixed_points": fixed, "n_candidates": len(rows), "census": rows}
    warnings = ["some non-fixed candidates did not change sign within the horizon"] if inconclusive else []
    if not fixed:
        start = np.random.default_rng(seed).uniform(-1, 1, d)
        signs = _bc_signs(objective, start, horizon, eta, decay, spec)
        run_len = longest_constant_run(signs)
        measured["longest_constant_run"] = run_len
        if run_len >= window:
            # slow drift, not a counterexample
            inconclusive = True
            warnings.append(f"signs stayed constant for {run_len} steps without a fixed point")
    return VerificationReport("theorem3", _status(ok, inconclusive), measured,
                              {"horizon": horizon, "eta": eta, "decay": decay, "window": window}, seed=seed,
                              warnings=warnings)


def _bc_signs(objective, theta0, horizon, eta, decay, spec):
    # plain loop: avoids keeping gradient points for 10^4 steps
    theta = np.array(theta0, dtype=float)
    out = np.empty((horizon + 1, theta.size))
    out[0] = sign(theta)
    for t in range(horizon):
        lr = eta / np.sqrt(t + 1) if decay else eta
        theta = theta - lr * objective.grad(sign(theta))
        out[t + 1] = sign(theta)
    return out


# --- sign change experiment --------------------------------------------------

def sign_change_experiment(cfg, seeds: Optional[Sequence[int]] = None, algorithms=("binaryconnect", "proxquant")) -> dict:
    """BinaryConnect vs ProxQuant from a shared full-precision warm start.

    Returns per seed and algorithm the per-epoch layerwise sign change
    against the warm start, the final hard-quantized error, and whether
    BinaryConnect's signs were still moving in the last tenth of the
    pre-freeze epochs.
    """
    seeds = list(seeds if seeds is not None else cfg.seeds)
    out = {"seeds": seeds, "runs": {}}
    for seed in seeds:
        problem = build_problem(cfg, seed)
        if problem.spec is None or len(problem.objective.quant_groups()) < 2:
            raise ValueError("sign change experiment needs an MLP with at least two quantized layers")
        start = warm_start(cfg, seed, problem)
        per_alg = {}
        for alg in algorithms:
            trace = run(cfg, seed, theta0=start, algorithm=alg)
            per_alg[alg] = {
                "epochs": [r.epoch for r in trace.records],
                "layer_sign_change": [r.layer_sign_change for r in trace.records],
                "sign_change": [r.sign_change for r in trace.records],
                "final_sign_change": trace.final.sign_change,
                "final_quantized_error": trace.final.quantized_error,
                "full_precision_error": trace.full_precision_error,
                "late_flips": _late_flips(cfg, seed, start, alg) if alg == "binaryconnect" else None,
                "failed": trace.failed,
            }
        out["runs"][seed] = per_alg
    for alg in algorithms:
        out[f"mean_final_sign_change_{alg}"] = float(np.mean([out["runs"][s][alg]["final_sign_change"] for s in seeds]))
        out[f"mean_final_quantized_error_{alg}"] = float(
            np.mean([out["runs"][s][alg]["final_quantized_error"] for s in seeds]))
    return out


def _late_flips(cfg, seed, start, alg) -> Optional[int]:
    """Quantized coordinates whose sign flipped in the last 10% of pre-freeze epochs."""
    fe = cfg.schedule.freeze_epoch if cfg.schedule.freeze_epoch is not None else cfg.epochs
    if fe < 1:
        return None
    sub = copy.deepcopy(cfg)
    sub.schedule.freeze_epoch = None
    last = max(1, int(round(0.1 * fe)))
    sub.epochs = fe - last
    before = run(sub, seed, theta0=start, algorithm=alg).theta
    sub.epochs = fe
    after = run(sub, seed, theta0=start, algorithm=alg).theta
    mask = build_problem(cfg, seed).objective.mask()
    return int(np.sum(sign(before[mask]) != sign(after[mask])))


# --- registry ---------------------------------------------------------------

def _theorem3_default():
    rng = np.random.default_rng(0)
    d = 4
    c = rng.uniform(1.1, 3.0, d) * rng.choice([-1.0, 1.0], d)
    report = verify_theorem3(shifted_quadratic(c))
    toys = [verify_theorem3(toy_pair(w)) for w in (1, -1)]
    measured = {"quadratic_center": c.tolist(), "quadratic": report.to_dict(),
                "toy+1": toys[0].to_dict(), "toy-1": toys[1].to_dict()}
    statuses = [report.status] + [t.status for t in toys]
    ok = "fail" not in statuses and all(t.status == "pass" and not t.measured["fixed_points"] for t in toys)
    ok &= len(report.measured["fixed_points"]) == 1
    status = _status(ok, "inconclusive" in statuses)
    return VerificationReport("theorem3", status, measured, report.tolerance,
                              warnings=[w for r in (report, *toys) for w in r.warnings])


REGISTRY = {
    "toy_failure": verify_toy_failure,
    "theorem1": verify_theorem1,
    "theorem2": verify_theorem2,
    "theorem3": _theorem3_default,
}


def run_named(name: str) -> list[VerificationReport]:
    if name == "all":
        return [fn() for fn in REGISTRY.values()]
    if name not in REGISTRY:
        raise KeyError(name)
    return [REGISTRY[name]()]
