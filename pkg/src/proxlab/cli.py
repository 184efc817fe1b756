"""Command-line entry point: ``proxlab {train,theory,prox-table,signchange,gradcheck}``.

Exit codes: 0 success, 1 a verification or check failed, 2 usage or
configuration error, 3 numeric divergence (partial traces are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import TrainConfig, load_config
from .errors import ConfigError, DataError, ProxlabError
from .model import MlpSpec, init_params, mlp_forward_backward
from .optim import run
from .prox import prox
from .regularize import KINDS, RegSpec, reg_value, smoothed_w_grad
from .theorylab import REGISTRY, run_named, sign_change_experiment

log = logging.getLogger("proxlab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PROXLAB_THREADS", "1")))
    except ValueError:
        return 1


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _load(args) -> TrainConfig:
    cfg = load_config(args.config)
    if args.seed_override is not None:
        cfg.seeds = [args.seed_override]
    return cfg


def _out_dir(args, cfg=None) -> Path:
    out = Path(args.out or (cfg.out if cfg is not None else "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        traces = list(pool.map(lambda s: run(cfg, s), cfg.seeds))

    for tr in traces:
        lines = [json.dumps(r.to_dict(), sort_keys=True) for r in tr.records]
        (out / f"trace_seed{tr.seed}.jsonl").write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    finished = [t for t in traces if not t.failed and t.records]
    q = np.array([t.final.quantized_error for t in finished])
    fp = np.array([t.full_precision_error for t in finished])
    fmt = lambda a: f"{a.mean():.4f}({a.std():.4f})" if a.size else "nan"  # noqa: E731
    summary = {
        "algorithm": cfg.algorithm,
        "seeds": cfg.seeds,
        "failed_seeds": [t.seed for t in traces if t.failed],
        "final_quantized_error": fmt(q),
        "final_quantized_error_mean": float(q.mean()) if q.size else None,
        "final_quantized_error_std": float(q.std()) if q.size else None,
        "full_precision_error": fmt(fp),
        "final_sign_change_mean": float(np.mean([t.final.sign_change for t in finished])) if finished else None,
    }
    _write_json(out / "summary.json", summary)
    _say(args, f"{cfg.algorithm}: quantized error {summary['final_quantized_error']} over {len(finished)} seed(s)")
    if summary["failed_seeds"]:
        for t in traces:
            if t.failed:
                print(f"seed {t.seed} diverged: {t.message}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_theory(args) -> int:
    if args.name != "all" and args.name not in REGISTRY:
        print(f"unknown verification {args.name!r}; choose from {sorted(REGISTRY)} or 'all'", file=sys.stderr)
        return EXIT_CONFIG
    reports = run_named(args.name)
    out = _out_dir(args)
    payload = [r.to_dict() for r in reports]
    _write_json(out / f"theory_{args.name}.json", payload if args.name == "all" else payload[0])
    for r in reports:
        _say(args, f"{r.name}: {r.status}")
        if r.status == "inconclusive":
            print(f"warning: {r.name} inconclusive: {'; '.join(r.warnings)}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, stepsize = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"grid must be LO:HI:STEP, got {text!r}") from None
    if stepsize <= 0 or hi < lo:
        raise ConfigError("grid needs STEP > 0 and HI >= LO")
    n = int(round((hi - lo) / stepsize)) + 1
    return lo + stepsize * np.arange(n)


def prox_table(spec: RegSpec, lambdas, grid, exact: bool = False) -> str:
    """CSV rows ``theta,lam,reg,prox,error`` for plotting regularizers and prox maps.

    Prox domain errors are recorded in the ``error`` column rather than
    aborting. For ``smoothed-w`` the closed form is used unless ``exact``.
    """
    from .prox import prox_smoothed_w

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "lam", "reg", "prox", "error"])
    for lam in lambdas:
        for th in grid:
            r = reg_value(spec, [th])
            try:
                if spec.kind == "smoothed-w" and not exact:
                    p = prox_smoothed_w([th], lam, spec.epsilon).point[0]
                else:
                    p = prox(spec, [th], lam).point[0]
                w.writerow([f"{th:.10g}", f"{lam:.10g}", f"{r:.12g}", f"{p:.12g}", ""])
            except ProxlabError as exc:
                w.writerow([f"{th:.10g}", f"{lam:.10g}", f"{r:.12g}", "", f"domain-error: {exc}"])
    return buf.getvalue()


def cmd_prox_table(args) -> int:
    spec = RegSpec(args.reg, k=args.k, epsilon=args.eps)
    lambdas = [float(v) for v in args.lambdas.split(",") if v.strip()]
    if any(lam < 0 for lam in lambdas):
        raise ConfigError("lambdas must be nonnegative")
    text = prox_table(spec, lambdas, _parse_grid(args.grid), exact=args.exact)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_signchange(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    result = sign_change_experiment(cfg)
    _write_json(out / "signchange.json", result)
    bc = result["mean_final_sign_change_binaryconnect"]
    pq = result["mean_final_sign_change_proxquant"]
    _say(args, f"mean final sign change: BinaryConnect {bc:.4f}, ProxQuant {pq:.4f}")
    return EXIT_OK


def gradcheck(nets: int = 5, coords: int = 20, seed: int = 0, h: float = 1e-5, rtol: float = 1e-4) -> dict:
    """Central finite differences against MLP backprop and the smoothed-W gradient."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(nets):
        widths = (int(rng.integers(2, 6)), int(rng.integers(3, 8)), int(rng.integers(2, 5)))
        spec = MlpSpec(widths, "tanh", "cross-entropy")
        params = init_params(spec, rng) + 0.1 * rng.normal(size=spec.n_params)
        x = rng.normal(size=(7, widths[0]))
        y = rng.integers(0, widths[-1], 7)
        _, g = mlp_forward_backward(spec, params, x, y)
        for j in rng.choice(spec.n_params, size=min(coords, spec.n_params), replace=False):
            e = np.zeros_like(params)
            e[j] = h
            fd = (mlp_forward_backward(spec, params + e, x, y)[0] - mlp_forward_backward(spec, params - e, x, y)[0]) / (2 * h)
            worst = max(worst, abs(fd - g[j]) / max(abs(fd), abs(g[j]), 1e-7))
    eps = 0.2
    t = rng.uniform(-2, 2, 200)
    breaks = np.array([eps, 1 - eps, 1 + eps])
    t = t[np.min(np.abs(np.abs(t)[:, None] - breaks[None, :]), axis=1) > 1e-3]
    from .regularize import smoothed_w

    fd = (smoothed_w(t + 1e-6, eps) - smoothed_w(t - 1e-6, eps)) / 2e-6
    reg_err = float(np.max(np.abs(fd - smoothed_w_grad(t, eps))))
    return {"mlp_max_rel_error": worst, "smoothed_w_max_abs_error": reg_err,
            "passed": worst <= rtol and reg_err <= 1e-5}


def cmd_gradcheck(args) -> int:
    seed = args.seed_override if args.seed_override is not None else 0
    result = gradcheck(seed=seed)
    if args.out:
        out = _out_dir(args)
        _write_json(out / "gradcheck.json", result)
    _say(args, f"gradcheck: mlp rel err {result['mlp_max_rel_error']:.2e}, "
               f"smoothed-w abs err {result['smoothed_w_max_abs_error']:.2e}")
    return EXIT_OK if result["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="proxlab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (file for prox-table)")
    common.add_argument("--seed-override", type=int, help="run this single seed instead of the config's list")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", parents=[common], help="train from a YAML config")
    t.add_argument("--config", required=True)
    t.set_defaults(func=cmd_train)

    th = sub.add_parser("theory", parents=[common], help="run theory verifications")
    th.add_argument("name", help=f"one of {sorted(REGISTRY)} or 'all'")
    th.set_defaults(func=cmd_theory)

    pt = sub.add_parser("prox-table", parents=[common], help="tabulate R and prox over a grid")
    pt.add_argument("--reg", required=True, choices=KINDS)
    pt.add_argument("--k", type=int, help="bits, for kbit-l2")
    pt.add_argument("--eps", type=float, help="smoothing width, for smoothed-w")
    pt.add_argument("--lambdas", default="0.5", help="comma-separated strengths")
    pt.add_argument("--grid", default="-2:2:0.01", help="theta grid as LO:HI:STEP")
    pt.add_argument("--exact", action="store_true", help="smoothed-w: use the exact solver for every lam")
    pt.set_defaults(func=cmd_prox_table)

    sc = sub.add_parser("signchange", parents=[common], help="BinaryConnect vs ProxQuant sign-change experiment")
    sc.add_argument("--config", required=True)
    sc.set_defaults(func=cmd_signchange)

    gc = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient checks")
    gc.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
