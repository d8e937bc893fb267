"""Command-line entry point: `race`, `train`, `sweep-zeta`, `selftest`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import backend, harness, landscapes, neuralnet, optimizers
from .core import ParamVector, Rng, StopCriterion, StopKind
from .harness import (
    export_trace_csv,
    load_race_config,
    load_sweep_config,
    run_race,
    target_is_landscape,
    zeta_sweep,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to a JSON experiment config")
    p.add_argument("--out-dir", default="out", help="directory for trace and summary CSVs")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--max-iters", type=int, default=None, help="override the run length")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adine",
        description="Momentum-optimizer races and adaptive-inertia experiments "
        f"(kernel backend: {backend.active_backend()})",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("race", help="optimizer race on a synthetic landscape"))
    _add_common(sub.add_parser("train", help="optimizer comparison on a desk-scale network"))
    _add_common(sub.add_parser("sweep-zeta", help="ablation over the zeta tolerance"))
    sub.add_parser("selftest", help="run the built-in property checks")
    return parser


def _load_configs(args, want_landscape: bool):
    path = Path(args.config)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    race_id, cfgs = load_race_config(
        path, seed_override=args.seed, max_iters_override=args.max_iters
    )
    is_landscape = target_is_landscape(cfgs[0].target)
    if want_landscape and not is_landscape:
        raise ValueError("`race` expects a landscape target; use `train` for networks")
    if not want_landscape and is_landscape:
        raise ValueError("`train` expects a network/dataset target; use `race` for landscapes")
    return race_id, cfgs


def _cmd_race_or_train(args, want_landscape: bool) -> int:
    race_id, cfgs = _load_configs(args, want_landscape)
    table, traces = run_race(cfgs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for cfg, trace in zip(cfgs, traces):
        export_trace_csv(trace, out_dir / f"{cfg.id}.csv")
    summary_path = out_dir / f"{race_id}_summary.csv"
    table.write_csv(summary_path)
    print(table.render_text())
    print(f"\nwrote {len(traces)} trace file(s) and {summary_path}")
    return 0


def _cmd_sweep(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    base, zetas = load_sweep_config(
        path, seed_override=args.seed, max_iters_override=args.max_iters
    )
    table, traces = zeta_sweep(base, zetas)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for z, trace in zip(zetas, traces):
        export_trace_csv(trace, out_dir / f"{base.id}_z{z:g}.csv")
    summary_path = out_dir / f"{base.id}_summary.csv"
    table.write_csv(summary_path)
    print(table.render_text())
    print(f"\nwrote {len(traces)} trace file(s) and {summary_path}")
    return 0


def _check(name: str, fn) -> bool:
    try:
        fn()
    except Exception as exc:
        print(f"FAIL {name}: {exc}")
        return False
    print(f"ok   {name}")
    return True


def _selftest_wsl():
    rng = np.random.default_rng(1)
    for _ in range(200):
        seq = rng.uniform(0.0, 10.0, rng.integers(1, 65)).tolist()
        folded = 0.0
        for loss in seq:
            folded = optimizers.wsl_update(folded, loss)
        if abs(folded - optimizers.wsl_closed_form(seq)) > 1e-12:
            raise AssertionError("recursive and closed forms disagree")


def _selftest_schedule():
    sched = optimizers.NesterovSchedule()
    for t in range(1001):
        m_t, sched = optimizers.nesterov_momentum(sched)
        if not 0.0 <= m_t < 1.0:
            raise AssertionError(f"m_t out of range at t={t}")
        if t in (100, 1000) and abs(m_t - (t + 2) / (t + 5)) > 0.002:
            raise AssertionError(f"schedule approximation off at t={t}")


def _selftest_landscape_grads():
    rng = Rng(11)
    for land, ev in (
        (landscapes.sample_quadratic(12, rng.spawn(1)), landscapes.quad_eval_grad),
        (landscapes.sample_cubic(12, rng.spawn(2)), landscapes.cubic_eval_grad),
    ):
        for _ in range(20):
            x = ParamVector(rng.uniform(-2.0, 2.0, land.n))
            _, g = ev(land, x)
            h = 1e-6
            for j in range(0, land.n, 5):
                xp = x.values.copy(); xp[j] += h
                xm = x.values.copy(); xm[j] -= h
                fd = (ev(land, ParamVector(xp))[0] - ev(land, ParamVector(xm))[0]) / (2 * h)
                denom = max(abs(fd), abs(g.values[j]), 1e-2)
                if abs(fd - g.values[j]) / denom > 1e-6:
                    raise AssertionError("analytic gradient disagrees with finite differences")


def _selftest_backprop():
    rng = Rng(12)
    net = neuralnet.build_classifier([3, 5, 2], weight_decay=1e-3)
    theta = neuralnet.glorot_init(net.layers, rng.spawn(1))
    X = rng.uniform(-1.0, 1.0, (4, 3))
    y = np.array([0, 1, 1, 0])
    _, g = neuralnet.loss_and_grad(net, (X, y), theta)
    h = 1e-5
    for j in range(theta.dim):
        tp = theta.values.copy(); tp[j] += h
        tm = theta.values.copy(); tm[j] -= h
        lp, _ = neuralnet.loss_and_grad(net, (X, y), ParamVector(tp))
        lm, _ = neuralnet.loss_and_grad(net, (X, y), ParamVector(tm))
        fd = (lp - lm) / (2 * h)
        denom = max(abs(fd), abs(g.values[j]), 1e-2)
        if abs(fd - g.values[j]) / denom > 1e-5:
            raise AssertionError(f"backprop gradient off at parameter {j}")


def _selftest_rng():
    a = Rng(99)
    b = Rng(99)
    if not np.array_equal(a.uniform(0, 1, 100000), b.uniform(0, 1, 100000)):
        raise AssertionError("identical seeds produced different streams")


def _selftest_zero_velocity():
    obj = landscapes.as_objective(landscapes.Saddle2D())
    theta = ParamVector([1.0, 0.5])
    state = optimizers.initial_state(2)
    cm_cfg = optimizers.FixedMomentumConfig(eta=0.01, m=0.9, variant=optimizers.Variant.CM)
    nag_cfg = optimizers.FixedMomentumConfig(
        eta=0.01, m=0.9, variant=optimizers.Variant.NAG_SUTSKEVER
    )
    t1, _ = optimizers.cm_step(state, cm_cfg, obj, theta)
    t2, _ = optimizers.nag_step(state, nag_cfg, obj, theta)
    if t1 != t2:
        raise AssertionError("CM and NAG disagree from zero velocity")


def _selftest_determinism():
    cfg = harness.ExperimentConfig(
        id="selftest",
        seed=5,
        target={"kind": "quadratic", "n": 20},
        optimizer=optimizers.FixedMomentumConfig(eta=0.001, m=0.95, variant=optimizers.Variant.CM),
        stop=StopCriterion(StopKind.LOSS_BELOW, -8.0),
        max_iters=10000,
    )
    a = harness.run_experiment(cfg)
    b = harness.run_experiment(cfg)
    if a.records != b.records or a.terminal_reason != b.terminal_reason:
        raise AssertionError("identical configs produced different traces")


def _cmd_selftest() -> int:
    checks = [
        ("weighted-sum-loss closed form", _selftest_wsl),
        ("nesterov momentum schedule", _selftest_schedule),
        ("landscape gradients vs finite differences", _selftest_landscape_grads),
        ("backprop gradients vs finite differences", _selftest_backprop),
        ("rng reproducibility", _selftest_rng),
        ("zero-velocity CM/NAG equivalence", _selftest_zero_velocity),
        ("experiment determinism", _selftest_determinism),
    ]
    ok = all([_check(name, fn) for name, fn in checks])
    print("selftest:", "all checks passed" if ok else "FAILURES above")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "race":
            return _cmd_race_or_train(args, want_landscape=True)
        if args.command == "train":
            return _cmd_race_or_train(args, want_landscape=False)
        if args.command == "sweep-zeta":
            return _cmd_sweep(args)
        if args.command == "selftest":
            return _cmd_selftest()
        parser.error(f"unknown command {args.command!r}")
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
