"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. The heavy training comparisons dominate the runtime
(about a minute on a laptop); everything else is seconds.
"""

import math
import statistics
from pathlib import Path

import numpy as np

from adine.cli import main as cli_main
from adine.core import ParamVector, Rng, StopCriterion, StopKind, TerminalReason
from adine import landscapes, neuralnet
from adine.harness import (
    ExperimentConfig,
    batches_per_epoch,
    run_experiment,
    steps_to_reach,
    zeta_sweep,
)
from adine.optimizers import (
    AdineConfig,
    FixedMomentumConfig,
    NesterovSchedule,
    Variant,
    cm_step,
    cm_telescoped_position,
    initial_state,
    nesterov_momentum,
    polyak_optimal_params,
    wsl_closed_form,
    wsl_update,
)

from conftest import max_rel_err

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

MAX_ITERS = StopCriterion(StopKind.MAX_ITERS_ONLY)

# Desk-scale classification target shared by the training criteria.
DESK_TARGET = {
    "kind": "blobs_classify",
    "n_samples": 3200,
    "dims": 256,
    "classes": 10,
    "batch_size": 32,
    "hidden": [384],
    "weight_decay": 1e-4,
}
DESK_ETA = 1e-4
DESK_EPOCHS = 30


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"criterion {criterion} {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
    assert ok, f"criterion {criterion}: {detail}"


def _fixed(variant, m, eta):
    return FixedMomentumConfig(eta=eta, m=m, variant=variant)


def _race_iterations(target, optimizer, seed, threshold, x0=None, max_iters=200000):
    cfg = ExperimentConfig(
        id="acc",
        seed=seed,
        target=target,
        optimizer=optimizer,
        stop=StopCriterion(StopKind.LOSS_BELOW, threshold),
        max_iters=max_iters,
        x0=x0,
    )
    trace = run_experiment(cfg)
    if trace.terminal_reason is not TerminalReason.THRESHOLD_REACHED:
        return None
    return trace.iterations


def test_criterion_01_table1_ordering_and_speedup():
    """2-D saddle race at the pinned settings: ordering plus a 2x speedup."""
    results = {}
    for variant in (Variant.CM, Variant.NAG_SUTSKEVER):
        iters = [
            _race_iterations(
                {"kind": "saddle2d"},
                _fixed(variant, m, eta=0.01),
                seed=42,
                threshold=-10.0,
                x0=(1.0, 0.001),
            )
            for m in (1.1, 1.0, 0.95, 0.9)
        ]
        results[variant.value] = iters
    ordered = all(
        None not in iters and iters[0] < iters[1] < iters[2] < iters[3]
        for iters in results.values()
    )
    ratios = {k: v[0] / v[3] for k, v in results.items()}
    speedup_ok = all(r < 0.5 for r in ratios.values())
    detail = (
        f"ordering={'ok' if ordered else 'violated'}, "
        f"iterations(m=1.1)/iterations(m=0.9): "
        + ", ".join(f"{k}={r:.3f}" for k, r in ratios.items())
        + " (need < 0.5)"
    )
    _report("01", ordered and speedup_ok, detail)


def test_criterion_02_saddle_escape_ordering():
    """n=100 quadratic and cubic races: iterations strictly decrease in m."""
    ms = (0.90, 0.95, 1.00, 1.01, 1.10)
    failures = []
    for seed in (0, 1, 2):
        for kind, eta in (("quadratic", landscapes.QUAD_ETA), ("cubic", landscapes.CUBIC_ETA)):
            for variant in (Variant.CM, Variant.NAG_SUTSKEVER):
                iters = [
                    _race_iterations(
                        {"kind": kind, "n": 100},
                        _fixed(variant, m, eta=eta),
                        seed=seed,
                        threshold=-8.0,
                    )
                    for m in ms
                ]
                strict = None not in iters and all(
                    iters[i] > iters[i + 1] for i in range(len(iters) - 1)
                )
                if not strict:
                    failures.append((seed, kind, variant.value, iters))
    _report(
        "02",
        not failures,
        "strict ordering over 3 seeds, both landscapes, CM and NAG"
        + (f"; violations: {failures}" if failures else ""),
    )


def test_criterion_03_wsl_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        seq = rng.uniform(0.0, 10.0, rng.integers(1, 65)).tolist()
        folded = 0.0
        for loss in seq:
            folded = wsl_update(folded, loss)
        worst = max(worst, abs(folded - wsl_closed_form(seq)))
    ones_ok = all(
        abs(wsl_closed_form([1.0] * k) - (1.0 - 2.0**-k)) <= 1e-15 for k in range(1, 65)
    )
    _report(
        "03",
        worst <= 1e-12 and ones_ok,
        f"fold vs closed form worst gap {worst:.2e} (<=1e-12); all-ones exact to 1e-15",
    )


def test_criterion_04_telescoping_identity():
    land = landscapes.sample_quadratic(100, Rng(4))
    obj = landscapes.as_objective(land)
    cfg = _fixed(Variant.CM, 0.9, eta=0.001)
    theta = theta0 = landscapes.default_x0(land)
    state = initial_state(100)
    grads = []
    for _ in range(100):
        grads.append(obj.grad(theta))
        prev = theta
        theta, state = cm_step(state, cfg, obj, theta)
    closed = cm_telescoped_position(theta0, grads, 0.9, 0.001, prev)
    gap = float(np.max(np.abs(closed.values - theta.values)))
    _report("04", gap < 1e-8, f"closed form vs 100 iterated steps, max-norm gap {gap:.2e}")


def test_criterion_05_schedule_asymptotics():
    sched = NesterovSchedule()
    below_one = True
    gaps = {}
    for t in range(10_001):
        m, sched = nesterov_momentum(sched)
        below_one &= m < 1.0
        if t in (100, 1000):
            gaps[t] = abs(m - (t + 2) / (t + 5))
    _report(
        "05",
        below_one and all(g < 0.002 for g in gaps.values()),
        f"m_t < 1 up to t=10^4; approximation gaps {gaps[100]:.2e} @100, {gaps[1000]:.2e} @1000",
    )


def test_criterion_06_polyak_optimal_params():
    exact = polyak_optimal_params(1.0, 9.0) == (0.25, 0.25)
    rng = np.random.default_rng(6)
    in_range = True
    for _ in range(100):
        alpha = rng.uniform(1e-3, 5.0)
        beta = alpha * rng.uniform(1.0, 1e4)
        _, m = polyak_optimal_params(alpha, beta)
        in_range &= 0.0 <= m < 1.0
    _report("06", exact and in_range, "(1,9) -> (0.25, 0.25) exactly; m in [0,1) on 100 random pairs")


def test_criterion_07_gradient_correctness():
    worst_land = 0.0
    rng = Rng(7)
    for kind in ("quadratic", "cubic"):
        if kind == "quadratic":
            land = landscapes.sample_quadratic(10, rng.spawn(1))
            ev = lambda x: landscapes.quad_eval_grad(land, ParamVector(x))
        else:
            land = landscapes.sample_cubic(10, rng.spawn(2))
            ev = lambda x: landscapes.cubic_eval_grad(land, ParamVector(x))
        pts = rng.spawn(3).uniform(-2.0, 2.0, (100, 10))
        for x in pts:
            g = ev(x)[1].values
            fd = np.empty_like(g)
            for j in range(x.size):
                xp = x.copy(); xp[j] += 1e-6
                xm = x.copy(); xm[j] -= 1e-6
                fd[j] = (ev(xp)[0] - ev(xm)[0]) / 2e-6
            worst_land = max(worst_land, max_rel_err(g, fd))

    worst_net = 0.0
    cases = [
        ("classifier", [3, 5, 2], 0.0, 113),
        ("classifier", [3, 5, 2], 1e-3, 211),
        ("classifier", [4, 6, 6, 3], 0.0, 317),
        ("classifier", [2, 8, 4], 1e-2, 419),
        ("classifier", [5, 4, 2], 0.0, 523),
        ("classifier", [6, 3, 3], 1e-3, 641),
        ("autoencoder", ([4, 3, 2], [2, 3, 4]), 0.0, 733),
        ("autoencoder", ([5, 4, 2], [2, 4, 5]), 1e-3, 839),
        ("autoencoder", ([3, 2], [2, 3]), 0.0, 941),
        ("autoencoder", ([6, 4, 3], [3, 4, 6]), 1e-2, 1051),
    ]
    for kind, arch, wd, seed in cases:
        rng = Rng(seed)
        if kind == "classifier":
            net = neuralnet.build_classifier(arch, weight_decay=wd)
            X = rng.spawn(1).uniform(-1.0, 1.0, (4, arch[0]))
            y = np.asarray(rng.spawn(2).integers(0, arch[-1], 4))
        else:
            enc, dec = arch
            net = neuralnet.build_autoencoder(enc, dec, weight_decay=wd)
            X = rng.spawn(1).uniform(0.05, 0.95, (4, enc[0]))
            y = X
        theta = neuralnet.glorot_init(net.layers, rng.spawn(0))
        _, g = neuralnet.loss_and_grad(net, (X, y), theta)
        fd = np.empty(theta.dim)
        for j in range(theta.dim):
            tp = theta.values.copy(); tp[j] += 1e-5
            tm = theta.values.copy(); tm[j] -= 1e-5
            lp, _ = neuralnet.loss_and_grad(net, (X, y), ParamVector(tp))
            lm, _ = neuralnet.loss_and_grad(net, (X, y), ParamVector(tm))
            fd[j] = (lp - lm) / 2e-5
        worst_net = max(worst_net, max_rel_err(g.values, fd))
    _report(
        "07",
        worst_land < 1e-6 and worst_net < 1e-5,
        f"landscape grads worst rel err {worst_land:.2e} (<1e-6); "
        f"backprop worst rel err {worst_net:.2e} (<1e-5)",
    )


def _desk_config(optimizer, seed, epochs):
    return ExperimentConfig(
        id="desk",
        seed=seed,
        target=DESK_TARGET,
        optimizer=optimizer,
        stop=MAX_ITERS,
        max_iters=epochs * batches_per_epoch(DESK_TARGET),
    )


def test_criterion_08_adine_degenerate_equivalence():
    adine = AdineConfig(eta=DESK_ETA, m_s=0.9, m_g=0.9, zeta=1.1)
    nag = _fixed(Variant.NAG_SUTSKEVER, 0.9, DESK_ETA)
    trace_a = run_experiment(_desk_config(adine, seed=0, epochs=5))
    trace_n = run_experiment(_desk_config(nag, seed=0, epochs=5))
    losses_a = [r.loss for r in trace_a.records]
    losses_n = [r.loss for r in trace_n.records]
    identical = losses_a == losses_n and len(losses_a) == 5 * batches_per_epoch(DESK_TARGET)
    _report(
        "08",
        identical,
        f"m_g=m_s=0.9 loss trace vs NAG(0.9) over 5 epochs: "
        f"{'bit-identical' if identical else 'differs'} ({len(losses_a)} steps)",
    )


def test_criterion_09_desk_scale_training_speedup():
    spe = batches_per_epoch(DESK_TARGET)
    baseline_steps = DESK_EPOCHS * spe
    ratios = []
    for seed in range(5):
        nag = run_experiment(
            _desk_config(_fixed(Variant.NAG_SUTSKEVER, 0.9, DESK_ETA), seed, DESK_EPOCHS)
        )
        target_loss = float(np.mean([r.loss for r in nag.records[-spe:]]))
        adine = run_experiment(
            _desk_config(AdineConfig(eta=DESK_ETA, m_s=0.9, m_g=1.0001, zeta=1.1), seed, DESK_EPOCHS)
        )
        steps = steps_to_reach(adine, target_loss, window=spe)
        ratios.append(steps / baseline_steps if steps is not None else math.inf)
    med = statistics.median(ratios)
    _report(
        "09",
        med <= 0.8,
        f"median steps ratio over 5 seeds {med:.3f} (need <= 0.8); ratios "
        + ", ".join(f"{r:.3f}" for r in ratios),
    )


def test_criterion_10_zeta_sweep_sanity():
    base = _desk_config(
        AdineConfig(eta=DESK_ETA, m_s=0.9, m_g=1.0001, zeta=1.1), seed=0, epochs=3
    )
    table, traces = zeta_sweep(base, [1e-9, 1.03, 1.1, 1.48, 1.5, 1e9])
    fractions = {row[0]: row[2] for row in table.rows}
    no_divergence = all(
        t.terminal_reason is not TerminalReason.DIVERGED for t in traces
    )
    ok = fractions[1e-9] == 0.0 and fractions[1e9] > 0.99 and no_divergence
    _report(
        "10",
        ok,
        f"m_g fraction: zeta=1e-9 -> {fractions[1e-9]:.3f}, zeta=1e9 -> {fractions[1e9]:.3f}; "
        f"caption zetas {'clean' if no_divergence else 'diverged'}",
    )


def test_criterion_11_byte_identical_reruns(tmp_path):
    """Every checked-in config class re-runs byte-identically. The two heavy
    configs (train_blobs, table1_eta0.002) exercise code paths already covered
    here and are skipped to keep the suite under budget."""
    jobs = [
        ("race", "table1.json"),
        ("race", "quadratic_n100.json"),
        ("race", "cubic_n100.json"),
        ("train", "train_blobs_smoke.json"),
        ("train", "autoencoder_desk.json"),
        ("sweep-zeta", "zeta_sweep.json"),
    ]
    mismatches = []
    for command, name in jobs:
        out_a = tmp_path / name / "a"
        out_b = tmp_path / name / "b"
        for out in (out_a, out_b):
            rc = cli_main(
                [command, "--config", str(CONFIG_DIR / name), "--out-dir", str(out)]
            )
            assert rc == 0, f"{command} {name} failed"
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        if files_a != files_b:
            mismatches.append((name, "file sets differ"))
            continue
        for fname in files_a:
            if (out_a / fname).read_bytes() != (out_b / fname).read_bytes():
                mismatches.append((name, fname))
    _report(
        "11",
        not mismatches,
        f"{len(jobs)} configs re-run byte-identically"
        + (f"; mismatches: {mismatches}" if mismatches else ""),
    )
