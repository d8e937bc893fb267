"""Config-driven experiment runner: seeded optimizer races on landscapes and
networks, trace/summary CSV export, and the zeta ablation sweep.

A config fully determines a run; identical configs produce identical traces,
and the CSV writers emit no timestamps or environment data, so re-running a
config reproduces its output files byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    ParamVector,
    Rng,
    RunTrace,
    StepRecord,
    StopCriterion,
    StopKind,
    TerminalReason,
)
from . import landscapes, neuralnet
from .optimizers import AdineConfig, FixedMomentumConfig, Variant, run_until

# Sub-stream keys derived from the experiment seed, one per concern, so e.g.
# landscape sampling never shares draws with weight init.
KEY_LANDSCAPE = 0
KEY_DATA = 1
KEY_INIT = 2

LANDSCAPE_KINDS = ("saddle2d", "quadratic", "cubic")
DATASET_KINDS = ("blobs_classify", "autoencode")

TRACE_HEADER = ("t", "loss", "wsl", "momentum", "grad_norm")
SUMMARY_HEADER = ("method", "momentum", "iterations", "terminal_reason", "final_loss")
SWEEP_HEADER = ("zeta", "final_loss", "mg_fraction", "iterations", "terminal_reason")

OptimizerConfig = Union[AdineConfig, FixedMomentumConfig]


@dataclass(frozen=True)
class ExperimentConfig:
    """Seeded, serializable description of one optimizer run."""

    id: str
    seed: int
    target: dict
    optimizer: OptimizerConfig
    stop: StopCriterion
    max_iters: int
    trace_every: int = 1
    x0: Optional[tuple] = None

    def __post_init__(self):
        if self.max_iters <= 0:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")
        if self.trace_every < 1:
            raise ValueError(f"trace_every must be >= 1, got {self.trace_every}")
        object.__setattr__(self, "target", _normalize_target(self.target))
        if self.x0 is not None:
            object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))


def _normalize_target(target: dict) -> dict:
    if not isinstance(target, dict) or "kind" not in target:
        raise ValueError("target must be a dict with a 'kind' field")
    kind = target["kind"]
    out = dict(target)
    if kind == "saddle2d":
        pass
    elif kind in ("quadratic", "cubic"):
        n = int(out.get("n", 100))
        if kind == "quadratic" and n < 2:
            raise ValueError(f"quadratic target needs n >= 2, got {n}")
        if n < 1:
            raise ValueError(f"target dimension must be positive, got {n}")
        out["n"] = n
    elif kind == "blobs_classify":
        out.setdefault("n_samples", 3200)
        out.setdefault("dims", 256)
        out.setdefault("classes", 10)
        out.setdefault("batch_size", 32)
        out.setdefault("hidden", [384])
        out.setdefault("weight_decay", 1e-4)
    elif kind == "autoencode":
        out.setdefault("n_samples", 1024)
        out.setdefault("dims", 64)
        out.setdefault("batch_size", 64)
        out.setdefault("encoder", [64, 32, 8])
        out.setdefault("decoder", [8, 32, 64])
        out.setdefault("weight_decay", 1e-4)
    else:
        raise ValueError(f"unknown target kind: {kind!r}")
    return out


def target_is_landscape(target: dict) -> bool:
    return target["kind"] in LANDSCAPE_KINDS


def batches_per_epoch(target: dict) -> int:
    if target_is_landscape(target):
        raise ValueError("epochs only apply to dataset targets")
    return -(-int(target["n_samples"]) // int(target["batch_size"]))


def build_target(cfg: ExperimentConfig):
    """Construct (objective, theta_0) for a config. Deterministic in cfg.seed."""
    target = cfg.target
    kind = target["kind"]
    root = Rng(cfg.seed)
    if kind == "saddle2d":
        land = landscapes.Saddle2D()
        obj = landscapes.as_objective(land)
        x0 = ParamVector(cfg.x0) if cfg.x0 is not None else landscapes.default_x0(land)
        return obj, x0
    if kind in ("quadratic", "cubic"):
        sampler = landscapes.sample_quadratic if kind == "quadratic" else landscapes.sample_cubic
        land = sampler(target["n"], root.spawn(KEY_LANDSCAPE))
        obj = landscapes.as_objective(land)
        if cfg.x0 is not None:
            x0 = (
                ParamVector(np.full(land.n, cfg.x0[0]))
                if len(cfg.x0) == 1
                else ParamVector(cfg.x0)
            )
        else:
            x0 = landscapes.default_x0(land)
        return obj, x0
    if kind == "blobs_classify":
        data = neuralnet.make_desk_dataset(
            neuralnet.DatasetKind.BLOBS_CLASSIFY,
            int(target["n_samples"]),
            int(target["dims"]),
            root.spawn(KEY_DATA),
            classes=int(target["classes"]),
            batch_size=int(target["batch_size"]),
            shuffle_seed=cfg.seed,
        )
        dims = [int(target["dims"])] + [int(h) for h in target["hidden"]] + [int(target["classes"])]
        net = neuralnet.build_classifier(dims, float(target["weight_decay"]))
        theta0 = neuralnet.glorot_init(net.layers, root.spawn(KEY_INIT))
        return neuralnet.as_objective(net, data), theta0
    if kind == "autoencode":
        data = neuralnet.make_desk_dataset(
            neuralnet.DatasetKind.AUTOENCODE,
            int(target["n_samples"]),
            int(target["dims"]),
            root.spawn(KEY_DATA),
            batch_size=int(target["batch_size"]),
            shuffle_seed=cfg.seed,
        )
        net = neuralnet.build_autoencoder(
            [int(d) for d in target["encoder"]],
            [int(d) for d in target["decoder"]],
            float(target["weight_decay"]),
        )
        theta0 = neuralnet.glorot_init(net.layers, root.spawn(KEY_INIT))
        return neuralnet.as_objective(net, data), theta0
    raise ValueError(f"unknown target kind: {kind!r}")


def run_experiment(cfg: ExperimentConfig) -> RunTrace:
    """Build the target and drive the configured optimizer to termination."""
    obj, theta0 = build_target(cfg)
    return run_until(
        cfg.optimizer,
        obj,
        theta0,
        cfg.stop,
        cfg.max_iters,
        trace_every=cfg.trace_every,
        config_id=cfg.id,
    )


def optimizer_label(opt: OptimizerConfig) -> tuple[str, str]:
    """(method, momentum) strings for summaries and file names."""
    if isinstance(opt, AdineConfig):
        return "adine", f"ms{opt.m_s:g}/mg{opt.m_g:g}/z{opt.zeta:g}"
    if opt.variant is Variant.CM:
        return "cm", f"{opt.m:g}"
    if opt.variant is Variant.NAG_SUTSKEVER:
        return "nag", f"{opt.m:g}"
    return "nag_scheduled", "schedule"


@dataclass(frozen=True)
class SummaryTable:
    """Rows of one race or sweep, plus helpers to render them."""

    header: tuple
    rows: tuple

    def render_text(self) -> str:
        cols = [self.header] + [tuple(str(v) for v in row) for row in self.rows]
        widths = [max(len(r[i]) for r in cols) for i in range(len(self.header))]
        lines = []
        for j, row in enumerate(cols):
            lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
            if j == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header)
            for row in self.rows:
                writer.writerow([_render_cell(v) for v in row])


def _render_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _iterations_cell(trace: RunTrace):
    """Iterations-to-threshold, or DNF (annotated with the divergence step)."""
    if trace.terminal_reason is TerminalReason.THRESHOLD_REACHED:
        return trace.iterations
    if trace.terminal_reason is TerminalReason.DIVERGED:
        return f"DNF@{trace.diverged_at}"
    return "DNF"


def run_race(cfgs: Sequence[ExperimentConfig]) -> tuple[SummaryTable, list[RunTrace]]:
    """Run optimizers that share a target, seed, start and stop criterion;
    one summary row per optimizer, in the given order."""
    if not cfgs:
        raise ValueError("race needs at least one config")
    first = cfgs[0]
    for cfg in cfgs[1:]:
        if cfg.target != first.target:
            raise ValueError("race configs must share the same target")
        if cfg.seed != first.seed or cfg.x0 != first.x0 or cfg.stop != first.stop:
            raise ValueError("race configs must share seed, initial point and stop criterion")
    traces = []
    rows = []
    for cfg in cfgs:
        trace = run_experiment(cfg)
        traces.append(trace)
        method, momentum = optimizer_label(cfg.optimizer)
        rows.append(
            (method, momentum, _iterations_cell(trace), trace.terminal_reason.value, trace.final_loss)
        )
    return SummaryTable(SUMMARY_HEADER, tuple(rows)), traces


def mg_usage_fraction(trace: RunTrace, m_g: float) -> float:
    """Fraction of steps run at the greater momentum, excluding the first step
    (which the weighted-sum-loss initialization forces to m_s)."""
    later = [r for r in trace.records if r.t > 1]
    if not later:
        return 0.0
    return sum(1 for r in later if r.momentum_used == m_g) / len(later)


def zeta_sweep(
    base: ExperimentConfig, zeta_values: Sequence[float]
) -> tuple[SummaryTable, list[RunTrace]]:
    """One run per zeta; reports final loss, greater-momentum usage fraction,
    and iterations-to-threshold where the stop criterion applies."""
    if not isinstance(base.optimizer, AdineConfig):
        raise ValueError("zeta_sweep requires an adaptive-inertia optimizer config")
    if any(z <= 0 for z in zeta_values):
        raise ValueError("zeta values must be positive")
    rows = []
    traces = []
    for z in zeta_values:
        opt = replace(base.optimizer, zeta=float(z))
        cfg = replace(base, id=f"{base.id}_z{z:g}", optimizer=opt)
        trace = run_experiment(cfg)
        traces.append(trace)
        rows.append(
            (
                float(z),
                trace.final_loss,
                mg_usage_fraction(trace, opt.m_g),
                _iterations_cell(trace),
                trace.terminal_reason.value,
            )
        )
    return SummaryTable(SWEEP_HEADER, tuple(rows)), traces


def steps_to_reach(trace: RunTrace, target_loss: float, window: int) -> Optional[int]:
    """First step at which the trailing mean of `window` recorded losses dips
    to target_loss, or None. Expects a trace recorded at trace_every=1."""
    losses = np.array([r.loss for r in trace.records])
    if len(losses) < window:
        return None
    csum = np.concatenate(([0.0], np.cumsum(losses)))
    means = (csum[window:] - csum[:-window]) / window
    hits = np.nonzero(means <= target_loss)[0]
    if len(hits) == 0:
        return None
    return int(trace.records[hits[0] + window - 1].t)


def export_trace_csv(trace: RunTrace, path) -> None:
    """Write t,loss,wsl,momentum,grad_norm rows; floats carry 17 significant
    digits so a re-import is value-identical."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in trace.records:
            writer.writerow(
                [
                    r.t,
                    f"{r.loss:.17g}",
                    "" if r.wsl is None else f"{r.wsl:.17g}",
                    f"{r.momentum_used:.17g}",
                    f"{r.grad_norm:.17g}",
                ]
            )


def import_trace_csv(path, config_id: str = "imported") -> RunTrace:
    """Read records back from :func:`export_trace_csv` output. The terminal
    reason is not stored in the file and defaults to MAX_ITERS."""
    trace = RunTrace(config_id=config_id)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and tuple(header) != TRACE_HEADER:
            raise ValueError(f"unexpected trace header in {path}: {header}")
        for row in reader:
            if not row:
                continue
            trace.append(
                StepRecord(
                    t=int(row[0]),
                    loss=float(row[1]),
                    wsl=None if row[2] == "" else float(row[2]),
                    momentum_used=float(row[3]),
                    grad_norm=float(row[4]),
                )
            )
    return trace


def parse_optimizer(doc: dict) -> OptimizerConfig:
    """Optimizer config from its JSON form."""
    if "method" not in doc:
        raise ValueError("optimizer config needs a 'method' field")
    method = doc["method"]
    eta = float(doc.get("eta", 0.0))
    if method == "adine":
        return AdineConfig(
            eta=eta,
            m_s=float(doc.get("m_s", 0.9)),
            m_g=float(doc.get("m_g", 1.0001)),
            zeta=float(doc.get("zeta", 1.1)),
        )
    if method == "cm":
        return FixedMomentumConfig(eta=eta, m=float(doc.get("m", 0.9)), variant=Variant.CM)
    if method == "nag":
        return FixedMomentumConfig(
            eta=eta, m=float(doc.get("m", 0.9)), variant=Variant.NAG_SUTSKEVER
        )
    if method == "nag_scheduled":
        return FixedMomentumConfig(eta=eta, variant=Variant.NAG_SCHEDULED)
    raise ValueError(f"unknown optimizer method: {method!r}")


def parse_stop(doc: Optional[dict]) -> StopCriterion:
    if doc is None:
        return StopCriterion(StopKind.MAX_ITERS_ONLY)
    kind = doc.get("kind", "max_iters_only")
    if kind == "loss_below":
        return StopCriterion(StopKind.LOSS_BELOW, float(doc["threshold"]))
    if kind == "max_iters_only":
        return StopCriterion(StopKind.MAX_ITERS_ONLY)
    raise ValueError(f"unknown stop kind: {kind!r}")


def _resolve_max_iters(doc: dict, target: dict) -> int:
    if "max_iters" in doc and "epochs" in doc:
        raise ValueError("config must set max_iters or epochs, not both")
    if "epochs" in doc:
        return int(doc["epochs"]) * batches_per_epoch(target)
    if "max_iters" in doc:
        return int(doc["max_iters"])
    raise ValueError("config must set max_iters (or epochs for dataset targets)")


def load_race_config(path, *, seed_override=None, max_iters_override=None):
    """(race id, experiment configs, one per listed optimizer) from a race JSON file."""
    with open(path) as fh:
        doc = json.load(fh)
    target = _normalize_target(doc["target"])
    seed = int(seed_override if seed_override is not None else doc.get("seed", 0))
    stop = parse_stop(doc.get("stop"))
    max_iters = int(
        max_iters_override if max_iters_override is not None else _resolve_max_iters(doc, target)
    )
    trace_every = int(doc.get("trace_every", 1))
    x0 = tuple(doc["x0"]) if "x0" in doc else None
    race_id = str(doc.get("id", "race"))
    opts = doc.get("optimizers")
    if not opts:
        raise ValueError("race config needs a non-empty 'optimizers' list")
    cfgs = []
    for opt_doc in opts:
        opt = parse_optimizer(opt_doc)
        method, momentum = optimizer_label(opt)
        label = f"{method}_{momentum}".replace("/", "_")
        cfgs.append(
            ExperimentConfig(
                id=f"{race_id}_{label}",
                seed=seed,
                target=target,
                optimizer=opt,
                stop=stop,
                max_iters=max_iters,
                trace_every=trace_every,
                x0=x0,
            )
        )
    return race_id, cfgs


def load_sweep_config(path, *, seed_override=None, max_iters_override=None):
    """(base ExperimentConfig, zeta values) from a sweep JSON file."""
    with open(path) as fh:
        doc = json.load(fh)
    target = _normalize_target(doc["target"])
    seed = int(seed_override if seed_override is not None else doc.get("seed", 0))
    stop = parse_stop(doc.get("stop"))
    max_iters = int(
        max_iters_override if max_iters_override is not None else _resolve_max_iters(doc, target)
    )
    zeta_values = [float(z) for z in doc.get("zeta_values", [])]
    if not zeta_values:
        raise ValueError("sweep config needs a non-empty 'zeta_values' list")
    base = ExperimentConfig(
        id=str(doc.get("id", "sweep")),
        seed=seed,
        target=target,
        optimizer=parse_optimizer(doc["optimizer"]),
        stop=stop,
        max_iters=max_iters,
        trace_every=int(doc.get("trace_every", 1)),
        x0=tuple(doc["x0"]) if "x0" in doc else None,
    )
    return base, zeta_values


__all__ = [
    "ExperimentConfig",
    "SUMMARY_HEADER",
    "SWEEP_HEADER",
    "SummaryTable",
    "TRACE_HEADER",
    "batches_per_epoch",
    "build_target",
    "export_trace_csv",
    "import_trace_csv",
    "load_race_config",
    "load_sweep_config",
    "mg_usage_fraction",
    "optimizer_label",
    "parse_optimizer",
    "parse_stop",
    "run_experiment",
    "run_race",
    "steps_to_reach",
    "target_is_landscape",
    "zeta_sweep",
]
