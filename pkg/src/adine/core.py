"""Shared domain types: parameter vectors, objectives, run traces, seeded RNG."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import backend

# A run is declared diverged once |loss| exceeds this, or any parameter or
# gradient entry goes non-finite.
DIVERGENCE_LIMIT = 1e12


class DivergedError(RuntimeError):
    """Raised by step functions when a loss, gradient or parameter goes non-finite."""


class ParamVector:
    """Immutable flat vector of 64-bit parameters.

    Entries are validated to be finite on public construction. ``values`` is a
    read-only float64 ndarray; ``dim`` is its length (always >= 1).
    """

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"ParamVector must be 1-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("ParamVector must have positive dimension")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ParamVector entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "ParamVector":
        # Fast path for freshly computed arrays: takes ownership, skips
        # validation. Callers are responsible for finiteness checks.
        pv = object.__new__(cls)
        arr.setflags(write=False)
        object.__setattr__(pv, "values", arr)
        return pv

    @property
    def dim(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.all(self.values == other.values)
        )

    def __hash__(self):
        return hash(self.values.tobytes())

    def __array__(self, dtype=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __setattr__(self, name, value):
        raise AttributeError("ParamVector is immutable")

    def __repr__(self):
        return f"ParamVector({np.array2string(self.values, threshold=8)})"


def zeros(dim: int) -> ParamVector:
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    return ParamVector._wrap(np.zeros(dim))


def vec_axpy(a: float, x: ParamVector, y: ParamVector) -> ParamVector:
    """Return a*x + y elementwise; inputs are left unmodified."""
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return ParamVector._wrap(backend.kernels.axpy(float(a), x.values, y.values))


def vec_norm2(x: ParamVector) -> float:
    """Euclidean norm of x."""
    return backend.kernels.nrm2(x.values)


class Objective(ABC):
    """Evaluable loss-and-gradient interface over ParamVector.

    ``eval`` and ``grad`` are deterministic given theta and the current batch
    context. Full-batch objectives have no batch context; mini-batched ones
    move to the next batch only on :meth:`advance`, so an ``eval`` and a
    ``grad`` issued within one optimizer step see the same batch.

    Instances must be safe for concurrent read-only evaluation; mini-batched
    objectives are single-owner because ``advance`` mutates the batch cursor.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def eval(self, theta: ParamVector) -> float:
        ...

    @abstractmethod
    def grad(self, theta: ParamVector) -> ParamVector:
        ...

    def advance(self) -> None:
        """Move to the next mini-batch. No-op for full-batch objectives."""

    def reset(self) -> None:
        """Restart the batch stream. No-op for full-batch objectives."""


class TerminalReason(Enum):
    THRESHOLD_REACHED = "threshold_reached"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class StepRecord:
    """One iteration of a run: loss consumed at step t, momentum used, |grad|.

    ``loss`` is the objective value at the pre-update parameters (the l_t the
    update consumed); ``wsl`` is the weighted-sum loss for adaptive-momentum
    runs and None otherwise.
    """

    t: int
    loss: float
    wsl: Optional[float]
    momentum_used: float
    grad_norm: float


@dataclass
class RunTrace:
    """Per-iteration records of one optimizer run, plus why it stopped."""

    config_id: str
    records: list[StepRecord] = field(default_factory=list)
    terminal_reason: TerminalReason = TerminalReason.MAX_ITERS
    diverged_at: Optional[int] = None

    def append(self, rec: StepRecord) -> None:
        if self.records and rec.t <= self.records[-1].t:
            raise ValueError("StepRecord.t must strictly increase within a trace")
        self.records.append(rec)

    def validate(self) -> None:
        if self.terminal_reason is TerminalReason.THRESHOLD_REACHED and not self.records:
            raise ValueError("threshold_reached trace must be non-empty")

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss if self.records else float("nan")

    @property
    def iterations(self) -> int:
        return self.records[-1].t if self.records else 0


class StopKind(Enum):
    LOSS_BELOW = "loss_below"
    MAX_ITERS_ONLY = "max_iters_only"


@dataclass(frozen=True)
class StopCriterion:
    """When a run terminates early: never, or once the consumed loss dips below a threshold."""

    kind: StopKind
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.kind is StopKind.LOSS_BELOW:
            if self.threshold is None or not np.isfinite(self.threshold):
                raise ValueError("LOSS_BELOW requires a finite threshold")

    def fires(self, loss: float) -> bool:
        return self.kind is StopKind.LOSS_BELOW and loss < self.threshold


class Rng:
    """Deterministic random source: PCG64 behind a fixed 64-bit seed.

    Identical seeds produce identical draw streams across runs and platforms
    (PCG64's output is specified independently of the host). ``spawn`` derives
    an independent child stream from (seed, key); the derivation is stable, so
    sub-streams for e.g. landscape sampling and weight init never overlap.
    """

    __slots__ = ("seed", "_gen")

    def __init__(self, seed: int, _spawn_key: tuple = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        ss = np.random.SeedSequence(entropy=seed, spawn_key=_spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, key: int) -> "Rng":
        rng = object.__new__(Rng)
        rng.seed = self.seed
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(key),))
        rng._gen = np.random.Generator(np.random.PCG64(ss))
        return rng

    def uniform(self, low: float, high: float, size=None):
        """Uniform draws on [low, high)."""
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def check_finite_array(arr: np.ndarray, what: str) -> None:
    """Raise DivergedError if any entry of arr is NaN or infinite."""
    if not np.all(np.isfinite(arr)):
        raise DivergedError(f"non-finite {what}")


__all__ = [
    "DIVERGENCE_LIMIT",
    "DivergedError",
    "Objective",
    "ParamVector",
    "Rng",
    "RunTrace",
    "StepRecord",
    "StopCriterion",
    "StopKind",
    "TerminalReason",
    "check_finite_array",
    "vec_axpy",
    "vec_norm2",
    "zeros",
]
