"""Momentum optimizers as pure step functions: classical momentum, Nesterov's
accelerated gradient (Sutskever form and the original momentum schedule), and
the adaptive-inertia method that switches between a standard momentum m_s < 1
and a greater momentum m_g >= 1 based on a weighted-sum loss signal.

Each ``*_step`` function maps (state, config, objective, theta) to new values
without mutating its inputs; :func:`run_until` drives any of them to a stop
criterion and collects a :class:`~adine.core.RunTrace`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import backend
from .core import (
    DIVERGENCE_LIMIT,
    DivergedError,
    Objective,
    ParamVector,
    RunTrace,
    StepRecord,
    StopCriterion,
    TerminalReason,
    check_finite_array,
    zeros,
)


class Variant(Enum):
    CM = "cm"
    NAG_SUTSKEVER = "nag"
    NAG_SCHEDULED = "nag_scheduled"


@dataclass(frozen=True)
class FixedMomentumConfig:
    """Constant-momentum optimizer settings.

    For NAG_SCHEDULED the momentum value ``m`` is ignored and each step draws
    m_t from the Nesterov schedule instead.
    """

    eta: float
    m: float = 0.9
    variant: Variant = Variant.CM

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.m < 0:
            raise ValueError(f"momentum must be >= 0, got {self.m}")


@dataclass(frozen=True)
class AdineConfig:
    """Adaptive-inertia settings: learning rate, the two momentum levels, and
    the tolerance multiplier zeta that gates switching to the greater one."""

    eta: float
    m_s: float = 0.9
    m_g: float = 1.0001
    zeta: float = 1.1

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0 < self.m_s < 1:
            raise ValueError(f"m_s must lie in (0, 1), got {self.m_s}")
        # The normal regime is m_g >= 1; m_g == m_s is allowed so the
        # degenerate case can be checked against plain NAG.
        if self.m_g < self.m_s:
            raise ValueError(f"require m_g >= m_s, got {self.m_g} < {self.m_s}")
        if self.zeta <= 0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")


@dataclass(frozen=True)
class NesterovSchedule:
    """State of the a_t recurrence behind Nesterov's momentum sequence."""

    a: float = 1.0
    t: int = 0

    def __post_init__(self):
        if self.a < 1:
            raise ValueError(f"a must be >= 1, got {self.a}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")


@dataclass(frozen=True)
class OptimizerState:
    """Velocity, timestep, weighted-sum loss, and the momentum last applied.

    ``schedule`` persists the a_t recurrence for scheduled-NAG runs;
    ``last_grad_norm`` carries |grad| of the most recent step so the run loop
    can record it without recomputing.
    """

    velocity: ParamVector
    t: int = 0
    wsl: float = 0.0
    wsl_prev: float = 0.0
    active_momentum: float = 0.0
    schedule: Optional[NesterovSchedule] = None
    last_grad_norm: float = 0.0

    def __post_init__(self):
        if self.t == 0 and (np.any(self.velocity.values != 0.0) or self.wsl != 0.0):
            raise ValueError("a fresh state (t=0) must have zero velocity and zero wsl")


def initial_state(dim: int, m0: float = 0.0) -> OptimizerState:
    """Fresh state: t=0, zero velocity, zero weighted-sum loss."""
    return OptimizerState(velocity=zeros(dim), active_momentum=m0)


def nesterov_momentum(sched: NesterovSchedule) -> tuple[float, NesterovSchedule]:
    """Advance the a_t recurrence one step and return (m_t, new schedule).

    a_{t+1} = (1 + sqrt(4 a_t^2 + 1)) / 2 and m_t = (a_t - 1) / a_{t+1},
    which always lies in [0, 1).
    """
    a_next = (1.0 + math.sqrt(4.0 * sched.a * sched.a + 1.0)) / 2.0
    m_t = (sched.a - 1.0) / a_next
    return m_t, NesterovSchedule(a=a_next, t=sched.t + 1)


def wsl_update(wsl_prev: float, loss: float) -> float:
    """Recursive weighted-sum loss: the average of the previous value and the
    new loss. Losses are assumed nonnegative (as for cross-entropy/BCE)."""
    return (wsl_prev + loss) / 2.0


def wsl_closed_form(losses: Sequence[float]) -> float:
    """Closed form of the weighted-sum loss: sum of l_i / 2^(k-i+1)."""
    k = len(losses)
    if k == 0:
        raise ValueError("losses must be non-empty")
    return sum(l * math.ldexp(1.0, -(k - i)) for i, l in enumerate(losses))


def polyak_optimal_params(alpha: float, beta: float) -> tuple[float, float]:
    """Optimal heavy-ball settings for an alpha-strongly-convex, beta-smooth
    problem: eta = 4/(sqrt(beta)+sqrt(alpha))^2 and
    m = ((sqrt(beta)-sqrt(alpha))/(sqrt(beta)+sqrt(alpha)))^2."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if beta < alpha:
        raise ValueError(f"beta must be >= alpha, got beta={beta} < alpha={alpha}")
    sa, sb = math.sqrt(alpha), math.sqrt(beta)
    eta_opt = 4.0 / (sb + sa) ** 2
    m_opt = ((sb - sa) / (sb + sa)) ** 2
    return eta_opt, m_opt


def _check_dims(state: OptimizerState, theta: ParamVector) -> None:
    if state.velocity.dim != theta.dim:
        raise ValueError(
            f"dimension mismatch: velocity {state.velocity.dim} vs theta {theta.dim}"
        )


def _apply(theta: ParamVector, velocity: ParamVector, grad: ParamVector,
           m: float, eta: float) -> tuple[ParamVector, ParamVector]:
    check_finite_array(grad.values, "gradient")
    th, vn = backend.kernels.momentum_apply(
        theta.values, velocity.values, grad.values, m, eta
    )
    check_finite_array(th, "parameters")
    return ParamVector._wrap(th), ParamVector._wrap(vn)


def cm_step(
    state: OptimizerState,
    cfg: FixedMomentumConfig,
    obj: Objective,
    theta: ParamVector,
) -> tuple[ParamVector, OptimizerState]:
    """Heavy-ball update: v' = m*v - eta*grad(theta); theta' = theta + v'."""
    if cfg.variant is not Variant.CM:
        raise ValueError(f"cm_step requires the CM variant, got {cfg.variant}")
    _check_dims(state, theta)
    g = obj.grad(theta)
    theta_new, v_new = _apply(theta, state.velocity, g, cfg.m, cfg.eta)
    new_state = replace(
        state,
        velocity=v_new,
        t=state.t + 1,
        active_momentum=cfg.m,
        last_grad_norm=backend.kernels.nrm2(g.values),
    )
    return theta_new, new_state


def nag_step(
    state: OptimizerState,
    cfg: FixedMomentumConfig,
    obj: Objective,
    theta: ParamVector,
) -> tuple[ParamVector, OptimizerState]:
    """Lookahead update: v' = m*v - eta*grad(theta + m*v); theta' = theta + v'.

    With the scheduled variant, m is drawn from the Nesterov schedule carried
    in the state and the schedule advances one step.
    """
    if cfg.variant not in (Variant.NAG_SUTSKEVER, Variant.NAG_SCHEDULED):
        raise ValueError(f"nag_step requires a NAG variant, got {cfg.variant}")
    _check_dims(state, theta)
    if cfg.variant is Variant.NAG_SCHEDULED:
        sched = state.schedule if state.schedule is not None else NesterovSchedule()
        m, sched = nesterov_momentum(sched)
    else:
        m, sched = cfg.m, state.schedule
    look = backend.kernels.axpy(m, state.velocity.values, theta.values)
    g = obj.grad(ParamVector._wrap(look))
    theta_new, v_new = _apply(theta, state.velocity, g, m, cfg.eta)
    new_state = replace(
        state,
        velocity=v_new,
        t=state.t + 1,
        active_momentum=m,
        schedule=sched,
        last_grad_norm=backend.kernels.nrm2(g.values),
    )
    return theta_new, new_state


def adine_step(
    state: OptimizerState,
    cfg: AdineConfig,
    obj: Objective,
    theta: ParamVector,
) -> tuple[ParamVector, OptimizerState, StepRecord]:
    """One adaptive-inertia step.

    Evaluates the loss at the current parameters, folds it into the
    weighted-sum loss, picks m_s when the new WSL exceeds zeta times the old
    one (insufficient progress) and m_g otherwise, then applies the lookahead
    momentum update with the chosen m.
    """
    _check_dims(state, theta)
    loss = obj.eval(theta)
    if not math.isfinite(loss):
        raise DivergedError("non-finite loss")
    wsl_new = wsl_update(state.wsl, loss)
    m = cfg.m_s if wsl_new > cfg.zeta * state.wsl else cfg.m_g
    look = backend.kernels.axpy(m, state.velocity.values, theta.values)
    g = obj.grad(ParamVector._wrap(look))
    theta_new, v_new = _apply(theta, state.velocity, g, m, cfg.eta)
    grad_norm = backend.kernels.nrm2(g.values)
    t_new = state.t + 1
    new_state = replace(
        state,
        velocity=v_new,
        t=t_new,
        wsl=wsl_new,
        wsl_prev=state.wsl,
        active_momentum=m,
        last_grad_norm=grad_norm,
    )
    rec = StepRecord(t=t_new, loss=loss, wsl=wsl_new, momentum_used=m, grad_norm=grad_norm)
    return theta_new, new_state, rec


def cm_telescoped_position(
    theta_0: ParamVector,
    grads: Sequence[ParamVector],
    m: float,
    eta: float,
    theta_n: ParamVector,
) -> ParamVector:
    """Closed form for the heavy-ball iterate theta_{n+1}:

    m*theta_n + (1-m)*theta_0 - eta * sum of the gradients at theta_0..theta_n.
    """
    if len(grads) == 0:
        raise ValueError("grads must be non-empty")
    dim = theta_0.dim
    if theta_n.dim != dim or any(g.dim != dim for g in grads):
        raise ValueError("dimension mismatch between theta_0, theta_n and grads")
    gsum = np.zeros(dim)
    for g in grads:
        gsum += g.values
    out = m * theta_n.values + (1.0 - m) * theta_0.values - eta * gsum
    return ParamVector._wrap(out)


StepConfig = Union[AdineConfig, FixedMomentumConfig]
Stepper = Callable[[OptimizerState, ParamVector], tuple[ParamVector, OptimizerState, StepRecord]]


def _make_stepper(opt: StepConfig, obj: Objective) -> tuple[Stepper, float]:
    if isinstance(opt, AdineConfig):
        def stepper(state, theta):
            return adine_step(state, opt, obj, theta)
        return stepper, opt.m_s
    if isinstance(opt, FixedMomentumConfig):
        step_fn = cm_step if opt.variant is Variant.CM else nag_step
        def stepper(state, theta):
            loss = obj.eval(theta)
            if not math.isfinite(loss):
                raise DivergedError("non-finite loss")
            theta_new, new_state = step_fn(state, opt, obj, theta)
            rec = StepRecord(
                t=new_state.t,
                loss=loss,
                wsl=None,
                momentum_used=new_state.active_momentum,
                grad_norm=new_state.last_grad_norm,
            )
            return theta_new, new_state, rec
        return stepper, opt.m if opt.variant is not Variant.NAG_SCHEDULED else 0.0
    raise TypeError(f"unsupported optimizer config: {opt!r}")


def run_until(
    opt: Union[StepConfig, Stepper],
    obj: Objective,
    theta_0: ParamVector,
    stop: StopCriterion,
    max_iters: int,
    *,
    trace_every: int = 1,
    config_id: str = "run",
) -> RunTrace:
    """Iterate a step function until the stop criterion fires, max_iters is
    reached, or the run diverges (|loss| beyond the divergence limit, or a
    non-finite loss/gradient/parameter).

    ``opt`` is an optimizer config, or a callable
    ``(state, theta) -> (theta, state, StepRecord)`` for custom steppers.
    Divergence is a terminal reason, not an error. The objective's batch
    stream is reset at the start so repeated runs are identical.
    """
    if max_iters <= 0:
        raise ValueError(f"max_iters must be positive, got {max_iters}")
    if trace_every < 1:
        raise ValueError(f"trace_every must be >= 1, got {trace_every}")

    if callable(opt) and not isinstance(opt, (AdineConfig, FixedMomentumConfig)):
        stepper, m0 = opt, 0.0
    else:
        stepper, m0 = _make_stepper(opt, obj)

    obj.reset()
    state = initial_state(theta_0.dim, m0=m0)
    theta = theta_0
    trace = RunTrace(config_id=config_id)
    reason = TerminalReason.MAX_ITERS
    diverged_at = None

    for t in range(1, max_iters + 1):
        obj.advance()
        try:
            theta, state, rec = stepper(state, theta)
        except DivergedError:
            reason = TerminalReason.DIVERGED
            diverged_at = t
            break
        terminal = False
        if stop.fires(rec.loss):
            reason = TerminalReason.THRESHOLD_REACHED
            terminal = True
        elif abs(rec.loss) > DIVERGENCE_LIMIT:
            reason = TerminalReason.DIVERGED
            diverged_at = t
            terminal = True
        if terminal or t == max_iters or t % trace_every == 0:
            trace.append(rec)
        if terminal:
            break

    trace.terminal_reason = reason
    trace.diverged_at = diverged_at
    trace.validate()
    return trace


__all__ = [
    "AdineConfig",
    "FixedMomentumConfig",
    "NesterovSchedule",
    "OptimizerState",
    "Variant",
    "adine_step",
    "cm_step",
    "cm_telescoped_position",
    "initial_state",
    "nag_step",
    "nesterov_momentum",
    "polyak_optimal_params",
    "run_until",
    "wsl_closed_form",
    "wsl_update",
]
