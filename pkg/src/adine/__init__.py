"""Momentum optimizers with adaptive inertia, saddle landscapes, and a
reproducible experiment harness.

The hot kernels (fused momentum updates, landscape evaluation) run on a
compiled extension when built, with a bit-compatible numpy fallback selected
automatically at import; see :mod:`adine.backend`.
"""

from .backend import HAS_COMPILED, active_backend, available_backends, set_backend
from .core import (
    DIVERGENCE_LIMIT,
    DivergedError,
    Objective,
    ParamVector,
    Rng,
    RunTrace,
    StepRecord,
    StopCriterion,
    StopKind,
    TerminalReason,
    vec_axpy,
    vec_norm2,
)
from .optimizers import (
    AdineConfig,
    FixedMomentumConfig,
    NesterovSchedule,
    OptimizerState,
    Variant,
    adine_step,
    cm_step,
    cm_telescoped_position,
    initial_state,
    nag_step,
    nesterov_momentum,
    polyak_optimal_params,
    run_until,
    wsl_closed_form,
    wsl_update,
)
from .landscapes import (
    CubicSaddle,
    QuadraticSaddle,
    Saddle2D,
    cubic_eval_grad,
    quad_eval_grad,
    sample_cubic,
    sample_quadratic,
)
from .neuralnet import (
    Activation,
    Dataset,
    DatasetKind,
    LayerSpec,
    LossKind,
    Network,
    build_autoencoder,
    build_classifier,
    forward,
    glorot_init,
    loss_and_grad,
    make_desk_dataset,
)
from .harness import (
    ExperimentConfig,
    SummaryTable,
    export_trace_csv,
    import_trace_csv,
    run_experiment,
    run_race,
    steps_to_reach,
    zeta_sweep,
)

__version__ = "0.1.0"
