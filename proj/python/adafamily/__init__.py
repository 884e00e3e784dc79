"""AdaFamily adaptive-gradient optimizers and benchmark harness."""

from ._core import (
    Algorithm,
    DecayMode,
    Optimizer,
    OptimizerConfig,
    OptimizerState,
    Problem,
    default_optimizer,
    deserialize_state,
    eval_loss_grad,
    finite_diff_grad,
    gen_gaussian_blobs,
    init_params,
    normalization_factor,
    serialize_state,
    sweep_mu,
)

__all__ = [
    "Algorithm",
    "DecayMode",
    "Optimizer",
    "OptimizerConfig",
    "OptimizerState",
    "Problem",
    "default_optimizer",
    "deserialize_state",
    "eval_loss_grad",
    "finite_diff_grad",
    "gen_gaussian_blobs",
    "init_params",
    "normalization_factor",
    "serialize_state",
    "sweep_mu",
]
__version__ = "0.1.0"
