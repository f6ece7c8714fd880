"""Few-spikes neurons: activation approximation, training, and initialization."""

__version__ = "0.1.0"

from .activation import ActivationKind, SampleGrid, default_grid, eval_activation, make_grid
from .curvefit import CurveModel, eval_curve, fit, fit_auto, fit_exponential, fit_polynomial
from .neuron import (
    FsParams,
    QuadratureError,
    SpikeTrace,
    StepFunction,
    binary_quantizer,
    exact_mse,
    forward,
    forward_batch,
    to_step_function,
)
from .train import (
    AdamState,
    GaussianPerturbedInit,
    RandomInit,
    TbpiInit,
    TrainConfig,
    TrainHistory,
    TrainingDivergedError,
    adam_init,
    adam_step,
    backward,
    init_gaussian_perturbed,
    init_random,
    loss,
    pretrain,
    tbpi_init,
    train_with_init,
)

__all__ = [
    "ActivationKind",
    "AdamState",
    "CurveModel",
    "FsParams",
    "GaussianPerturbedInit",
    "QuadratureError",
    "RandomInit",
    "SampleGrid",
    "SpikeTrace",
    "StepFunction",
    "TbpiInit",
    "TrainConfig",
    "TrainHistory",
    "TrainingDivergedError",
    "adam_init",
    "adam_step",
    "backward",
    "binary_quantizer",
    "default_grid",
    "eval_activation",
    "eval_curve",
    "exact_mse",
    "fit",
    "fit_auto",
    "fit_exponential",
    "fit_polynomial",
    "forward",
    "forward_batch",
    "init_gaussian_perturbed",
    "init_random",
    "loss",
    "make_grid",
    "pretrain",
    "tbpi_init",
    "to_step_function",
    "train_with_init",
]
