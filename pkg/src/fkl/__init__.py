"""Functional kernel learning: nonparametric GP kernels from a latent log-spectral density."""

__version__ = "0.1.0"

from .errors import FKLError
from .latent_model import HyperParams
from .predict import PredictiveMixture
from .spectral import FrequencyGrid, SpectralKernel, build_grid
from .trainer import FittedModel, TrainConfig, fit, fit_multi_input, fit_multi_task

__all__ = [
    "FKLError",
    "FittedModel",
    "FrequencyGrid",
    "HyperParams",
    "PredictiveMixture",
    "SpectralKernel",
    "TrainConfig",
    "build_grid",
    "fit",
    "fit_multi_input",
    "fit_multi_task",
]
