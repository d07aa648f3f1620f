from .classifier import Classifier
from .gridsearch import GridEntry, GridSearchResult, grid_search
from .persist import load_model, save_model
from .training import TrainConfig, evaluate_accuracy, train_classifier, train_vae
from .vae import (
    LatentDistribution,
    LossBreakdown,
    VaeModel,
    augmented_loss,
    kl_gaussian,
    loss_and_gradients,
    reconstruction_loss,
    sample_latent,
)

__all__ = [
    "Classifier",
    "GridEntry",
    "GridSearchResult",
    "LatentDistribution",
    "LossBreakdown",
    "TrainConfig",
    "VaeModel",
    "augmented_loss",
    "evaluate_accuracy",
    "grid_search",
    "kl_gaussian",
    "load_model",
    "loss_and_gradients",
    "reconstruction_loss",
    "sample_latent",
    "save_model",
    "train_classifier",
    "train_vae",
]
