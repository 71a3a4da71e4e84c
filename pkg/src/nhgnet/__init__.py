"""EEG fatigue detection with a node-holistic graph convolutional network.

A self-contained implementation: a minimal reverse-mode autodiff engine, the
multiscale temporal / graph-spatial architecture with a trainable adjacency
matrix, the nested cross-validation training protocol with TSR augmentation
and transfer fine-tuning, numeric artifact exporters, a command-line driver,
and an sklearn-compatible estimator wrapper.
"""

from .autodiff import Parameter, Tensor, finite_checks, no_grad
from .errors import ConfigError, DataError, NhgnetError, NumericError, ShapeError

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "Parameter",
    "no_grad",
    "finite_checks",
    "NhgnetError",
    "ConfigError",
    "ShapeError",
    "DataError",
    "NumericError",
    "__version__",
]
