"""Learn DAG structure from observational data by sampling binary adjacency
matrices from an implicit exponential-family distribution and training its
parameter with discrete backpropagation."""

from .pipeline import PRESETS, DivergenceError, TrainConfig, TrainResult
from .pipeline import predict_dag, preset, train

__version__ = "0.1.0"

__all__ = [
    "PRESETS",
    "DivergenceError",
    "TrainConfig",
    "TrainResult",
    "predict_dag",
    "preset",
    "train",
    "__version__",
]
