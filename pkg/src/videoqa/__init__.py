"""Question-guided video question answering: model, training, metrics, CLI."""

from .autodiff import NumericError, ShapeError, Tensor, no_grad, set_default_dtype
from .model import ModelConfig, VideoQAModel, decode_beam, decode_greedy

__version__ = "0.1.0"

__all__ = [
    "ModelConfig",
    "NumericError",
    "ShapeError",
    "Tensor",
    "VideoQAModel",
    "decode_beam",
    "decode_greedy",
    "no_grad",
    "set_default_dtype",
    "__version__",
]
