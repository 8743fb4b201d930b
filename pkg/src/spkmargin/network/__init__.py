"""x-vector network with explicit backward passes."""

from .layers import BatchNorm, DenseLayer, InputTooShortError, Mode, Parameter, StatsPool, TdnnLayer
from .xvector import ForwardCache, LayerSpec, XVectorNet, parameter_count

__all__ = [
    "BatchNorm",
    "DenseLayer",
    "ForwardCache",
    "InputTooShortError",
    "LayerSpec",
    "Mode",
    "Parameter",
    "StatsPool",
    "TdnnLayer",
    "XVectorNet",
    "parameter_count",
]
