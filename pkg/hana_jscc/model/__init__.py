from .config import ModelConfig, Precision, ResidualInit, Variant
from .network import ChannelMatrixAdaptor, ForwardResult, HanaJSCC
from .params import CHANNEL_GROUPS, SEMANTIC_GROUPS, ParameterGroup, ParameterStore

__all__ = [
    "CHANNEL_GROUPS",
    "ChannelMatrixAdaptor",
    "ForwardResult",
    "HanaJSCC",
    "ModelConfig",
    "ParameterGroup",
    "ParameterStore",
    "Precision",
    "ResidualInit",
    "SEMANTIC_GROUPS",
    "Variant",
]
