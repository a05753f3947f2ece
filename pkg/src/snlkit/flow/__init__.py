from .masks import MaskSet, build_masks, natural_ordering, reversed_ordering
from .layers import BatchNormBijection, MadeLayer
from .maf import ConditionalMaf, FlowConfig, FlowError
from .training import Adam, TrainConfig, TrainResult, loss_and_backward, train_flow

__all__ = [
    "MaskSet", "build_masks", "natural_ordering", "reversed_ordering",
    "BatchNormBijection", "MadeLayer",
    "ConditionalMaf", "FlowConfig", "FlowError",
    "Adam", "TrainConfig", "TrainResult", "loss_and_backward", "train_flow",
]
