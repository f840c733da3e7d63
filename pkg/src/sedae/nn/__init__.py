"""Dense float64 layers with hand-written backward passes, Adam, and checkpoint I/O."""

from .layers import (
    attention_backward,
    attention_forward,
    cross_entropy,
    embedding_backward,
    embedding_forward,
    linear_backward,
    linear_forward,
    log_softmax,
    lstm_cell_backward,
    lstm_cell_forward,
    masked_softmax,
    sigmoid,
    softmax,
    xavier_uniform,
)
from .optim import AdamState, adam_step, clip_grad_norm
from .checkpoint import load_tensors, save_tensors, tensors_digest
from .gradcheck import GradCheckReport, grad_check

__all__ = [
    "AdamState",
    "GradCheckReport",
    "adam_step",
    "attention_backward",
    "attention_forward",
    "clip_grad_norm",
    "cross_entropy",
    "embedding_backward",
    "embedding_forward",
    "grad_check",
    "linear_backward",
    "linear_forward",
    "load_tensors",
    "log_softmax",
    "lstm_cell_backward",
    "lstm_cell_forward",
    "masked_softmax",
    "save_tensors",
    "sigmoid",
    "softmax",
    "tensors_digest",
    "xavier_uniform",
]
