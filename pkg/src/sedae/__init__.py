"""Unsupervised text style transfer with a style-enhanced denoising autoencoder.

Numpy implementation of the whole pipeline: Text-CNN style classifier,
logistic-regression style lexicon, word mover's distance, corruption
operators, the attentional LSTM encoder-decoder with its manual gradients,
refined iterative back-translation, and the automatic metrics.
"""

from .errors import ContractViolation, DimensionError, NumericError

__version__ = "0.1.0"

__all__ = ["ContractViolation", "DimensionError", "NumericError", "__version__"]
