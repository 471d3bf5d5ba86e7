"""Arbitrary style transfer via adaptive instance normalization.

A self-contained stack: dense-tensor autodiff core, the normalization
layer family, an encoder/AdaIN/decoder network with statistics-matching
losses, training and evaluation harnesses, runtime stylization controls,
and CLI / HTTP front ends.
"""

from .tensor import Tensor

__version__ = "0.1.0"

__all__ = ["Tensor", "__version__"]
