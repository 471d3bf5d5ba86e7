"""Feature statistics and the normalization-layer family.

Four layers share one statistic machinery: batch norm standardizes each
channel over (N, H, W); instance norm over (H, W) per sample; conditional
instance norm swaps per-style affine rows into an instance norm; adaptive
instance norm replaces learned affines with the style input's own mean
and standard deviation, which is the entire transfer mechanism.

Standard deviations are biased (1/count) with eps added inside the
square root, so sigma >= sqrt(eps) > 0 always.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError
from .tensor import Tensor, sqrt

EPS_DEFAULT = 1e-5


@dataclass
class ChannelStats:
    """Per-channel mean/std, per-sample ("instance") or pooled ("batch").

    mu and sigma are kept broadcast-ready: (N,C,1,1) in instance mode,
    (1,C,1,1) in batch mode. Both are graph nodes, so anything computed
    from them stays differentiable.
    """

    mu: Tensor
    sigma: Tensor
    mode: str
    eps: float


@dataclass
class AffineParams:
    """Learned per-channel scale and shift."""

    gamma: Tensor
    beta: Tensor

    @classmethod
    def identity(cls, channels, dtype=np.float32, trainable=True):
        return cls(
            gamma=Tensor(np.ones(channels, dtype=dtype), requires_grad=trainable),
            beta=Tensor(np.zeros(channels, dtype=dtype), requires_grad=trainable),
        )


@dataclass
class CinParams:
    """Per-style affine tables, shape (S, C) each. Styles are 1-indexed."""

    gamma_table: Tensor
    beta_table: Tensor

    def __post_init__(self):
        if self.gamma_table.data.shape != self.beta_table.data.shape:
            raise DimensionError("gamma and beta tables must have identical shapes")
        if self.gamma_table.data.ndim != 2:
            raise DimensionError("CIN tables must be (styles, channels)")

    @property
    def num_styles(self):
        return self.gamma_table.data.shape[0]

    @property
    def num_params(self):
        return self.gamma_table.data.size + self.beta_table.data.size


def _check_spatial(x):
    if x.data.ndim != 4:
        raise DimensionError(f"expected rank-4 (N,C,H,W), got shape {x.data.shape}")
    if x.data.size == 0:
        raise DimensionError("empty tensor has no statistics")


def batch_stats(x, eps=EPS_DEFAULT):
    """Mean/std per channel over batch and spatial dims (biased variance)."""
    _check_spatial(x)
    mu = x.mean(axis=(0, 2, 3), keepdims=True)
    var = ((x - mu) * (x - mu)).mean(axis=(0, 2, 3), keepdims=True)
    return ChannelStats(mu=mu, sigma=sqrt(var + eps), mode="batch", eps=eps)


def instance_stats(x, eps=EPS_DEFAULT):
    """Mean/std per channel and per sample over spatial dims only."""
    _check_spatial(x)
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = ((x - mu) * (x - mu)).mean(axis=(2, 3), keepdims=True)
    return ChannelStats(mu=mu, sigma=sqrt(var + eps), mode="instance", eps=eps)


def _affine(normalized, params):
    c = normalized.data.shape[1]
    if params.gamma.data.shape != (c,):
        raise DimensionError(f"affine params for {params.gamma.data.shape} channels on C={c} input")
    gamma = params.gamma.reshape((1, c, 1, 1))
    beta = params.beta.reshape((1, c, 1, 1))
    return normalized * gamma + beta


def batch_norm(x, params, stats_source="minibatch", population=None, eps=EPS_DEFAULT):
    """Standardize per channel over (N,H,W), then apply the affine pair.

    stats_source selects minibatch statistics (training) or previously
    accumulated population statistics (inference); asking for population
    stats without providing them is an error.
    """
    if stats_source == "minibatch":
        stats = batch_stats(x, eps)
    elif stats_source == "population":
        if population is None:
            raise DimensionError("population statistics requested but none provided")
        stats = population
    else:
        raise ValueError(f"stats_source must be minibatch|population, got {stats_source!r}")
    return _affine((x - stats.mu) / stats.sigma, params)


def instance_norm(x, params, eps=EPS_DEFAULT):
    """Standardize each (sample, channel) slice, then apply the affine pair.

    Identical code path at train and test time; there are no population
    statistics.
    """
    stats = instance_stats(x, eps)
    return _affine((x - stats.mu) / stats.sigma, params)


def conditional_instance_norm(x, table, s, eps=EPS_DEFAULT):
    """Instance norm using row ``s`` (1-indexed) of the per-style tables."""
    if not 1 <= s <= table.num_styles:
        raise IndexError(f"style index {s} outside 1..{table.num_styles}")
    row = s - 1
    params = AffineParams(
        gamma=_table_row(table.gamma_table, row),
        beta=_table_row(table.beta_table, row),
    )
    return instance_norm(x, params, eps)


def _table_row(table, row):
    """Differentiable row selection from an (S,C) table."""
    s, c = table.data.shape
    data = table.data[row]

    def backward_fn(g):
        full = np.zeros_like(table.data)
        full[row] = g
        return [(table, full)]

    return Tensor._result(data, (table,), backward_fn)


def adain(x, y, eps=EPS_DEFAULT):
    """Align the per-(sample, channel) mean/std of x to those of y.

    No learnable parameters: the affine scale and shift ARE the style
    input's statistics. y may have a different spatial size, and a
    single-sample y broadcasts over x's batch. Differentiable in both.
    """
    if x.data.shape[1] != y.data.shape[1]:
        raise DimensionError(f"channel mismatch: content C={x.data.shape[1]}, style C={y.data.shape[1]}")
    if y.data.shape[0] not in (1, x.data.shape[0]):
        raise DimensionError(f"style batch {y.data.shape[0]} not broadcastable to content batch {x.data.shape[0]}")
    y_stats = instance_stats(y, eps)
    return _scale_shift(x, y_stats.sigma, y_stats.mu, eps)


def _scale_shift(x, sigma_y, mu_y, eps):
    x_stats = instance_stats(x, eps)
    return sigma_y * ((x - x_stats.mu) / x_stats.sigma) + mu_y


@dataclass
class StyleDescriptor:
    """Cached per-channel (mu, sigma) of a style's encoded features.

    Computing it once lets one style serve any number of content images;
    applying it is bit-exact equal to adain against the original style
    feature map.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float32).reshape(-1)
        self.sigma = np.asarray(self.sigma, dtype=np.float32).reshape(-1)
        if self.mu.shape != self.sigma.shape:
            raise DimensionError("descriptor mu/sigma length mismatch")
        if not np.all(self.sigma > 0):
            raise FormatError("descriptor sigma must be strictly positive")

    @property
    def channels(self):
        return self.mu.shape[0]

    @classmethod
    def from_features(cls, feats, eps=EPS_DEFAULT):
        """Descriptor of a single-sample feature map (N must be 1)."""
        if feats.data.shape[0] != 1:
            raise DimensionError("style descriptor requires a single-sample feature map")
        stats = instance_stats(feats, eps)
        return cls(mu=stats.mu.data.reshape(-1), sigma=stats.sigma.data.reshape(-1))

    def to_bytes(self):
        """Little-endian: u32 channel count, then mu then sigma as f32."""
        return (
            struct.pack("<I", self.channels)
            + self.mu.astype("<f4").tobytes()
            + self.sigma.astype("<f4").tobytes()
        )

    @classmethod
    def from_bytes(cls, blob):
        if len(blob) < 4:
            raise FormatError("descriptor blob too short for channel count")
        (channels,) = struct.unpack("<I", blob[:4])
        expected = 4 + 8 * channels
        if len(blob) != expected:
            raise FormatError(f"descriptor blob length {len(blob)} != expected {expected} for C={channels}")
        mu = np.frombuffer(blob, dtype="<f4", count=channels, offset=4)
        sigma = np.frombuffer(blob, dtype="<f4", count=channels, offset=4 + 4 * channels)
        return cls(mu=mu.copy(), sigma=sigma.copy())


def adain_with_stats(x, style, eps=EPS_DEFAULT):
    """adain against stored style statistics; bit-exact vs the original."""
    if style.channels != x.data.shape[1]:
        raise DimensionError(f"descriptor C={style.channels} does not match content C={x.data.shape[1]}")
    shape = (1, style.channels, 1, 1)
    dtype = x.data.dtype
    sigma_y = Tensor(style.sigma.astype(dtype, copy=False).reshape(shape))
    mu_y = Tensor(style.mu.astype(dtype, copy=False).reshape(shape))
    return _scale_shift(x, sigma_y, mu_y, eps)


class BatchNorm2d:
    """Batch-norm layer with running population statistics (momentum 0.1)."""

    def __init__(self, channels, eps=EPS_DEFAULT, momentum=0.1, dtype=np.float32):
        self.params = AffineParams.identity(channels, dtype=dtype)
        self.eps = eps
        self.momentum = momentum
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.training = True

    def parameters(self):
        return [self.params.gamma, self.params.beta]

    def __call__(self, x):
        if self.training:
            stats = batch_stats(x, self.eps)
            m = self.momentum
            batch_var = stats.sigma.data.reshape(-1) ** 2 - self.eps
            self.running_mean = (1 - m) * self.running_mean + m * stats.mu.data.reshape(-1)
            self.running_var = (1 - m) * self.running_var + m * batch_var
            return _affine((x - stats.mu) / stats.sigma, self.params)
        c = x.data.shape[1]
        mu = Tensor(self.running_mean.reshape(1, c, 1, 1).astype(x.data.dtype, copy=False))
        sigma = Tensor(np.sqrt(self.running_var + self.eps).reshape(1, c, 1, 1).astype(x.data.dtype, copy=False))
        return _affine((x - mu) / sigma, self.params)


class InstanceNorm2d:
    """Instance-norm layer; train and test paths are identical."""

    def __init__(self, channels, eps=EPS_DEFAULT, dtype=np.float32):
        self.params = AffineParams.identity(channels, dtype=dtype)
        self.eps = eps
        self.training = True

    def parameters(self):
        return [self.params.gamma, self.params.beta]

    def __call__(self, x):
        return instance_norm(x, self.params, self.eps)
