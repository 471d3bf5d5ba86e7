"""Encoder-AdaIN-decoder transfer network and its weights plumbing.

The encoder is a frozen VGG-style conv stack tapped at four relu
activations; the trainable decoder mirrors it with nearest upsampling in
place of pooling and reflection padding everywhere. A compact "tiny"
encoder (randomly initialized, then frozen) makes the whole pipeline and
its losses runnable without external pretrained weights; a real VGG-19
export in the same bundle format drops in with no code change.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError
from .normalization import BatchNorm2d, InstanceNorm2d, StyleDescriptor, adain_with_stats
from .tensor import Tensor, conv2d, max_pool2d, reflection_pad2d, relu, upsample_nearest2d
from .weights import WeightsBundle

ENCODER_TAPS = ("relu1_1", "relu2_1", "relu3_1", "relu4_1")

# frozen random weights must be identical across processes
_TINY_ENCODER_SEED = 1310


@dataclass
class EncoderSpec:
    """Declarative conv/pool/tap table plus input preprocessing.

    Layer items: ("conv", cin, cout), ("pool",), ("tap", name). Convs are
    3x3 stride 1 with reflection pad 1 and a relu; taps name the relu
    output they follow.
    """

    layers: list
    preprocess: dict = field(default_factory=lambda: {"mean": [0.0, 0.0, 0.0], "std": [1.0, 1.0, 1.0], "channel_order": "rgb"})

    def tap_names(self):
        return [item[1] for item in self.layers if item[0] == "tap"]

    def conv_shapes(self):
        return [(item[1], item[2]) for item in self.layers if item[0] == "conv"]

    @property
    def out_channels(self):
        return self.conv_shapes()[-1][1]

    @property
    def pool_count(self):
        return sum(1 for item in self.layers if item[0] == "pool")


def reference_encoder_spec():
    """VGG-19 prefix up to relu4_1, taps after each block's first conv."""
    return EncoderSpec(
        layers=[
            ("conv", 3, 64),
            ("tap", "relu1_1"),
            ("conv", 64, 64),
            ("pool",),
            ("conv", 64, 128),
            ("tap", "relu2_1"),
            ("conv", 128, 128),
            ("pool",),
            ("conv", 128, 256),
            ("tap", "relu3_1"),
            ("conv", 256, 256),
            ("conv", 256, 256),
            ("conv", 256, 256),
            ("pool",),
            ("conv", 256, 512),
            ("tap", "relu4_1"),
        ]
    )


def tiny_encoder_spec():
    """Desk-scale encoder: one conv per block, channels 16/32/64/64."""
    return EncoderSpec(
        layers=[
            ("conv", 3, 16),
            ("tap", "relu1_1"),
            ("pool",),
            ("conv", 16, 32),
            ("tap", "relu2_1"),
            ("pool",),
            ("conv", 32, 64),
            ("tap", "relu3_1"),
            ("pool",),
            ("conv", 64, 64),
            ("tap", "relu4_1"),
        ]
    )


def _he_normal(rng, cout, cin, k, dtype=np.float32):
    std = np.sqrt(2.0 / (cin * k * k))
    return (rng.standard_normal((cout, cin, k, k)) * std).astype(dtype)


class Encoder:
    """Frozen feature extractor; forward returns every tap."""

    def __init__(self, spec, conv_weights):
        self.spec = spec
        if len(conv_weights) != len(spec.conv_shapes()):
            raise DimensionError("weight count does not match encoder conv table")
        self.convs = []
        for (cin, cout), (w, b) in zip(spec.conv_shapes(), conv_weights):
            if w.data.shape != (cout, cin, 3, 3) or b.data.shape != (cout,):
                raise DimensionError(f"encoder conv weight shape {w.data.shape} != ({cout},{cin},3,3)")
            w.requires_grad = False
            b.requires_grad = False
            self.convs.append((w, b))
        self.min_input = 2 ** (spec.pool_count + 1)

    @classmethod
    def random(cls, spec, seed=_TINY_ENCODER_SEED):
        rng = np.random.default_rng(seed)
        weights = []
        for cin, cout in spec.conv_shapes():
            w = Tensor(_he_normal(rng, cout, cin, 3))
            b = Tensor(np.zeros(cout, dtype=np.float32))
            weights.append((w, b))
        return cls(spec, weights)

    def preprocess(self, img):
        pp = self.spec.preprocess
        if pp.get("channel_order", "rgb") == "bgr":
            if img.requires_grad:
                raise DimensionError("bgr channel reorder is not differentiable; use rgb inputs")
            img = Tensor(np.ascontiguousarray(img.data[:, ::-1]))
        mean = np.asarray(pp["mean"], dtype=img.data.dtype).reshape(1, 3, 1, 1)
        std = np.asarray(pp["std"], dtype=img.data.dtype).reshape(1, 3, 1, 1)
        if np.all(mean == 0.0) and np.all(std == 1.0):
            return img
        return (img - Tensor(mean)) / Tensor(std)

    def forward(self, img, upto=None):
        """All tap activations of an image batch, in forward order."""
        if img.data.shape[2] < self.min_input or img.data.shape[3] < self.min_input:
            raise DimensionError(
                f"input {img.data.shape[2]}x{img.data.shape[3]} below encoder minimum {self.min_input}"
            )
        x = self.preprocess(img)
        taps = {}
        conv_idx = 0
        for item in self.spec.layers:
            if item[0] == "conv":
                w, b = self.convs[conv_idx]
                conv_idx += 1
                x = relu(conv2d(reflection_pad2d(x, 1), w, b))
            elif item[0] == "pool":
                x = max_pool2d(x, 2, 2)
            elif item[0] == "tap":
                taps[item[1]] = x
                if upto == item[1]:
                    return taps
        return taps


def mirror_decoder_layers(enc_spec):
    """Decoder layer table: encoder convs reversed, pools become upsamples."""
    items = []
    for item in reversed(enc_spec.layers):
        if item[0] == "conv":
            items.append(("conv", item[2], item[1]))
        elif item[0] == "pool":
            items.append(("upsample",))
    return items


class Decoder:
    """Trainable mirror of the encoder.

    No normalization layers by default (norm_kind="none"); "bn"/"in"
    insert one after every conv except the last, for the ablation
    variants. widen_first=2 doubles the first conv's input channels for
    the feature-concatenation baseline.
    """

    def __init__(self, layers, norm_kind="none", widen_first=1, seed=0):
        if norm_kind not in ("none", "bn", "in"):
            raise ValueError(f"norm_kind must be none|bn|in, got {norm_kind!r}")
        self.layers = [list(item) for item in layers]
        self.norm_kind = norm_kind
        self.widen_first = widen_first
        self.seed = seed
        rng = np.random.default_rng(seed)
        conv_items = [item for item in self.layers if item[0] == "conv"]
        if widen_first != 1:
            conv_items[0][1] *= widen_first
        self.convs = []
        self.norms = []
        for idx, (_, cin, cout) in enumerate(conv_items):
            w = Tensor(_he_normal(rng, cout, cin, 3), requires_grad=True)
            b = Tensor(np.zeros(cout, dtype=np.float32), requires_grad=True)
            self.convs.append((w, b))
            is_last = idx == len(conv_items) - 1
            if norm_kind == "none" or is_last:
                self.norms.append(None)
            elif norm_kind == "bn":
                self.norms.append(BatchNorm2d(cout))
            else:
                self.norms.append(InstanceNorm2d(cout))

    @property
    def in_channels(self):
        return self.convs[0][0].data.shape[1]

    def parameters(self):
        params = []
        for w, b in self.convs:
            params.extend([w, b])
        for norm in self.norms:
            if norm is not None:
                params.extend(norm.parameters())
        return params

    def set_training(self, flag):
        for norm in self.norms:
            if norm is not None:
                norm.training = flag

    def forward(self, t):
        if t.data.shape[1] != self.in_channels:
            raise DimensionError(f"decoder expects C={self.in_channels}, got {t.data.shape[1]}")
        x = t
        conv_idx = 0
        n_convs = len(self.convs)
        for item in self.layers:
            if item[0] == "upsample":
                x = upsample_nearest2d(x, 2)
                continue
            w, b = self.convs[conv_idx]
            x = conv2d(reflection_pad2d(x, 1), w, b)
            norm = self.norms[conv_idx]
            if norm is not None:
                x = norm(x)
            conv_idx += 1
            if conv_idx < n_convs:
                x = relu(x)
        return x


@dataclass
class StyleTransferModel:
    """Fixed encoder + trained decoder + the loss-layer tap names."""

    encoder: Encoder
    decoder: Decoder
    eps: float = 1e-5
    loss_taps: tuple = ENCODER_TAPS

    def __post_init__(self):
        expected = self.encoder.spec.out_channels * self.decoder.widen_first
        if self.decoder.in_channels != expected:
            raise DimensionError(
                f"decoder input channels {self.decoder.in_channels} != encoder output {expected}"
            )
        taps = self.encoder.spec.tap_names()
        if list(self.loss_taps) != taps:
            raise DimensionError(f"loss taps {self.loss_taps} do not match encoder taps {taps}")


def build_model(encoder="tiny", norm_kind="none", widen_first=1, decoder_seed=0, eps=1e-5):
    """Model with a tiny random frozen encoder (or a provided Encoder)."""
    if encoder == "tiny":
        encoder = Encoder.random(tiny_encoder_spec())
    elif encoder == "reference":
        encoder = Encoder.random(reference_encoder_spec())
    decoder = Decoder(
        mirror_decoder_layers(encoder.spec), norm_kind=norm_kind, widen_first=widen_first, seed=decoder_seed
    )
    return StyleTransferModel(encoder=encoder, decoder=decoder, eps=eps)


def encode(model, img):
    """Activations at every loss tap; the last one feeds AdaIN."""
    return model.encoder.forward(img)


def encode_content(model, img):
    """Only the final tap, for inference paths that skip the loss layers."""
    taps = model.encoder.forward(img, upto=model.loss_taps[-1])
    return taps[model.loss_taps[-1]]


def decode(model, t):
    """Map feature maps back to image space (linear final layer, no clamp)."""
    return model.decoder.forward(t)


def encode_style(model, style_img):
    """Per-channel statistics of the style's final-tap features."""
    feats = encode_content(model, style_img)
    return StyleDescriptor.from_features(feats, eps=model.eps)


def transfer(model, content_img, style_img):
    """decode(adain(f(c), f(s))): the full stylization forward pass."""
    descriptor = encode_style(model, style_img)
    return transfer_with_descriptor(model, content_img, descriptor)


def transfer_with_descriptor(model, content_img, descriptor):
    """Stylize against cached style statistics; bit-exact vs transfer()."""
    feats = encode_content(model, content_img)
    t = adain_with_stats(feats, descriptor, eps=model.eps)
    return decode(model, t)


def content_stats_channels(model):
    return model.encoder.spec.out_channels


# -- bundle conversion -------------------------------------------------------


def model_to_bundle(model):
    tensors = {}
    for i, (w, b) in enumerate(model.encoder.convs):
        tensors[f"encoder.conv{i}.weight"] = w.data
        tensors[f"encoder.conv{i}.bias"] = b.data
    for i, (w, b) in enumerate(model.decoder.convs):
        tensors[f"decoder.conv{i}.weight"] = w.data
        tensors[f"decoder.conv{i}.bias"] = b.data
    for i, norm in enumerate(model.decoder.norms):
        if norm is None:
            continue
        tensors[f"decoder.norm{i}.gamma"] = norm.params.gamma.data
        tensors[f"decoder.norm{i}.beta"] = norm.params.beta.data
        if isinstance(norm, BatchNorm2d):
            tensors[f"decoder.norm{i}.running_mean"] = norm.running_mean
            tensors[f"decoder.norm{i}.running_var"] = norm.running_var
    arch = {
        "encoder_layers": [list(item) for item in model.encoder.spec.layers],
        "decoder_norm": model.decoder.norm_kind,
        "decoder_widen_first": model.decoder.widen_first,
        "eps": model.eps,
    }
    return WeightsBundle(tensors=tensors, preprocess=dict(model.encoder.spec.preprocess), extra={"arch": arch})


def model_from_bundle(bundle):
    arch = bundle.extra.get("arch")
    if arch is None:
        raise FormatError("bundle manifest has no 'arch' object")
    spec = EncoderSpec(
        layers=[tuple(item) for item in arch["encoder_layers"]],
        preprocess=dict(bundle.preprocess),
    )
    n_enc = len(spec.conv_shapes())
    enc_weights = []
    for i in range(n_enc):
        try:
            w = bundle.tensors[f"encoder.conv{i}.weight"]
            b = bundle.tensors[f"encoder.conv{i}.bias"]
        except KeyError as exc:
            raise FormatError(f"bundle missing tensor {exc}") from exc
        enc_weights.append((Tensor(w), Tensor(b)))
    encoder = Encoder(spec, enc_weights)
    decoder = Decoder(
        mirror_decoder_layers(spec),
        norm_kind=arch.get("decoder_norm", "none"),
        widen_first=arch.get("decoder_widen_first", 1),
    )
    for i, (w, b) in enumerate(decoder.convs):
        try:
            w_arr = bundle.tensors[f"decoder.conv{i}.weight"]
            b_arr = bundle.tensors[f"decoder.conv{i}.bias"]
        except KeyError as exc:
            raise FormatError(f"bundle missing tensor {exc}") from exc
        if w_arr.shape != w.data.shape:
            raise FormatError(
                f"decoder.conv{i}.weight shape {w_arr.shape} does not match architecture {w.data.shape}"
            )
        w.data = w_arr.copy()
        b.data = b_arr.copy()
    for i, norm in enumerate(decoder.norms):
        if norm is None:
            continue
        norm.params.gamma.data = bundle.tensors[f"decoder.norm{i}.gamma"].copy()
        norm.params.beta.data = bundle.tensors[f"decoder.norm{i}.beta"].copy()
        if isinstance(norm, BatchNorm2d):
            norm.running_mean = bundle.tensors[f"decoder.norm{i}.running_mean"].copy()
            norm.running_var = bundle.tensors[f"decoder.norm{i}.running_var"].copy()
    # loaded models serve inference; trainers build their own decoders
    decoder.set_training(False)
    return StyleTransferModel(encoder=encoder, decoder=decoder, eps=arch.get("eps", 1e-5))
