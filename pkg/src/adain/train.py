"""Training loops and experiment harnesses.

Four jobs live here: training the decoder to invert AdaIN output
(content target is t, never f(c)); the normalization-interpretation
experiment matrix (IN vs BN single-style nets on original /
contrast-equalized / style-normalized data); the fusion and
decoder-normalization ablations; and an iterative pixel-space
optimization baseline. Everything is deterministic under its seed and
the encoder is never updated.
"""

import hashlib
import json
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, TrainingDiverged
from .images import equalize_luminance, load_image, random_crop, resize_smallest_side
from .loss import LossReport, content_loss, style_loss, total_loss
from .model import Decoder, Encoder, StyleTransferModel, mirror_decoder_layers, model_from_bundle, tiny_encoder_spec, transfer
from .normalization import adain
from .optim import Adam
from .tensor import Tensor, concat
from .weights import load_weights

VARIANTS = ("AdaIN-Dec", "Concat-Dec", "AdaIN-BNDec", "AdaIN-INDec")
PREPROCESS_KINDS = ("none", "contrast_eq", "style_norm")


@dataclass
class TrainConfig:
    content_dir: str
    style_dir: str
    batch_size: int = 8
    resize_target: int = 512
    crop: int = 256
    iterations: int = 1000
    style_weight: float = 10.0
    seed: int = 0
    encoder_bundle: str = "tiny"
    variant: str = "AdaIN-Dec"
    eps: float = 1e-5
    lr: float = 1e-4

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.crop > self.resize_target:
            raise ConfigError(f"crop {self.crop} exceeds resize target {self.resize_target}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.style_weight < 0:
            raise ConfigError(f"style weight must be >= 0, got {self.style_weight}")


@dataclass
class ExperimentConfig:
    """One arm of the IN-vs-BN single-style experiment."""

    content_dir: str
    style_image: str
    norm_kind: str = "IN"
    preprocess: str = "none"
    style_norm_model: str = None
    normalization_style: str = None
    seeds: list = field(default_factory=lambda: [0])
    batch_size: int = 4
    resize_target: int = 72
    crop: int = 64
    iterations: int = 500
    style_weight: float = 10.0
    eps: float = 1e-5
    # desk-scale calibration: 500 iterations need this step size to leave
    # the transient where both norms look alike
    lr: float = 1e-3

    def __post_init__(self):
        if self.norm_kind not in ("IN", "BN"):
            raise ConfigError(f"norm_kind must be IN or BN, got {self.norm_kind!r}")
        if self.preprocess not in PREPROCESS_KINDS:
            raise ConfigError(f"preprocess must be one of {PREPROCESS_KINDS}")
        if self.preprocess == "style_norm" and self.style_norm_model is None:
            raise ConfigError("preprocess=style_norm requires style_norm_model")


def encoder_digest(encoder):
    h = hashlib.sha256()
    for w, b in encoder.convs:
        h.update(w.data.tobytes())
        h.update(b.data.tobytes())
    return h.hexdigest()


def load_encoder(spec_name_or_path):
    """'tiny' builds the fixed random desk encoder; a path loads a bundle."""
    if spec_name_or_path == "tiny":
        return Encoder.random(tiny_encoder_spec())
    model = model_from_bundle(load_weights(spec_name_or_path))
    return model.encoder


class ImageFolder:
    """Images of a directory, resized once and cached.

    Undecodable files are skipped with a warning; an empty usable set is
    a configuration error. An optional preprocess hook (full-image, before
    cropping) is applied at load time.
    """

    def __init__(self, directory, resize_target, preprocess_fn=None):
        directory = Path(directory)
        self.paths = sorted(
            p for p in directory.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
        ) if directory.is_dir() else []
        if not self.paths:
            raise ConfigError(f"no images found in {directory}")
        self.resize_target = resize_target
        self.preprocess_fn = preprocess_fn
        self._cache = {}
        self._bad = set()

    def __len__(self):
        return len(self.paths)

    def get(self, index):
        if index in self._cache:
            return self._cache[index]
        if index in self._bad:
            return None
        path = self.paths[index]
        try:
            img = load_image(path)
        except OSError as exc:
            warnings.warn(f"skipping undecodable image {path}: {exc}", stacklevel=2)
            self._bad.add(index)
            return None
        img = resize_smallest_side(img, self.resize_target)
        if self.preprocess_fn is not None:
            img = self.preprocess_fn(img)
        self._cache[index] = img
        return img

    def sample(self, rng, crop):
        """One random image (with replacement), randomly cropped."""
        for _ in range(len(self.paths) * 2 + 8):
            img = self.get(int(rng.integers(0, len(self.paths))))
            if img is not None:
                return random_crop(img, crop, rng)
        raise ConfigError("all images in the folder failed to decode")


def make_batch(cfg, rng, content_folder=None, style_folder=None):
    """(content, style) batches of shape (B,3,crop,crop); resize then crop."""
    if content_folder is None:
        content_folder = ImageFolder(cfg.content_dir, cfg.resize_target)
    if style_folder is None:
        style_folder = ImageFolder(cfg.style_dir, cfg.resize_target)
    contents = [content_folder.sample(rng, cfg.crop).data for _ in range(cfg.batch_size)]
    styles = [style_folder.sample(rng, cfg.crop).data for _ in range(cfg.batch_size)]
    return Tensor(np.concatenate(contents)), Tensor(np.concatenate(styles))


def _check_finite(value, iteration, term):
    if not np.isfinite(value):
        raise TrainingDiverged(iteration, term)


def _loss_report(c_loss, s_loss, per_layer, style_weight, iteration):
    _check_finite(c_loss.item(), iteration, "content")
    _check_finite(s_loss.item(), iteration, "style")
    return total_loss(c_loss.item(), s_loss.item(), style_weight, [v.item() for v in per_layer])


def train_decoder(cfg, on_iteration=None):
    """Train a decoder per the given variant; returns (model, curve).

    Per iteration: t = AdaIN(f(c), f(s)) (or channel concat for the
    fusion baseline), out = g(t), loss = content(f(out), t) +
    lambda * style(f(out), f(s)), Adam step on the decoder only.
    """
    encoder = load_encoder(cfg.encoder_bundle)
    norm_kind = {"AdaIN-BNDec": "bn", "AdaIN-INDec": "in"}.get(cfg.variant, "none")
    widen = 2 if cfg.variant == "Concat-Dec" else 1
    decoder = Decoder(
        mirror_decoder_layers(encoder.spec), norm_kind=norm_kind, widen_first=widen, seed=cfg.seed
    )
    model = StyleTransferModel(encoder=encoder, decoder=decoder, eps=cfg.eps)
    content_folder = ImageFolder(cfg.content_dir, cfg.resize_target)
    style_folder = ImageFolder(cfg.style_dir, cfg.resize_target)
    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(decoder.parameters(), lr=cfg.lr)
    frozen = encoder_digest(encoder)
    final_tap = model.loss_taps[-1]

    curve = []
    decoder.set_training(True)
    for iteration in range(1, cfg.iterations + 1):
        content_batch, style_batch = make_batch(cfg, rng, content_folder, style_folder)
        style_taps = encoder.forward(style_batch)
        fc = encoder.forward(content_batch, upto=final_tap)[final_tap]
        if cfg.variant == "Concat-Dec":
            decoder_input = concat([fc, style_taps[final_tap]], axis=1)
            content_target = fc  # t is undefined without AdaIN; regress onto f(c)
        else:
            decoder_input = adain(fc, style_taps[final_tap], eps=cfg.eps)
            content_target = decoder_input
        out = decoder.forward(decoder_input)
        out_taps = encoder.forward(out)
        c_loss = content_loss(out_taps[final_tap], content_target.detach())
        s_loss, per_layer = style_loss(out_taps, style_taps, eps=cfg.eps)
        report = _loss_report(c_loss, s_loss, per_layer, cfg.style_weight, iteration)
        loss = c_loss + s_loss * cfg.style_weight if cfg.style_weight > 0 else c_loss
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        curve.append((iteration, report))
        if on_iteration is not None:
            on_iteration(iteration, report)

    assert encoder_digest(encoder) == frozen, "encoder weights changed during training"
    decoder.set_training(False)
    return model, curve


def train_baseline(cfg):
    """Ablation arms dispatch through the same loop as the main variant."""
    return train_decoder(cfg)


def make_style_norm_preprocess(style_norm_model, normalization_style):
    """Re-render every training image in one fixed style via a trained net."""
    if isinstance(style_norm_model, (str, Path)):
        style_norm_model = model_from_bundle(load_weights(style_norm_model))

    def apply(img):
        out = transfer(style_norm_model, img, normalization_style)
        return Tensor(np.clip(out.data, 0.0, 1.0))

    return apply


def train_single_style(cfg, seed=None, encoder=None, normalization_style=None):
    """One single-style run for the interpretation experiment; returns a Curve.

    The network is this repo's encoder-decoder with IN or BN after every
    decoder conv except the last, trained against one fixed style. The
    preprocess flag transforms content images before cropping:
    contrast_eq equalizes luminance, style_norm re-renders them in one
    fixed style via a previously trained transfer model.
    """
    seed = cfg.seeds[0] if seed is None else seed
    encoder = encoder or Encoder.random(tiny_encoder_spec())
    style_img = resize_smallest_side(load_image(cfg.style_image), cfg.resize_target)
    style_img = random_crop(style_img, cfg.crop, np.random.default_rng(0))
    style_taps = encoder.forward(style_img)

    if cfg.preprocess == "none":
        preprocess_fn = None
    elif cfg.preprocess == "contrast_eq":
        preprocess_fn = equalize_luminance
    else:
        if normalization_style is None:
            if cfg.normalization_style is None:
                raise ConfigError(
                    "style_norm preprocessing needs a normalization style distinct from the target style"
                )
            normalization_style = load_image(cfg.normalization_style)
        preprocess_fn = make_style_norm_preprocess(cfg.style_norm_model, normalization_style)

    folder = ImageFolder(cfg.content_dir, cfg.resize_target, preprocess_fn=preprocess_fn)
    decoder = Decoder(
        mirror_decoder_layers(encoder.spec),
        norm_kind=cfg.norm_kind.lower(),
        seed=seed,
    )
    rng = np.random.default_rng(seed)
    optimizer = Adam(decoder.parameters(), lr=cfg.lr)
    final_tap = encoder.spec.tap_names()[-1]
    frozen = encoder_digest(encoder)

    curve = []
    decoder.set_training(True)
    for iteration in range(1, cfg.iterations + 1):
        batch = Tensor(np.concatenate([folder.sample(rng, cfg.crop).data for _ in range(cfg.batch_size)]))
        fc = encoder.forward(batch, upto=final_tap)[final_tap]
        out = decoder.forward(fc)
        out_taps = encoder.forward(out)
        c_loss = content_loss(out_taps[final_tap], fc.detach())
        s_loss, per_layer = style_loss(out_taps, style_taps, eps=cfg.eps)
        report = _loss_report(c_loss, s_loss, per_layer, cfg.style_weight, iteration)
        loss = c_loss + s_loss * cfg.style_weight
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        curve.append((iteration, report))

    assert encoder_digest(encoder) == frozen
    decoder.set_training(False)
    return curve


def evaluate(model, content_set, style_set):
    """Stylize every (content, style) pair; returns (mean report, rows).

    Per pair: content loss of the output's features against t, style
    loss against the style's tap statistics.
    """
    if not content_set or not style_set:
        raise ConfigError("content and style sets must be non-empty")
    final_tap = model.loss_taps[-1]
    rows = []
    for ci, c_img in enumerate(content_set):
        fc = model.encoder.forward(c_img, upto=final_tap)[final_tap]
        for si, s_img in enumerate(style_set):
            style_taps = model.encoder.forward(s_img)
            t = adain(fc, style_taps[final_tap], eps=model.eps)
            out = model.decoder.forward(t)
            out_taps = model.encoder.forward(out)
            c_loss = content_loss(out_taps[final_tap], t).item()
            s_loss, per_layer = style_loss(out_taps, style_taps, eps=model.eps)
            rows.append(
                {
                    "content": ci,
                    "style": si,
                    "report": total_loss(c_loss, s_loss.item(), 1.0, [v.item() for v in per_layer]),
                }
            )
    n = len(rows)
    mean_report = LossReport(
        content=sum(r["report"].content for r in rows) / n,
        style=sum(r["report"].style for r in rows) / n,
        total=sum(r["report"].total for r in rows) / n,
        style_weight=1.0,
        per_layer_style=[
            sum(r["report"].per_layer_style[i] for r in rows) / n
            for i in range(len(rows[0]["report"].per_layer_style))
        ],
    )
    return mean_report, rows


def raw_style_loss(model, content_set, style_set):
    """Style loss of the *unstylized* content images against each style."""
    rows = []
    for c_img in content_set:
        c_taps = model.encoder.forward(c_img)
        for s_img in style_set:
            s_taps = model.encoder.forward(s_img)
            value, _ = style_loss(c_taps, s_taps, eps=model.eps)
            rows.append(value.item())
    return rows


def optimize_image(model, content_img, style_img, iters, style_weight=10.0, step=0.02):
    """Slow pixel-space baseline: Adam on the image, starting at content.

    Content target is f(c) at the final tap; style loss matches tap
    statistics. Returns (optimized image tensor, curve of length iters).
    """
    if iters < 1:
        raise ConfigError(f"iters must be >= 1, got {iters}")
    final_tap = model.loss_taps[-1]
    content_target = model.encoder.forward(content_img, upto=final_tap)[final_tap].detach()
    style_taps = model.encoder.forward(style_img)
    style_taps = {k: v.detach() for k, v in style_taps.items()}

    var = Tensor(content_img.data.copy(), requires_grad=True)
    optimizer = Adam([var], lr=step)
    curve = []
    for iteration in range(1, iters + 1):
        out_taps = model.encoder.forward(var)
        c_loss = content_loss(out_taps[final_tap], content_target)
        s_loss, per_layer = style_loss(out_taps, style_taps, eps=model.eps)
        report = _loss_report(c_loss, s_loss, per_layer, style_weight, iteration)
        loss = c_loss + s_loss * style_weight if style_weight > 0 else c_loss
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        curve.append((iteration, report))
    return var, curve


def write_config_echo(path, cfg):
    """Resolved config next to the outputs, for provenance."""
    payload = asdict(cfg) if hasattr(cfg, "__dataclass_fields__") else dict(cfg)
    Path(path).write_text(json.dumps(payload, indent=2, default=str) + "\n")
