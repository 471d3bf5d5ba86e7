"""Runtime stylization controls on a trained, unchanged network.

Everything here recombines feature maps at inference: the content-style
trade-off blends decoder inputs, style interpolation convexly combines
per-style AdaIN outputs, color preservation re-targets the style image's
palette, and spatial control applies different style statistics to
disjoint mask regions. Exactness identities (alpha endpoints, one-hot
weights, full/empty masks) hold bit-exactly by construction: degenerate
cases short-circuit to the plain code paths.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, RegionOverlapError
from .images import color_match
from .model import decode, encode_content, encode_style
from .normalization import StyleDescriptor, adain_with_stats
from .tensor import Tensor

WEIGHT_SUM_TOL = 1e-6


@dataclass
class ControlSpec:
    """Resolved runtime knobs for one stylization request.

    styles pairs each style (an image tensor or a StyleDescriptor) with
    its interpolation weight; weights must be non-negative and sum to 1.
    masks, when present, pair 1:1 with styles as (H,W) float arrays
    aligned to the content image (>= 0.5 means in-region).
    """

    styles: list
    alpha: float = 1.0
    masks: list = None
    preserve_color: bool = False

    def validate(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0,1], got {self.alpha}")
        if len(self.styles) < 1:
            raise ConfigError("at least one style is required")
        weights = [w for _, w in self.styles]
        if any(w < 0 for w in weights):
            raise ConfigError(f"weights must be >= 0, got {weights}")
        total = sum(weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ConfigError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got sum {total}")
        if self.masks is not None and len(self.masks) != len(self.styles):
            raise ConfigError(f"{len(self.masks)} masks for {len(self.styles)} styles; they pair 1:1")
        return self

    def describe(self):
        """JSON-friendly echo of the resolved controls."""
        return {
            "alpha": self.alpha,
            "weights": [w for _, w in self.styles],
            "num_styles": len(self.styles),
            "preserve_color": self.preserve_color,
            "masks": len(self.masks) if self.masks is not None else 0,
        }


def _to_descriptor(model, style, content_img=None, preserve_color=False):
    if isinstance(style, StyleDescriptor):
        if preserve_color:
            raise ConfigError("preserve_color needs style images, not cached descriptors")
        return style
    img = style
    if preserve_color:
        img = color_match(img, content_img)
    return encode_style(model, img)


def _mask_to_feature_grid(mask, fh, fw):
    """Nearest-neighbor downsample to feature resolution, then binarize."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DimensionError(f"mask must be (H,W), got shape {mask.shape}")
    h, w = mask.shape
    rows = np.minimum((np.arange(fh) * h) // fh, h - 1)
    cols = np.minimum((np.arange(fw) * w) // fw, w - 1)
    return mask[rows[:, None], cols[None, :]] >= 0.5


def stylize(model, content_img, spec):
    """Single dispatch point realizing a ControlSpec; used by CLI and service."""
    spec.validate()
    fc = encode_content(model, content_img)
    if spec.alpha == 0.0:
        return decode(model, fc)

    descriptors = [
        (_to_descriptor(model, s, content_img, spec.preserve_color), w) for s, w in spec.styles
    ]

    if spec.masks is not None:
        target_data = _masked_target(model, content_img, fc, descriptors, spec.masks)
    else:
        target_data = _interpolated_target(model, fc, descriptors)

    if spec.alpha == 1.0:
        return decode(model, Tensor(target_data))
    blend = (1.0 - spec.alpha) * fc.data + spec.alpha * target_data
    return decode(model, Tensor(blend.astype(fc.data.dtype, copy=False)))


def _interpolated_target(model, fc, descriptors):
    """Convex combination of per-style AdaIN outputs.

    Terms accumulate in a canonical order (sorted by descriptor and
    weight bytes) and zero-weight terms are skipped, so reordering the
    style list cannot change a single output bit.
    """
    live = [(d, w) for d, w in descriptors if w != 0.0]
    if len(live) == 1 and live[0][1] == 1.0:
        return adain_with_stats(fc, live[0][0], eps=model.eps).data
    live.sort(key=lambda dw: (dw[0].to_bytes(), np.float64(dw[1]).tobytes()))
    acc = None
    for d, w in live:
        term = np.float32(w) * adain_with_stats(fc, d, eps=model.eps).data
        acc = term if acc is None else acc + term
    return acc


def _masked_target(model, content_img, fc, descriptors, masks):
    """Apply each style's statistics inside its region; content elsewhere."""
    fh, fw = fc.data.shape[2:]
    ch, cw = content_img.data.shape[2:]
    grids = []
    for mask in masks:
        m = np.asarray(mask)
        if m.shape != (ch, cw):
            raise DimensionError(f"mask shape {m.shape} does not match content {ch}x{cw}")
        grids.append(_mask_to_feature_grid(m, fh, fw))
    if len(grids) > 1:
        coverage = np.sum(np.stack(grids).astype(np.int32), axis=0)
        overlap = int((coverage > 1).sum())
        if overlap:
            raise RegionOverlapError(overlap)
    out = fc.data.copy()
    for (descriptor, _), grid in zip(descriptors, grids):
        if not grid.any():
            continue
        styled = adain_with_stats(fc, descriptor, eps=model.eps).data
        out[:, :, grid] = styled[:, :, grid]
    return out


# -- named operations --------------------------------------------------------


def tradeoff(model, content_img, style, alpha):
    """Blend reconstruction (alpha=0) against full stylization (alpha=1)."""
    return stylize(model, content_img, ControlSpec(styles=[(style, 1.0)], alpha=alpha))


def interpolate_styles(model, content_img, styles_and_weights):
    """Decode a convex combination of AdaIN outputs for K styles."""
    return stylize(model, content_img, ControlSpec(styles=list(styles_and_weights)))


def color_preserving_transfer(model, content_img, style_img):
    """Transfer against the color-matched style, keeping content's palette."""
    return stylize(model, content_img, ControlSpec(styles=[(style_img, 1.0)], preserve_color=True))


def spatial_transfer(model, content_img, styles_and_masks):
    """Different style statistics in different mask regions."""
    styles = [(s, 1.0 / len(styles_and_masks)) for s, _ in styles_and_masks]
    masks = [m for _, m in styles_and_masks]
    return stylize(model, content_img, ControlSpec(styles=styles, masks=masks))
