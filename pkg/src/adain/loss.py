"""Training objective: content loss, statistics-matching style loss, and
a Gram-matrix loss kept for evaluation parity with second-order methods.

The content loss regresses decoded features onto the AdaIN output t.
The style loss matches per-layer channel-wise mean and standard
deviation between the output image's features and the style image's
features; it never looks at Gram matrices.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .normalization import instance_stats
from .tensor import l2_norm

EPS_DEFAULT = 1e-5


@dataclass
class LossReport:
    """One training/evaluation measurement; total = content + lambda*style."""

    content: float
    style: float
    total: float
    style_weight: float
    per_layer_style: list

    CSV_FIELDS = ("iteration", "content", "style", "total")

    def csv_row(self, iteration):
        return [iteration, self.content, self.style, self.total, *self.per_layer_style]

    @staticmethod
    def csv_header(tap_names):
        return list(LossReport.CSV_FIELDS) + [f"style_{t}" for t in tap_names]


def content_loss(output_feat, target_feat):
    """Mean squared difference over all feature elements (differentiable)."""
    if output_feat.data.shape != target_feat.data.shape:
        raise DimensionError(
            f"content loss shapes differ: {output_feat.data.shape} vs {target_feat.data.shape}"
        )
    diff = output_feat - target_feat
    return (diff * diff).mean()


def _layer_style_term(out_feat, style_feat, eps):
    """||mu_out - mu_style||_2 + ||sigma_out - sigma_style||_2, batch-averaged."""
    n, c = out_feat.data.shape[:2]
    sn = style_feat.data.shape[0]
    if sn not in (1, n):
        raise DimensionError(f"style batch {sn} not broadcastable to output batch {n}")
    out_stats = instance_stats(out_feat, eps)
    style_stats = instance_stats(style_feat, eps)
    mu_diff = (out_stats.mu - style_stats.mu).reshape((n, c))
    sigma_diff = (out_stats.sigma - style_stats.sigma).reshape((n, c))
    return l2_norm(mu_diff, axis=1).mean() + l2_norm(sigma_diff, axis=1).mean()


def style_loss(output_feats, style_feats, eps=EPS_DEFAULT):
    """Statistics loss summed over taps with equal weights.

    Returns (total, per-layer list); all values are graph nodes.
    """
    if set(output_feats) != set(style_feats):
        raise DimensionError(f"tap sets differ: {sorted(output_feats)} vs {sorted(style_feats)}")
    per_layer = []
    total = None
    for tap in output_feats:
        term = _layer_style_term(output_feats[tap], style_feats[tap], eps)
        per_layer.append(term)
        total = term if total is None else total + term
    return total, per_layer


def total_loss(content, style, style_weight, per_layer_style=()):
    """Combine scalar loss values into a LossReport."""
    if style_weight < 0:
        raise ConfigError(f"style weight must be >= 0, got {style_weight}")
    return LossReport(
        content=float(content),
        style=float(style),
        total=float(content) + style_weight * float(style),
        style_weight=style_weight,
        per_layer_style=[float(v) for v in per_layer_style],
    )


def _gram(feat):
    n, c, h, w = feat.shape
    flat = feat.reshape(n, c, h * w)
    return np.matmul(flat, flat.transpose(0, 2, 1)) / (c * h * w)


def gram_loss(output_feats, style_feats):
    """Mean squared Gram difference per tap, summed over taps (no grad)."""
    if set(output_feats) != set(style_feats):
        raise DimensionError(f"tap sets differ: {sorted(output_feats)} vs {sorted(style_feats)}")
    total = 0.0
    for tap in output_feats:
        g_out = _gram(output_feats[tap].data.astype(np.float64))
        g_style = _gram(style_feats[tap].data.astype(np.float64))
        if g_out.shape[1:] != g_style.shape[1:]:
            raise DimensionError(f"tap {tap}: channel counts differ")
        total += float(((g_out - g_style) ** 2).mean())
    return total


def write_curve_csv(path, curve, tap_names):
    """Curve rows as CSV: iteration, content, style, total, per-layer."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LossReport.csv_header(tap_names))
        for iteration, report in curve:
            writer.writerow(report.csv_row(iteration))
