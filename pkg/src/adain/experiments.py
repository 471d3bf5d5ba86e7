"""Experiment matrices behind the ``experiment`` subcommand.

Two protocols: the normalization-interpretation matrix (IN vs BN
single-style nets trained on original / contrast-equalized /
style-normalized images) and the fusion/decoder-normalization ablations.
Each arm writes a curve CSV; a summary carries final losses and
majority-vote trend verdicts.
"""

import csv
from pathlib import Path

from .errors import ConfigError
from .images import load_image
from .loss import write_curve_csv
from .model import ENCODER_TAPS, Encoder, tiny_encoder_spec
from .synthetic import make_dataset
from .train import (
    ExperimentConfig,
    TrainConfig,
    train_decoder,
    train_single_style,
)


def _final(curve, key, fraction=0.1):
    window = max(1, int(len(curve) * fraction))
    values = [getattr(report, key) for _, report in curve[-window:]]
    return sum(values) / len(values)


def _materialize_data(config, out_dir):
    """Resolve content/style dirs, generating synthetic folders on demand."""
    if "synthetic" in config:
        syn = config["synthetic"]
        data_dir = Path(out_dir) / "data"
        content_dir = data_dir / "content"
        style_dir = data_dir / "style"
        if not content_dir.exists():
            make_dataset(content_dir, syn.get("content_count", 64), size=syn.get("size", 96), seed=syn.get("seed", 10))
        if not style_dir.exists():
            make_dataset(style_dir, syn.get("style_count", 16), size=syn.get("size", 96), seed=syn.get("seed", 10) + 89, prefix="sty")
        return str(content_dir), str(style_dir)
    try:
        return config["content_dir"], config["style_dir"]
    except KeyError as exc:
        raise ConfigError(f"experiment config needs {exc} or a 'synthetic' block") from exc


def _train_params(config):
    return {
        "batch_size": config.get("batch_size", 4),
        "resize_target": config.get("resize_target", 72),
        "crop": config.get("crop", 64),
        "iterations": config.get("iterations", 500),
        "style_weight": config.get("style_weight", 10.0),
        "eps": config.get("eps", 1e-5),
    }


def run_in_vs_bn_experiment(config, out_dir, encoder=None, style_norm_model=None, progress=print):
    """IN-vs-BN matrix; returns curves, finals and the trend verdicts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    content_dir, style_dir = _materialize_data(config, out_dir)
    params = _train_params(config)
    seeds = config.get("seeds", [0, 1, 2])
    kinds = list(config.get("preprocess_kinds", ["none", "contrast_eq", "style_norm"]))

    # target style and (distinct) normalization style for the style_norm arm
    style_image = config.get("style_image")
    normalization_style_path = config.get("normalization_style")
    if style_image is None:
        style_pool = sorted(Path(style_dir).iterdir())
        style_image = str(style_pool[0])
        if normalization_style_path is None and len(style_pool) > 1:
            normalization_style_path = str(style_pool[-1])
    if "style_norm" in kinds:
        if style_norm_model is None:
            sn_spec = config.get("style_norm_model", "train")
            if sn_spec == "train":
                progress("training the style-normalization transfer model...")
                sn_cfg = TrainConfig(
                    content_dir=content_dir, style_dir=style_dir, seed=config.get("seed", 0),
                    lr=config.get("style_norm_lr", 1e-4), **params,
                )
                style_norm_model, _ = train_decoder(sn_cfg)
            else:
                style_norm_model = sn_spec
        if normalization_style_path is None:
            raise ConfigError("style_norm arm needs a normalization_style distinct from the target style")
    normalization_style = load_image(normalization_style_path) if normalization_style_path else None

    encoder = encoder or Encoder.random(tiny_encoder_spec())
    curves = {}
    finals = {}
    for pre in kinds:
        for norm in ("IN", "BN"):
            for seed in seeds:
                cfg = ExperimentConfig(
                    content_dir=content_dir,
                    style_image=style_image,
                    norm_kind=norm,
                    preprocess=pre,
                    style_norm_model=style_norm_model if pre == "style_norm" else None,
                    seeds=[seed],
                    lr=config.get("lr", 1e-3),
                    **params,
                )
                curve = train_single_style(cfg, seed=seed, encoder=encoder, normalization_style=normalization_style)
                key = (pre, norm, seed)
                curves[key] = curve
                finals[key] = _final(curve, "style")
                write_curve_csv(out_dir / f"in_vs_bn_{pre}_{norm}_seed{seed}.csv", curve, ENCODER_TAPS)
                progress(f"{pre} {norm} seed {seed}: final style loss {finals[key]:.4f}")

    verdicts = {}
    if "none" in kinds:
        wins = sum(finals[("none", "IN", s)] < finals[("none", "BN", s)] for s in seeds)
        verdicts["in_beats_bn_on_original"] = {"wins": wins, "seeds": len(seeds), "pass": wins * 3 >= len(seeds) * 2}
    if "none" in kinds and "style_norm" in kinds:
        shrinks = sum(
            (finals[("style_norm", "BN", s)] - finals[("style_norm", "IN", s)])
            < (finals[("none", "BN", s)] - finals[("none", "IN", s)])
            for s in seeds
        )
        verdicts["gap_shrinks_when_style_normalized"] = {
            "wins": shrinks,
            "seeds": len(seeds),
            "pass": shrinks * 3 >= len(seeds) * 2,
        }

    _write_summary(
        out_dir / "summary.csv",
        [
            {"arm": f"{pre}/{norm}/seed{seed}", "final_style": finals[(pre, norm, seed)]}
            for (pre, norm, seed) in finals
        ],
        verdicts,
    )
    return {"curves": curves, "finals": finals, "verdicts": verdicts}


def run_baselines_experiment(config, out_dir, progress=print):
    """Fusion and decoder-normalization ablations with matched configs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    content_dir, style_dir = _materialize_data(config, out_dir)
    params = _train_params(config)
    seeds = config.get("seeds", [0, 1, 2])
    variants = config.get("variants", ["AdaIN-Dec", "Concat-Dec", "AdaIN-BNDec", "AdaIN-INDec"])

    curves = {}
    finals = {}
    for variant in variants:
        for seed in seeds:
            cfg = TrainConfig(
                content_dir=content_dir,
                style_dir=style_dir,
                seed=seed,
                variant=variant,
                encoder_bundle=config.get("encoder", "tiny"),
                lr=config.get("lr", 1e-4),
                **params,
            )
            _, curve = train_decoder(cfg)
            curves[(variant, seed)] = curve
            finals[(variant, seed)] = {
                "content": _final(curve, "content"),
                "total": _final(curve, "total"),
                "style": _final(curve, "style"),
            }
            write_curve_csv(out_dir / f"baseline_{variant}_seed{seed}.csv", curve, ENCODER_TAPS)
            progress(
                f"{variant} seed {seed}: final content {finals[(variant, seed)]['content']:.4f} "
                f"total {finals[(variant, seed)]['total']:.4f}"
            )

    verdicts = {}
    if "Concat-Dec" in variants and "AdaIN-Dec" in variants:
        wins = sum(finals[("Concat-Dec", s)]["content"] > finals[("AdaIN-Dec", s)]["content"] for s in seeds)
        verdicts["concat_worse_content_than_adain"] = {"wins": wins, "seeds": len(seeds), "pass": wins * 3 >= len(seeds) * 2}
    if "AdaIN-INDec" in variants and "AdaIN-Dec" in variants:
        wins = sum(finals[("AdaIN-INDec", s)]["total"] >= finals[("AdaIN-Dec", s)]["total"] for s in seeds)
        verdicts["indec_total_not_better_than_adain"] = {"wins": wins, "seeds": len(seeds), "pass": wins * 3 >= len(seeds) * 2}

    _write_summary(
        out_dir / "summary.csv",
        [
            {"arm": f"{variant}/seed{seed}", **finals[(variant, seed)]}
            for (variant, seed) in finals
        ],
        verdicts,
    )
    return {"curves": curves, "finals": finals, "verdicts": verdicts}


def _write_summary(path, rows, verdicts):
    fields = sorted({k for row in rows for k in row})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([row.get(f, "") for f in fields])
        writer.writerow([])
        for name, verdict in verdicts.items():
            writer.writerow([name, "pass" if verdict["pass"] else "FAIL", f"{verdict['wins']}/{verdict['seeds']}"])
