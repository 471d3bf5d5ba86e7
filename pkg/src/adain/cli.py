"""Command-line front door.

Subcommands: train, stylize, eval, experiment, bench, weights, serve.
Exit codes: 0 success, 1 runtime error, 2 usage/invariant violation.
Every producing run echoes its resolved configuration next to its
outputs. ADAIN_SEED supplies the default seed.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, FormatError, TrainingDiverged


def _default_seed():
    return int(os.environ.get("ADAIN_SEED", "0"))


def _load_model(model_arg, eps):
    from .model import build_model, model_from_bundle
    from .weights import load_weights

    if model_arg in (None, "tiny"):
        return build_model("tiny", eps=eps)
    return model_from_bundle(load_weights(model_arg))


def _echo_config(path, payload):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2, default=str, sort_keys=True) + "\n")


def _prepare_eval_images(paths, size):
    from .images import load_image, random_crop, resize_smallest_side

    images = []
    for i, p in enumerate(paths):
        img = resize_smallest_side(load_image(p), size)
        images.append(random_crop(img, size, np.random.default_rng(i)))
    return images


# -- subcommand implementations ------------------------------------------------


def cmd_stylize(args):
    from .controls import ControlSpec, stylize
    from .images import load_image, load_mask, save_image
    from .loss import style_loss

    model = _load_model(args.model, args.eps)
    content = load_image(args.content)
    styles = [load_image(p) for p in args.style]
    weights = args.weights if args.weights else [1.0 / len(styles)] * len(styles)
    if len(weights) != len(styles):
        raise ConfigError(f"{len(weights)} weights for {len(styles)} styles; they pair 1:1")
    masks = [load_mask(p) for p in args.mask] if args.mask else None
    spec = ControlSpec(
        styles=list(zip(styles, weights)),
        alpha=args.alpha,
        masks=masks,
        preserve_color=args.preserve_color,
    )
    out = stylize(model, content, spec)
    save_image(out, args.out)
    _echo_config(str(args.out) + ".config.json", {"subcommand": "stylize", **vars(args), "resolved": spec.describe()})
    if args.report:
        from .loss import content_loss, total_loss
        from .normalization import adain
        from .tensor import Tensor

        final_tap = model.loss_taps[-1]
        clipped = Tensor(np.clip(out.data, 0.0, 1.0))
        out_taps = model.encoder.forward(clipped)
        style_taps = model.encoder.forward(styles[0])
        t = adain(model.encoder.forward(content, upto=final_tap)[final_tap], style_taps[final_tap], eps=model.eps)
        c_loss = content_loss(out_taps[final_tap], t)
        s_loss, per_layer = style_loss(out_taps, style_taps, eps=model.eps)
        report = total_loss(c_loss.item(), s_loss.item(), args.report_lambda, [v.item() for v in per_layer])
        print(
            f"content={report.content:.6f} style={report.style:.6f} total={report.total:.6f} "
            f"per_layer={[round(v, 6) for v in report.per_layer_style]}"
        )
    print(f"wrote {args.out}")
    return 0


def cmd_train(args):
    from .loss import write_curve_csv
    from .model import ENCODER_TAPS, model_to_bundle
    from .train import TrainConfig, train_decoder
    from .weights import save_weights

    cfg = TrainConfig(
        content_dir=args.content_dir,
        style_dir=args.style_dir,
        batch_size=args.batch_size,
        resize_target=args.resize,
        crop=args.crop,
        iterations=args.iterations,
        style_weight=args.style_weight,
        seed=args.seed,
        encoder_bundle=args.encoder,
        variant=args.variant,
        eps=args.eps,
        lr=args.lr,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(out_dir / "config.json", {"subcommand": "train", **asdict(cfg)})

    def progress(iteration, report):
        if iteration % max(1, cfg.iterations // 10) == 0:
            print(f"iter {iteration}: content {report.content:.4f} style {report.style:.4f} total {report.total:.4f}")

    model, curve = train_decoder(cfg, on_iteration=progress)
    save_weights(model_to_bundle(model), out_dir / "model.adwb")
    write_curve_csv(out_dir / "curve.csv", curve, ENCODER_TAPS)
    print(f"wrote {out_dir / 'model.adwb'} and curve.csv ({len(curve)} iterations)")
    return 0


def cmd_eval(args):
    from .loss import LossReport
    from .train import evaluate, optimize_image, raw_style_loss

    model = _load_model(args.model, args.eps)
    content_paths = sorted(Path(args.content_dir).glob("*.png")) + sorted(Path(args.content_dir).glob("*.jpg"))
    style_paths = sorted(Path(args.style_dir).glob("*.png")) + sorted(Path(args.style_dir).glob("*.jpg"))
    if args.limit_content:
        content_paths = content_paths[: args.limit_content]
    if args.limit_style:
        style_paths = style_paths[: args.limit_style]
    if not content_paths or not style_paths:
        raise ConfigError("content and style directories must contain images")
    contents = _prepare_eval_images(content_paths, args.size)
    styles = _prepare_eval_images(style_paths, args.size)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(out_dir / "config.json", {"subcommand": "eval", **vars(args)})

    mean_report, rows = evaluate(model, contents, styles)
    raw = raw_style_loss(model, contents, styles)
    with open(out_dir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["content", "style", "content_loss", "style_loss", "total", "raw_content_style_loss"])
        for row, raw_value in zip(rows, raw):
            rep = row["report"]
            writer.writerow([row["content"], row["style"], rep.content, rep.style, rep.total, raw_value])
        writer.writerow(["mean", "", mean_report.content, mean_report.style, mean_report.total, sum(raw) / len(raw)])
    print(
        f"pairs={len(rows)} mean content={mean_report.content:.5f} mean style={mean_report.style:.5f} "
        f"raw-content style={sum(raw) / len(raw):.5f}"
    )

    if args.optimizer_baseline:
        from .loss import write_curve_csv
        from .model import ENCODER_TAPS

        for i, (c_img, s_img) in enumerate(zip(contents, styles)):
            _, curve = optimize_image(model, c_img, s_img, args.optimizer_baseline, style_weight=args.style_weight)
            write_curve_csv(out_dir / f"optimizer_baseline_{i}.csv", curve, ENCODER_TAPS)
        print(f"wrote optimizer baseline curves for {min(len(contents), len(styles))} pairs")
    return 0


def cmd_experiment(args):
    from .experiments import run_baselines_experiment, run_in_vs_bn_experiment

    with open(args.config) as fh:
        config = json.load(fh)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(out_dir / "config.json", {"subcommand": "experiment", "kind": args.kind, **config})
    if args.kind == "in-vs-bn":
        summary = run_in_vs_bn_experiment(config, out_dir)
    else:
        summary = run_baselines_experiment(config, out_dir)
    print(json.dumps(summary["verdicts"], indent=2))
    return 0


def cmd_bench(args):
    from .bench import REFERENCE_TIMINGS, bench_backends, bench_descriptor_reuse, bench_stylize, format_backend_table

    model = _load_model(args.model, args.eps)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = bench_stylize(model, sizes=sizes, count=args.count, seed=args.seed)
    print("size  excl(s)   incl(s)   reference excl(incl), not a target")
    for row in rows:
        ref = row["reference"]
        ref_text = f"{ref[0]:.3f} ({ref[1]:.3f})" if ref else "-"
        print(f"{row['size']:>4}  {row['excluding']:<8.4f}  {row['including']:<8.4f}  {ref_text}")
    print(f"(published reference timings {REFERENCE_TIMINGS} are GPU figures shown for context only)")

    if args.style_once:
        reuse = bench_descriptor_reuse(model, size=args.reuse_size, count=args.count, seed=args.seed)
        print(
            f"descriptor reuse over {reuse['count']} images: cached {reuse['cached_total']:.3f}s "
            f"vs full {reuse['full_total']:.3f}s"
        )
    if args.compare_backends:
        print(format_backend_table(bench_backends()))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _echo_config(out_dir / "config.json", {"subcommand": "bench", **vars(args)})
        with open(out_dir / "bench.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["size", "excluding_s", "including_s"])
            for row in rows:
                writer.writerow([row["size"], row["excluding"], row["including"]])
    return 0


def cmd_weights(args):
    from .weights import inspect_weights, load_weights

    if args.verb == "inspect":
        manifest = inspect_weights(args.path)
        for entry in manifest["tensors"]:
            print(f"{entry['name']}  shape={entry['shape']}  offset={entry['offset']}  nbytes={entry['nbytes']}")
        print(f"preprocess: {json.dumps(manifest['preprocess'])}")
        return 0
    load_weights(args.path)
    print("ok: bundle passes all format checks")
    return 0


def cmd_serve(args):
    from .service import run_server

    run_server(args.weights, port=args.port, eps=args.eps, max_dim=args.max_dim, cache_size=args.cache_size)
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="adain", description="arbitrary style transfer toolbox")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stylize", help="stylize one content image")
    p.add_argument("content")
    p.add_argument("style", nargs="+")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--weights", type=float, nargs="+", default=None)
    p.add_argument("--preserve-color", action="store_true")
    p.add_argument("--mask", action="append", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="tiny")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--report", action="store_true")
    p.add_argument("--report-lambda", type=float, default=10.0)
    p.set_defaults(func=cmd_stylize)

    p = sub.add_parser("train", help="train a decoder")
    p.add_argument("--content-dir", required=True)
    p.add_argument("--style-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--crop", type=int, default=64)
    p.add_argument("--resize", type=int, default=72)
    p.add_argument("--style-weight", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--encoder", default="tiny")
    p.add_argument("--variant", default="AdaIN-Dec")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--lr", type=float, default=1e-4)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="pairwise evaluation over two image sets")
    p.add_argument("--model", required=True)
    p.add_argument("--content-dir", required=True)
    p.add_argument("--style-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--limit-content", type=int, default=None)
    p.add_argument("--limit-style", type=int, default=None)
    p.add_argument("--optimizer-baseline", type=int, default=None)
    p.add_argument("--style-weight", type=float, default=10.0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="normalization / baseline experiment matrices")
    p.add_argument("--kind", choices=("in-vs-bn", "baselines"), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bench", help="timing protocol")
    p.add_argument("--model", default="tiny")
    p.add_argument("--sizes", default="256,512")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--style-once", action="store_true")
    p.add_argument("--reuse-size", type=int, default=128)
    p.add_argument("--compare-backends", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("weights", help="inspect or verify a weights bundle")
    p.add_argument("verb", choices=("inspect", "verify"))
    p.add_argument("path")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=int(os.environ.get("ADAIN_PORT", "8080")))
    p.add_argument("--weights", default=None)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--max-dim", type=int, default=1024)
    p.add_argument("--cache-size", type=int, default=256)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _default_seed()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, TrainingDiverged, DimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
