"""Command-line interface.

Every subcommand prints its resolved configuration (including the seed) so a
result can be reproduced from its log. Exit status is 0 on success, 2 on a
usage/configuration error, 1 on a runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import camera, codecs, evaluate, network, reconstruct, training
from .camera import AugmentConfig
from .losses import LossConfig

HDR_SUFFIXES = (".hdr", ".pfm")


def _print_config(name: str, args: argparse.Namespace) -> None:
    print(f"[{name}]")
    for key, value in sorted(vars(args).items()):
        if key != "func":
            print(f"{key} = {value}")


def _load_scenes(path: Path) -> list:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in HDR_SUFFIXES)
    return [codecs.read_hdr(p) for p in files], files


def _load_pairs(path: Path) -> list[camera.TrainingPair]:
    pairs = []
    for png in sorted(path.glob("*_in.png")):
        stem = png.name[:-len("_in.png")]
        gt = path / f"{stem}_gt.pfm"
        meta = path / f"{stem}.meta"
        if not gt.exists():
            raise FileNotFoundError(f"missing ground truth for {png.name}")
        params = (camera.params_from_meta(meta.read_text()) if meta.exists()
                  else camera.CameraParams(0.9, 0.6, 0.1, 0.0, 0.0, 0.0, False))
        pairs.append(camera.TrainingPair(input=codecs.read_ldr(png),
                                         target=codecs.read_hdr(gt), params=params))
    return pairs


def _loss_config(args: argparse.Namespace) -> LossConfig:
    return LossConfig(mode=args.loss, lam=args.lam, tau=args.tau)


def cmd_augment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenes, files = _load_scenes(Path(args.scenes))
    if not scenes:
        print("error: no HDR scenes found", file=sys.stderr)
        return 1
    config = AugmentConfig(seed=args.seed, target_size=args.target_size,
                           per_megapixel=args.per_megapixel)
    count = 0
    for scene_idx, crop_idx, pair in camera.generate_pairs(scenes, config):
        stem = f"{files[scene_idx].stem}_{scene_idx:04d}_{crop_idx:04d}"
        codecs.write_ldr(pair.input, out / f"{stem}_in.png")
        codecs.write_hdr(pair.target, out / f"{stem}_gt.pfm")
        (out / f"{stem}.meta").write_text(camera.params_to_meta(pair.params))
        count += 1
    print(f"wrote {count} pairs to {out}")
    return 0


def cmd_simulate_hdr(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pngs = sorted(Path(args.input).glob("*.png"))
    if not pngs:
        print("error: no PNG inputs found", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    kept = 0
    for png in pngs:
        ldr = codecs.read_ldr(png)
        if not camera.filter_unsaturated(ldr, args.xi):
            continue
        n = args.curve_n if args.curve_n else rng.normal(0.9, 0.1)
        sigma = args.curve_sigma if args.curve_sigma else rng.normal(0.6, 0.1)
        hdr = camera.simulate_hdr(ldr, args.scale, max(n, 0.05), max(sigma, 0.05))
        codecs.write_hdr(hdr, out / f"{png.stem}.pfm")
        kept += 1
    print(f"kept {kept} of {len(pngs)} images (xi = {args.xi})")
    return 0


def cmd_train(args) -> int:
    pairs = _load_pairs(Path(args.data))
    if not pairs:
        print("error: no training pairs found", file=sys.stderr)
        return 1
    if args.config:
        cfg = network.config_from_text(Path(args.config).read_text())
    else:
        cfg = network.preset_config(args.preset)
    net = network.Network(cfg, init_seed=args.seed)
    result = training.train(net, pairs, _loss_config(args), steps=args.steps,
                            batch_size=args.batch, lr=args.lr, seed=args.seed,
                            log_every=args.log_every)
    network.save_weights(net, args.weights_out)
    if args.trace_out:
        Path(args.trace_out).write_text(
            "".join(f"{i}\t{v!r}\n" for i, v in enumerate(result.losses)))
    print(f"trained {len(result.losses)} steps; final loss {result.losses[-1]:.6f}")
    return 0


def cmd_predict(args) -> int:
    net = network.load_weights(args.weights)
    ldr = codecs.read_ldr(args.input)
    hdr = reconstruct.predict(net, ldr, reconstruct.ReconstructionConfig(
        tau=args.tau, gamma=args.gamma))
    codecs.write_hdr(hdr, args.output, format=args.format)
    print(f"wrote {args.output}")
    return 0


def cmd_eval(args) -> int:
    pairs = _load_pairs(Path(args.data))
    if not pairs:
        print("error: no test pairs found", file=sys.stderr)
        return 1
    models = {}
    for spec in args.weights or []:
        name, _, path = spec.partition("=")
        if not path:
            name, path = Path(spec).stem, spec
        models[name] = network.load_weights(path)
    report = evaluate.mse_table(models, pairs, _loss_config(args))
    print(report.to_text(), end="")
    if args.out:
        Path(args.out).write_text(report.to_tsv())
    return 0


def cmd_sweep(args) -> int:
    net = network.load_weights(args.weights)
    scene = codecs.read_hdr(args.scene)
    fractions = [float(f) for f in args.fractions.split(",")]
    report = evaluate.exposure_sweep(net, scene, fractions, _loss_config(args),
                                     gamma=args.gamma)
    print(report.to_text(), end="")
    if args.out:
        Path(args.out).write_text(report.to_tsv())
    return 0


def cmd_stats(args) -> int:
    path = Path(args.dir)
    images = []
    skipped = 0
    patterns = ["*.png"] if args.kind == "ldr" else ["*.hdr", "*.pfm"]
    for pattern in patterns:
        for f in sorted(path.glob(pattern)):
            try:
                if args.kind == "ldr":
                    images.append(codecs.read_ldr(f).data)
                else:
                    images.append(codecs.read_hdr(f).data)
            except (codecs.CodecError, OSError) as exc:
                print(f"warning: skipping {f.name}: {exc}", file=sys.stderr)
                skipped += 1
    if not images:
        print("error: no readable images", file=sys.stderr)
        return 1
    report = evaluate.dataset_stats(images, args.kind, skipped=skipped)
    print(report.to_text(), end="")
    if args.out:
        Path(args.out).write_text(report.to_tsv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdrrecon",
                                     description="Single-exposure HDR reconstruction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_loss_flags(p):
        p.add_argument("--loss", choices=["direct", "ir"], default="ir")
        p.add_argument("--lambda", dest="lam", type=float, default=0.5)
        p.add_argument("--tau", type=float, default=0.95)

    p = sub.add_parser("augment", help="generate (LDR, HDR) training pairs")
    p.add_argument("--scenes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-size", type=int, default=320)
    p.add_argument("--per-megapixel", type=float, default=10.0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("simulate-hdr", help="turn unsaturated LDR images into simulated HDR")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=4.0)
    p.add_argument("--xi", type=float, default=camera.DEFAULT_XI)
    p.add_argument("--curve-n", type=float, default=None)
    p.add_argument("--curve-sigma", type=float, default=None)
    p.set_defaults(func=cmd_simulate_hdr)

    p = sub.add_parser("train", help="train a network on a pair directory")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None, help="network config file (key = value)")
    p.add_argument("--preset", default="toy", choices=sorted(network.PRESETS))
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights-out", default="weights.bin")
    p.add_argument("--trace-out", default=None)
    p.add_argument("--log-every", type=int, default=0)
    add_loss_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="reconstruct an HDR image from a PNG")
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", default=None, choices=["rgbe", "pfm"])
    p.add_argument("--tau", type=float, default=0.95)
    p.add_argument("--gamma", type=float, default=2.0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="MSE table over a test pair directory")
    p.add_argument("--data", required=True)
    p.add_argument("--weights", action="append", default=None,
                   help="name=path of a weight file; repeatable")
    p.add_argument("--out", default=None, help="TSV output path")
    p.add_argument("--seed", type=int, default=0)
    add_loss_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="errors for a sweep of clipped fractions")
    p.add_argument("--weights", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--fractions", default="0.04,0.06,0.08,0.10")
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    add_loss_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="dataset histogram statistics")
    p.add_argument("--dir", required=True)
    p.add_argument("--kind", choices=["ldr", "hdr"], required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    _print_config(args.command, args)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
