"""Command-line surface: parameter audits, forward dumps, gradient checks,
angle codec tools, the boundary experiment, synthetic data, and evaluation.

Exit codes: 0 success, 1 check failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import angle as eaem
from . import boundary, gradsuite
from .config import Config, load_config
from .errors import ConfigError, GenerationError, ShapeError
from .evalmap import eval_map, eval_map_sweep
from .geometry import rotated_nms, save_annotations
from .msk import STRIP_SIZES, count_params
from .pyramid import NetworkWeights, assemble_forward, decode_boxes
from .scenes import gen_scene
from .tensor import Tensor
from .tensorio import load_pgm, load_tensor, save_pgm, save_tensor

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _dtype(name: str):
    return np.float32 if name == "f32" else np.float64


def _seed(cfg: Config, args) -> int:
    return args.seed if args.seed is not None else cfg.data_seed


def cmd_param_count(cfg: Config, args) -> int:
    c = cfg.network.stem_channels
    report = count_params(c)
    print(f"channels C = {c}")
    print(f"{'m':>3} {'full':>12} {'separable':>12} {'ratio':>8}")
    for m, row in report.per_m.items():
        print(f"{m:>3} {row['full']:>12} {row['separable']:>12} "
              f"{str(row['ratio']):>8}")
    print("ratios " + " ".join(str(report.per_m[m]["ratio"])
                               for m in STRIP_SIZES))
    delta = report.total_separable - report.total_full
    print(f"totals full={report.total_full} separable={report.total_separable} "
          f"delta={delta}")
    return EXIT_OK


def cmd_forward(cfg: Config, args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dtype = _dtype(args.dtype)
    if args.image:
        path = Path(args.image)
        if path.suffix == ".pgm":
            gray = load_pgm(path)
            img = np.repeat(gray[np.newaxis], 3, axis=0)[np.newaxis]
        else:
            img = load_tensor(path).data
            if img.ndim == 3:
                img = img[np.newaxis]
    else:
        size = cfg.canvas
        img = np.zeros((1, 3, size, size))
    image = Tensor(img, dtype=dtype)
    rng = np.random.default_rng(_seed(cfg, args))
    weights = NetworkWeights.create(rng, cfg.network, dtype=dtype)
    feats, head = assemble_forward(image, weights)
    named = {**feats.named(), **head.named()}
    lines = []
    for name, tensor in named.items():
        save_tensor(out_dir / f"{name}.rmkt", tensor)
        lines.append(f"{name} " + "x".join(str(d) for d in tensor.shape))
    (out_dir / "shapes.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(named)} tensors to {out_dir}")
    return EXIT_OK


def cmd_gradcheck(cfg: Config, args) -> int:
    results = gradsuite.full_suite(seed=_seed(cfg, args))
    ok = True
    print(f"{'check':<20} {'max rel err':>14} {'bound':>10} {'status':>8}")
    for r in results:
        status = "pass" if r.passed else "FAIL"
        ok &= r.passed
        print(f"{r.name:<20} {r.max_rel_error:>14.3e} {r.bound:>10.0e} "
              f"{status:>8}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_angle_codec(cfg: Config, args) -> int:
    omega = cfg.network.omega
    if args.encode is not None:
        code = eaem.encode(args.encode, omega)
        print(f"theta={args.encode:.9f} omega={omega} -> "
              f"x={code.x:.12f} y={code.y:.12f}")
        return EXIT_OK
    if args.decode is not None:
        x, y = args.decode
        theta = eaem.decode(eaem.normalize((x, y), omega))
        print(f"x={x} y={y} omega={omega} -> theta={theta:.12f}")
        return EXIT_OK
    if args.input is not None:
        thetas = load_tensor(args.input).data.astype(np.float64).ravel()
        thetas = np.mod(thetas, eaem.period(omega))
        code = eaem.encode(thetas, omega)
        back = eaem.decode(code)
        err = np.abs(back - thetas)
        if args.out:
            save_tensor(Path(args.out), Tensor(code.as_array()))
        print(f"n={thetas.size} max_roundtrip_err={err.max():.3e} "
              f"mean_roundtrip_err={err.mean():.3e}")
        return EXIT_OK
    print("angle-codec: nothing to do (use --encode, --decode, or --input)",
          file=sys.stderr)
    return EXIT_USAGE


def cmd_boundary_exp(cfg: Config, args) -> int:
    omega = cfg.network.omega
    report = boundary.compare_methods(steps=args.steps, lr=args.lr,
                                      seed=_seed(cfg, args), omega=omega)
    print(f"seed={report.seed} omega={report.omega} steps={report.steps} "
          f"lr={report.lr} targets={len(report.targets)}")
    for target in (0.01, np.pi / omega):
        for method in boundary.METHODS:
            trace = boundary.loss_landscape(method, target, omega)
            jumps = boundary.count_jumps(trace)
            print(f"landscape target={target:.4f} method={method} "
                  f"jumps={jumps}")
    for method, result in report.results.items():
        print(f"regression method={method} status={result.status} "
              f"final_angular_error={result.final_error:.6f}")
    if args.csv:
        csv_dir = Path(args.csv)
        csv_dir.mkdir(parents=True, exist_ok=True)
        for method, result in report.results.items():
            lines = ["step,loss"] + [f"{i},{v:.12g}"
                                     for i, v in enumerate(result.loss_trace)]
            (csv_dir / f"{method}_trace.csv").write_text("\n".join(lines) + "\n")
        print(f"wrote traces to {csv_dir}")
    direct = report.results["direct_smoothl1"].final_error
    circ = report.results["eaem_chord"].final_error
    return EXIT_OK if circ < direct else EXIT_CHECK_FAILED


def cmd_eval(cfg: Config, args) -> int:
    rng_seed = _seed(cfg, args)
    truths = []
    preds = []
    dtype = _dtype(args.dtype)
    weights = None
    if args.mode == "model":
        weights = NetworkWeights.create(np.random.default_rng(rng_seed),
                                        cfg.network, dtype=dtype)
    for i in range(cfg.images):
        image, truth = gen_scene(rng_seed + i, cfg.scene, cfg.canvas)
        truths.append(truth)
        if args.mode == "oracle":
            preds.append([b for b in truth])
        elif args.mode == "empty":
            preds.append([])
        else:
            batch = Tensor(image.data[np.newaxis], dtype=dtype)
            _, head = assemble_forward(batch, weights)
            raw = decode_boxes(head, cfg.network, cfg.score_threshold)
            preds.append(rotated_nms(raw, cfg.nms_threshold))
    mean_ap, per_class = eval_map(preds, truths, cfg.iou_threshold)
    for cls, ap in sorted(per_class.items()):
        print(f"class {cls}: AP = {ap:.4f}")
    print(f"mAP@{cfg.iou_threshold} = {mean_ap:.4f}")
    if cfg.coco_sweep:
        print(f"mAP@[0.50:0.95] = {eval_map_sweep(preds, truths):.4f}")
    return EXIT_OK


def cmd_gen_data(cfg: Config, args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = _seed(cfg, args)
    for i in range(cfg.images):
        image, truth = gen_scene(seed + i, cfg.scene, cfg.canvas)
        save_pgm(out_dir / f"scene_{i:03d}.pgm", image.data[0])
        save_tensor(out_dir / f"scene_{i:03d}.rmkt", image)
        save_annotations(out_dir / f"scene_{i:03d}.txt", truth)
    print(f"wrote {cfg.images} scenes to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotdet",
        description="Oriented-detection building blocks: audits, forwards, "
                    "checks, codec tools, synthetic evaluation.")
    parser.add_argument("--config", help="path to a config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (default: the config's data seed)")
    parser.add_argument("--dtype", choices=("f32", "f64"), default="f32")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("param-count", help="separable vs full parameter audit")

    p = sub.add_parser("forward", help="run the network, dump intermediates")
    p.add_argument("--image", help="input image (.pgm or .rmkt); default zeros")
    p.add_argument("--out", required=True, help="dump directory")

    sub.add_parser("gradcheck", help="finite-difference verification suite")

    p = sub.add_parser("angle-codec", help="encode/decode orientations")
    p.add_argument("--encode", type=float, help="angle in radians")
    p.add_argument("--decode", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--input", help="RMKT tensor of angles")
    p.add_argument("--out", help="output RMKT file for encoded codes")

    p = sub.add_parser("boundary-exp", help="periodic-boundary loss experiment")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--csv", help="directory for per-step loss traces")

    p = sub.add_parser("eval", help="synthetic-scene detection evaluation")
    p.add_argument("--mode", choices=("model", "oracle", "empty"),
                   default="model")

    p = sub.add_parser("gen-data", help="write synthetic scenes to disk")
    p.add_argument("--out", required=True)
    return parser


_COMMANDS = {
    "param-count": cmd_param_count,
    "forward": cmd_forward,
    "gradcheck": cmd_gradcheck,
    "angle-codec": cmd_angle_codec,
    "boundary-exp": cmd_boundary_exp,
    "eval": cmd_eval,
    "gen-data": cmd_gen_data,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, ShapeError, GenerationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
