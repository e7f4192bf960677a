"""Command-line front end: every experiment as a deterministic subcommand.

Subcommands emit their figures' underlying data as CSV/JSON/SVG into --out.
Exit codes: 0 success, 1 numerical failure (training divergence), 2 bad
input. Reruns with identical flags and seed reproduce outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import ambiguity, datagen, mlp
from .encoding import dense_encoding, sparse_encoding
from .geometry import CropRegion, PinholeCamera
from .wireframe import render_instances_svg

SCATTER_COLUMNS = [
    "dx", "dy", "ex", "ey", "ez", "tx", "ty", "tz",
    "err2d_centered_px", "err3d_rel_m", "err3d_abs_m", "crop_dist_px",
]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _load_camera(path: str) -> PinholeCamera:
    try:
        return PinholeCamera.from_json(path)
    except (OSError, ValueError, TypeError) as e:
        raise ValueError(f"cannot load camera file {path!r}: {e}") from e


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_encode(args) -> int:
    cam = _load_camera(args.camera)
    crop = CropRegion(*args.crop)
    out = _outdir(args)
    if args.mode == "sparse":
        enc = sparse_encoding(cam, crop)
        path = out / "sparse.json"
        with open(path, "w") as f:
            json.dump([float(v) for v in enc.flatten()], f)
            f.write("\n")
    else:
        enc = dense_encoding(cam, crop, args.out_height, args.out_width)
        path = out / "dense.csv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["row", "col", "theta_x", "theta_y"])
            for i in range(args.out_height):
                for j in range(args.out_width):
                    w.writerow([i, j, _fmt(enc.grid[i, j, 0]), _fmt(enc.grid[i, j, 1])])
    print(f"wrote {path}")
    return 0


def _write_scatter_csv(path: Path, records) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SCATTER_COLUMNS)
        for r in records:
            w.writerow(
                [_fmt(v) for v in (r.dx, r.dy, *r.extrusion, *r.t)]
                + [_fmt(v) for v in (r.err2d_centered, r.err3d_rel, r.err3d_abs, r.crop_dist)]
            )


def cmd_scatter(args) -> int:
    cam = _load_camera(args.camera)
    if args.random > 0 and args.seed is None:
        return _fail("--random requires --seed", code=2)
    out = _outdir(args)
    reference = ambiguity.reference_instance()
    offsets = ambiguity.offset_grid(args.grid_extent, args.grid_steps)
    records = ambiguity.sweep_scatter(cam, reference, offsets, args.random, args.seed)
    path = out / "scatter.csv"
    _write_scatter_csv(path, records)
    print(f"wrote {path} ({len(records)} records)")
    if args.svg:
        e = args.grid_extent
        picks = [(e, 0.0), (e, e), (-e, e), (-e, -e)]
        instances = [reference] + [ambiguity.construct_ambiguous(reference, o) for o in picks]
        labels = ["reference"] + [f"dx={o[0]:g} dy={o[1]:g}" for o in picks]
        svg_path = out / "wireframes.svg"
        svg_path.write_text(render_instances_svg(cam, instances, labels))
        print(f"wrote {svg_path}")
    return 0


def _write_curve(path: Path, curve: mlp.LossCurve) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "train_mse", "val_mse"])
        for epoch, (tr, va) in enumerate(zip(curve.train, curve.val)):
            w.writerow([epoch, _fmt(tr), _fmt(va)])


def _write_params(path: Path, params: mlp.MlpParams) -> None:
    arrays = []
    for wk, bk in zip(params.weights, params.biases):
        arrays.extend((wk, bk))
    payload = {
        "shapes": [list(a.shape) for a in arrays],
        "values": [float(v) for a in arrays for v in a.ravel()],
    }
    with open(path, "w") as f:
        json.dump(payload, f)
        f.write("\n")


def cmd_train(args) -> int:
    cam = _load_camera(args.camera)
    out = _outdir(args)
    n = args.train_size + args.val_size
    ds = datagen.sample_dataset(cam, datagen.SampleRanges(), n, args.seed)
    train_ds, val_ds = datagen.split(ds, args.train_size / n, args.seed)

    summary = {
        "status": "ok",
        "target": args.target,
        "epochs": args.epochs,
        "hidden_width": args.hidden,
        "batch_size": args.batch,
        "learning_rate": args.lr,
        "seed": args.seed,
        "train_size": len(train_ds),
        "val_size": len(val_ds),
        "variants": {},
    }
    if args.epochs == 0:
        summary["status"] = "no-op: epochs=0, nothing trained"
    code = 0
    for variant in ("centered", "absolute"):
        x_tr, y_tr, _ = datagen.build_io(train_ds, variant, args.target)
        x_va, y_va, _ = datagen.build_io(val_ds, variant, args.target)
        cfg = mlp.TrainConfig(
            variant=variant,
            target=args.target,
            hidden_width=args.hidden,
            learning_rate=args.lr,
            batch_size=args.batch,
            epochs=args.epochs,
            seed=args.seed,
        )
        curve_path = out / f"curve_{variant}.csv"
        try:
            params, curve = mlp.train(cfg, (x_tr, y_tr), (x_va, y_va))
        except mlp.TrainingDivergedError as e:
            _write_curve(curve_path, mlp.LossCurve([], []))
            summary["status"] = f"diverged: {e}"
            summary["variants"][variant] = {"diverged": True, "partial": True}
            code = 1
            print(f"error: {e}", file=sys.stderr)
            continue
        _write_curve(curve_path, curve)
        _write_params(out / f"params_{variant}.json", params)
        summary["variants"][variant] = {
            "final_train_mse": curve.train[-1] if curve.train else None,
            "final_val_mse": curve.val[-1] if curve.val else None,
        }
        print(f"wrote {curve_path}")
    cen = summary["variants"].get("centered", {}).get("final_train_mse")
    ab = summary["variants"].get("absolute", {}).get("final_train_mse")
    if cen is not None and ab is not None and ab > 0:
        summary["train_mse_ratio_centered_over_absolute"] = cen / ab
    _, y_tr, pid_tr = datagen.build_io(train_ds, "centered", args.target)
    summary["collision_floor_train"] = mlp.collision_floor(y_tr, pid_tr)
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {out / 'summary.json'}")
    return code


def cmd_circle_demo(args) -> int:
    out = _outdir(args)
    angles = [float(a) for a in args.angles.split(",") if a.strip() != ""]
    rows = []
    print(f"{'angle_rad':>12}  {'distance':>12}")
    for angle in angles:
        try:
            d = ambiguity.circle_distance_for_crop(args.focal, args.radius, args.crop_width, angle)
            rows.append((angle, d, "ok"))
            print(f"{angle:12.6f}  {d:12.6f}")
        except ValueError:
            rows.append((angle, math.nan, "infeasible"))
            print(f"{angle:12.6f}  {'infeasible':>12}")
    path = out / "circle.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["angle_rad", "distance", "status"])
        for angle, d, status in rows:
            w.writerow([_fmt(angle), _fmt(d), status])
    print(f"wrote {path}")
    return 0


def cmd_render(args) -> int:
    cam = _load_camera(args.camera)
    out = _outdir(args)
    try:
        offsets = [
            tuple(float(x) for x in pair.split(","))
            for pair in args.offsets.split(";")
            if pair.strip() != ""
        ]
        if any(len(o) != 2 for o in offsets):
            raise ValueError("each offset must be dx,dy")
    except ValueError as e:
        return _fail(f"bad --offsets: {e}", code=2)
    reference = ambiguity.reference_instance()
    instances = [reference] + [ambiguity.construct_ambiguous(reference, o) for o in offsets]
    labels = ["reference"] + [f"dx={o[0]:g} dy={o[1]:g}" for o in offsets]
    path = out / "wireframes.svg"
    path.write_text(render_instances_svg(cam, instances, labels))
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fovlab",
        description="Crop-induced 3D shape ambiguity lab: construct it, mine it, "
        "train against it, and encode your way out of it.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="emit a crop's field-of-view positional encoding")
    enc.add_argument("--camera", required=True, help="intrinsics JSON file")
    enc.add_argument("--crop", nargs=4, type=float, required=True, metavar=("U0", "V0", "U1", "V1"))
    enc.add_argument("--mode", choices=("sparse", "dense"), default="sparse")
    enc.add_argument("--out-width", type=int, default=32)
    enc.add_argument("--out-height", type=int, default=24)
    enc.add_argument("--out", default=".")
    enc.set_defaults(func=cmd_encode)

    sca = sub.add_parser("scatter", help="2D/3D error scatter of constructed ambiguous instances")
    sca.add_argument("--camera", required=True)
    sca.add_argument("--out", default=".")
    sca.add_argument("--seed", type=int, default=None)
    sca.add_argument("--grid-extent", type=float, default=0.3)
    sca.add_argument("--grid-steps", type=int, default=21)
    sca.add_argument("--random", type=int, default=0, help="extra random context instances")
    sca.add_argument("--svg", action="store_true", help="also write wireframes.svg")
    sca.set_defaults(func=cmd_scatter)

    tr = sub.add_parser("train", help="train the two-input-variant regressor experiment")
    tr.add_argument("--camera", required=True)
    tr.add_argument("--out", default=".")
    tr.add_argument("--seed", type=int, required=True)
    tr.add_argument("--train-size", type=int, default=50_000)
    tr.add_argument("--val-size", type=int, default=5_000)
    tr.add_argument("--epochs", type=int, default=200)
    tr.add_argument("--hidden", type=int, default=256)
    tr.add_argument("--batch", type=int, default=256)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--target", choices=("root_relative", "absolute"), default="root_relative")
    tr.set_defaults(func=cmd_train)

    cir = sub.add_parser("circle-demo", help="distance solved from silhouette width vs view angle")
    cir.add_argument("--focal", type=float, default=1.0)
    cir.add_argument("--radius", type=float, default=0.485)
    cir.add_argument("--crop-width", type=float, default=0.5)
    cir.add_argument("--angles", default="0.0", help="comma-separated view angles in radians")
    cir.add_argument("--out", default=".")
    cir.set_defaults(func=cmd_circle_demo)

    ren = sub.add_parser("render", help="SVG wireframes of reference and ambiguous counterparts")
    ren.add_argument("--camera", required=True)
    ren.add_argument("--out", default=".")
    ren.add_argument("--offsets", default="0.1,0;0.2,0.15;0.3,0.2", help="dx,dy;dx,dy;...")
    ren.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        return _fail(str(e), code=2)


if __name__ == "__main__":
    sys.exit(main())
