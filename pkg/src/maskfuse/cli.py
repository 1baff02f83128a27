"""Command-line interface.

Subcommands: stats, label, fuse, mix, eval, render, pipeline, bench.
Exit codes: 0 = all processed, 2 = some inputs skipped, 1 = fatal
config/IO error. Batch commands keep going past per-image failures so one
corrupt file cannot kill a long offline run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import backend
from .fusion import fuse1, fuse2, fuse3
from .labeling import paint_majority, paint_sgml
from .metrics import confusion, iou, miou
from .mixing import classmix_apply, classmix_select
from .raster import (
    ConfidenceMap,
    RasterError,
    load_confidence,
    load_image_png,
    load_label_png,
    load_masks,
    save_image_png,
    save_label_png,
)
from .registry import ClassRegistry, ConfigError, cityscapes_registry, load_registry
from .render import blend_over, render_label, render_masks
from .stats import accumulate_stats, rare_class_candidates, suggest_class_split

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _load_config(path: str | None) -> ClassRegistry:
    if path is None:
        return cityscapes_registry()
    return load_registry(path)


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _png_stems(directory: Path) -> list[str]:
    return sorted(p.stem for p in directory.glob("*.png"))


def _mask_path_for(masks_dir: Path, stem: str) -> Path | None:
    as_json = masks_dir / f"{stem}.json"
    if as_json.is_file():
        return as_json
    as_dir = masks_dir / stem
    if as_dir.is_dir():
        return as_dir
    return None


# ---------------------------------------------------------------------------
# Single-shot commands
# ---------------------------------------------------------------------------

def cmd_stats(args) -> int:
    registry = _load_config(args.config)
    labels_dir = Path(args.labels_dir)
    stems = _png_stems(labels_dir)
    if not stems:
        print(f"error: no label PNGs in {labels_dir}", file=sys.stderr)
        return EXIT_FATAL
    stats = accumulate_stats(
        (load_label_png(labels_dir / f"{s}.png") for s in stems), registry)

    report = stats.to_dict()
    names = registry.names
    if not args.quiet:
        print(f"{'id':>4} {'name':<16} {'images':>7} {'total px':>12} {'mean area':>12}")
        for cid in stats.present_classes():
            print(f"{cid:>4} {names.get(cid, '?'):<16} {stats.images_present[cid]:>7} "
                  f"{stats.total_pixels[cid]:>12} {stats.mean_area(cid):>12.1f}")
    if args.suggest_small or args.suggest_large:
        small, large = suggest_class_split(stats, args.suggest_small, args.suggest_large)
        report["suggested_small_classes"] = sorted(small)
        report["suggested_large_classes"] = sorted(large)
        _say(args, f"suggested small classes: {sorted(small)}")
        _say(args, f"suggested large classes: {sorted(large)}")
    if args.rare_dir:
        rare_dir = Path(args.rare_dir)
        rare_stems = _png_stems(rare_dir)
        if not rare_stems:
            print(f"error: no label PNGs in {rare_dir}", file=sys.stderr)
            return EXIT_FATAL
        rare = rare_class_candidates(
            [load_label_png(rare_dir / f"{s}.png") for s in rare_stems],
            registry, args.rare_threshold)
        report["rare_class_candidates"] = sorted(rare)
        _say(args, f"rare class candidates (< {args.rare_threshold:.4%} of pixels): {sorted(rare)}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        _say(args, f"wrote {args.out}")
    return EXIT_OK


def cmd_label(args) -> int:
    registry = _load_config(args.config)
    uda = load_label_png(args.uda)
    masks = load_masks(args.masks)
    if args.method == "sgml":
        out = paint_sgml(masks, uda, registry)
    else:
        out = paint_majority(masks, uda, registry)
    save_label_png(out, args.out)
    _say(args, f"wrote {args.out} ({len(masks)} masks, method={args.method})")
    return EXIT_OK


def cmd_fuse(args) -> int:
    registry = _load_config(args.config)
    uda = load_label_png(args.uda)
    sam = load_label_png(args.sam)
    if args.strategy == 3 and not args.conf:
        print("error: --conf is required for strategy 3", file=sys.stderr)
        return EXIT_FATAL
    if args.strategy == 1:
        out = fuse1(sam, uda, registry.void_id)
    elif args.strategy == 2:
        out = fuse2(uda, sam, registry)
    else:
        conf = load_confidence(args.conf)
        out = fuse3(fuse1(sam, uda, registry.void_id), uda, conf, registry)
    save_label_png(out, args.out)
    _say(args, f"wrote {args.out} (strategy {args.strategy})")
    return EXIT_OK


def cmd_mix(args) -> int:
    registry = _load_config(args.config)
    x_s = load_image_png(args.src_img)
    y_s = load_label_png(args.src_lbl)
    x_t = load_image_png(args.tgt_img)
    y_t = load_label_png(args.tgt_lbl)
    m = classmix_select(y_s, args.seed, registry.void_id)
    x_m, y_m = classmix_apply(m, x_s, x_t, y_s, y_t)
    save_image_png(x_m, args.out_img)
    save_label_png(y_m, args.out_lbl)
    _say(args, f"wrote {args.out_img}, {args.out_lbl} "
               f"(classes {sorted(m.selected_classes)} from source)")
    return EXIT_OK


def cmd_eval(args) -> int:
    registry = _load_config(args.config)
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    gt_stems = _png_stems(gt_dir)
    if not gt_stems:
        print(f"error: no ground-truth PNGs in {gt_dir}", file=sys.stderr)
        return EXIT_FATAL
    merged = None
    skipped = []
    for stem in gt_stems:
        pred_path = pred_dir / f"{stem}.png"
        if not pred_path.is_file():
            skipped.append({"stem": stem, "reason": "missing prediction"})
            continue
        cm = confusion(load_label_png(pred_path), load_label_png(gt_dir / f"{stem}.png"), registry)
        merged = cm if merged is None else merged.merge(cm)
    if merged is None:
        print("error: no evaluable image pairs", file=sys.stderr)
        return EXIT_FATAL
    per_class = iou(merged)
    names = registry.names
    report = {
        "images": len(gt_stems) - len(skipped),
        "skipped": skipped,
        "class_ids": list(merged.class_ids),
        "matrix": merged.counts.tolist(),
        "per_class_iou": {str(cid): v for cid, v in per_class.items()},
        "miou": miou(merged),
    }
    if not args.quiet:
        for cid, v in sorted(per_class.items()):
            print(f"{cid:>4} {names.get(cid, '?'):<16} IoU {v:.4f}")
        print(f"mIoU {report['miou']:.4f} over {len(per_class)} classes")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        _say(args, f"wrote {args.out}")
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_render(args) -> int:
    registry = _load_config(args.config)
    if args.label:
        image = render_label(load_label_png(args.label), registry)
    else:
        image = render_masks(load_masks(args.masks))
    if args.alpha_over:
        image = blend_over(load_image_png(args.alpha_over), image, args.alpha)
    save_image_png(image, args.out)
    _say(args, f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _process_one(task: tuple) -> dict:
    """Refine one image; runs inside a worker process."""
    stem, uda_path, mask_path, conf_path, out_path, strategy, registry = task
    try:
        t0 = time.perf_counter()
        uda = load_label_png(uda_path)
        masks = load_masks(mask_path)
        conf = load_confidence(conf_path) if conf_path else None
        t_load = time.perf_counter()
        y_sam = paint_sgml(masks, uda, registry)
        t_sgml = time.perf_counter()
        if strategy == 1:
            refined = fuse1(y_sam, uda, registry.void_id)
        elif strategy == 2:
            refined = fuse2(uda, y_sam, registry)
        else:
            refined = fuse3(fuse1(y_sam, uda, registry.void_id), uda, conf, registry)
        t_fuse = time.perf_counter()
        save_label_png(refined, out_path)
        t_end = time.perf_counter()
        return {
            "stem": stem,
            "ok": True,
            "n_masks": len(masks),
            "load_ms": (t_load - t0) * 1e3,
            "sgml_ms": (t_sgml - t_load) * 1e3,
            "fuse_ms": (t_fuse - t_sgml) * 1e3,
            "total_ms": (t_end - t0) * 1e3,
            "out": str(out_path),
        }
    except (RasterError, ValueError, OSError) as exc:
        return {"stem": stem, "ok": False, "reason": str(exc)}


def cmd_pipeline(args) -> int:
    registry = _load_config(args.config)
    uda_dir = Path(args.uda_dir)
    masks_dir = Path(args.masks_dir)
    conf_dir = Path(args.conf_dir) if args.conf_dir else None
    out_dir = Path(args.out_dir)
    if args.strategy == 3 and conf_dir is None:
        print("error: --conf-dir is required for strategy 3", file=sys.stderr)
        return EXIT_FATAL
    for name, d in (("--uda-dir", uda_dir), ("--masks-dir", masks_dir),
                    ("--conf-dir", conf_dir)):
        if d is not None and not d.is_dir():
            print(f"error: {name} {d} is not a directory", file=sys.stderr)
            return EXIT_FATAL
    stems = _png_stems(uda_dir)
    if not stems:
        print(f"error: no label PNGs in {uda_dir}", file=sys.stderr)
        return EXIT_FATAL
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    skipped = []
    for stem in stems:
        mask_path = _mask_path_for(masks_dir, stem)
        if mask_path is None:
            skipped.append({"stem": stem, "reason": "missing masks"})
            continue
        conf_path = None
        if args.strategy == 3:
            conf_path = conf_dir / f"{stem}.png"
            if not conf_path.is_file():
                skipped.append({"stem": stem, "reason": "missing confidence"})
                continue
        tasks.append((stem, uda_dir / f"{stem}.png", mask_path, conf_path,
                      out_dir / f"{stem}.png", args.strategy, registry))

    t0 = time.perf_counter()
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_process_one, tasks))
    else:
        results = [_process_one(t) for t in tasks]
    elapsed_ms = (time.perf_counter() - t0) * 1e3

    processed = [r for r in results if r["ok"]]
    for r in results:
        if not r["ok"]:
            skipped.append({"stem": r["stem"], "reason": r["reason"]})
            print(f"warning: {r['stem']}: {r['reason']}", file=sys.stderr)

    summary = {
        "strategy": args.strategy,
        "config": args.config or "builtin:cityscapes19",
        "backend": backend.active_backend(),
        "jobs": args.jobs,
        "images": len(stems),
        "processed": processed,
        "skipped": sorted(skipped, key=lambda s: s["stem"]),
        "elapsed_ms": elapsed_ms,
    }
    summary_path = Path(args.summary) if args.summary else out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _say(args, f"{len(processed)}/{len(stems)} images refined in {elapsed_ms:.0f} ms "
               f"-> {out_dir} (summary: {summary_path})")
    return EXIT_PARTIAL if skipped else EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _synthetic_confidence(shape, stem: str) -> ConfidenceMap:
    seed = np.frombuffer(stem.encode(), dtype=np.uint8).sum() + shape[0] * shape[1]
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return ConfidenceMap(data=rng.random(shape, dtype=np.float32))


def _bench_one_backend(samples, registry, repeats: int) -> dict:
    stage_ms = {"sgml": [], "fusion1": [], "fusion2": [], "fusion3": []}
    per_image = []
    for stem, uda, masks, conf in samples:
        # warm the JIT (and caches) outside the timed region
        y_sam = paint_sgml(masks, uda, registry)
        y1 = fuse1(y_sam, uda, registry.void_id)
        fuse2(uda, y_sam, registry)
        fuse3(y1, uda, conf, registry)
        sgml_ms = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            y_sam = paint_sgml(masks, uda, registry)
            sgml_ms.append((time.perf_counter() - t0) * 1e3)

            t0 = time.perf_counter()
            y1 = fuse1(y_sam, uda, registry.void_id)
            stage_ms["fusion1"].append((time.perf_counter() - t0) * 1e3)

            t0 = time.perf_counter()
            fuse2(uda, y_sam, registry)
            stage_ms["fusion2"].append((time.perf_counter() - t0) * 1e3)

            t0 = time.perf_counter()
            fuse3(y1, uda, conf, registry)
            stage_ms["fusion3"].append((time.perf_counter() - t0) * 1e3)
        stage_ms["sgml"].extend(sgml_ms)
        per_image.append({"stem": stem, "n_masks": len(masks),
                          "sgml_ms": float(np.mean(sgml_ms))})

    n_masks = np.array([p["n_masks"] for p in per_image], dtype=np.float64)
    times = np.array([p["sgml_ms"] for p in per_image], dtype=np.float64)
    if len(per_image) >= 2 and n_masks.std() > 0 and times.std() > 0:
        corr = float(np.corrcoef(n_masks, times)[0, 1])
    else:
        corr = None
    return {
        "stages_ms": {k: float(np.mean(v)) for k, v in stage_ms.items()},
        "per_image": per_image,
        "mask_time_correlation": corr,
    }


def cmd_bench(args) -> int:
    registry = _load_config(args.config)
    if args.repeats < 1:
        print("error: --repeats must be >= 1", file=sys.stderr)
        return EXIT_FATAL
    uda_dir = Path(args.uda_dir)
    masks_dir = Path(args.masks_dir)
    conf_dir = Path(args.conf_dir) if args.conf_dir else None
    stems = _png_stems(uda_dir)
    samples = []
    for stem in stems:
        mask_path = _mask_path_for(masks_dir, stem)
        if mask_path is None:
            continue
        uda = load_label_png(uda_dir / f"{stem}.png")
        masks = load_masks(mask_path)
        conf_path = conf_dir / f"{stem}.png" if conf_dir else None
        if conf_path and conf_path.is_file():
            conf = load_confidence(conf_path)
        else:
            conf = _synthetic_confidence(uda.data.shape, stem)
        samples.append((stem, uda, masks, conf))
    if not samples:
        print("error: no benchmark samples (need aligned uda/mask stems)", file=sys.stderr)
        return EXIT_FATAL

    if args.backend == "both":
        names = list(backend.available_backends())
    elif args.backend == "auto":
        names = [backend.active_backend()]
    else:
        names = [args.backend]

    report = {"repeats": args.repeats, "images": len(samples), "backends": {}}
    for name in names:
        if name not in backend.available_backends():
            print(f"warning: backend {name} unavailable, skipping", file=sys.stderr)
            continue
        with backend.use_backend(name):
            report["backends"][name] = _bench_one_backend(samples, registry, args.repeats)

    if not report["backends"]:
        print("error: no usable backend", file=sys.stderr)
        return EXIT_FATAL

    if not args.quiet:
        print(f"{len(samples)} images x {args.repeats} repeats")
        print(f"{'stage':<10}" + "".join(f"{n + ' (ms)':>14}" for n in report["backends"]))
        for stage in ("sgml", "fusion1", "fusion2", "fusion3"):
            row = f"{stage:<10}"
            for name in report["backends"]:
                row += f"{report['backends'][name]['stages_ms'][stage]:>14.3f}"
            print(row)
        for name, res in report["backends"].items():
            corr = res["mask_time_correlation"]
            label = "n/a" if corr is None else f"{corr:+.3f}"
            print(f"mask-count vs sgml-time correlation [{name}]: {label}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        _say(args, f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="JSON",
                        help="class registry config (default: built-in Cityscapes-19)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, metavar="N",
                        help="worker processes for batch commands (default: CPU count)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(
        prog="maskfuse",
        description="Refine segmentation pseudo-labels with unlabeled instance masks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common],
                       help="per-class mean area from ground-truth labels")
    p.add_argument("--labels-dir", required=True)
    p.add_argument("--suggest-small", type=int, default=0, metavar="M")
    p.add_argument("--suggest-large", type=int, default=0, metavar="N")
    p.add_argument("--rare-dir", help="pseudo-label directory for rare-class scan")
    p.add_argument("--rare-threshold", type=float, default=0.005)
    p.add_argument("--out", help="write report JSON here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("label", parents=[common],
                       help="assign classes to instance masks and paint them")
    p.add_argument("--method", choices=("sgml", "vote"), default="sgml")
    p.add_argument("--uda", required=True, help="dense pseudo-label PNG")
    p.add_argument("--masks", required=True, help="masks JSON or directory of PNGs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("fuse", parents=[common],
                       help="fuse mask-derived and dense pseudo-labels")
    p.add_argument("--strategy", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--uda", required=True)
    p.add_argument("--sam", required=True, help="mask-derived label PNG")
    p.add_argument("--conf", help="16-bit confidence PNG (strategy 3)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("mix", parents=[common], help="class-level image/label mixing")
    p.add_argument("--src-img", required=True)
    p.add_argument("--src-lbl", required=True)
    p.add_argument("--tgt-img", required=True)
    p.add_argument("--tgt-lbl", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-img", required=True)
    p.add_argument("--out-lbl", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("eval", parents=[common], help="IoU/mIoU against ground truth")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--out", help="write report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", parents=[common], help="colorize labels or masks")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--label", help="label PNG to colorize")
    src.add_argument("--masks", help="masks JSON or directory to tint")
    p.add_argument("--alpha-over", metavar="IMAGE", help="blend onto this RGB image")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("pipeline", parents=[common],
                       help="batch: masks + pseudo-labels -> refined labels")
    p.add_argument("--uda-dir", required=True)
    p.add_argument("--masks-dir", required=True)
    p.add_argument("--conf-dir")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--strategy", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--summary", help="summary JSON path (default: OUT_DIR/summary.json)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", parents=[common],
                       help="time the labeling and fusion stages")
    p.add_argument("--uda-dir", required=True)
    p.add_argument("--masks-dir", required=True)
    p.add_argument("--conf-dir", help="optional; synthesized when missing")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--backend", choices=("auto", "numpy", "numba", "both"), default="auto")
    p.add_argument("--out", help="write timing JSON here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, RasterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
