"""Command-line interface.

    marg synth --kind wraparound --out scenes/wrap
    marg segment --input scenes/wrap/image.png --out runs/wrap
    marg ablate --input scenes/wrap/image.png --mask scenes/wrap/mask.png --out runs/abl

Every run writes ``config.json`` with the fully resolved configuration;
``marg <cmd> --config that/config.json --out elsewhere`` reproduces it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import imgio
from .adapt import SweepReport, adaptive_thresholds
from .config import RunConfig
from .evaluation import SimMetric, ablate, format_table, image_sim, oracle_mask
from .grow import ThresholdPair
from .merge import MergeConfig, fill_holes, merge_chains, mergeability, resolve_overlaps
from .mixgen import binary_samples, export_dataset, synth_mixes
from .pipeline import VARIANTS, color_regions, run_pipeline

log = logging.getLogger("marg")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument handling

def _tau_pair(text: str) -> ThresholdPair:
    try:
        tl, ts = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected L,S (two numbers)") from None
    tl = int(tl) if tl.is_integer() else tl
    ts = int(ts) if ts.is_integer() else ts
    return ThresholdPair(tl, ts)


def _seed_strategy(text: str):
    if text == "grid":
        return ("grid", None)
    if text.startswith("random:"):
        try:
            n = int(text.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError("expected random:N") from None
        return ("random", n)
    raise argparse.ArgumentTypeError("expected grid or random:N")


def _common(p: argparse.ArgumentParser, *, needs_mask=False):
    p.add_argument("--input", help="input image, or a directory of PNGs for batch mode")
    p.add_argument("--mask", help="ground-truth mask PNG (or directory matching --input)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON run config; explicit flags override it")
    p.add_argument("--seed", type=int, help="PRNG seed")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--topology", choices=("cartesian", "modular"))
    p.add_argument("--fixed-tau", type=_tau_pair, metavar="L,S",
                   help="use fixed local,seed thresholds instead of the adaptive sweep")
    p.add_argument("--no-merge", action="store_true", default=None, help="skip region merging")
    p.add_argument("--seed-strategy", type=_seed_strategy, metavar="{grid,random:N}")
    p.add_argument("--metric", choices=[m.value for m in SimMetric])
    p.add_argument("--overlap-threshold", type=float)
    p.add_argument("--visualize", action="store_true", default=None,
                   help="also write colour-coded / overlay PNGs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marg", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [
        ("segment", "grow, merge and write a region map"),
        ("sweep", "run the adaptive threshold sweep only"),
        ("merge", "merge overlapping regions (in-pipeline or from --regions)"),
        ("eval", "score a segmentation against a ground-truth mask"),
        ("ablate", "compare the region-growing variants on one image"),
        ("regionmix", "export binary and RegionMix training samples"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name in ("merge", "eval"):
            p.add_argument("--regions", help="existing region map PNG (with its JSON manifest)")
        if name == "ablate":
            p.add_argument("--variants", help="comma-separated subset of " + ",".join(VARIANTS))
        if name == "regionmix":
            p.add_argument("--mode", choices=("regionmix", "binary", "both"))
            p.add_argument("--samples", type=int, help="RegionMix samples per image")
            p.add_argument("--max-members", type=int)

    p = sub.add_parser("synth", help="generate a synthetic scene and its mask")
    p.add_argument("--kind", choices=imgio.SCENE_KINDS, default="wraparound")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--column", type=int, default=32)
    p.add_argument("--band", default="24,40", help="wraparound band columns start,stop")
    p.add_argument("--stripe-width", type=int, default=8)
    p.add_argument("--stripe-offset", type=int, default=-4)
    p.add_argument("--gradient", action="store_true", help="ramped background (stripe scenes)")
    p.add_argument("--noise", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig(threads=os.cpu_count() or 1)
    grow = cfg.grow
    changes = {}
    for key in ("input", "mask", "out", "regions"):
        v = getattr(args, key, None)
        if v is not None:
            changes[key] = v
    if args.seed is not None:
        grow = replace(grow, prng_seed=args.seed)
        changes["mix"] = replace(cfg.mix, prng_seed=args.seed)
    if args.threads is not None:
        changes["threads"] = max(1, args.threads)
    if args.topology is not None:
        grow = replace(grow, topology=args.topology)
    if args.fixed_tau is not None:
        grow = replace(grow, thresholds=args.fixed_tau)
        changes["adaptive"] = False
    if args.no_merge:
        changes["merging"] = False
    if args.seed_strategy is not None:
        strategy, n = args.seed_strategy
        grow = replace(grow, seed_strategy=strategy, **({"n_random_seeds": n} if n else {}))
    if args.metric is not None:
        changes["metric"] = args.metric
    if args.overlap_threshold is not None:
        changes["merge"] = MergeConfig(args.overlap_threshold)
    if args.visualize:
        changes["visualize"] = True
    if getattr(args, "variants", None):
        changes["variants"] = tuple(v.strip() for v in args.variants.split(","))
    if getattr(args, "mode", None):
        changes["mix_mode"] = args.mode
    mix = changes.get("mix", cfg.mix)
    if getattr(args, "samples", None) is not None:
        mix = replace(mix, samples_per_image=args.samples)
    if getattr(args, "max_members", None) is not None:
        mix = replace(mix, max_members=args.max_members)
    changes["mix"] = mix
    return cfg.updated(grow=grow, **changes)


# ---------------------------------------------------------------------------
# helpers

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sweep_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phase", "tau", "coverage", "n_regions"])
    for phase, pts in (("seed", report.seed_sweep), ("local", report.local_sweep)):
        for p in pts:
            w.writerow([phase, p.tau, repr(p.coverage), p.n_regions])
    return buf.getvalue()


def _images(cfg: RunConfig):
    """``[(name, image_path, mask_path)]`` for single-file or batch input."""
    if not cfg.input:
        raise UsageError("--input is required")
    src = Path(cfg.input)
    if src.is_dir():
        files = sorted(p for p in src.iterdir() if p.suffix.lower() == ".png")
        if not files:
            raise UsageError(f"no PNG files in {src}")
        masks = Path(cfg.mask) if cfg.mask else None
        if masks is not None and not masks.is_dir():
            raise UsageError("batch mode needs --mask to be a directory")
        return [(f.stem, f, (masks / f.name) if masks else None) for f in files]
    if not src.exists():
        raise FileNotFoundError(src)
    return [(src.stem, src, Path(cfg.mask) if cfg.mask else None)]


def _batch(cfg: RunConfig, fn):
    """Run ``fn(name, image_path, mask_path, out_dir, threads)`` per image."""
    items = _images(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    if len(items) == 1:
        name, img, mask = items[0]
        return {name: fn(name, img, mask, out, cfg.threads)}
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = {}
        for name, img, mask in items:
            d = out / name
            d.mkdir(exist_ok=True)
            futures[name] = pool.submit(fn, name, img, mask, d, 1)
        return {name: f.result() for name, f in futures.items()}


def _aggregate(results: dict, keys) -> dict:
    summary = {}
    for k in keys:
        vals = np.array([r[k] for r in results.values()], dtype=float)
        summary[k] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return summary


def _require_mask(mask_path):
    if mask_path is None:
        raise UsageError("--mask is required for this command")
    if not Path(mask_path).exists():
        raise FileNotFoundError(mask_path)
    return imgio.load_mask(mask_path)


def _overlay(img: np.ndarray, pred: np.ndarray) -> np.ndarray:
    boundary = pred & ~ndimage.binary_erosion(pred, border_value=1)
    out = img.copy()
    out[boundary] = (255, 0, 0)
    return out


# ---------------------------------------------------------------------------
# commands

def cmd_segment(cfg: RunConfig) -> int:
    def one(name, img_path, mask_path, out, threads):
        img = imgio.load_image(img_path)
        res = run_pipeline(img, cfg.pipeline(), threads=threads)
        extra = {
            "coverage": int(res.raw.covered.sum()) / res.raw.covered.size,
            "n_regions_grown": res.raw.n_regions,
            "adaptive": cfg.adaptive,
            "merged": cfg.merging,
        }
        if cfg.merging:
            extra["components"] = res.regions.extra.get("components", [])
        imgio.save_region_map(res.filled, out / "regions.png", extra=extra)
        if res.sweep is not None:
            _write_json(out / "sweep.json", res.sweep.to_dict())
            (out / "sweep.csv").write_text(_sweep_csv(res.sweep))
        if cfg.visualize:
            imgio.save_image(color_regions(res.filled.labels), out / "regions_color.png")
        return {"n_regions": res.filled.n_regions, "coverage": extra["coverage"]}

    results = _batch(cfg, one)
    for name, r in results.items():
        print(f"{name}: N={r['n_regions']} coverage={r['coverage']:.4f}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    def one(name, img_path, mask_path, out, threads):
        img = imgio.load_image(img_path)
        report = adaptive_thresholds(img, cfg.grow, cfg.sweep, threads=threads)
        _write_json(out / "sweep.json", report.to_dict())
        (out / "sweep.csv").write_text(_sweep_csv(report))
        return report

    for name, rep in _batch(cfg, one).items():
        print(f"{name}: tau_s*={rep.chosen.tau_s} tau_l*={rep.chosen.tau_l} "
              f"points={len(rep.seed_sweep)}+{len(rep.local_sweep)}"
              + ("" if rep.converged_s and rep.converged_l else " (no plateau)"))
    return 0


def cmd_merge(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    if cfg.regions:
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.json")
        rm = imgio.load_region_map(cfg.regions)
        # a single-assignment map has no overlaps, so every region is its own chain
        comps = [[i] for i in range(1, rm.n_regions + 1)]
        imgio.save_region_map(rm, out / "merged.png", extra={"components": comps})
        print(f"N={rm.n_regions} (from region map; nothing overlaps)")
        return 0

    def one(name, img_path, mask_path, out, threads):
        img = imgio.load_image(img_path)
        res = run_pipeline(img, replace(cfg.pipeline(), merging=False), threads=threads)
        merged = merge_chains(res.raw, mergeability(res.raw, cfg.merge))
        rm = fill_holes(resolve_overlaps(merged, img))
        imgio.save_region_map(rm, out / "merged.png", extra={
            "components": merged.extra["components"],
            "n_regions_before": res.raw.n_regions,
        })
        return (res.raw.n_regions, merged.n_regions)

    for name, (before, after) in _batch(cfg, one).items():
        print(f"{name}: N {before} -> {after}")
    return 0


_EVAL_KEYS = ("accuracy", "precision", "recall", "f1", "miou", "coverage", "n_regions", "weighted_sim")


def cmd_eval(cfg: RunConfig) -> int:
    if not cfg.mask:
        raise UsageError("eval needs --mask")

    def one(name, img_path, mask_path, out, threads):
        gt = _require_mask(mask_path)
        img = imgio.load_image(img_path)
        if cfg.regions:
            regions = imgio.load_region_map(cfg.regions)
            if regions.labels.shape != gt.shape:
                raise UsageError("region map and mask sizes differ")
        else:
            regions = run_pipeline(img, cfg.pipeline(), threads=threads).regions
        pred, pm = oracle_mask(regions, gt, img)
        sims = {m.value: image_sim(regions, gt, m) for m in SimMetric}
        chosen = sims[cfg.metric]
        result = {**pm.as_dict(), "coverage": chosen.coverage, "n_regions": chosen.n_regions,
                  "weighted_sim": chosen.image_score}
        _write_json(out / "eval.json", {
            "oracle_mask": pm.as_dict(),
            "weighted_sim": {k: v.image_score for k, v in sims.items()},
            "per_region": chosen.to_dict(),
            "coverage": chosen.coverage,
            "n_regions": chosen.n_regions,
        })
        imgio.save_mask(pred, out / "predicted_mask.png")
        if cfg.visualize:
            imgio.save_image(_overlay(img, pred), out / "overlay.png")
        return result

    results = _batch(cfg, one)
    rows = [{"image": n, **r} for n, r in results.items()]
    print(format_table(rows, ("image",) + _EVAL_KEYS))
    if len(results) > 1:
        summary = _aggregate(results, _EVAL_KEYS)
        _write_json(Path(cfg.out) / "eval_summary.json", summary)
        for k, v in summary.items():
            print(f"{k}: {v['mean']:.4f} ± {v['std']:.4f}")
    return 0


def cmd_ablate(cfg: RunConfig) -> int:
    if not cfg.mask:
        raise UsageError("ablate needs --mask")
    unknown = [v for v in cfg.variants if v not in VARIANTS]
    if unknown:
        raise UsageError(f"unknown variants {unknown}")

    def one(name, img_path, mask_path, out, threads):
        gt = _require_mask(mask_path)
        img = imgio.load_image(img_path)
        rows = ablate(img, gt, cfg.variants, cfg.pipeline(), threads=threads)
        _write_json(out / "ablation.json", rows)
        (out / "ablation.txt").write_text(format_table(rows) + "\n")
        return rows

    results = _batch(cfg, one)
    for name, rows in results.items():
        print(f"# {name}")
        print(format_table(rows))
    if len(results) > 1:
        summary = {}
        for v in cfg.variants:
            per = {n: next(r for r in rows if r["variant"] == v) for n, rows in results.items()}
            summary[v] = _aggregate(per, ("accuracy", "precision", "recall", "f1", "miou", "coverage", "n_regions"))
        _write_json(Path(cfg.out) / "ablation_summary.json", summary)
    return 0


def cmd_regionmix(cfg: RunConfig) -> int:
    if not cfg.mask:
        raise UsageError("regionmix needs --mask")

    def one(name, img_path, mask_path, out, threads):
        gt = _require_mask(mask_path)
        img = imgio.load_image(img_path)
        rs = run_pipeline(img, cfg.pipeline(), threads=threads).regions
        samples = []
        if cfg.mix_mode in ("binary", "both"):
            samples += binary_samples(rs, gt, cfg.mix, str(img_path))
        if cfg.mix_mode in ("regionmix", "both") and rs.n_regions:
            samples += synth_mixes(rs, gt, cfg.mix, str(img_path))
        return export_dataset(samples, out / "dataset")

    for name, manifest in _batch(cfg, one).items():
        print(f"{name}: {manifest['n_samples']} samples {manifest['modes']}")
    return 0


def cmd_synth(args) -> int:
    band = tuple(int(x) for x in args.band.split(","))
    grad = ((30, 80, 30), (110, 170, 90)) if args.gradient else None
    spec = imgio.SceneSpec(kind=args.kind, height=args.height, width=args.width, column=args.column,
                           band=band, stripe_width=args.stripe_width, stripe_offset=args.stripe_offset,
                           bg_gradient=grad, noise=args.noise)
    img, mask = imgio.make_synthetic(spec, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    imgio.save_image(img, out / "image.png")
    imgio.save_mask(mask, out / "mask.png")
    print(f"wrote {out / 'image.png'} and {out / 'mask.png'}")
    return 0


COMMANDS = {
    "segment": cmd_segment,
    "sweep": cmd_sweep,
    "merge": cmd_merge,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "regionmix": cmd_regionmix,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return cmd_synth(args)
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as e:
        parser.error(str(e))
    except (OSError, ValueError) as e:
        print(f"marg: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
