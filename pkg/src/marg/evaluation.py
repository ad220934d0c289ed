"""Scoring region proposals against a binary ground-truth mask.

Two views are offered. ``image_sim`` scores every region by its best constant
prediction and averages the scores weighted by region size over the whole
image. ``oracle_mask`` composes an actual predicted mask by giving every
region its majority class and reports global pixel metrics.

Ratios with a zero denominator are 1 when the prediction has neither false
positives nor false negatives, and 0 otherwise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .grow import RegionSet
from .imgio import RegionMap
from .merge import fill_holes, resolve_overlaps
from .pipeline import VARIANTS, PipelineConfig, run_pipeline, variant_config


class SimMetric(str, Enum):
    ACCURACY = "accuracy"
    PRECISION = "precision"
    RECALL = "recall"
    F1 = "f1"
    IOU = "iou"


def _ratio(num, den, fp, fn) -> float:
    if den == 0:
        return 1.0 if fp == 0 and fn == 0 else 0.0
    return num / den


def metric_from_counts(metric, tp, fp, fn, tn) -> float:
    metric = SimMetric(metric)
    if metric is SimMetric.ACCURACY:
        return _ratio(tp + tn, tp + fp + fn + tn, fp, fn)
    if metric is SimMetric.PRECISION:
        return _ratio(tp, tp + fp, fp, fn)
    if metric is SimMetric.RECALL:
        return _ratio(tp, tp + fn, fp, fn)
    if metric is SimMetric.F1:
        return _ratio(2 * tp, 2 * tp + fp + fn, fp, fn)
    return _ratio(tp, tp + fp + fn, fp, fn)


@dataclass(frozen=True)
class PixelMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    miou: float

    @classmethod
    def from_masks(cls, pred: np.ndarray, gt: np.ndarray) -> "PixelMetrics":
        pred = np.asarray(pred, dtype=bool)
        gt = np.asarray(gt, dtype=bool)
        tp = int(np.count_nonzero(pred & gt))
        fp = int(np.count_nonzero(pred & ~gt))
        fn = int(np.count_nonzero(~pred & gt))
        tn = int(pred.size - tp - fp - fn)
        iou_fg = metric_from_counts("iou", tp, fp, fn, tn)
        # background IoU: the roles of positives and negatives swap
        iou_bg = metric_from_counts("iou", tn, fn, fp, tp)
        return cls(
            metric_from_counts("accuracy", tp, fp, fn, tn),
            metric_from_counts("precision", tp, fp, fn, tn),
            metric_from_counts("recall", tp, fp, fn, tn),
            metric_from_counts("f1", tp, fp, fn, tn),
            (iou_fg + iou_bg) / 2,
        )

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimReport:
    per_region: tuple  # (region id, score, chosen class)
    image_score: float
    coverage: float
    n_regions: int
    metric: str = "accuracy"
    sizes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "image_score": self.image_score,
            "coverage": self.coverage,
            "n_regions": self.n_regions,
            "per_region": [
                {"id": i, "score": s, "class": c, "pixels": n}
                for (i, s, c), n in zip(self.per_region, self.sizes)
            ],
        }


def _region_pixels(regions):
    """``(ids, [flat pixel arrays], shape)`` from a RegionSet or RegionMap."""
    if isinstance(regions, RegionSet):
        return [r.id for r in regions.regions], [r.pixels for r in regions.regions], regions.shape
    labels = np.asarray(regions.labels if isinstance(regions, RegionMap) else regions)
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=1)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    ids, pix = [], []
    for i in range(1, counts.size):
        if counts[i]:
            ids.append(i)
            pix.append(order[bounds[i]:bounds[i + 1]])
    return ids, pix, labels.shape


def region_sim(pixels: np.ndarray, gt: np.ndarray, metric=SimMetric.ACCURACY) -> tuple[float, int]:
    """Best score of the all-foreground and all-background predictions of a region.

    ``pixels`` are flat indices (or a boolean mask) of the region. Returns
    ``(score, class)``; equal scores pick class 0.
    """
    gt_flat = np.asarray(gt, dtype=bool).ravel()
    pixels = np.asarray(pixels)
    if pixels.dtype == bool:
        pixels = np.flatnonzero(pixels)
    n = int(pixels.size)
    pos = int(np.count_nonzero(gt_flat[pixels]))
    as_fg = metric_from_counts(metric, pos, n - pos, 0, 0)
    as_bg = metric_from_counts(metric, 0, 0, pos, n - pos)
    if as_fg > as_bg:
        return as_fg, 1
    return as_bg, 0


def image_sim(regions, gt: np.ndarray, metric=SimMetric.ACCURACY) -> SimReport:
    """Size-weighted mean of region scores, normalised by the image area.

    Uncovered pixels contribute nothing, which lowers the score.
    """
    metric = SimMetric(metric)
    ids, pix, shape = _region_pixels(regions)
    gt = np.asarray(gt, dtype=bool)
    if gt.shape != tuple(shape):
        raise ValueError(f"mask shape {gt.shape} does not match regions {shape}")
    per_region = []
    total = 0.0
    sizes = []
    covered = np.zeros(gt.size, dtype=bool)
    for rid, p in zip(ids, pix):
        score, cls = region_sim(p, gt, metric)
        per_region.append((rid, score, cls))
        sizes.append(int(p.size))
        total += p.size * score
        covered[p] = True
    return SimReport(
        tuple(per_region), total / gt.size, int(covered.sum()) / gt.size,
        len(ids), metric.value, tuple(sizes),
    )


def _majority(pixels, gt_flat) -> bool:
    return 2 * int(np.count_nonzero(gt_flat[pixels])) > pixels.size


def oracle_mask(regions, gt: np.ndarray, img=None) -> tuple[np.ndarray, PixelMetrics]:
    """Predicted mask of a perfect region classifier and its pixel metrics.

    Each region takes the majority ground-truth class inside it (ties are
    background). Pixels are then owned through overlap resolution and hole
    filling, and take their owner's class.
    """
    gt = np.asarray(gt, dtype=bool)
    gt_flat = gt.ravel()
    if isinstance(regions, RegionSet):
        if gt.shape != regions.shape:
            raise ValueError(f"mask shape {gt.shape} does not match regions {regions.shape}")
        rm = resolve_overlaps(regions, img)
        by_id = {r.id: r for r in regions.regions}
        classes = {k: _majority(by_id[rid].pixels, gt_flat) for k, rid in enumerate(rm.source_ids, 1)}
        labels = fill_holes(rm).labels
    else:
        labels = np.asarray(regions.labels if isinstance(regions, RegionMap) else regions)
        if gt.shape != labels.shape:
            raise ValueError(f"mask shape {gt.shape} does not match regions {labels.shape}")
        ids, pix, _ = _region_pixels(labels)
        classes = {i: _majority(p, gt_flat) for i, p in zip(ids, pix)}
        labels = fill_holes(RegionMap(labels)).labels if labels.any() else labels
    lut = np.zeros(int(labels.max()) + 1 if labels.size else 1, dtype=bool)
    for k, c in classes.items():
        if k < lut.size:
            lut[k] = c
    pred = lut[labels]
    return pred, PixelMetrics.from_masks(pred, gt)


ABLATION_COLUMNS = ("variant", "accuracy", "precision", "recall", "f1", "miou", "coverage", "n_regions")


def ablate(img, gt: np.ndarray, variants=tuple(VARIANTS), base: PipelineConfig = PipelineConfig(),
           threads: int = 1) -> list[dict]:
    """One row of oracle-mask metrics, coverage and region count per variant."""
    rows = []
    for name in variants:
        res = run_pipeline(img, variant_config(base, name), threads=threads)
        _, pm = oracle_mask(res.regions, gt, img)
        covered = int(np.count_nonzero(res.regions.covered)) / gt.size
        rows.append({"variant": name, **pm.as_dict(), "coverage": covered,
                     "n_regions": res.regions.n_regions})
    return rows


def format_table(rows: list[dict], columns=ABLATION_COLUMNS) -> str:
    """Aligned plain-text table; ratios are printed as percentages."""
    cells = [list(columns)]
    for row in rows:
        line = []
        for c in columns:
            v = row[c]
            if isinstance(v, float):
                line.append(f"{100 * v:.2f}")
            else:
                line.append(str(v))
        cells.append(line)
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)
