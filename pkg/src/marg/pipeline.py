"""End-to-end segmentation: threshold selection, growth, merging, projection."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .adapt import SweepReport, SweepSpec, adaptive_thresholds
from .grow import GrowConfig, RegionSet, ThresholdPair, segment
from .imgio import RegionMap, as_image, sobel_edges
from .merge import MergeConfig, fill_holes, merge_regions, resolve_overlaps
from .topology import Topology


@dataclass(frozen=True)
class PipelineConfig:
    grow: GrowConfig = field(default_factory=GrowConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    merge: MergeConfig = field(default_factory=MergeConfig)
    adaptive: bool = True
    merging: bool = True


@dataclass
class PipelineResult:
    raw: RegionSet
    regions: RegionSet
    region_map: RegionMap
    filled: RegionMap
    thresholds: ThresholdPair
    sweep: SweepReport | None = None


# seed choice, adaptive thresholds, topology, merging
VARIANTS = {
    "RSRG": ("random", False, Topology.CARTESIAN, False),
    "DTRG+GT": ("grid", False, Topology.CARTESIAN, False),
    "DTRG+AT": ("grid", True, Topology.CARTESIAN, False),
    "DTMRG+AT": ("grid", True, Topology.MODULAR, False),
    "MARG": ("grid", True, Topology.MODULAR, True),
}


def variant_config(base: PipelineConfig, name: str) -> PipelineConfig:
    """``base`` switched to one of the ablation variants in ``VARIANTS``."""
    try:
        strategy, adaptive, topology, merging = VARIANTS[name]
    except KeyError:
        raise ValueError(f"unknown variant {name!r}; expected one of {list(VARIANTS)}") from None
    grow = replace(base.grow, seed_strategy=strategy, topology=topology)
    return replace(base, grow=grow, adaptive=adaptive, merging=merging)


def run_pipeline(img, cfg: PipelineConfig = PipelineConfig(), threads: int = 1) -> PipelineResult:
    img = as_image(img)
    edges = sobel_edges(img, cfg.grow.edge_fraction) if cfg.grow.seed_strategy == "grid" else None
    report = None
    grow_cfg = cfg.grow
    if cfg.adaptive:
        report = adaptive_thresholds(img, grow_cfg, cfg.sweep, threads=threads, edges=edges)
        grow_cfg = replace(grow_cfg, thresholds=report.chosen)
    raw = segment(img, grow_cfg, edges=edges)
    regions = merge_regions(raw, cfg.merge) if cfg.merging else raw
    rm = resolve_overlaps(regions, img)
    return PipelineResult(raw, regions, rm, fill_holes(rm), grow_cfg.thresholds, report)


def color_regions(labels: np.ndarray) -> np.ndarray:
    """Deterministic false-colour rendering of a label map (0 stays black)."""
    n = int(labels.max()) if labels.size else 0
    rng = np.random.default_rng(12345)
    palette = rng.integers(40, 256, size=(n + 1, 3)).astype(np.uint8)
    palette[0] = 0
    return palette[labels]
