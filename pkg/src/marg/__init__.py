"""Unsupervised region-growing segmentation with adaptive thresholds, modular
neighbourhoods and overlap-based region merging, plus evaluation helpers and
RegionMix training-sample synthesis."""

from .adapt import SweepReport, SweepSpec, adaptive_thresholds, coverage
from .evaluation import PixelMetrics, SimMetric, ablate, image_sim, oracle_mask, region_sim
from .grow import GrowConfig, Region, RegionSet, ThresholdPair, candidate_grid, color_distance, grow_region, promote_seed, segment
from .imgio import RegionMap, SceneSpec, load_image, load_mask, make_synthetic, sobel_edges
from .merge import MergeConfig, fill_holes, merge_chains, merge_regions, mergeability, resolve_overlaps
from .mixgen import MixConfig, label_regions, synth_mix
from .pipeline import PipelineConfig, run_pipeline
from .topology import NeighborSpec, Topology, neighbors, window_coords

__version__ = "0.1.0"
