"""Per-image threshold selection from the coverage plateau.

Coverage (the fraction of pixels inside at least one region) grows with the
seed threshold until it levels off. The seed threshold is picked at the start
of that plateau with the local threshold held fixed; the local threshold is
then picked the same way with the seed threshold fixed.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .grow import GrowConfig, RegionSet, ThresholdPair, segment
from .imgio import as_image, sobel_edges

log = logging.getLogger(__name__)


def _even_grid():
    return tuple(range(2, 81, 2))


@dataclass(frozen=True)
class SweepSpec:
    tau_s_grid: tuple = field(default_factory=_even_grid)
    tau_l_grid: tuple = field(default_factory=_even_grid)
    plateau_eps: float = 0.005
    plateau_window: int = 2
    tau_l_during_s_sweep: float = 10

    def __post_init__(self):
        if len(self.tau_s_grid) == 0 or len(self.tau_l_grid) == 0:
            raise ValueError("threshold grids must not be empty")
        for g in (self.tau_s_grid, self.tau_l_grid):
            if any(b <= a for a, b in zip(g, g[1:])):
                raise ValueError("threshold grids must be strictly ascending")
        if self.plateau_window < 1:
            raise ValueError("plateau_window must be >= 1")
        object.__setattr__(self, "tau_s_grid", tuple(self.tau_s_grid))
        object.__setattr__(self, "tau_l_grid", tuple(self.tau_l_grid))


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    coverage: float
    n_regions: int


@dataclass(frozen=True)
class SweepReport:
    seed_sweep: tuple
    local_sweep: tuple
    chosen: ThresholdPair
    converged_s: bool = True
    converged_l: bool = True

    def to_dict(self) -> dict:
        return {
            "seed_sweep": [asdict(p) for p in self.seed_sweep],
            "local_sweep": [asdict(p) for p in self.local_sweep],
            "chosen": {"tau_l": self.chosen.tau_l, "tau_s": self.chosen.tau_s},
            "converged_s": self.converged_s,
            "converged_l": self.converged_l,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepReport":
        return cls(
            tuple(SweepPoint(**p) for p in d["seed_sweep"]),
            tuple(SweepPoint(**p) for p in d["local_sweep"]),
            ThresholdPair(d["chosen"]["tau_l"], d["chosen"]["tau_s"]),
            d["converged_s"],
            d["converged_l"],
        )


def coverage(rs: RegionSet) -> float:
    """Fraction of pixels covered by at least one region."""
    H, W = rs.shape
    return int(np.count_nonzero(rs.covered)) / (H * W)


def plateau_index(coverages, eps: float, window: int):
    """Locate the first coverage plateau in an ordered sweep.

    Returns ``(stop, first)``: the index where the sweep can stop and the
    index of the plateau's first value, or ``None`` if there is no plateau
    yet. A plateau is ``window`` consecutive steps each rising by less than
    ``eps``. Full coverage ends the sweep at once since it cannot rise
    further; the plateau then starts after the last step of at least ``eps``.
    """
    run = 0
    for j, c in enumerate(coverages):
        if j:
            run = run + 1 if c - coverages[j - 1] < eps else 0
        if run >= window:
            return j, j - window
        if c >= 1.0:
            return j, j - run
    return None


def _sweep(img, base: GrowConfig, edges, pairs, swept, spec: SweepSpec, threads: int):
    """Segment at each ``(tau_l, tau_s)`` of ``pairs`` in order until a plateau.

    Points are evaluated in batches of ``threads``; anything past the stopping
    point is discarded so the result matches a serial run.
    """
    def run(k):
        rs = segment(img, base.with_thresholds(*pairs[k]), edges=edges)
        return SweepPoint(swept[k], coverage(rs), rs.n_regions)

    points: list[SweepPoint] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        batch = max(threads, 1)
        for start in range(0, len(pairs), batch):
            idx = range(start, min(start + batch, len(pairs)))
            points.extend(pool.map(run, idx) if pool else map(run, idx))
            hit = plateau_index([p.coverage for p in points], spec.plateau_eps, spec.plateau_window)
            if hit is not None:
                stop, first = hit
                return points[: stop + 1], points[first].tau, True
    finally:
        if pool:
            pool.shutdown()
    return points, points[-1].tau, False


def adaptive_thresholds(img, cfg: GrowConfig, spec: SweepSpec | None = None, threads: int = 1,
                        edges: np.ndarray | None = None) -> SweepReport:
    """Pick ``(tau_s*, tau_l*)`` for ``img``; ``cfg.thresholds`` is ignored.

    Grid points are independent segmentations and run on up to ``threads``
    worker threads; the plateau rule is applied to the ordered results, so the
    report does not depend on ``threads``.
    """
    spec = spec or SweepSpec()
    img = as_image(img)
    if edges is None and cfg.seed_strategy == "grid":
        edges = sobel_edges(img, cfg.edge_fraction)

    tl0 = spec.tau_l_during_s_sweep
    s_pairs = [(tl0, ts) for ts in spec.tau_s_grid]
    seed_pts, tau_s, conv_s = _sweep(img, cfg, edges, s_pairs, spec.tau_s_grid, spec, threads)
    if not conv_s:
        log.warning("seed-threshold sweep reached %s without a coverage plateau", tau_s)

    l_pairs = [(tl, tau_s) for tl in spec.tau_l_grid]
    local_pts, tau_l, conv_l = _sweep(img, cfg, edges, l_pairs, spec.tau_l_grid, spec, threads)
    if not conv_l:
        log.warning("local-threshold sweep reached %s without a coverage plateau", tau_l)

    return SweepReport(tuple(seed_pts), tuple(local_pts), ThresholdPair(tau_l, tau_s), conv_s, conv_l)
