"""Dual-threshold seeded region growing.

A candidate pixel joins a region when it is within ``tau_l`` of the admitted
pixel it is reached from and within ``tau_s`` of the region's seed colour,
both measured as the mean absolute per-channel difference. Seeds come either
from a promoted candidate grid or, for the random-seed baseline, from uniform
draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .imgio import as_image, sobel_edges
from .topology import Topology, window_slices

# row-major 8-neighbourhood; index i is what rng.integers(8) == i selects
DIRECTIONS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class ThresholdPair:
    tau_l: float
    tau_s: float

    def __post_init__(self):
        if self.tau_l < 0 or self.tau_s < 0:
            raise ValueError("thresholds must be non-negative")


@dataclass(frozen=True)
class GrowConfig:
    """Everything ``segment`` needs besides the image.

    ``seed_strategy`` is ``"grid"`` (promoted candidate grid) or ``"random"``
    (``n_random_seeds`` uniform seeds, no promotion).
    """

    thresholds: ThresholdPair = ThresholdPair(10, 10)
    topology: Topology = Topology.MODULAR
    seed_grid: int = 32
    seed_window_k: int = 2
    edge_fraction: float = 0.25
    max_displacement_steps: int = 20
    prng_seed: int = 0
    seed_strategy: str = "grid"
    n_random_seeds: int = 16

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        if self.seed_grid < 1:
            raise ValueError("seed_grid must be >= 1")
        if not 2 <= self.seed_window_k <= 6:
            raise ValueError("seed_window_k must lie in [2, 6]")
        if self.seed_strategy not in ("grid", "random"):
            raise ValueError(f"unknown seed strategy {self.seed_strategy!r}")
        if self.seed_strategy == "random" and self.n_random_seeds < 1:
            raise ValueError("random seeding needs n_random_seeds >= 1")

    def with_thresholds(self, tau_l, tau_s) -> "GrowConfig":
        return replace(self, thresholds=ThresholdPair(tau_l, tau_s))


@dataclass
class Region:
    """A grown region; ``pixels`` holds sorted flat indices into the image."""

    id: int
    seed: tuple[int, int]
    seed_color: tuple[int, int, int]
    pixels: np.ndarray

    @property
    def size(self) -> int:
        return int(self.pixels.size)

    def mask(self, shape) -> np.ndarray:
        m = np.zeros(shape[0] * shape[1], dtype=bool)
        m[self.pixels] = True
        return m.reshape(shape[0], shape[1])


@dataclass
class RegionSet:
    regions: list[Region]
    covered: np.ndarray
    config: GrowConfig | None = None
    image: np.ndarray | None = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.covered.shape

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def by_id(self, region_id: int) -> Region:
        for r in self.regions:
            if r.id == region_id:
                return r
        raise KeyError(region_id)


def color_distance(a, b) -> float:
    """Mean absolute per-channel difference of two RGB triples."""
    return color_distance3(a, b) / 3


def color_distance3(a, b) -> int:
    """Three times ``color_distance``, as an exact integer."""
    return sum(abs(int(x) - int(y)) for x, y in zip(a, b))


def candidate_grid(H: int, W: int, n_per_axis: int) -> list[tuple[int, int]]:
    """Equidistant candidate seeds, ``n_per_axis`` per axis, row-major.

    Cell centres ``(i + 0.5) * H / n`` are floored, which keeps them distinct
    whenever ``n`` does not exceed the axis length.
    """
    if n_per_axis < 1:
        raise ValueError("n_per_axis must be >= 1")
    rows = [min(((2 * i + 1) * H) // (2 * n_per_axis), H - 1) for i in range(n_per_axis)]
    cols = [min(((2 * j + 1) * W) // (2 * n_per_axis), W - 1) for j in range(n_per_axis)]
    return [(r, c) for r in rows for c in cols]


def _window_hits(c, covered, cfg: GrowConfig) -> bool:
    H, W = covered.shape
    return bool(covered[window_slices(c, cfg.seed_window_k, cfg.topology, H, W)].any())


def promote_seed(c, covered, edges, cfg: GrowConfig, rng: np.random.Generator):
    """Apply the seed promotion rules to candidate ``c``.

    Returns the (possibly displaced) seed coordinate or ``None`` when the
    candidate is rejected. While the candidate sits on an edge it takes a step
    in ``DIRECTIONS[rng.integers(8)]``; leaving a Cartesian image or exceeding
    ``max_displacement_steps`` rejects it. A displaced candidate is checked for
    window overlap again at its new position.
    """
    if _window_hits(c, covered, cfg):
        return None
    H, W = covered.shape
    h, w = c
    steps = 0
    while edges[h, w]:
        if steps == cfg.max_displacement_steps:
            return None
        dh, dw = DIRECTIONS[int(rng.integers(8))]
        h, w = h + dh, w + dw
        steps += 1
        if cfg.topology is Topology.MODULAR:
            h, w = h % H, w % W
        elif not (0 <= h < H and 0 <= w < W):
            return None
    if steps and _window_hits((h, w), covered, cfg):
        return None
    return (h, w)


class _Grower:
    """Scratch buffers for growing many regions over one image."""

    def __init__(self, img: np.ndarray, topology: Topology):
        self.img = np.ascontiguousarray(img, dtype=np.int32)
        H, W = img.shape[:2]
        self.stamp = np.zeros(H * W, dtype=np.int64)
        self.queue = np.empty(H * W, dtype=np.int64)
        self.mark = 0
        self.modular = Topology(topology) is Topology.MODULAR

    def grow(self, seed, tp: ThresholdPair) -> np.ndarray:
        self.mark += 1
        n = _kernels.grow_bfs(
            self.img, seed[0], seed[1], 3.0 * tp.tau_l, 3.0 * tp.tau_s,
            self.modular, self.stamp, self.mark, self.queue,
        )
        return np.sort(self.queue[:n])


def grow_region(img, seed, tp: ThresholdPair, topology=Topology.MODULAR, region_id: int = 1) -> Region:
    """Grow a single region from ``seed`` over 8-connected neighbours.

    Other regions never block growth, so regions from different seeds may
    overlap.
    """
    img = as_image(img)
    H, W = img.shape[:2]
    if not (0 <= seed[0] < H and 0 <= seed[1] < W):
        raise ValueError(f"seed {seed} outside a {H}x{W} image")
    pixels = _Grower(img, topology).grow(seed, tp)
    return Region(region_id, tuple(seed), tuple(int(v) for v in img[seed[0], seed[1]]), pixels)


def segment(img, cfg: GrowConfig, edges: np.ndarray | None = None) -> RegionSet:
    """Grow regions over ``img`` from promoted grid candidates or random seeds.

    ``edges`` may be passed to reuse a precomputed Sobel map across calls.
    The PRNG (``numpy.random.default_rng(cfg.prng_seed)``) drives seed
    displacement walks or, for random seeding, a row draw followed by a column
    draw per seed.
    """
    img = as_image(img)
    H, W = img.shape[:2]
    rng = np.random.default_rng(cfg.prng_seed)
    covered = np.zeros((H, W), dtype=bool)
    flat_cover = covered.reshape(-1)
    grower = _Grower(img, cfg.topology)
    regions: list[Region] = []

    def add(seed):
        pixels = grower.grow(seed, cfg.thresholds)
        color = tuple(int(v) for v in img[seed[0], seed[1]])
        regions.append(Region(len(regions) + 1, seed, color, pixels))
        flat_cover[pixels] = True

    if cfg.seed_strategy == "random":
        for _ in range(cfg.n_random_seeds):
            h = int(rng.integers(H))
            w = int(rng.integers(W))
            add((h, w))
    else:
        if edges is None:
            edges = sobel_edges(img, cfg.edge_fraction)
        for c in candidate_grid(H, W, cfg.seed_grid):
            seed = promote_seed(c, covered, edges, cfg, rng)
            if seed is not None:
                add(seed)
    return RegionSet(regions, covered, cfg, img)
