"""Region merging and projection of overlapping regions onto a label map."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy import sparse

from . import _kernels
from .grow import Region, RegionSet
from .imgio import RegionMap


@dataclass(frozen=True)
class MergeConfig:
    overlap_threshold: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ValueError("overlap_threshold must lie in (0, 1]")


def _incidence(rs: RegionSet) -> sparse.csr_matrix:
    H, W = rs.shape
    n = rs.n_regions
    if n == 0:
        return sparse.csr_matrix((0, H * W), dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([r.size for r in rs.regions])
    indices = np.concatenate([r.pixels for r in rs.regions]).astype(np.int64)
    data = np.ones(indices.size, dtype=np.int64)
    return sparse.csr_matrix((data, indices, indptr), shape=(n, H * W))


def intersection_counts(rs: RegionSet) -> np.ndarray:
    """``(N, N)`` matrix of pairwise intersection pixel counts."""
    A = _incidence(rs)
    return np.asarray((A @ A.T).todense(), dtype=np.int64)


def mergeability(rs: RegionSet, cfg: MergeConfig = MergeConfig()) -> np.ndarray:
    """Boolean ``(N, N)`` matrix: overlap over the smaller area reaches the threshold.

    Row/column ``i`` refers to ``rs.regions[i]``. The diagonal is ``True``.
    """
    inter = intersection_counts(rs)
    sizes = np.array([r.size for r in rs.regions], dtype=np.int64)
    smaller = np.minimum.outer(sizes, sizes)
    # inter / smaller >= t on integers; t is taken as the decimal it was written as
    t = Fraction(str(cfg.overlap_threshold))
    m = inter * t.denominator >= smaller * t.numerator
    np.fill_diagonal(m, True)
    return m


def chains(m: np.ndarray) -> list[list[int]]:
    """Connected components of the mergeability graph by depth-first search.

    Components are listed in order of their smallest member, members sorted.
    """
    n = m.shape[0]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        stack = [start]
        comp = []
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in np.flatnonzero(m[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        comps.append(sorted(comp))
    return comps


def merge_chains(rs: RegionSet, m: np.ndarray) -> RegionSet:
    """Replace every chain of mergeable regions by the union of its members.

    The merged region keeps the smallest member id and the seed of its largest
    member (smallest id among equally large ones). The decomposition is kept
    in ``extra["components"]`` as lists of original ids.
    """
    comps = chains(m)
    merged = []
    components = []
    for comp in comps:
        members = [rs.regions[i] for i in comp]
        ids = [r.id for r in members]
        components.append(sorted(ids))
        if len(members) == 1:
            merged.append(members[0])
            continue
        rep = min(members, key=lambda r: (-r.size, r.id))
        pixels = np.unique(np.concatenate([r.pixels for r in members]))
        merged.append(Region(min(ids), rep.seed, rep.seed_color, pixels))
    merged.sort(key=lambda r: r.id)
    components.sort()
    extra = dict(rs.extra, components=components)
    return replace(rs, regions=merged, covered=rs.covered.copy(), extra=extra)


def merge_regions(rs: RegionSet, cfg: MergeConfig = MergeConfig()) -> RegionSet:
    return merge_chains(rs, mergeability(rs, cfg))


def resolve_overlaps(rs: RegionSet, img=None) -> RegionMap:
    """Give each covered pixel to one region: the nearest seed colour wins.

    Ties go to the smaller region id. Surviving regions are renumbered
    ``1..N`` in id order, so region ids in the map are contiguous. ``img``
    defaults to the image the regions were grown on.
    """
    H, W = rs.shape
    if img is None:
        img = rs.image
    if img is None:
        raise ValueError("resolve_overlaps needs the source image")
    flat = np.asarray(img, dtype=np.int32).reshape(-1, 3)
    best = np.full(H * W, np.iinfo(np.int32).max, dtype=np.int32)
    owner = np.zeros(H * W, dtype=np.int64)
    ordered = sorted(rs.regions, key=lambda r: r.id)
    for k, r in enumerate(ordered, start=1):
        d = np.abs(flat[r.pixels] - np.asarray(r.seed_color, dtype=np.int32)).sum(axis=1)
        win = d < best[r.pixels]
        best[r.pixels[win]] = d[win]
        owner[r.pixels[win]] = k
    present = np.zeros(len(ordered) + 1, dtype=bool)
    present[owner] = True
    present[0] = False
    relabel = np.zeros(len(ordered) + 1, dtype=np.int64)
    relabel[present] = np.arange(1, int(present.sum()) + 1)
    labels = relabel[owner].reshape(H, W)
    seeds = [ordered[k - 1].seed for k in np.flatnonzero(present)]
    cfg = rs.config
    return RegionMap(
        labels=labels,
        seeds=seeds,
        tau_l=cfg.thresholds.tau_l if cfg else 0,
        tau_s=cfg.thresholds.tau_s if cfg else 0,
        topology=cfg.topology.value if cfg else "modular",
        prng_seed=cfg.prng_seed if cfg else 0,
        source_ids=[ordered[k - 1].id for k in np.flatnonzero(present)],
    )


def fill_holes(rm: RegionMap) -> RegionMap:
    """Assign every unlabelled pixel to the nearest labelled one (8-connected).

    Distances are Chebyshev; equidistant candidates resolve to the smaller id.
    A map without labels is returned unchanged.
    """
    labels = np.asarray(rm.labels, dtype=np.int64)
    if not labels.any() or labels.all():
        return replace(rm, labels=labels.copy())
    return replace(rm, labels=_kernels.nearest_fill(np.ascontiguousarray(labels)))
