"""Pixel neighbourhoods on a bounded (Cartesian) or toroidal (modular) grid."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Topology(str, Enum):
    CARTESIAN = "cartesian"
    MODULAR = "modular"


@dataclass(frozen=True)
class NeighborSpec:
    k: int = 1
    topology: Topology = Topology.MODULAR

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("connectivity radius k must be >= 1")
        object.__setattr__(self, "topology", Topology(self.topology))


def _offsets(k: int, include_center: bool):
    for i in range(-k, k + 1):
        for j in range(-k, k + 1):
            if i == 0 and j == 0 and not include_center:
                continue
            yield i, j


def _collect(c, k, topology, H, W, include_center):
    h, w = c
    if not (0 <= h < H and 0 <= w < W):
        raise ValueError(f"coordinate {c} outside a {H}x{W} image")
    topology = Topology(topology)
    out = []
    seen = set() if include_center else {(h, w)}
    for i, j in _offsets(k, include_center):
        hh, ww = h + i, w + j
        if topology is Topology.MODULAR:
            hh, ww = hh % H, ww % W
        elif not (0 <= hh < H and 0 <= ww < W):
            continue
        if (hh, ww) in seen:
            continue
        seen.add((hh, ww))
        out.append((hh, ww))
    return out


def neighbors(c: tuple[int, int], spec: NeighborSpec, H: int, W: int) -> list[tuple[int, int]]:
    """Neighbours of ``c`` within radius ``spec.k``, excluding ``c`` itself.

    Offsets are enumerated row-major (row offset ascending, then column
    offset). Under modular topology coordinates wrap and repeated coordinates
    (tiny images) are kept once, at their first occurrence; a wrap landing
    back on ``c`` is dropped.
    """
    return _collect(c, spec.k, spec.topology, H, W, include_center=False)


def window_coords(c: tuple[int, int], k: int, topology, H: int, W: int) -> set[tuple[int, int]]:
    """The ``(2k+1) x (2k+1)`` window around ``c``, centre included."""
    return set(_collect(c, k, topology, H, W, include_center=True))


def window_slices(c: tuple[int, int], k: int, topology, H: int, W: int):
    """Index arrays selecting the window around ``c`` from an ``(H, W)`` array."""
    h, w = c
    rows = np.arange(h - k, h + k + 1)
    cols = np.arange(w - k, w + k + 1)
    if Topology(topology) is Topology.MODULAR:
        rows = np.unique(rows % H)
        cols = np.unique(cols % W)
    else:
        rows = rows[(rows >= 0) & (rows < H)]
        cols = cols[(cols >= 0) & (cols < W)]
    return np.ix_(rows, cols)
