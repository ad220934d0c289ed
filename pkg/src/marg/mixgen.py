"""Training samples for a region classifier.

Regions get a binary label from their overlap with the ground-truth mask, or
are combined into composite RegionMix samples whose label is the foreground
fraction of the union.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .grow import RegionSet
from .imgio import save_mask


class RegionLabel(str, Enum):
    BLADE = "blade"
    BACKGROUND = "background"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class MixConfig:
    max_members: int = 5
    samples_per_image: int = 16
    prng_seed: int = 0
    p_hi: float = 0.95
    p_lo: float = 0.05

    def __post_init__(self):
        if self.max_members < 1:
            raise ValueError("max_members must be >= 1")
        if not 0.0 <= self.p_lo < self.p_hi <= 1.0:
            raise ValueError("purity cutoffs need 0 <= p_lo < p_hi <= 1")


@dataclass(frozen=True)
class LabeledRegion:
    id: int
    label: RegionLabel
    purity: float


@dataclass
class MixSample:
    mask: np.ndarray
    label: float
    member_ids: list
    source_image: str = ""
    mode: str = "regionmix"


def purity(pixels: np.ndarray, gt: np.ndarray) -> float:
    """Fraction of a region's pixels that lie inside the mask."""
    return int(np.count_nonzero(np.asarray(gt, dtype=bool).ravel()[pixels])) / pixels.size


def label_regions(rs: RegionSet, gt: np.ndarray, cfg: MixConfig = MixConfig()) -> list[LabeledRegion]:
    """Binary labels for every region; regions between the cutoffs are ambiguous."""
    gt = np.asarray(gt, dtype=bool)
    if gt.shape != rs.shape:
        raise ValueError(f"mask shape {gt.shape} does not match regions {rs.shape}")
    out = []
    for r in rs.regions:
        p = purity(r.pixels, gt)
        if p >= cfg.p_hi:
            lab = RegionLabel.BLADE
        elif p <= cfg.p_lo:
            lab = RegionLabel.BACKGROUND
        else:
            lab = RegionLabel.AMBIGUOUS
        out.append(LabeledRegion(r.id, lab, p))
    return out


def synth_mix(rs: RegionSet, gt: np.ndarray, cfg: MixConfig, rng: np.random.Generator,
              source_image: str = "") -> MixSample:
    """Union of a random subset of regions, labelled by its foreground fraction.

    The subset size is uniform on ``1..min(N, max_members)`` and members are
    drawn without replacement.
    """
    n = rs.n_regions
    if n == 0:
        raise ValueError("RegionMix needs at least one region")
    gt = np.asarray(gt, dtype=bool)
    m = int(rng.integers(1, min(n, cfg.max_members) + 1))
    picks = sorted(int(i) for i in rng.choice(n, size=m, replace=False))
    members = [rs.regions[i] for i in picks]
    pixels = np.unique(np.concatenate([r.pixels for r in members]))
    H, W = rs.shape
    mask = np.zeros(H * W, dtype=bool)
    mask[pixels] = True
    return MixSample(mask.reshape(H, W), purity(pixels, gt), [r.id for r in members], source_image)


def sample_rng(prng_seed: int, index: int) -> np.random.Generator:
    """Independent stream for sample ``index``, so samples can be made in any order."""
    return np.random.default_rng([prng_seed, index])


def synth_mixes(rs: RegionSet, gt: np.ndarray, cfg: MixConfig = MixConfig(), source_image: str = "") -> list[MixSample]:
    return [synth_mix(rs, gt, cfg, sample_rng(cfg.prng_seed, i), source_image)
            for i in range(cfg.samples_per_image)]


def binary_samples(rs: RegionSet, gt: np.ndarray, cfg: MixConfig = MixConfig(), source_image: str = "") -> list[MixSample]:
    """One sample per unambiguous region, labelled 1.0 or 0.0."""
    out = []
    for r, lab in zip(rs.regions, label_regions(rs, gt, cfg)):
        if lab.label is RegionLabel.AMBIGUOUS:
            continue
        value = 1.0 if lab.label is RegionLabel.BLADE else 0.0
        out.append(MixSample(r.mask(rs.shape), value, [r.id], source_image, "binary"))
    return out


def export_dataset(samples, out_dir, prefix: str = "sample") -> dict:
    """Write mask PNGs plus ``samples.jsonl`` and a ``manifest.json`` header.

    Each JSONL line is ``{image, mask_file, label, member_ids, mode}``; the
    mask is meant to be stacked onto the source image as a fourth channel.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    modes = {}
    for i, s in enumerate(samples):
        name = f"{prefix}_{i:05d}.png"
        save_mask(s.mask, out_dir / name)
        lines.append(json.dumps({
            "image": s.source_image,
            "mask_file": name,
            "label": float(s.label),
            "member_ids": [int(x) for x in s.member_ids],
            "mode": s.mode,
        }, sort_keys=True))
        modes[s.mode] = modes.get(s.mode, 0) + 1
    (out_dir / "samples.jsonl").write_text("".join(line + "\n" for line in lines))
    manifest = {"n_samples": len(lines), "modes": dict(sorted(modes.items())), "samples_file": "samples.jsonl"}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_dataset(out_dir) -> list[dict]:
    text = (Path(out_dir) / "samples.jsonl").read_text()
    return [json.loads(line) for line in text.splitlines() if line]
