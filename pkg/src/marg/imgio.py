"""Image, mask and region-map I/O, Sobel edge maps and synthetic test scenes.

Images are ``(H, W, 3)`` ``uint8`` arrays, masks and edge maps are ``(H, W)``
``bool`` arrays, region maps are ``(H, W)`` integer arrays with 0 meaning
unassigned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage

MAX_REGION_ID = 65535


class ImageFormatError(ValueError):
    """Raised when a file decodes but is not usable as an 8-bit image."""


class CapacityError(ValueError):
    """Raised when a region map holds more ids than the 16-bit format allows."""


def as_image(arr) -> np.ndarray:
    """Validate and return an ``(H, W, 3)`` uint8 image array."""
    arr = np.asarray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("channel values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def load_image(path) -> np.ndarray:
    """Read an 8-bit RGB image. Grayscale is replicated, alpha is dropped."""
    with PILImage.open(path) as im:
        im.load()
        mode = im.mode
        if mode in ("RGB", "L"):
            pass
        elif mode == "RGBA":
            im = im.convert("RGB")
        elif mode == "LA":
            im = im.convert("L")
        elif mode in ("P", "PA", "1"):
            im = im.convert("RGBA" if mode != "1" else "L").convert("RGB")
        else:
            raise ImageFormatError(f"unsupported image mode {mode!r} in {path}")
        arr = np.array(im)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return as_image(arr)


def save_image(img: np.ndarray, path) -> None:
    PILImage.fromarray(as_image(img), mode="RGB").save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Read a binary mask PNG; any gray level above 127 is foreground."""
    with PILImage.open(path) as im:
        im.load()
        if im.mode not in ("L", "1", "RGB", "RGBA", "LA", "P"):
            raise ImageFormatError(f"unsupported mask mode {im.mode!r} in {path}")
        arr = np.array(im.convert("L"))
    return arr > 127


def save_mask(mask: np.ndarray, path) -> None:
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    PILImage.fromarray(arr, mode="L").save(path, format="PNG")


def grayscale(img: np.ndarray) -> np.ndarray:
    # channel sums are integers, so s/3 is never exactly a half and (s+1)//3 rounds it
    s = img.astype(np.int32).sum(axis=2)
    return (s + 1) // 3


def sobel_magnitude(img: np.ndarray) -> np.ndarray:
    g = grayscale(as_image(img)).astype(np.float64)
    gx = ndimage.sobel(g, axis=1, mode="nearest")
    gy = ndimage.sobel(g, axis=0, mode="nearest")
    return np.hypot(gx, gy)


def sobel_edges(img: np.ndarray, magnitude_fraction: float = 0.25) -> np.ndarray:
    """Binary edge map from the 3x3 Sobel gradient magnitude.

    A pixel is an edge when its magnitude reaches ``magnitude_fraction`` of the
    image maximum. A gradient-free image has no edges.
    """
    if not 0.0 < magnitude_fraction <= 1.0:
        raise ValueError("magnitude_fraction must lie in (0, 1]")
    mag = sobel_magnitude(img)
    peak = mag.max()
    if peak == 0:
        return np.zeros(mag.shape, dtype=bool)
    return mag >= magnitude_fraction * peak


@dataclass
class RegionMap:
    """Single-assignment labelling of an image plus the metadata it was made with.

    ``labels[h, w]`` is 0 for unassigned pixels and ``i`` for region ``i``;
    ``seeds[i - 1]`` is the seed coordinate of region ``i``.
    """

    labels: np.ndarray
    seeds: list = field(default_factory=list)
    tau_l: float = 0
    tau_s: float = 0
    topology: str = "modular"
    prng_seed: int = 0
    # ids of the regions each label was projected from; not persisted
    source_ids: list = field(default_factory=list, compare=False)

    @property
    def n_regions(self) -> int:
        return len(self.seeds)

    def manifest(self) -> dict:
        counts = np.bincount(self.labels.ravel(), minlength=self.n_regions + 1)
        return {
            "n_regions": self.n_regions,
            "regions": [
                {"id": i + 1, "pixels": int(counts[i + 1]), "seed": [int(s[0]), int(s[1])]}
                for i, s in enumerate(self.seeds)
            ],
            "tau_l": _json_number(self.tau_l),
            "tau_s": _json_number(self.tau_s),
            "topology": str(self.topology),
            "prng_seed": int(self.prng_seed),
        }


def _json_number(x):
    x = float(x)
    return int(x) if x.is_integer() else x


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def save_region_map(rm: RegionMap, path, extra: dict | None = None) -> None:
    """Write a 16-bit region-id PNG and a JSON manifest next to it."""
    labels = np.asarray(rm.labels)
    if rm.n_regions > MAX_REGION_ID or (labels.size and labels.max() > MAX_REGION_ID):
        raise CapacityError(f"{rm.n_regions} regions exceed the 16-bit id range")
    if labels.size and labels.min() < 0:
        raise ValueError("region ids must be non-negative")
    path = Path(path)
    PILImage.fromarray(labels.astype(np.uint16)).save(path, format="PNG")
    manifest = rm.manifest()
    if extra:
        manifest.update(extra)
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_region_map(path) -> RegionMap:
    path = Path(path)
    with PILImage.open(path) as im:
        im.load()
        labels = np.array(im).astype(np.int64)
    if labels.ndim != 2:
        raise ImageFormatError(f"{path} is not a single-channel region map")
    meta = json.loads(manifest_path(path).read_text())
    return RegionMap(
        labels=labels,
        seeds=[tuple(r["seed"]) for r in meta["regions"]],
        tau_l=meta["tau_l"],
        tau_s=meta["tau_s"],
        topology=meta["topology"],
        prng_seed=meta["prng_seed"],
    )


# ---------------------------------------------------------------------------
# synthetic scenes

SCENE_KINDS = ("flat", "two-tone", "diagonal-stripe", "wraparound")


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of a generated test scene.

    ``column`` is the split column of ``two-tone``; ``band`` the ``[start, stop)``
    columns of the ``wraparound`` foreground; ``stripe_width`` and
    ``stripe_offset`` place the ``diagonal-stripe`` band ``offset <= w - h <
    offset + width``. ``bg_gradient`` is a pair of colours ramped across the
    columns of the background (stripe scenes only).
    """

    kind: str = "flat"
    height: int = 64
    width: int = 64
    fg_color: tuple = (220, 220, 215)
    bg_color: tuple = (70, 120, 180)
    column: int = 32
    band: tuple = (24, 40)
    stripe_width: int = 8
    stripe_offset: int = -4
    bg_gradient: tuple | None = None
    noise: int = 0


def stripe_mask(height: int, width: int, offset: int, stripe_width: int) -> np.ndarray:
    h = np.arange(height)[:, None]
    w = np.arange(width)[None, :]
    d = w - h
    return (d >= offset) & (d < offset + stripe_width)


def make_synthetic(spec: SceneSpec, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Render ``spec`` into ``(image, ground_truth_mask)``.

    The foreground (mask ``True``) is the right half of ``two-tone``, the band
    of ``wraparound`` and the stripe of ``diagonal-stripe``. ``noise`` adds
    independent uniform integers in ``[-noise, noise]`` to every channel.
    """
    H, W = spec.height, spec.width
    if H < 1 or W < 1:
        raise ValueError("scene must be at least 1x1")
    fg = np.array(spec.fg_color, dtype=np.int32)
    bg = np.array(spec.bg_color, dtype=np.int32)
    img = np.empty((H, W, 3), dtype=np.int32)
    img[:] = bg

    if spec.kind == "flat":
        mask = np.zeros((H, W), dtype=bool)
    elif spec.kind == "two-tone":
        if not 0 < spec.column < W:
            raise ValueError(f"split column {spec.column} outside (0, {W})")
        mask = np.zeros((H, W), dtype=bool)
        mask[:, spec.column:] = True
    elif spec.kind == "wraparound":
        c0, c1 = spec.band
        if not (0 < c0 < c1 < W):
            raise ValueError(f"band {spec.band} must sit strictly inside [0, {W})")
        mask = np.zeros((H, W), dtype=bool)
        mask[:, c0:c1] = True
    elif spec.kind == "diagonal-stripe":
        if spec.stripe_width < 1 or spec.stripe_width > H + W - 1:
            raise ValueError(f"stripe width {spec.stripe_width} does not fit a {H}x{W} image")
        mask = stripe_mask(H, W, spec.stripe_offset, spec.stripe_width)
        if spec.bg_gradient is not None:
            g0, g1 = (np.array(c, dtype=np.float64) for c in spec.bg_gradient)
            t = np.arange(W) / max(W - 1, 1)
            ramp = np.rint(g0[None, :] + t[:, None] * (g1 - g0)[None, :]).astype(np.int32)
            img[:] = ramp[None, :, :]
    else:
        raise ValueError(f"unknown scene kind {spec.kind!r}; expected one of {SCENE_KINDS}")

    img[mask] = fg
    if spec.noise:
        rng = np.random.default_rng(seed)
        img = img + rng.integers(-spec.noise, spec.noise + 1, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8), mask
