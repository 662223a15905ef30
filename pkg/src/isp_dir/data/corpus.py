"""Procedural toy corpus of labeled shapes, and ingestion of PNG folders.

Each toy sample is one anti-aliased shape over a smooth two-colour
background. The shape family is the class label, so labels survive any
photometric degradation. Every sample is regenerable from (label, seed).
"""

import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
from numpy.typing import NDArray

from ..errors import InputError, ParameterError
from ..isp.base import FloatArray, ImageRGB
from ..isp.io import load_rgb, save_rgb
from ..logging_config import get_logger
from ..utils.seeding import derive_rng

logger = get_logger("data.corpus")

TOY_SIZE = 64
SUPERSAMPLE = 4
MANIFEST_NAME = "manifest.json"
MIN_CLASSES = 2
SEED_BOUND = 2**63
# Minimum luminance gap between shape colour and mean background
MIN_CONTRAST = 0.25

ShapeFn = Callable[[FloatArray, FloatArray], NDArray[np.bool_]]

_SQRT3 = float(np.sqrt(3.0))


def _disk(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    return u**2 + v**2 <= 1.0


def _square(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    return np.maximum(np.abs(u), np.abs(v)) <= 0.8


def _triangle(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    return (v >= -0.5) & (v <= 1.0 - _SQRT3 * np.abs(u))


def _ring(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    rho = np.hypot(u, v)
    return (rho >= 0.55) & (rho <= 1.0)


def _cross(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    au, av = np.abs(u), np.abs(v)
    return ((au <= 0.3) & (av <= 1.0)) | ((av <= 0.3) & (au <= 1.0))


def _diamond(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    return np.abs(u) + np.abs(v) <= 1.0


def _ellipse(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    return u**2 + (v / 0.5) ** 2 <= 1.0


def _star(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    return np.hypot(u, v) <= 0.6 + 0.4 * np.cos(5.0 * np.arctan2(v, u))


def _hexagon(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    av = np.abs(v)
    return (av <= _SQRT3 / 2.0) & (_SQRT3 * np.abs(u) + av <= _SQRT3)


def _half_disk(u: FloatArray, v: FloatArray) -> NDArray[np.bool_]:
    return (u**2 + v**2 <= 1.0) & (v >= 0.0)


SHAPE_FAMILIES: dict[str, ShapeFn] = {
    "disk": _disk,
    "square": _square,
    "triangle": _triangle,
    "ring": _ring,
    "cross": _cross,
    "diamond": _diamond,
    "ellipse": _ellipse,
    "star": _star,
    "hexagon": _hexagon,
    "half_disk": _half_disk,
}
FAMILY_NAMES: tuple[str, ...] = tuple(SHAPE_FAMILIES)
MAX_CLASSES = len(FAMILY_NAMES)


@dataclass(eq=False)
class ToySample:
    """One labeled toy image.

    ``mask`` is the per-pixel class map: 0 for background and label + 1
    where the shape covers at least half the pixel.
    """

    id: str
    clean: ImageRGB
    label: int
    seed: int
    mask: NDArray[np.int64]
    meta: dict[str, Any] = field(default_factory=dict)


def _luminance(rgb: FloatArray) -> float:
    return float(0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2])


def _background(rng: np.random.Generator, size: int) -> tuple[FloatArray, dict[str, Any]]:
    c0 = rng.uniform(0.1, 0.9, size=3)
    c1 = rng.uniform(0.1, 0.9, size=3)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    freq = rng.uniform(0.5, 1.5)
    coords = (np.arange(size) + 0.5) / size
    y, x = np.meshgrid(coords, coords, indexing="ij")
    t = 0.5 + 0.5 * ((x - 0.5) * np.cos(angle) + (y - 0.5) * np.sin(angle)) * 1.4
    t = np.clip(t + 0.05 * np.sin(2.0 * np.pi * freq * (x + y)), 0.0, 1.0)
    bg = c0 * (1.0 - t[..., None]) + c1 * t[..., None]
    return bg, {"bg_colors": [c0.tolist(), c1.tolist()], "bg_angle": angle, "bg_freq": freq}


def _coverage(family: str, size: int, cx: float, cy: float, radius: float, theta: float) -> FloatArray:
    n = size * SUPERSAMPLE
    coords = (np.arange(n) + 0.5) / SUPERSAMPLE
    y, x = np.meshgrid(coords, coords, indexing="ij")
    dx, dy = (x - cx) / radius, (y - cy) / radius
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    u = cos_t * dx + sin_t * dy
    # image rows grow downwards; flip so shapes are upright at theta=0
    v = -(-sin_t * dx + cos_t * dy)
    inside = SHAPE_FAMILIES[family](u, v).astype(np.float64)
    return inside.reshape(size, SUPERSAMPLE, size, SUPERSAMPLE).mean(axis=(1, 3))


def render_toy(label: int, seed: int, size: int = TOY_SIZE) -> tuple[ImageRGB, NDArray[np.int64], dict[str, Any]]:
    """Render the sample for (label, seed): image, class mask and generator parameters.

    Raises:
        ParameterError: If label is outside the known shape families
    """
    if not 0 <= label < MAX_CLASSES:
        raise ParameterError(f"label must be in [0, {MAX_CLASSES}), got {label}")
    rng = np.random.default_rng(seed)
    bg, meta = _background(rng, size)
    family = FAMILY_NAMES[label]
    cx, cy = rng.uniform(0.35, 0.65, size=2) * size
    radius = float(rng.uniform(0.18, 0.3)) * size
    theta = float(rng.uniform(0.0, 2.0 * np.pi))
    fg = rng.uniform(0.0, 1.0, size=3)
    if abs(_luminance(fg) - _luminance(bg.mean(axis=(0, 1)))) < MIN_CONTRAST:
        fg = 1.0 - fg

    alpha = _coverage(family, size, float(cx), float(cy), radius, theta)
    pixels = bg * (1.0 - alpha[..., None]) + fg * alpha[..., None]
    mask = np.where(alpha >= 0.5, label + 1, 0).astype(np.int64)
    meta.update(
        {
            "family": family,
            "center": [float(cx), float(cy)],
            "radius": radius,
            "theta": theta,
            "fg_color": fg.tolist(),
        }
    )
    return ImageRGB(pixels), mask, meta


def make_sample(index: int, label: int, seed: int, size: int = TOY_SIZE) -> ToySample:
    clean, mask, meta = render_toy(label, seed, size)
    return ToySample(id=f"{index:05d}", clean=clean, label=label, seed=seed, mask=mask, meta=meta)


def gen_toy_corpus(n: int, n_classes: int, rng: np.random.Generator, size: int = TOY_SIZE) -> list[ToySample]:
    """Generate n toy samples with labels cycling through n_classes families.

    Raises:
        ParameterError: If n_classes is outside [2, 10] or n < 1
    """
    if not MIN_CLASSES <= n_classes <= MAX_CLASSES:
        raise ParameterError(f"n_classes must be in [{MIN_CLASSES}, {MAX_CLASSES}], got {n_classes}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    seeds = rng.integers(0, SEED_BOUND, size=n)
    return [make_sample(i, i % n_classes, int(seeds[i]), size) for i in range(n)]


def corpus_seeds(n: int, seed: int) -> list[int]:
    """Per-sample seeds gen_toy_corpus draws from ``default_rng(seed)``."""
    return [int(s) for s in np.random.default_rng(seed).integers(0, SEED_BOUND, size=n)]


def write_corpus(samples: Sequence[ToySample], out_dir: Path) -> Path:
    """Write PNGs and the manifest; returns the manifest path."""
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[dict[str, Any]] = []
    for sample in samples:
        file = f"{sample.id}.png"
        save_rgb(out_dir / file, sample.clean)
        entries.append(
            {
                "id": sample.id,
                "label": sample.label,
                "seed": sample.seed,
                "file": file,
                "family": FAMILY_NAMES[sample.label],
            }
        )
    manifest = out_dir / MANIFEST_NAME
    manifest.write_text(json.dumps(entries, indent=2))
    return manifest


def read_corpus(corpus_dir: Path) -> list[ToySample]:
    """Load a corpus written by write_corpus; masks are re-rendered from the seeds.

    Raises:
        InputError: If the manifest or an image is missing
    """
    manifest = corpus_dir / MANIFEST_NAME
    if not manifest.is_file():
        raise InputError(
            f"No corpus manifest in {corpus_dir}",
            hint="generate one with `isp-dir synth-data --out <dir>`",
        )
    samples: list[ToySample] = []
    for entry in json.loads(manifest.read_text()):
        path = corpus_dir / entry["file"]
        if not path.is_file():
            raise InputError(f"Corpus image missing: {path}")
        clean = load_rgb(path)
        _, mask, meta = render_toy(int(entry["label"]), int(entry["seed"]), clean.height)
        samples.append(
            ToySample(
                id=str(entry["id"]),
                clean=clean,
                label=int(entry["label"]),
                seed=int(entry["seed"]),
                mask=mask,
                meta=meta,
            )
        )
    return samples


def held_out_split(samples: Sequence[ToySample], fraction: float, seed: int) -> tuple[list[ToySample], list[ToySample]]:
    """Split into (train, test) with ``round(fraction * n)`` test samples, order preserved.

    Raises:
        ParameterError: If fraction is outside (0, 1) or the split would leave a side empty
    """
    if not 0.0 < fraction < 1.0:
        raise ParameterError(f"held-out fraction must be in (0, 1), got {fraction}")
    n = len(samples)
    n_test = round(fraction * n)
    if n_test < 1 or n_test >= n:
        raise ParameterError(f"cannot hold out {fraction:.0%} of {n} samples")
    test_idx = set(np.random.default_rng(seed).permutation(n)[:n_test].tolist())
    train = [s for i, s in enumerate(samples) if i not in test_idx]
    test = [s for i, s in enumerate(samples) if i in test_idx]
    return train, test


def task_targets(samples: Sequence[ToySample], kind: str) -> torch.Tensor:
    """Labels (N,) for classification or stacked masks (N, H, W) for segmentation."""
    if kind == "segmentation":
        return torch.from_numpy(np.stack([s.mask for s in samples]))
    return torch.tensor([s.label for s in samples], dtype=torch.int64)


def _crop(pixels: FloatArray, top: int, left: int, size: int) -> ImageRGB:
    return ImageRGB(pixels[top : top + size, left : left + size])


def load_folder(
    path: Path,
    *,
    crops_per_image: int = 1,
    crop_size: int = TOY_SIZE,
    seed: int = 0,
    random_crops: bool = False,
) -> list[ImageRGB]:
    """Cut square patches from every PNG in a folder, in filename order.

    The first patch of an image is its centre crop unless ``random_crops``
    is set; further patches are random crops keyed by (seed, file index,
    crop index). Unreadable or too-small files are skipped with a warning.

    Raises:
        InputError: If the folder has no usable PNG
    """
    if not path.is_dir():
        raise InputError(f"Not a directory: {path}")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise InputError(f"No PNG images in {path}", hint="point --in at a folder of .png files")

    patches: list[ImageRGB] = []
    for file_index, file in enumerate(files):
        try:
            image = load_rgb(file)
        except Exception as e:
            logger.warning(f"Skipping unreadable image {file}: {e}", extra={"path": str(file)})
            continue
        if image.height < crop_size or image.width < crop_size:
            logger.warning(
                f"Skipping {file}: smaller than {crop_size}×{crop_size}", extra={"path": str(file)}
            )
            continue
        span_h, span_w = image.height - crop_size, image.width - crop_size
        for crop_index in range(crops_per_image):
            if crop_index == 0 and not random_crops:
                top, left = span_h // 2, span_w // 2
            else:
                rng = derive_rng(seed, file_index, crop_index)
                top = int(rng.integers(0, span_h + 1))
                left = int(rng.integers(0, span_w + 1))
            patches.append(_crop(image.pixels, top, left, crop_size))

    if not patches:
        raise InputError(f"No readable PNG images in {path}")
    return patches
