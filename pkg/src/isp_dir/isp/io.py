"""PNG persistence for RGB images and RAW mosaics.

RGB images are stored as 8-bit PNG. RAW mosaics are stored as 16-bit
single-channel PNG with a JSON sidecar recording the ISP parameters.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from ..errors import InputError
from .base import BayerRaw, FloatArray, ImageRGB, IspParams

MAX_8BIT = 255.0
MAX_16BIT = 65535.0


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def to_unit_range(image: Image.Image) -> FloatArray:
    """Decode a Pillow image into float RGB in [0, 1].

    8-bit modes are scaled by 255; 16-bit and 32-bit integer modes by 65535.
    Greyscale is replicated across three channels.

    Raises:
        InputError: If the mode is not a supported greyscale or colour mode
    """
    if image.mode in ("I;16", "I;16B", "I;16L", "I"):
        array = np.asarray(image, dtype=np.float64) / MAX_16BIT
        return np.repeat(array[..., None], 3, axis=-1)
    if image.mode == "L":
        array = np.asarray(image, dtype=np.float64) / MAX_8BIT
        return np.repeat(array[..., None], 3, axis=-1)
    if image.mode in ("RGB", "RGBA", "P", "LA", "CMYK", "YCbCr"):
        return np.asarray(image.convert("RGB"), dtype=np.float64) / MAX_8BIT
    raise InputError(f"Unsupported PNG mode {image.mode!r}")


def load_rgb(path: Path) -> ImageRGB:
    """Read an 8- or 16-bit PNG as an RGB image."""
    with Image.open(path) as image:
        image.load()
        return ImageRGB(to_unit_range(image))


def save_rgb(path: Path, rgb: ImageRGB, *, params: IspParams | None = None) -> Path:
    """Write an 8-bit RGB PNG, plus a JSON sidecar when params are given."""
    path.parent.mkdir(parents=True, exist_ok=True)
    quantized = np.round(rgb.pixels * MAX_8BIT).astype(np.uint8)
    Image.fromarray(quantized).save(path, format="PNG")
    if params is not None:
        write_sidecar(sidecar_path(path), {"kind": "rgb", "params": params.to_dict()})
    return path


def save_raw(path: Path, raw: BayerRaw, params: IspParams) -> Path:
    """Write a RAW mosaic as 16-bit PNG with its IspParams sidecar."""
    path.parent.mkdir(parents=True, exist_ok=True)
    quantized = np.round(raw.pixels * MAX_16BIT).astype(np.uint16)
    Image.fromarray(quantized).save(path, format="PNG")
    write_sidecar(
        sidecar_path(path),
        {"kind": "raw", "cfa": raw.cfa, "params": params.to_dict()},
    )
    return path


def load_raw(path: Path) -> tuple[BayerRaw, IspParams]:
    """Read a RAW mosaic and its sidecar.

    Raises:
        InputError: If the sidecar is missing
    """
    sidecar = sidecar_path(path)
    if not sidecar.exists():
        raise InputError(f"RAW sidecar missing: {sidecar}")
    meta = json.loads(sidecar.read_text())
    with Image.open(path) as image:
        pixels = np.asarray(image, dtype=np.float64) / MAX_16BIT
    return BayerRaw(pixels, cfa=meta.get("cfa", "RGGB")), IspParams.from_dict(meta["params"])


def write_sidecar(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
