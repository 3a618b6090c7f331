"""Image and config file I/O: PNG (8-bit color, 16-bit depth), PFM, and the
key-value config text format.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import ConfigError, InputError


def read_color_png(path):
    """8-bit RGB image as (H, W, 3) uint8."""
    try:
        img = Image.open(path)
    except Exception as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def write_color_png(path, array):
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def read_depth_png16(path):
    """16-bit grayscale PNG as (H, W) float32 (raw counts)."""
    try:
        img = Image.open(path)
    except Exception as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc
    if img.mode not in ("I", "I;16", "I;16B", "L"):
        raise InputError(f"{path}: expected grayscale depth PNG, got mode {img.mode}")
    return np.asarray(img, dtype=np.float32)


def write_gray_png(path, array):
    """Normalized float map as an 8-bit grayscale debug PNG."""
    arr = np.asarray(array, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        arr = (arr - lo) / (hi - lo)
    Image.fromarray((arr * 255).astype(np.uint8), mode="L").save(path)


# -- PFM (portable float map; grayscale "Pf", little-endian, bottom-up rows) --


def write_pfm(path, array):
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim != 2:
        raise InputError(f"PFM writer handles single planes, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(arr[::-1].tobytes())


def read_pfm(path):
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header != b"Pf":
            raise InputError(f"{path}: not a grayscale PFM (header {header!r})")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        data = f.read(w * h * 4)
        if len(data) != w * h * 4:
            raise InputError(f"{path}: truncated PFM payload")
    arr = np.frombuffer(data, dtype="<f4" if scale < 0 else ">f4").reshape(h, w)
    return np.ascontiguousarray(arr[::-1]).astype(np.float32)


# -- config file: `key = value` lines, `#` comments ---------------------------


def parse_config_text(text):
    """Key-value pairs from the documented config format (strings as values)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
