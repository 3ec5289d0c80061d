"""Reference image-quality metrics over single-channel rasters.

PSNR and SSIM operate on `Raster` buffers with an explicit dynamic range.
SSIM uses non-overlapping 8x8 windows and population moments (no Gaussian
weighting) so every expected value in the tests is tractable by hand; the
window scheme travels with serialized results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SSIM_WINDOW = 8
SSIM_SCHEME = "non-overlapping 8x8 windows, population moments"

PSNR_INFINITE = math.inf


@dataclass(frozen=True)
class Raster:
    """Row-major single-channel image with values in [0, max_val]."""

    height: int
    width: int
    data: np.ndarray
    max_val: float = 255.0

    def __post_init__(self) -> None:
        if self.height <= 0 or self.width <= 0:
            raise ValueError("raster dimensions must be positive")
        if self.max_val <= 0:
            raise ValueError("max_val must be positive")
        arr = np.asarray(self.data, dtype=np.float64).reshape(-1)
        if arr.size != self.height * self.width:
            raise ValueError(
                f"data length {arr.size} != height*width {self.height * self.width}"
            )
        if arr.min() < 0 or arr.max() > self.max_val:
            raise ValueError(f"values must lie in [0, {self.max_val}]")
        object.__setattr__(self, "data", arr.reshape(self.height, self.width))

    @classmethod
    def from_array(cls, array: np.ndarray, max_val: float = 255.0) -> "Raster":
        arr = np.asarray(array, dtype=np.float64)
        return cls(arr.shape[0], arr.shape[1], arr, max_val)


def _check_dims(a: Raster, b: Raster) -> None:
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError(
            f"dimension mismatch: {a.height}x{a.width} vs {b.height}x{b.width}"
        )


def mse(a: Raster, b: Raster) -> float:
    _check_dims(a, b)
    diff = a.data - b.data
    return float(np.mean(diff * diff))


def psnr(a: Raster, b: Raster) -> float:
    """10*log10(max^2 / mse); identical rasters return the infinity sentinel."""
    _check_dims(a, b)
    if a.max_val != b.max_val:
        raise ValueError(f"dynamic range mismatch: {a.max_val} vs {b.max_val}")
    err = mse(a, b)
    if err == 0.0:
        return PSNR_INFINITE
    return 10.0 * math.log10(a.max_val * a.max_val / err)


def format_psnr(value: float) -> str:
    """Serialize PSNR; the infinite case is an explicit "inf", never a magic number."""
    return "inf" if math.isinf(value) else repr(value)


def ssim(
    a: Raster,
    b: Raster,
    c1: float | None = None,
    c2: float | None = None,
    window: int = SSIM_WINDOW,
) -> float:
    """Mean structural similarity over non-overlapping windows, in [-1, 1]."""
    _check_dims(a, b)
    if a.height < window or a.width < window:
        raise ValueError(f"raster smaller than {window}x{window} window")
    if c1 is None:
        c1 = (0.01 * a.max_val) ** 2
    if c2 is None:
        c2 = (0.03 * a.max_val) ** 2
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")

    scores = []
    for top in range(0, a.height - window + 1, window):
        for left in range(0, a.width - window + 1, window):
            wa = a.data[top : top + window, left : left + window]
            wb = b.data[top : top + window, left : left + window]
            mu_a = wa.mean()
            mu_b = wb.mean()
            var_a = wa.var()
            var_b = wb.var()
            cov = ((wa - mu_a) * (wb - mu_b)).mean()
            scores.append(
                (2 * mu_a * mu_b + c1)
                * (2 * cov + c2)
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
            )
    return float(np.mean(scores))


def read_pgm(path: str | Path) -> Raster:
    """Binary PGM (P5) reader; max_val comes from the header."""
    blob = Path(path).read_bytes()
    if not blob.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")

    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(int(blob[start:pos]))
    pos += 1  # single whitespace byte after maxval

    width, height, max_val = tokens
    if not 0 < max_val < 65536:
        raise ValueError(f"{path}: PGM maxval {max_val} out of range")
    count = width * height
    dtype = np.dtype(">u2") if max_val > 255 else np.dtype("u1")
    raw = blob[pos : pos + count * dtype.itemsize]
    if len(raw) != count * dtype.itemsize:
        raise ValueError(f"{path}: pixel data truncated")
    pixels = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    return Raster(height, width, pixels, float(max_val))


def write_pgm(path: str | Path, raster: Raster) -> None:
    max_val = int(round(raster.max_val))
    if not 0 < max_val < 65536:
        raise ValueError(f"PGM maxval {max_val} out of range")
    dtype = np.dtype(">u2") if max_val > 255 else np.dtype("u1")
    header = f"P5\n{raster.width} {raster.height}\n{max_val}\n".encode("ascii")
    pixels = np.rint(raster.data).astype(dtype).tobytes()
    Path(path).write_bytes(header + pixels)
