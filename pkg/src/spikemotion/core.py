"""Raster helpers: grayscale conversion, binarization, image IO and the
flat buffer handed to the spiking kernels."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ._validation import (
    BACKGROUND,
    FOREGROUND,
    check_color_frame,
    check_gray_frame,
    check_intensity,
    check_mask,
)

# BT.601 luma in thousandths, so rounding can be done exactly in integers
_LUMA_WEIGHTS = np.array([299, 587, 114], dtype=np.int64)


@dataclass(frozen=True)
class KernelBuffer:
    """Row-major single-precision pixel values, one per layer-1 neuron.

    This is the payload that crosses the host/kernel boundary. ``values`` is
    kept read-only so a buffer can be shared between workers.
    """

    values: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32).reshape(-1)
        if self.width < 1 or self.height < 1:
            raise ValueError(f"buffer dimensions must be positive, got {self.width}x{self.height}")
        if values.size != self.width * self.height:
            raise ValueError(
                f"buffer length {values.size} does not match {self.width}x{self.height}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def length(self):
        return self.values.size

    @property
    def shape(self):
        return (self.height, self.width)

    @classmethod
    def from_array(cls, X):
        """Build a buffer from a 2-D array of real pixel values."""
        arr = np.asarray(X, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(arr, width=arr.shape[1], height=arr.shape[0])


def to_gray(frame):
    """Convert an ``(h, w, 3)`` RGB frame to 8-bit luma.

    Uses BT.601 weights (0.299, 0.587, 0.114) with round-half-up.
    """
    rgb = check_color_frame(frame).astype(np.int64)
    gray = (rgb @ _LUMA_WEIGHTS + 500) // 1000
    return np.clip(gray, 0, 255).astype(np.uint8)


def binarize(frame, threshold):
    """Label pixels with intensity >= ``threshold`` as foreground (255)."""
    gray = check_gray_frame(frame)
    check_intensity(threshold, "threshold")
    return np.where(gray >= threshold, FOREGROUND, BACKGROUND).astype(np.uint8)


def mask_to_buffer(mask):
    mask = check_mask(mask)
    return KernelBuffer(mask.astype(np.float32), width=mask.shape[1], height=mask.shape[0])


def buffer_to_mask(buffer, threshold=1.0):
    """Inverse of :func:`mask_to_buffer`: values >= ``threshold`` become 255."""
    values = buffer.values.reshape(buffer.shape)
    return np.where(values >= threshold, FOREGROUND, BACKGROUND).astype(np.uint8)


def read_frame(path):
    """Read an 8-bit image file as a gray frame; color goes through :func:`to_gray`."""
    with Image.open(path) as img:
        if img.mode in ("L", "LA", "1"):
            return check_gray_frame(np.asarray(img.convert("L")), name=str(path))
        if img.mode not in ("RGB", "RGBA", "P", "CMYK", "YCbCr"):
            raise ValueError(f"{path}: only 8-bit images are supported (mode {img.mode})")
        return to_gray(np.asarray(img.convert("RGB")))


def write_mask(path, mask):
    mask = check_mask(mask)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask).save(path, format="PNG")
