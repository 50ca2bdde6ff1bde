"""Input validation helpers shared by the estimators and the functional API.

Frames travel through the package as plain numpy arrays:

* gray frame -- ``(height, width)`` ``uint8``
* color frame -- ``(height, width, 3)`` ``uint8``, channels in r, g, b order
* foreground mask -- ``(height, width)`` ``uint8`` holding only 0 and 255

These helpers coerce array-likes into that form or raise ``ValueError``.
"""

import numbers

import numpy as np

FOREGROUND = 255
BACKGROUND = 0


def _as_integer_raster(X, name):
    arr = np.asarray(X)
    if arr.dtype == np.uint8:
        return arr
    if arr.dtype.kind == "b":
        raise ValueError(f"{name} must hold integer intensities, got booleans")
    if arr.dtype.kind in "iu":
        pass
    elif arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError(f"{name} must hold integer intensities")
    else:
        raise ValueError(f"{name} has unsupported dtype {arr.dtype}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValueError(f"{name} intensities must lie in [0, 255]")
    return arr.astype(np.uint8)


def check_gray_frame(X, name="frame"):
    """Return ``X`` as a non-empty 2-D ``uint8`` array."""
    arr = _as_integer_raster(X, name)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (height, width), got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must have positive width and height, got shape {arr.shape}")
    return arr


def check_color_frame(X, name="frame"):
    arr = _as_integer_raster(X, name)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (height, width, 3), got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must have positive width and height, got shape {arr.shape}")
    return arr


def check_mask(X, name="mask"):
    """Return ``X`` as a 2-D ``uint8`` array whose labels are only 0 and 255."""
    arr = check_gray_frame(X, name)
    if not np.all((arr == BACKGROUND) | (arr == FOREGROUND)):
        raise ValueError(f"{name} labels must be 0 or 255")
    return arr


def check_same_shape(a, b, what="frame"):
    if a.shape != b.shape:
        raise ValueError(
            f"{what} dimension mismatch: expected {a.shape[1]}x{a.shape[0]} "
            f"(width x height), got {b.shape[1]}x{b.shape[0]}"
        )


def check_intensity(value, name):
    if not isinstance(value, numbers.Real) or not 0 <= value <= 255:
        raise ValueError(f"{name} must be an intensity in [0, 255], got {value!r}")
    return value


def check_probability(value, name):
    if not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
    return float(value)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def is_power_of_two(n):
    return isinstance(n, numbers.Integral) and not isinstance(n, bool) and n >= 1 and (n & (n - 1)) == 0


def check_lanes(lanes):
    if not is_power_of_two(lanes):
        raise ValueError(
            f"lanes must be a power of two (1, 2, 4, 8, 16, ...); got {lanes!r}. "
            "Non-power-of-two unroll factors waste as many resources as the next power of two."
        )
    return int(lanes)
