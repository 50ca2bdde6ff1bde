"""Turn layer-3 spike counts into the final motion mask."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import (
    BACKGROUND,
    FOREGROUND,
    check_gray_frame,
    check_intensity,
    check_mask,
    check_positive_int,
)
from .core import binarize


@dataclass(frozen=True)
class PostprocConfig:
    spike_threshold: int = 1
    filter_size: int = 3
    refire_threshold: int = 128

    def __post_init__(self):
        check_positive_int(self.spike_threshold, "spike_threshold")
        _check_filter_size(self.filter_size)
        check_intensity(self.refire_threshold, "refire_threshold")


def _check_filter_size(size, frame_shape=None):
    check_positive_int(size, "filter_size")
    if size % 2 == 0:
        raise ValueError(f"filter_size must be odd, got {size}")
    if frame_shape is not None and size > min(frame_shape):
        raise ValueError(
            f"filter_size {size} exceeds the smaller frame side {min(frame_shape)}"
        )


def spikes_to_mask(grid, cfg=None):
    """Foreground wherever the spike count reaches ``cfg.spike_threshold``."""
    cfg = PostprocConfig() if cfg is None else cfg
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError(f"spike grid must be 2-D, got shape {grid.shape}")
    if grid.size and grid.min() < 0:
        raise ValueError("spike counts must be non-negative")
    return np.where(grid >= cfg.spike_threshold, FOREGROUND, BACKGROUND).astype(np.uint8)


def average_filter(frame, size):
    """Box mean over ``size x size`` windows with replicated borders.

    Sums are taken in integers and rounded half-up, so the result is exact.
    """
    frame = check_gray_frame(frame)
    _check_filter_size(size, frame.shape)
    if size == 1:
        return frame.copy()
    area = size * size
    sums = ndimage.correlate(
        frame.astype(np.int64), np.ones((size, size), dtype=np.int64), mode="nearest"
    )
    return ((2 * sums + area) // (2 * area)).astype(np.uint8)


def finalize_mask(mask, cfg=None):
    """Average-filter the mask and re-binarize it to drop isolated speckle."""
    cfg = PostprocConfig() if cfg is None else cfg
    mask = check_mask(mask)
    return binarize(average_filter(mask, cfg.filter_size), cfg.refire_threshold)


class MaskPostprocessor(TransformerMixin, BaseEstimator):
    """Threshold spike counts, smooth, and re-threshold.

    Parameters
    ----------
    spike_threshold : int, default=1
        Minimum layer-3 spike count for a pixel to count as moving.
    filter_size : int, default=3
        Odd side length of the averaging window.
    refire_threshold : int, default=128
        Intensity at which the smoothed mask is re-binarized.
    """

    def __init__(self, spike_threshold=1, filter_size=3, refire_threshold=128):
        self.spike_threshold = spike_threshold
        self.filter_size = filter_size
        self.refire_threshold = refire_threshold

    def get_config(self):
        return PostprocConfig(**self.get_params())

    def fit(self, X=None, y=None):
        self.config_ = self.get_config()
        return self

    def transform(self, X):
        cfg = getattr(self, "config_", None) or self.get_config()
        return finalize_mask(spikes_to_mask(X, cfg), cfg)
