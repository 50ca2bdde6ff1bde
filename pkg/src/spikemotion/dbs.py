"""Sample-consensus dynamic background subtraction.

Each pixel keeps a small set of past intensities. A new intensity is
background when enough samples lie within ``match_radius`` of it. Background
pixels occasionally overwrite one of their own samples, or one of a random
neighbor's samples, with the current intensity. Foreground pixels never
touch the model.

All randomness comes from a generator keyed on ``(seed, frame_index)``, so
the mask sequence is a pure function of the seed and the frames.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    BACKGROUND,
    FOREGROUND,
    check_gray_frame,
    check_positive_int,
    check_probability,
    check_same_shape,
)

# 8-neighborhood, row-major order
_NEIGHBOR_OFFSETS = np.array(
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)], dtype=np.int64
)


@dataclass(frozen=True)
class DbsConfig:
    samples_per_pixel: int = 20
    match_radius: int = 20
    min_matches: int = 2
    replace_rate: float = 1 / 16
    neighbor_rate: float = 1 / 16
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.samples_per_pixel, "samples_per_pixel")
        check_positive_int(self.match_radius, "match_radius", minimum=0)
        check_positive_int(self.min_matches, "min_matches")
        if self.min_matches > self.samples_per_pixel:
            raise ValueError(
                f"min_matches ({self.min_matches}) cannot exceed "
                f"samples_per_pixel ({self.samples_per_pixel})"
            )
        check_probability(self.replace_rate, "replace_rate")
        check_probability(self.neighbor_rate, "neighbor_rate")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass
class DbsModel:
    """Per-pixel sample sets, shape ``(height, width, samples_per_pixel)``.

    ``frame_index`` counts frames seen since initialisation and, with the
    seed, fully determines the random stream for the next update.
    """

    samples: np.ndarray
    config: DbsConfig
    frame_index: int = 0
    _shape: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self._shape = self.samples.shape[:2]

    @property
    def height(self):
        return self._shape[0]

    @property
    def width(self):
        return self._shape[1]


def _rng(seed, frame_index):
    return np.random.default_rng([seed, frame_index])


def _clamped_neighbors(rows, cols, directions, height, width):
    offsets = _NEIGHBOR_OFFSETS[directions]
    nr = np.clip(rows + offsets[..., 0], 0, height - 1)
    nc = np.clip(cols + offsets[..., 1], 0, width - 1)
    return nr, nc


def dbs_init(first, cfg=None):
    """Seed a model from the first frame.

    The first ``min_matches`` samples of every pixel are its own intensity,
    so re-applying the first frame is all background. The remaining samples
    are picked at random from the 8-neighborhood, clamped at the border.
    """
    cfg = DbsConfig() if cfg is None else cfg
    first = check_gray_frame(first)
    h, w = first.shape
    n = cfg.samples_per_pixel
    own = cfg.min_matches
    rng = _rng(cfg.seed, 0)
    rows, cols = np.indices((h, w))
    directions = rng.integers(0, 8, size=(h, w, n - own))
    nr, nc = _clamped_neighbors(rows[..., None], cols[..., None], directions, h, w)
    samples = np.empty((h, w, n), dtype=np.uint8)
    samples[..., :own] = first[..., None]
    samples[..., own:] = first[nr, nc]
    return DbsModel(samples=samples, config=cfg, frame_index=0)


def classify(model, frame):
    """Return the foreground mask for ``frame`` without updating the model."""
    dist = np.abs(model.samples.astype(np.int16) - frame[..., None].astype(np.int16))
    matches = np.count_nonzero(dist <= model.config.match_radius, axis=-1)
    background = matches >= model.config.min_matches
    return np.where(background, BACKGROUND, FOREGROUND).astype(np.uint8)


def dbs_apply(model, frame):
    """Classify ``frame`` and return ``(mask, updated_model)``.

    The input model is left untouched. Updates are decided for every pixel
    first, then applied as if visited in row-major order (own-sample write
    before neighbor write), so later writes to the same slot win.
    """
    frame = check_gray_frame(frame)
    if frame.shape != model.samples.shape[:2]:
        check_same_shape(model.samples[..., 0], frame)
    cfg = model.config
    h, w, n = model.samples.shape
    mask = classify(model, frame)
    background = mask == BACKGROUND

    frame_index = model.frame_index + 1
    rng = _rng(cfg.seed, frame_index)
    # draw for every pixel, regardless of label, so the stream layout is fixed
    own_draw = rng.random((h, w))
    own_slot = rng.integers(0, n, size=(h, w))
    nb_draw = rng.random((h, w))
    nb_dir = rng.integers(0, 8, size=(h, w))
    nb_slot = rng.integers(0, n, size=(h, w))

    own = background & (own_draw < cfg.replace_rate)
    nb = background & (nb_draw < cfg.neighbor_rate)

    rows, cols = np.indices((h, w))
    nr, nc = _clamped_neighbors(rows, cols, nb_dir, h, w)
    flat_self = rows * w + cols
    flat_nb = nr * w + nc

    targets = np.concatenate([flat_self[own], flat_nb[nb]])
    slots = np.concatenate([own_slot[own], nb_slot[nb]])
    values = np.concatenate([frame[own], frame[nb]])
    order = np.concatenate([2 * flat_self[own], 2 * flat_self[nb] + 1])

    # conservative update: foreground pixels' sample sets are frozen
    keep = background.reshape(-1)[targets]
    targets, slots, values, order = targets[keep], slots[keep], values[keep], order[keep]

    samples = model.samples.copy()
    if targets.size:
        seq = np.argsort(order, kind="stable")
        targets, slots, values = targets[seq], slots[seq], values[seq]
        cell = targets * n + slots
        # last write per (pixel, slot) wins
        _, last_rev = np.unique(cell[::-1], return_index=True)
        last = cell.size - 1 - last_rev
        flat = samples.reshape(h * w, n)
        flat[targets[last], slots[last]] = values[last]

    return mask, DbsModel(samples=samples, config=cfg, frame_index=frame_index)


class BackgroundSubtractor(BaseEstimator):
    """Stateful foreground extractor with a scikit-learn style interface.

    Parameters
    ----------
    samples_per_pixel : int, default=20
        Background samples kept per pixel.
    match_radius : int, default=20
        Largest intensity distance at which a sample still matches.
    min_matches : int, default=2
        Matching samples needed to call a pixel background.
    replace_rate : float, default=1/16
        Probability that a background pixel refreshes one of its own samples.
    neighbor_rate : float, default=1/16
        Probability that a background pixel writes into a neighbor's samples.
    seed : int, default=0
        Seed of the deterministic update stream.

    Attributes
    ----------
    model_ : DbsModel
        Current background model; advanced by :meth:`apply`.
    """

    def __init__(
        self,
        samples_per_pixel=20,
        match_radius=20,
        min_matches=2,
        replace_rate=1 / 16,
        neighbor_rate=1 / 16,
        seed=0,
    ):
        self.samples_per_pixel = samples_per_pixel
        self.match_radius = match_radius
        self.min_matches = min_matches
        self.replace_rate = replace_rate
        self.neighbor_rate = neighbor_rate
        self.seed = seed

    def get_config(self):
        return DbsConfig(**self.get_params())

    def fit(self, X, y=None):
        """Initialise the background model from the first frame ``X``."""
        self.model_ = dbs_init(X, self.get_config())
        return self

    def apply(self, X):
        """Return the foreground mask of ``X`` and advance the model."""
        check_is_fitted(self, "model_")
        mask, self.model_ = dbs_apply(self.model_, X)
        return mask

    def fit_apply(self, frames):
        """Initialise on the first frame, then return one mask per frame.

        The first frame yields a mask too (typically empty), so outputs
        line up one-to-one with ``frames``.
        """
        frames = iter(frames)
        first = next(frames)
        self.fit(first)
        masks = [self.apply(first)]
        masks.extend(self.apply(frame) for frame in frames)
        return masks
