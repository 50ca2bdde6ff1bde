"""Synthetic moving-square sequences with exact ground truth."""

from pathlib import Path

import numpy as np
from PIL import Image


def moving_square_sequence(
    n_frames=200,
    size=64,
    square=8,
    speed=2,
    warmup=20,
    background=60,
    foreground=200,
    noise=2.0,
    seed=0,
):
    """Return ``(frames, ground_truth)`` lists of ``(size, size)`` uint8 arrays.

    The first ``warmup`` frames show only background. Afterwards a square
    moves diagonally at ``speed`` pixels per frame and bounces off the
    borders. Ground truth is 255 on the square and 0 elsewhere. Gaussian
    noise of std ``noise`` is added to the rendered frames only.
    """
    if square > size:
        raise ValueError("square does not fit in the frame")
    rng = np.random.default_rng(seed)
    frames, gts = [], []
    limit = size - square
    y, x = 0, limit // 3
    dy, dx = speed, speed
    for t in range(n_frames):
        gt = np.zeros((size, size), dtype=np.uint8)
        if t >= warmup:
            gt[y:y + square, x:x + square] = 255
            y, dy = _bounce(y, dy, limit)
            x, dx = _bounce(x, dx, limit)
        img = np.where(gt == 255, foreground, background).astype(np.float64)
        if noise:
            img += rng.normal(0.0, noise, size=img.shape)
        frames.append(np.clip(np.rint(img), 0, 255).astype(np.uint8))
        gts.append(gt)
    return frames, gts


def _bounce(pos, step, limit):
    nxt = pos + step
    if nxt < 0 or nxt > limit:
        step = -step
        nxt = pos + step
    return nxt, step


def write_sequence(root, category, sequence, frames, gts=None, temporal_roi=None):
    """Write frames in the ``<category>/<sequence>/{input,groundtruth}`` layout.

    Frames are numbered from 1 (``in000001.png``, ``gt000001.png``).
    """
    seq_dir = Path(root) / category / sequence
    (seq_dir / "input").mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames, 1):
        Image.fromarray(frame).save(seq_dir / "input" / f"in{i:06d}.png")
    if gts is not None:
        (seq_dir / "groundtruth").mkdir(exist_ok=True)
        for i, gt in enumerate(gts, 1):
            Image.fromarray(gt).save(seq_dir / "groundtruth" / f"gt{i:06d}.png")
    if temporal_roi is not None:
        (seq_dir / "temporalROI.txt").write_text(f"{temporal_roi[0]} {temporal_roi[1]}\n")
    return seq_dir
