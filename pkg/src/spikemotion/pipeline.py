"""Per-frame pipeline, dataset discovery and sequence processing.

A frame goes through: read, gray conversion, background subtraction,
mask-to-buffer, spiking kernel, spike thresholding, average filtering and
re-binarization, write.
"""

import logging
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from ._validation import check_gray_frame
from .bench import (
    ConfusionCounts,
    accumulate_confusion,
    compute_metrics,
    compute_stats,
    mean_metrics,
)
from .core import mask_to_buffer, read_frame, write_mask
from .dbs import BackgroundSubtractor
from .postproc import MaskPostprocessor
from .snn import SpikingLayer

log = logging.getLogger(__name__)

INPUT_PATTERN = re.compile(r"^in(\d+)\.(?:jpe?g|png|pgm|bmp)$", re.IGNORECASE)
GT_TEMPLATE = "gt{:06d}.png"
OUTPUT_TEMPLATE = "bin{:06d}.png"
ROI_NAMES = ("ROI.bmp", "ROI.png", "roi.bmp", "roi.png")


class SequenceError(RuntimeError):
    """A sequence could not be processed and was aborted."""


class MotionDetector(BaseEstimator):
    """Background subtraction followed by the spiking network and mask cleanup.

    Parameters
    ----------
    subtractor : BackgroundSubtractor, optional
    spiking : SpikingLayer, optional
    postprocessor : MaskPostprocessor, optional
        Defaults are used for any stage left as ``None``. Nested parameters
        are reachable through ``get_params`` / ``set_params``, e.g.
        ``spiking__kernel``.

    Attributes
    ----------
    last_snn_seconds_ : float
        Wall-clock time of the spiking kernel on the last frame.
    """

    def __init__(self, subtractor=None, spiking=None, postprocessor=None):
        self.subtractor = subtractor
        self.spiking = spiking
        self.postprocessor = postprocessor

    def fit(self, X, y=None):
        """Initialise every stage from the first frame ``X``."""
        self.subtractor_ = clone(self.subtractor) if self.subtractor is not None else BackgroundSubtractor()
        self.spiking_ = clone(self.spiking) if self.spiking is not None else SpikingLayer()
        self.postprocessor_ = (
            clone(self.postprocessor) if self.postprocessor is not None else MaskPostprocessor()
        )
        self.subtractor_.fit(X)
        self.spiking_.fit()
        self.postprocessor_.fit()
        self.last_snn_seconds_ = 0.0
        return self

    def apply(self, X):
        """Return the final motion mask of frame ``X`` and advance the model."""
        check_is_fitted(self, "subtractor_")
        fg = self.subtractor_.apply(X)
        buffer = mask_to_buffer(fg)
        start = time.perf_counter()
        grid = self.spiking_.transform(buffer)
        self.last_snn_seconds_ = time.perf_counter() - start
        return self.postprocessor_.transform(grid)

    def fit_apply(self, frames):
        """Initialise on the first frame and return one mask per frame."""
        frames = list(frames)
        if not frames:
            raise ValueError("need at least one frame")
        self.fit(frames[0])
        return [self.apply(f) for f in frames]


@dataclass
class SequenceSpec:
    category: str
    sequence: str
    input_dir: Path
    gt_dir: Path | None = None
    temporal_roi: tuple | None = None
    spatial_roi: Path | None = None

    def __post_init__(self):
        if self.temporal_roi is not None and self.temporal_roi[0] > self.temporal_roi[1]:
            raise ValueError(f"temporal ROI start after end: {self.temporal_roi}")

    @property
    def name(self):
        return f"{self.category}/{self.sequence}"

    def frames(self):
        """``[(frame_number, path), ...]`` sorted by frame number."""
        found = []
        for path in self.input_dir.iterdir():
            m = INPUT_PATTERN.match(path.name)
            if m:
                found.append((int(m.group(1)), path))
        return sorted(found)

    def in_temporal_roi(self, number):
        if self.temporal_roi is None:
            return True
        first, last = self.temporal_roi
        return first <= number <= last


@dataclass
class SequenceResult:
    spec: SequenceSpec
    num_images: int
    height: int
    width: int
    stats: object
    counts: ConfusionCounts | None = None
    output_dir: Path | None = None
    masks_written: list = field(default_factory=list)


def _read_temporal_roi(path):
    parts = path.read_text().split()
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {len(parts)} fields")
    first, last = (int(p) for p in parts)
    if first > last:
        raise ValueError(f"start {first} after end {last}")
    return first, last


def load_dataset(root):
    """Discover ``<category>/<sequence>/input`` directories under ``root``."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} is not a readable directory")
    specs = []
    for category in sorted(p for p in root.iterdir() if p.is_dir()):
        for seq in sorted(p for p in category.iterdir() if p.is_dir()):
            input_dir = seq / "input"
            if not input_dir.is_dir():
                continue
            gt_dir = seq / "groundtruth"
            roi = None
            roi_file = seq / "temporalROI.txt"
            if roi_file.is_file():
                try:
                    roi = _read_temporal_roi(roi_file)
                except ValueError as exc:
                    log.warning("%s/%s: ignoring malformed %s (%s)", category.name, seq.name, roi_file.name, exc)
            spatial = next((seq / n for n in ROI_NAMES if (seq / n).is_file()), None)
            specs.append(SequenceSpec(
                category=category.name,
                sequence=seq.name,
                input_dir=input_dir,
                gt_dir=gt_dir if gt_dir.is_dir() else None,
                temporal_roi=roi,
                spatial_roi=spatial,
            ))
    return specs


def _load(path, what):
    try:
        return read_frame(path)
    except (OSError, ValueError) as exc:
        raise SequenceError(f"cannot read {what} {path}: {exc}") from exc


def build_detector(cfg):
    """A fresh :class:`MotionDetector` configured from a :class:`RunConfig`."""
    return MotionDetector(
        subtractor=BackgroundSubtractor(**asdict(cfg.dbs)),
        spiking=SpikingLayer(
            **asdict(cfg.snn), kernel=cfg.kernel, lanes=cfg.lanes, persist_vm=cfg.persist_vm
        ),
        postprocessor=MaskPostprocessor(**asdict(cfg.post)),
    )


def process_sequence(spec, cfg, evaluate=None):
    """Run every frame of ``spec`` through the pipeline and write the masks.

    Ground truth inside the temporal ROI is scored when ``evaluate`` is true
    (default: ``cfg.bench``) and the sequence has a ground-truth directory.
    Raises :class:`SequenceError` on unreadable frames or a size change.
    """
    evaluate = cfg.bench if evaluate is None else evaluate
    frames = spec.frames()
    if not frames:
        raise SequenceError(f"{spec.name}: no input frames in {spec.input_dir}")
    out_dir = Path(cfg.out_dir) / spec.category / spec.sequence
    out_dir.mkdir(parents=True, exist_ok=True)

    score = evaluate and spec.gt_dir is not None
    roi = _load(spec.spatial_roi, "spatial ROI") if score and spec.spatial_roi else None
    counts = ConfusionCounts() if score else None

    detector = build_detector(cfg)
    timings = []
    written = []
    shape = None
    for number, path in frames:
        start = time.perf_counter()
        gray = _load(path, "frame")
        if shape is None:
            shape = gray.shape
            detector.fit(gray)
        elif gray.shape != shape:
            raise SequenceError(
                f"{spec.name}: frame {path.name} is {gray.shape[1]}x{gray.shape[0]}, "
                f"expected {shape[1]}x{shape[0]}"
            )
        mask = detector.apply(gray)
        out_path = out_dir / OUTPUT_TEMPLATE.format(number)
        write_mask(out_path, mask)
        written.append(out_path)
        timings.append((detector.last_snn_seconds_, time.perf_counter() - start))

        if score and spec.in_temporal_roi(number):
            gt_path = spec.gt_dir / GT_TEMPLATE.format(number)
            if gt_path.is_file():
                gt = _load(gt_path, "ground truth")
                try:
                    counts = accumulate_confusion(mask, gt, counts, roi)
                except ValueError as exc:
                    raise SequenceError(f"{spec.name}: {exc}") from exc
            else:
                log.debug("%s: no ground truth for frame %d", spec.name, number)

    return SequenceResult(
        spec=spec,
        num_images=len(frames),
        height=shape[0],
        width=shape[1],
        stats=compute_stats(timings),
        counts=counts,
        output_dir=out_dir,
        masks_written=written,
    )


def evaluate_results(specs, results_root):
    """Score an existing result tree against ground truth.

    Looks for ``<results_root>/<category>/<sequence>/bin%06d.png``; returns
    ``{category: [MetricSet per sequence]}`` for sequences with ground truth.
    """
    results_root = Path(results_root)
    per_category = {}
    for spec in specs:
        if spec.gt_dir is None:
            continue
        roi = _load(spec.spatial_roi, "spatial ROI") if spec.spatial_roi else None
        counts = ConfusionCounts()
        for number, _ in spec.frames():
            if not spec.in_temporal_roi(number):
                continue
            gt_path = spec.gt_dir / GT_TEMPLATE.format(number)
            if not gt_path.is_file():
                continue
            result_path = results_root / spec.category / spec.sequence / OUTPUT_TEMPLATE.format(number)
            if not result_path.is_file():
                raise SequenceError(f"{spec.name}: missing result {result_path}")
            result = _load(result_path, "result")
            counts = accumulate_confusion(result, _load(gt_path, "ground truth"), counts, roi)
        per_category.setdefault(spec.category, []).append(compute_metrics(counts))
    return per_category


def category_metrics(per_sequence):
    """Average per-sequence metric sets within each category."""
    return {cat: mean_metrics(ms) for cat, ms in sorted(per_sequence.items())}


def detect(frames, **params):
    """Convenience: run a :class:`MotionDetector` over in-memory gray frames."""
    frames = [check_gray_frame(f) for f in frames]
    detector = MotionDetector(**params)
    return np.stack(detector.fit_apply(frames))
