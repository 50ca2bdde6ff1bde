"""Change-detection evaluation: confusion counts, the eight metrics,
per-category rankings and timing statistics, plus their CSV reports."""

import csv
from dataclasses import astuple, dataclass, fields
from statistics import fmean

import numpy as np
from scipy.stats import rankdata

from ._validation import FOREGROUND, check_gray_frame, check_mask, check_same_shape

# ground-truth label conventions
GT_STATIC = 0
GT_SHADOW = 50
GT_OUTSIDE_ROI = 85
GT_UNKNOWN = 170
GT_MOTION = 255

# report column order; True means higher is better
METRICS = ("re", "sp", "fpr", "fnr", "wcr", "ccr", "f1", "pr")
METRIC_LABELS = {
    "re": "Re", "sp": "Sp", "fpr": "FPR", "fnr": "FNR",
    "wcr": "WCR", "ccr": "CCR", "f1": "F1", "pr": "Pr",
}
HIGHER_IS_BETTER = {
    "re": True, "sp": True, "fpr": False, "fnr": False,
    "wcr": False, "ccr": True, "f1": True, "pr": True,
}

METRICS_HEADER = ["method", "category"] + [METRIC_LABELS[m] for m in METRICS]
RANKS_HEADER = ["method", "RC"] + [f"{METRIC_LABELS[m]}_rank" for m in METRICS]
TIMING_HEADER = ["category/sequence", "num_images", "height", "width", "snn_seconds", "fps"]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def __add__(self, other):
        if not isinstance(other, ConfusionCounts):
            return NotImplemented
        return ConfusionCounts(*(a + b for a, b in zip(astuple(self), astuple(other))))

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


def accumulate_confusion(result, gt, acc=None, roi=None):
    """Add the counts of one result/ground-truth pair to ``acc``.

    Ground truth 255 is motion, 0 and 50 (shadow) are background; every
    other label (85 outside ROI, 170 unknown, anything else) is skipped.
    ``roi``, when given, excludes pixels where it is zero.
    """
    acc = ConfusionCounts() if acc is None else acc
    result = check_mask(result, "result")
    gt = check_gray_frame(gt, "ground truth")
    check_same_shape(gt, result)
    motion = gt == GT_MOTION
    static = (gt == GT_STATIC) | (gt == GT_SHADOW)
    if roi is not None:
        roi = check_gray_frame(roi, "roi")
        check_same_shape(gt, roi)
        inside = roi > 0
        motion &= inside
        static &= inside
    detected = result == FOREGROUND
    return acc + ConfusionCounts(
        tp=int(np.count_nonzero(motion & detected)),
        tn=int(np.count_nonzero(static & ~detected)),
        fp=int(np.count_nonzero(static & detected)),
        fn=int(np.count_nonzero(motion & ~detected)),
    )


@dataclass(frozen=True)
class MetricSet:
    re: float
    sp: float
    fpr: float
    fnr: float
    wcr: float
    ccr: float
    pr: float
    f1: float

    def as_row(self):
        """Values in report column order."""
        return [getattr(self, m) for m in METRICS]


def _ratio(num, den):
    return num / den if den else 0.0


def compute_metrics(c):
    """The eight change-detection metrics of a confusion matrix.

    A zero denominator yields 0, except that recall and precision are 1
    when there is nothing to find and nothing was falsely found
    (``tp + fn == 0`` and ``fp == 0``).
    """
    nothing_to_find = c.tp + c.fn == 0 and c.fp == 0
    re = 1.0 if nothing_to_find else _ratio(c.tp, c.tp + c.fn)
    pr = 1.0 if nothing_to_find else _ratio(c.tp, c.tp + c.fp)
    return MetricSet(
        re=re,
        sp=_ratio(c.tn, c.tn + c.fp),
        fpr=_ratio(c.fp, c.fp + c.tn),
        fnr=_ratio(c.fn, c.fn + c.tp),
        wcr=_ratio(c.fn + c.fp, c.total),
        ccr=_ratio(c.tp + c.tn, c.total),
        pr=pr,
        f1=_ratio(2 * pr * re, pr + re),
    )


def mean_metrics(metric_sets):
    """Element-wise mean, used to average per-sequence metrics within a category."""
    metric_sets = list(metric_sets)
    if not metric_sets:
        raise ValueError("cannot average an empty list of metric sets")
    return MetricSet(**{
        f.name: fmean(getattr(m, f.name) for m in metric_sets) for f in fields(MetricSet)
    })


@dataclass
class RankTable:
    """Competition ranks of methods per category and metric.

    ``per_category_ranks[(method, category)][metric]`` is the rank of the
    method among all methods in that category. ``r`` averages those eight
    ranks per (method, category); ``rc`` averages ``r`` across categories.
    """

    methods: list
    categories: list
    per_category_ranks: dict
    r: dict
    rc: dict

    def metric_rank(self, method, metric):
        """Mean rank of ``method`` on ``metric`` over all categories."""
        return fmean(self.per_category_ranks[(method, c)][metric] for c in self.categories)


def rank_methods(values):
    """Rank methods from a ``{(method, category): MetricSet}`` mapping.

    Every method must appear in every category. Ties share the lowest rank.
    """
    methods = sorted({m for m, _ in values})
    categories = sorted({c for _, c in values})
    missing = [(m, c) for m in methods for c in categories if (m, c) not in values]
    if missing:
        raise ValueError(f"missing metric sets for (method, category) pairs: {missing}")
    if not methods:
        raise ValueError("nothing to rank")

    per_category = {(m, c): {} for m in methods for c in categories}
    for c in categories:
        for metric in METRICS:
            column = np.array([getattr(values[(m, c)], metric) for m in methods], dtype=float)
            keys = -column if HIGHER_IS_BETTER[metric] else column
            for m, rank in zip(methods, rankdata(keys, method="min")):
                per_category[(m, c)][metric] = int(rank)

    r = {key: fmean(ranks.values()) for key, ranks in per_category.items()}
    rc = {m: fmean(r[(m, c)] for c in categories) for m in methods}
    return RankTable(methods, categories, per_category, r, rc)


@dataclass(frozen=True)
class TimingStats:
    frames: int
    snn_seconds_mean: float
    fps: float


def compute_stats(frame_timings):
    """Summarise ``[(snn_seconds, total_seconds), ...]`` per-frame timings."""
    frame_timings = list(frame_timings)
    if not frame_timings:
        raise ValueError("no frame timings to summarise")
    if any(s < 0 or t < 0 for s, t in frame_timings):
        raise ValueError("frame timings must be non-negative")
    total = sum(t for _, t in frame_timings)
    n = len(frame_timings)
    fps = n / total if total > 0 else float("inf")
    return TimingStats(frames=n, snn_seconds_mean=fmean(s for s, _ in frame_timings), fps=fps)


def write_metrics_csv(path, rows):
    """``rows``: iterable of ``(method, category, MetricSet)``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for method, category, metrics in rows:
            writer.writerow([method, category] + [f"{v:.6f}" for v in metrics.as_row()])


def write_ranks_csv(path, table):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RANKS_HEADER)
        for method in sorted(table.methods, key=lambda m: (table.rc[m], m)):
            writer.writerow(
                [method, f"{table.rc[method]:.6f}"]
                + [f"{table.metric_rank(method, metric):.6f}" for metric in METRICS]
            )


def write_timing_csv(path, rows):
    """``rows``: iterable of ``(name, num_images, height, width, TimingStats)``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMING_HEADER)
        for name, num_images, height, width, stats in rows:
            writer.writerow(
                [name, num_images, height, width, f"{stats.snn_seconds_mean:.6f}", f"{stats.fps:.2f}"]
            )


def read_metrics_csv(path):
    """Inverse of :func:`write_metrics_csv`; returns ``{(method, category): MetricSet}``."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            out[(row["method"], row["category"])] = MetricSet(
                **{m: float(row[METRIC_LABELS[m]]) for m in METRICS}
            )
    return out
