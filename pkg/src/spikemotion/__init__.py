"""Motion detection by background subtraction and a per-pixel spiking network."""

from .bench import (
    ConfusionCounts,
    MetricSet,
    RankTable,
    TimingStats,
    accumulate_confusion,
    compute_metrics,
    compute_stats,
    rank_methods,
)
from .config import RunConfig
from .core import KernelBuffer, binarize, buffer_to_mask, mask_to_buffer, to_gray
from .dbs import BackgroundSubtractor, DbsConfig, DbsModel, dbs_apply, dbs_init
from .pipeline import MotionDetector, SequenceSpec, load_dataset, process_sequence
from .postproc import MaskPostprocessor, PostprocConfig, average_filter, finalize_mask, spikes_to_mask
from .snn import (
    SnnParams,
    SnnState,
    SpikingLayer,
    lif_step,
    reset_state,
    run_parallel,
    snn_frame_v1,
    snn_frame_v2,
)

__version__ = "0.1.0"
