"""Three-layer leaky integrate-and-fire network with 1:1 connectivity.

Every pixel owns one neuron per layer. Per frame, layer 1 integrates a
current proportional to the pixel value, layer 2 integrates a current
proportional to layer 1's running spike count, and layer 3 integrates the
sum of the layer-2 current and a current proportional to layer 2's running
spike count. The layer-3 spike counts are the kernel output.

Two kernels are provided. ``v1`` integrates every neuron; ``v2`` skips
neurons whose input value is not positive. From a reset state the two give
identical results, since a neuron at rest with zero input never fires.

All arithmetic is single precision and strictly elementwise, so splitting
the neurons across workers cannot change any output bit.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_lanes, check_positive_int
from .core import KernelBuffer, mask_to_buffer

NUM_LAYERS = 3
KERNELS = ("v1", "v2")

_f32 = np.float32


@dataclass(frozen=True)
class SnnParams:
    r_m: float = 1.0
    tau_m: float = 10.0
    dt: float = 1.0
    steps: int = 10
    p2c: float = 0.02
    s2c: float = 2.0
    v_rest: float = 0.0
    v_thresh: float = 1.0
    v_reset: float = 0.0

    def __post_init__(self):
        for name in ("r_m", "tau_m", "dt", "p2c", "s2c", "v_rest", "v_thresh", "v_reset"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
        check_positive_int(self.steps, "steps")
        if self.tau_m <= 0:
            raise ValueError(f"tau_m must be > 0, got {self.tau_m}")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.v_thresh <= self.v_rest:
            raise ValueError("v_thresh must be greater than v_rest")
        if self.v_reset >= self.v_thresh:
            raise ValueError("v_reset must be below v_thresh")
        if self.p2c <= 0:
            raise ValueError(f"p2c must be > 0, got {self.p2c}")
        if self.s2c < 0:
            raise ValueError(f"s2c must be >= 0, got {self.s2c}")


@dataclass
class SnnState:
    """Membrane potentials and spike counts for all ``3 * width * height`` neurons.

    ``v_m`` is ``float32`` and ``spike_sum`` is ``int32``, both shaped
    ``(3, width * height)``. ``integrated`` records how many neurons the last
    kernel call actually simulated.
    """

    v_m: np.ndarray
    spike_sum: np.ndarray
    width: int
    height: int
    integrated: int = 0

    @classmethod
    def zeros(cls, width, height, params=None):
        params = SnnParams() if params is None else params
        n = width * height
        v_m = np.full((NUM_LAYERS, n), params.v_rest, dtype=np.float32)
        return cls(v_m, np.zeros((NUM_LAYERS, n), dtype=np.int32), width, height)

    @property
    def num_pixels(self):
        return self.width * self.height

    @property
    def total_neurons(self):
        return NUM_LAYERS * self.num_pixels


def reset_state(state, params=None):
    """Return a copy of ``state`` with every potential at rest and no spikes."""
    params = SnnParams() if params is None else params
    return SnnState.zeros(state.width, state.height, params)


def _step_constant(p):
    return _f32(p.dt) / _f32(p.tau_m)


def lif_step(v, i_in, p=None):
    """Advance one neuron by one Euler step; returns ``(v_next, spiked)``."""
    p = SnnParams() if p is None else p
    v = _f32(v)
    v_cand = v + _step_constant(p) * (-(v - _f32(p.v_rest)) + _f32(p.r_m) * _f32(i_in))
    if v_cand >= _f32(p.v_thresh):
        return _f32(p.v_reset), True
    return v_cand, False


def _lif_update(v, current, k, p):
    """Vectorised :func:`lif_step`, in place on ``v``; returns the spike flags."""
    v += k * (-(v - _f32(p.v_rest)) + _f32(p.r_m) * current)
    spiked = v >= _f32(p.v_thresh)
    v[spiked] = _f32(p.v_reset)
    return spiked


def _integrate(values, v_m, p):
    """Run all steps for a column block. ``v_m`` (3, n) is updated in place."""
    n = values.shape[0]
    sums = np.zeros((NUM_LAYERS, n), dtype=np.int32)
    if n == 0:
        return sums
    k = _step_constant(p)
    s2c = _f32(p.s2c)
    i_s = values * _f32(p.p2c)
    v1, v2, v3 = v_m
    for _ in range(p.steps):
        sums[0] += _lif_update(v1, i_s, k, p)
        i_l2 = sums[0].astype(np.float32) * s2c
        sums[1] += _lif_update(v2, i_l2, k, p)
        i_l3 = sums[1].astype(np.float32) * s2c
        sums[2] += _lif_update(v3, i_l2 + i_l3, k, p)
    return sums


def _kernel_v1(values, v_m, p):
    v_m = v_m.copy()
    sums = _integrate(values, v_m, p)
    return sums, v_m, values.shape[0]


def _kernel_v2(values, v_m, p):
    v_m = v_m.copy()
    sums = np.zeros((NUM_LAYERS, values.shape[0]), dtype=np.int32)
    active = np.flatnonzero(values > 0.0)
    if active.size:
        sub_v = v_m[:, active]
        sums[:, active] = _integrate(values[active], sub_v, p)
        v_m[:, active] = sub_v
    return sums, v_m, active.size


_KERNEL_FUNCS = {"v1": _kernel_v1, "v2": _kernel_v2}


def _check_inputs(buffer, state):
    if not isinstance(buffer, KernelBuffer):
        raise TypeError(f"expected a KernelBuffer, got {type(buffer).__name__}")
    if buffer.length != state.num_pixels:
        raise ValueError(
            f"buffer length {buffer.length} does not match state of "
            f"{state.width}x{state.height} = {state.num_pixels} pixels"
        )


def _finish(buffer, sums, v_m, integrated):
    state = SnnState(v_m, sums, buffer.width, buffer.height, integrated)
    return sums[2].reshape(buffer.shape), state


def snn_frame_v1(buffer, p, state):
    """Integrate every neuron for one frame.

    Returns ``(grid, new_state)`` where ``grid`` is the ``(height, width)``
    array of layer-3 spike counts. Spike counts start from zero; potentials
    start from ``state`` (reset it first for per-frame semantics).
    """
    _check_inputs(buffer, state)
    return _finish(buffer, *_kernel_v1(buffer.values, state.v_m, p))


def snn_frame_v2(buffer, p, state):
    """Like :func:`snn_frame_v1` but neurons with value <= 0 are skipped."""
    _check_inputs(buffer, state)
    return _finish(buffer, *_kernel_v2(buffer.values, state.v_m, p))


def _resolve_kernel(kernel):
    if callable(kernel):
        for name, frame_fn in (("v1", snn_frame_v1), ("v2", snn_frame_v2)):
            if kernel is frame_fn:
                return _KERNEL_FUNCS[name]
        raise ValueError(f"unknown kernel function {kernel!r}")
    if kernel not in _KERNEL_FUNCS:
        raise ValueError(f"kernel must be one of {KERNELS}, got {kernel!r}")
    return _KERNEL_FUNCS[kernel]


def run_parallel(kernel, buffer, p, state, lanes=16, max_workers=None):
    """Run ``kernel`` over ``lanes`` contiguous neuron chunks in a thread pool.

    ``lanes`` must be a power of two. Chunks own disjoint column ranges of
    the state, so the result is bit-identical to ``lanes=1``.
    """
    fn = _resolve_kernel(kernel)
    lanes = check_lanes(lanes)
    _check_inputs(buffer, state)
    n = buffer.length
    bounds = np.linspace(0, n, lanes + 1).astype(np.int64)
    chunks = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    sums = np.empty((NUM_LAYERS, n), dtype=np.int32)
    v_m = np.empty((NUM_LAYERS, n), dtype=np.float32)
    counts = [0] * len(chunks)

    def work(i):
        lo, hi = chunks[i]
        s, v, c = fn(buffer.values[lo:hi], state.v_m[:, lo:hi], p)
        sums[:, lo:hi] = s
        v_m[:, lo:hi] = v
        counts[i] = c

    if len(chunks) == 1:
        work(0)
    else:
        workers = max_workers or min(len(chunks), os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(len(chunks))))
    return _finish(buffer, sums, v_m, sum(counts))


class SpikingLayer(TransformerMixin, BaseEstimator):
    """Transform foreground masks into layer-3 spike-count grids.

    Parameters
    ----------
    r_m, tau_m, dt, steps, p2c, s2c, v_rest, v_thresh, v_reset
        Neuron constants, see :class:`SnnParams`.
    kernel : {"v1", "v2"}, default="v1"
        ``"v2"`` skips neurons with zero input.
    lanes : int, default=16
        Number of contiguous neuron chunks; must be a power of two.
    persist_vm : bool, default=False
        Keep membrane potentials between frames instead of resetting them.
        Spike counts are always per frame. With persistence on, ``v1`` and
        ``v2`` are no longer guaranteed to agree.

    Attributes
    ----------
    params_ : SnnParams
    state_ : SnnState or None
        State after the last call to :meth:`transform`.
    """

    def __init__(
        self,
        r_m=1.0,
        tau_m=10.0,
        dt=1.0,
        steps=10,
        p2c=0.02,
        s2c=2.0,
        v_rest=0.0,
        v_thresh=1.0,
        v_reset=0.0,
        kernel="v1",
        lanes=16,
        persist_vm=False,
    ):
        self.r_m = r_m
        self.tau_m = tau_m
        self.dt = dt
        self.steps = steps
        self.p2c = p2c
        self.s2c = s2c
        self.v_rest = v_rest
        self.v_thresh = v_thresh
        self.v_reset = v_reset
        self.kernel = kernel
        self.lanes = lanes
        self.persist_vm = persist_vm

    def get_snn_params(self):
        names = SnnParams.__dataclass_fields__
        return SnnParams(**{k: v for k, v in self.get_params().items() if k in names})

    def fit(self, X=None, y=None):
        """Validate parameters and clear any carried state. ``X`` is ignored."""
        self.params_ = self.get_snn_params()
        _resolve_kernel(self.kernel)
        check_lanes(self.lanes)
        self.state_ = None
        return self

    def reset(self):
        check_is_fitted(self, "params_")
        self.state_ = None
        return self

    def transform(self, X):
        """Return the ``(height, width)`` layer-3 spike counts for mask ``X``."""
        check_is_fitted(self, "params_")
        buffer = X if isinstance(X, KernelBuffer) else mask_to_buffer(X)
        state = self.state_
        if state is None or not self.persist_vm or (state.width, state.height) != (buffer.width, buffer.height):
            state = SnnState.zeros(buffer.width, buffer.height, self.params_)
        grid, self.state_ = run_parallel(self.kernel, buffer, self.params_, state, self.lanes)
        return grid
