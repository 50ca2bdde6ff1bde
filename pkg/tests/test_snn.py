import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import first_spike_step, scalar_column
from spikemotion.core import KernelBuffer
from spikemotion.snn import (
    SnnParams,
    SnnState,
    SpikingLayer,
    lif_step,
    reset_state,
    run_parallel,
    snn_frame_v1,
    snn_frame_v2,
)

P = SnnParams()

# layer-3 spike counts at default parameters, frozen from oracles.scalar_column
LAYER3_AT_DEFAULTS = {0: 0, 64: 0, 128: 1, 255: 3}


def _buffer(values):
    return KernelBuffer.from_array(np.asarray(values, dtype=np.float32))


def _fresh(buf, p=P):
    return SnnState.zeros(buf.width, buf.height, p)


def test_lif_rest_is_fixed_point():
    v, spiked = lif_step(0.0, 0.0, P)
    assert v == 0.0 and not spiked


def test_lif_first_spike_step_seven():
    v, step = 0.0, None
    for n in range(1, 20):
        v, spiked = lif_step(v, 2.0, P)
        if spiked:
            step = n
            break
    assert step == 7
    assert first_spike_step(2.0) == 7
    assert 0.9**7 < 0.5 < 0.9**6


def test_lif_threshold_forces_reset():
    v, spiked = lif_step(0.99, 5.0, P)
    assert spiked and v == P.v_reset


def test_lif_matches_formula():
    p = SnnParams(r_m=2.0, tau_m=5.0, dt=0.5, v_rest=-0.5, v_thresh=10.0)
    v, _ = lif_step(1.0, 3.0, p)
    assert v == pytest.approx(1.0 + 0.1 * (-(1.0 + 0.5) + 2.0 * 3.0), rel=1e-6)


@pytest.mark.parametrize("kernel", [snn_frame_v1, snn_frame_v2])
def test_zero_buffer_gives_zero_grid(kernel):
    buf = _buffer(np.zeros((8, 9)))
    grid, state = kernel(buf, P, _fresh(buf))
    assert grid.shape == (8, 9)
    assert not grid.any()


def test_v2_skips_zero_pixels():
    buf = _buffer(np.zeros((5, 5)))
    _, state = snn_frame_v2(buf, P, _fresh(buf))
    assert state.integrated == 0
    _, state = snn_frame_v1(buf, P, _fresh(buf))
    assert state.integrated == 25


@pytest.mark.parametrize("pixel", sorted(LAYER3_AT_DEFAULTS))
def test_single_pixel_matches_scalar_oracle(pixel):
    values = np.zeros((4, 4), np.float32)
    values[1, 2] = pixel
    buf = _buffer(values)
    grid, state = snn_frame_v1(buf, P, _fresh(buf))
    sums, potentials = scalar_column(pixel)
    assert grid[1, 2] == sums[2] == LAYER3_AT_DEFAULTS[pixel]
    assert np.count_nonzero(grid) == (1 if sums[2] else 0)
    idx = 1 * 4 + 2
    assert state.spike_sum[:, idx].tolist() == sums
    assert state.v_m[:, idx].tolist() == [float(v) for v in potentials]


def test_oracle_with_custom_params(rng):
    p = SnnParams(r_m=1.3, tau_m=7.0, dt=0.7, steps=13, p2c=0.031, s2c=1.7,
                  v_rest=-0.2, v_thresh=0.9, v_reset=-0.4)
    values = rng.integers(0, 256, size=(3, 11)).astype(np.float32)
    buf = _buffer(values)
    state = SnnState.zeros(11, 3, p)
    grid, out = snn_frame_v1(buf, p, state)
    for i, px in enumerate(values.reshape(-1)):
        sums, vs = scalar_column(px, **{k: getattr(p, k) for k in p.__dataclass_fields__})
        assert out.spike_sum[:, i].tolist() == sums
        assert out.v_m[:, i].tolist() == [float(v) for v in vs]


def test_permutation_equivariance(rng):
    values = rng.choice([0.0, 255.0, 128.0, 30.0], size=64).astype(np.float32)
    perm = rng.permutation(64)
    a = _buffer(values.reshape(8, 8))
    b = _buffer(values[perm].reshape(8, 8))
    ga, _ = snn_frame_v1(a, P, _fresh(a))
    gb, _ = snn_frame_v1(b, P, _fresh(b))
    assert np.array_equal(ga.reshape(-1)[perm], gb.reshape(-1))


def test_layer1_monotone_in_input():
    buf = _buffer(np.arange(256, dtype=np.float32).reshape(16, 16))
    _, state = snn_frame_v1(buf, P, _fresh(buf))
    layer1 = state.spike_sum[0]
    assert np.all(np.diff(layer1) >= 0)
    assert state.spike_sum.max() <= P.steps


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float32, st.tuples(st.integers(1, 9), st.integers(1, 9)),
           elements=st.sampled_from([0.0, 0.5, 1.0, 17.0, 128.0, 255.0, 1000.0])),
    st.floats(0.001, 0.2), st.floats(0.0, 5.0), st.integers(1, 20),
)
def test_v2_equals_v1(values, p2c, s2c, steps):
    p = SnnParams(p2c=p2c, s2c=s2c, steps=steps)
    buf = _buffer(values)
    g1, s1 = snn_frame_v1(buf, p, _fresh(buf, p))
    g2, s2 = snn_frame_v2(buf, p, _fresh(buf, p))
    assert np.array_equal(g1, g2)
    assert np.array_equal(s1.spike_sum, s2.spike_sum)
    assert np.array_equal(s1.v_m, s2.v_m)
    assert s1.spike_sum.max(initial=0) <= steps


@pytest.mark.parametrize("kernel", ["v1", "v2"])
@pytest.mark.parametrize("lanes", [1, 2, 4, 8, 16, 32])
def test_run_parallel_is_lane_independent(rng, kernel, lanes):
    values = np.where(rng.random((13, 17)) < 0.3, 255.0, rng.integers(0, 256, (13, 17)))
    buf = _buffer(values)
    ref, ref_state = snn_frame_v1(buf, P, _fresh(buf))
    grid, state = run_parallel(kernel, buf, P, _fresh(buf), lanes=lanes)
    assert np.array_equal(grid, ref)
    assert np.array_equal(state.v_m, ref_state.v_m)


@pytest.mark.parametrize("lanes", [0, 3, 6, 48, -4, 2.0])
def test_run_parallel_rejects_non_power_of_two(lanes):
    buf = _buffer(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="power of two"):
        run_parallel("v1", buf, P, _fresh(buf), lanes=lanes)


def test_run_parallel_more_lanes_than_pixels():
    buf = _buffer([[255.0, 0.0, 255.0]])
    grid, _ = run_parallel("v2", buf, P, _fresh(buf), lanes=16)
    assert grid.tolist() == [[3, 0, 3]]


def test_empty_buffer_rejected():
    with pytest.raises(ValueError):
        _buffer(np.zeros((0, 0)))


def test_length_mismatch_rejected():
    buf = _buffer(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="does not match"):
        snn_frame_v1(buf, P, SnnState.zeros(3, 3))


def test_reset_state():
    state = SnnState.zeros(3, 2)
    state.v_m[:] = 0.7
    state.spike_sum[:] = 4
    fresh = reset_state(state, P)
    assert not fresh.spike_sum.any() and np.all(fresh.v_m == P.v_rest)
    assert fresh.total_neurons == 3 * 6
    again = reset_state(fresh, P)
    assert np.array_equal(again.v_m, fresh.v_m) and np.array_equal(again.spike_sum, fresh.spike_sum)
    buf = _buffer(np.zeros((2, 3)))
    grid, _ = snn_frame_v1(buf, P, fresh)
    assert not grid.any()


@pytest.mark.parametrize(
    "kwargs",
    [dict(tau_m=0), dict(dt=-1), dict(steps=0), dict(v_thresh=0.0),
     dict(v_reset=1.0), dict(p2c=0), dict(s2c=-1), dict(r_m=float("nan"))],
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        SnnParams(**kwargs)


def test_spiking_layer_persist_vm_carries_potential():
    mask = np.zeros((2, 2), np.uint8)
    mask[0, 0] = 255
    fresh = SpikingLayer().fit()
    fresh.transform(mask)
    assert np.all(fresh.state_.v_m[:, 1:] == 0.0)

    persistent = SpikingLayer(persist_vm=True).fit()
    persistent.transform(mask)
    carried = persistent.state_.v_m.copy()
    persistent.transform(mask)
    # a second frame starts from the carried potentials, not from rest
    sums, _ = scalar_column(255, v_init=carried[:, 0])
    assert persistent.state_.spike_sum[:, 0].tolist() == sums
