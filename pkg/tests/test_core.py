import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spikemotion.core import (
    KernelBuffer,
    binarize,
    buffer_to_mask,
    mask_to_buffer,
    read_frame,
    to_gray,
    write_mask,
)


def _color(rgb, shape=(2, 3)):
    return np.broadcast_to(np.array(rgb, dtype=np.uint8), shape + (3,)).copy()


@pytest.mark.parametrize(
    "rgb, expected",
    [((255, 255, 255), 255), ((0, 0, 0), 0), ((255, 0, 0), 76), ((0, 255, 0), 150), ((0, 0, 255), 29)],
)
def test_to_gray_known_values(rgb, expected):
    out = to_gray(_color(rgb))
    assert out.dtype == np.uint8
    assert out.shape == (2, 3)
    assert np.all(out == expected)


def test_to_gray_matches_float_arithmetic(rng):
    frame = rng.integers(0, 256, size=(7, 5, 3), dtype=np.uint8)
    r, g, b = (frame[..., i].astype(int) for i in range(3))
    for y in range(7):
        for x in range(5):
            exact = (299 * r[y, x] + 587 * g[y, x] + 114 * b[y, x]) / 1000
            assert to_gray(frame)[y, x] == int(np.floor(exact + 0.5))


def test_to_gray_rejects_gray_input():
    with pytest.raises(ValueError):
        to_gray(np.zeros((3, 3), dtype=np.uint8))


def test_binarize_examples():
    assert np.all(binarize(np.zeros((3, 3), np.uint8), 128) == 0)
    assert np.all(binarize(np.full((3, 3), 255, np.uint8), 128) == 255)
    out = binarize(np.array([[100, 128, 200]], dtype=np.uint8), 128)
    assert out.tolist() == [[0, 255, 255]]


def test_binarize_rejects_bad_threshold():
    with pytest.raises(ValueError):
        binarize(np.zeros((2, 2), np.uint8), 300)


@given(arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(1, 6))),
       st.integers(0, 255), st.integers(1, 255))
def test_binarize_is_stable_under_rebinarization(frame, t, t2):
    mask = binarize(frame, t)
    assert np.array_equal(binarize(mask, t2), mask)
    assert mask.shape == frame.shape


def test_mask_to_buffer_examples():
    buf = mask_to_buffer(np.array([[0, 255]], dtype=np.uint8))
    assert buf.values.tolist() == [0.0, 255.0]
    assert buf.length == 2 and buf.values.dtype == np.float32
    buf = mask_to_buffer(np.array([[255, 0], [0, 255]], dtype=np.uint8))
    assert buf.values.tolist() == [255.0, 0.0, 0.0, 255.0]
    assert np.all(mask_to_buffer(np.zeros((4, 4), np.uint8)).values == 0.0)


@given(arrays(np.bool_, st.tuples(st.integers(1, 8), st.integers(1, 8))))
def test_buffer_round_trip(bits):
    mask = np.where(bits, 255, 0).astype(np.uint8)
    assert np.array_equal(buffer_to_mask(mask_to_buffer(mask)), mask)


def test_mask_to_buffer_rejects_non_binary():
    with pytest.raises(ValueError, match="0 or 255"):
        mask_to_buffer(np.array([[0, 7]], dtype=np.uint8))


def test_kernel_buffer_is_read_only_and_checked():
    buf = KernelBuffer.from_array(np.ones((2, 3)))
    assert buf.shape == (2, 3)
    with pytest.raises(ValueError):
        buf.values[0] = 5
    with pytest.raises(ValueError):
        KernelBuffer(np.ones(5), width=2, height=3)


def test_png_round_trip(tmp_path):
    mask = np.array([[0, 255, 0], [255, 255, 0]], dtype=np.uint8)
    write_mask(tmp_path / "sub" / "m.png", mask)
    assert np.array_equal(read_frame(tmp_path / "sub" / "m.png"), mask)


def test_read_color_png_converts_to_gray(tmp_path):
    from PIL import Image

    Image.fromarray(_color((255, 0, 0), (2, 2))).save(tmp_path / "c.png")
    assert np.all(read_frame(tmp_path / "c.png") == 76)
