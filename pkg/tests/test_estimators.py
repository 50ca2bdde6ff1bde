import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from spikemotion import BackgroundSubtractor, MaskPostprocessor, MotionDetector, SpikingLayer


@pytest.mark.parametrize("cls", [BackgroundSubtractor, SpikingLayer, MaskPostprocessor, MotionDetector])
def test_get_set_params_and_clone(cls):
    est = cls()
    params = est.get_params()
    assert clone(est).get_params() == params
    key = next(iter(params))
    assert est.set_params(**{key: params[key]}) is est


@pytest.mark.parametrize("est", [BackgroundSubtractor(), MotionDetector()])
def test_apply_before_fit_raises(est):
    with pytest.raises(NotFittedError):
        est.apply(np.zeros((3, 3), np.uint8))


def test_spiking_layer_fit_transform():
    mask = np.zeros((4, 4), np.uint8)
    mask[1, 1] = 255
    grid = SpikingLayer(kernel="v2", lanes=2).fit_transform(mask)
    assert grid.shape == (4, 4) and grid[1, 1] == 3 and grid.sum() == 3


def test_spiking_layer_rejects_bad_params():
    with pytest.raises(ValueError, match="power of two"):
        SpikingLayer(lanes=6).fit()
    with pytest.raises(ValueError):
        SpikingLayer(kernel="v9").fit()
    with pytest.raises(ValueError):
        SpikingLayer(tau_m=0).fit()
