import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetson.radio import (HENB, MACRO, RadioParams, ShadowingMap, SonThresholds, pathloss, rsrp, sinr,
                          sinr_matrix)
from oracles import sinr_db

P = RadioParams()


def test_macro_pathloss_at_1km_is_intercept():
    assert pathloss(MACRO, 1000.0, 0, P) == pytest.approx(128.1)


def test_macro_pathloss_at_2km_hand_value():
    # 128.1 + 37.6 * 0.30103 = 139.4187
    assert pathloss(MACRO, 2000.0, 0, P) == pytest.approx(139.42, abs=0.005)


@pytest.mark.parametrize("d", [15.0, 80.0, 400.0])
def test_one_wall_adds_exactly_wall_loss(d):
    assert pathloss(HENB, d, 1, P) - pathloss(HENB, d, 0, P) == pytest.approx(P.wall_loss)


def test_short_distances_clamp_to_coupling_floor():
    assert pathloss(HENB, 0.0, 0, P) == P.min_coupling_loss
    assert pathloss(MACRO, 0.3, 0, P) == pathloss(MACRO, 1.0, 0, P)
    assert rsrp(20.0, pathloss(HENB, 0.0, 0, P)) == pytest.approx(20.0 - P.min_coupling_loss)


def test_rsrp_examples():
    assert rsrp(20.0, 100.0, 0.0) == -80.0
    assert rsrp(23.0, 100.0) - rsrp(20.0, 100.0) == pytest.approx(3.0)


def test_sinr_without_interference_is_snr():
    assert sinr(-90.0, [], -104.0) == pytest.approx(14.0)


def test_sinr_one_interferer_hand_value():
    # 1e-9 / (1e-10 + 10**-10.4) = 7.1526 -> 8.545 dB, worked by hand
    assert sinr(-90.0, [-100.0], -104.0) == pytest.approx(8.545, abs=0.001)
    assert sinr(-90.0, [-100.0], -104.0) == pytest.approx(sinr_db(-90.0, [-100.0], -104.0))


def test_sinr_matrix_matches_scalar_and_skips_off_channel():
    r = np.array([[-80.0, -90.0, -95.0]])
    m = sinr_matrix(r, -104.0)
    assert m[0, 0] == pytest.approx(sinr(-80.0, [-90.0, -95.0], -104.0))
    assert m[0, 2] == pytest.approx(sinr(-95.0, [-80.0, -90.0], -104.0))
    off = sinr_matrix(r, -104.0, np.array([1.0, 0.0, 1.0]))
    assert off[0, 0] == pytest.approx(sinr(-80.0, [-95.0], -104.0))


def test_silent_cells_do_not_interfere():
    m = sinr_matrix(np.array([[-80.0, -np.inf]]), -104.0)
    assert m[0, 0] == pytest.approx(24.0)
    assert m[0, 1] == -np.inf


def test_params_validation():
    with pytest.raises(ValueError):
        RadioParams(macro_pl_slope=0).validate()
    with pytest.raises(ValueError):
        RadioParams(noise_power=1.0).validate()
    with pytest.raises(ValueError):
        SonThresholds(fue_cover_sinr=1.0, mue_cover_sinr=1.0).validate()
    with pytest.raises(ValueError):
        SonThresholds(pci_space_size=1008).validate()
    SonThresholds().validate()


def test_shadowing_frozen_and_seeded():
    a = ShadowingMap(3, (0, 0), (100, 100), 10.0, 4.0, np.random.default_rng(5))
    b = ShadowingMap(3, (0, 0), (100, 100), 10.0, 4.0, np.random.default_rng(5))
    pts = np.array([[12.3, 45.6], [99.0, 0.5]])
    assert np.array_equal(a.sample(1, pts), b.sample(1, pts))
    assert np.array_equal(a.sample(1, pts), a.sample(1, pts))
    node = a.sample(2, np.array([[20.0, 30.0]]))[0]
    assert node == pytest.approx(a.values[2, 2, 3])


def test_zero_sigma_gives_zero_field():
    s = ShadowingMap(2, (0, 0), (50, 50), 10.0, 0.0, np.random.default_rng(0))
    assert not s.values.any()


distances = st.floats(0.0, 5000.0, allow_nan=False)
walls = st.integers(0, 5)


@given(kind=st.sampled_from([MACRO, HENB]), d1=distances, d2=distances, w1=walls, w2=walls)
def test_pathloss_monotone(kind, d1, d2, w1, w2):
    lo_d, hi_d = sorted((d1, d2))
    lo_w, hi_w = sorted((w1, w2))
    assert pathloss(kind, lo_d, lo_w, P) <= pathloss(kind, hi_d, hi_w, P)


levels = st.floats(-140.0, -40.0, allow_nan=False)


@given(serving=levels, base=st.lists(levels, max_size=5), extra=st.lists(levels, min_size=1, max_size=5))
def test_sinr_decreases_with_superset_of_interferers(serving, base, extra):
    assert sinr(serving, base + extra, -104.0) <= sinr(serving, base, -104.0)


@given(serving=levels, interferers=st.lists(levels, max_size=6))
def test_sinr_matches_scalar_oracle(serving, interferers):
    assert sinr(serving, interferers, -104.0) == pytest.approx(
        sinr_db(serving, interferers, -104.0), abs=1e-9)


def test_closed_form_when_unshadowed():
    d = 321.0
    expected = 46.0 - (128.1 + 37.6 * math.log10(d / 1000))
    assert rsrp(46.0, pathloss(MACRO, d, 0, P)) == pytest.approx(expected)
