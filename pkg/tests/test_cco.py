import numpy as np
import pytest

from hetson.cco import (HIGH, LOW, NONE, BoundaryEstimate, CcoSettings, coverage_metrics, estimate_boundary,
                       reoptimize_power)
from hetson.power import PowerConstraints, configure_power
from hetson.radio import HENB, MACRO, RadioParams, ShadowingMap, SonThresholds
from hetson.topology import FUE, MUE, Cell, Network
from oracles import wall_walk

T = SonThresholds()
C = PowerConstraints()
CELL = Cell(1, HENB, (0.0, 0.0), 10.0, apartment_radius=10.0)


def network(dist=200.0, radius=10.0, henbs=True):
    params = RadioParams(shadowing_sigma=0.0)
    cells = [Cell(0, MACRO, (0.0, 0.0), 46.0)]
    centers, radii = [], []
    if henbs:
        cells.append(Cell(1, HENB, (dist, 0.0), 0.0, apartment_radius=radius))
        centers, radii = [(dist, 0.0)], [radius]
    sh = ShadowingMap(len(cells), (-100, -100), (1000, 1000), 10.0, 0.0, np.random.default_rng(0))
    return Network(cells, np.array(centers).reshape(-1, 2), np.array(radii), params, sh), params


def test_no_crossings_gives_no_estimate():
    flat = [[(0.1 * k, 2.0 + 0.1 * k, -60.0 - 0.1 * k) for k in range(40)]]
    est = estimate_boundary(CELL, flat, 7.0)
    assert est.confidence == NONE and est.sample_count == 0
    net, params = network()
    assert reoptimize_power(net.cells[1], est, net, T, params, C) == net.cells[1].tx_power


def test_noiseless_wall_walk_recovers_radius():
    rng = np.random.default_rng(0)
    for _ in range(20):
        est = estimate_boundary(CELL, [wall_walk(rng)], 7.0)
        assert est.sample_count == 1 and est.confidence == LOW
        assert 9.9 <= est.estimated_radius <= 10.1
        assert est.jump_magnitude >= 10.0


def test_threshold_above_wall_loss_sees_nothing():
    log = wall_walk(np.random.default_rng(1))
    assert estimate_boundary(CELL, [log], 10.5).confidence == NONE


def test_confidence_levels_and_inbound_crossings():
    rng = np.random.default_rng(2)
    walks = [wall_walk(rng) for _ in range(5)]
    walks[0] = walks[0][::-1]  # walking in produces an upward jump
    est = estimate_boundary(CELL, walks, 7.0)
    assert est.confidence == HIGH and est.sample_count == 5
    assert est.estimated_radius == pytest.approx(10.0, abs=0.1)


def test_median_resists_outliers():
    rng = np.random.default_rng(3)
    walks = [wall_walk(rng) for _ in range(6)]
    walks.append([(0.0, 30.0, -50.0), (0.1, 30.2, -70.0)])
    assert estimate_boundary(CELL, walks, 7.0).estimated_radius == pytest.approx(10.0, abs=0.1)


def test_short_logs_are_ignored():
    assert estimate_boundary(CELL, [[], [(0.0, 1.0, -50.0)]], 7.0).confidence == NONE


def test_reoptimize_with_assumed_radius_is_noop():
    net, params = network(radius=10.0)
    base = configure_power(net.cells[1], net, T, params, C).tx_power
    est = estimate_boundary(net.cells[1], [wall_walk(np.random.default_rng(4))], 7.0)
    assert est.estimated_radius == pytest.approx(10.0, abs=0.1)
    exact = BoundaryEstimate(1, 10.0, est.sample_count, est.jump_magnitude, est.confidence)
    assert reoptimize_power(net.cells[1], exact, net, T, params, C) == pytest.approx(base)


@pytest.mark.parametrize("dist", [60.0, 150.0, 300.0, 600.0])
def test_larger_estimate_never_lowers_power(dist):
    net, params = network(dist=dist)
    cell = net.cells[1]
    powers = []
    for r in (6.0, 8.0, 10.0, 12.0, 15.0):
        est = BoundaryEstimate(1, r, 5, 10.0, HIGH)
        p = reoptimize_power(cell, est, net, T, params, C)
        assert C.p_min <= p <= C.p_max
        powers.append(p)
    assert powers == sorted(powers)


def test_coverage_deep_coverage_all_ones():
    net, _ = network(henbs=False)
    rep = coverage_metrics(net, [[50.0, 0.0], [0.0, 80.0]], [MUE, MUE], T)
    assert (rep.macro_coverage_ratio, rep.smallcell_coverage_ratio, rep.hole_ratio) == (1.0, 1.0, 0.0)


def test_coverage_outdoor_fue_joins_macro_population():
    net, _ = network(dist=200.0)
    net.cells[1].tx_power = 10.0
    pts = [[200.0, 2.0], [50.0, 0.0]]
    rep = coverage_metrics(net, pts, [FUE, FUE], T, indoor=[True, False])
    assert rep.smallcell_coverage_ratio == 1.0
    assert rep.macro_coverage_ratio == 1.0


def test_coverage_ratios_in_unit_interval():
    net, _ = network(dist=100.0)
    net.cells[1].tx_power = 20.0
    rng = np.random.default_rng(5)
    pts = rng.uniform(-50, 400, (200, 2))
    kinds = [FUE if i % 3 == 0 else MUE for i in range(200)]
    rep = coverage_metrics(net, pts, kinds, T)
    for v in (rep.macro_coverage_ratio, rep.smallcell_coverage_ratio, rep.hole_ratio):
        assert 0.0 <= v <= 1.0


def test_settings_validation():
    with pytest.raises(ValueError):
        CcoSettings(jump_threshold=0).validate()
