import pytest

from hetson.config import reference_scenario, with_param


def small_scenario(**overrides):
    cfg = reference_scenario()
    base = {"deployment.area_width": 200.0, "deployment.area_height": 200.0,
            "deployment.macro_x": 100.0, "deployment.macro_y": 100.0,
            "deployment.henb_count": 8, "deployment.mue_count": 20, "deployment.fue_count": 8,
            "sim.duration": 30.0, "sim.epoch_length": 10.0, "cco.period": 10.0}
    base.update(overrides)
    for key, value in base.items():
        cfg = with_param(cfg, key, value)
    return cfg


@pytest.fixture
def small():
    return small_scenario()
