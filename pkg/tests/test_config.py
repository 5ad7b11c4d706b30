import math

import pytest

from hetson.config import (ScenarioError, ScenarioParseError, UnknownParameter, dumps, load_scenario, loads,
                           reference_scenario, resolve, save_scenario, with_param)


def test_reference_round_trip(tmp_path):
    ref = reference_scenario()
    path = tmp_path / "ref.ini"
    save_scenario(ref, path)
    back = load_scenario(path)
    assert back == ref
    assert dumps(back) == path.read_text()
    assert back.digest() == ref.digest()


def test_every_key_is_documented():
    text = dumps(reference_scenario())
    keys = [ln for ln in text.splitlines() if "=" in ln and not ln.startswith("#")]
    lines = text.splitlines()
    for k in keys:
        i = lines.index(k)
        assert lines[i - 1].startswith("# "), k


def test_dt_zero_rejected():
    with pytest.raises(ScenarioError, match="sim.dt must be positive"):
        loads("[sim]\ndt = 0\n")


def test_duration_shorter_than_dt_rejected():
    with pytest.raises(ScenarioError):
        loads("[sim]\ndt = 1.0\nduration = 0.5\n")


def test_omitted_keys_take_defaults_and_digest_is_stable():
    partial = loads("# only two keys\n[sim]\nseed = 1\n\n[features]\npci = proposed\n")
    assert partial == reference_scenario()
    assert partial.digest() == reference_scenario().digest()
    assert loads("").digest() == reference_scenario().digest()
    assert with_param(reference_scenario(), "sim.seed", 2).digest() != reference_scenario().digest()


def test_comments_do_not_change_digest():
    ref = reference_scenario()
    assert loads(dumps(ref, comments=False)).digest() == loads(dumps(ref)).digest()


@pytest.mark.parametrize("text, line", [
    ("[nope]\n", 1),
    ("[sim]\nbogus = 1\n", 2),
    ("dt = 0.1\n", 1),
    ("[sim]\n\ndt 0.1\n", 3),
    ("[sim]\ndt = abc\n", 2),
    ("[sim]\ndt = 0.1\ndt = 0.2\n", 3),
    ("[features]\nmro = maybe\n", 2),
    ("[sim\n", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ScenarioParseError) as err:
        loads(text)
    assert err.value.lineno == line
    assert str(err.value).startswith(f"line {line}:")


def test_invariant_errors_name_the_field():
    with pytest.raises(ScenarioError, match="p_min"):
        loads("[power]\np_min = 30\n")
    with pytest.raises(ScenarioError, match="features.pci"):
        loads("[features]\npci = greedy\n")
    with pytest.raises(ScenarioError, match="hysteresis"):
        loads("[mro]\nhysteresis = 0.3\n")


def test_with_param_and_resolve():
    cfg = with_param(reference_scenario(), "anr.detection_threshold", "-inf")
    assert resolve(cfg, "anr.detection_threshold") == -math.inf
    cfg = with_param(cfg, "features.mro", "true")
    assert cfg.features.mro is True
    cfg = with_param(cfg, "deployment.henb_count", "12")
    assert cfg.deployment.henb_count == 12
    with pytest.raises(UnknownParameter):
        with_param(cfg, "sim.nothing", 1)
    with pytest.raises(UnknownParameter):
        resolve(cfg, "nosection.x")
    with pytest.raises(ScenarioError):
        with_param(cfg, "sim.dt", "fast")


def test_infinite_threshold_round_trips(tmp_path):
    cfg = with_param(reference_scenario(), "anr.detection_threshold", -math.inf)
    path = tmp_path / "full.ini"
    save_scenario(cfg, path)
    assert load_scenario(path).anr.detection_threshold == -math.inf
