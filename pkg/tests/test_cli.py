import pytest

from hetson import cli
from hetson.config import load_scenario, reference_scenario, save_scenario
from conftest import small_scenario


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "small.ini"
    save_scenario(small_scenario(**{"sim.duration": 5.0}), path)
    return path


def test_reference_scenario_and_validate(tmp_path, capsys):
    out = tmp_path / "ref.ini"
    assert cli.main(["reference-scenario", "--out", str(out)]) == 0
    assert load_scenario(out) == reference_scenario()
    capsys.readouterr()
    assert cli.main(["validate", "--scenario", str(out)]) == 0
    assert capsys.readouterr().out.strip() == f"ok {reference_scenario().digest()}"


def test_validation_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[sim]\ndt = 0\n")
    assert cli.main(["validate", "--scenario", str(bad)]) == 2
    assert "sim.dt must be positive" in capsys.readouterr().err
    assert cli.main(["validate", "--scenario", str(tmp_path / "missing.ini")]) == 2
    bad.write_text("[sim]\nwhat = 1\n")
    assert cli.main(["run", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_unknown_sweep_param_exit_2(scenario, tmp_path):
    args = ["sweep", "--scenario", str(scenario), "--param", "sim.bogus", "--values", "1",
            "--seeds", "1", "--out", str(tmp_path / "s")]
    assert cli.main(args) == 2


def test_runtime_error_exit_3(scenario, tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise RuntimeError("kernel failed")

    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["run", "--scenario", str(scenario), "--out", str(tmp_path / "o")]) == 3
    assert "runtime error: kernel failed" in capsys.readouterr().err


def test_run_writes_outputs_and_honours_seed(scenario, tmp_path):
    assert cli.main(["run", "--scenario", str(scenario), "--seed", "4", "--out", str(tmp_path / "r")]) == 0
    for name in ("results.csv", "events.csv", "report.json"):
        assert (tmp_path / "r" / name).exists()
    assert "# seed: 4" in (tmp_path / "r" / "results.csv").read_text()


def test_sweep_writes_table(scenario, tmp_path):
    args = ["sweep", "--scenario", str(scenario), "--param", "features.pci", "--values", "proposed,random",
            "--seeds", "1,2", "--out", str(tmp_path / "s")]
    assert cli.main(args) == 0
    text = (tmp_path / "s" / "sweep.csv").read_text()
    assert text.startswith("# param: features.pci")
    for value in ("proposed", "random"):
        assert text.count(f"\n{value},1,") == 1 and text.count(f"\n{value},2,") == 1
        assert text.count(f"\n{value},mean,") == 1 and text.count(f"\n{value},std,") == 1


def test_conflicts_report(scenario, capsys):
    assert cli.main(["conflicts", "--scenario", str(scenario), "--seed", "1"]) == 0
    first = capsys.readouterr().out.splitlines()[0].split()
    assert first[0::2] == ["cells", "collisions", "confusions", "fallbacks"]
    assert first[1] == "9"
