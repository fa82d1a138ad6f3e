import copy
import csv
import json
import logging
from pathlib import Path

import numpy as np
import pytest

from hybridsim import hamiltonian_value, two_qubit_oscillator
from hybridsim.cli import main
from hybridsim.config import ConfigError, ValidationError, dump_config, load_config, parse_config, reference_config

SHIPPED = Path(__file__).resolve().parents[1] / "configs" / "two-qubit-oscillator.json"


@pytest.fixture
def short_config(tmp_path):
    data = json.loads(SHIPPED.read_text())
    data["integrator"].update(t_final=0.5, output_stride=50)
    data["output"]["path"] = str(tmp_path / "out.csv")
    return data


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_shipped_config_is_reference():
    cfg = load_config(SHIPPED)
    ref = reference_config()
    assert cfg.spec.H0.allclose(ref.spec.H0)
    assert hamiltonian_value(cfg.spec, cfg.initial) == pytest.approx(hamiltonian_value(two_qubit_oscillator(), ref.initial))
    assert cfg.integrator == ref.integrator
    assert list(cfg.observables) == ["sz1", "sz2", "sx1sx2"]


def test_round_trip(tmp_path):
    ref = reference_config()
    dump_config(ref, tmp_path / "c.json")
    again = load_config(tmp_path / "c.json")
    assert again.to_dict() == ref.to_dict()


def test_parse_errors():
    good = json.loads(SHIPPED.read_text())
    with pytest.raises(ConfigError):
        parse_config([])
    bad = copy.deepcopy(good)
    del bad["initial"]
    with pytest.raises(ConfigError):
        parse_config(bad)
    bad = copy.deepcopy(good)
    bad["model"]["H0"][0][1] = [1.0, 0.0]  # breaks Hermiticity
    with pytest.raises((ConfigError, ValidationError)):
        parse_config(bad)
    bad = copy.deepcopy(good)
    bad["integrator"]["output_stride"] = 7
    with pytest.raises(ValidationError):
        parse_config(bad)
    bad = copy.deepcopy(good)
    bad["initial"]["omega"] = [[0, 0]] * 4
    with pytest.raises(ValidationError):
        parse_config(bad)


def test_initial_state_is_renormalized_with_warning(caplog):
    data = json.loads(SHIPPED.read_text())
    data["initial"]["omega"] = [[1, 0], [1, 0], [0, 0], [0, 0]]
    with caplog.at_level(logging.WARNING, logger="hybridsim"):
        cfg = parse_config(data)
    assert cfg.initial.norm == pytest.approx(1.0)
    assert "renormalized" in caplog.text


def test_macro_limit_flag():
    data = json.loads(SHIPPED.read_text())
    data["model"]["macro_limit"] = True
    cfg = parse_config(data)
    assert cfg.spec.oscillator.hbar == 0.0 and cfg.spec.hbar == 1.0


def test_run_writes_csv(tmp_path, short_config):
    rc = main(["run", write(tmp_path, "c.json", short_config)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "out.csv")
    assert header[:3] == ["t", "q0", "p0"]
    assert header[-5:] == ["H_t", "norm", "sz1", "sz2", "sx1sx2"]
    assert rows.shape == (11, len(header))
    assert np.allclose(rows[:, 0], np.linspace(0, 0.5, 11))
    assert np.ptp(rows[:, header.index("H_t")]) < 1e-6 * 1.475
    assert sorted(p.name for p in tmp_path.iterdir()) == ["c.json", "out.csv"]


def test_run_out_flag_overrides(tmp_path, short_config):
    assert main(["run", write(tmp_path, "c.json", short_config), "--out", str(tmp_path / "x.csv")]) == 0
    assert (tmp_path / "x.csv").exists() and not (tmp_path / "out.csv").exists()


def test_run_exit_codes(tmp_path, short_config):
    assert main(["run", write(tmp_path, "broken.json", "{")]) == 1
    bad = copy.deepcopy(short_config)
    bad["integrator"]["dt"] = -1.0
    assert main(["run", write(tmp_path, "neg.json", bad)]) == 2
    blow = copy.deepcopy(short_config)
    blow["model"]["potential"] = [0, 0, 0, 0, 0, 0, -1.0]
    blow["initial"]["q"] = [2.0]
    blow["integrator"].update(dt=0.1, t_final=10.0, output_stride=1)
    assert main(["run", write(tmp_path, "blow.json", blow)]) == 3
    assert not (tmp_path / "out.csv").exists()


def test_verify(tmp_path, short_config, capsys):
    path = write(tmp_path, "c.json", short_config)
    assert main(["verify", path, "--points", "20"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5
    assert main(["verify", path, "--points", "5", "--flip-coupling", "0"]) == 2
    assert main(["verify", path, "--levels", "8"]) == 4


def test_verify_requires_hbar(tmp_path, short_config, capsys):
    short_config["model"]["macro_limit"] = True
    assert main(["verify", write(tmp_path, "m.json", short_config)]) == 2
    assert "verifier requires hbar>0" in capsys.readouterr().err


def test_bracket_demo(capsys):
    assert main(["bracket-demo"]) == 0
    out = capsys.readouterr().out
    assert "not_quadratic" in out
    assert "witness w1" in out
    assert "quadratic, constant" in out
    assert "single expectation <sx>: quadratic" in out


def test_ensemble(tmp_path, short_config):
    cfg = write(tmp_path, "c.json", short_config)
    dens = write(tmp_path, "d.json", {"classical": {"type": "gaussian", "mean": [1, 0],
                                                    "covariance": [[0.01, 0], [0, 0.01]]}})
    out = tmp_path / "e.csv"
    assert main(["ensemble", cfg, dens, "--n", "12", "--seed", "1", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header[:3] == ["t", "q0_mean", "q0_stderr"]
    assert "sx1sx2_stderr" in header
    assert rows.shape[0] == 11 and np.all(rows[:, 2] > 0)


def test_ensemble_delta_default(tmp_path, short_config):
    cfg = write(tmp_path, "c.json", short_config)
    dens = write(tmp_path, "d.json", {})
    out = tmp_path / "e.csv"
    with pytest.warns(RuntimeWarning):
        assert main(["ensemble", cfg, dens, "--n", "1", "--out", str(out)]) == 0
    main(["run", cfg])
    h1, ens = read_csv(out)
    h2, run = read_csv(tmp_path / "out.csv")
    assert np.array_equal(ens[:, h1.index("q0_mean")], run[:, h2.index("q0")])


@pytest.mark.parametrize("density", [
    {"classical": {"type": "gaussian", "mean": [1, 0], "covariance": [[-1, 0], [0, 1]]}},
    {"classical": {"type": "uniform"}},
    {"quantum": {"type": "mixture", "components": [{"weight": 0.5, "omega": [[1, 0], [0, 0], [0, 0], [0, 0]]}]}},
    "not json",
])
def test_ensemble_invalid_density(tmp_path, short_config, density):
    cfg = write(tmp_path, "c.json", short_config)
    assert main(["ensemble", cfg, write(tmp_path, "d.json", density), "--n", "3"]) == 5
