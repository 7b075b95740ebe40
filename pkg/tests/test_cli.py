import hashlib
import json

import pytest

from aerialmanip.cli import main


def sha(path):
    return hashlib.sha1(path.read_bytes()).hexdigest()


def test_validate_defaults(capsys):
    assert main(["validate"]) == 0
    assert "Hurwitz" in capsys.readouterr().out


def test_validate_rejects_fragile_observer(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text("gains:\n  g_zeta_rad_s: 200\n")
    assert main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: robustness:") and "robustness bound" in err


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text("scenario:\n  nope: 1\n")
    assert main(["validate", str(p)]) == 2
    assert "error: config:" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "none.yaml")]) == 3
    assert capsys.readouterr().err.startswith("error: io:")


def test_simulate_is_reproducible_and_analyzable(tmp_path, monkeypatch, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--duration", "0.3", "--quiet", "--out", str(a)]) == 0
    monkeypatch.setenv("AERIALMANIP_OUT", str(b))
    assert main(["simulate", "--duration", "0.3", "--quiet"]) == 0
    assert sha(a / "log.csv") == sha(b / "log.csv")
    assert json.loads((a / "meta.json").read_text())["seed"] == 0
    capsys.readouterr()

    assert main(["analyze", str(a), "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["samples"] == 300

    assert main(["plots", str(a)]) == 0
    for name in ("force_error.csv", "tracking_error.csv", "parameters.csv", "plot_run.py"):
        assert (a / "plots" / name).exists()


def test_seed_changes_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--duration", "0.1", "--quiet", "--out", str(a)])
    main(["simulate", "--duration", "0.1", "--quiet", "--seed", "5", "--out", str(b)])
    assert sha(a / "log.csv") != sha(b / "log.csv")


def test_analyze_missing(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "nothing")]) == 3
    assert "error: io:" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
