import pytest

from cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, build_parser, exit_code_for, load_config, main
from config import HISTORY_FILE
from run_history import RunHistory
from validators import ConvergenceError, ValidationError


def _common(tmp_path):
    return ["-o", str(tmp_path / "results"), "-N", "12", "-q"]


def test_parser_flags():
    args = build_parser().parse_args(["spectrum", "--nu", "10", "40", "--set", "seed=3", "--preset", "tripling-cos"])
    config = load_config(args)
    assert config.nu == [10.0, 40.0]
    assert config.seed == 3
    assert config.preset == "tripling-cos"


def test_set_wins_over_flags():
    args = build_parser().parse_args(["spectrum", "--seed", "1", "--set", "seed=2"])
    assert load_config(args).seed == 2


def test_config_file_and_override(tmp_path):
    run_file = tmp_path / "run.toml"
    run_file.write_text("nu = [2.0]\ntruncation = 20\n", encoding="utf-8")
    args = build_parser().parse_args(["spectrum", "-c", str(run_file), "-N", "auto"])
    config = load_config(args)
    assert config.nu == [2.0]
    assert config.truncation == "auto"


def test_successful_run(tmp_path, capsys):
    code = main(["spectrum", "--nu", "3"] + _common(tmp_path))
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "✓ spectrum" in out
    assert "spectral_radius" in out
    assert (tmp_path / "results" / "spectrum" / "spectrum_nu_0003.000.csv").exists()


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["spectrum", "--set", "warp=1"] + _common(tmp_path)) == EXIT_CONFIG
    assert "Config error" in capsys.readouterr().err
    assert main(["spectrum", "--set", "nu=[]"] + _common(tmp_path)) == EXIT_CONFIG
    assert main(["spectrum", "-N", "many"] + _common(tmp_path)) == EXIT_CONFIG


def test_numerical_errors_exit_3(tmp_path, capsys):
    code = main(["spectrum", "--preset", "custom", "--set", "g_sin=[0.1]", "--set", "tau_cos=[1.0]"]
                + _common(tmp_path))
    assert code == EXIT_NUMERIC
    assert "not uniformly expanding" in capsys.readouterr().err


def test_history_command(tmp_path, capsys):
    main(["cloud", "--set", "cloud_size=100", "--set", "snapshot_times=[0, 1]", "--set", "steps=1"]
         + _common(tmp_path))
    capsys.readouterr()
    assert main(["history"] + _common(tmp_path)) == EXIT_OK
    out = capsys.readouterr().out
    assert "cloud" in out
    assert "2 file(s)" in out

    csv_path = tmp_path / "results" / "cloud" / "cloud.csv"
    main(["history", "--file", str(csv_path)] + _common(tmp_path))
    assert "cloud" in capsys.readouterr().out

    session_id = RunHistory(tmp_path / "results" / HISTORY_FILE).get_sessions()[0]["id"]
    assert main(["history", "--id", session_id] + _common(tmp_path)) == EXIT_OK
    out = capsys.readouterr().out
    assert session_id in out
    assert str(csv_path) in out
    main(["history", "--id", "no-such-run"] + _common(tmp_path))
    assert "No recorded run with id no-such-run" in capsys.readouterr().out

    main(["history", "--clear"] + _common(tmp_path))
    main(["history"] + _common(tmp_path))
    assert "No runs recorded." in capsys.readouterr().out


def test_exit_codes():
    assert exit_code_for(None) == EXIT_OK
    assert exit_code_for(ValidationError("x")) == EXIT_CONFIG
    assert exit_code_for(ConvergenceError("x")) == EXIT_NUMERIC
    with pytest.raises(RuntimeError):
        exit_code_for(RuntimeError("x"))


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["plot"])
