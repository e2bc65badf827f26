import json
import os

import pytest

from fhkex.cli import (
    EXIT_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_IO,
    EXIT_OK,
    Invocation,
    dispatch,
    main,
)
from fhkex.scenario import ConfigError


def test_invocation_validates_subcommand():
    with pytest.raises(ConfigError):
        Invocation(subcommand="teleport")


def test_dispatch_direct_invocation(tmp_path, capsys):
    inv = Invocation(
        subcommand="session",
        overrides={"d_be": 20.0, "n_rounds": 12},
        output_dir=str(tmp_path),
        seed=4,
    )
    assert dispatch(inv) == EXIT_OK
    assert (tmp_path / "transcript.csv").exists()
    assert "key:" in capsys.readouterr().out


def test_fixture_prints_key_and_collisions(capsys):
    assert main(["fixture"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "collisions at slots: 1,5,6" in out
    assert "key: 010" in out
    assert "# key=010" in out


def test_analyze_with_direct_pb(capsys):
    assert main(["analyze", "--k", "128", "--pb", "0.5", "--target", "0.99"]) == EXIT_OK
    out = capsys.readouterr().out
    # oracle-exact minimum, within the documented +-3 of the nominal 300
    assert "minimum transmissions for k=128 at target 0.99: 295" in out


def test_analyze_channel_route(capsys):
    code = main(["analyze", "--k", "64", "--sigma", "8", "--d-be", "20", "--n", "400"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "p_b = 0.0230877" in out
    assert "privacy radius at N=400: 267.677 m" in out


def test_analyze_infeasible_pb(capsys):
    assert main(["analyze", "--k", "8", "--pb", "0"]) == EXIT_INFEASIBLE
    err = capsys.readouterr().err
    assert err.startswith("error: infeasible:")
    assert err.count("\n") == 1


def test_invalid_scenario_flag(capsys):
    assert main(["session", "--gamma", "0", "--seed", "1"]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith("error: invalid-gamma:")


def test_unknown_flag_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["fixture", "--warp-speed"])
    assert exc.value.code == 2


def test_session_outputs_are_deterministic(tmp_path, capsys):
    args = ["session", "--seed", "5", "--n-rounds", "50", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    first = (tmp_path / "transcript.csv").read_bytes()
    assert main(args) == EXIT_OK
    assert (tmp_path / "transcript.csv").read_bytes() == first
    out = capsys.readouterr().out
    assert "key:" in out


def test_session_with_eavesdropper(tmp_path, capsys):
    args = [
        "session", "--seed", "5", "--n-rounds", "60", "--d-be", "20",
        "--eve", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    assert (tmp_path / "transcript.csv").exists()
    assert (tmp_path / "eve_trace.csv").exists()
    assert "adversary (ml-pairwise)" in capsys.readouterr().out


def test_session_auto_seed_is_echoed(tmp_path, capsys):
    assert main(["session", "--n-rounds", "10", "--out", str(tmp_path)]) == EXIT_OK
    assert "auto-generated" in capsys.readouterr().out


def test_sweep_writes_csv_and_plot(tmp_path, capsys):
    args = [
        "sweep", "--seed", "9", "--k-list", "4", "--n-list", "20,40",
        "--d-be-list", "20", "--sigma-list", "8", "--trials", "50",
        "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    sweep_csv = (tmp_path / "sweep.csv").read_bytes()
    assert (tmp_path / "sweep.gp").exists()
    assert sweep_csv.startswith(b"k,n,d_be,sigma,rule,metric,trials,p_hat,ci_lo,ci_hi,p_analytic\n")
    # same invocation, same bytes; more workers, same bytes
    assert main(args) == EXIT_OK
    assert (tmp_path / "sweep.csv").read_bytes() == sweep_csv
    assert main(args + ["--workers", "3"]) == EXIT_OK
    assert (tmp_path / "sweep.csv").read_bytes() == sweep_csv


def test_sweep_axis_range_syntax(tmp_path):
    args = [
        "sweep", "--seed", "2", "--k-list", "2", "--n-list", "10:30:10",
        "--d-be-list", "20", "--sigma-list", "8", "--trials", "10",
        "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    text = (tmp_path / "sweep.csv").read_text()
    assert len(text.splitlines()) == 1 + 3  # header + n in {10, 20, 30}


def test_sweep_empty_grid_is_config_error(tmp_path, capsys):
    args = [
        "sweep", "--seed", "1", "--k-list", "", "--n-list", "20",
        "--d-be-list", "20", "--sigma-list", "8", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith("error: empty-grid:")


def test_sweep_budget_exceeded(tmp_path, capsys):
    args = [
        "sweep", "--seed", "1", "--k-list", "4", "--n-list", "20",
        "--d-be-list", "20", "--sigma-list", "8", "--trials", "100",
        "--budget", "10", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_CONFIG


def test_frontier_from_sweep(tmp_path):
    args = [
        "frontier", "--seed", "4", "--k-list", "2", "--n-list", "8,16,32",
        "--d-be-list", "20,60", "--sigma-list", "8", "--trials", "200",
        "--target", "0.3", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    lines = (tmp_path / "frontier.csv").read_text().splitlines()
    assert lines[0] == "d_be,min_n,status"
    assert len(lines) == 3
    assert (tmp_path / "frontier.gp").exists()
    assert (tmp_path / "sweep.csv").exists()


def test_frontier_from_existing_csv(tmp_path):
    sweep_args = [
        "sweep", "--seed", "4", "--k-list", "2", "--n-list", "8,16",
        "--d-be-list", "20", "--sigma-list", "8", "--trials", "100",
        "--out", str(tmp_path),
    ]
    assert main(sweep_args) == EXIT_OK
    args = [
        "frontier", "--from-csv", str(tmp_path / "sweep.csv"),
        "--target", "0.3", "--column", "p_analytic", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    assert (tmp_path / "frontier.csv").exists()


def test_io_error_exit_code(tmp_path, capsys):
    missing = tmp_path / "no" / "such" / "dir"
    assert main(["session", "--seed", "1", "--n-rounds", "5", "--out", str(missing)]) == EXIT_IO
    assert capsys.readouterr().err.startswith("error: io-error:")


def test_output_dir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("FHKEX_OUTPUT_DIR", str(tmp_path))
    assert main(["session", "--seed", "3", "--n-rounds", "5"]) == EXIT_OK
    assert (tmp_path / "transcript.csv").exists()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"sigma": 2.0, "n_rounds": 25, "seed": 6}))
    args = ["session", "--config", str(cfg_path), "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    text = (tmp_path / "transcript.csv").read_text()
    assert text.splitlines()[0] == "# seed=6"
    assert len(text.splitlines()) == 2 + 1 + 25  # two comments, header, 25 slots

    # the flag wins over the file value
    assert main(args + ["--n-rounds", "10"]) == EXIT_OK
    assert len((tmp_path / "transcript.csv").read_text().splitlines()) == 2 + 1 + 10


def test_config_file_unknown_key(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"bogus": 1}))
    assert main(["session", "--config", str(cfg_path)]) == EXIT_CONFIG
    assert capsys.readouterr().err.startswith("error: unknown-config-key:")
