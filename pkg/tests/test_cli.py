"""CLI subcommands and exit codes."""

import json

import pytest

from dydd import cli
from dydd.registry import scenario_text


@pytest.fixture
def pair_scenario(tmp_path):
    path = tmp_path / "pair.json"
    path.write_text(
        json.dumps(
            {
                "n": 48,
                "m": 90,
                "p": 2,
                "topology": "pair",
                "distribution": {"kind": "weighted", "counts": [60, 30]},
                "seed": 3,
            }
        )
    )
    return path


def test_balance_command(pair_scenario, tmp_path, capsys):
    out = tmp_path / "balance.json"
    code = cli.main(["balance", "--scenario", str(pair_scenario), "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["l_in"] == [60, 30]
    assert payload["l_fin"] == [45, 45]
    assert payload["E"] == 1.0


def test_balance_shipped_scenario(tmp_path):
    path = tmp_path / "ex1c2.json"
    path.write_text(scenario_text(1, "2"))
    out = tmp_path / "report.json"
    code = cli.main(["balance", "--scenario", str(path), "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["l_r"] == [1000, 500]
    assert payload["l_fin"] == [750, 750]
    assert payload["T_r"] > 0


def test_solve_command(pair_scenario, tmp_path):
    out = tmp_path / "solve.json"
    code = cli.main(
        ["solve", "--scenario", str(pair_scenario), "--mode", "multiplicative", "--out", str(out)]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["converged"] is True
    assert len(payload["x"]) == 48


def test_solve_not_converged_exit_code(pair_scenario, tmp_path):
    code = cli.main(
        [
            "solve",
            "--scenario",
            str(pair_scenario),
            "--tol",
            "1e-30",
            "--out",
            str(tmp_path / "s.json"),
        ]
    )
    assert code == 2


def test_invalid_scenario_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 4}')
    assert cli.main(["balance", "--scenario", str(bad)]) == 3
    notjson = tmp_path / "notjson.json"
    notjson.write_text("{{{")
    assert cli.main(["balance", "--scenario", str(notjson)]) == 3


def test_missing_file_exit_code(tmp_path):
    assert cli.main(["balance", "--scenario", str(tmp_path / "absent.json")]) == 4


def test_unwritable_output_exit_code(pair_scenario, tmp_path):
    code = cli.main(
        [
            "balance",
            "--scenario",
            str(pair_scenario),
            "--out",
            str(tmp_path / "no" / "such" / "dir" / "x.json"),
        ]
    )
    assert code == 4


def test_bad_arguments_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["experiment", "--example", "9", "--case", "1"])
    assert exc.value.code == 3


def test_experiment_command_small(tmp_path, monkeypatch):
    # shrink a shipped scenario through overrides for a fast end-to-end run
    from dydd import registry

    real = registry.example_scenario

    def small(example, case, seed=None, **kw):
        sc = real(example, case, seed=seed, **kw)
        from dydd.scenarios import Distribution, Scenario

        return Scenario(
            n=40,
            m=60,
            p=sc.p,
            topology=sc.topology,
            distribution=Distribution(kind="weighted", counts=(40, 20)),
            seed=sc.seed,
            s=sc.s,
            mu=sc.mu,
            tol=sc.tol,
            max_iter=sc.max_iter,
            max_rounds=sc.max_rounds,
        )

    import dydd.registry as reg

    # _cmd_experiment resolves example_scenario from the registry module at
    # call time, so patching the module attribute is enough
    monkeypatch.setattr(reg, "example_scenario", small)
    out = tmp_path / "exp.csv"
    code = cli.main(
        [
            "experiment",
            "--example",
            "1",
            "--case",
            "1",
            "--format",
            "csv",
            "--reps",
            "1",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3  # header + one row per subdomain
    assert lines[0].startswith("case,p,i,deg,i_ad")
