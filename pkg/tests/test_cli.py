import json
import math
from pathlib import Path

import pytest

from jamset import cli, theory


def run_cli(args):
    return cli.main(args)


def test_theory_regular_d3(tmp_path, capsys):
    code = run_cli(["theory", "--model", '{"kind":"regular","d":3}', "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "0.3750000000" in out
    payload = json.loads((tmp_path / "theory_regular-d3.json").read_text())
    assert payload["version"]
    assert payload["config"]["model"] == {"kind": "regular", "d": 3}
    assert "seed" in payload
    assert payload["result"]["s_inf"] == pytest.approx(0.375, abs=1e-8)


def test_theory_poisson(tmp_path, capsys):
    code = run_cli(["theory", "--model", '{"kind":"poisson","c":1}', "--out", str(tmp_path)])
    assert code == 0
    assert "0.6931471806" in capsys.readouterr().out


def test_theory_low_degree_branch(tmp_path, capsys):
    code = run_cli(
        ["theory", "--model", '{"kind":"counts-limit","p":{"0":0.4,"1":0.6}}', "--out", str(tmp_path)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "tau_inf = inf" in out
    assert "0.7000000000" in out


def test_simulate_two_leaves(tmp_path, capsys):
    code = run_cli(
        [
            "simulate",
            "--seq",
            '{"kind":"counts","counts":{"1":2}}',
            "--replicas",
            "5",
            "--seed",
            "3",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    payload = json.loads((tmp_path / "simulate_counts_seed3.json").read_text())
    assert payload["aggregate"]["per_replica"] == [0.5] * 5  # S = 1 of n = 2, always
    csv_text = (tmp_path / "simulate_counts_seed3.csv").read_text()
    assert csv_text.splitlines()[0] == "replica,s_frac"


def test_invalid_specs_exit_2(tmp_path, capsys):
    assert run_cli(["theory", "--model", '{"kind":"nope"}', "--out", str(tmp_path)]) == 2
    assert run_cli(["theory", "--model", "not json", "--out", str(tmp_path)]) == 2
    assert (
        run_cli(["simulate", "--seq", '{"kind":"counts","counts":{"1":3}}', "--out", str(tmp_path)])
        == 2
    )
    capsys.readouterr()


def test_unknown_preset_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli(["study", "--preset", "mystery", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_rejection_exhaustion_exit_4(tmp_path, capsys):
    code = run_cli(
        [
            "simulate",
            "--seq",
            '{"kind":"counts","counts":{"6":4}}',  # no simple graph exists
            "--graph",
            "simple",
            "--replicas",
            "1",
            "--max-attempts",
            "5",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 4
    assert "k^2" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(model, tol=1e-10):
        raise theory.NumericalError("synthetic")

    monkeypatch.setattr(theory, "jamming_constant", boom)
    code = run_cli(["theory", "--model", '{"kind":"regular","d":2}', "--out", str(tmp_path)])
    assert code == 3


def test_byte_identical_reruns(tmp_path, capsys):
    args = [
        "simulate",
        "--seq",
        '{"kind":"regular","d":2}',
        "--n",
        "500",
        "--replicas",
        "4",
        "--seed",
        "9",
    ]
    run_cli(args + ["--out", str(tmp_path / "a")])
    run_cli(args + ["--out", str(tmp_path / "b")])
    name = "simulate_regular-d2-n500_seed9.json"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    # timestamps live in the sidecar, not in the data file
    assert (tmp_path / "a" / (name + ".meta.json")).exists()


def test_file_indirection(tmp_path, capsys):
    spec = tmp_path / "model.json"
    spec.write_text('{"kind":"regular","d":2}')
    code = run_cli(["theory", "--model", f"@{spec}", "--out", str(tmp_path)])
    assert code == 0
    assert "0.4323323584" in capsys.readouterr().out


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("JAMSET_THREADS", "7")
    parser = cli.build_parser()
    args = parser.parse_args(["simulate", "--seq", "{}"])
    assert args.threads == 7


def test_study_converge_small(tmp_path, capsys):
    scenario = {
        "name": "tiny-d2",
        "seq_spec": {"kind": "regular", "d": 2},
        "limit_model_spec": {"kind": "regular", "d": 2},
        "n_list": [200],
        "replicas": 3,
        "seed": 5,
    }
    spec = tmp_path / "scenario.json"
    spec.write_text(json.dumps(scenario))
    code = run_cli(["study", "--scenario", f"@{spec}", "--kind", "converge", "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "study_tiny-d2_converge_seed5.json").read_text())
    assert payload["report"]["theory"]["s_inf"] == pytest.approx(0.43233236, abs=1e-6)
    assert len(payload["report"]["rows"]) == 1
