import pytest

from p2pbalance.cli import main, read_config_file

SMALL = ["--hosts", "8", "--jobs", "8", "--steps", "30", "--trials", "2"]


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["run", *SMALL, "--out", str(tmp_path), "--dump-graph"]) == 0
    out = tmp_path / "run"
    assert (out / "aggregate.csv").exists() and (out / "hosts.edges").exists()
    assert str(out) in capsys.readouterr().out


def test_manifest_reruns_identically(tmp_path):
    assert main(["run", *SMALL, "--tau", "20", "--event", "exit@10", "--out", str(tmp_path), "--name", "a"]) == 0
    manifest = tmp_path / "a" / "manifest.txt"
    assert main(["run", "--config", str(manifest), "--out", str(tmp_path), "--name", "b"]) == 0
    for name in ("aggregate.csv", "trials.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# comment\nhosts = 8\njobs = 8\nsteps = 5\ntrials = 1\nevent = exit@1\nevent = enter@2\n")
    values = read_config_file(cfg)
    assert values["event"] == "exit@1,enter@2"
    assert main(["run", "--config", str(cfg), "--steps", "7", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "run" / "aggregate.csv").read_text().splitlines()
    assert len(lines) == 8


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--strategy", "pm:1.5"],
        ["run", "--tau", "0"],
        ["run", "--guest", "torus"],
        ["run-preset", "nope"],
        ["run-preset", "pm-sweep", "--sweep", "tau=5"],
        ["run-preset", "pm-sweep", "--sweep", "strategy"],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path, capsys):
    assert main([*argv, "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_config_line(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("hosts 8\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_unknown_scripted_host_exit_2(tmp_path):
    assert main(["run", *SMALL, "--event", "exit@3:500", "--out", str(tmp_path)]) == 2


def test_list_presets(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    for name in ("pm-sweep", "cost-vs-p", "coverage", "dynamicity-sweep", "selection"):
        assert name in out


def test_run_preset_layout(tmp_path):
    argv = ["run-preset", "pm-sweep", *SMALL, "--sweep", "strategy=pm:0,pm:1", "--trial-csv", "--out", str(tmp_path)]
    assert main(argv) == 0
    root = tmp_path / "pm-sweep"
    assert sorted(p.name for p in root.iterdir()) == ["manifest.txt", "strategy-pm_0", "strategy-pm_1", "summary.csv"]
    assert (root / "strategy-pm_1" / "trials.csv").exists()
    summary = (root / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("strategy,variant,t,sigma_mean")
    assert len(summary) == 3
