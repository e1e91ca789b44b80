import json
from pathlib import Path

import pytest

from nosignal.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def outputs(tmp_path, suffix):
    return sorted(tmp_path.glob(f"*_{suffix}"))


def test_verify_minimal(tmp_path, capsys):
    assert run(tmp_path, "verify", "--config", str(CONFIGS / "minimal_n3.cfg")) == 0
    assert "no-signal" in capsys.readouterr().out
    summary = json.loads(outputs(tmp_path, "summary.json")[0].read_text())
    assert summary["verdict"] == "no-signal" and summary["max_distance"] <= 1e-10
    csv = outputs(tmp_path, "distances.csv")[0].read_text().splitlines()
    assert csv[0] == "t,distance" and len(csv) == 102


def test_verify_rejects_out_of_plane_state(tmp_path, capsys):
    assert run(tmp_path, "verify", "--config", str(CONFIGS / "rz_violation.cfg")) == 1
    assert "verdict mismatch" in capsys.readouterr().out


def test_verify_two_sites(tmp_path, capsys):
    cfg = tmp_path / "n2.cfg"
    cfg.write_text("N: 2\nn: 2\nseed: 1\n")
    assert run(tmp_path, "verify", "--config", str(cfg)) == 2
    assert "N >= 3" in capsys.readouterr().err


def test_series_rows(tmp_path, capsys):
    assert run(tmp_path, "series", "--config", str(CONFIGS / "minimal_n3.cfg"), "--depth", "12") == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert len(rows) == 14
    assert all(r.split()[2] == "true" for r in rows[1:])


def test_baseline(tmp_path):
    assert run(tmp_path, "baseline") == 0
    assert len(outputs(tmp_path, "distances.csv")[0].read_text().splitlines()) == 12


def test_counterexample_cut_site(tmp_path, capsys):
    assert run(tmp_path, "counterexample", "--config", str(CONFIGS / "counterexample_cut_site.cfg")) == 0
    assert "signal" in capsys.readouterr().out


def test_counterexample_mismatch(tmp_path, capsys):
    # the default scenario on a conforming config cannot signal
    assert run(tmp_path, "counterexample", "--config", str(CONFIGS / "minimal_n3.cfg"),
               "--grid", "0:5:11") == 1
    assert "verdict mismatch" in capsys.readouterr().out


def test_small_sweep(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("N: 3\nn: 2\nseed: 5\nsweep: {N: [3, 4], seeds: 3}\n")
    assert run(tmp_path, "sweep", "--config", str(cfg), "--grid", "0:4:9", "--jobs", "2") == 0
    out = capsys.readouterr().out
    assert "N=3,n=2: 3/3" in out and "N=4,n=3: 3/3" in out
    assert len(outputs(tmp_path, "cells.csv")[0].read_text().splitlines()) == 10


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["verify", "--config", str(CONFIGS / "minimal_n3.cfg"), "--grid", "0:3:7", "--seed", "9"]
    assert main([*argv, "--out", str(a)]) == 0
    assert main([*argv, "--out", str(b)]) == 0
    for p in a.iterdir():
        if not p.name.endswith("manifest.json"):
            assert p.read_bytes() == (b / p.name).read_bytes()


def test_seed_override_changes_hash(tmp_path):
    cfg = str(CONFIGS / "minimal_n3.cfg")
    run(tmp_path, "verify", "--config", cfg, "--grid", "0:1:3", "--seed", "1")
    run(tmp_path, "verify", "--config", cfg, "--grid", "0:1:3", "--seed", "2")
    assert len(outputs(tmp_path, "manifest.json")) == 2


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NOSIGNAL_OUT", str(tmp_path / "env"))
    assert main(["baseline"]) == 0
    assert list((tmp_path / "env").glob("baseline_*_summary.json"))


@pytest.mark.parametrize("body,needle", [
    (None, "No such file"),
    ("N: 3\nn: [2\n", "line"),
    ("N: 3\nn: 2\n", "seed"),
    ("N: 3\nn: 2\nseed: 1\nbogus: 1\n", "bogus"),
])
def test_structured_config_errors(tmp_path, capsys, body, needle):
    cfg = tmp_path / "c.cfg"
    if body is not None:
        cfg.write_text(body)
    assert run(tmp_path, "verify", "--config", str(cfg)) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and needle in err


def test_resource_exit_code(tmp_path, capsys):
    cfg = tmp_path / "big.cfg"
    cfg.write_text("N: 13\nn: 2\nseed: 1\n")
    assert run(tmp_path, "verify", "--config", str(cfg)) == 3
    assert "resource" in capsys.readouterr().err
