import json
import subprocess
import sys

from cosched.cli import main

TINY = {"num_bs": 3, "ues_per_bs": 2, "num_prb": 2, "drops": 2, "ttis": 8, "noise": "noisy"}


def write_cfg(tmp_path, **extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**TINY, **extra}))
    return str(path)


def test_run_writes_json_and_csv(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "res"
    assert main(["run", cfg, "--scheduler", "cs_gg", "--m-tilde", "1", "--seed", "4", "--out", str(out)]) == 0
    doc = json.loads((tmp_path / "res.json").read_text())
    assert doc["config"]["scheduler"] == "cs_gg"
    assert doc["config"]["m_tilde"] == 1 and doc["config"]["seed"] == 4
    assert (tmp_path / "res.csv").read_text().startswith("scheduler,drop,ue")
    assert "muted_fraction" in capsys.readouterr().out


def test_run_is_reproducible_across_workers(tmp_path):
    cfg = write_cfg(tmp_path)
    main(["run", cfg, "--out", str(tmp_path / "a.json")])
    main(["run", cfg, "--workers", "2", "--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_compare_prints_table(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["compare", cfg, "--schedulers", "cs_ilp,cs_ga", "--out", str(tmp_path / "c")]) == 0
    text = capsys.readouterr().out
    assert "noncoop_pfs" in text and "cs_ilp" in text
    doc = json.loads((tmp_path / "c.json").read_text())
    assert doc["baseline"] == "noncoop_pfs"
    assert main(["compare", cfg, "--schedulers", "magic"]) == 2


def test_dump_reports(tmp_path):
    cfg = write_cfg(tmp_path)
    csv_path = tmp_path / "r.csv"
    sub_path = tmp_path / "s.txt"
    assert main(["dump-reports", cfg, "--out", str(csv_path), "--subproblem", str(sub_path)]) == 0
    lines = csv_path.read_text().splitlines()
    # N * L * 2**M' rows plus the header
    assert len(lines) == 1 + 6 * 2 * 4
    assert sub_path.read_text().count("# prb") == 2
    assert main(["dump-reports", cfg, "--drop", "9", "--out", str(csv_path)]) == 2


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, drops=0)
    assert main(["run", cfg]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, drops=1, ttis=2)
    out = subprocess.run(
        [sys.executable, "-m", "cosched.cli", "run", cfg, "--scheduler", "noncoop_pfs"],
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.startswith("noncoop_pfs:")
