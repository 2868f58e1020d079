import csv
import subprocess
import sys

import pytest

from afpulse import cli
from afpulse.af_core import AfError
from afpulse.cli import ConfigError, ExperimentConfig, main, parse_config, run_experiment


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_defaults():
    cfg = parse_config(experiment="single-run")
    assert (cfg.mu, cfg.M, cfg.beta, cfg.K, cfg.seed) == (4, 24, 0.05, 1023, 0)
    assert cfg.orders == [8, 12, 16, 20, 24, 28, 32, 36, 40]
    assert len(cfg.rolloffs) == 20 and cfg.rolloffs[-1] == 1.0
    assert len(cfg.jitters) == 21 and cfg.jitters[0] == -0.25
    assert cfg.sizes[0] == 1024 and cfg.sizes[-1] == 65536


def test_file_then_flag_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nM = 16\nbeta = 0.5   # trailing\norders = 8, 16\n\nK = 100\n")
    cfg = parse_config(path, {"K": "200", "seed": None}, "rms-vs-order")
    assert cfg.M == 16 and cfg.beta == 0.5 and cfg.orders == [8, 16]
    assert cfg.K == 200 and cfg.seed == 0


@pytest.mark.parametrize("text,needle", [
    ("M = 24\nbeta abc\n", ":2:"),
    ("M = 24\nbeta = abc\n", ":2: beta"),
    ("bogus = 1\n", ":1: unknown key"),
    ("K = 1.5\n", ":1: K"),
])
def test_parse_errors_carry_line_numbers(tmp_path, text, needle):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError, match=needle):
        parse_config(path)


@pytest.mark.parametrize("overrides,field", [
    ({"M": "18"}, "M"),
    ({"orders": "8,10"}, "orders"),
    ({"beta": "0"}, "beta"),
    ({"jitters": "0.1,0.6"}, "jitter"),
    ({"families": "SRRC,RC"}, "families"),
    ({"modulation": "QPSK"}, "modulation"),
    ({"trials": "0"}, "trials"),
    ({"mu": "0"}, "mu"),
])
def test_validation_names_the_field(overrides, field):
    with pytest.raises(ConfigError, match=field):
        parse_config(None, overrides, "single-run")


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="nope").validate()


def test_rms_csv_and_manifest_are_reproducible(tmp_path):
    args = ["rms-vs-order", "--orders", "8,24", "--K", "63", "--rms-blocks", "1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "rms-vs-order.csv").read_bytes()
    assert a == (tmp_path / "b" / "rms-vs-order.csv").read_bytes()
    rows = _rows(tmp_path / "a" / "rms-vs-order.csv")
    assert rows[0] == ["M", "SRRC", "AF-SRRC", "BTRC", "AF-BTRC"]
    assert [r[0] for r in rows[1:]] == ["8", "24"]
    for r in rows[1:]:
        assert float(r[2]) <= 1e-8 and float(r[1]) > 0
        assert all(c == f"{float(c):.12g}" for c in r[1:])
    manifest = (tmp_path / "a" / "rms-vs-order.manifest").read_text()
    for key in ("seed = 0", "orders = 8,24", "kernel_backend =", "numpy_version =",
                "afpulse_version =", "wall_time_s ="):
        assert key in manifest


def test_single_run_reports_delay(tmp_path):
    assert main(["single-run", "--K", "127", "--trials", "2000", "--ebn0", "6",
                 "--families", "SRRC", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "single-run.csv")
    assert rows[0][:3] == ["method", "rms_error_percent", "ber"]
    by_method = {r[0]: r for r in rows[1:]}
    assert set(by_method) == {"SRRC", "AF-SRRC"}
    assert float(by_method["AF-SRRC"][6]) == 128.0
    assert float(by_method["SRRC"][6]) == 0.0


def test_solve_bench_cross_checks_and_handles_empty(tmp_path):
    assert main(["solve-bench", "--sizes", "64,256", "--repeats", "1", "--direct-max", "64",
                 "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "solve-bench.csv")
    assert rows[0] == ["K", "block_len", "direct_s", "fast_s", "fast_solve_s", "max_abs_diff"]
    assert rows[1][1] == "64" and float(rows[1][5]) <= 1e-9
    assert rows[2][1] == "256" and rows[2][2] == "" and rows[2][5] == ""
    assert main(["solve-bench", "--sizes", "", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "solve-bench.csv").read_text() == \
        "K,block_len,direct_s,fast_s,fast_solve_s,max_abs_diff\n"


def test_papr_and_ebn0_experiments(tmp_path):
    assert main(["papr-table", "--papr-betas", "0.1", "--trials", "1024", "--K", "127",
                 "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "papr-table.csv")
    assert len(rows) == 3 and rows[1][0] == "SRRC@0.1"
    assert main(["ber-vs-ebn0", "--ebn0s", "4", "--betas", "0.5", "--trials", "4096", "--K", "63",
                 "--modulation", "QAM16", "--families", "BTRC", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "ber-vs-ebn0.csv")
    assert rows[0][:5] == ["ebn0_db", "theory", "no-filter", "BTRC@0.5", "AF-BTRC@0.5"]


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert main(["papr-table", "--M", "18", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "M" in capsys.readouterr().err
    assert main(["papr-table", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG

    def boom(cfg):
        raise AfError("singular")

    monkeypatch.setattr(cli, "single_run", boom)
    assert main(["single-run", "--out", str(tmp_path)]) == cli.EXIT_NUMERICAL
    assert "numerical" in capsys.readouterr().err


def test_run_experiment_returns_paths(tmp_path):
    cfg = parse_config(None, {"out": str(tmp_path), "rolloffs": "0.5", "K": "63", "rms_blocks": "1"},
                       "rms-vs-rolloff")
    csv_path, manifest = run_experiment(cfg)
    assert csv_path.exists() and manifest.exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "afpulse", "rms-vs-rolloff", "--rolloffs", "1.0",
                           "--K", "63", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "afpulse", "rms-vs-order", "--orders", "18"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
