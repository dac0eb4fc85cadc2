import csv

from sscsim.__main__ import main
from sscsim.harness import CSV_COLUMNS

SMALL = ["--N", "64", "--K", "2", "--M", "64", "--R", "0.5"]


def test_settings_lists_every_setting(capsys):
    assert main(["settings"]) == 0
    out = capsys.readouterr().out
    for key in ("seed", "workers", "mmp-paths", "min-errors", "transmit-path"):
        assert key in out


def test_sweep_writes_csv_and_metadata(tmp_path, capsys):
    out = tmp_path / "points.csv"
    code = main(["sweep", *SMALL, "--snr", "0:5:10", "--trials", "40", "--seed", "3",
                 "--out", str(out)])
    assert code == 0
    with out.open(newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r[11] for r in rows[1:]] == ["0.0", "5.0", "10.0"]
    assert all(r[12] == "40" for r in rows[1:])
    assert (tmp_path / "points.csv.meta.json").exists()
    assert "BLER" in capsys.readouterr().out


def test_sweep_is_byte_identical_across_runs(tmp_path):
    args = ["sweep", *SMALL, "--snr", "4", "--trials", "60", "--seed", "8"]
    assert main([*args, "--out", str(tmp_path / "a.csv"), "--workers", "1"]) == 0
    assert main([*args, "--out", str(tmp_path / "b.csv"), "--workers", "2"]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_experiment_file(tmp_path):
    exp = tmp_path / "exp.ini"
    exp.write_text("[experiment]\nscheme = svc\nN = 64\nK = 2\nM = 64\nsnr = 10\ntrials = 20\n"
                   f"out = {tmp_path / 'svc.csv'}\n")
    assert main(["sweep", "--config", str(exp)]) == 0
    rows = (tmp_path / "svc.csv").read_text().splitlines()
    assert len(rows) == 2
    assert rows[1].startswith("svc,64,2,64,")


def test_configuration_errors_exit_with_two(tmp_path):
    assert main(["sweep", *SMALL, "--scheme", "ssc-dense", "--r", "0.5"]) == 2
    assert main(["sweep", "--N", "64", "--K", "2"]) == 2
    assert main(["sweep", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["sweep", *SMALL, "--snr", "5:1:0"]) == 2


def test_roundtrip_check_passes(capsys):
    assert main(["roundtrip-check", *SMALL, "--trials", "100"]) == 0
    assert "All round-trip checks passed" in capsys.readouterr().out


def test_complexity_table(capsys):
    assert main(["complexity", "--N", "64", "--K", "2", "--M", "32", "--r", "1,0.5",
                 "--packets", "3", "--snr", "10"]) == 0
    out = capsys.readouterr().out
    assert "enc ratio" in out
    assert "sparse cells" in out
