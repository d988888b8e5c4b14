import subprocess
import sys

import pytest

from swiftce.cli import main
from swiftce.harness import CSV_COLUMNS, read_csv

SMALL = ["--snr", "0,10", "--tc", "40", "--trials", "2", "--schemes", "swift,fnrb8,exh"]


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text("dims = 8,4,2,2\nn_trials = 5\n")
    return str(path)


def test_sweep_writes_csv(tmp_path, small_config):
    out = tmp_path / "a.csv"
    assert main(["sweep", "--config", small_config, "--out", str(out), "--seed", "3", *SMALL]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert len(rows) == 3 * 2 and {r["n_trials"] for r in rows} == {"2"}


def test_sweep_stdout_and_reproducible(capsys, small_config):
    assert main(["sweep", "--config", small_config, *SMALL]) == 0
    first = capsys.readouterr().out
    assert main(["sweep", "--config", small_config, *SMALL]) == 0
    assert capsys.readouterr().out == first
    assert first.startswith(",".join(CSV_COLUMNS))


def test_seed_changes_output(capsys, small_config):
    main(["sweep", "--config", small_config, "--seed", "1", *SMALL])
    a = capsys.readouterr().out
    main(["sweep", "--config", small_config, "--seed", "2", *SMALL])
    assert capsys.readouterr().out != a


def test_trial_trace(capsys, small_config):
    assert main(["trial", "--config", small_config, "--index", "1", *SMALL]) == 0
    cap = capsys.readouterr()
    assert "checkpoints[" in cap.err and "SWIFT" in cap.err
    assert cap.out.splitlines()[0].startswith("scheme,snr_db,t_c,user_id,t_e")
    assert len(cap.out.splitlines()) == 1 + 3 * 2


def test_selftest_quick(capsys):
    assert main(["selftest"]) == 0
    assert "checks passed" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [["sweep", "--schemes", "bogus"], ["sweep", "--trials", "0"], ["sweep", "--config", "/nonexistent.cfg"],
     ["sweep", "--snr", "a,b"]],
)
def test_errors_give_nonzero_exit(argv):
    assert main(argv) != 0


def test_unwritable_output_fails_early(small_config):
    assert main(["sweep", "--config", small_config, "--out", "/nonexistent/dir/x.csv", *SMALL]) == 1


def test_bad_config_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("n_trials = 2\ncolour = blue\n")
    assert main(["sweep", "--config", str(path)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "swiftce", "sweep", "--schemes", "nope"], capture_output=True, text=True)
    assert proc.returncode != 0 and "unknown scheme" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "swiftce", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "selftest" in proc.stdout
