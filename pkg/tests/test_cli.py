import random
import subprocess
import sys

import pytest

from bnsearch.cli import main
from bnsearch.dag import read_dag
from bnsearch.netio import random_network, save_network


@pytest.fixture
def net_file(tmp_path):
    p = tmp_path / "net.txt"
    save_network(random_network(5, random.Random(2)), p)
    return p


@pytest.fixture
def data_file(tmp_path, net_file):
    out = tmp_path / "data.csv"
    assert main(["sample", "--network", str(net_file), "--n", "300", "--seed", "1", "--out", str(out)]) == 0
    return out


def test_census_output(capsys):
    assert main(["census", "--nodes", "3", "--header"]) == 0
    assert capsys.readouterr().out == "n,dags,classes,ratio\n3,25,11,2.272727272727273\n"


def test_census_too_large(capsys):
    assert main(["census", "--nodes", "9"]) == 2
    assert "error" in capsys.readouterr().err


def test_sample_writes_sidecars(data_file):
    assert data_file.read_text().splitlines()[0] == "X0,X1,X2,X3,X4"
    assert len(data_file.read_text().splitlines()) == 301
    assert (data_file.parent / "data.csv.arities").exists()
    man = (data_file.parent / "data.csv.manifest.txt").read_text()
    assert "command: sample" in man and "flag.seed: 1" in man and "sha256=" in man


def test_sample_is_reproducible(tmp_path, net_file, data_file):
    again = tmp_path / "again.csv"
    main(["sample", "--network", str(net_file), "--n", "300", "--seed", "1", "--out", str(again)])
    assert again.read_bytes() == data_file.read_bytes()


def test_learn_outputs(tmp_path, data_file, net_file, capsys):
    prefix = tmp_path / "out" / "run"
    rc = main(["learn", "--data", str(data_file), "--runs", "3", "--seed", "5", "--true-net", str(net_file),
               "--out-prefix", str(prefix)])
    assert rc == 0
    report = (tmp_path / "out" / "run.report.csv").read_text().splitlines()
    assert report[0] == "run,steps,sec_per_step,score,struct_diff"
    assert [r.split(",")[0] for r in report[1:]] == ["0", "1", "2", "mean", "ci95"]
    g = read_dag(tmp_path / "out" / "run.run0.dag")
    assert g.labels == ("X0", "X1", "X2", "X3", "X4")
    assert "flag.tau: 10" in (tmp_path / "out" / "run.manifest.txt").read_text()
    capsys.readouterr()


def test_learn_ar_ignores_tau(tmp_path, data_file):
    prefix = tmp_path / "ar"
    assert main(["learn", "--data", str(data_file), "--runs", "1", "--seed", "0", "--neighbourhood", "ar",
                 "--tau", "7", "--out-prefix", str(prefix)]) == 0
    assert "flag.tau: unused" in (tmp_path / "ar.manifest.txt").read_text()


def test_mcmc_outputs(tmp_path, data_file, capsys):
    prefix = tmp_path / "chain"
    rc = main(["mcmc", "--data", str(data_file), "--iterations", "300", "--seed", "2", "--neighbourhood", "rcarr",
               "--tau", "4", "--out-prefix", str(prefix)])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("distinct_cpdags=")
    diag = (tmp_path / "chain.diagnostics.csv").read_text().splitlines()
    assert len(diag) == 301
    assert (tmp_path / "chain.classes.csv").read_text().startswith("cpdag_id,lower_bound,observed_members\n")
    assert (tmp_path / "chain.summary.csv").exists()


def test_mcmc_hastings_with_rcar_is_rejected(tmp_path, data_file, capsys):
    rc = main(["mcmc", "--data", str(data_file), "--iterations", "10", "--seed", "0", "--neighbourhood", "rcarr",
               "--hastings", "--out-prefix", str(tmp_path / "x")])
    assert rc == 2
    assert "Hastings" in capsys.readouterr().err


def test_diff_and_score(tmp_path, net_file, data_file, capsys):
    a = tmp_path / "a.dag"
    b = tmp_path / "b.dag"
    a.write_text("nodes: X0,X1,X2,X3,X4\nX0 -> X1\nX1 -> X2\n")
    b.write_text("nodes: X0,X1,X2,X3,X4\nX0 -> X2\nX1 -> X2\n")
    assert main(["diff", "--a", str(a), "--b", str(b)]) == 0
    assert capsys.readouterr().out.strip() == "3"
    assert main(["score", "--data", str(data_file), "--dag", str(a)]) == 0
    assert float(capsys.readouterr().out) < 0


def test_bad_inputs_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,?\n")
    assert main(["score", "--data", str(bad), "--dag", str(bad)]) == 2
    assert "bad.csv:2: missing value" in capsys.readouterr().err
    assert main(["learn", "--data", str(tmp_path / "missing.csv"), "--seed", "0", "--out-prefix", "p"]) == 2
    assert main(["mcmc", "--data", str(bad), "--iterations", "0", "--seed", "0", "--out-prefix", "p"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bnsearch", "census", "--nodes", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "2,3,2,1.5\n"
