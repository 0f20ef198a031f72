import json

import numpy as np
import pytest

from scoretriage import persist
from scoretriage.cli import main


@pytest.fixture
def workspace(tmp_path):
    """Synthetic responses split into train/test, plus a matrix."""
    assert main(["synth", "--candidates", "300", "--accuracy", "0.7", "--seed", "4",
                 "--out", str(tmp_path / "all.csv"), "--scale-out", str(tmp_path / "scale.json")]) == 0
    assert main(["split", "--responses", str(tmp_path / "all.csv"), "--scale", str(tmp_path / "scale.json"),
                 "--train-fraction", "0.5", "--seed", "5",
                 "--train-out", str(tmp_path / "train.csv"), "--test-out", str(tmp_path / "test.csv")]) == 0
    assert main(["matrix", "--train", str(tmp_path / "train.csv"), "--scale", str(tmp_path / "scale.json"),
                 "--out", str(tmp_path / "matrix.json")]) == 0
    return tmp_path


def test_matrix_on_uniform_pseudo_model(tmp_path):
    # uniform labels, local accuracy 0.75: each wrong prediction is spread over 5 classes
    assert main(["synth", "--candidates", "5000", "--distribution", ",".join([repr(1 / 6)] * 6),
                 "--accuracy", "0.75", "--seed", "1",
                 "--out", str(tmp_path / "t.csv"), "--scale-out", str(tmp_path / "s.json")]) == 0
    assert main(["matrix", "--train", str(tmp_path / "t.csv"), "--scale", str(tmp_path / "s.json"),
                 "--out", str(tmp_path / "m.json")]) == 0
    probs = np.array(persist.load_matrix(tmp_path / "m.json").probs)
    off = probs[~np.eye(6, dtype=bool)]
    assert np.allclose(np.diag(probs), 0.75, atol=0.02)
    assert np.allclose(off, 0.05, atol=0.01)


def test_matrix_perfect_model_is_identity(tmp_path):
    main(["synth", "--candidates", "100", "--accuracy", "1.0", "--seed", "1",
          "--out", str(tmp_path / "t.csv"), "--scale-out", str(tmp_path / "s.json")])
    assert main(["matrix", "--train", str(tmp_path / "t.csv"), "--scale", str(tmp_path / "s.json"),
                 "--out", str(tmp_path / "m.json")]) == 0
    assert np.array_equal(persist.load_matrix(tmp_path / "m.json").probs, np.eye(6))


def test_matrix_needs_both_labels(tmp_path, capsys):
    main(["synth", "--candidates", "10", "--seed", "1", "--out", str(tmp_path / "t.csv"),
          "--scale-out", str(tmp_path / "s.json")])
    assert main(["matrix", "--train", str(tmp_path / "t.csv"), "--scale", str(tmp_path / "s.json"),
                 "--out", str(tmp_path / "m.json")]) == 1
    assert "machine and human" in capsys.readouterr().err


def test_simulate_full_budget(workspace):
    out = workspace / "sweep.csv"
    args = ["simulate", "--test", str(workspace / "test.csv"), "--matrix", str(workspace / "matrix.json"),
            "--budgets", "1.0", "--trials", "2", "--seed", "1", "--out", str(out),
            "--plot", str(workspace / "sweep.svg"), "--audit-dir", str(workspace / "audit")]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 3 * 2
    for line in lines[1:]:
        assert line.split(",")[4:6] == ["1.0", "1.0"]
    assert (workspace / "sweep.svg").exists()
    assert sorted(p.name for p in (workspace / "audit").iterdir()) == [
        "weights_random.csv", "weights_reward.csv", "weights_uncertainty.csv"]


@pytest.mark.parametrize("budget", ["0", "1.5", "-0.1"])
def test_simulate_bad_budget(workspace, budget, capsys):
    args = ["simulate", "--test", str(workspace / "test.csv"), "--matrix", str(workspace / "matrix.json"),
            "--budgets", budget, "--trials", "1", "--seed", "1", "--out", str(workspace / "x.csv")]
    assert main(args) == 1
    assert "budget" in capsys.readouterr().err


def test_estimate_and_coverage(workspace):
    common = ["--test", str(workspace / "test.csv"), "--matrix", str(workspace / "matrix.json"),
              "--n-est", "50", "-B", "200", "--seed", "2"]
    assert main(["estimate", *common, "--budget", "0.5", "--out", str(workspace / "e.json")]) == 0
    result = json.loads((workspace / "e.json").read_text())
    assert result["guarantee"]["confidence_level"] == 0.95
    assert main(["coverage", *common, "--replications", "2", "--out", str(workspace / "c.csv")]) == 0
    assert (workspace / "c.csv").read_text().splitlines()[0] == "replication,metric,point,bound,truth"


def test_plot_reproduces_svg(workspace):
    args = ["simulate", "--test", str(workspace / "test.csv"), "--matrix", str(workspace / "matrix.json"),
            "--budgets", "0.2,0.4", "--trials", "2", "--seed", "1", "--out", str(workspace / "s.csv"),
            "--plot", str(workspace / "a.svg")]
    assert main(args) == 0
    assert main(["plot", "--report", str(workspace / "s.csv"), "--out", str(workspace / "b.svg")]) == 0
    assert (workspace / "a.svg").read_bytes() == (workspace / "b.svg").read_bytes()


def test_missing_file_is_io_error(tmp_path):
    assert main(["matrix", "--train", str(tmp_path / "nope.csv"), "--scale", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "m.json")]) == 2


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--test", "x"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["synth", "--candidates", "5", "--out", "x.csv"])
    assert info.value.code == 1
