import numpy as np
import pytest

from rssiloc import cli
from rssiloc.config import KEYS, Config, ConfigError
from rssiloc.kvfile import parse_kv

COMMAND_KEYS = {
    "simulate": cli.SIM_KEYS,
    "preprocess": cli.PRE_KEYS,
    "train": cli.TRAIN_KEYS,
    "eval": cli.EVAL_KEYS,
    "compare": cli.COMPARE_KEYS,
}
FAST = ["--trajectory.duration_s", "60", "--train.iterations", "4", "--train.batch_size", "16",
        "--train.eval_every", "2"]


def run_in(tmp_path, *argv):
    """Run a command against tmp_path with fast settings; options in argv win."""
    split = next((i for i, a in enumerate(argv) if a.startswith("--")), len(argv))
    return cli.run([*argv[:split], *FAST, "--paths.data", str(tmp_path / "data"),
                    "--paths.out", str(tmp_path / "runs"), *argv[split:]])


@pytest.mark.parametrize("command", sorted(COMMAND_KEYS))
def test_help_lists_every_key_read(command, capsys):
    assert cli.run([command, "--help"]) == 0
    text = capsys.readouterr().out
    for name in KEYS:
        if name.startswith(COMMAND_KEYS[command]) and not name.startswith("node"):
            assert name in text
    if "node" in COMMAND_KEYS[command]:
        assert "node<i>.<field>" in text


def test_top_level_help(capsys):
    assert cli.run(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_config_precedence(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nchannel.sigma = 2\ntrain.lr = 0.01\n")
    cfg = Config.load(path, {"train.lr": "0.5"})
    assert cfg["channel.sigma"] == 2.0
    assert cfg["train.lr"] == 0.5
    assert cfg["channel.gamma"] == 2.2


@pytest.mark.parametrize("overrides", [
    {"nope.key": "1"},
    {"channel.sigma": "-1"},
    {"channel.rho": "1.0"},
    {"bins.n_bins": "abc"},
    {"split.train": "0.9", "split.val": "0.2"},
    {"pre.median_window": "4"},
    {"arena.wap_x": "4.0"},
])
def test_invalid_config_rejected(overrides):
    with pytest.raises(ConfigError):
        Config.load(None, overrides)


def test_node_override_applies_to_one_node():
    params = Config.load(None, {"node4.sigma": "1.5"}).channel_params()
    assert params[4].sigma == 1.5
    assert all(p.sigma == 4.0 for p in params[:4])


def test_exit_codes(tmp_path, capsys):
    assert cli.run(["simulate", "--bogus", "1"]) == 2
    assert cli.run(["simulate", "--channel.sigma", "-3"]) == 2
    assert cli.run(["train", "gru"]) == 2
    assert run_in(tmp_path, "preprocess") == 3          # no dataset yet
    assert run_in(tmp_path, "eval", "--arch", "fcn") == 3  # no checkpoint
    assert cli.run(["eval", "--checkpoint", str(tmp_path / "missing.bin")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.run(["simulate", "--paths.data", str(blocker / "sub"), *FAST]) == 3
    assert run_in(tmp_path, "simulate", "--trajectory.duration_s", "2") == 0
    assert run_in(tmp_path, "preprocess", "--trajectory.duration_s", "2") == 2  # too short to split
    capsys.readouterr()


def test_numeric_error_exit_code(tmp_path, monkeypatch):
    assert run_in(tmp_path, "simulate") == 0

    def explode(*args, **kwargs):
        raise FloatingPointError("non-finite loss at iteration 1")

    monkeypatch.setattr(cli, "train", explode)
    assert run_in(tmp_path, "train", "fcn") == 4


def test_simulate_reports_record_counts(tmp_path, capsys):
    assert run_in(tmp_path, "simulate") == 0
    assert "1200 records/node" in capsys.readouterr().out


def _tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_pipeline_deterministic(tmp_path, capsys):
    trees = []
    for k in range(2):
        base = tmp_path / f"run{k}"
        for argv in (["simulate"], ["preprocess"], ["train", "fcn"], ["train", "lstm"]):
            assert run_in(base, *argv) == 0
        trees.append(_tree_bytes(base))
    assert trees[0].keys() == trees[1].keys()
    assert {"data/env0/records.csv", "data/env0/truth.csv", "data/env0/meta.txt", "runs/tensors.npz",
            "runs/fcn/checkpoint.bin", "runs/fcn/trace.csv", "runs/lstm/checkpoint.bin"} <= trees[0].keys()
    for name in trees[0]:
        assert trees[0][name] == trees[1][name], name
    capsys.readouterr()


def test_environments_differ(tmp_path, capsys):
    assert run_in(tmp_path, "simulate", "--sim.environments", "4") == 0
    offsets = []
    for e in range(4):
        meta = parse_kv((tmp_path / "data" / f"env{e}" / "meta.txt").read_text())
        assert meta["env"] == str(e)
        offsets.append(tuple(meta[f"node{i}.multipath_offset_db"] for i in range(4)))
    assert len(set(offsets)) == 4
    assert "env3" in capsys.readouterr().out


def test_eval_prints_table_row(tmp_path, capsys):
    assert run_in(tmp_path, "simulate") == 0
    assert run_in(tmp_path, "train", "cnn") == 0
    capsys.readouterr()
    assert run_in(tmp_path, "eval", "--arch", "cnn") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["dataset", "confidence_pct", "confidence_bound_cm", "avg_upper_bound_cm",
                              "n_cases"]
    assert out[1].split()[0] == "env0/cnn"
    assert out[1].split()[2] == "5.865"
    assert (tmp_path / "runs" / "cnn" / "metrics.csv").exists()


def test_compare_shares_iteration_axis(tmp_path, capsys):
    assert run_in(tmp_path, "simulate") == 0
    assert run_in(tmp_path, "compare") == 0
    lines = (tmp_path / "runs" / "compare.csv").read_text().splitlines()
    assert lines[0] == "iteration,fcn_val_accuracy,cnn_val_accuracy,lstm_val_accuracy"
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert rows.shape == (2, 4)
    assert rows[:, 0].tolist() == [2, 4]
    table = capsys.readouterr().out
    for name in ("fcn", "cnn", "lstm", "pathloss-baseline"):
        assert name in table


def test_stale_tensor_cache_rejected(tmp_path, capsys):
    assert run_in(tmp_path, "simulate") == 0
    assert run_in(tmp_path, "preprocess") == 0
    assert run_in(tmp_path, "train", "fcn", "--pre.window", "10") == 2
    capsys.readouterr()
