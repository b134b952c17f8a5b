import json

import numpy as np
import pytest

from ndcn.cli import _default_jobs, main
from ndcn.dynamics import default_initial_state
from ndcn.graphgen import Graph, read_edgelist, write_edgelist

TINY_TRAIN = ["--task", "continuous", "--law", "heat", "--family", "er",
              "--n", "25", "--snapshots", "24", "--epochs", "20", "--runs", "1",
              "--seed", "5"]


class TestGenerate:
    def test_writes_edgelist(self, tmp_path):
        out = tmp_path / "g.edgelist"
        assert main(["generate", "--family", "er", "--n", "30", "--p", "0.2",
                     "--seed", "1", "--out", str(out)]) == 0
        with open(out) as fh:
            g = read_edgelist(fh)
        assert g.n == 30

    def test_er_p_zero_is_edgeless(self, tmp_path):
        out = tmp_path / "empty.edgelist"
        main(["generate", "--family", "er", "--n", "10", "--p", "0", "--out", str(out)])
        with open(out) as fh:
            assert read_edgelist(fh).num_edges == 0

    def test_community_blocks_in_header(self, tmp_path):
        out = tmp_path / "c.edgelist"
        main(["generate", "--family", "community", "--n", "400", "--out", str(out)])
        lines = out.read_text().split("\n")
        assert lines[0] == "n=400"
        assert lines[1] == "# blocks: 133 133 100 34"

    def test_grid_scale(self, tmp_path):
        out = tmp_path / "grid.edgelist"
        main(["generate", "--family", "grid", "--n", "400", "--out", str(out)])
        with open(out) as fh:
            assert read_edgelist(fh).n == 400

    def test_usage_error_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--family", "hypercube", "--out", str(tmp_path / "x")])
        assert exc.value.code == 2

    def test_non_square_grid_exit_2(self, tmp_path):
        assert main(["generate", "--family", "grid", "--n", "10",
                     "--out", str(tmp_path / "x")]) == 2


class TestSimulate:
    def test_grid_frames_show_initial_blocks(self, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--law", "heat", "--family", "grid", "--n", "400",
                     "--count", "6", "--seed", "2", "--frames", "--out", str(out)]) == 0
        frame0 = np.loadtxt(out / "frames" / "frame_0000.csv", delimiter=",")
        assert np.array_equal(frame0, default_initial_state(20).reshape(20, 20))

    def test_frame_round_trip_inverts_to_trajectory(self, tmp_path):
        out = tmp_path / "sim"
        main(["simulate", "--law", "heat", "--family", "er", "--n", "25",
              "--count", "4", "--seed", "3", "--frames", "--out", str(out)])
        ordering = np.loadtxt(out / "frames" / "ordering.csv", delimiter=",",
                              skiprows=1, dtype=np.int64)
        perm = ordering[:, 1]
        rows = {}
        for line in (out / "trajectory.csv").read_text().strip().split("\n")[1:]:
            t, node, dim, value = line.split(",")
            rows.setdefault(float(t), {})[int(node)] = float(value)
        times = sorted(rows)
        for k, t in enumerate(times):
            frame = np.loadtxt(out / f"frames/frame_{k:04d}.csv", delimiter=",")
            flat = frame.reshape(-1)[:25]
            state = np.array([rows[t][i] for i in range(25)])
            assert np.array_equal(flat, state[perm])

    def test_k2_long_horizon_reaches_equilibrium(self, tmp_path):
        k2file = tmp_path / "k2.edgelist"
        with open(k2file, "w") as fh:
            write_edgelist(Graph.from_edges(2, [(0, 1)]), fh)
        out = tmp_path / "sim"
        main(["simulate", "--law", "heat", "--graph", str(k2file), "--T", "20",
              "--count", "3", "--frames", "--out", str(out)])
        last = sorted((out / "frames").glob("frame_*.csv"))[-1]
        frame = np.loadtxt(last, delimiter=",")
        vals = frame.reshape(-1)[:2]
        # x0 = (25, 0) relaxes to the conserved mean
        assert np.max(np.abs(vals - 12.5)) <= 1e-6

    def test_unknown_law_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--law", "plasma", "--family", "grid",
                  "--out", str(tmp_path / "x")])
        assert exc.value.code == 2


class TestTrainEval:
    def test_train_eval_round_trip(self, tmp_path):
        out = tmp_path / "run"
        assert main(["train", *TINY_TRAIN, "--out", str(out)]) == 0
        results = json.loads((out / "results.json").read_text())
        assert results["failures"] == 0
        assert (out / "params_run0.ckpt").exists()
        assert "wall_clock" not in (out / "results.json").read_text()
        evalout = tmp_path / "eval.json"
        assert main(["eval", "--run-dir", str(out), "--out", str(evalout)]) == 0
        recomputed = json.loads(evalout.read_text())
        stored = results["runs"][0]["metrics"]
        for key, val in recomputed["0"].items():
            assert abs(val - stored[key]) <= 1e-12

    def test_repeat_run_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["train", *TINY_TRAIN, "--out", str(a)])
        main(["train", *TINY_TRAIN, "--out", str(b)])
        assert (a / "results.json").read_bytes() == (b / "results.json").read_bytes()
        assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()

    def test_config_file_overrides_flags(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 3}))
        out = tmp_path / "run"
        main(["train", *TINY_TRAIN, "--config", str(cfg), "--out", str(out)])
        config = json.loads((out / "config.json").read_text())
        assert config["plan"]["epochs"] == 3

    def test_unknown_config_key_exit_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"purple": True}))
        assert main(["train", *TINY_TRAIN, "--config", str(cfg),
                     "--out", str(tmp_path / "x")]) == 2

    def test_missing_bundle_exit_3(self, tmp_path):
        assert main(["train", "--task", "classify", "--dataset",
                     str(tmp_path / "nope"), "--out", str(tmp_path / "x")]) == 3

    def test_no_partial_outputs_on_error(self, tmp_path):
        out = tmp_path / "x"
        assert main(["train", "--task", "classify", "--dataset",
                     str(tmp_path / "nope"), "--out", str(out)]) == 3
        assert not out.exists()

    def test_eval_missing_dir_exit_3(self, tmp_path):
        assert main(["eval", "--run-dir", str(tmp_path / "ghost")]) == 3


class TestReproduce:
    def test_table1_single_cell(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 25, "snapshots": 24, "epochs": 10}))
        out = tmp_path / "rep"
        assert main(["reproduce", "table1", "--runs", "2", "--cell", "heat:er",
                     "--variant", "ndcn", "--config", str(cfg), "--out", str(out)]) == 0
        table = (out / "table.csv").read_text().strip().split("\n")
        assert table[0] == "dynamics,method,Grid,Random,Power Law,Small World,Community"
        row = [r for r in table[1:] if r.startswith("Heat Diffusion,NDCN")][0]
        cell = row.split(",")[3]
        assert "±" in cell
        assert (out / "cells" / "heat_er_ndcn.json").exists()

    def test_table5_synthetic(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 5, "hidden_dim": 8, "sbm_nodes": 60,
                                   "grid_alpha": [0.5]}))
        out = tmp_path / "rep"
        assert main(["reproduce", "table5-synthetic", "--runs", "1",
                     "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "table.csv").read_text().startswith("dataset,accuracy")

    def test_table5_cora_without_data_exit_3(self, tmp_path):
        assert main(["reproduce", "table5-cora", "--out", str(tmp_path / "x")]) == 3

    def test_bad_cell_exit_2(self, tmp_path):
        assert main(["reproduce", "table1", "--cell", "fire:ice",
                     "--out", str(tmp_path / "x")]) == 2


def test_jobs_env_default(monkeypatch):
    monkeypatch.setenv("NDCN_JOBS", "3")
    assert _default_jobs() == 3
    monkeypatch.setenv("NDCN_JOBS", "zebra")
    assert _default_jobs() == 1
    monkeypatch.delenv("NDCN_JOBS")
    assert _default_jobs() == 1
