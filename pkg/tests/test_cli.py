import json

import numpy as np
import pytest

from gsdkit import (GsdConfig, LabelMap, compute_batch, one_hot, read_tensor,
                    save_label_map, write_tensor)
from gsdkit.cli import run
from gsdkit.report import strip_timings

from conftest import random_instances


@pytest.fixture
def inst_file(tmp_path, rng):
    ids = random_instances(rng, 12, 12, n_instances=2)
    path = tmp_path / "inst.gsdt"
    write_tensor(path, ids)
    return path, ids


def read_report(path):
    return json.loads(path.read_text())


class TestGsdCompute:
    def test_matches_library(self, tmp_path, inst_file):
        path, ids = inst_file
        out = tmp_path / "d.gsdt"
        rc = run(["gsd", "compute", "--instances", str(path), "--out", str(out),
                  "--threads", "1", "--report", str(tmp_path / "r.json")])
        assert rc == 0
        want = compute_batch(ids[None], GsdConfig(), threads=1).values
        assert np.array_equal(read_tensor(out), want)
        rep = read_report(tmp_path / "r.json")
        assert rep["results"]["shape"] == [1, 72, 12, 12]
        assert rep["warnings"] == []

    def test_empty_map(self, tmp_path):
        write_tensor(tmp_path / "z.gsdt", np.zeros((4, 4), dtype=np.int32))
        rc = run(["gsd", "compute", "--instances", str(tmp_path / "z.gsdt"),
                  "--out", str(tmp_path / "o.gsdt"),
                  "--report", str(tmp_path / "r.json")])
        assert rc == 0
        assert (read_tensor(tmp_path / "o.gsdt") == 0).all()
        assert read_report(tmp_path / "r.json")["warnings"] == []

    def test_report_deterministic_modulo_timings(self, tmp_path, inst_file):
        path, _ = inst_file
        reps = []
        payloads = []
        for i in range(2):
            rc = run(["gsd", "compute", "--instances", str(path),
                      "--out", str(tmp_path / "o.gsdt"),
                      "--report", str(tmp_path / f"r{i}.json"), "--threads", "1"])
            assert rc == 0
            reps.append(read_report(tmp_path / f"r{i}.json"))
            payloads.append((tmp_path / "o.gsdt").read_bytes())
        a, b = (json.dumps(strip_timings(r), sort_keys=False) for r in reps)
        assert a == b
        assert payloads[0] == payloads[1]

    def test_custom_config_and_raw(self, tmp_path, inst_file):
        path, ids = inst_file
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"n_rho": 3, "n_theta": 4}))
        rc = run(["gsd", "compute", "--instances", str(path), "--config",
                  str(cfg_path), "--raw", "--out", str(tmp_path / "o.gsdt"),
                  "--report", str(tmp_path / "r.json")])
        assert rc == 0
        want = compute_batch(ids[None], GsdConfig(n_rho=3, n_theta=4),
                             standardized=False).values
        assert np.array_equal(read_tensor(tmp_path / "o.gsdt"), want)

    def test_bad_config_exits_2(self, tmp_path, inst_file, capsys):
        path, _ = inst_file
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{not json")
        rc = run(["gsd", "compute", "--instances", str(path), "--config",
                  str(cfg_path), "--out", str(tmp_path / "o.gsdt")])
        assert rc == 2
        assert "config" in capsys.readouterr().err

    def test_missing_input_exits_2(self, tmp_path):
        rc = run(["gsd", "compute", "--instances", str(tmp_path / "nope.gsdt"),
                  "--out", str(tmp_path / "o.gsdt")])
        assert rc == 2

    def test_from_labels(self, tmp_path):
        labels = np.zeros((6, 6), dtype=np.int32)
        labels[0:2, 0:2] = 1
        labels[4:6, 4:6] = 1
        write_tensor(tmp_path / "lab.gsdt", labels)
        rc = run(["gsd", "compute", "--instances", str(tmp_path / "lab.gsdt"),
                  "--from-labels", "--out", str(tmp_path / "o.gsdt"),
                  "--report", str(tmp_path / "r.json")])
        assert rc == 0
        out = read_tensor(tmp_path / "o.gsdt")
        # the two same-class blobs become distinct instances: their pixels
        # carry descriptors, and so does the background component
        assert (out != 0).any()

    def test_gsd_threads_env(self, tmp_path, inst_file, monkeypatch):
        path, ids = inst_file
        monkeypatch.setenv("GSD_THREADS", "2")
        rc = run(["gsd", "compute", "--instances", str(path),
                  "--out", str(tmp_path / "o.gsdt")])
        assert rc == 0
        want = compute_batch(ids[None], GsdConfig(), threads=2).values
        assert np.array_equal(read_tensor(tmp_path / "o.gsdt"), want)

    def test_figures_written(self, tmp_path, inst_file):
        path, _ = inst_file
        rc = run(["gsd", "compute", "--instances", str(path),
                  "--out", str(tmp_path / "o.gsdt"),
                  "--figures", str(tmp_path / "figs"),
                  "--report", str(tmp_path / "r.json")])
        assert rc == 0
        assert (tmp_path / "figs" / "descriptor_channels.png").exists()


class TestContour:
    def test_json_dump(self, tmp_path):
        ids = np.zeros((4, 4), dtype=np.int32)
        ids[1:3, 1:3] = 1
        write_tensor(tmp_path / "i.gsdt", ids)
        rc = run(["contour", "--instances", str(tmp_path / "i.gsdt"),
                  "--out", str(tmp_path / "c.json")])
        assert rc == 0
        data = json.loads((tmp_path / "c.json").read_text())
        assert data == {"1": [[1, 1], [2, 1], [1, 2], [2, 2]]}

    def test_absent_id_exits_2(self, tmp_path, capsys):
        write_tensor(tmp_path / "i.gsdt", np.zeros((3, 3), dtype=np.int32))
        rc = run(["contour", "--instances", str(tmp_path / "i.gsdt"), "--id", "4",
                  "--out", str(tmp_path / "c.json")])
        assert rc == 2


class TestEmbed:
    def test_multi_scale_outputs(self, tmp_path, rng):
        ids = random_instances(rng, 8, 8)
        labels = (ids > 0).astype(np.int32)
        save_label_map(tmp_path / "lab.png", LabelMap(labels=labels, num_classes=2))
        dt = compute_batch(ids[None])
        write_tensor(tmp_path / "d.gsdt", dt.values)
        rc = run(["embed", "--labels", str(tmp_path / "lab.png"),
                  "--gsd", str(tmp_path / "d.gsdt"), "--scales", "8,4,2",
                  "--out-prefix", str(tmp_path / "emb"),
                  "--report", str(tmp_path / "r.json")])
        assert rc == 0
        for size in (8, 4, 2):
            arr = read_tensor(tmp_path / f"emb_{size}x{size}.gsdt")
            assert arr.shape == (1, 2 + 72, size, size)
            assert (arr[:, :2].sum(axis=1) == 1.0).all()
        # native scale embedding splits back into its inputs
        native = read_tensor(tmp_path / "emb_8x8.gsdt")
        assert np.array_equal(native[:, 2:], dt.values)
        assert np.array_equal(native[:, :2],
                              one_hot(LabelMap(labels=labels, num_classes=2))[None])

    def test_bad_scale_exits_2(self, tmp_path, rng):
        ids = random_instances(rng, 8, 8)
        save_label_map(tmp_path / "lab.png",
                       LabelMap(labels=(ids > 0).astype(np.int32), num_classes=2))
        write_tensor(tmp_path / "d.gsdt", compute_batch(ids[None]).values)
        rc = run(["embed", "--labels", str(tmp_path / "lab.png"),
                  "--gsd", str(tmp_path / "d.gsdt"), "--scales", "8,3",
                  "--out-prefix", str(tmp_path / "emb")])
        assert rc == 2


class TestFid:
    def test_identical_features(self, tmp_path, rng):
        feats = rng.standard_normal((64, 32)).astype(np.float32)
        write_tensor(tmp_path / "a.gsdt", feats)
        write_tensor(tmp_path / "b.gsdt", feats)
        rc = run(["fid", "--real", str(tmp_path / "a.gsdt"),
                  "--fake", str(tmp_path / "b.gsdt"),
                  "--report", str(tmp_path / "r.json")])
        assert rc == 0
        assert abs(read_report(tmp_path / "r.json")["results"]["fid"]) <= 1e-6

    def test_wrong_rank_exits_2(self, tmp_path):
        write_tensor(tmp_path / "a.gsdt", np.zeros((2, 2, 2), dtype=np.float32))
        rc = run(["fid", "--real", str(tmp_path / "a.gsdt"),
                  "--fake", str(tmp_path / "a.gsdt")])
        assert rc == 2


class TestSegMetrics:
    def make_dirs(self, tmp_path, rng, k=4, n=3):
        pred_dir = tmp_path / "pred"
        truth_dir = tmp_path / "truth"
        pred_dir.mkdir()
        truth_dir.mkdir()
        for i in range(n):
            truth = rng.integers(0, k, (8, 8)).astype(np.int32)
            pred = np.where(rng.random((8, 8)) < 0.8, truth,
                            rng.integers(0, k, (8, 8))).astype(np.int32)
            save_label_map(truth_dir / f"{i}.png", LabelMap(labels=truth, num_classes=k))
            save_label_map(pred_dir / f"{i}.png", LabelMap(labels=pred, num_classes=k))
        return pred_dir, truth_dir

    def test_report_and_csv(self, tmp_path, rng):
        pred_dir, truth_dir = self.make_dirs(tmp_path, rng)
        rc = run(["seg-metrics", "--pred", str(pred_dir), "--truth", str(truth_dir),
                  "--report", str(tmp_path / "r.json"), "--csv", str(tmp_path / "per.csv"),
                  "--figures", str(tmp_path / "figs")])
        assert rc == 0
        rep = read_report(tmp_path / "r.json")
        assert 0.0 < rep["results"]["miou"] <= 1.0
        assert rep["results"]["pairs"] == 3
        lines = (tmp_path / "per.csv").read_text().splitlines()
        assert lines[0] == "class,true_pixels,iou"
        assert len(lines) == 5
        assert (tmp_path / "figs" / "confusion.png").exists()
        assert (tmp_path / "figs" / "per_class_iou.png").exists()

    def test_ignore_class(self, tmp_path, rng):
        pred_dir, truth_dir = self.make_dirs(tmp_path, rng)
        rc = run(["seg-metrics", "--pred", str(pred_dir), "--truth", str(truth_dir),
                  "--ignore", "0", "--report", str(tmp_path / "r.json")])
        assert rc == 0
        rep = read_report(tmp_path / "r.json")
        assert rep["config"]["ignore"] == 0

    def test_missing_prediction_exits_2(self, tmp_path, rng):
        pred_dir, truth_dir = self.make_dirs(tmp_path, rng)
        (pred_dir / "0.png").unlink()
        rc = run(["seg-metrics", "--pred", str(pred_dir), "--truth", str(truth_dir)])
        assert rc == 2


class TestDiversityCmd:
    def test_manifest(self, tmp_path):
        labels = np.zeros((4, 4), dtype=np.int32)
        labels[:, 2:] = 1
        save_label_map(tmp_path / "lab.png", LabelMap(labels=labels, num_classes=2))
        dist = np.full((4, 4), 0.25, dtype=np.float32)
        dist[:, 2:] = 0.5
        write_tensor(tmp_path / "d0.gsdt", dist)
        (tmp_path / "man.json").write_text(json.dumps(
            {"num_classes": 2,
             "pairs": [{"distances": "d0.gsdt", "labels": "lab.png"}]}))
        rc = run(["diversity", "--pairs", str(tmp_path / "man.json"),
                  "--report", str(tmp_path / "r.json"), "--csv", str(tmp_path / "d.csv")])
        assert rc == 0
        res = read_report(tmp_path / "r.json")["results"]
        assert abs(res["mcsd"] - 0.375) < 1e-9
        assert abs(res["mocd"] - 0.375) < 1e-9
        assert (tmp_path / "d.csv").read_text().startswith("class,")

    def test_empty_manifest_exits_2(self, tmp_path):
        (tmp_path / "man.json").write_text(json.dumps({"pairs": []}))
        assert run(["diversity", "--pairs", str(tmp_path / "man.json")]) == 2


class TestLoss:
    def test_stdout_is_single_json_number(self, tmp_path, capsys):
        write_tensor(tmp_path / "z.gsdt", np.zeros((3, 3), dtype=np.float32))
        rc = run(["loss", "--op", "adv_d", "--inputs", str(tmp_path / "z.gsdt"),
                  str(tmp_path / "z.gsdt")])
        assert rc == 0
        out = capsys.readouterr().out.strip()
        assert json.loads(out) == 2.0

    def test_ref_total_schedule(self, capsys):
        rc = run(["loss", "--op", "ref_total", "--values", "1", "10", "100",
                  "--epoch", "79", "--gamma", "80"])
        assert rc == 0 and json.loads(capsys.readouterr().out) == 1.0
        rc = run(["loss", "--op", "ref_total", "--values", "1", "10", "100",
                  "--epoch", "80", "--gamma", "80"])
        assert rc == 0 and json.loads(capsys.readouterr().out) == 111.0

    def test_total_with_weights(self, capsys):
        # unnamed weights keep their defaults: 1*1 + 2*1 + 10*1 + 1*1
        rc = run(["loss", "--op", "total", "--values", "1", "1", "1", "1",
                  "--weights", '{"lambda_fm": 2.0}'])
        assert rc == 0 and json.loads(capsys.readouterr().out) == 14.0

    def test_fm_stacks(self, tmp_path, capsys):
        a = np.zeros((2, 2), dtype=np.float32)
        b = np.ones((2, 2), dtype=np.float32)
        write_tensor(tmp_path / "a.gsdt", a)
        write_tensor(tmp_path / "b.gsdt", b)
        rc = run(["loss", "--op", "fm", "--inputs",
                  str(tmp_path / "a.gsdt"), str(tmp_path / "b.gsdt")])
        assert rc == 0 and json.loads(capsys.readouterr().out) == 1.0

    def test_ref_ce_inputs(self, tmp_path, capsys):
        logits = np.zeros((4, 2, 2), dtype=np.float32)
        write_tensor(tmp_path / "l.gsdt", logits)
        write_tensor(tmp_path / "m.gsdt", np.zeros((2, 2), dtype=np.int32))
        rc = run(["loss", "--op", "ref_ce", "--inputs", str(tmp_path / "l.gsdt"),
                  str(tmp_path / "m.gsdt")])
        assert rc == 0
        assert abs(json.loads(capsys.readouterr().out) - np.log(4)) < 1e-12

    def test_wrong_arity_exits_2(self, tmp_path):
        write_tensor(tmp_path / "z.gsdt", np.zeros(3, dtype=np.float32))
        assert run(["loss", "--op", "adv_d", "--inputs", str(tmp_path / "z.gsdt")]) == 2
        assert run(["loss", "--op", "total", "--values", "1"]) == 2


class TestSelftest:
    def test_single_suite_passes(self, capsys):
        assert run(["selftest", "--only", "config.defaults"]) == 0
        out = capsys.readouterr().out
        assert "[PASS] config.defaults" in out

    def test_fault_injection_reports_module(self, monkeypatch, capsys):
        monkeypatch.setenv("GSDKIT_SELFTEST_FAULT", "config.defaults")
        assert run(["selftest", "--only", "config.defaults"]) == 1
        out = capsys.readouterr().out
        assert "[FAIL] config.defaults" in out

    def test_list(self, capsys):
        assert run(["selftest", "--list"]) == 0
        out = capsys.readouterr().out
        assert "gsd.bruteforce" in out

    def test_runs_deterministic(self, capsys):
        assert run(["selftest", "--only", "metrics.diversity"]) == 0
        first = capsys.readouterr().out
        assert run(["selftest", "--only", "metrics.diversity"]) == 0
        assert capsys.readouterr().out == first


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2


def test_inputs_never_mutated(tmp_path, rng):
    ids = random_instances(rng, 10, 10)
    write_tensor(tmp_path / "i.gsdt", ids)
    before = (tmp_path / "i.gsdt").read_bytes()
    run(["gsd", "compute", "--instances", str(tmp_path / "i.gsdt"),
         "--out", str(tmp_path / "o.gsdt")])
    assert (tmp_path / "i.gsdt").read_bytes() == before
