import json

import numpy as np
import pytest

from cospace import cli, data


def _write_scene(path, seed=3):
    hs_centers = np.arange(400.0, 640.0, 20.0)
    ms_centers = np.array([450.0, 530.0, 610.0])
    rng = np.random.default_rng(5)
    spec = data.SceneSpec(
        classes=tuple(
            data.ClassSpec(hs_mean=0.5 + 0.3 * rng.standard_normal(hs_centers.size),
                           size=20)
            for _ in range(3)
        ),
        noise_sigma=0.15,
        ms_centers=ms_centers,
        hs_centers=hs_centers,
        srf_fwhm=40.0,
        test_fraction=0.5,
        seed=seed,
    )
    path.write_text(spec.to_json())
    return spec


class TestPipeline:
    def test_simulate_fit_transform_predict_evaluate(self, tmp_path, capsys):
        spec_path = tmp_path / "scene.json"
        _write_scene(spec_path)
        scene_dir = tmp_path / "scene"
        assert cli.main(["simulate", "--spec", str(spec_path),
                         "--out", str(scene_dir)]) == 0
        for name in ("train_ms.csv", "train_hs.csv", "test_ms.csv"):
            assert (scene_dir / name).exists()

        model_path = tmp_path / "model.json"
        assert cli.main(["fit",
                         "--train-ms", str(scene_dir / "train_ms.csv"),
                         "--train-hs", str(scene_dir / "train_hs.csv"),
                         "--alpha", "0.1", "--beta", "0.01", "--dim", "3",
                         "--out", str(model_path)]) == 0
        doc = json.loads(model_path.read_text())
        assert doc["dim"] == 3
        # trace must be non-increasing
        trace = doc["objective_trace"]
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

        embedded = tmp_path / "embedded.csv"
        assert cli.main(["transform", "--model", str(model_path),
                         "--input", str(scene_dir / "test_ms.csv"),
                         "--modality", "ms", "--out", str(embedded)]) == 0
        emb, _ = data.load_csv(embedded)
        assert emb.shape[0] == 3

        pred_path = tmp_path / "pred.csv"
        assert cli.main(["predict", "--model", str(model_path),
                         "--input", str(scene_dir / "test_ms.csv"),
                         "--classifier", "1nn",
                         "--out", str(pred_path)]) == 0
        lines = pred_path.read_text().splitlines()
        assert lines[0] == "index,label"

        report_path = tmp_path / "report.json"
        assert cli.main(["evaluate", "--pred", str(pred_path),
                         "--truth", str(scene_dir / "test_ms.csv"),
                         "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert set(report) >= {"oa", "aa", "kappa", "confusion"}
        assert report["oa"] > 0.5
        out = capsys.readouterr().out
        assert "oa=" in out

    def test_predict_linear_and_p(self, tmp_path):
        spec_path = tmp_path / "scene.json"
        _write_scene(spec_path)
        scene_dir = tmp_path / "scene"
        cli.main(["simulate", "--spec", str(spec_path), "--out", str(scene_dir)])
        model_path = tmp_path / "model.json"
        cli.main(["fit", "--train-ms", str(scene_dir / "train_ms.csv"),
                  "--train-hs", str(scene_dir / "train_hs.csv"),
                  "--dim", "3", "--out", str(model_path)])
        for clf in ("linear", "p"):
            out = tmp_path / f"pred_{clf}.csv"
            assert cli.main(["predict", "--model", str(model_path),
                             "--input", str(scene_dir / "test_ms.csv"),
                             "--classifier", clf, "--out", str(out)]) == 0
            assert out.read_text().startswith("index,label\n")

    def test_predict_pgm(self, tmp_path):
        spec_path = tmp_path / "scene.json"
        _write_scene(spec_path)
        scene_dir = tmp_path / "scene"
        cli.main(["simulate", "--spec", str(spec_path), "--out", str(scene_dir)])
        model_path = tmp_path / "model.json"
        cli.main(["fit", "--train-ms", str(scene_dir / "train_ms.csv"),
                  "--train-hs", str(scene_dir / "train_hs.csv"),
                  "--dim", "2", "--out", str(model_path)])
        pgm = tmp_path / "map.pgm"
        assert cli.main(["predict", "--model", str(model_path),
                         "--input", str(scene_dir / "test_ms.csv"),
                         "--pgm", str(pgm), "--width", "10", "--height", "3",
                         "--out", str(tmp_path / "pred.csv")]) == 0
        assert pgm.read_bytes().startswith(b"P5\n10 3\n255\n")
        # missing dimensions is a usage error
        assert cli.main(["predict", "--model", str(model_path),
                         "--input", str(scene_dir / "test_ms.csv"),
                         "--pgm", str(pgm),
                         "--out", str(tmp_path / "pred.csv")]) == 1


class TestExitCodes:
    def test_missing_file_is_io(self, tmp_path, capsys):
        code = cli.main(["fit", "--train-ms", str(tmp_path / "absent.csv"),
                         "--train-hs", str(tmp_path / "absent.csv"),
                         "--out", str(tmp_path / "m.json")])
        assert code == 3
        assert "io" in capsys.readouterr().err

    def test_malformed_csv_is_io(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("band_1\n1.0\nnope\n")
        code = cli.main(["fit", "--train-ms", str(bad), "--train-hs", str(bad),
                         "--out", str(tmp_path / "m.json")])
        assert code == 3

    def test_unknown_flag_is_validation(self, capsys):
        assert cli.main(["fit", "--frobnicate"]) == 1
        assert "validation" in capsys.readouterr().err

    def test_unknown_subcommand_is_validation(self):
        assert cli.main(["explode"]) == 1

    def test_oversized_dim_is_validation(self, tmp_path, capsys):
        spec_path = tmp_path / "scene.json"
        _write_scene(spec_path)
        scene_dir = tmp_path / "scene"
        cli.main(["simulate", "--spec", str(spec_path), "--out", str(scene_dir)])
        code = cli.main(["fit", "--train-ms", str(scene_dir / "train_ms.csv"),
                         "--train-hs", str(scene_dir / "train_hs.csv"),
                         "--dim", "999", "--out", str(tmp_path / "m.json")])
        assert code == 1
        assert "validation" in capsys.readouterr().err

    def test_singular_system_is_numerical(self, tmp_path, capsys):
        # rank-deficient stacked data with alpha=0 makes the map update singular
        ms = np.array([[1.0, 2.0], [1.0, 2.0]])
        hs = np.array([[3.0, 4.0], [3.0, 4.0]])
        data.save_csv(tmp_path / "ms.csv", ms, [1, 2])
        data.save_csv(tmp_path / "hs.csv", hs, [1, 2])
        code = cli.main(["fit", "--train-ms", str(tmp_path / "ms.csv"),
                         "--train-hs", str(tmp_path / "hs.csv"),
                         "--alpha", "0", "--dim", "3",
                         "--out", str(tmp_path / "m.json")])
        assert code == 2
        assert "numerical" in capsys.readouterr().err

    def test_prediction_truth_length_mismatch(self, tmp_path):
        pred = tmp_path / "pred.csv"
        pred.write_text("index,label\n0,1\n1,2\n")
        truth = tmp_path / "truth.csv"
        truth.write_text("label\n1\n")
        assert cli.main(["evaluate", "--pred", str(pred), "--truth", str(truth),
                         "--out", str(tmp_path / "rep.json")]) == 1


class TestBatchCommands:
    def _config(self, tmp_path):
        spec = _write_scene(tmp_path / "scene.json")
        config = {
            "dataset": {"scene_spec": json.loads(spec.to_json())},
            "methods": ["baseline", "pjdr", "cospace"],
            "grid": {"dims": [2], "alphas": [0.1], "betas": [0.01],
                     "ks": [3], "sigmas": [1.0], "folds": 3},
            "seed": 0,
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        return path

    def test_benchmark_outputs_are_byte_identical(self, tmp_path):
        config = self._config(tmp_path)
        for name in ("run_a", "run_b"):
            assert cli.main(["benchmark", "--config", str(config),
                             "--out", str(tmp_path / name)]) == 0
        for artifact in ("results.json", "table.csv", "predictions_cospace_1nn.csv"):
            a = (tmp_path / "run_a" / artifact).read_bytes()
            b = (tmp_path / "run_b" / artifact).read_bytes()
            assert a == b
        timings = json.loads((tmp_path / "run_a" / "timings.json").read_text())
        assert all(v >= 0 for v in timings.values())

    def test_gridsearch_command(self, tmp_path):
        config_path = self._config(tmp_path)
        config = json.loads(config_path.read_text())
        config["methods"] = ["baseline", "pjdr"]
        config_path.write_text(json.dumps(config))
        assert cli.main(["gridsearch", "--config", str(config_path),
                         "--out", str(tmp_path / "gs")]) == 0
        doc = json.loads((tmp_path / "gs" / "gridsearch.json").read_text())
        assert doc["pjdr"]["best"]["params"] == {"dim": 2}
        assert doc["baseline"]["best"]["score"] is None


class TestConsoleScript:
    def test_entry_point_and_thread_cap(self, tmp_path):
        import subprocess

        env = dict(__import__("os").environ, COSPACE_THREADS="1")
        out = subprocess.run(["cospace", "--help"], capture_output=True,
                             text=True, env=env)
        assert out.returncode == 0
        assert "simulate" in out.stdout and "benchmark" in out.stdout
