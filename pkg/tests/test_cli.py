import json

import numpy as np
import pytest

from phec.classify import TrainConfig, mlp_fit
from phec.cli import main
from phec.config import parse_config
from phec.data import load_dataset, save_dataset, synth_generate
from phec.errors import ConfigError, DataError
from phec.federated import StackedModel
from phec.pipelines import load_bundle
from phec.reduce import pca_fit
from phec.serialize import load_model, save_model


class TestParseConfig:
    def test_minimal_config_gets_defaults(self):
        cfg = parse_config('{"pipeline": "phec-centralized", "data": "d.json"}')
        assert cfg.grid_size == 201
        assert cfg.u == 0.05
        assert cfg.knn.k == 5
        assert cfg.forest.trees == 100
        assert cfg.federated.aggregation == "fedstack"

    def test_rho_out_of_range(self):
        with pytest.raises(ConfigError, match="rho"):
            parse_config(
                '{"pipeline": "phec-centralized", "data": "d", "noise": {"rho": 60}}'
            )

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="gammma"):
            parse_config('{"pipeline": "phec-centralized", "data": "d", "gammma": 0.5}')

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="depth"):
            parse_config(
                '{"pipeline": "phec-centralized", "data": "d", "forest": {"depth": 3}}'
            )

    def test_missing_required_keys(self):
        with pytest.raises(ConfigError, match="pipeline"):
            parse_config('{"data": "d"}')
        with pytest.raises(ConfigError, match="data"):
            parse_config('{"pipeline": "phec-centralized"}')

    def test_nt_requires_k_at_least_five(self):
        with pytest.raises(ConfigError, match="k >= 5"):
            parse_config(
                '{"pipeline": "nt-phec-centralized", "data": "d", "knn": {"k": 3}}'
            )

    def test_nt_federated_forces_no_hidden_layers(self):
        cfg = parse_config('{"pipeline": "nt-phec-federated", "data": "d"}')
        assert cfg.mlp.hidden == []
        with pytest.raises(ConfigError, match="hidden"):
            parse_config(
                '{"pipeline": "nt-phec-federated", "data": "d", "mlp": {"hidden": [8]}}'
            )

    def test_echo_roundtrip(self):
        text = json.dumps(
            {"pipeline": "phec-federated", "data": "d.json", "u": 0.1, "seed": 3}
        )
        cfg = parse_config(text)
        echoed = parse_config(json.dumps(cfg.echo()))
        assert echoed.echo() == cfg.echo()


class TestModelSerialization:
    def test_stacked_roundtrip_identical_predictions(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(60, 4))
        y = (rng.random(60) < 0.5).astype(np.uint8)
        columns = [
            mlp_fit(X, y, [4, 6, 1], None, TrainConfig(eta=0.1, epochs=3, seed=s))
            for s in (1, 2, 3)
        ]
        model = StackedModel(columns, gamma_star=0.4)
        path = tmp_path / "stacked.json"
        save_model(model, path)
        back = load_model(path)
        queries = rng.normal(size=(100, 4))
        assert np.array_equal(back.scores_matrix(queries), model.scores_matrix(queries))
        assert back.gamma_star == model.gamma_star

    def test_pca_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        model = pca_fit(rng.normal(size=(20, 5)), 3)
        path = tmp_path / "pca.json"
        save_model(model, path)
        back = load_model(path)
        assert np.array_equal(back.components, model.components)
        assert np.array_equal(back.mean, model.mean)
        assert np.array_equal(back.explained_variance, model.explained_variance)

    def test_missing_version_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"format": "phec-model", "kind": "pca"}')
        with pytest.raises(DataError, match="version"):
            load_model(path)

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json")
        with pytest.raises(DataError, match="corrupt"):
            load_model(path)


@pytest.fixture
def workdir(tmp_path):
    train_path = tmp_path / "train.json"
    test_path = tmp_path / "test.json"
    ds = synth_generate(
        "separable",
        {"DoS": 60, "Probe": 60, "R2L": 60, "U2R": 60, "Normal": 240},
        seed=0,
    )
    from phec.data import split

    pool, test = split(ds, 0.8, stratified=True, seed=0)
    save_dataset(pool, train_path)
    save_dataset(test, test_path)
    return tmp_path, train_path, test_path


def write_config(tmp_path, train_path, pipeline, **overrides):
    cfg = {
        "pipeline": pipeline,
        "data": str(train_path),
        "model_out": str(tmp_path / "model.json"),
        "report_out": str(tmp_path / "train_report.json"),
        "seed": 7,
        "forest": {"trees": 15, "max_depth": 8},
        "linear": {"epochs": 40},
        "mlp": {"hidden": [8], "epochs": 10, "eta": 0.2},
        "federated": {"t_max": 4, "patience": 2, "epochs_per_round": 2},
        "alpha_grid": [0.35, 0.5, 0.65],
    }
    if pipeline == "nt-phec-federated":
        cfg["mlp"] = {"epochs": 10, "eta": 0.2}
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


class TestCliCommands:
    def test_synth_noise_roundtrip(self, tmp_path):
        out = tmp_path / "synth.json"
        assert main(["synth", "--preset", "separable", "--out", str(out), "--seed", "3"]) == 0
        ds = load_dataset(out)
        assert ds.n == 800
        noisy_out = tmp_path / "noisy.json"
        assert (
            main(
                ["noise", "--data", str(out), "--rho", "20", "--seed", "1",
                 "--out", str(noisy_out)]
            )
            == 0
        )
        noisy = load_dataset(noisy_out)
        assert noisy.noisy_labels
        assert 0 < int((noisy.binary_label != ds.binary_label).sum()) < ds.n

    def test_prepare_from_csv(self, tmp_path):
        csv_path = tmp_path / "d.csv"
        csv_path.write_text("3,4,tcp,normal\n1,0,udp,neptune\n")
        schema = tmp_path / "schema"
        schema.write_text("numeric\nnumeric\ncategorical\nlabel:normal\n")
        grouping = tmp_path / "grouping.json"
        grouping.write_text('{"DoS": ["neptune"]}')
        out = tmp_path / "prepared.json"
        encoder_out = tmp_path / "encoder.json"
        code = main(
            ["prepare", "--input", str(csv_path), "--schema", str(schema),
             "--out", str(out), "--grouping", str(grouping),
             "--encoder-out", str(encoder_out)]
        )
        assert code == 0
        ds = load_dataset(out)
        assert ds.category.tolist() == ["Normal", "DoS"]
        norms = np.linalg.norm(ds.features, axis=1)
        assert np.all(np.abs(norms - 1.0) < 1e-9)
        assert encoder_out.exists()

        # test-time ingestion with the fitted encoder: the unseen protocol
        # "sctp" gets the reserved unknown code instead of failing
        test_csv = tmp_path / "t.csv"
        test_csv.write_text("1,1,sctp,normal\n")
        test_out = tmp_path / "prepared_test.json"
        code = main(
            ["prepare", "--input", str(test_csv), "--schema", str(schema),
             "--out", str(test_out), "--encoder", str(encoder_out)]
        )
        assert code == 0
        encoded = load_dataset(test_out)
        # codes: tcp -> 0, udp -> 1, unseen -> 2; row then L2-normalized
        expected = np.array([1.0, 1.0, 2.0]) / np.sqrt(6.0)
        assert np.allclose(encoded.features[0], expected)

    def test_train_eval_centralized(self, workdir):
        tmp_path, train_path, test_path = workdir
        config_path, cfg = write_config(tmp_path, train_path, "phec-centralized")
        assert main(["train", "--config", str(config_path)]) == 0
        report_path = tmp_path / "eval_report.json"
        assert (
            main(
                ["eval", "--model", cfg["model_out"], "--test", str(test_path),
                 "--report", str(report_path)]
            )
            == 0
        )
        report = json.loads(report_path.read_text())
        assert report["metrics"]["accuracy"] > 0.9
        assert set(report["per_category"]) == {"DoS", "Probe", "R2L", "U2R"}

    def test_federated_report_has_round_history(self, workdir):
        tmp_path, train_path, _ = workdir
        config_path, cfg = write_config(tmp_path, train_path, "phec-federated")
        assert main(["train", "--config", str(config_path)]) == 0
        report = json.loads((tmp_path / "train_report.json").read_text())
        fed = report["federated"]
        assert len(fed["history"]) == fed["rounds"]
        assert fed["bytes_uploaded_per_round"] > 0

    def test_eval_dimension_mismatch_exits_2(self, workdir, tmp_path):
        wd, train_path, _ = workdir
        config_path, cfg = write_config(wd, train_path, "phec-centralized")
        assert main(["train", "--config", str(config_path)]) == 0
        wrong = synth_generate("separable", {"DoS": 10, "Normal": 10}, seed=1, dim=9)
        wrong_path = tmp_path / "wrong.json"
        save_dataset(wrong, wrong_path)
        code = main(
            ["eval", "--model", cfg["model_out"], "--test", str(wrong_path),
             "--report", str(tmp_path / "r.json")]
        )
        assert code == 2

    def test_bad_config_exits_1(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text('{"pipeline": "phec-centralized"}')
        assert main(["train", "--config", str(config_path)]) == 1

    def test_usage_error_exits_1(self):
        assert main(["train"]) == 1

    def test_missing_data_file_exits_2(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps({"pipeline": "phec-centralized", "data": str(tmp_path / "nope.json")})
        )
        assert main(["train", "--config", str(config_path)]) == 2

    def test_report_command_summarizes(self, workdir, capsys):
        tmp_path, train_path, _ = workdir
        config_path, cfg = write_config(tmp_path, train_path, "phec-centralized")
        main(["train", "--config", str(config_path)])
        capsys.readouterr()
        assert main(["report", "--report", cfg["report_out"]]) == 0
        out = capsys.readouterr().out
        assert "gamma*" in out and "validation_metrics" in out


class TestDeterminism:
    def test_identical_runs_byte_identical_artifacts(self, workdir):
        tmp_path, train_path, test_path = workdir
        config_path, cfg = write_config(tmp_path, train_path, "phec-centralized")
        blobs = []
        for _ in range(2):
            assert main(["train", "--config", str(config_path)]) == 0
            report_path = tmp_path / "eval_report.json"
            assert (
                main(
                    ["eval", "--model", cfg["model_out"], "--test", str(test_path),
                     "--report", str(report_path)]
                )
                == 0
            )
            blobs.append(
                (
                    (tmp_path / "model.json").read_bytes(),
                    (tmp_path / "train_report.json").read_bytes(),
                    report_path.read_bytes(),
                )
            )
        assert blobs[0] == blobs[1]

    def test_rerun_from_report_echo_reproduces(self, workdir):
        tmp_path, train_path, _ = workdir
        config_path, cfg = write_config(tmp_path, train_path, "phec-centralized")
        assert main(["train", "--config", str(config_path)]) == 0
        first = (tmp_path / "train_report.json").read_bytes()
        echo = json.loads(first)["config"]
        config_path.write_text(json.dumps(echo))
        assert main(["train", "--config", str(config_path)]) == 0
        assert (tmp_path / "train_report.json").read_bytes() == first

    def test_report_key_order_is_stable(self, workdir):
        tmp_path, train_path, _ = workdir
        config_path, _ = write_config(tmp_path, train_path, "phec-centralized")
        main(["train", "--config", str(config_path)])
        report = json.loads((tmp_path / "train_report.json").read_text())
        assert list(report)[:7] == [
            "format", "version", "command", "pipeline", "config", "data", "alpha_star",
        ]


class TestBundleRoundtrip:
    def test_bundle_reload_predicts_identically(self, workdir):
        tmp_path, train_path, test_path = workdir
        config_path, cfg = write_config(tmp_path, train_path, "nt-phec-centralized")
        assert main(["train", "--config", str(config_path)]) == 0
        bundle = load_bundle(cfg["model_out"])
        test = load_dataset(test_path)
        direct = bundle.predict(test.features)
        reloaded = load_bundle(cfg["model_out"])
        assert np.array_equal(reloaded.predict(test.features), direct)
        assert reloaded.alpha_star in (0.35, 0.5, 0.65)
