import numpy as np
import pytest

from phec.classify import TrainConfig, logreg_fit, mlp_fit
from phec.classify.nets import MlpModel
from phec.errors import DataError
from phec.evaluation import (
    confusion,
    grad_check,
    metrics,
    per_category_tpr,
    time_per_instance,
)


class TestConfusion:
    def test_perfect_predictor(self):
        truth = [1] * 5 + [0] * 5
        cm = confusion(truth, truth)
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (5, 5, 0, 0)

    def test_all_threat_prediction(self):
        truth = [1] * 3 + [0] * 7
        cm = confusion([1] * 10, truth)
        assert (cm.tp, cm.fp) == (3, 7)
        assert (cm.tn, cm.fn) == (0, 0)

    def test_complement_prediction(self):
        truth = [1, 0, 1, 0]
        cm = confusion([0, 1, 0, 1], truth)
        assert (cm.tp, cm.tn) == (0, 0)
        assert (cm.fp, cm.fn) == (2, 2)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            confusion([1], [1, 0])


class TestMetrics:
    def test_tpr_definition(self):
        from phec.evaluation import ConfusionMatrix

        m = metrics(ConfusionMatrix(tp=9, fp=0, tn=0, fn=1))
        assert m.tpr == pytest.approx(0.9)

    def test_degenerate_flags(self):
        from phec.evaluation import ConfusionMatrix

        m = metrics(ConfusionMatrix(tp=0, fp=0, tn=10, fn=0))
        assert m.fpr == 0.0
        assert m.precision == 0.0
        assert "precision" in m.degenerate_flags
        assert "tpr" in m.degenerate_flags

    def test_perfect_scores(self):
        from phec.evaluation import ConfusionMatrix

        m = metrics(ConfusionMatrix(tp=50, fp=0, tn=50, fn=0))
        assert m.accuracy == 1.0 and m.f1 == 1.0

    def test_accuracy_exact_and_in_range(self):
        rng = np.random.default_rng(0)
        pred = (rng.random(100) < 0.5).astype(int)
        truth = (rng.random(100) < 0.5).astype(int)
        m = metrics(confusion(pred, truth))
        assert m.accuracy == np.mean(pred == truth)
        for value in (m.tpr, m.fpr, m.accuracy, m.precision, m.f1):
            assert 0.0 <= value <= 1.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        pred = (rng.random(50) < 0.4).astype(int)
        truth = (rng.random(50) < 0.6).astype(int)
        perm = rng.permutation(50)
        a = metrics(confusion(pred, truth))
        b = metrics(confusion(pred[perm], truth[perm]))
        assert a == b

    def test_empty_matrix_errors(self):
        from phec.evaluation import ConfusionMatrix

        with pytest.raises(DataError):
            metrics(ConfusionMatrix(0, 0, 0, 0))


class TestPerCategory:
    def test_detected_and_missed(self):
        categories = ["DoS", "DoS", "R2L", "R2L", "Normal"]
        predicted = [1, 1, 0, 0, 0]
        out = per_category_tpr(predicted, categories)
        assert out["DoS"].tpr == 1.0
        assert out["R2L"].tpr == 0.0
        assert "Normal" not in out

    def test_absent_category_omitted(self):
        out = per_category_tpr([1, 0], ["DoS", "Normal"])
        assert set(out) == {"DoS"}

    def test_weighted_average_matches_overall_tpr(self):
        rng = np.random.default_rng(2)
        categories = rng.choice(["DoS", "Probe", "R2L", "Normal"], size=200).astype(object)
        truth = (categories != "Normal").astype(int)
        predicted = np.where(rng.random(200) < 0.7, truth, 1 - truth)
        out = per_category_tpr(predicted, categories)
        total = sum(d.total for d in out.values())
        weighted = sum(d.tpr * d.total for d in out.values()) / total
        cm = confusion(predicted, truth)
        assert weighted == pytest.approx(cm.tp / (cm.tp + cm.fn), abs=1e-12)


class TestGradCheck:
    def test_linear_model(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(20, 5))
        y = (rng.random(20) < 0.5).astype(np.uint8)
        model = logreg_fit(X, y, 0.4, TrainConfig(eta=0.1, epochs=5, seed=1))
        assert grad_check(model, X, y, alpha=0.4) < 1e-5

    def test_mlp_model(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 4))
        y = (rng.random(20) < 0.5).astype(np.uint8)
        model = mlp_fit(X, y, [4, 8, 1], 0.3, TrainConfig(eta=0.05, epochs=3, seed=2))
        assert grad_check(model, X, y, alpha=0.3) < 1e-4

    def test_symmetric_data_zero_bias_gradient(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 3))
        y = np.array([1, 0] * 20, dtype=np.uint8)
        model = MlpModel([np.zeros((3, 1))], [np.array([0.0])], alpha=0.5)
        from phec.classify.nets import loss_and_grads

        _, _, grads_b = loss_and_grads(model, X, y)
        assert abs(grads_b[0][0]) < 1e-10

    def test_epsilon_validation(self):
        model = MlpModel([np.zeros((2, 1))], [np.array([0.0])])
        with pytest.raises(DataError):
            grad_check(model, np.zeros((2, 2)), np.zeros(2), epsilon=0.0)


class TestTiming:
    def test_positive_result(self):
        result = time_per_instance(lambda x: float(x.sum()), np.ones((5, 3)), repetitions=3)
        assert result > 0.0

    def test_invocation_count_contract(self):
        calls = {"n": 0}

        def counting(x):
            calls["n"] += 1
            return 0

        X = np.ones((7, 2))
        time_per_instance(counting, X, repetitions=4)
        assert calls["n"] == 4 * 7

    def test_validation(self):
        with pytest.raises(DataError):
            time_per_instance(lambda x: 0, np.ones((0, 2)), repetitions=3)
        with pytest.raises(DataError):
            time_per_instance(lambda x: 0, np.ones((3, 2)), repetitions=2)
