import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phec.data import synth_generate
from phec.ensemble import (
    aggregate_max,
    aggregate_mean,
    gamma_grid,
    label,
    phec_predict,
    tune_alpha,
    tune_gamma,
)
from phec.errors import DataError


def oracle_tune(scores, truth, u, grid):
    """Exhaustive loop-based maximization with explicit tie-breaking.

    Independent of the vectorized implementation: per grid point it counts
    the confusion cells one sample at a time, then scans for the winner.
    """
    scores = list(scores)
    truth = list(truth)
    n_pos = sum(1 for t in truth if t == 1)
    n_neg = len(truth) - n_pos
    curve = []
    for gamma in grid:
        tp = fp = 0
        for s, t in zip(scores, truth):
            if s >= gamma:
                if t == 1:
                    tp += 1
                else:
                    fp += 1
        g = tp / n_pos if n_pos else 0.0
        h = fp / n_neg if n_neg else 0.0
        curve.append((gamma, g, h))

    feasible = [(gamma, g, h) for gamma, g, h in curve if h <= u]
    if feasible:
        best_g = max(g for _, g, _ in feasible)
        pool = [(gamma, g, h) for gamma, g, h in feasible if g == best_g]
        best_h = min(h for _, _, h in pool)
        pool = [(gamma, g, h) for gamma, g, h in pool if h == best_h]
        gamma_star = max(gamma for gamma, _, _ in pool)
        return gamma_star, True, curve
    best_h = min(h for _, _, h in curve)
    pool = [(gamma, g, h) for gamma, g, h in curve if h == best_h]
    best_g = max(g for _, g, _ in pool)
    pool = [(gamma, g, h) for gamma, g, h in pool if g == best_g]
    gamma_star = max(gamma for gamma, _, _ in pool)
    return gamma_star, False, curve


def assert_matches_oracle(scores, truth, u, grid_size):
    result = tune_gamma(scores, truth, u, grid_size)
    gamma_star, feasible, curve = oracle_tune(scores, truth, u, result.grid.tolist())
    assert result.gamma_star == gamma_star
    assert result.feasible == feasible
    for (g_o, tpr_o, fpr_o), g_i, tpr_i, fpr_i in zip(
        curve, result.grid, result.tpr_curve, result.fpr_curve
    ):
        assert g_o == g_i and tpr_o == tpr_i and fpr_o == fpr_i
    return result


class TestAggregators:
    def test_mean(self):
        assert aggregate_mean([0.2, 0.4]) == pytest.approx(0.3)
        assert aggregate_mean([0.7, 0.7, 0.7]) == pytest.approx(0.7)
        assert aggregate_mean([0.7]) == 0.7

    def test_max(self):
        assert aggregate_max([0.1, 0.9, 0.3]) == 0.9
        assert aggregate_max([0.4, 0.4]) == 0.4
        assert aggregate_max([0.2]) == 0.2

    def test_empty_errors(self):
        with pytest.raises(DataError):
            aggregate_mean([])
        with pytest.raises(DataError):
            aggregate_max([])


class TestLabel:
    def test_boundary_is_threat(self):
        assert label(0.5, 0.5) == 1

    def test_below_threshold_is_normal(self):
        assert label(0.49, 0.5) == 0

    def test_zero_threshold_flags_everything(self):
        assert all(label(s, 0.0) == 1 for s in (0.0, 0.3, 1.0))


class TestTuneGamma:
    def test_spec_example(self):
        result = assert_matches_oracle(
            [0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0], u=0.0, grid_size=201
        )
        assert result.gamma_star == 0.8
        assert result.tpr == 1.0
        assert result.fpr == 0.0
        assert result.feasible

    def test_perfect_separation_feasible_for_any_u(self):
        scores = [0.95, 0.9, 0.85, 0.15, 0.1]
        truth = [1, 1, 1, 0, 0]
        for u in (0.0, 0.3, 1.0):
            result = tune_gamma(scores, truth, u, 101)
            assert result.feasible and result.tpr == 1.0 and result.fpr == 0.0

    def test_all_negative_min_fpr_fallback(self):
        result = tune_gamma([1.0], [0], u=0.0, grid_size=201)
        assert not result.feasible
        assert result.gamma_star == 1.0
        assert result.degenerate

    def test_curves_non_increasing(self):
        rng = np.random.default_rng(0)
        scores = rng.random(50)
        truth = (rng.random(50) < 0.5).astype(int)
        result = tune_gamma(scores, truth, 0.1, 201)
        assert np.all(np.diff(result.tpr_curve) <= 0)
        assert np.all(np.diff(result.fpr_curve) <= 0)

    def test_u_one_always_feasible_with_max_tpr(self):
        rng = np.random.default_rng(1)
        scores = rng.random(30)
        truth = (rng.random(30) < 0.4).astype(int)
        result = tune_gamma(scores, truth, 1.0, 101)
        assert result.feasible
        assert result.tpr == result.tpr_curve[0]

    def test_cap_monotonicity(self):
        rng = np.random.default_rng(2)
        scores = rng.random(60)
        truth = (rng.random(60) < 0.5).astype(int)
        best = [tune_gamma(scores, truth, u, 101).tpr for u in (0.0, 0.1, 0.3, 1.0)]
        assert all(a <= b + 1e-15 for a, b in zip(best[:-1], best[1:]))

    def test_validation(self):
        with pytest.raises(DataError):
            tune_gamma([0.5], [1], u=1.5)
        with pytest.raises(DataError):
            tune_gamma([0.5], [1], u=0.5, grid_size=1)
        with pytest.raises(DataError):
            tune_gamma([0.5, 0.2], [1], u=0.5)

    def test_oracle_equivalence_randomized(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(1, 64))
            # quantized scores force plenty of exact ties
            scores = np.round(rng.random(n), 2)
            truth = (rng.random(n) < rng.uniform(0.1, 0.9)).astype(int)
            u = float(rng.choice([0.0, 0.02, 0.1, 0.5, 1.0]))
            assert_matches_oracle(scores, truth, u, 201)

    @settings(max_examples=60, deadline=None)
    @given(
        scores=st.lists(
            st.integers(min_value=0, max_value=20).map(lambda i: i / 20), min_size=1, max_size=32
        ),
        truth_bits=st.lists(st.integers(min_value=0, max_value=1), min_size=32, max_size=32),
        u=st.sampled_from([0.0, 0.05, 0.25, 1.0]),
    )
    def test_oracle_equivalence_property(self, scores, truth_bits, u):
        truth = truth_bits[: len(scores)]
        assert_matches_oracle(scores, truth, u, 51)


class TestGammaGrid:
    def test_shape_and_endpoints(self):
        grid = gamma_grid(201)
        assert grid.shape == (201,)
        assert grid[0] == 0.0 and grid[-1] == 1.0
        spacing = np.diff(grid)
        assert spacing.max() - spacing.min() < 1e-12


def _fixed_scores(score_map):
    def fit(train, val, alpha):
        return np.asarray(score_map[alpha]), f"model-{alpha}"

    return fit


class _Val:
    def __init__(self, truth):
        self.binary_label = np.asarray(truth)


class TestTuneAlpha:
    def test_singleton_grid(self):
        val = _Val([1, 0])
        fit = _fixed_scores({0.5: [0.9, 0.1]})
        search = tune_alpha(None, val, 0.1, [0.5], fit)
        assert search.alpha_star == 0.5
        assert search.artifact == "model-0.5"
        assert search.threshold.feasible

    def test_feasibility_dominates(self):
        val = _Val([1, 1, 0, 0])
        fit = _fixed_scores(
            {
                0.2: [0.9, 0.9, 0.9, 0.9],  # cannot satisfy u=0
                0.8: [0.9, 0.8, 0.1, 0.2],
            }
        )
        search = tune_alpha(None, val, 0.0, [0.2, 0.8], fit)
        assert search.alpha_star == 0.8

    def test_balanced_clean_data_prefers_center(self):
        # all alphas separate cleanly, so the tie-break lands on 0.5
        from phec.classify import TrainConfig, linear_predict_proba, logreg_fit

        wins = 0
        for seed in range(5):
            ds = synth_generate("separable", {"DoS": 60, "Normal": 60}, seed=seed)
            train_X, train_y = ds.features[:80], ds.binary_label[:80]
            val_X, val_y = ds.features[80:], ds.binary_label[80:]

            def fit(train, val, alpha):
                model = logreg_fit(
                    train_X, train_y, alpha, TrainConfig(eta=0.3, epochs=120, seed=seed)
                )
                return linear_predict_proba(model, val_X), model

            search = tune_alpha(None, _Val(val_y), 0.05, [0.3, 0.5, 0.7], fit)
            wins += search.alpha_star == 0.5
        assert wins >= 3

    def test_empty_grid(self):
        with pytest.raises(DataError):
            tune_alpha(None, _Val([1, 0]), 0.1, [], _fixed_scores({}))


class TestPhecPredict:
    def test_mean_composition(self):
        fns = [lambda x: 0.9, lambda x: 0.7]
        assert phec_predict(fns, "mean", 0.5, None) == 1

    def test_all_zero_scores(self):
        fns = [lambda x: 0.0, lambda x: 0.0]
        assert phec_predict(fns, "max", 0.01, None) == 0

    def test_compositional_oracle(self):
        rng = np.random.default_rng(4)
        from phec.ensemble import AGGREGATORS

        for _ in range(100):
            k = int(rng.integers(1, 5))
            probs = rng.random(k)
            gamma = float(rng.random())
            name = str(rng.choice(["mean", "max"]))
            fns = [lambda x, p=p: p for p in probs]
            expected = label(AGGREGATORS[name](probs), gamma)
            assert phec_predict(fns, name, gamma, None) == expected
