import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpgoos import (ClusteringError, DegenerateLabelsError, LinearClassifier,
                    adjusted_rand_index, fit_gmm, fit_linear, fit_one_vs_rest,
                    misclassification_rate, permutation_test_ari, predict)

from oracles import ari_pair_counting, least_squares_with_intercept, random_rotation


def _separable(rng, m=80, d=3):
    Z = rng.standard_normal((m, d))
    w = rng.standard_normal(d)
    y = np.where(Z @ w + 0.1 >= 0, 1, -1)
    Z += 0.5 * y[:, None] * w / np.linalg.norm(w)
    return Z, y


def test_one_dimensional_separation():
    Z = np.array([[-1.0], [-1.0], [1.0], [1.0]])
    y = np.array([-1, -1, 1, 1])
    model = fit_linear(Z, y)
    assert model.weights[0] > 0
    assert misclassification_rate(predict(model, Z), y) == 0


def test_squared_loss_matches_hand_normal_equations():
    x = [0.0, 1.0, 3.0]
    y = [-1, 1, 1]
    w, b = least_squares_with_intercept(x, y)
    model = fit_linear(np.array(x)[:, None], np.array(y))
    assert model.weights[0] == pytest.approx(w, abs=1e-7)
    assert model.intercept == pytest.approx(b, abs=1e-7)


def test_squared_loss_matches_lstsq():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((50, 4))
    y = np.where(rng.standard_normal(50) > 0, 1, -1)
    X = np.column_stack([Z, np.ones(50)])
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    model = fit_linear(Z, y)
    np.testing.assert_allclose(model.weights, beta[:4], atol=1e-6)


@pytest.mark.parametrize("loss", ["squared", "hinge", "logistic"])
def test_radius_bound_saturation(loss):
    Z, y = _separable(np.random.default_rng(1))
    model = fit_linear(Z, y, loss=loss, radius_bound=0.001)
    assert np.linalg.norm(model.weights) <= 0.001 + 1e-8
    pred = predict(model, Z)
    assert np.all(pred == pred[0])


@pytest.mark.parametrize("loss", ["hinge", "logistic"])
def test_descent_monotone_and_separates(loss):
    Z, y = _separable(np.random.default_rng(2))
    for bound in (None, 3.0):
        model = fit_linear(Z, y, loss=loss, radius_bound=bound)
        assert np.all(np.diff(model.history) <= 0)
        assert misclassification_rate(predict(model, Z), y) <= 0.02


def test_hinge_close_to_reference_solver():
    from sklearn.svm import LinearSVC

    rng = np.random.default_rng(3)
    Z = rng.standard_normal((300, 2))
    y = np.where(Z[:, 0] + 0.5 * Z[:, 1] + 0.3 * rng.standard_normal(300) > 0, 1, -1)
    ours = fit_linear(Z, y, loss="hinge")
    ref = LinearSVC(C=1.0, loss="hinge", max_iter=100_000, dual=True).fit(Z, y)
    err_ours = misclassification_rate(predict(ours, Z), y)
    err_ref = misclassification_rate(ref.predict(Z), y)
    assert abs(err_ours - err_ref) <= 0.02


def test_degenerate_labels():
    with pytest.raises(DegenerateLabelsError):
        fit_linear(np.ones((4, 1)), np.ones(4))
    with pytest.raises(DegenerateLabelsError):
        fit_one_vs_rest(np.ones((4, 1)), np.full(4, 3))


def test_predict_examples():
    model = LinearClassifier(np.zeros(2), 1.0)
    assert np.all(predict(model, np.random.default_rng(0).standard_normal((5, 2))) == 1)
    assert predict(LinearClassifier(np.zeros(1), 0.0), [[1.0]])[0] == 1
    Z, y = _separable(np.random.default_rng(4))
    m = fit_linear(Z, y)
    np.testing.assert_array_equal(predict(m, Z), y)
    flipped = LinearClassifier(-m.weights, -m.intercept)
    nonzero = m.decision_function(Z) != 0
    np.testing.assert_array_equal(predict(flipped, Z)[nonzero], -predict(m, Z)[nonzero])
    with pytest.raises(ValueError):
        predict(m, np.ones((2, 5)))


def test_prediction_invariant_under_rotation():
    rng = np.random.default_rng(5)
    Z = rng.standard_normal((60, 3))
    y = np.where(rng.standard_normal(60) + Z[:, 0] > 0, 1, -1)
    Q = random_rotation(rng, 3)
    test = rng.standard_normal((40, 3))
    a = predict(fit_linear(Z, y), test)
    b = predict(fit_linear(Z @ Q, y), test @ Q)
    np.testing.assert_array_equal(a, b)


def test_misclassification_examples():
    y = np.array([1, -1, 1, 1, -1, 1, -1, -1, 1, 1])
    assert misclassification_rate(y, y) == 0
    assert misclassification_rate(-y, y) == 1
    p = y.copy()
    p[:3] *= -1
    assert misclassification_rate(p, y) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        misclassification_rate(y[:3], y)


def test_one_vs_rest_three_classes():
    rng = np.random.default_rng(6)
    centers = np.array([[0, 4], [4, 0], [-4, -4]])
    labels = np.repeat([1, 2, 3], 40)
    Z = centers[labels - 1] + rng.standard_normal((120, 2))
    clf = fit_one_vs_rest(Z, labels, loss="hinge")
    assert misclassification_rate(clf.predict(Z), labels) < 0.05
    # ties go to the smaller class
    tie = fit_one_vs_rest(Z, labels, loss="squared")
    for m in tie.models:
        m.weights[:] = 0
        m.intercept = 0.0
    assert np.all(tie.predict(Z) == 1)


# ---------------------------------------------------------------------------
# Gaussian mixtures


def test_gmm_two_separated_clusters():
    rng = np.random.default_rng(7)
    truth = np.repeat([0, 1], 150)
    Z = np.where(truth[:, None] == 0, 0.0, 10.0) + rng.standard_normal((300, 2))
    model = fit_gmm(Z, range(1, 5), seed=1)
    assert model.K == 2
    assert adjusted_rand_index(model.assignments, truth) == 1.0
    assert abs(model.weights.sum() - 1) <= 1e-10
    for C in model.covariances:
        np.testing.assert_allclose(C, C.T)
        assert np.linalg.eigvalsh(C)[0] > 0
    assert np.all(np.diff(model.loglik_history) >= -1e-10)


def test_gmm_single_gaussian_selects_one():
    hits = 0
    for seed in range(20):
        Z = np.random.default_rng(100 + seed).standard_normal((200, 2))
        hits += fit_gmm(Z, range(1, 4), seed=seed).K == 1
    assert hits >= 19


def test_gmm_duplication_invariance():
    rng = np.random.default_rng(8)
    Z = np.vstack([rng.standard_normal((80, 2)), 8 + rng.standard_normal((80, 2))])
    a = fit_gmm(Z, range(1, 4), seed=2)
    b = fit_gmm(np.vstack([Z, Z]), range(1, 4), seed=2)
    assert a.K == b.K == 2
    order_a, order_b = np.argsort(a.means[:, 0]), np.argsort(b.means[:, 0])
    np.testing.assert_allclose(a.means[order_a], b.means[order_b], atol=1e-6)


def test_gmm_em_monotone_every_K():
    Z = np.random.default_rng(9).standard_normal((150, 3))
    for K in (2, 3, 4):
        model = fit_gmm(Z, [K], seed=3)
        assert np.all(np.diff(model.loglik_history) >= -1e-10 * abs(model.loglik))


def test_gmm_preconditions():
    with pytest.raises(ValueError):
        fit_gmm(np.zeros((5, 2)), range(1, 4), seed=0)
    with pytest.raises(ValueError):
        fit_gmm(np.zeros((50, 2)), [], seed=0)


def test_gmm_all_restarts_degenerate():
    # two distinct values only: every K >= 3 run empties a component
    Z = np.repeat([[0.0], [1.0]], 10, axis=0)
    with pytest.raises(ClusteringError):
        fit_gmm(Z, [3], seed=0)


# ---------------------------------------------------------------------------
# adjusted Rand index and permutation test


def test_ari_examples():
    a = [1, 1, 2, 2, 3, 3]
    assert adjusted_rand_index(a, a) == 1.0
    assert adjusted_rand_index([0] * 6, a) == 0.0
    assert adjusted_rand_index([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(
        ari_pair_counting([1, 1, 2, 2], [1, 2, 1, 2]), abs=1e-15)
    assert adjusted_rand_index([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        adjusted_rand_index([1, 2], [1, 2, 3])


def test_ari_trivial_partitions():
    assert adjusted_rand_index([0, 1, 2], [5, 6, 7]) == 1.0
    assert adjusted_rand_index([0, 0, 0], [1, 1, 1]) == 1.0
    assert adjusted_rand_index([0, 1, 2], [1, 1, 1]) == 0.0


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=25), st.data())
def test_ari_matches_pair_counting(a, data):
    b = data.draw(st.lists(st.integers(0, 3), min_size=len(a), max_size=len(a)))
    ours = adjusted_rand_index(a, b)
    assert ours == pytest.approx(ari_pair_counting(a, b), abs=1e-12)
    assert ours == adjusted_rand_index(b, a)
    relabel = {0: 7, 1: 5, 2: 9, 3: 1}
    assert adjusted_rand_index([relabel[v] for v in a], b) == pytest.approx(ours, abs=1e-12)
    assert ours <= 1 + 1e-12


def test_permutation_identical_labels():
    truth = np.repeat([0, 1], 50)
    rep = permutation_test_ari(truth, truth, 1000, seed=1)
    assert rep.observed_ari == 1.0
    assert rep.p_value <= 0.01
    assert rep.p_value == (1 + np.sum(rep.null >= rep.observed_ari)) / 1001


def test_permutation_null_mean_near_zero():
    rng = np.random.default_rng(2)
    truth = rng.integers(0, 5, 400)
    clusters = rng.integers(0, 4, 400)
    rep = permutation_test_ari(truth, clusters, 2000, seed=4)
    assert abs(rep.null_mean) <= 3 * rep.null_sd / np.sqrt(rep.trials) + 0.005
    assert 0 < rep.p_value <= 1


def test_permutation_null_matches_direct_ari():
    rng = np.random.default_rng(3)
    truth = rng.integers(0, 3, 60)
    clusters = rng.integers(0, 3, 60)
    rep = permutation_test_ari(truth, clusters, 50, seed=5)
    from lpgoos._random import stream

    g = stream(5, 3)
    for t in range(50):
        shuffled = truth[g.permutation(60)]
        assert rep.null[t] == pytest.approx(adjusted_rand_index(shuffled, clusters), abs=1e-12)


def test_permutation_calibration():
    rng = np.random.default_rng(10)
    p = []
    for r in range(200):
        truth = rng.integers(0, 3, 60)
        clusters = rng.integers(0, 3, 60)
        p.append(permutation_test_ari(truth, clusters, 199, seed=r).p_value)
    frac = np.mean(np.array(p) <= 0.05)
    assert 0.01 <= frac <= 0.10
