"""Per-classifier tests: hand-worked examples, exact reference
implementations, gradient checks, and serialization round-trips."""
import math
from fractions import Fraction

import numpy as np
import pytest

from gazescreen.errors import (
    DimensionMismatch,
    EmptyNode,
    InvalidHyperParam,
    InvalidSpec,
    SingleClass,
    TrainingSizeExceeded,
)
from gazescreen.kernels import gamma_scale, rbf_kernel
from gazescreen.models import (
    AdaBoostParams,
    FeatureMatrix,
    ForestParams,
    GpcParams,
    LogRegParams,
    PerceptronParams,
    SvcParams,
    TreeParams,
    default_theta0,
    fit_adaboost,
    fit_decision_tree,
    fit_gpc,
    fit_logreg,
    fit_naive_bayes,
    fit_perceptron,
    fit_random_forest,
    fit_svc_rbf,
    gini_impurity,
    gpc_lml_and_grad,
    load_model,
    model_from_dict,
)
from gazescreen.models.linear import logreg_objective
from gazescreen.models.tree import descend, grow_tree


def fm(X, y, w=None):
    return FeatureMatrix(np.asarray(X, dtype=float), np.asarray(y), w)


def blobs(n_per_class, d=2, sep=4.0, seed=0, spread=1.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, spread, (n_per_class, d))
    b = rng.normal(0.0, spread, (n_per_class, d)) + sep
    X = np.vstack([a, b])
    y = np.repeat([0, 1], n_per_class)
    return X, y


# -- naive Bayes ---------------------------------------------------------------

class TestNaiveBayes:
    def test_hand_example_scores(self):
        # classes at means 1 and 5, both unit variance, equal priors
        model = fit_naive_bayes(fm([[0], [2], [4], [6]], [0, 0, 1, 1]))
        assert model.means[0, 0] == 1.0 and model.means[1, 0] == 5.0
        eps = 1e-9 * 5.0  # smoothing: 1e-9 * pooled feature variance
        assert model.variances[0, 0] == pytest.approx(1.0 + eps, rel=1e-12)
        # equidistant point: likelihoods cancel, equal priors cancel
        x_mid = np.array([[3.0]])
        assert model.decision_score(x_mid)[0] == pytest.approx(0.0, abs=1e-12)
        assert model.predict(x_mid)[0] == 0  # ties go to class 0
        # score(x) = [(x-m0)^2 - (x-m1)^2] / (2 v) for equal priors/variances
        x = np.array([[4.0]])
        expect = (9.0 - 1.0) / (2.0 * (1.0 + eps))
        assert model.decision_score(x)[0] == pytest.approx(expect, rel=1e-12)

    def test_weighted_moments_and_priors(self):
        model = fit_naive_bayes(fm([[0], [2], [4], [6]], [0, 0, 1, 1],
                                   w=[1, 1, 1, 3]))
        assert np.allclose(np.exp(model.class_log_prior), [2 / 6, 4 / 6])
        assert model.means[1, 0] == pytest.approx(5.5)
        # biased weighted variance: (1*(4-5.5)^2 + 3*(6-5.5)^2) / 4
        assert model.variances[1, 0] == pytest.approx(0.75, rel=1e-6)

    def test_weights_equal_replication(self):
        X, y = blobs(8, seed=1)
        w = np.array([1, 2, 3, 1, 2, 1, 1, 4] * 2)
        rep_idx = np.repeat(np.arange(16), w)
        a = fit_naive_bayes(fm(X, y, w))
        b = fit_naive_bayes(fm(X[rep_idx], y[rep_idx]))
        grid = np.random.default_rng(0).normal(2, 3, (40, 2))
        assert np.allclose(a.decision_score(grid), b.decision_score(grid),
                           rtol=1e-12)

    def test_posterior_normalised(self):
        X, y = blobs(10, seed=2)
        model = fit_naive_bayes(fm(X, y))
        post = np.exp(model.log_posterior(X))
        assert np.allclose(post.sum(axis=1), 1.0, atol=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            fit_naive_bayes(fm([[0], [1]], [0, 0]))


# -- decision tree ---------------------------------------------------------------

def exact_split_argmin(X, y, w, min_leaf=1):
    """All (feature, threshold) pairs attaining the exact minimal weighted
    child impurity, via Fraction arithmetic. Weights must be integers."""
    n, d = X.shape
    total_w = Fraction(int(w.sum()))
    total_w1 = Fraction(int(w[y == 1].sum()))

    def side_gini(wside, w1side):
        if wside == 0:
            return None
        p1 = Fraction(w1side, wside)
        return 1 - p1 * p1 - (1 - p1) * (1 - p1)

    best_val, argmin = None, []
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ws = w[order]
        w1s = ws * y[order]
        cw = np.cumsum(ws)
        cw1 = np.cumsum(w1s)
        for i in range(n - 1):
            if not xs[i + 1] > xs[i]:
                continue
            if i + 1 < min_leaf or n - 1 - i < min_leaf:
                continue
            wl, wl1 = Fraction(int(cw[i])), Fraction(int(cw1[i]))
            wr, wr1 = total_w - wl, total_w1 - wl1
            val = (wl * side_gini(wl, wl1) + wr * side_gini(wr, wr1)) / total_w
            thr = 0.5 * (xs[i] + xs[i + 1])
            if best_val is None or val < best_val:
                best_val, argmin = val, [(f, thr)]
            elif val == best_val:
                argmin.append((f, thr))
    return best_val, argmin


def tree_node_rows(nodes, X):
    """Row-index set reaching each node, replayed from the stored splits."""
    out = {0: np.arange(len(X))}
    stack = [0]
    while stack:
        node = stack.pop()
        f = nodes["feature"][node]
        if f < 0:
            continue
        idx = out[node]
        go_left = X[idx, f] <= nodes["threshold"][node]
        out[int(nodes["left"][node])] = idx[go_left]
        out[int(nodes["right"][node])] = idx[~go_left]
        stack.extend([int(nodes["left"][node]), int(nodes["right"][node])])
    return out


class TestGini:
    def test_hand_values(self):
        assert gini_impurity([1, 0, 0, 0]) == pytest.approx(0.375, abs=0)
        assert gini_impurity([0, 0]) == 0.0
        assert gini_impurity([0, 1]) == 0.5
        assert gini_impurity([0, 1], np.array([1.0, 3.0])) == pytest.approx(0.375)

    def test_empty_node(self):
        with pytest.raises(EmptyNode):
            gini_impurity([])


class TestDecisionTree:
    def test_hand_split(self):
        model = fit_decision_tree(fm([[1], [2], [3], [4]], [0, 0, 1, 1]))
        assert model.root_split == (0, 2.5)
        assert model.n_nodes == 3
        assert np.array_equal(model.predict(np.array([[1.0], [2.4], [2.6], [9.0]])),
                              [0, 0, 1, 1])

    def test_threshold_tie_takes_lowest(self):
        # splits at 1.5 and 3.5 are exactly tied; first minimum wins
        model = fit_decision_tree(fm([[1], [2], [3], [4]], [0, 1, 0, 1]))
        assert model.root_split == (0, 1.5)

    def test_feature_tie_takes_lowest(self):
        X = np.array([[1, -1], [2, -2], [3, -3], [4, -4]], dtype=float)
        model = fit_decision_tree(fm(X, [0, 0, 1, 1]))
        assert model.root_split == (0, 2.5)

    def test_pure_data_is_a_leaf(self):
        model = fit_decision_tree(fm([[0], [1], [2]], [1, 1, 1]))
        assert model.n_nodes == 1
        assert np.array_equal(model.predict(np.array([[5.0]])), [1])

    def test_adjacent_float_boundary(self):
        # the midpoint of 1+eps and 1+2eps rounds up to the larger value,
        # which with `x <= thr` routing would never separate the pair
        eps = 2.0 ** -52
        a, b = 1.0 + eps, 1.0 + 2 * eps
        assert 0.5 * (a + b) == b
        model = fit_decision_tree(fm([[a], [b]], [0, 1]))
        f, thr = model.root_split
        assert a <= thr < b
        assert np.array_equal(model.predict(np.array([[a], [b]])), [0, 1])

    def test_max_depth_one_is_a_stump(self):
        X, y = blobs(20, seed=3, sep=1.0)
        model = fit_decision_tree(fm(X, y), TreeParams(max_depth=1))
        assert model.n_nodes <= 3

    def test_min_samples_leaf_honoured(self):
        rng = np.random.default_rng(4)
        X = rng.integers(0, 6, (24, 2)).astype(float)
        y = rng.integers(0, 2, 24)
        y[:3] = [0, 1, 0]
        model = fit_decision_tree(fm(X, y), TreeParams(min_samples_leaf=4))
        rows = tree_node_rows(model.nodes, X)
        for node, idx in rows.items():
            if model.nodes["feature"][node] < 0:
                assert len(idx) >= 4

    @pytest.mark.parametrize("seed", range(50))
    def test_every_split_matches_exhaustive_reference(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 31))
        X = rng.integers(0, 5, (n, 2)).astype(float)
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        w = rng.integers(1, 4, n)
        model = fit_decision_tree(fm(X, y, w.astype(float)))
        rows = tree_node_rows(model.nodes, X)
        for node, idx in rows.items():
            f = model.nodes["feature"][node]
            yn, wn = y[idx], w[idx]
            if f >= 0:
                _, argmin = exact_split_argmin(X[idx], yn, wn)
                chosen = (int(f), float(model.nodes["threshold"][node]))
                assert chosen in argmin
            else:
                # leaf must be unsplittable: pure or no distinct boundary
                if yn.min() != yn.max() and len(idx) >= 2:
                    best, _ = exact_split_argmin(X[idx], yn, wn)
                    assert best is None
            # leaf probability equals the exact weighted class-1 fraction
            p1 = Fraction(int(wn[yn == 1].sum()), int(wn.sum()))
            assert model.nodes["p1"][node] == pytest.approx(float(p1), abs=1e-12)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(7)
        X = rng.integers(0, 8, (40, 3)).astype(float)
        y = rng.integers(0, 2, 40)
        y[0], y[1] = 0, 1
        a = fit_decision_tree(fm(X, y))
        perm = rng.permutation(40)
        b = fit_decision_tree(fm(X[perm], y[perm]))
        for key in ("feature", "threshold", "left", "right", "p1"):
            assert np.array_equal(a.nodes[key], b.nodes[key])

    def test_weights_equal_replication(self):
        rng = np.random.default_rng(8)
        X = rng.integers(0, 6, (20, 2)).astype(float)
        y = rng.integers(0, 2, 20)
        y[0], y[1] = 0, 1
        w = rng.integers(1, 4, 20)
        rep = np.repeat(np.arange(20), w)
        a = fit_decision_tree(fm(X, y, w.astype(float)))
        b = fit_decision_tree(fm(X[rep], y[rep]))
        grid = rng.uniform(-1, 7, (60, 2))
        assert np.array_equal(a.predict(grid), b.predict(grid))
        assert a.root_split == b.root_split

    def test_descend_matches_scalar_routing(self):
        rng = np.random.default_rng(9)
        X = rng.normal(0, 2, (60, 3))
        y = rng.integers(0, 2, 60)
        y[0], y[1] = 0, 1
        nodes = grow_tree(X, y.astype(float), np.ones(60), TreeParams())
        probe = rng.normal(0, 2, (30, 3))

        def route_one(x):
            node = 0
            while nodes["feature"][node] >= 0:
                f = nodes["feature"][node]
                node = (nodes["left"][node] if x[f] <= nodes["threshold"][node]
                        else nodes["right"][node])
            return nodes["p1"][node]

        expect = np.array([route_one(x) for x in probe])
        assert np.array_equal(descend(nodes, probe), expect)

    def test_dimension_mismatch(self):
        model = fit_decision_tree(fm([[1], [2]], [0, 1]))
        with pytest.raises(DimensionMismatch):
            model.predict(np.zeros((3, 2)))


# -- random forest ---------------------------------------------------------------

class TestRandomForest:
    def test_single_tree_no_bootstrap_reduces_to_cart(self):
        X, y = blobs(30, d=3, seed=5, sep=2.0)
        hp = ForestParams(n_estimators=1, bootstrap=False, max_features=3)
        forest = fit_random_forest(fm(X, y), hp, seed=0)
        tree = fit_decision_tree(fm(X, y))
        grid = np.random.default_rng(1).normal(1, 2, (100, 3))
        assert np.array_equal(forest.predict(grid), tree.predict(grid))

    def test_deterministic_given_seed(self):
        X, y = blobs(25, seed=6, sep=1.5)
        hp = ForestParams(n_estimators=12)
        grid = np.random.default_rng(2).normal(2, 2, (50, 2))
        a = fit_random_forest(fm(X, y), hp, seed=3).decision_score(grid)
        b = fit_random_forest(fm(X, y), hp, seed=3).decision_score(grid)
        c = fit_random_forest(fm(X, y), hp, seed=4).decision_score(grid)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_votes_are_tree_fractions(self):
        X, y = blobs(25, seed=7, sep=1.0, spread=1.5)
        model = fit_random_forest(fm(X, y), ForestParams(n_estimators=10), seed=0)
        grid = np.random.default_rng(3).normal(2, 3, (200, 2))
        score = model.decision_score(grid)
        assert np.all((score >= 0) & (score <= 1))
        votes = score * 10
        assert np.allclose(votes, np.round(votes), atol=1e-12)
        assert np.any((score > 0) & (score < 1))  # trees disagree somewhere


# -- SVM ---------------------------------------------------------------

class TestKernels:
    def test_rbf_hand_value(self):
        K = rbf_kernel(np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]]), 0.5)
        assert K[0, 0] == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_gamma_scale_hand_value(self):
        X = np.array([[0.0, 0.0], [2.0, 2.0]])
        # per-feature biased variance 1 -> gamma = 1 / (d * mean var) = 0.5
        assert gamma_scale(X) == pytest.approx(0.5, rel=1e-12)


class TestSvc:
    def test_xor_is_separated(self):
        X = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
        y = np.array([0, 0, 1, 1])
        model = fit_svc_rbf(fm(X, y), SvcParams(C=10.0, gamma=1.0))
        assert model.converged
        assert np.array_equal(model.predict(X), y)

    def test_mirrored_data_gives_antisymmetric_scores(self):
        rng = np.random.default_rng(10)
        pos = rng.normal(2.0, 1.0, (30, 2))
        X = np.vstack([pos, -pos])
        y = np.array([1] * 30 + [0] * 30)
        model = fit_svc_rbf(fm(X, y), SvcParams(C=1.0, gamma=0.5))
        origin = model.decision_score(np.zeros((1, 2)))[0]
        assert abs(origin) <= 1e-3
        probe = rng.normal(0, 2, (20, 2))
        s = model.decision_score(probe)
        s_neg = model.decision_score(-probe)
        assert np.allclose(s, -s_neg, atol=2e-3)

    def test_kkt_conditions_hold(self):
        X, y = blobs(30, seed=11, sep=2.0)
        hp = SvcParams(C=1.0)
        model = fit_svc_rbf(fm(X, y), hp)
        assert model.converged
        # recover alpha per training row from the stored support set
        sv = {row.tobytes(): abs(c)
              for row, c in zip(model.support_X, model.dual_coef)}
        alpha = np.array([sv.get(row.tobytes(), 0.0) for row in X])
        ypm = np.where(y == 1, 1.0, -1.0)
        yf = ypm * model.decision_score(X)
        slack = 2.0 * hp.tol
        free = (alpha > 1e-8) & (alpha < hp.C - 1e-8)
        assert np.all(yf[alpha <= 1e-8] >= 1.0 - slack)
        assert np.all(np.abs(yf[free] - 1.0) <= slack)
        assert np.all(yf[alpha >= hp.C - 1e-8] <= 1.0 + slack)
        # dual feasibility: sum alpha_i y_i = 0, 0 <= alpha <= C
        assert abs(np.sum(alpha * ypm)) <= 1e-9
        assert alpha.max() <= hp.C + 1e-12

    def test_gamma_resolution_recorded(self):
        X, y = blobs(10, seed=12)
        model = fit_svc_rbf(fm(X, y), SvcParams(gamma="scale"))
        assert model.gamma == pytest.approx(gamma_scale(X))
        with pytest.raises(InvalidHyperParam):
            fit_svc_rbf(fm(X, y), SvcParams(gamma=-1.0))


# -- AdaBoost ---------------------------------------------------------------

class TestAdaBoost:
    def test_perfect_stump_stops_after_one_round(self):
        model = fit_adaboost(fm([[1], [2], [3], [4]], [0, 0, 1, 1]))
        assert len(model.alphas) == 1
        assert model.alphas[0] == pytest.approx(math.log((1 - 1e-10) / 1e-10))
        assert np.array_equal(model.predict(np.array([[0.0], [9.0]])), [0, 1])

    def test_hand_worked_reweighting(self):
        # one mislabeled point; round-1 error 1/8 so alpha_1 = ln 7, and the
        # 7x upweight moves round 2's best split from 3.5 to 6.5
        X = np.arange(8, dtype=float).reshape(-1, 1)
        y = np.array([0, 0, 0, 0, 1, 1, 1, 0])
        model = fit_adaboost(fm(X, y), AdaBoostParams(n_estimators=2))
        assert model.alphas[0] == pytest.approx(math.log(7.0), rel=1e-12)
        assert len(model.alphas) == 2
        assert float(model.stumps[0]["threshold"][0]) == 3.5
        assert float(model.stumps[1]["threshold"][0]) == 6.5
        # second stump predicts class 0 everywhere: weighted error 3/14
        assert model.alphas[1] == pytest.approx(math.log(11.0 / 3.0), rel=1e-12)
        assert np.array_equal(model.predict(X), [0, 0, 0, 0, 1, 1, 1, 1])

    def test_at_chance_fallback(self):
        # identical inputs, opposite labels: no usable stump
        model = fit_adaboost(fm([[0.0], [0.0]], [0, 1]))
        assert model.alphas == [0.0]
        assert np.array_equal(model.predict(np.array([[0.0], [5.0]])), [0, 0])

    def test_boosting_beats_single_stump(self):
        rng = np.random.default_rng(13)
        X = rng.normal(0, 1, (200, 2))
        y = (X[:, 0] + X[:, 1] > 0).astype(int)  # diagonal: hard for one stump
        stump = fit_adaboost(fm(X, y), AdaBoostParams(n_estimators=1))
        boosted = fit_adaboost(fm(X, y), AdaBoostParams(n_estimators=40))

        def acc(m):
            return np.mean(m.predict(X) == y)

        assert acc(boosted) > acc(stump) + 0.1
        assert acc(boosted) >= 0.95


# -- logistic regression ---------------------------------------------------------------

class TestLogReg:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            n, d = int(rng.integers(5, 40)), int(rng.integers(1, 5))
            X = rng.normal(0, 1.5, (n, d))
            y = rng.integers(0, 2, n)
            sw = rng.uniform(0.5, 2.0, n)
            l2 = float(rng.uniform(0.0, 2.0))
            params = rng.normal(0, 0.8, d + 1)
            _, grad = logreg_objective(params, X, y, sw, l2)
            fd = np.empty_like(params)
            h = 1e-6
            for j in range(len(params)):
                e = np.zeros_like(params)
                e[j] = h
                fp, _ = logreg_objective(params + e, X, y, sw, l2)
                fm_, _ = logreg_objective(params - e, X, y, sw, l2)
                fd[j] = (fp - fm_) / (2 * h)
            assert np.allclose(grad, fd, rtol=1e-6, atol=1e-6)

    def test_mirrored_data_zero_intercept(self):
        rng = np.random.default_rng(15)
        pos = rng.normal(1.0, 1.5, (100, 2))  # overlapping, not separable
        X = np.vstack([pos, -pos])
        y = np.array([1] * 100 + [0] * 100)
        model = fit_logreg(fm(X, y), LogRegParams(tol=1e-8, max_iter=500))
        assert abs(model.intercept) <= 1e-6

    def test_gradient_small_at_optimum(self):
        X, y = blobs(40, seed=16, sep=2.0, spread=1.5)
        hp = LogRegParams(tol=1e-5, max_iter=300)
        model = fit_logreg(fm(X, y), hp)
        assert model.converged
        params = np.append(model.weights, model.intercept)
        sw = np.ones(len(y))
        _, grad = logreg_objective(params, X, y, sw, hp.l2)
        assert np.abs(grad).max() <= hp.tol

    def test_weight_scale_invariance(self):
        X, y = blobs(25, seed=17)
        w = np.random.default_rng(0).uniform(0.5, 3.0, 50)
        a = fit_logreg(fm(X, y, w))
        b = fit_logreg(fm(X, y, w * 7.0))
        assert np.array_equal(a.weights, b.weights)
        assert a.intercept == b.intercept

    def test_proba_is_sigmoid_of_score(self):
        X, y = blobs(20, seed=18)
        model = fit_logreg(fm(X, y))
        p = model.predict_proba(X)
        from scipy.special import expit
        assert np.allclose(p, expit(model.decision_score(X)), atol=1e-12)
        assert p.min() >= 0 and p.max() <= 1


# -- perceptron ---------------------------------------------------------------

class TestPerceptron:
    def test_separable_data_converges_mistake_free(self):
        X, y = blobs(50, seed=19, sep=6.0)
        hp = PerceptronParams(validation_fraction=0.0, alpha=0.0)
        model = fit_perceptron(fm(X, y), hp)
        assert model.converged
        assert np.array_equal(model.predict(X), y)

    def test_eta0_scales_scores_exactly(self):
        X, y = blobs(30, seed=20, sep=1.0, spread=2.0)
        base = dict(alpha=0.0, validation_fraction=0.0, shuffle=False,
                    max_iter=20, n_iter_no_change=3)
        a = fit_perceptron(fm(X, y), PerceptronParams(eta0=1.0, **base))
        b = fit_perceptron(fm(X, y), PerceptronParams(eta0=2.0, **base))
        probe = np.random.default_rng(4).normal(0, 2, (40, 2))
        assert np.array_equal(2.0 * a.decision_score(probe),
                              b.decision_score(probe))
        assert np.array_equal(a.predict(probe), b.predict(probe))

    def test_plateau_stops_early_on_noise(self):
        rng = np.random.default_rng(21)
        X = rng.normal(0, 1, (300, 2))
        y = rng.integers(0, 2, 300)  # pure noise cannot converge
        hp = PerceptronParams(max_iter=100, n_iter_no_change=3)
        model = fit_perceptron(fm(X, y), hp, seed=1)
        assert not model.converged
        assert model.meta["n_epochs"] < 100

    def test_hyperparameter_validation(self):
        with pytest.raises(InvalidHyperParam):
            PerceptronParams(eta0=0.0)
        with pytest.raises(InvalidHyperParam):
            PerceptronParams(alpha=-1.0)
        X, y = blobs(5, seed=0)
        with pytest.raises(InvalidHyperParam):
            fit_perceptron(fm(X, y), PerceptronParams(eta0=2.0, alpha=0.5))


# -- Gaussian process ---------------------------------------------------------------

class TestGpc:
    def test_lml_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            n = int(rng.integers(6, 14))
            X = rng.normal(0, 1, (n, 2))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            ypm = np.where(y == 1, 1.0, -1.0)
            theta = rng.uniform(-1.0, 1.0, 2)
            _, grad = gpc_lml_and_grad(theta, X, ypm)
            h = 1e-5
            fd = np.empty(2)
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                fp, _ = gpc_lml_and_grad(theta + e, X, ypm)
                fmv, _ = gpc_lml_and_grad(theta - e, X, ypm)
                fd[j] = (fp - fmv) / (2 * h)
            assert np.allclose(grad, fd, rtol=1e-4, atol=1e-4)

    def test_mirrored_data_gives_half_probability_at_origin(self):
        rng = np.random.default_rng(23)
        pos = rng.normal(1.5, 1.0, (20, 2))
        X = np.vstack([pos, -pos])
        y = np.array([1] * 20 + [0] * 20)
        model = fit_gpc(fm(X, y), GpcParams(optimize_hyperparams=False))
        origin = np.zeros((1, 2))
        assert abs(model.decision_score(origin)[0]) <= 1e-6
        assert model.predict_proba(origin)[0] == pytest.approx(0.5, abs=1e-6)

    def test_separable_blobs_classified(self):
        X, y = blobs(20, seed=24, sep=5.0)
        model = fit_gpc(fm(X, y), GpcParams(optimizer_max_iter=10))
        assert np.array_equal(model.predict(X), y)
        # Laplace + MacKay damping keeps probabilities conservative, so just
        # require every point confidently on its own side
        p = model.predict_proba(X)
        assert np.all(p[y == 1] > 0.6) and np.all(p[y == 0] < 0.4)

    def test_hyperparameter_search_does_not_hurt_lml(self):
        X, y = blobs(12, seed=25, sep=2.0)
        ypm = np.where(y == 1, 1.0, -1.0)
        model = fit_gpc(fm(X, y), GpcParams(optimizer_max_iter=15))
        before, _ = gpc_lml_and_grad(np.asarray(default_theta0(X)), X, ypm)
        after, _ = gpc_lml_and_grad(np.asarray(model.theta), X, ypm)
        assert after >= before - 1e-9

    def test_training_size_cap(self):
        X, y = blobs(20, seed=26)
        with pytest.raises(TrainingSizeExceeded):
            fit_gpc(fm(X, y), GpcParams(max_train=10))


# -- serialization ---------------------------------------------------------------

def fitted_zoo():
    X, y = blobs(15, seed=27, sep=3.0)
    matrix = fm(X, y)
    small_gpc = GpcParams(optimize_hyperparams=False)
    return X, [
        fit_naive_bayes(matrix),
        fit_decision_tree(matrix),
        fit_random_forest(matrix, ForestParams(n_estimators=5), seed=0),
        fit_svc_rbf(matrix),
        fit_adaboost(matrix, AdaBoostParams(n_estimators=5)),
        fit_logreg(matrix),
        fit_perceptron(matrix, PerceptronParams(validation_fraction=0.0)),
        fit_gpc(matrix, small_gpc),
    ]


class TestSerialization:
    def test_round_trip_all_kinds(self, tmp_path):
        X, models = fitted_zoo()
        probe = np.random.default_rng(5).normal(1.5, 2.0, (30, 2))
        seen = set()
        for model in models:
            seen.add(model.kind)
            path = tmp_path / f"{model.kind}.json"
            model.save(path)
            back = load_model(path)
            assert back.kind == model.kind
            assert np.array_equal(back.decision_score(probe),
                                  model.decision_score(probe))
            assert np.array_equal(back.predict(probe), model.predict(probe))
        assert seen == {"NB", "DT", "RF", "SVC", "ADA", "LR", "PERC", "GPC"}

    def test_bad_payloads_rejected(self):
        with pytest.raises(InvalidSpec):
            model_from_dict({"format": "something-else"})
        with pytest.raises(InvalidSpec):
            model_from_dict({"format": "gazescreen-model", "version": 99})
        with pytest.raises(InvalidSpec):
            model_from_dict({"format": "gazescreen-model", "version": 1,
                             "kind": "XX"})
