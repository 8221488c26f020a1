import itertools
import math
import random

import numpy as np
import pytest

from trolldet.corpus import ingest
from trolldet.errors import ValidationError
from trolldet.models import (auc, binary_labels, cross_validate, evaluate, flag_summary,
                             load_bundle, logistic_objective, render_flag_summary, save_bundle,
                             score, stratified_folds, train_adaboost, train_bundle,
                             train_logistic, train_model, train_tree)

from conftest import tiny_corpus


# --- AUC ----------------------------------------------------------------------

def brute_force_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def test_auc_basic_fixture():
    assert auc([0.8, 0.7, 0.6], [1, 0, 1]) == 0.5


def test_auc_perfect_and_inverted():
    assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0


def test_auc_tie_counts_half():
    assert auc([1.0, 1.0, 0.0], [1, 0, 0]) == 0.75
    assert auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5


def test_auc_single_class_is_an_error():
    with pytest.raises(ValidationError):
        auc([0.5, 0.6], [1, 1])
    with pytest.raises(ValidationError):
        auc([], [])


def test_auc_matches_brute_force_with_ties():
    rng = random.Random(5)
    for trial in range(50):
        n = rng.randint(2, 60)
        # integer scores force plenty of ties
        scores = [rng.randint(0, 6) for _ in range(n)]
        labels = [rng.randint(0, 1) for _ in range(n)]
        if len(set(labels)) < 2:
            labels[0], labels[-1] = 0, 1
        assert auc(scores, labels) == pytest.approx(
            brute_force_auc(scores, labels), abs=1e-12)


def test_auc_invariant_under_monotone_transform():
    rng = random.Random(6)
    scores = [rng.randint(0, 9) / 3.0 for _ in range(40)]
    labels = [rng.randint(0, 1) for _ in range(40)]
    labels[0], labels[1] = 0, 1
    warped = [math.atan(s) * 2.0 + 1.0 for s in scores]
    assert auc(scores, labels) == auc(warped, labels)


# --- threshold metrics ------------------------------------------------------------

def test_evaluate_perfect_split():
    m = evaluate([0.9, 0.4], [1, 0], 0.5)
    assert (m.precision, m.recall, m.f1, m.accuracy) == (1.0, 1.0, 1.0, 1.0)


def test_evaluate_no_predicted_positives():
    m = evaluate([0.1, 0.2, 0.3], [1, 0, 0], 0.5)
    assert m.precision == 0.0
    assert m.recall == 0.0
    assert m.f1 == 0.0


def test_evaluate_threshold_is_inclusive():
    m = evaluate([0.5, 0.1], [1, 0], 0.5)
    assert m.recall == 1.0
    assert m.precision == 1.0


def test_evaluate_accuracy_on_imbalanced_all_negative():
    labels = [1] * 14 + [0] * 986
    m = evaluate([0.0] * 1000, labels, 0.5)
    assert m.accuracy == 0.986


# --- logistic regression -----------------------------------------------------------

def _random_problem(rng, n=None, d=None):
    n = n or rng.randint(6, 40)
    d = d or rng.randint(1, 8)
    X = np.array([[rng.gauss(0, 1) for _ in range(d)] for _ in range(n)])
    y = np.array([rng.randint(0, 1) for _ in range(n)], dtype=float)
    y[0], y[1] = 0, 1
    return X, y


def test_logistic_gradient_matches_finite_differences():
    rng = random.Random(17)
    h = 1e-5
    worst = 0.0
    for trial in range(20):
        X, y = _random_problem(rng)
        w = np.array([rng.gauss(0, 0.5) for _ in range(X.shape[1])])
        b = rng.gauss(0, 0.5)
        l2 = rng.choice([0.0, 0.5, 2.0])
        _, grad_w, grad_b = logistic_objective(X, y, w, b, l2)
        for j in range(len(w)):
            bump = np.zeros_like(w)
            bump[j] = h
            hi, _, _ = logistic_objective(X, y, w + bump, b, l2)
            lo, _, _ = logistic_objective(X, y, w - bump, b, l2)
            fd = (hi - lo) / (2 * h)
            worst = max(worst, abs(grad_w[j] - fd) / max(1.0, abs(fd)))
        hi, _, _ = logistic_objective(X, y, w, b + h, l2)
        lo, _, _ = logistic_objective(X, y, w, b - h, l2)
        fd = (hi - lo) / (2 * h)
        worst = max(worst, abs(grad_b - fd) / max(1.0, abs(fd)))
    assert worst <= 1e-5


def test_logistic_loss_history_is_monotone():
    rng = random.Random(19)
    for trial in range(5):
        X, y = _random_problem(rng, n=30, d=4)
        model = train_logistic(X, y, max_iter=60)
        hist = model.loss_history
        assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_logistic_zero_iterations_predicts_base_rate():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([1, 0, 0, 0])
    model = train_logistic(X, y, max_iter=0)
    assert np.allclose(model.predict_proba(X), 0.25)


def test_logistic_separates_separable_data():
    X = np.array([[x] for x in (-3.0, -2.0, -1.0, 1.0, 2.0, 3.0)])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = train_logistic(X, y)
    probs = model.predict_proba(X)
    assert auc(probs, y) == 1.0
    assert probs[0] < 0.2 and probs[-1] > 0.8
    # weaker ridge lets the weights push probabilities to the extremes
    sharp = train_logistic(X, y, l2=0.01).predict_proba(X)
    assert sharp[0] < probs[0] and sharp[-1] > probs[-1]


def test_logistic_is_affine_invariant_via_standardization():
    rng = random.Random(29)
    X, y = _random_problem(rng, n=40, d=3)
    model_a = train_logistic(X, y, max_iter=80)
    model_b = train_logistic(X * 13.0 + 7.0, y, max_iter=80)
    assert np.allclose(model_a.predict_proba(X),
                       model_b.predict_proba(X * 13.0 + 7.0), atol=1e-9)


def test_logistic_tolerates_constant_columns():
    X = np.array([[1.0, -2.0], [1.0, -1.0], [1.0, 1.0], [1.0, 2.0]])
    y = np.array([0, 0, 1, 1])
    model = train_logistic(X, y, max_iter=50)
    assert np.isfinite(model.predict_proba(X)).all()


def test_logistic_rejects_single_class_and_nonfinite():
    X = np.ones((3, 1))
    with pytest.raises(ValidationError):
        train_logistic(X, np.array([1, 1, 1]))
    X_bad = np.array([[0.0], [np.nan], [1.0]])
    with pytest.raises(ValidationError, match="column 0"):
        train_logistic(X_bad, np.array([0, 1, 0]))


def test_logistic_training_is_deterministic():
    rng = random.Random(31)
    X, y = _random_problem(rng, n=25, d=4)
    m1 = train_logistic(X, y, max_iter=40)
    m2 = train_logistic(X, y, max_iter=40)
    assert np.array_equal(m1.weights, m2.weights)
    assert m1.bias == m2.bias


# --- decision tree --------------------------------------------------------------------

def gini_impurity(y, w):
    total = w.sum()
    if total == 0:
        return 0.0
    p = w[y == 1].sum() / total
    return 1.0 - p * p - (1.0 - p) ** 2


def exhaustive_best_split(X, y, w):
    """Reference scan over every feature and midpoint threshold."""
    parent = gini_impurity(y, w)
    W = w.sum()
    best = None
    for j in range(X.shape[1]):
        values = np.unique(X[:, j])
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            left = X[:, j] <= thr
            gain = parent - (w[left].sum() * gini_impurity(y[left], w[left])
                             + w[~left].sum() * gini_impurity(y[~left], w[~left])) / W
            if best is None or gain > best[0] + 1e-15:
                best = (gain, j, thr)
    return best


def test_tree_learns_step_function():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    model = train_tree(X, y, max_depth=3)
    assert model.root["feature"] == 0
    assert model.root["threshold"] == 1.5
    assert np.array_equal(model.predict_proba(X), [0.0, 0.0, 1.0, 1.0])


def test_tree_constant_features_become_a_leaf():
    X = np.ones((6, 2))
    y = np.array([1, 0, 0, 1, 0, 0])
    model = train_tree(X, y)
    assert "prob" in model.root
    assert model.root["prob"] == pytest.approx(2 / 6)


def test_tree_tie_prefers_lowest_feature_then_threshold():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 0, 1])
    model = train_tree(X, y, max_depth=1)
    assert model.root["feature"] == 0

    X2 = np.array([[0.0], [1.0], [2.0]])
    y2 = np.array([0, 1, 0])
    model2 = train_tree(X2, y2, max_depth=1)
    assert model2.root["threshold"] == 0.5


def test_tree_root_split_matches_exhaustive_search():
    rng = np.random.default_rng(101)
    for trial in range(25):
        X = rng.integers(0, 5, size=(20, 4)).astype(float)
        y = rng.integers(0, 2, size=20).astype(float)
        y[0], y[1] = 0, 1
        w = np.full(20, 1.0 / 20)
        expected = exhaustive_best_split(X, y, w)
        model = train_tree(X, y, max_depth=1)
        if expected is None or expected[0] <= 1e-12:
            assert "prob" in model.root
            continue
        assert model.root["feature"] == expected[1]
        assert model.root["threshold"] == pytest.approx(expected[2], abs=1e-12)


def test_tree_respects_depth_cap():
    rng = np.random.default_rng(103)
    for depth in (1, 2, 5, 10):
        X = rng.normal(size=(120, 3))
        y = (rng.random(120) < 0.5).astype(float)
        y[0], y[1] = 0, 1
        model = train_tree(X, y, max_depth=depth)
        assert model.depth() <= depth


def test_tree_duplicated_row_equals_doubled_weight():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [1.5]])
    y = np.array([0, 0, 1, 1, 1])
    w = np.array([1.0, 1.0, 1.0, 1.0, 2.0])
    by_weight = train_tree(X, y, max_depth=4, sample_weight=w)
    X_dup = np.vstack([X, [[1.5]]])
    y_dup = np.append(y, 1)
    by_dup = train_tree(X_dup, y_dup, max_depth=4)
    grid = np.array([[v] for v in np.linspace(-0.5, 3.5, 17)])
    assert np.allclose(by_weight.predict_proba(grid), by_dup.predict_proba(grid))


def test_tree_is_deterministic():
    rng = np.random.default_rng(107)
    X = rng.normal(size=(40, 3))
    y = (rng.random(40) < 0.4).astype(float)
    y[0], y[1] = 0, 1
    t1 = train_tree(X, y)
    t2 = train_tree(X, y)
    assert t1.to_doc() == t2.to_doc()


# --- adaboost -----------------------------------------------------------------------

def test_adaboost_stops_after_perfect_stage():
    X = np.array([[x] for x in (-2.0, -1.0, 1.0, 2.0)])
    y = np.array([0, 0, 1, 1])
    model = train_adaboost(X, y, rounds=50)
    assert len(model.stages) == 1
    probs = model.predict_proba(X)
    assert np.array_equal(probs >= 0.5, y == 1)


def test_adaboost_solves_near_xor_with_depth_two_trees():
    # pure XOR has zero Gini gain at the root, so greedy trees refuse the
    # first cut; doubling one corner breaks the tie and depth 2 suffices
    X = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 0, 1, 1, 0])
    model = train_adaboost(X, y, rounds=10, base_depth=2)
    assert auc(model.predict_proba(X), y) == 1.0


def test_adaboost_rejects_pure_xor():
    # every depth-2 stump on pure XOR is a prior leaf with error 0.5
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    with pytest.raises(ValidationError, match="chance"):
        train_adaboost(X, y, rounds=10, base_depth=2)


def test_adaboost_alpha_matches_hand_computation():
    # Identical inputs with conflicting labels make one unavoidable miss of
    # weight 0.2, so the first stage gets alpha = 0.5*ln(0.8/0.2).
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0, 1])
    model = train_adaboost(X, y, rounds=1, base_depth=2)
    assert model.stages[0][0] == pytest.approx(0.5 * math.log(4.0))


def test_adaboost_no_stage_better_than_chance_is_an_error():
    X = np.ones((4, 1))
    y = np.array([0, 0, 1, 1])
    with pytest.raises(ValidationError, match="chance"):
        train_adaboost(X, y, rounds=5)


def test_adaboost_scores_are_alpha_weighted_vote_share():
    rng = np.random.default_rng(113)
    X = rng.normal(size=(60, 2))
    y = (X[:, 0] + 0.3 * rng.normal(size=60) > 0).astype(float)
    y[0], y[1] = 0, 1
    model = train_adaboost(X, y, rounds=8)
    probs = model.predict_proba(X)
    assert probs.min() >= 0.0 and probs.max() <= 1.0
    total = sum(alpha for alpha, _ in model.stages)
    votes = sum(alpha * (tree.predict_proba(X) >= 0.5)
                for alpha, tree in model.stages)
    assert np.allclose(probs, votes / total)


# --- fold construction ------------------------------------------------------------------

def test_stratified_folds_balance_both_classes():
    y = np.array([1] * 23 + [0] * 77)
    folds = stratified_folds(y, k=10, seed=3)
    assert len(folds) == 10
    all_test = np.sort(np.concatenate([test for _, test in folds]))
    assert np.array_equal(all_test, np.arange(100))
    for train_idx, test_idx in folds:
        assert set(train_idx).isdisjoint(test_idx)
        pos = int(y[test_idx].sum())
        neg = len(test_idx) - pos
        assert pos in (2, 3)        # 23 positives dealt over 10 folds
        assert neg in (7, 8)        # 77 negatives dealt over 10 folds


def test_stratified_folds_seed_determinism():
    y = np.array([1] * 30 + [0] * 70)
    a = stratified_folds(y, k=5, seed=9)
    b = stratified_folds(y, k=5, seed=9)
    c = stratified_folds(y, k=5, seed=10)
    assert all(np.array_equal(x[1], z[1]) for x, z in zip(a, b))
    assert any(not np.array_equal(x[1], z[1]) for x, z in zip(a, c))


def test_stratified_folds_require_k_members_per_class():
    y = np.array([1, 1, 0, 0, 0, 0])
    with pytest.raises(ValidationError):
        stratified_folds(y, k=3, seed=0)


def test_binary_labels_mapping():
    assert binary_labels(["troll", "control", "troll"]).tolist() == [1, 0, 1]
    with pytest.raises(ValidationError, match="unlabeled"):
        binary_labels(["troll", "unlabeled"])


# --- cross-validation harness ---------------------------------------------------------

class OracleModel:
    """Scores rows by one marker column the corpus plants for trolls."""

    def __init__(self, column):
        self.column = column

    def predict_proba(self, X):
        col = X[:, self.column]
        hi = col.max() or 1.0
        return col / max(hi, 1.0)


def test_cross_validate_plumbing_with_injected_trainer(tmp_path):
    accounts, tweets = tiny_corpus(tmp_path, n_troll=8, n_control=12)
    dataset = ingest(accounts, tweets)

    marker = {}

    def trainer(X, y, seed):
        # the troll rows contain "agitprop"; find its column from y itself
        troll_mean = X[y == 1].mean(axis=0)
        control_mean = X[y == 0].mean(axis=0)
        col = int(np.argmax(troll_mean - control_mean))
        marker["col"] = col
        return OracleModel(col)

    report = cross_validate(dataset, k=4, seed=1, trainer=trainer, vocab_size=50)
    assert report.model == "custom"
    assert report.mean.auc == 1.0
    assert all(m.auc == 1.0 for m in report.folds)


def test_cross_validate_is_deterministic(tmp_path):
    accounts, tweets = tiny_corpus(tmp_path, n_troll=6, n_control=10)
    dataset = ingest(accounts, tweets)
    a = cross_validate(dataset, model="dt", k=3, seed=5, vocab_size=40)
    b = cross_validate(dataset, model="dt", k=3, seed=5, vocab_size=40)
    assert a.to_doc() == b.to_doc()


def test_cross_validate_small_corpus_lr(tmp_path):
    accounts, tweets = tiny_corpus(tmp_path, n_troll=6, n_control=10)
    dataset = ingest(accounts, tweets)
    report = cross_validate(dataset, model="lr", k=3, seed=2, vocab_size=40,
                            params={"max_iter": 60})
    assert report.mean.auc == 1.0      # text split is trivially separable


# --- bundles and scoring ------------------------------------------------------------------

def test_bundle_round_trip_and_scoring(tmp_path):
    accounts, tweets = tiny_corpus(tmp_path, n_troll=6, n_control=10)
    dataset = ingest(accounts, tweets)
    bundle = train_bundle(dataset, model="lr", seed=4, vocab_size=40,
                          params={"max_iter": 60})
    path = tmp_path / "model.bundle"
    save_bundle(bundle, path, tool_version="x")
    loaded = load_bundle(path)
    preds_a = score(dataset, bundle)
    preds_b = score(dataset, loaded)
    assert [p.probability for p in preds_a] == [p.probability for p in preds_b]
    assert all(p.flagged == (p.probability >= 0.5) for p in preds_a)

    save_bundle(loaded, tmp_path / "again.bundle", tool_version="x")
    assert (tmp_path / "again.bundle").read_bytes() == path.read_bytes()


def test_score_rejects_bad_threshold(tmp_path):
    accounts, tweets = tiny_corpus(tmp_path)
    dataset = ingest(accounts, tweets)
    bundle = train_bundle(dataset, model="dt", vocab_size=30)
    with pytest.raises(ValidationError):
        score(dataset, bundle, threshold=1.5)


def test_flag_summary_render():
    class P:
        def __init__(self, flagged):
            self.flagged = flagged
            self.account_id = "x"
            self.probability = 0.5

    preds = [P(True)] * 1466 + [P(False)] * (39652 - 1466)
    text = render_flag_summary(flag_summary(preds))
    assert "# of Unique accounts scored: 39,652" in text
    assert "# of Unique flagged accounts: 1,466 (3.7%)" in text


def test_train_model_rejects_unknown_kind():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    with pytest.raises(ValidationError, match="kind"):
        train_model("svm", X, y)
