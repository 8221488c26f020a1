"""Classifiers, evaluation metrics, cross-validation, and scoring.

Three model kinds, all deterministic for a fixed (data, params, seed):

* logistic regression trained by full-batch gradient descent with a
  backtracking (Armijo) line search on the L2-regularized negative
  log-likelihood; features are standardized internally and the training
  statistics ride along in the model,
* a greedy Gini decision tree with depth cap and deterministic
  tie-breaking (lowest column index, then lowest threshold),
* discrete two-class AdaBoost over shallow trees.

Cross-validation is stratified and leakage-safe: the vocabulary, the
observed-language column set, and the standardization statistics are all
re-derived inside each training fold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .corpus import Dataset, REFERENCE_DATE
from .errors import SchemaMismatchError, ValidationError
from .featurize import (DEFAULT_VOCAB_SIZE, FeatureSchema, TimelineStats, assemble_matrix,
                        build_schema, compute_stats, family_indices, schema_from_doc,
                        schema_to_doc)
from .formatting import fmt_int, fmt_pct
from .hashing import canonical_json, split_seed

POSITIVE_LABEL = "troll"
NEGATIVE_LABEL = "control"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_training_inputs(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or len(X) != len(y):
        raise ValidationError("X must be 2-D with one row per label")
    finite = np.isfinite(X).all(axis=0)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise ValidationError(f"column {bad} contains non-finite values")
    classes = np.unique(y)
    if not np.isin(classes, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    if len(classes) < 2:
        raise ValidationError("training data contains a single class")


# --- metrics --------------------------------------------------------------


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Rank-based (Mann-Whitney) AUC; tied scores contribute half credit.

    Errors when only one class is present, since the statistic is
    undefined there.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if len(s) != len(y):
        raise ValidationError("scores and labels must have equal length")
    pos = int((y == 1).sum())
    neg = int((y == 0).sum())
    if pos == 0 or neg == 0:
        raise ValidationError("AUC needs both classes present")
    uniq, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts)
    avg_rank = cum - (counts - 1) / 2.0  # 1-based midranks
    ranks = avg_rank[inverse]
    rank_sum = ranks[y == 1].sum()
    return float((rank_sum - pos * (pos + 1) / 2.0) / (pos * neg))


@dataclass
class Metrics:
    precision: float
    recall: float
    f1: float
    auc: float
    accuracy: float

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "auc": self.auc, "accuracy": self.accuracy}


def evaluate(probabilities: Sequence[float], labels: Sequence[int],
             threshold: float = 0.5) -> Metrics:
    """Threshold the probabilities and compute the usual confusion-matrix
    metrics plus rank AUC.  Precision is 0 when nothing is predicted
    positive."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels)
    if len(p) != len(y):
        raise ValidationError("probabilities and labels must have equal length")
    pred = p >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(y) if len(y) else 0.0
    return Metrics(precision=precision, recall=recall, f1=f1,
                   auc=auc(p, y), accuracy=accuracy)


# --- logistic regression ----------------------------------------------------


def logistic_objective(Xs: np.ndarray, y: np.ndarray, w: np.ndarray, b: float,
                       l2: float):
    """Loss, weight gradient, and bias gradient of the regularized NLL on
    already-standardized features.  The bias is not regularized."""
    z = Xs @ w + b
    loss = float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    err = _sigmoid(z) - y
    grad_w = Xs.T @ err + l2 * w
    grad_b = float(err.sum())
    return loss, grad_w, grad_b


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    l2: float
    tol: float
    seed: int
    iterations: int
    converged: bool
    final_loss: float
    grad_norm: float
    loss_history: list = field(default_factory=list, repr=False)

    kind = "lr"

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=np.float64) - self.mean) / self.std
        return _sigmoid(Xs @ self.weights + self.bias)

    def to_doc(self) -> dict:
        return {
            "kind": "lr",
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "l2": self.l2,
            "tol": self.tol,
            "seed": self.seed,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_loss": self.final_loss,
            "grad_norm": self.grad_norm,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "LogisticModel":
        return cls(
            weights=np.array(doc["weights"], dtype=np.float64),
            bias=float(doc["bias"]),
            mean=np.array(doc["mean"], dtype=np.float64),
            std=np.array(doc["std"], dtype=np.float64),
            l2=doc["l2"], tol=doc["tol"], seed=doc["seed"],
            iterations=doc["iterations"], converged=doc["converged"],
            final_loss=doc["final_loss"], grad_norm=doc["grad_norm"],
        )


def train_logistic(X: np.ndarray, y: Sequence[int], l2: float = 1.0,
                   tol: float = 1e-6, max_iter: int = 500, seed: int = 0) -> LogisticModel:
    """Full-batch gradient descent with backtracking line search.

    Deterministic: weights start at zero and the bias at the class-prior
    log-odds, so the seed is recorded for provenance only.  The loss is
    non-increasing by construction; training stops when the sup-norm of
    the gradient falls to `tol` or at `max_iter`.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_training_inputs(X, y)
    if l2 < 0:
        raise ValidationError("l2 penalty must be >= 0")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    Xs = (X - mean) / std

    w = np.zeros(X.shape[1])
    prior = min(max(float(y.mean()), 1e-12), 1.0 - 1e-12)
    b = math.log(prior / (1.0 - prior))

    loss, grad_w, grad_b = logistic_objective(Xs, y, w, b, l2)
    history = [loss]
    step = 1.0
    iterations = 0
    converged = False
    while iterations < max_iter:
        gnorm = max(float(np.max(np.abs(grad_w))), abs(grad_b))
        if gnorm <= tol:
            converged = True
            break
        gsq = float(grad_w @ grad_w) + grad_b * grad_b
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            loss_new, gw_new, gb_new = logistic_objective(Xs, y, w_new, b_new, l2)
            if loss_new <= loss - 1e-4 * step * gsq or step < 1e-18:
                break
            step *= 0.5
        if step < 1e-18:
            break  # no descent possible at float precision
        w, b, loss, grad_w, grad_b = w_new, b_new, loss_new, gw_new, gb_new
        history.append(loss)
        iterations += 1
    gnorm = max(float(np.max(np.abs(grad_w))), abs(grad_b))
    return LogisticModel(
        weights=w, bias=b, mean=mean, std=std, l2=l2, tol=tol, seed=seed,
        iterations=iterations, converged=converged or gnorm <= tol,
        final_loss=loss, grad_norm=gnorm, loss_history=history,
    )


# --- decision tree ----------------------------------------------------------


def _gini(w1: float, w_total: float) -> float:
    if w_total <= 0.0:
        return 0.0
    p = w1 / w_total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split(X: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Exhaustive Gini scan.  Candidate thresholds are midpoints between
    consecutive distinct values of a column; ties on gain keep the lowest
    column index, then the lowest threshold."""
    W = float(w.sum())
    W1 = float(w[y == 1].sum())
    parent = _gini(W1, W)
    best = None  # (gain, col, threshold)
    for j in range(X.shape[1]):
        x = X[:, j]
        order = np.argsort(x, kind="mergesort")
        xs = x[order]
        ws = w[order]
        w1s = ws * y[order]
        cum_w = np.cumsum(ws)
        cum_w1 = np.cumsum(w1s)
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if len(cut) == 0:
            continue
        wl = cum_w[cut]
        wl1 = cum_w1[cut]
        wr = W - wl
        wr1 = W1 - wl1
        pl = np.divide(wl1, wl, out=np.zeros_like(wl), where=wl > 0)
        pr = np.divide(wr1, wr, out=np.zeros_like(wr), where=wr > 0)
        gini_l = 1.0 - pl * pl - (1.0 - pl) ** 2
        gini_r = 1.0 - pr * pr - (1.0 - pr) ** 2
        gains = parent - (wl * gini_l + wr * gini_r) / W
        k = int(np.argmax(gains))  # first max -> lowest threshold
        gain = float(gains[k])
        if best is None or gain > best[0]:
            threshold = float((xs[cut[k]] + xs[cut[k] + 1]) / 2.0)
            best = (gain, j, threshold)
    return best


def _build_node(X: np.ndarray, y: np.ndarray, w: np.ndarray, depth: int,
                max_depth: int) -> dict:
    W = float(w.sum())
    prob = float(w[y == 1].sum() / W) if W > 0 else 0.0
    if depth >= max_depth or len(y) < 2 or prob in (0.0, 1.0):
        return {"prob": prob, "weight": W}
    best = _best_split(X, y, w)
    if best is None or best[0] <= 1e-12:
        return {"prob": prob, "weight": W}
    _, col, threshold = best
    left = X[:, col] <= threshold
    return {
        "feature": int(col),
        "threshold": threshold,
        "left": _build_node(X[left], y[left], w[left], depth + 1, max_depth),
        "right": _build_node(X[~left], y[~left], w[~left], depth + 1, max_depth),
    }


def _node_predict(node: dict, X: np.ndarray, out: np.ndarray, mask: np.ndarray) -> None:
    if "prob" in node:
        out[mask] = node["prob"]
        return
    go_left = np.zeros(len(out), dtype=bool)
    go_left[mask] = X[mask, node["feature"]] <= node["threshold"]
    _node_predict(node["left"], X, out, go_left)
    _node_predict(node["right"], X, out, mask & ~go_left)


def _node_depth(node: dict) -> int:
    if "prob" in node:
        return 0
    return 1 + max(_node_depth(node["left"]), _node_depth(node["right"]))


@dataclass
class TreeModel:
    root: dict
    max_depth: int
    seed: int

    kind = "dt"

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(len(X), dtype=np.float64)
        _node_predict(self.root, X, out, np.ones(len(X), dtype=bool))
        return out

    def depth(self) -> int:
        return _node_depth(self.root)

    def to_doc(self) -> dict:
        return {"kind": "dt", "max_depth": self.max_depth, "seed": self.seed,
                "root": self.root}

    @classmethod
    def from_doc(cls, doc: dict) -> "TreeModel":
        return cls(root=doc["root"], max_depth=doc["max_depth"], seed=doc["seed"])


def train_tree(X: np.ndarray, y: Sequence[int], max_depth: int = 10,
               sample_weight: Optional[np.ndarray] = None, seed: int = 0) -> TreeModel:
    """Greedy binary Gini tree; leaves store the weighted class-1
    frequency.  Deterministic: no feature subsampling, fixed tie rules."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_training_inputs(X, y)
    if max_depth < 1:
        raise ValidationError("max_depth must be >= 1")
    if sample_weight is None:
        w = np.ones(len(y), dtype=np.float64)
    else:
        w = np.asarray(sample_weight, dtype=np.float64)
        if (w < 0).any() or w.sum() <= 0:
            raise ValidationError("sample weights must be non-negative with positive sum")
    root = _build_node(X, y, w, 0, max_depth)
    return TreeModel(root=root, max_depth=max_depth, seed=seed)


# --- AdaBoost ----------------------------------------------------------------

_EPS_ERR = 1e-16


@dataclass
class BoostedModel:
    stages: list  # [(alpha, TreeModel), ...]
    rounds: int
    base_depth: int
    seed: int

    kind = "ada"

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Share of total stage weight voting positive; monotone in the
        usual boosted margin."""
        X = np.asarray(X, dtype=np.float64)
        total = sum(alpha for alpha, _ in self.stages)
        votes = np.zeros(len(X), dtype=np.float64)
        for alpha, tree in self.stages:
            votes += alpha * (tree.predict_proba(X) >= 0.5)
        return votes / total

    def to_doc(self) -> dict:
        return {"kind": "ada", "rounds": self.rounds, "base_depth": self.base_depth,
                "seed": self.seed,
                "stages": [{"alpha": alpha, "root": tree.root} for alpha, tree in self.stages]}

    @classmethod
    def from_doc(cls, doc: dict) -> "BoostedModel":
        stages = [(s["alpha"], TreeModel(root=s["root"], max_depth=doc["base_depth"], seed=doc["seed"]))
                  for s in doc["stages"]]
        return cls(stages=stages, rounds=doc["rounds"], base_depth=doc["base_depth"],
                   seed=doc["seed"])


def train_adaboost(X: np.ndarray, y: Sequence[int], rounds: int = 50,
                   base_depth: int = 2, seed: int = 0) -> BoostedModel:
    """Discrete two-class AdaBoost: alpha_t = 0.5*ln((1-eps_t)/eps_t),
    multiplicative weight updates, early stop when a stage's weighted
    error reaches 0.5 (stage discarded) or 0 (kept, already separable)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_training_inputs(X, y)
    if rounds < 1:
        raise ValidationError("rounds must be >= 1")
    n = len(y)
    w = np.full(n, 1.0 / n)
    stages = []
    for _ in range(rounds):
        tree = train_tree(X, y, max_depth=base_depth, sample_weight=w, seed=seed)
        pred = tree.predict_proba(X) >= 0.5
        miss = pred != (y == 1)
        err = float(w[miss].sum())
        if err >= 0.5:
            break
        clamped = min(max(err, _EPS_ERR), 1.0 - _EPS_ERR)
        alpha = 0.5 * math.log((1.0 - clamped) / clamped)
        stages.append((alpha, tree))
        if err == 0.0:
            break
        w = w * np.exp(np.where(miss, alpha, -alpha))
        w /= w.sum()
    if not stages:
        raise ValidationError("boosting found no stage better than chance")
    return BoostedModel(stages=stages, rounds=rounds, base_depth=base_depth, seed=seed)


# --- model registry -----------------------------------------------------------

MODEL_KINDS = ("lr", "dt", "ada")


def train_model(kind: str, X: np.ndarray, y: Sequence[int], seed: int = 0,
                params: Optional[dict] = None):
    params = dict(params or {})
    if kind == "lr":
        return train_logistic(X, y, seed=seed, **params)
    if kind == "dt":
        params.setdefault("max_depth", 10)
        return train_tree(X, y, seed=seed, **params)
    if kind == "ada":
        return train_adaboost(X, y, seed=seed, **params)
    raise ValidationError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def model_from_doc(doc: dict):
    kind = doc.get("kind")
    if kind == "lr":
        return LogisticModel.from_doc(doc)
    if kind == "dt":
        return TreeModel.from_doc(doc)
    if kind == "ada":
        return BoostedModel.from_doc(doc)
    raise ValidationError(f"unknown model kind {kind!r} in document")


# --- stratified cross-validation ----------------------------------------------


def binary_labels(labels: Sequence[str]) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.float64)
    for i, label in enumerate(labels):
        if label == POSITIVE_LABEL:
            out[i] = 1.0
        elif label == NEGATIVE_LABEL:
            out[i] = 0.0
        else:
            raise ValidationError(f"account label {label!r} cannot enter training; "
                                  "expected troll or control")
    return out


def stratified_folds(y: Sequence[int], k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deal each class round-robin after a seeded shuffle, so every fold's
    class counts differ from the exact proportional share by less than 1."""
    y = np.asarray(y)
    if k < 2:
        raise ValidationError("k must be >= 2")
    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    buckets: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise ValidationError(f"class {cls} has {len(idx)} members; need at least k={k}")
        idx = idx[rng.permutation(len(idx))]
        for pos, i in enumerate(idx):
            buckets[pos % k].append(int(i))
    folds = []
    all_idx = np.arange(len(y))
    for f in range(k):
        test = np.array(sorted(buckets[f]), dtype=int)
        mask = np.ones(len(y), dtype=bool)
        mask[test] = False
        folds.append((all_idx[mask], test))
    return folds


@dataclass
class CvReport:
    model: str
    family: str
    k: int
    seed: int
    threshold: float
    folds: list[Metrics]
    mean: Metrics

    def to_doc(self) -> dict:
        return {"model": self.model, "family": self.family, "k": self.k,
                "seed": self.seed, "threshold": self.threshold,
                "folds": [m.as_dict() for m in self.folds],
                "mean": self.mean.as_dict()}


def _mean_metrics(folds: list[Metrics]) -> Metrics:
    n = len(folds)
    return Metrics(
        precision=sum(m.precision for m in folds) / n,
        recall=sum(m.recall for m in folds) / n,
        f1=sum(m.f1 for m in folds) / n,
        auc=sum(m.auc for m in folds) / n,
        accuracy=sum(m.accuracy for m in folds) / n,
    )


Trainer = Callable[[np.ndarray, np.ndarray, int], object]


def cross_validate_stats(stats: Sequence[TimelineStats], model: str = "lr", k: int = 10,
                         seed: int = 0, family: str = "all",
                         vocab_size: int = DEFAULT_VOCAB_SIZE,
                         reference_date=REFERENCE_DATE, threshold: float = 0.5,
                         params: Optional[dict] = None,
                         trainer: Optional[Trainer] = None) -> CvReport:
    """Stratified k-fold CV over precomputed timeline stats.

    Each fold builds its own schema (vocabulary and language columns) from
    the training split only, then trains and evaluates on the masked
    family columns.  Folds are independent of execution order: the fold
    seed is derived from (seed, fold index).
    """
    y = binary_labels([st.label for st in stats])
    folds = stratified_folds(y, k, seed)
    fold_metrics = []
    for i, (train_idx, test_idx) in enumerate(folds):
        train_stats = [stats[j] for j in train_idx]
        test_stats = [stats[j] for j in test_idx]
        schema = build_schema(train_stats, vocab_size, reference_date)
        cols = family_indices(schema, family)
        X_train = assemble_matrix(train_stats, schema)[:, cols]
        X_test = assemble_matrix(test_stats, schema)[:, cols]
        fold_seed = split_seed(seed, f"fold-{i}")
        if trainer is not None:
            fitted = trainer(X_train, y[train_idx], fold_seed)
        else:
            fitted = train_model(model, X_train, y[train_idx], seed=fold_seed, params=params)
        probs = np.asarray(fitted.predict_proba(X_test), dtype=np.float64)
        fold_metrics.append(evaluate(probs, y[test_idx], threshold))
    return CvReport(model=model if trainer is None else "custom", family=family, k=k,
                    seed=seed, threshold=threshold, folds=fold_metrics,
                    mean=_mean_metrics(fold_metrics))


def cross_validate(dataset: Dataset, model: str = "lr", k: int = 10, seed: int = 0,
                   family: str = "all", vocab_size: int = DEFAULT_VOCAB_SIZE,
                   reference_date=REFERENCE_DATE, threshold: float = 0.5,
                   params: Optional[dict] = None,
                   trainer: Optional[Trainer] = None) -> CvReport:
    stats = [compute_stats(tl, reference_date) for tl in dataset.timelines]
    return cross_validate_stats(stats, model=model, k=k, seed=seed, family=family,
                                vocab_size=vocab_size, reference_date=reference_date,
                                threshold=threshold, params=params, trainer=trainer)


# --- bundles and scoring --------------------------------------------------------


BUNDLE_VERSION = 1


@dataclass
class ModelBundle:
    schema: FeatureSchema
    model: object
    family: str = "all"
    metadata: dict = field(default_factory=dict)

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        cols = family_indices(self.schema, self.family)
        return self.model.predict_proba(X[:, cols])


def save_bundle(bundle: ModelBundle, path: str | Path, tool_version: str = "") -> None:
    doc = {
        "artifact": "model_bundle",
        "version": BUNDLE_VERSION,
        "tool_version": tool_version,
        "family": bundle.family,
        "schema": schema_to_doc(bundle.schema, tool_version),
        "model": bundle.model.to_doc(),
        "metadata": bundle.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(doc) + "\n")


def load_bundle(path: str | Path) -> ModelBundle:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("artifact") != "model_bundle":
        raise ValidationError(f"{path} is not a model bundle")
    if doc.get("version") != BUNDLE_VERSION:
        raise ValidationError(f"{path}: unsupported bundle version {doc.get('version')!r}")
    schema = schema_from_doc(doc["schema"], where=str(path))
    return ModelBundle(schema=schema, model=model_from_doc(doc["model"]),
                       family=doc.get("family", "all"), metadata=doc.get("metadata", {}))


def train_bundle(dataset: Dataset, model: str = "lr", seed: int = 0, family: str = "all",
                 vocab_size: int = DEFAULT_VOCAB_SIZE, reference_date=REFERENCE_DATE,
                 params: Optional[dict] = None) -> ModelBundle:
    """Fit one model on the full labeled dataset and package it with the
    schema it was trained under."""
    stats = [compute_stats(tl, reference_date) for tl in dataset.timelines]
    y = binary_labels([st.label for st in stats])
    schema = build_schema(stats, vocab_size, reference_date)
    cols = family_indices(schema, family)
    X = assemble_matrix(stats, schema)[:, cols]
    fitted = train_model(model, X, y, seed=seed, params=params)
    meta = {"model": model, "seed": seed, "family": family,
            "train_rows": len(stats), "positive_rows": int(y.sum())}
    if isinstance(fitted, LogisticModel):
        meta.update({"iterations": fitted.iterations, "converged": fitted.converged,
                     "final_loss": fitted.final_loss, "grad_norm": fitted.grad_norm})
    return ModelBundle(schema=schema, model=fitted, family=family, metadata=meta)


@dataclass
class Prediction:
    account_id: str
    probability: float
    flagged: bool


def score(dataset: Dataset, bundle: ModelBundle, threshold: float = 0.5) -> list[Prediction]:
    """Score unseen timelines under the bundle's schema.  An account is
    flagged exactly when its probability reaches the threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError("threshold must be within [0, 1]")
    stats = [compute_stats(tl, bundle.schema.reference_date) for tl in dataset.timelines]
    if not stats:
        return []
    X = assemble_matrix(stats, bundle.schema)
    probs = bundle.predict_proba_matrix(X)
    return [Prediction(account_id=st.account_id, probability=float(pr), flagged=bool(pr >= threshold))
            for st, pr in zip(stats, probs)]


def flag_summary(predictions: Sequence[Prediction]) -> dict:
    total = len(predictions)
    flagged = sum(1 for p in predictions if p.flagged)
    return {"total": total, "flagged": flagged,
            "percent": 100.0 * flagged / total if total else 0.0}


def render_flag_summary(summary: dict) -> str:
    lines = [
        f"# of Unique accounts scored: {fmt_int(summary['total'])}",
        f"# of Unique flagged accounts: {fmt_int(summary['flagged'])} ({fmt_pct(summary['percent'])})",
    ]
    return "\n".join(lines) + "\n"


# --- CSV renderers ---------------------------------------------------------------


def render_cv_csv(report: CvReport) -> str:
    lines = [f"# model={report.model} family={report.family} k={report.k} "
             f"seed={report.seed} threshold={report.threshold}",
             "fold,precision,recall,f1,auc,accuracy"]
    for i, m in enumerate(report.folds, start=1):
        lines.append(f"{i},{m.precision!r},{m.recall!r},{m.f1!r},{m.auc!r},{m.accuracy!r}")
    m = report.mean
    lines.append(f"mean,{m.precision!r},{m.recall!r},{m.f1!r},{m.auc!r},{m.accuracy!r}")
    return "\n".join(lines) + "\n"


def render_predictions_csv(predictions: Sequence[Prediction], threshold: float) -> str:
    lines = [f"# threshold={threshold!r}", "account_id,probability,flagged"]
    for p in predictions:
        lines.append(f"{p.account_id},{p.probability!r},{'true' if p.flagged else 'false'}")
    return "\n".join(lines) + "\n"


def load_predictions_csv(path) -> list[Prediction]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("account_id,"):
                continue
            parts = line.split(",")
            if len(parts) != 3 or parts[2] not in ("true", "false"):
                raise ValidationError(f"{path} line {lineno}: expected 'account_id,probability,flagged'")
            try:
                prob = float(parts[1])
            except ValueError:
                raise ValidationError(f"{path} line {lineno}: bad probability {parts[1]!r}") from None
            out.append(Prediction(account_id=parts[0], probability=prob,
                                  flagged=parts[2] == "true"))
    return out
