"""From-scratch linear classifiers: logistic regression and linear SVM.

Training is deterministic full-batch gradient descent from zero
initialization. Labels are {0 benign, 1 suspicious}; the SVM maps them to
{-1, +1} internally. Class weighting multiplies the per-example loss of
the suspicious class.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import (
    DimensionMismatch,
    LengthMismatch,
    SingleClassDataset,
    TooFewExamples,
    WrongModelKind,
)
from .features import FeatureVector, LabeledDataset

KINDS = ("logistic", "svm")


@dataclass(slots=True)
class Hyper:
    learning_rate: float = 0.1
    l2: float = 1e-4
    epochs: int = 500
    seed: int = 0
    class_weight: float = 1.0
    threshold: float = 0.5


@dataclass(slots=True)
class LinearModel:
    kind: str
    weights: np.ndarray
    bias: float
    hyper: Hyper


@dataclass(slots=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: tuple[int, int, int, int]  # (tp, fp, tn, fn)


@dataclass(slots=True)
class CVReport:
    k: int
    fold_metrics: list[Metrics]
    mean_accuracy: float


def _to_csr(vectors: Sequence[FeatureVector]) -> sparse.csr_matrix:
    if not vectors:
        raise SingleClassDataset("empty dataset")
    dim = vectors[0].dimension
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        if v.dimension != dim:
            raise DimensionMismatch(f"vector {i} has dimension {v.dimension}, expected {dim}")
        indptr[i + 1] = indptr[i] + len(v.active)
    indices = np.concatenate([np.asarray(v.active, dtype=np.int64) for v in vectors]) \
        if indptr[-1] else np.zeros(0, dtype=np.int64)
    data = np.ones(indptr[-1], dtype=np.float64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def predict_score(model: LinearModel, x: FeatureVector) -> float:
    """Sparse dot product w.x + b."""
    if x.dimension != model.weights.shape[0]:
        raise DimensionMismatch(
            f"vector dimension {x.dimension} != model dimension {model.weights.shape[0]}"
        )
    if x.active:
        return float(model.weights[list(x.active)].sum() + model.bias)
    return float(model.bias)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # overflow-safe split on the sign of z
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_prob(model: LinearModel, x: FeatureVector) -> float:
    if model.kind != "logistic":
        raise WrongModelKind(f"predict_prob requires a logistic model, got {model.kind}")
    return float(_sigmoid(np.array([predict_score(model, x)]))[0])


def _loss_grad(
    kind: str,
    w: np.ndarray,
    b: float,
    X: sparse.csr_matrix,
    y: np.ndarray,
    l2: float,
    class_weight: float,
) -> tuple[float, np.ndarray, float]:
    n = X.shape[0]
    c = np.where(y == 1, class_weight, 1.0)
    scores = X @ w + b

    if kind == "logistic":
        # per-example cross entropy: log(1 + e^s) - y*s, computed stably
        losses = np.logaddexp(0.0, scores) - y * scores
        p = _sigmoid(scores)
        residual = c * (p - y)
        loss = float(np.mean(c * losses) + 0.5 * l2 * np.dot(w, w))
    elif kind == "svm":
        ypm = 2.0 * y - 1.0
        margins = ypm * scores
        hinge = np.maximum(0.0, 1.0 - margins)
        # subgradient: 0 exactly at the hinge kink (margin == 1)
        active = margins < 1.0
        residual = np.where(active, -c * ypm, 0.0)
        loss = float(np.mean(c * hinge) + 0.5 * l2 * np.dot(w, w))
    else:
        raise WrongModelKind(f"unknown model kind: {kind}")

    grad_w = np.asarray(X.T @ residual).ravel() / n + l2 * w
    grad_b = float(np.sum(residual) / n)
    return loss, grad_w, grad_b


def loss_and_gradient(
    model: LinearModel, dataset: LabeledDataset, hyper: Hyper
) -> tuple[float, np.ndarray, float]:
    X = _to_csr(dataset.vectors)
    if X.shape[1] != model.weights.shape[0]:
        raise DimensionMismatch(
            f"dataset dimension {X.shape[1]} != model dimension {model.weights.shape[0]}"
        )
    y = np.asarray(dataset.labels, dtype=np.float64)
    return _loss_grad(
        model.kind, model.weights, model.bias, X, y, hyper.l2, hyper.class_weight
    )


def train(dataset: LabeledDataset, hyper: Hyper, kind: str) -> LinearModel:
    """Full-batch gradient descent from zero initialization."""
    if kind not in KINDS:
        raise WrongModelKind(f"unknown model kind: {kind}")
    labels = set(dataset.labels)
    if labels != {0, 1}:
        raise SingleClassDataset(f"training needs both classes, got labels {sorted(labels)}")

    X = _to_csr(dataset.vectors)
    y = np.asarray(dataset.labels, dtype=np.float64)
    w = np.zeros(X.shape[1], dtype=np.float64)
    b = 0.0
    for _ in range(hyper.epochs):
        _, grad_w, grad_b = _loss_grad(kind, w, b, X, y, hyper.l2, hyper.class_weight)
        w -= hyper.learning_rate * grad_w
        b -= hyper.learning_rate * grad_b
    return LinearModel(kind=kind, weights=w, bias=b, hyper=hyper)


def classify(model: LinearModel, x: FeatureVector) -> int:
    """1 (suspicious) strictly above the decision point; ties classify benign."""
    if model.kind == "logistic":
        return 1 if predict_prob(model, x) > model.hyper.threshold else 0
    return 1 if predict_score(model, x) > 0.0 else 0


def compute_metrics(predictions: Sequence[int], truth: Sequence[int]) -> Metrics:
    if len(predictions) != len(truth):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truth)} labels")
    tp = fp = tn = fn = 0
    for pred, actual in zip(predictions, truth):
        if pred == 1 and actual == 1:
            tp += 1
        elif pred == 1:
            fp += 1
        elif actual == 1:
            fn += 1
        else:
            tn += 1
    total = len(truth)
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return Metrics(accuracy, precision, recall, f1, (tp, fp, tn, fn))


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> list[list[int]]:
    """Seeded stratified fold assignment; per-class fold sizes differ by at most 1."""
    rng = random.Random(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for label in sorted(set(labels)):
        idx = [i for i, l in enumerate(labels) if l == label]
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[j % k].append(i)
    return [sorted(f) for f in folds]


def cross_validate(
    dataset: LabeledDataset, k: int = 5, kind: str = "logistic", hyper: Hyper | None = None
) -> CVReport:
    if k < 2:
        raise TooFewExamples(f"k must be >= 2, got {k}")
    hyper = hyper or Hyper()
    counts = {label: dataset.labels.count(label) for label in set(dataset.labels)}
    if len(counts) < 2:
        raise SingleClassDataset("cross-validation needs both classes")
    for label, count in counts.items():
        if count < k:
            raise TooFewExamples(f"class {label} has {count} examples, need >= {k}")

    folds = stratified_folds(dataset.labels, k, hyper.seed)
    fold_metrics: list[Metrics] = []
    for held_out in folds:
        held = set(held_out)
        train_idx = [i for i in range(len(dataset)) if i not in held]
        train_set = LabeledDataset(
            vectors=[dataset.vectors[i] for i in train_idx],
            labels=[dataset.labels[i] for i in train_idx],
            session_ids=[dataset.session_ids[i] for i in train_idx],
        )
        model = train(train_set, hyper, kind)
        preds = [classify(model, dataset.vectors[i]) for i in held_out]
        truth = [dataset.labels[i] for i in held_out]
        fold_metrics.append(compute_metrics(preds, truth))
    mean_accuracy = sum(m.accuracy for m in fold_metrics) / k
    return CVReport(k=k, fold_metrics=fold_metrics, mean_accuracy=mean_accuracy)


def model_to_obj(model: LinearModel, vocabulary_digest: str) -> dict:
    return {
        "kind": model.kind,
        "dimension": int(model.weights.shape[0]),
        "weights": [float(v) for v in model.weights],
        "bias": float(model.bias),
        "hyper": asdict(model.hyper),
        "vocabulary_digest": vocabulary_digest,
    }


def model_from_obj(obj: dict) -> tuple[LinearModel, str]:
    model = LinearModel(
        kind=obj["kind"],
        weights=np.asarray(obj["weights"], dtype=np.float64),
        bias=float(obj["bias"]),
        hyper=Hyper(**obj["hyper"]),
    )
    if model.weights.shape[0] != int(obj["dimension"]):
        raise DimensionMismatch("stored dimension does not match weight count")
    return model, obj["vocabulary_digest"]


def cv_report_to_obj(report: CVReport) -> dict:
    return {
        "k": report.k,
        "mean_accuracy": report.mean_accuracy,
        "fold_metrics": [
            {
                "accuracy": m.accuracy,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "confusion": list(m.confusion),
            }
            for m in report.fold_metrics
        ],
    }


def cv_report_from_obj(obj: dict) -> CVReport:
    return CVReport(
        k=int(obj["k"]),
        fold_metrics=[
            Metrics(
                accuracy=m["accuracy"],
                precision=m["precision"],
                recall=m["recall"],
                f1=m["f1"],
                confusion=tuple(m["confusion"]),
            )
            for m in obj["fold_metrics"]
        ],
        mean_accuracy=float(obj["mean_accuracy"]),
    )


def save_model(model: LinearModel, vocabulary_digest: str, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_obj(model, vocabulary_digest), f, sort_keys=True)
        f.write("\n")


def load_model(path) -> tuple[LinearModel, str]:
    with open(path, encoding="utf-8") as f:
        return model_from_obj(json.load(f))
