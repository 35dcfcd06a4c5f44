"""Evaluation metrics: classification reports, clustering quality, imputation error.

Clustering quality follows the usual protocol for learned representations:
run k-means, then score the partition against ground-truth labels with
accuracy under the best one-to-one cluster/class matching (solved exactly
as a rectangular assignment problem) and normalized mutual information
(geometric-mean normalization, natural log).

Imputation error is a per-view normalized RMSE: root mean squared error
over the evaluated slots divided by the spread (max - min) of the true
values on those slots, averaged across views that have anything to score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigurationError, InputError


@dataclass
class ClassificationReport:
    accuracy: float
    per_class: np.ndarray
    confusion: np.ndarray  # confusion[i, j] = count of true class i predicted j
    n: int

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "per_class": [float(a) for a in self.per_class],
            "confusion": self.confusion.tolist(),
            "n": self.n,
        }


def classification_report(predictions, labels):
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise InputError("predictions and labels must be equal-length vectors")
    c = int(max(labels.max(), predictions.max())) + 1
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    totals = confusion.sum(axis=1)
    per_class = np.divide(
        np.diag(confusion), totals, out=np.zeros(c, dtype=np.float64), where=totals > 0
    )
    return ClassificationReport(
        accuracy=float((predictions == labels).mean()),
        per_class=per_class,
        confusion=confusion,
        n=labels.shape[0],
    )


@dataclass
class ClusteringReport:
    assignments: np.ndarray
    inertia: float
    acc: float | None = None
    nmi: float | None = None

    def to_dict(self):
        return {
            "assignments": self.assignments.tolist(),
            "inertia": self.inertia,
            "acc": self.acc,
            "nmi": self.nmi,
        }


def _plus_plus_seeds(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i] = points[rng.integers(n)]
            continue
        centers[i] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def _lloyd(points, centers, max_iters=300):
    k = centers.shape[0]
    assign = None
    for _ in range(max_iters):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
            else:
                # re-seed a starved centroid from the point farthest from its own
                far = int(d2[np.arange(len(assign)), assign].argmax())
                centers[c] = points[far]
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    inertia = float(d2[np.arange(points.shape[0]), assign].sum())
    return assign, inertia


def kmeans(points, k, seed=0, restarts=10):
    """Best-of-restarts Lloyd iterations with k-means++ seeding."""
    points = np.asarray(points, dtype=np.float64)
    if k <= 0:
        raise ConfigurationError(f"k must be positive, got {k}")
    if points.ndim != 2 or k > points.shape[0]:
        raise InputError(f"need a 2-D matrix with at least k={k} rows")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(restarts, 1)):
        centers = _plus_plus_seeds(points, k, rng)
        assign, inertia = _lloyd(points, centers)
        if best is None or inertia < best[1]:
            best = (assign, inertia)
    return ClusteringReport(assignments=best[0], inertia=best[1])


def _contingency(a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("partitions must be equal-length vectors")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def clustering_acc(assignments, labels):
    """Accuracy under the best one-to-one cluster-to-class matching."""
    table = _contingency(assignments, labels)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / table.sum()


def nmi(assignments, labels):
    """Mutual information over the geometric mean of the two entropies.

    Conventions: identical-up-to-relabeling partitions score 1 (including
    the degenerate case where both are single-cluster); if exactly one
    side is a single cluster the score is 0.
    """
    table = _contingency(assignments, labels).astype(np.float64)
    n = table.sum()
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    ha = float(-(pa * np.log(pa)).sum())
    hb = float(-(pb * np.log(pb)).sum())
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    # a permutation-matrix contingency is the same partition relabeled
    if (table.shape[0] == table.shape[1]
            and ((table > 0).sum(axis=0) == 1).all()
            and ((table > 0).sum(axis=1) == 1).all()):
        return 1.0
    p = table / n
    nz = p > 0
    info = float((p[nz] * np.log(p[nz] / np.outer(pa, pb)[nz])).sum())
    return float(np.clip(info / np.sqrt(ha * hb), 0.0, 1.0))


def evaluate_clustering(points, labels, k=None, seed=0, restarts=10):
    """k-means plus ACC and NMI against the given labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if k is None:
        k = int(labels.max()) + 1
    report = kmeans(points, k, seed=seed, restarts=restarts)
    report.acc = clustering_acc(report.assignments, labels)
    report.nmi = nmi(report.assignments, labels)
    return report


@dataclass
class NrmseReport:
    """Per-view normalized RMSE over the evaluated slots.

    per_view holds one entry per view, None where the view had no slot to
    score; overall is the mean over the scored views (None when no view
    was scored). degenerate_views flags views whose true values had zero
    spread, where the range floor makes the number scale-dependent.
    """

    per_view: list
    overall: float | None
    degenerate_views: list = field(default_factory=list)

    def to_dict(self):
        return {
            "per_view": self.per_view,
            "overall": self.overall,
            "degenerate_views": self.degenerate_views,
        }


def nrmse(filled_views, truth_views, eval_mask):
    """Imputation error on the slots flagged by eval_mask (1 = score this slot).

    eval_mask is N x V over (sample, view) slots; a flagged slot scores the
    whole feature row of that view. RMSE per view is taken over all scored
    entries and divided by max - min of the truth on those entries.
    """
    eval_mask = np.asarray(eval_mask)
    if len(filled_views) != len(truth_views) or eval_mask.shape[1] != len(filled_views):
        raise InputError("views and eval_mask disagree on view count")
    per_view = []
    degenerate = []
    scored = []
    for v, (filled, truth) in enumerate(zip(filled_views, truth_views)):
        if filled.shape != truth.shape:
            raise InputError(f"view {v}: filled {filled.shape} vs truth {truth.shape}")
        rows = eval_mask[:, v].astype(bool)
        if not rows.any():
            per_view.append(None)
            continue
        diff = filled[rows] - truth[rows]
        rmse = float(np.sqrt((diff ** 2).mean()))
        spread = float(truth[rows].max() - truth[rows].min())
        if spread < 1e-12:
            spread = 1e-12
            degenerate.append(v)
        value = rmse / spread
        per_view.append(value)
        scored.append(value)
    overall = float(np.mean(scored)) if scored else None
    return NrmseReport(per_view=per_view, overall=overall, degenerate_views=degenerate)
