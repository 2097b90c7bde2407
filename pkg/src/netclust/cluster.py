"""K-means clustering: Lloyd iterations with first-k, random, or kmeans++
seeding, plus k-selection diagnostics (inertia scan, silhouette).

The fit alternates nearest-centroid assignment with centroid mean updates
until assignments stop changing, the largest centroid shift falls below
``tol``, or ``max_iter`` is reached. Ties in assignment always break to
the lowest centroid index, and empty clusters are reseeded with the point
farthest from its current centroid, so a fit is fully deterministic for a
fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .preprocess import FeatureMatrix

INIT_METHODS = ("first-k", "random", "kmeans++")


@dataclass(frozen=True)
class ClusterConfig:
    k: int
    init: str = "kmeans++"
    max_iter: int = 300
    tol: float = 1e-6
    n_restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init must be one of {INIT_METHODS}")


@dataclass
class ClusterModel:
    centroids: np.ndarray  # k x n_features
    inertia: float
    n_iterations: int
    cluster_sizes: np.ndarray
    converged: bool
    inertia_history: list[float] = field(default_factory=list)
    n_reseeds: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass
class Assignment:
    labels: np.ndarray  # int labels in [0, k)


def _as_array(points) -> np.ndarray:
    if isinstance(points, FeatureMatrix):
        return points.require_complete("clustering")
    arr = np.asarray(points, dtype=np.float64)
    if np.isnan(arr).any():
        raise DataError("clustering requires a matrix with no missing cells")
    return arr


def euclidean_distance(a, b) -> float:
    """sqrt of the summed squared coordinate differences."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"vector length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """n x k matrix of squared Euclidean distances."""
    # ||x||^2 + ||c||^2 - 2 x.c, clipped to kill tiny negatives from rounding
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        + np.sum(centroids**2, axis=1)[None, :]
        - 2.0 * points @ centroids.T
    )
    return np.maximum(d2, 0.0)


def assign(points, centroids) -> Assignment:
    """Label each row with its nearest centroid (ties -> lowest index)."""
    X = _as_array(points)
    C = np.asarray(centroids, dtype=np.float64)
    if C.ndim != 2 or C.shape[1] != X.shape[1]:
        raise DataError(
            f"centroid width {C.shape} does not match feature count {X.shape[1]}"
        )
    d2 = _sq_distances(X, C)
    return Assignment(labels=np.argmin(d2, axis=1))


def update_centroids(points, asg: Assignment, k: int):
    """Mean of each cluster's members; an empty cluster is reseeded with
    the point currently farthest from its own centroid.

    Returns (centroids, cluster_sizes, n_reseeds).
    """
    X = _as_array(points)
    labels = np.asarray(asg.labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= k:
        raise DataError("assignment labels out of range for k")
    n, d = X.shape
    sizes = np.bincount(labels, minlength=k)
    centroids = np.zeros((k, d), dtype=np.float64)
    np.add.at(centroids, labels, X)
    nonempty = sizes > 0
    centroids[nonempty] /= sizes[nonempty, None]

    n_reseeds = 0
    empties = np.flatnonzero(~nonempty)
    if len(empties):
        # distance of each point to the centroid of its own (nonempty) cluster
        own = np.sqrt(np.sum((X - centroids[labels]) ** 2, axis=1))
        taken = np.zeros(n, dtype=bool)
        for e in empties:
            cand = np.where(taken, -np.inf, own)
            far = int(np.argmax(cand))
            centroids[e] = X[far]
            taken[far] = True
            n_reseeds += 1
    return centroids, sizes, n_reseeds


def _init_centroids(X: np.ndarray, cfg: ClusterConfig, rng: np.random.Generator):
    n = X.shape[0]
    if cfg.init == "first-k":
        return X[: cfg.k].copy()
    if cfg.init == "random":
        idx = rng.choice(n, size=cfg.k, replace=False)
        return X[idx].copy()
    # kmeans++: distance-squared weighted seeding
    centroids = np.empty((cfg.k, X.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = X[first]
    closest = np.sum((X - centroids[0]) ** 2, axis=1)
    for i in range(1, cfg.k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[i] = X[idx]
        closest = np.minimum(closest, np.sum((X - centroids[i]) ** 2, axis=1))
    return centroids


def _lloyd(X: np.ndarray, cfg: ClusterConfig, centroids: np.ndarray) -> ClusterModel:
    labels = None
    history = []
    converged = False
    n_iter = 0
    total_reseeds = 0
    sizes = np.zeros(cfg.k, dtype=int)
    for n_iter in range(1, cfg.max_iter + 1):
        d2 = _sq_distances(X, centroids)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            labels = new_labels
            sizes = np.bincount(labels, minlength=cfg.k)
            converged = True
            break
        labels = new_labels
        new_centroids, sizes, reseeds = update_centroids(X, Assignment(labels), cfg.k)
        total_reseeds += reseeds
        shift = float(np.max(np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1))))
        centroids = new_centroids
        if shift < cfg.tol and reseeds == 0:
            converged = True
            break
    # final assignment consistent with the returned centroids
    d2 = _sq_distances(X, centroids)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    sizes = np.bincount(labels, minlength=cfg.k)
    return ClusterModel(
        centroids=centroids,
        inertia=inertia,
        n_iterations=n_iter,
        cluster_sizes=sizes,
        converged=converged,
        inertia_history=history,
        n_reseeds=total_reseeds,
    )


def fit(points, cfg: ClusterConfig, initial_centroids=None) -> ClusterModel:
    """Run Lloyd's algorithm, keeping the best of ``n_restarts`` runs by
    final inertia. ``initial_centroids`` overrides seeding when given."""
    X = _as_array(points)
    if X.shape[0] < cfg.k:
        raise DataError(f"need at least k={cfg.k} rows, got {X.shape[0]}")
    best = None
    for r in range(cfg.n_restarts):
        if initial_centroids is not None:
            centroids = np.asarray(initial_centroids, dtype=np.float64).copy()
            if centroids.shape != (cfg.k, X.shape[1]):
                raise DataError("initial_centroids shape must be (k, n_features)")
        else:
            rng = np.random.default_rng([cfg.seed, r])
            centroids = _init_centroids(X, cfg, rng)
        model = _lloyd(X, cfg, centroids)
        if best is None or model.inertia < best.inertia:
            best = model
    return best


def predict(model: ClusterModel, points) -> Assignment:
    """Nearest-centroid labels for new rows under a fitted model."""
    return assign(points, model.centroids)


def silhouette(points, asg: Assignment) -> float:
    """Mean silhouette coefficient; degenerate denominators count as 0."""
    X = _as_array(points)
    labels = np.asarray(asg.labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise DataError("silhouette requires at least 2 clusters")
    n = X.shape[0]
    d = np.sqrt(_sq_distances(X, X))
    scores = np.zeros(n)
    members = {c: np.flatnonzero(labels == c) for c in uniq}
    for i in range(n):
        own = members[labels[i]]
        if len(own) <= 1:
            scores[i] = 0.0
            continue
        a = d[i, own].sum() / (len(own) - 1)
        b = min(d[i, members[c]].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def inertia_scan(points, k_range, cfg: ClusterConfig) -> list[tuple[int, float]]:
    """Fit each k in k_range (with cfg's other settings) and report the
    final inertia — the elbow-method input."""
    ks = list(k_range)
    if not ks:
        raise DataError("k_range must be non-empty")
    out = []
    for k in ks:
        model = fit(points, ClusterConfig(
            k=k, init=cfg.init, max_iter=cfg.max_iter, tol=cfg.tol,
            n_restarts=cfg.n_restarts, seed=cfg.seed,
        ))
        out.append((k, model.inertia))
    return out
