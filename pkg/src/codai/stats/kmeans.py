"""Lloyd's k-means with greedy k-means++ seeding, and elbow selection of k."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d)
    labels: np.ndarray  # (n,) cluster id per point
    inertia: float
    seed: int | None
    iterations_run: int
    converged: bool = True

    def assignments(self, keys) -> dict:
        return {key: int(label) for key, label in zip(keys, self.labels)}


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # explicit differences rather than the |x|^2 - 2xc + |c|^2 expansion: exact zeros stay zero
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def inertia_of(X, centroids, labels, sample_weight=None) -> float:
    X = np.asarray(X, dtype=float)
    w = np.ones(len(X)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    d = ((X - np.asarray(centroids)[labels]) ** 2).sum(axis=1)
    return float(np.dot(w, d))


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator, weights: np.ndarray,
                    n_local_trials: int | None = None) -> np.ndarray:
    """Greedy k-means++: each new center is the best of a few D^2-weighted draws."""
    n = len(X)
    if n_local_trials is None:
        n_local_trials = 2 + int(np.log(k))
    first = rng.choice(n, p=weights / weights.sum())
    centers = [X[first]]
    closest = _sq_dists(X, X[first][None, :])[:, 0]
    for _ in range(1, k):
        pot = weights * closest
        total = pot.sum()
        if total <= 0:
            # every point already coincides with a center
            candidates = rng.choice(n, size=n_local_trials, p=weights / weights.sum())
        else:
            candidates = rng.choice(n, size=n_local_trials, p=pot / total)
        cand_d = np.minimum(closest[None, :], _sq_dists(X, X[candidates]).T)
        best = int(np.argmin(cand_d @ weights))
        centers.append(X[candidates[best]])
        closest = cand_d[best]
    return np.array(centers)


def _lloyd(X, w, centroids, max_iter, tol):
    k = len(centroids)
    labels = np.argmin(_sq_dists(X, centroids), axis=1)
    for it in range(1, max_iter + 1):
        new = np.empty_like(centroids)
        for j in range(k):
            mask = labels == j
            if not mask.any():
                # empty cluster: reseed at the point farthest from its own centroid
                d = ((X - centroids[labels]) ** 2).sum(axis=1)
                far = int(np.argmax(d))
                new[j] = X[far]
                labels[far] = j
                continue
            new[j] = np.average(X[mask], axis=0, weights=w[mask])
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        new_labels = np.argmin(_sq_dists(X, centroids), axis=1)
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable or shift <= tol:
            # refresh centroids so they are exactly the means of the final partition
            for j in range(k):
                mask = labels == j
                if mask.any():
                    centroids[j] = np.average(X[mask], axis=0, weights=w[mask])
            return centroids, labels, it, True
    return centroids, labels, max_iter, False


def kmeans_fit(points, k: int, seed: int | None = 0, max_iter: int = 300, tol: float = 1e-10,
               n_init: int = 4, sample_weight=None, init=None) -> ClusterModel:
    """Fit k-means; the best of `n_init` seeded k-means++ starts is returned.

    `init` fixes the starting centroids (then `n_init` is ignored). Passing
    `sample_weight` is equivalent to repeating points that many times.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}] for {n} points, got {k}")
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    if w.shape != (n,) or np.any(w <= 0):
        raise ValueError("sample_weight must hold one positive weight per point")
    if init is not None:
        starts = [np.array(init, dtype=float)]
        if starts[0].shape != (k, X.shape[1]):
            raise ValueError("init must have shape (k, n_features)")
    else:
        rng = np.random.default_rng(seed)
        starts = [kmeans_plusplus(X, k, rng, w) for _ in range(max(1, n_init))]
    best = None
    for start in starts:
        centroids, labels, iters, converged = _lloyd(X, w, start.copy(), max_iter, tol)
        inertia = inertia_of(X, centroids, labels, w)
        if best is None or inertia < best.inertia:
            best = ClusterModel(k, centroids, labels, inertia, seed, iters, converged)
    return best


@dataclass
class ElbowResult:
    ks: list[int]
    inertias: list[float]
    suggested_k: int
    models: dict[int, ClusterModel]

    def table(self) -> list[tuple[int, float]]:
        return list(zip(self.ks, self.inertias))


def suggest_k(ks, inertias) -> int:
    """k with the largest discrete second difference of inertia.

    With fewer than three fitted values there is no interior point and the
    smallest k is returned.
    """
    if len(ks) < 3:
        return int(ks[0])
    I = np.asarray(inertias, dtype=float)
    second = I[:-2] - 2 * I[1:-1] + I[2:]
    return int(ks[1 + int(np.argmax(second))])


def elbow(points, k_range, seed: int | None = 0, max_iter: int = 300, tol: float = 1e-10,
          n_init: int = 4) -> ElbowResult:
    """Fit every k in `k_range` and suggest one.

    The smallest k is fitted from scratch. Each larger k starts from the
    previous solution plus one k-means++ draw; since adding a centroid cannot
    raise the assignment cost and Lloyd steps never raise it either, the
    inertia sequence is weakly decreasing. A fresh fit is kept instead when it
    does better.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    ks = sorted(set(int(k) for k in k_range))
    if not ks or ks[0] < 1 or ks[-1] > len(X):
        raise ValueError(f"k_range must lie within [1, {len(X)}]")
    rng = np.random.default_rng(seed)
    w = np.ones(len(X))
    models: dict[int, ClusterModel] = {}
    prev = None
    for k in ks:
        fresh = kmeans_fit(X, k, seed=None if seed is None else seed + k, max_iter=max_iter,
                           tol=tol, n_init=n_init)
        fresh.seed = seed
        model = fresh
        if prev is not None:
            centroids = prev.centroids
            while len(centroids) < k:
                d = _sq_dists(X, centroids).min(axis=1)
                p = d / d.sum() if d.sum() > 0 else w / w.sum()
                centroids = np.vstack([centroids, X[rng.choice(len(X), p=p)]])
            grown = kmeans_fit(X, k, seed=seed, max_iter=max_iter, tol=tol, init=centroids)
            if grown.inertia <= fresh.inertia:
                model = grown
        models[k] = model
        prev = model
    inertias = [models[k].inertia for k in ks]
    return ElbowResult(ks, inertias, suggest_k(ks, inertias), models)
