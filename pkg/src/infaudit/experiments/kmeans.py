"""Lloyd's k-means, used to derive class labels for unlabelled tables."""

import numpy as np


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X**2).sum(axis=1)[:, None] + (C**2).sum(axis=1)[None, :] - 2.0 * X @ C.T
    return np.maximum(d, 0.0)


def kmeans_objective(X, labels, centers) -> float:
    X = np.asarray(X, dtype=float)
    return float(((X - centers[labels]) ** 2).sum())


def kmeans_labels(X, k: int, iters: int = 100, seed: int = 0, return_centers: bool = False):
    """Cluster labels from Lloyd iterations.

    Centres start at k distinct rows chosen with `seed`. A cluster that
    loses all its points is moved onto the point farthest from its current
    centre, so the objective never increases. With `iters=0` the labels of
    the initial assignment are returned.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    centers = X[rng.choice(n, size=k, replace=False)].copy()
    labels = np.argmin(_sq_dists(X, centers), axis=1)
    for _ in range(iters):
        new_centers = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centers[j] = X[members].mean(axis=0)
        d = _sq_dists(X, new_centers)
        new_labels = np.argmin(d, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            own = d[np.arange(n), new_labels]
            far = int(np.argmax(own))
            new_centers[j] = X[far]
            new_labels[far] = j
            d = _sq_dists(X, new_centers)
        if np.array_equal(new_labels, labels) and np.allclose(new_centers, centers):
            break
        centers, labels = new_centers, new_labels
    return (labels, centers) if return_centers else labels
