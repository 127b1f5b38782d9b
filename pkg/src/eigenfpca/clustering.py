"""Seeded k-means over eigenvalue vectors and cluster-to-class matching."""

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .rng import subject_rng
from .textio import fmt_float, open_text, write_csv


@dataclass(frozen=True)
class Clustering:
    labels: np.ndarray     # (n,) ints in [0, k)
    centroids: np.ndarray  # (k, L)
    inertia: float
    k: int
    restarts: int
    seed: int

    def save(self, path, z_points=None, summary_path=None) -> None:
        if z_points is None:
            header = ["index", "label"]
            rows = [[str(i), str(int(l))] for i, l in enumerate(self.labels)]
        else:
            z = np.atleast_2d(np.asarray(z_points, dtype=float))
            p = z.shape[1]
            header = [f"z_{k + 1}" for k in range(p)] + ["label"]
            rows = [[fmt_float(v) for v in z[i]] + [str(int(self.labels[i]))]
                    for i in range(z.shape[0])]
        write_csv(path, header, rows)
        if summary_path is not None:
            with open_text(summary_path, "w") as f:
                json.dump({"k": self.k, "inertia": self.inertia,
                           "restarts": self.restarts, "seed": self.seed}, f, indent=2)
                f.write("\n")


def _assign(X, centroids):
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(X.shape[0]), labels]


def _kmeanspp_init(X, k, rng):
    n = X.shape[0]
    centers = [X[int(rng.integers(n))]]
    for _ in range(k - 1):
        d2 = np.min(((X[:, None, :] - np.asarray(centers)[None, :, :]) ** 2).sum(axis=2),
                    axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(X[int(rng.integers(n))])
            continue
        centers.append(X[int(rng.choice(n, p=d2 / total))])
    return np.asarray(centers, dtype=float)


def _lloyd(X, k, rng, max_iter, tol):
    centroids = _kmeanspp_init(X, k, rng)
    labels, d2 = _assign(X, centroids)
    inertia = float(d2.sum())
    history = [inertia]
    for _ in range(max_iter):
        new_centroids = centroids.copy()
        for c in range(k):
            m = labels == c
            if np.any(m):
                new_centroids[c] = X[m].mean(axis=0)
            else:
                # re-seed an empty cluster from the farthest point
                far = int(np.argmax(d2))
                new_centroids[c] = X[far]
        labels, d2 = _assign(X, new_centroids)
        new_inertia = float(d2.sum())
        history.append(new_inertia)
        centroids = new_centroids
        if inertia - new_inertia <= tol * max(inertia, 1e-300):
            inertia = new_inertia
            break
        inertia = new_inertia
    return labels, centroids, inertia, history


def kmeans(rows, k: int, restarts: int = 20, max_iter: int = 300,
           tol: float = 1e-6, seed: int = 0) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` by inertia.

    Deterministic given ``seed``: restart r draws from its own counter-based
    stream, and ties in inertia resolve to the lowest restart index.
    """
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"kmeans: need 1 <= k <= n_rows, got k={k}, n={n}")
    best = None
    for r in range(restarts):
        rng = subject_rng(seed, r)
        labels, centroids, inertia, _ = _lloyd(X, k, rng, max_iter, tol)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia)
    labels, centroids, inertia = best
    return Clustering(labels, centroids, inertia, k, restarts, seed)


def match_clusters(pred, truth) -> dict:
    """Map predicted cluster ids to truth classes, maximizing total true positives.

    Solved as an assignment problem on the contingency table; predicted
    clusters beyond the number of truth classes fall back to their majority
    truth class.
    """
    pred = np.asarray(pred)
    tru = np.asarray(truth)
    if pred.shape != tru.shape:
        raise ValueError("match_clusters: label arrays differ in length")
    pids = np.unique(pred)
    tids = np.unique(tru)
    table = np.zeros((pids.size, tids.size))
    for a, pi in enumerate(pids):
        for b, ti in enumerate(tids):
            table[a, b] = np.sum((pred == pi) & (tru == ti))
    ri, ci = linear_sum_assignment(-table)
    mapping = {}
    for a, b in zip(ri, ci):
        mapping[int(pids[a])] = int(tids[b])
    for a, pi in enumerate(pids):
        if int(pi) not in mapping:
            mapping[int(pi)] = int(tids[np.argmax(table[a])])
    return mapping
