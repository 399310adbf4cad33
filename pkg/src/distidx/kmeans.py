"""Small deterministic k-means used for landmark selection and partitioning.

Plain Lloyd iterations with k-means++ seeding; the balanced variant caps
cluster sizes so group sizes differ by at most one, which the hierarchical
partitioner relies on to hit exact per-level partition counts.
"""
from __future__ import annotations

import numpy as np


def _kpp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[i:] = points[int(rng.integers(n))]
            break
        probs = d2 / total
        nxt = int(rng.choice(n, p=probs))
        centers[i] = points[nxt]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def kmeans(points: np.ndarray, k: int, seed: int, iters: int = 25) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd k-means; returns (centers (k,dim), labels (n,)).  Deterministic under seed."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k <= 0 or k > n:
        raise ValueError(f"k={k} out of range for {n} points")
    rng = np.random.default_rng(seed)
    centers = _kpp_init(points, k, rng)
    labels = np.zeros(n, dtype=np.int64)
    for it in range(iters):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(d2, axis=1)
        if it > 0 and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
            else:
                # respawn an empty cluster on the point farthest from its center
                worst = int(np.argmax(d2[np.arange(n), labels]))
                centers[c] = points[worst]
    return centers, labels


def balanced_kmeans(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Labels with cluster sizes ceil(n/k) or floor(n/k); every cluster nonempty.

    Runs Lloyd first, then reassigns points greedily (best available center,
    in order of assignment confidence) under per-cluster capacity limits.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k >= n:
        return np.arange(n, dtype=np.int64)
    centers, _ = kmeans(points, k, seed)
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    cap_hi = -(-n // k)            # ceil
    n_hi = n - (n // k) * k        # clusters allowed to reach the ceiling
    caps = np.full(k, n // k, dtype=np.int64)
    caps[:n_hi] = cap_hi
    order = np.argsort(d2.min(axis=1), kind="stable")  # confident points claim seats first
    labels = np.full(n, -1, dtype=np.int64)
    counts = np.zeros(k, dtype=np.int64)
    pref = np.argsort(d2, axis=1, kind="stable")
    for idx in order:
        for c in pref[idx]:
            if counts[c] < caps[c]:
                labels[idx] = c
                counts[c] += 1
                break
    return labels
