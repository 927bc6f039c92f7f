"""Density-based clustering (DBSCAN).

Two entry points with the same semantics: :func:`dbscan` for arbitrary point
sets, and :func:`dbscan_mask` for the pixels of a binary mask, which walks
the pixel lattice directly (compiled with numba) to stay fast on dense edge
maps.  Neighbourhoods are closed Euclidean balls (distance <= eps) and
include the point itself.  Clusters are numbered in order of their first
core point; border points join the cluster that reaches them first
(``dbscan``) or the cluster of their nearest core point (``dbscan_mask``).
Noise is labelled -1.
"""
from __future__ import annotations

import math
from collections import deque
from functools import lru_cache

import numba
import numpy as np
from scipy.spatial import cKDTree

NOISE = -1


def dbscan(points, eps: float, min_pts: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return labels
    tree = cKDTree(pts)
    neigh = tree.query_ball_point(pts, r=eps)
    core = np.fromiter((len(nb) >= min_pts for nb in neigh), dtype=bool, count=n)
    visited = np.zeros(n, dtype=bool)
    cid = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        visited[i] = True
        labels[i] = cid
        queue = deque([i])
        while queue:
            j = queue.popleft()
            for k in sorted(neigh[j]):
                if labels[k] == NOISE:
                    labels[k] = cid
                if core[k] and not visited[k]:
                    visited[k] = True
                    queue.append(k)
        cid += 1
    return labels


@lru_cache(maxsize=16)
def _disc_offsets(eps: float) -> np.ndarray:
    """Lattice offsets within eps, nearest first (ties by dy, then dx)."""
    r = int(math.floor(eps))
    offs = [(dy * dy + dx * dx, dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)
            if dy * dy + dx * dx <= eps * eps + 1e-9]
    offs.sort()
    return np.array([(dy, dx) for _, dy, dx in offs], dtype=np.int64).reshape(-1, 2)


@lru_cache(maxsize=16)
def _half_widths(eps: float) -> np.ndarray:
    """Half-width of the eps disc on each row offset -r..r."""
    r = int(math.floor(eps))
    return np.array([int(math.floor(math.sqrt(max(eps * eps - d * d, 0.0)) + 1e-9))
                     for d in range(-r, r + 1)], dtype=np.int64)


@numba.njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@numba.njit(cache=True)
def _lattice_dbscan(index, rows, cols, offs, half, min_pts):
    h, w = index.shape
    n = rows.size
    m = offs.shape[0]
    r = half.size // 2
    # csum[y, x + 1] = number of points in row y left of column x + 1
    csum = np.zeros((h, w + 1), dtype=np.int32)
    for y in range(h):
        acc = 0
        for x in range(w):
            if index[y, x] >= 0:
                acc += 1
            csum[y, x + 1] = acc
    core = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        c = 0
        for d in range(-r, r + 1):
            y = rows[i] + d
            if 0 <= y < h:
                x0 = max(cols[i] - half[d + r], 0)
                x1 = min(cols[i] + half[d + r] + 1, w)
                c += csum[y, x1] - csum[y, x0]
        core[i] = c >= min_pts

    parent = np.arange(n)
    for i in range(n):
        if not core[i]:
            continue
        a = _find(parent, i)
        for k in range(m):
            dy = offs[k, 0]
            dx = offs[k, 1]
            if dy < 0 or (dy == 0 and dx <= 0):
                continue  # each pair once
            y = rows[i] + dy
            x = cols[i] + dx
            if 0 <= y < h and 0 <= x < w:
                j = index[y, x]
                if j >= 0 and core[j]:
                    b = _find(parent, j)
                    if a != b:
                        if a < b:
                            parent[b] = a
                        else:
                            parent[a] = b
                            a = b

    labels = np.full(n, -1, dtype=np.int64)
    root_label = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for i in range(n):  # row-major, so clusters number by first core point
        if core[i]:
            r = _find(parent, i)
            if root_label[r] < 0:
                root_label[r] = nxt
                nxt += 1
            labels[i] = root_label[r]
    for i in range(n):
        if core[i]:
            continue
        for k in range(m):
            y = rows[i] + offs[k, 0]
            x = cols[i] + offs[k, 1]
            if 0 <= y < h and 0 <= x < w:
                j = index[y, x]
                if j >= 0 and core[j]:
                    labels[i] = labels[j]
                    break
    return labels


@numba.njit(cache=True)
def _lattice_points(mask):
    h, w = mask.shape
    index = np.full((h, w), -1, dtype=np.int32)
    n = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                index[y, x] = n
                n += 1
    rows = np.empty(n, dtype=np.int64)
    cols = np.empty(n, dtype=np.int64)
    for y in range(h):
        for x in range(w):
            i = index[y, x]
            if i >= 0:
                rows[i] = y
                cols[i] = x
    return index, rows, cols


def dbscan_mask(mask: np.ndarray, eps: float, min_pts: int) -> tuple[np.ndarray, np.ndarray]:
    """Cluster the True pixels of ``mask``.

    Returns ``(points, labels)`` with points as (row, col) pairs in row-major
    order.
    """
    mask = np.ascontiguousarray(mask, dtype=bool)
    index, rows, cols = _lattice_points(mask)
    points = np.stack([rows, cols], axis=1)
    if len(points) == 0:
        return points, np.full(0, NOISE, dtype=np.int64)
    labels = _lattice_dbscan(index, rows, cols, _disc_offsets(float(eps)),
                             _half_widths(float(eps)), int(min_pts))
    return points, labels
