"""Lane-marker detection: horizontal Sobel, DBSCAN, midline split."""
from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from ..config import VisionParams
from .dbscan import dbscan_mask
from .render import row_lookahead


@dataclass(frozen=True)
class LaneDetection:
    left_x: float
    right_x: float
    path_poly: tuple[float, float, float, float]


def edge_mask(img: np.ndarray, threshold: float) -> np.ndarray:
    """|horizontal Sobel derivative| > threshold, mirrored borders."""
    g = cv2.Sobel(np.ascontiguousarray(img, dtype=np.uint8), cv2.CV_16S, 1, 0, ksize=3,
                  borderType=cv2.BORDER_REFLECT)
    return np.abs(g) > threshold


def _side(points, labels, sizes, centroids, keys, vp: VisionParams):
    """Pick the marker nearest the midline among clusters ``keys``.

    The two edges of one marker come out as separate clusters, so clusters
    within ``pair_px`` of the nearest one are merged into it.
    """
    if not keys:
        return None
    mid = vp.width / 2.0
    nearest = min(keys, key=lambda k: (abs(centroids[k] - mid), k))
    group = [k for k in keys if abs(centroids[k] - centroids[nearest]) <= vp.pair_px]
    sel = np.isin(labels, group)
    pts = points[sel]
    col = pts[:, 1].mean() + 0.5
    return (col - mid) / vp.px_per_m, pts


def detect_lanes(img: np.ndarray, vp: VisionParams = VisionParams()) -> LaneDetection | None:
    """Left/right marker positions in metres.

    None when a side has no marker or the two picks do not form a plausible
    lane.
    """
    mask = edge_mask(img, vp.sobel_threshold)
    points, labels = dbscan_mask(mask, vp.eps, vp.min_pts)
    if labels.size == 0 or labels.max() < 0:
        return None
    valid = labels >= 0
    n_clusters = int(labels.max()) + 1
    sizes = np.bincount(labels[valid], minlength=n_clusters)
    col_sum = np.bincount(labels[valid], weights=points[valid, 1] + 0.5, minlength=n_clusters)
    centroids = np.divide(col_sum, sizes, out=np.zeros(n_clusters), where=sizes > 0)
    big = [k for k in range(n_clusters) if sizes[k] >= vp.min_cluster_points]
    mid = vp.width / 2.0
    left = _side(points, labels, sizes, centroids, [k for k in big if centroids[k] < mid], vp)
    right = _side(points, labels, sizes, centroids, [k for k in big if centroids[k] >= mid], vp)
    if left is None or right is None:
        return None
    (lx, lpts), (rx, rpts) = left, right
    if not vp.min_lane_width <= rx - lx <= vp.max_lane_width:
        return None  # implausible lane, e.g. clutter picked up on both sides
    depth = row_lookahead(vp)
    (sl, il), (sr, ir) = _line_fit(lpts, depth, vp), _line_fit(rpts, depth, vp)
    poly = ((il + ir) / 2.0, (sl + sr) / 2.0, 0.0, 0.0)
    return LaneDetection(float(lx), float(rx), tuple(float(c) for c in poly))


def _line_fit(pts, depth, vp: VisionParams) -> tuple[float, float]:
    """(slope, intercept) of marker position in metres against look-ahead."""
    s = depth[pts[:, 0]]
    x = (pts[:, 1] + 0.5 - vp.width / 2.0) / vp.px_per_m
    if np.ptp(s) == 0:
        return 0.0, float(x.mean())
    slope, intercept = np.polyfit(s, x, 1)
    return float(slope), float(intercept)
