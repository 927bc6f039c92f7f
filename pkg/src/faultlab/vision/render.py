"""Synthetic top-down road frames and raw frame export."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..config import VisionParams


def row_lookahead(vp: VisionParams) -> np.ndarray:
    """Look-ahead distance (m) of every image row; bottom row is 0 m."""
    h = vp.height
    return (h - 1 - np.arange(h)) * (vp.view_depth / (h - 1))


def mean_lookahead(vp: VisionParams) -> float:
    return vp.view_depth / 2.0


def render_scene(lane_half_width: float, lat_offset: float, heading: float,
                 vp: VisionParams = VisionParams()) -> np.ndarray:
    """Dark road with two bright markers; heading shears columns with depth."""
    h, w = vp.height, vp.width
    img = np.full((h, w), vp.road_intensity, dtype=np.uint8)
    s = row_lookahead(vp)
    shift = -lat_offset + s * math.tan(heading)  # m, per row
    for side in (-1.0, 1.0):
        center = w / 2.0 + vp.px_per_m * (side * lane_half_width + shift)
        start = np.rint(center - vp.marker_width / 2.0).astype(np.int64)
        cc = start[:, None] + np.arange(vp.marker_width)[None, :]
        rr = np.broadcast_to(np.arange(h)[:, None], cc.shape)
        ok = (cc >= 0) & (cc < w)
        img[rr[ok], cc[ok]] = vp.marker_intensity
    return img


def translate_image(img: np.ndarray, lateral_delta: float, px_per_m: float = 100.0) -> np.ndarray:
    """Shift by ``round(px_per_m * lateral_delta)`` px, replicating edge columns.

    ``lateral_delta`` is a vehicle movement to the right, so the scene moves
    left: ``translate_image(render(lat=0), d)`` matches ``render(lat=d)``.
    """
    shift = int(round(px_per_m * lateral_delta))
    if shift == 0:
        return img.copy()
    w = img.shape[1]
    src = np.clip(np.arange(w) + shift, 0, w - 1)
    return img[:, src]


def write_raw(img: np.ndarray, path: str | Path) -> None:
    """8-bit raw frame with a ``W H`` header line."""
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def read_raw(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    w, h = (int(v) for v in data[:nl].split())
    body = np.frombuffer(data[nl + 1:], dtype=np.uint8)
    if body.size != w * h:
        raise ValueError(f"{path}: expected {w * h} bytes, found {body.size}")
    return body.reshape(h, w).copy()
