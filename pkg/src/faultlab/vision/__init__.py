"""Synthetic road frames, environmental effects and lane detection."""
from .dbscan import NOISE, dbscan, dbscan_mask
from .detect import LaneDetection, detect_lanes, edge_mask
from .effects import EFFECTS, EffectParams, perturb
from .pipeline import VisionSource
from .render import read_raw, render_scene, translate_image, write_raw

__all__ = [
    "NOISE", "dbscan", "dbscan_mask", "LaneDetection", "detect_lanes", "edge_mask",
    "EFFECTS", "EffectParams", "perturb", "VisionSource", "read_raw", "render_scene",
    "translate_image", "write_raw",
]
