"""Vision readings from either exact geometry or the image pipeline."""
from __future__ import annotations

from ..config import SensorParams, VisionParams
from ..sensors import VisionReading, sense_vision
from .detect import detect_lanes
from .effects import EffectParams, perturb
from .render import mean_lookahead, render_scene


class VisionSource:
    """Produces a :class:`VisionReading` for a world state.

    In ``analytic`` mode clean readings come from geometry and the raster path
    is only used for image-effect faults; in ``pipeline`` mode every reading
    is rendered and detected.
    """

    def __init__(self, sensors: SensorParams = SensorParams(), vision: VisionParams = VisionParams()):
        self.sensors = sensors
        self.vision = vision
        self.frames = 0

    def frame(self, world, effect: EffectParams | None = None, seed: int | None = None):
        img = render_scene(world.lane_half_width, world.lat_offset, world.heading, self.vision)
        if effect is not None:
            img = perturb(img, effect, seed if seed is not None else 0, self.vision)
        return img

    def read(self, world, effect: EffectParams | None = None, seed: int | None = None,
             d_noise: float = 0.0) -> VisionReading:
        d_vis = (world.lead_pos - world.host_pos + d_noise) if world.lead_present else None
        if effect is None and self.sensors.mode == "analytic":
            reading = sense_vision(world, self.sensors)
            if d_noise and d_vis is not None:
                return VisionReading(True, reading.left_lane_x, reading.right_lane_x,
                                     reading.path_poly, d_vis)
            return reading
        self.frames += 1
        det = detect_lanes(self.frame(world, effect, seed), self.vision)
        if det is None:
            return VisionReading(False, d_rel_vision=d_vis)
        return VisionReading(True, det.left_x, det.right_x, det.path_poly, d_vis)


def check_lookahead(sensors: SensorParams, vision: VisionParams) -> None:
    """Analytic and raster readings agree only if both use the same look-ahead."""
    if abs(sensors.lookahead - mean_lookahead(vision)) > 1e-9:
        raise ValueError(
            f"sensors.lookahead ({sensors.lookahead}) must equal vision.view_depth / 2 "
            f"({mean_lookahead(vision)})")
