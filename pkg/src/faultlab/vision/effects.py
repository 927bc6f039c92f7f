"""Environmental perturbations of grayscale frames.

Parameter ranges follow the environmental-effects table (rain, fog, snow,
occlusion, contrast, brightness, blur).  Ranges are sampled per call from the
supplied seed; a ``(lo, hi)`` tuple with ``lo == hi`` pins a value.
Rain, fog and snow scale linearly with ``thickness`` in [0, 10]; thickness 0
is the identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache

import cv2
import numpy as np

from ..config import ConfigError, VisionParams

EFFECTS = ("Rain", "Fog", "Snow", "Occlusion", "Contrast", "Brightness", "Blur")
BLUR_KERNELS = {"average": (3, 4, 5, 6), "gaussian": (3, 5, 7), "median": (3, 5)}
# ranges drawn anew for every streak or blob rather than once per condition
_PER_OBJECT = frozenset({"streak_length", "blob_radius"})


@dataclass(frozen=True)
class EffectParams:
    effect: str
    thickness: float = 10.0
    streak_alpha: tuple = (0.1, 0.2)
    rain_bg_alpha: tuple = (0.65, 0.75)
    rain_bg_sigma: tuple = (0.5, 1.5)
    streak_blur_len: int = 2
    streak_blur_angle: float = 45.0
    streak_length: tuple = (8, 20)
    fog_sigma: tuple = (5.0, 7.0)
    fog_alpha: tuple = (0.4, 0.9)
    snow_sigma: tuple = (0.5, 1.5)
    snow_blur_len: int = 5
    snow_blur_angle: float = 75.0
    blob_count: int = 5
    blob_radius: tuple = (5, 50)
    blob_sigma: float = 7.0
    gain: tuple = (1.2, 3.0)
    bias: tuple = (10.0, 100.0)
    blur_kind: str | None = None
    kernel: int | None = None

    def __post_init__(self):
        if self.effect not in EFFECTS:
            raise ConfigError(f"unknown image effect {self.effect!r}")
        if not 0.0 <= self.thickness <= 10.0:
            raise ConfigError("thickness must lie in [0, 10]")
        if self.blob_count < 0:
            raise ConfigError("blob_count must be non-negative")
        for name in ("streak_alpha", "rain_bg_alpha", "rain_bg_sigma", "fog_sigma", "fog_alpha",
                     "snow_sigma", "blob_radius", "gain", "bias", "streak_length"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name}: empty range ({lo}, {hi})")
        if self.blur_kind is not None:
            if self.blur_kind not in BLUR_KERNELS:
                raise ConfigError(f"unknown blur kind {self.blur_kind!r}")
            if self.kernel is not None and self.kernel not in BLUR_KERNELS[self.blur_kind]:
                raise ConfigError(f"{self.blur_kind} blur kernel must be one of {BLUR_KERNELS[self.blur_kind]}")

    def pinned(self, rng: np.random.Generator) -> "EffectParams":
        """Draw every range once, e.g. one weather condition per experiment.

        Only the placement of streaks, flakes and blobs is then left to the
        per-frame seed.
        """
        kw = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple) and f.name not in _PER_OBJECT:
                x = _u(rng, v)
                kw[f.name] = (x, x)
        kind = self.blur_kind or sorted(BLUR_KERNELS)[int(rng.integers(0, len(BLUR_KERNELS)))]
        choices = BLUR_KERNELS[kind]
        kernel = self.kernel or choices[int(rng.integers(0, len(choices)))]
        return replace(self, blur_kind=kind, kernel=kernel, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "EffectParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown effect parameters {sorted(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _u(rng, rng_pair) -> float:
    lo, hi = rng_pair
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def motion_kernel(length: int, angle_deg: float) -> np.ndarray:
    """Normalised line kernel of ``length`` px at ``angle_deg`` from horizontal."""
    length = max(1, int(length))
    size = length if length % 2 else length + 1
    k = np.zeros((size, size), dtype=np.float32)
    c = (size - 1) / 2.0
    th = math.radians(angle_deg)
    for t in np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, 4 * length):
        x = int(round(c + t * math.cos(th)))
        y = int(round(c - t * math.sin(th)))
        k[y, x] = 1.0
    return k / k.sum()


def _gauss(img: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur truncated at 4 sigma, mirrored borders."""
    if sigma <= 0:
        return img
    return cv2.GaussianBlur(img, (0, 0), sigma, borderType=cv2.BORDER_REFLECT)


def _convolve(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # filter2D correlates; flipping the kernel makes it a convolution
    return cv2.filter2D(img, -1, cv2.flip(kernel, -1), borderType=cv2.BORDER_CONSTANT)


def _contrast(img: np.ndarray, alpha: float) -> np.ndarray:
    mu = img.mean()
    return alpha * (img - mu) + mu


def _finish(x: np.ndarray) -> np.ndarray:
    x = np.rint(x)
    np.clip(x, 0, 255, out=x)
    return x.astype(np.uint8)


def _fog_layer(img, rng, p: EffectParams, vp: VisionParams):
    scale = p.thickness / 10.0
    alpha = 1.0 - (1.0 - _u(rng, p.fog_alpha)) * scale
    sigma = _u(rng, p.fog_sigma)
    amp = vp.fog_noise_per_thickness * p.thickness
    noise = rng.uniform(0.0, amp, size=img.shape).astype(np.float32)
    noise = _gauss(noise, sigma)
    return _contrast(img, alpha) + noise


def _rain(img, rng, p: EffectParams, vp: VisionParams):
    scale = p.thickness / 10.0
    h, w = img.shape
    bg = _contrast(img, 1.0 - (1.0 - _u(rng, p.rain_bg_alpha)) * scale)
    bg = _gauss(bg, _u(rng, p.rain_bg_sigma) * scale)
    n = int(round(1000 * p.thickness))
    lo, hi = p.streak_length
    lengths = rng.integers(int(lo), int(hi) + 1, size=n)
    x0 = rng.uniform(0, w, size=n)
    y0 = rng.uniform(0, h, size=n)
    th = math.radians(vp.rain_angle)
    steps = np.arange(int(hi) + 1)
    xs = np.rint(x0[:, None] + steps[None, :] * math.cos(th)).astype(np.int64)
    ys = np.rint(y0[:, None] - steps[None, :] * math.sin(th)).astype(np.int64)
    keep = (steps[None, :] < lengths[:, None]) & (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    layer = np.zeros((h, w), dtype=np.float32)
    layer[ys[keep], xs[keep]] = 255.0
    layer = _convolve(layer, motion_kernel(p.streak_blur_len, p.streak_blur_angle))
    return bg + _u(rng, p.streak_alpha) * layer


def _snow(img, rng, p: EffectParams, vp: VisionParams):
    hazy = _fog_layer(img, rng, p, vp)
    h, w = img.shape
    n = int(round(vp.snow_per_thickness * p.thickness))
    layer = np.zeros((h, w), dtype=np.float32)
    ys = rng.integers(0, h - 1, size=n)
    xs = rng.integers(0, w - 1, size=n)
    for dy in (0, 1):
        for dx in (0, 1):
            layer[ys + dy, xs + dx] = 255.0
    layer = _gauss(layer, _u(rng, p.snow_sigma))
    layer = _convolve(layer, motion_kernel(p.snow_blur_len, p.snow_blur_angle))
    return hazy + layer


@lru_cache(maxsize=8)
def _occlusion_cover(h: int, w: int, seed: int, blob_count: int, blob_radius: tuple,
                     blob_sigma: float) -> np.ndarray:
    # a pure function of its arguments; cached because occluding blobs stay put
    rng = np.random.Generator(np.random.PCG64(seed))
    cover = np.zeros((h, w), dtype=np.float32)
    for _ in range(blob_count):
        r = _u(rng, blob_radius)
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        y0, y1 = max(0, int(cy - r)), min(h, int(cy + r) + 1)
        x0, x1 = max(0, int(cx - r)), min(w, int(cx + r) + 1)
        if y0 >= y1 or x0 >= x1:
            continue
        yy, xx = np.ogrid[y0:y1, x0:x1]
        cover[y0:y1, x0:x1][(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = 1.0
    keep = 1.0 - np.clip(_gauss(cover, blob_sigma), 0.0, 1.0)
    keep.flags.writeable = False
    return keep


def _occlusion(img, seed: int, p: EffectParams):
    h, w = img.shape
    return img * _occlusion_cover(h, w, seed, p.blob_count, p.blob_radius, p.blob_sigma)


def _blur(img, rng, p: EffectParams):
    kind = p.blur_kind or sorted(BLUR_KERNELS)[int(rng.integers(0, len(BLUR_KERNELS)))]
    choices = BLUR_KERNELS[kind]
    k = p.kernel or choices[int(rng.integers(0, len(choices)))]
    if kind == "average":
        return cv2.blur(img, (k, k), borderType=cv2.BORDER_REPLICATE)
    if kind == "median":
        return cv2.medianBlur(img, k)
    # sigma follows from the kernel size (OpenCV convention)
    return cv2.GaussianBlur(img, (k, k), 0, borderType=cv2.BORDER_REPLICATE)


def perturb(img: np.ndarray, params: EffectParams, seed: int,
            vp: VisionParams = VisionParams()) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    eff = params.effect
    if eff in ("Rain", "Fog", "Snow") and params.thickness == 0:
        return img.copy()
    x = img.astype(np.float32)
    if eff == "Rain":
        out = _rain(x, rng, params, vp)
    elif eff == "Fog":
        out = _fog_layer(x, rng, params, vp)
    elif eff == "Snow":
        out = _snow(x, rng, params, vp)
    elif eff == "Occlusion":
        out = _occlusion(x, seed, params)
    elif eff == "Contrast":
        out = x * _u(rng, params.gain)
    elif eff == "Brightness":
        out = x + _u(rng, params.bias)
    else:
        out = _blur(x, rng, params)
    return _finish(out)
