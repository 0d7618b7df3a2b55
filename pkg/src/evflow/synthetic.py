"""Synthetic event scenes with exact ground-truth flow.

A rigid shape translates at constant velocity (pixels per window).  Each window
is sampled at ``events_per_pixel`` sub-steps; at each sub-step every boundary
pixel of the shape, at its instantaneous (rounded) position, fires one event.
"""
from dataclasses import dataclass

import numpy as np

from .datatypes import EVENT_DTYPE, FlowField, SensorGeometry
from .errors import GenerationError, ParameterError

SHAPES = ("square", "checkerboard", "bar")


@dataclass(frozen=True)
class SyntheticSceneSpec:
    geometry: SensorGeometry
    shape: str = "square"
    size: int = 20
    velocity: tuple = (1.0, 0.0)
    windows: int = 10
    events_per_pixel: int = 2
    noise: int = 0
    seed: int = 0
    position: tuple = None
    window_us: int = 10_000

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ParameterError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        if self.size < 2:
            raise ParameterError("shape size must be at least 2 px")
        if self.windows < 1 or self.events_per_pixel < 1 or self.window_us < 1:
            raise ParameterError("windows, events_per_pixel and window_us must be positive")
        if self.noise < 0:
            raise ParameterError("noise must be non-negative")
        limit = min(self.geometry.width, self.geometry.height) / 4
        if np.hypot(*self.velocity) > limit:
            raise ParameterError(f"|velocity| must not exceed {limit} px/window")

    def origin(self):
        if self.position is not None:
            return tuple(float(c) for c in self.position)
        g = self.geometry
        h, w = self.outline().shape
        return ((g.width - w) / 2.0, (g.height - h) / 2.0)

    def outline(self):
        return shape_outline(self.shape, self.size)


def _perimeter(h, w):
    m = np.zeros((h, w), bool)
    m[0, :] = m[-1, :] = True
    m[:, 0] = m[:, -1] = True
    return m


def shape_outline(shape, size):
    """Boolean mask of the shape's edge pixels in its own frame."""
    if shape == "square":
        return _perimeter(size, size)
    if shape == "bar":
        return _perimeter(size, max(2, size // 4))
    cell = max(2, size // 4)
    yy, xx = np.mgrid[:size, :size]
    parity = ((yy // cell) + (xx // cell)) % 2
    m = _perimeter(size, size)
    m[:, :-1] |= parity[:, :-1] != parity[:, 1:]
    m[:-1, :] |= parity[:-1, :] != parity[1:, :]
    return m


def _round(a):
    return np.floor(np.asarray(a, dtype=np.float64) + 0.5).astype(np.int64)


def generate_synthetic_scene(spec):
    """Return ``(events, ground_truth)`` with one ground-truth field per window."""
    g = spec.geometry
    outline = spec.outline()
    oy, ox = np.nonzero(outline)
    sh, sw = outline.shape
    x0, y0 = spec.origin()
    vx, vy = (float(c) for c in spec.velocity)
    n = spec.events_per_pixel
    dt = spec.window_us

    cy, cx = (sh - 1) / 2.0, (sw - 1) / 2.0
    lead = (ox - cx) * vx + (oy - cy) * vy
    polarity = np.where((vx == 0 and vy == 0) | (lead >= 0), 1, 0).astype(np.uint8)

    steps = np.arange(spec.windows * n + 1) / n
    px, py = _round(x0 + vx * steps), _round(y0 + vy * steps)
    if px.min() < 0 or py.min() < 0 or px.max() + sw > g.width or py.max() + sh > g.height:
        raise GenerationError("shape leaves the frame during the requested motion")

    rng = np.random.default_rng(spec.seed)
    chunks, truth = [], []
    for k in range(spec.windows):
        base = k * dt
        sig = []
        seen = np.zeros(g.shape, bool)
        for j in range(n):
            s = k * n + j
            ev = np.empty(oy.size, dtype=EVENT_DTYPE)
            ev["t"] = base + (j * dt) // n
            ev["x"] = ox + px[s]
            ev["y"] = oy + py[s]
            ev["p"] = polarity
            seen[ev["y"], ev["x"]] = True
            sig.append(ev)
        if spec.noise:
            noise = np.empty(spec.noise, dtype=EVENT_DTYPE)
            noise["t"] = base + rng.integers(0, dt, spec.noise)
            noise["x"] = rng.integers(0, g.width, spec.noise)
            noise["y"] = rng.integers(0, g.height, spec.noise)
            noise["p"] = rng.integers(0, 2, spec.noise)
            sig.append(noise)
        window = np.concatenate(sig)
        chunks.append(window[np.argsort(window["t"], kind="stable")])
        truth.append(FlowField.constant(g, vx, vy, valid=seen, window_index=k))
    return np.concatenate(chunks), truth
