"""Pyramidal update-prediction optical flow on distance surfaces.

Per window, coarse to fine:

* prediction = gamma * (previous flow at this level, advected along itself)
  plus the upsampled correction found at the coarser level;
* the previous surface is warped by the prediction and an incremental
  Horn-Schunck system is relaxed (Jacobi) for the residual motion.

Flow is forward motion in pixels per window, sampled on the current grid: the
current surface at ``p`` matches the previous one at ``p - flow(p)``.
Level 0 is the finest; per-level lists in :class:`FlowConfig` are indexed
the same way.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from . import _backend
from .datatypes import FlowField
from .errors import GeometryError, ParameterError, StateError


@dataclass(frozen=True)
class FlowConfig:
    levels: int = 3
    lambdas: tuple = (50.0, 250.0, 500.0)
    iterations: tuple = (50, 25, 5)
    gamma: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        object.__setattr__(self, "iterations", tuple(int(x) for x in self.iterations))
        if self.levels < 1:
            raise ParameterError("pyramid needs at least one level")
        if len(self.lambdas) != self.levels or len(self.iterations) != self.levels:
            raise ParameterError(
                f"{self.levels} levels need {self.levels} weights and iteration counts, "
                f"got {len(self.lambdas)} and {len(self.iterations)}")
        if any(x < 0 for x in self.lambdas) or any(n < 0 for n in self.iterations):
            raise ParameterError("regularization weights and iteration counts must be non-negative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(f"temporal decay must be in [0, 1], got {self.gamma}")


LOW_RES = FlowConfig()
HIGH_RES = FlowConfig(3, (500.0, 500.0, 500.0), (20, 20, 20))


@dataclass
class FlowState:
    geometry: object = None
    pyramid: list = None
    flows: list = field(default=None)
    window_index: int = -1

    @property
    def fresh(self):
        return self.pyramid is None


def downsample(img):
    """2x2 mean; odd sizes are edge-padded first."""
    h, w = img.shape
    if h % 2 or w % 2:
        img = np.pad(img, ((0, h % 2), (0, w % 2)), mode="edge")
    return 0.25 * (img[0::2, 0::2] + img[0::2, 1::2] + img[1::2, 0::2] + img[1::2, 1::2])


SMOOTH_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def smooth(img):
    out = correlate1d(img, SMOOTH_KERNEL, axis=0, mode="nearest")
    return correlate1d(out, SMOOTH_KERNEL, axis=1, mode="nearest")


def build_pyramid(img, levels):
    """Smoothed images, finest first; each level is the 2x2 mean of the one above."""
    base = [np.asarray(img, dtype=np.float64)]
    for _ in range(levels - 1):
        base.append(downsample(base[-1]))
    return [smooth(b) for b in base]


def _resample(a, shape):
    h, w = shape
    ys = np.clip((np.arange(h) + 0.5) / 2.0 - 0.5, 0.0, a.shape[0] - 1.0)
    xs = np.clip((np.arange(w) + 0.5) / 2.0 - 0.5, 0.0, a.shape[1] - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, a.shape[0] - 1)
    x1 = np.minimum(x0 + 1, a.shape[1] - 1)
    ay = (ys - y0)[:, None]
    ax = (xs - x0)[None, :]
    top = (1.0 - ax) * a[y0][:, x0] + ax * a[y0][:, x1]
    bot = (1.0 - ax) * a[y1][:, x0] + ax * a[y1][:, x1]
    return (1.0 - ay) * top + ay * bot


def upsample_flow(u, v, shape):
    """Bilinear upsampling to ``shape`` with vectors scaled by 2."""
    return 2.0 * _resample(u, shape), 2.0 * _resample(v, shape)


def warp_image(img, u, v, threads=1):
    """Sample ``img`` at ``p + (u, v)(p)`` bilinearly, clamping at the border."""
    return _backend.kernels().warp_bilinear(np.ascontiguousarray(img, dtype=np.float64),
                                            np.ascontiguousarray(u, dtype=np.float64),
                                            np.ascontiguousarray(v, dtype=np.float64), threads)


def warp_field(img, flow, threads=1):
    return warp_image(img, flow.u, flow.v, threads)


def propagate(u, v, threads=1):
    """Advect a flow field along itself by one window."""
    return warp_image(u, -u, -v, threads), warp_image(v, -u, -v, threads)


def gradients(img):
    gy, gx = np.gradient(img)
    return gx, gy


def estimate_flow(state, surface, cfg, threads=1):
    """Estimate the flow from the state's surface to ``surface``.

    Returns ``(dense FlowField, new FlowState)``.  A fresh state yields the
    zero field with every pixel flagged invalid.
    """
    img = surface.intensity() if hasattr(surface, "intensity") else np.asarray(surface, np.float64)
    geometry = surface.geometry
    if not state.fresh and state.geometry != geometry:
        raise StateError(f"surface geometry {geometry} does not match state {state.geometry}")
    index = state.window_index + 1
    curr = build_pyramid(img, cfg.levels)

    if state.fresh or len(state.pyramid) != cfg.levels:
        zeros = [(np.zeros_like(c), np.zeros_like(c)) for c in curr]
        return (FlowField.invalid(geometry, index),
                FlowState(geometry, curr, zeros, index))

    kern = _backend.kernels()
    flows = [None] * cfg.levels
    for lvl in range(cfg.levels - 1, -1, -1):
        prev, cur = state.pyramid[lvl], curr[lvl]
        if lvl == cfg.levels - 1:
            # temporal prior enters at the coarsest level only; finer levels
            # inherit it through the upsampled coarser flow
            su, sv = propagate(*state.flows[lvl], threads)
            su, sv = cfg.gamma * su, cfg.gamma * sv
        else:
            su, sv = upsample_flow(*flows[lvl + 1], cur.shape)
        warped = warp_image(prev, -su, -sv, threads)
        gx, gy = gradients(warped)
        du, dv = kern.hs_relax(gx, gy, cur - warped, cfg.lambdas[lvl], cfg.iterations[lvl],
                               np.zeros_like(cur), np.zeros_like(cur), threads)
        flows[lvl] = (su + du, sv + dv)

    vec = np.stack([flows[0][0], flows[0][1]], axis=-1).astype(np.float32)
    dense = FlowField(geometry, vec, np.ones(geometry.shape, bool), index)
    return dense, FlowState(geometry, curr, flows, index)


def mask_to_edges(flow, edge):
    """Keep flow only where the (denoised) edge image has an edge pixel."""
    if flow.geometry != edge.geometry:
        raise GeometryError("flow and edge image geometries differ")
    return FlowField(flow.geometry, flow.vectors, flow.valid & (edge.bits != 0), flow.window_index)


class FlowEstimator:
    """Stateful wrapper carrying :class:`FlowState` across windows."""

    def __init__(self, cfg=LOW_RES, threads=1):
        self.cfg = cfg
        self.threads = threads
        self.state = FlowState()

    def reset(self):
        self.state = FlowState()

    def __call__(self, surface):
        dense, self.state = estimate_flow(self.state, surface, self.cfg, self.threads)
        return dense
