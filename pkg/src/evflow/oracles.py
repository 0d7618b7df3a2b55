"""Brute-force reference implementations for tests.

Deliberately naive and independent of the production code paths.  Inputs are
capped (64x64 grids, 10^4 events) so that the quadratic loops stay cheap.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, MetricError


@dataclass(frozen=True)
class OracleBudget:
    max_area: int = 64 * 64
    max_events: int = 10_000

    def check(self, h, w, n_events=0):
        if h * w > self.max_area:
            raise BudgetError(f"grid {w}x{h} exceeds oracle budget of {self.max_area} pixels")
        if n_events > self.max_events:
            raise BudgetError(f"{n_events} events exceed oracle budget of {self.max_events}")


BUDGET = OracleBudget()


def brute_force_dt_squared(bits, budget=BUDGET):
    """Squared distance from each pixel to the nearest set pixel, as nested lists of ints.

    Exhaustive scan over every (pixel, edge pixel) pair, vectorised in chunks.
    """
    grid = np.asarray(bits).astype(bool)
    h, w = grid.shape
    budget.check(h, w)
    ey, ex = np.nonzero(grid)
    if ey.size == 0:
        raise ValueError("oracle needs at least one edge pixel")
    py, px = np.divmod(np.arange(h * w, dtype=np.int64), w)
    best = np.full(h * w, np.iinfo(np.int64).max)
    for i in range(0, ey.size, 256):
        dy = py[:, None] - ey[None, i:i + 256]
        dx = px[:, None] - ex[None, i:i + 256]
        best = np.minimum(best, (dy * dy + dx * dx).min(axis=1))
    return best.reshape(h, w).tolist()


def brute_force_dt(bits, budget=BUDGET):
    return [[math.sqrt(d) for d in row] for row in brute_force_dt_squared(bits, budget)]


def naive_aee(est_u, est_v, gt_u, gt_v, mask):
    total, n = 0.0, 0
    for i in range(len(mask)):
        for j in range(len(mask[0])):
            if mask[i][j]:
                total += math.sqrt((est_u[i][j] - gt_u[i][j]) ** 2 + (est_v[i][j] - gt_v[i][j]) ** 2)
                n += 1
    if n == 0:
        raise MetricError("empty evaluation set")
    return total / n


def naive_outlier_pct(est_u, est_v, gt_u, gt_v, mask):
    bad, n = 0, 0
    for i in range(len(mask)):
        for j in range(len(mask[0])):
            if mask[i][j]:
                err = math.sqrt((est_u[i][j] - gt_u[i][j]) ** 2 + (est_v[i][j] - gt_v[i][j]) ** 2)
                mag = math.sqrt(gt_u[i][j] ** 2 + gt_v[i][j] ** 2)
                if err > 3.0 and err > 0.05 * mag:
                    bad += 1
                n += 1
    if n == 0:
        raise MetricError("empty evaluation set")
    return 100.0 * bad / n


def _splat_image(h, w, events, disp):
    img = [[0.0] * w for _ in range(h)]
    for (t, x, y, p), (dx, dy) in zip(events, disp):
        fx, fy = x + dx, y + dy
        ix, iy = math.floor(fx), math.floor(fy)
        ax, ay = fx - ix, fy - iy
        s = 1.0 if p else -1.0
        for cy, cx, wt in ((iy, ix, (1 - ax) * (1 - ay)), (iy, ix + 1, ax * (1 - ay)),
                           (iy + 1, ix, (1 - ax) * ay), (iy + 1, ix + 1, ax * ay)):
            if 0 <= cx < w and 0 <= cy < h:
                img[cy][cx] += s * wt
    return img


def _variance(img):
    vals = [v for row in img for v in row]
    mean = sum(vals) / len(vals)
    return sum((v - mean) ** 2 for v in vals) / len(vals)


def brute_force_fwl(events, flow_u, flow_v, t_ref, dt_us, budget=BUDGET):
    """Flow warping loss with a per-event loop; flow given as nested lists.

    The flow is looked up at each event's own pixel, so callers should pass a
    field that is defined wherever events occur.
    """
    events = [tuple(int(c) for c in e) for e in events]
    h, w = len(flow_u), len(flow_u[0])
    budget.check(h, w, len(events))
    if not events:
        raise MetricError("flow warping loss needs at least one event")
    disp = []
    for t, x, y, _ in events:
        k = (t_ref - t) / dt_us
        disp.append((flow_u[y][x] * k, flow_v[y][x] * k))
    comp = _splat_image(h, w, events, disp)
    plain = _splat_image(h, w, events, [(0.0, 0.0)] * len(events))
    var_plain = _variance(plain)
    if var_plain == 0.0:
        raise MetricError("uncompensated event image has zero variance")
    return _variance(comp) / var_plain
