"""Flow accuracy metrics: average endpoint error, outlier rate, flow warping loss."""
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .datatypes import as_event_array
from .errors import GeometryError, MetricError

OUTLIER_PX = 3.0
OUTLIER_REL = 0.05


@dataclass
class MetricReport:
    aee: float = None
    outlier_pct: float = None
    fwl: float = None
    valid_pixel_count: int = 0

    def to_text(self):
        lines = []
        for key, value in asdict(self).items():
            if value is not None:
                lines.append(f"{key}={value:.6f}" if isinstance(value, float) else f"{key}={value}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass(frozen=True, eq=False)
class EventImage:
    geometry: object
    accumulation: np.ndarray


def _errors(est, gt, exclude=None):
    if est.geometry != gt.geometry:
        raise GeometryError(f"estimate {est.geometry} and ground truth {gt.geometry} differ")
    mask = est.valid & gt.valid
    if exclude is not None:
        mask &= ~np.asarray(exclude, bool)
    if not mask.any():
        raise MetricError("no pixel is valid in both fields")
    e = est.vectors[mask].astype(np.float64)
    g = gt.vectors[mask].astype(np.float64)
    err = np.hypot(e[:, 0] - g[:, 0], e[:, 1] - g[:, 1])
    return err, np.hypot(g[:, 0], g[:, 1])


def aee(est, gt, exclude=None):
    """Mean endpoint error over pixels valid in both fields."""
    err, _ = _errors(est, gt, exclude)
    return float(err.mean())


def outlier_pct(est, gt, exclude=None):
    """Percentage of pixels whose error exceeds both 3 px and 5 % of |gt|."""
    err, mag = _errors(est, gt, exclude)
    out = (err > OUTLIER_PX) & (err > OUTLIER_REL * mag)
    return 100.0 * float(np.count_nonzero(out)) / err.size


def evaluation_count(est, gt, exclude=None):
    mask = est.valid & gt.valid
    if exclude is not None:
        mask &= ~np.asarray(exclude, bool)
    return int(np.count_nonzero(mask))


def event_flow(events, flow, d_sat=6.0):
    """Flow vector used for each event.

    Events on invalid-flow pixels borrow the vector of the nearest valid pixel
    if it lies within ``d_sat``; otherwise they are not displaced.
    """
    ev = as_event_array(events)
    vec = flow.vectors.astype(np.float64)
    if flow.valid.all():
        return vec[ev["y"], ev["x"]]
    out = np.zeros((len(ev), 2))
    if not flow.valid.any():
        return out
    dist, (iy, ix) = distance_transform_edt(~flow.valid, return_indices=True)
    y, x = ev["y"], ev["x"]
    near = dist[y, x] <= d_sat
    out[near] = vec[iy[y[near], x[near]], ix[y[near], x[near]]]
    return out


def splat(geometry, xs, ys, weights):
    """Bilinear splat of signed weights; mass landing outside the frame is dropped."""
    h, w = geometry.shape
    img = np.zeros(h * w)
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    ax = xs - x0
    ay = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    for dy, dx, wt in ((0, 0, (1 - ay) * (1 - ax)), (0, 1, (1 - ay) * ax),
                       (1, 0, ay * (1 - ax)), (1, 1, ay * ax)):
        cx, cy = x0 + dx, y0 + dy
        ok = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h) & (wt != 0)
        np.add.at(img, cy[ok] * w + cx[ok], weights[ok] * wt[ok])
    return img.reshape(h, w)


def compensate_events(events, flow, t_ref, dt_us, d_sat=6.0):
    """Image of events displaced along their flow to ``t_ref``.

    Each event contributes +1 (positive polarity) or -1 at
    ``(x, y) + flow * (t_ref - t) / dt_us``.
    """
    ev = as_event_array(events)
    f = event_flow(ev, flow, d_sat)
    scale = (float(t_ref) - ev["t"].astype(np.float64)) / float(dt_us)
    xs = ev["x"] + f[:, 0] * scale
    ys = ev["y"] + f[:, 1] * scale
    sign = np.where(ev["p"] > 0, 1.0, -1.0)
    return EventImage(flow.geometry, splat(flow.geometry, xs, ys, sign))


def fwl(events, flow, t_ref, dt_us, d_sat=6.0):
    """Variance of the compensated event image over that of the plain one (> 1 is better than zero flow)."""
    ev = as_event_array(events)
    if len(ev) == 0:
        raise MetricError("flow warping loss needs at least one event")
    comp = compensate_events(ev, flow, t_ref, dt_us, d_sat).accumulation
    zero = type(flow).constant(flow.geometry, 0.0, 0.0)
    uncomp = compensate_events(ev, zero, t_ref, dt_us, d_sat).accumulation
    var_u = float(np.var(uncomp))
    if var_u == 0.0:
        raise MetricError("uncompensated event image has zero variance")
    return float(np.var(comp)) / var_u


def evaluate(est, gt, events=None, t_ref=None, dt_us=None, exclude=None):
    report = MetricReport(aee(est, gt, exclude), outlier_pct(est, gt, exclude),
                          valid_pixel_count=evaluation_count(est, gt, exclude))
    if events is not None and len(events):
        report.fwl = fwl(events, est, t_ref, dt_us)
    return report


def evaluate_sequence(estimates, truths, window_events=None, window_starts=None, dt_us=None,
                      exclude=None):
    """Aggregate metrics over windows.

    AEE and outlier rate are averaged over all evaluated pixels of all windows
    (windows weighted by their pixel count); windows with an empty evaluation
    set are skipped.  FWL is computed per window with flow and returned as the
    mean, alongside the per-window values.
    """
    if len(estimates) != len(truths):
        raise MetricError(f"window count mismatch: {len(estimates)} estimates vs {len(truths)} ground truth")
    err_sum, out_sum, n_total = 0.0, 0.0, 0
    per_window = []
    for k, (est, gt) in enumerate(zip(estimates, truths)):
        row = {"window": k}
        n = evaluation_count(est, gt, exclude)
        if n:
            a, o = aee(est, gt, exclude), outlier_pct(est, gt, exclude)
            err_sum += a * n
            out_sum += o * n / 100.0
            n_total += n
            row.update(aee=a, outlier_pct=o, pixels=n)
        if window_events is not None and est.valid.any() and k < len(window_events):
            try:
                row["fwl"] = fwl(window_events[k], est, window_starts[k] + dt_us, dt_us)
            except MetricError:
                pass
        per_window.append(row)
    if n_total == 0:
        raise MetricError("no pixel is valid in both fields in any window")
    fwls = [r["fwl"] for r in per_window if "fwl" in r]
    report = MetricReport(err_sum / n_total, 100.0 * out_sum / n_total,
                          float(np.mean(fwls)) if fwls else None, n_total)
    return report, per_window
