"""Four-stage concurrent pipeline with bounded hand-off queues.

Stages: edge image accumulation -> denoising & filling -> distance surface ->
optical flow (masked to the denoised edges).  Each stage runs in its own
thread; the native kernels release the GIL.  Outputs are identical to the
sequential composition whatever the queue capacity or thread count.
"""
import json
import os
import queue
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .accumulator import Accumulator
from .datatypes import as_event_array
from .distance import Transfer, distance_surface
from .errors import EvflowError, PipelineError
from .filtering import denoise_fill
from .flow import FlowEstimator, mask_to_edges
from .io_formats import flow_filename, render_flow_png, write_flow

STAGES = ("edge_image", "denoise_fill", "distance_transform", "optical_flow")
_END = object()
_POLL = 0.05


class StageTimings:
    """Per-window compute time of every stage, in milliseconds."""

    def __init__(self):
        self.samples = {name: [] for name in STAGES}

    def add(self, stage, ms):
        self.samples[stage].append(ms)

    def totals(self):
        n = min(len(v) for v in self.samples.values())
        return [sum(self.samples[s][i] for s in STAGES) for i in range(n)]

    def summary(self):
        out = {}
        for name, vals in list(self.samples.items()) + [("total", self.totals())]:
            arr = np.asarray(vals, dtype=np.float64)
            out[name] = {
                "mean_ms": float(arr.mean()) if arr.size else 0.0,
                "std_ms": float(arr.std()) if arr.size else 0.0,
                "count": int(arr.size),
            }
        return out

    def table(self, label="CPU", distance_label="Inverse exponential distance transform"):
        heads = ["Version", "Edge image", "Denoising & filling", distance_label, "Optical flow", "Total"]
        s = self.summary()
        cells = [label] + [f"{s[k]['mean_ms']:.2f} ± {s[k]['std_ms']:.2f}"
                           for k in STAGES + ("total",)]
        widths = [max(len(a), len(b)) for a, b in zip(heads, cells)]
        row = lambda items: " | ".join(x.ljust(w) for x, w in zip(items, widths))  # noqa: E731
        return "\n".join([row(heads), "-+-".join("-" * w for w in widths), row(cells)]) + "\n"


@dataclass
class WindowResult:
    index: int
    window_start: int
    flow: object
    edge: object = None
    denoised: object = None
    surface: object = None


@dataclass
class RunSummary:
    windows: int
    timings: StageTimings
    wall_s: float
    backend: str = ""
    results: list = field(default_factory=list, repr=False)

    @property
    def throughput(self):
        return self.windows / self.wall_s if self.wall_s > 0 else float("inf")

    def to_json(self):
        return json.dumps({
            "windows": self.windows,
            "wall_s": self.wall_s,
            "windows_per_s": self.throughput,
            "backend": self.backend,
            "stages": self.timings.summary(),
        }, indent=2)


class FlowWriter:
    """Sink writing ``flow_NNNNN.flo`` (and optionally ``.png``) per window."""

    def __init__(self, out_dir, png=False):
        self.out_dir = out_dir
        self.png = png
        os.makedirs(out_dir, exist_ok=True)
        self.count = 0

    def __call__(self, result):
        path = os.path.join(self.out_dir, flow_filename(result.index))
        write_flow(result.flow, path)
        if self.png:
            render_flow_png(result.flow, path[:-4] + ".png")
        self.count += 1


class Collector:
    def __init__(self):
        self.results = []

    def __call__(self, result):
        self.results.append(result)

    @property
    def flows(self):
        return [r.flow for r in self.results]


def _chunks(source, dt_us):
    """Split an event array into per-window chunks; pass other iterables through."""
    if isinstance(source, np.ndarray) or isinstance(source, (list, tuple)):
        ev = as_event_array(source)
        if len(ev) == 0:
            return
        win = (ev["t"] - ev["t"][0]) // dt_us
        bounds = np.searchsorted(win, np.arange(int(win[-1]) + 2), side="left")
        for k in range(int(win[-1]) + 1):
            yield ev[bounds[k]:bounds[k + 1]]
    else:
        yield from source


def _edge_windows(cfg, source, timings, realtime=False):
    acc = Accumulator(cfg.dt_us, cfg.geometry)
    start = time.perf_counter()
    for chunk in _chunks(source, cfg.dt_us):
        t0 = time.perf_counter()
        try:
            done = acc.push(chunk)
        except EvflowError as exc:
            raise PipelineError(str(exc), window=acc.current) from exc
        spent = (time.perf_counter() - t0) * 1e3
        for edge in done:
            timings.add("edge_image", spent / len(done))
            if realtime:
                _sleep_until(start, (edge.index + 1) * cfg.dt_us * 1e-6)
            yield edge
    t0 = time.perf_counter()
    for edge in acc.finish():
        timings.add("edge_image", (time.perf_counter() - t0) * 1e3)
        yield edge


def _sleep_until(start, offset_s):
    delay = start + offset_s - time.perf_counter()
    if delay > 0:
        time.sleep(delay)


class _Stages:
    def __init__(self, cfg, timings, keep=False):
        self.cfg = cfg
        self.timings = timings
        self.keep = keep
        self.estimator = FlowEstimator(cfg.flow, cfg.threads)

    def filter(self, edge):
        t0 = time.perf_counter()
        denoised, filtered = denoise_fill(edge, self.cfg.filter, self.cfg.threads, keep_denoised=True)
        self.timings.add("denoise_fill", (time.perf_counter() - t0) * 1e3)
        return edge, denoised, filtered

    def distance(self, item):
        edge, denoised, filtered = item
        t0 = time.perf_counter()
        surface = distance_surface(filtered, self.cfg.transfer, self.cfg.threads)
        self.timings.add("distance_transform", (time.perf_counter() - t0) * 1e3)
        return edge, denoised, surface

    def flow(self, item):
        edge, denoised, surface = item
        t0 = time.perf_counter()
        flow = mask_to_edges(self.estimator(surface), denoised)
        self.timings.add("optical_flow", (time.perf_counter() - t0) * 1e3)
        if self.keep:
            return WindowResult(edge.index, edge.window_start, flow, edge, denoised, surface)
        return WindowResult(edge.index, edge.window_start, flow)


class _Failure:
    def __init__(self, exc):
        self.exc = exc


def _put(q, item, abort):
    while True:
        if abort.is_set():
            return False
        try:
            q.put(item, timeout=_POLL)
            return True
        except queue.Full:
            continue


def _get(q, abort):
    while True:
        if abort.is_set():
            return _END
        try:
            return q.get(timeout=_POLL)
        except queue.Empty:
            continue


def _source_worker(gen, out, abort):
    try:
        for item in gen:
            if not _put(out, item, abort):
                return
    except BaseException as exc:  # noqa: BLE001
        _put(out, _Failure(exc), abort)
        return
    _put(out, _END, abort)


def _stage_worker(fn, inp, out, abort):
    while True:
        item = _get(inp, abort)
        if item is _END or isinstance(item, _Failure):
            _put(out, item, abort)
            return
        try:
            result = fn(item)
        except BaseException as exc:  # noqa: BLE001
            _put(out, _Failure(exc), abort)
            return
        if not _put(out, result, abort):
            return


def _deliver(result, sinks):
    for sink in sinks:
        try:
            sink(result)
        except Exception as exc:
            raise PipelineError(f"sink failed: {exc}", window=result.index) from exc


def run_pipeline(cfg, source, sinks=(), mode="concurrent", keep=False, realtime=False):
    """Run all stages over ``source`` and hand each masked flow to ``sinks``.

    ``source`` is an event array or an iterable of time-ordered event chunks.
    ``mode`` is ``"concurrent"`` (one thread per stage, bounded queues) or
    ``"sequential"``.
    """
    from . import _backend

    timings = StageTimings()
    stages = _Stages(cfg, timings, keep)
    results = []
    t_start = time.perf_counter()
    edges = _edge_windows(cfg, source, timings, realtime)

    if mode == "sequential":
        for edge in edges:
            result = stages.flow(stages.distance(stages.filter(edge)))
            _deliver(result, sinks)
            if keep:
                results.append(result)
    elif mode == "concurrent":
        cap = cfg.queue_capacity
        qs = [queue.Queue(maxsize=cap) for _ in range(4)]
        abort = threading.Event()
        threads = [
            threading.Thread(target=_source_worker, args=(edges, qs[0], abort), name="edge_image"),
            threading.Thread(target=_stage_worker, args=(stages.filter, qs[0], qs[1], abort), name="filter"),
            threading.Thread(target=_stage_worker, args=(stages.distance, qs[1], qs[2], abort), name="distance"),
            threading.Thread(target=_stage_worker, args=(stages.flow, qs[2], qs[3], abort), name="flow"),
        ]
        for th in threads:
            th.daemon = True
            th.start()
        try:
            while True:
                item = _get(qs[3], abort)
                if item is _END:
                    break
                if isinstance(item, _Failure):
                    exc = item.exc
                    if isinstance(exc, PipelineError):
                        raise exc
                    raise PipelineError(str(exc)) from exc
                _deliver(item, sinks)
                if keep:
                    results.append(item)
        finally:
            abort.set()
            for th in threads:
                th.join()
    else:
        raise ValueError(f"unknown mode {mode!r}")

    wall = time.perf_counter() - t_start
    n = len(timings.samples["optical_flow"])
    return RunSummary(n, timings, wall, _backend.name(), results)


def distance_label(cfg):
    if cfg.transfer.variant is Transfer.INVERSE_EXP:
        return "Inverse exponential distance transform"
    return "Distance transform"
