"""Command-line interface: ``evflow {run,synth,eval,viz,sweep,bench}``."""
import argparse
import glob
import itertools
import json
import os
import sys

import numpy as np

from . import _backend
from .accumulator import split_windows
from .config import build_config, dump_kv, load_kv
from .datatypes import SensorGeometry
from .errors import EvflowError
from .io_formats import (flow_filename, load_mask, parse_event_stream, read_flow, render_flow_png,
                         write_events, write_flow)
from .metrics import evaluate_sequence
from .pipeline import Collector, FlowWriter, distance_label, run_pipeline
from .synthetic import SHAPES, SyntheticSceneSpec, generate_synthetic_scene

TRANSFER_CHOICES = ("invexp", "linear", "bounded", "log", "inverse_exp", "linear_bounded")


def _add_pipeline_flags(p):
    p.add_argument("--config", help="key-value configuration file")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--dt-us", type=int, help="accumulation window in microseconds")
    p.add_argument("--nd", type=int, help="denoising threshold (0 disables)")
    p.add_argument("--nf", type=int, help="filling threshold (5 disables)")
    p.add_argument("--dsat", type=float, help="saturation distance in pixels")
    p.add_argument("--transfer", choices=TRANSFER_CHOICES)
    p.add_argument("--bound", type=float, help="upper bound for the bounded transfer")
    p.add_argument("--quantize", action="store_const", const="1", default=None,
                   help="feed the 8-bit surface to the flow stage")
    p.add_argument("--levels", type=int)
    p.add_argument("--lambda", dest="lambda_", help="per-level regularization weights, e.g. 50,250,500")
    p.add_argument("--iters", help="per-level smoothing iterations, e.g. 50,25,5")
    p.add_argument("--gamma", type=float, help="temporal propagation factor")
    p.add_argument("--threads", type=int)
    p.add_argument("--queue-capacity", type=int)


def _config_from_args(args):
    values = load_kv(args.config) if args.config else {}
    overrides = {
        "width": args.width, "height": args.height, "dt_us": args.dt_us, "nd": args.nd,
        "nf": args.nf, "dsat": args.dsat, "transfer": args.transfer, "bound": args.bound,
        "quantize": args.quantize, "levels": args.levels, "lambda": args.lambda_,
        "iters": args.iters, "gamma": args.gamma, "threads": args.threads,
        "queue_capacity": args.queue_capacity,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(values), values


def _list_flows(directory):
    paths = sorted(glob.glob(os.path.join(directory, "*.flo")))
    return [read_flow(p, i) for i, p in enumerate(paths)]


def _write_report(out_dir, stem, text, payload):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, stem + ".txt"), "w") as fh:
        fh.write(text)
    with open(os.path.join(out_dir, stem + ".json"), "w") as fh:
        json.dump(payload, fh, indent=2)


def cmd_run(args):
    cfg, _ = _config_from_args(args)
    events = parse_event_stream(args.events, cfg.geometry)
    writer = FlowWriter(args.out, png=args.png)
    mode = "sequential" if args.sequential else "concurrent"
    summary = run_pipeline(cfg, events, [writer], mode=mode)
    table = summary.timings.table(_backend.name(), distance_label(cfg))
    _write_report(args.out, "timing", table, json.loads(summary.to_json()))
    print(f"windows={summary.windows}")
    print(table, end="")
    return 0


def cmd_synth(args):
    geometry = SensorGeometry(args.width, args.height)
    spec = SyntheticSceneSpec(
        geometry, args.shape, args.size, (args.vx, args.vy), args.windows, args.epp,
        args.noise, args.seed, None if args.x is None else (args.x, args.y), args.dt_us)
    events, truth = generate_synthetic_scene(spec)
    os.makedirs(os.path.join(args.out, "gt"), exist_ok=True)
    write_events(events, os.path.join(args.out, "events.csv"))
    for k, gt in enumerate(truth):
        write_flow(gt, os.path.join(args.out, "gt", flow_filename(k, "gt")))
    with open(os.path.join(args.out, "scene.cfg"), "w") as fh:
        fh.write(dump_kv({"width": args.width, "height": args.height, "dt_us": args.dt_us}))
    print(f"events={len(events)} windows={len(truth)}")
    return 0


def _evaluate(est_dir, gt_dir, mask=None, events_path=None, dt_us=None):
    estimates, truths = _list_flows(est_dir), _list_flows(gt_dir)
    if len(estimates) != len(truths):
        raise EvflowError(f"window count mismatch: {len(estimates)} estimates in {est_dir}, "
                          f"{len(truths)} ground-truth files in {gt_dir}")
    if not estimates:
        raise EvflowError(f"no flow files in {est_dir}")
    geometry = estimates[0].geometry
    exclude = load_mask(mask, geometry) if mask else None
    window_events = starts = None
    if events_path:
        if not dt_us:
            raise EvflowError("FWL needs --dt-us (or a config with dt_us)")
        events = parse_event_stream(events_path, geometry)
        window_events = split_windows(events, dt_us)
        t0 = int(events["t"][0]) if len(events) else 0
        starts = [t0 + k * dt_us for k in range(len(window_events))]
    return evaluate_sequence(estimates, truths, window_events, starts, dt_us, exclude)


def cmd_eval(args):
    dt_us = args.dt_us
    if dt_us is None and args.config:
        dt_us = int(load_kv(args.config).get("dt_us", 0)) or None
    report, per_window = _evaluate(args.est, args.gt, args.mask, args.events, dt_us)
    text = report.to_text()
    print(text, end="")
    if args.out:
        _write_report(args.out, "metrics", text,
                      {"summary": json.loads(report.to_json()), "windows": per_window})
    return 0


def cmd_viz(args):
    paths = [args.flow] if os.path.isfile(args.flow) else sorted(glob.glob(os.path.join(args.flow, "*.flo")))
    if not paths:
        raise EvflowError(f"no flow files at {args.flow}")
    if len(paths) == 1 and args.out.lower().endswith(".png"):
        render_flow_png(read_flow(paths[0]), args.out)
        return 0
    os.makedirs(args.out, exist_ok=True)
    for p in paths:
        render_flow_png(read_flow(p), os.path.join(args.out, os.path.basename(p)[:-4] + ".png"))
    print(f"rendered={len(paths)}")
    return 0


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def sweep(base_values, events, truths, grid, window_events=None, dt_us=None):
    """Run one pipeline per ``(nd, nf, dsat)`` cell and return result rows.

    A failing cell is reported with its error and does not stop the sweep.
    """
    rows = []
    for nd, nf, dsat in grid:
        row = {"nd": nd, "nf": nf, "dsat": dsat}
        try:
            cfg = build_config({**base_values, "nd": nd, "nf": nf, "dsat": dsat})
            sink = Collector()
            run_pipeline(cfg, events, [sink], mode="sequential")
            starts = None
            if window_events is not None:
                t0 = int(events["t"][0])
                starts = [t0 + k * cfg.dt_us for k in range(len(window_events))]
            report, _ = evaluate_sequence(sink.flows, truths, window_events, starts, cfg.dt_us)
            row.update(aee=report.aee, outlier_pct=report.outlier_pct, fwl=report.fwl)
        except EvflowError as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def format_sweep(rows):
    lines = [f"{'N_d':>3} {'N_f':>3} {'d_sat':>6} {'AEE':>9} {'%Out':>7}"]
    for r in rows:
        if "error" in r:
            lines.append(f"{r['nd']:>3} {r['nf']:>3} {r['dsat']:>6g}  error: {r['error']}")
        else:
            lines.append(f"{r['nd']:>3} {r['nf']:>3} {r['dsat']:>6g} {r['aee']:>9.4f} {r['outlier_pct']:>7.2f}")
    ok = [r for r in rows if "error" not in r]
    if ok:
        best = min(ok, key=lambda r: r["aee"])
        lines.append(f"best: N_d={best['nd']} N_f={best['nf']} d_sat={best['dsat']:g} AEE={best['aee']:.4f}")
    return "\n".join(lines) + "\n"


def cmd_sweep(args):
    _, values = _config_from_args(args)
    cfg = build_config(values)
    events = parse_event_stream(args.events, cfg.geometry)
    truths = _list_flows(args.gt)
    grid = list(itertools.product(_int_list(args.nd_list), _int_list(args.nf_list),
                                  _float_list(args.dsat_list)))
    rows = sweep(values, events, truths, grid)
    text = format_sweep(rows)
    print(text, end="")
    if args.out:
        _write_report(args.out, "sweep", text, rows)
    return 0


def cmd_bench(args):
    cfg, _ = _config_from_args(args)
    events = parse_event_stream(args.events, cfg.geometry)
    mode = "sequential" if args.sequential else "concurrent"
    summary = run_pipeline(cfg, events, [], mode=mode, realtime=args.realtime)
    table = summary.timings.table(_backend.name(), distance_label(cfg))
    print(f"{cfg.geometry.width}x{cfg.geometry.height}, {summary.windows} windows, "
          f"{summary.throughput:.1f} windows/s ({mode}, backend={_backend.name()})")
    print(table, end="")
    if args.out:
        _write_report(args.out, "bench", table, json.loads(summary.to_json()))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="evflow", description=__doc__)
    parser.add_argument("--backend", choices=("native", "python"), help="kernel backend")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the pipeline on an event CSV")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--png", action="store_true", help="also render each flow field")
    p.add_argument("--sequential", action="store_true")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=346)
    p.add_argument("--height", type=int, default=260)
    p.add_argument("--dt-us", type=int, default=10_000)
    p.add_argument("--shape", choices=SHAPES, default="square")
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--vx", type=float, default=1.0)
    p.add_argument("--vy", type=float, default=0.0)
    p.add_argument("--x", type=float, help="initial left column (default: centred)")
    p.add_argument("--y", type=float, help="initial top row (default: centred)")
    p.add_argument("--windows", type=int, default=20)
    p.add_argument("--epp", type=int, default=2, help="events per edge pixel per window")
    p.add_argument("--noise", type=int, default=0, help="noise events per window")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="compare estimated and ground-truth flow directories")
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--mask", help="exclusion mask PNG (non-zero = ignored)")
    p.add_argument("--events", help="event CSV, enables FWL")
    p.add_argument("--dt-us", type=int)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("viz", help="render flow files as PNG")
    p.add_argument("--flow", required=True, help="flow file or directory")
    p.add_argument("--out", required=True, help="PNG path or output directory")
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("sweep", help="N_d / N_f / d_sat sensitivity grid")
    p.add_argument("--events", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--nd-list", default="0,1,2,3,4")
    p.add_argument("--nf-list", default="1,2,3,4,5")
    p.add_argument("--dsat-list", default="3,6,9,12")
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; runs are deterministic")
    p.add_argument("--out")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="replay a stream and report per-stage timings")
    p.add_argument("--events", required=True)
    p.add_argument("--realtime", action="store_true", help="pace windows at wall-clock speed")
    p.add_argument("--sequential", action="store_true")
    p.add_argument("--out")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        _backend.use(args.backend)
    try:
        return args.func(args)
    except (EvflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
