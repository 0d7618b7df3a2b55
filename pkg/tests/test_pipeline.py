import json
import threading

import numpy as np
import pytest

from evflow.accumulator import accumulate
from evflow.config import build_config
from evflow.datatypes import EVENT_DTYPE, SensorGeometry
from evflow.distance import distance_surface
from evflow.errors import PipelineError
from evflow.filtering import denoise_fill
from evflow.flow import FlowEstimator, mask_to_edges
from evflow.io_formats import flow_to_bytes
from evflow.pipeline import STAGES, Collector, FlowWriter, StageTimings, distance_label, run_pipeline
from evflow.synthetic import SyntheticSceneSpec, generate_synthetic_scene

G = SensorGeometry(120, 90)


@pytest.fixture(scope="module")
def scene():
    spec = SyntheticSceneSpec(G, "square", 16, (1, 0.5), 12, 2, 10, 4, (20, 30))
    return generate_synthetic_scene(spec)[0]


def cfg(**kw):
    return build_config({"width": 120, "height": 90, "dt_us": 10_000, **kw})


def reference(c, events):
    est = FlowEstimator(c.flow)
    out = []
    for edge in accumulate(events, c.dt_us, c.geometry):
        d, f = denoise_fill(edge, c.filter, keep_denoised=True)
        out.append(flow_to_bytes(mask_to_edges(est(distance_surface(f, c.transfer)), d)))
    return out


@pytest.mark.parametrize("mode", ["sequential", "concurrent"])
@pytest.mark.parametrize("capacity", [1, 4])
def test_matches_hand_composition(scene, mode, capacity):
    c = cfg(queue_capacity=capacity)
    sink = Collector()
    summary = run_pipeline(c, scene, [sink], mode=mode)
    assert summary.windows == 12
    assert [flow_to_bytes(f) for f in sink.flows] == reference(c, scene)
    assert [r.index for r in sink.results] == list(range(12))


def test_chunked_source(scene):
    c = cfg()
    chunks = np.array_split(scene, 7)
    a, b = Collector(), Collector()
    run_pipeline(c, iter(chunks), [a])
    run_pipeline(c, scene, [b], mode="sequential")
    assert [flow_to_bytes(f) for f in a.flows] == [flow_to_bytes(f) for f in b.flows]


def test_keep_and_writer(scene, tmp_path):
    writer = FlowWriter(str(tmp_path), png=True)
    summary = run_pipeline(cfg(), scene, [writer], keep=True)
    assert writer.count == 12
    assert sorted(p.name for p in tmp_path.glob("*.flo"))[0] == "flow_00000.flo"
    assert len(list(tmp_path.glob("*.png"))) == 12
    r = summary.results[3]
    assert r.surface is not None and r.denoised is not None and r.edge.index == 3
    assert np.all(r.flow.valid <= (r.denoised.bits == 1))


def test_source_error_carries_window(scene):
    bad = scene.copy()
    bad["t"][100:] -= 10**6
    for mode in ("sequential", "concurrent"):
        with pytest.raises(PipelineError) as info:
            run_pipeline(cfg(), iter([bad[:100], bad[100:]]), mode=mode)
        assert info.value.window is not None


def test_sink_failure_aborts_cleanly(scene):
    before = threading.active_count()

    def sink(result):
        if result.index == 2:
            raise OSError("disk full")
    with pytest.raises(PipelineError, match="disk full") as info:
        run_pipeline(cfg(queue_capacity=1), scene, [sink])
    assert info.value.window == 2
    assert threading.active_count() == before


def test_empty_source():
    s = run_pipeline(cfg(), np.zeros(0, EVENT_DTYPE))
    assert s.windows == 0


def test_timings(scene):
    s = run_pipeline(cfg(), scene)
    summ = s.timings.summary()
    assert set(summ) == set(STAGES) | {"total"}
    assert all(summ[k]["count"] == 12 for k in summ)
    means = [summ[k]["mean_ms"] for k in STAGES]
    assert summ["total"]["mean_ms"] == pytest.approx(sum(means))
    table = s.timings.table("native", distance_label(cfg()))
    head = table.splitlines()[0]
    for col in ("Edge image", "Denoising & filling", "Inverse exponential distance transform",
                "Optical flow", "Total"):
        assert col in head
    assert "±" in table.splitlines()[2]
    assert json.loads(s.to_json())["windows"] == 12
    assert distance_label(cfg(transfer="linear")) == "Distance transform"


def test_timings_empty():
    t = StageTimings()
    assert t.summary()["total"]["count"] == 0


def test_bad_mode(scene):
    with pytest.raises(ValueError):
        run_pipeline(cfg(), scene, mode="parallel")
