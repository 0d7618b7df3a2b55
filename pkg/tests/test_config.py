import pytest

from evflow.config import build_config, dump_kv, load_config, parse_kv
from evflow.distance import Transfer
from evflow.errors import ConfigError, ParameterError


def test_defaults():
    c = build_config({"width": "346", "height": "260", "dt_us": "10000"})
    assert (c.filter.nd, c.filter.nf) == (1, 4)
    assert c.transfer.variant is Transfer.INVERSE_EXP and c.transfer.d_sat == 6
    assert c.flow.lambdas == (50.0, 250.0, 500.0) and c.flow.iterations == (50, 25, 5)
    assert c.queue_capacity == 2


@pytest.mark.parametrize("key", ["width", "height", "dt_us"])
def test_missing_field(key):
    values = {"width": 4, "height": 4, "dt_us": 1}
    del values[key]
    with pytest.raises(ConfigError, match=f"missing field: {key}"):
        build_config(values)


def test_parse_and_round_trip(tmp_path):
    text = "# cfg\nwidth = 64\nheight=48\ndt-us = 5000\ntransfer = bounded\nbound=4\nlambda = 1,2\niters=3,4\nlevels=2\n"
    values = parse_kv(text)
    c = build_config(values)
    assert c.transfer.variant is Transfer.LINEAR_BOUNDED and c.transfer.bound == 4
    assert c.flow.levels == 2 and c.flow.lambdas == (1.0, 2.0)
    p = tmp_path / "c.cfg"
    p.write_text(dump_kv(c.to_mapping()))
    assert load_config(str(p)) == c
    assert load_config(str(p), {"nd": 2, "gamma": None}).filter.nd == 2


def test_level_count_resizes_defaults():
    c = build_config({"width": 8, "height": 8, "dt_us": 1, "levels": 1})
    assert c.flow.lambdas == (50.0,) and c.flow.iterations == (50,)


def test_errors():
    with pytest.raises(ConfigError, match="line 2"):
        parse_kv("width=3\nbogus=1\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_kv("width 3\n")
    with pytest.raises(ConfigError):
        build_config({"width": "x", "height": 1, "dt_us": 1})
    with pytest.raises(ParameterError):
        build_config({"width": 1, "height": 1, "dt_us": 1, "nd": 7})
    with pytest.raises(ConfigError):
        build_config({"width": 1, "height": 1, "dt_us": 0})
    with pytest.raises(ConfigError):
        build_config({"width": 1, "height": 1, "dt_us": 1, "queue_capacity": 0})


def test_thread_env_override(monkeypatch):
    monkeypatch.setenv("EVFLOW_THREADS", "3")
    assert build_config({"width": 1, "height": 1, "dt_us": 1, "threads": 8}).threads == 3
    monkeypatch.delenv("EVFLOW_THREADS")
    assert build_config({"width": 1, "height": 1, "dt_us": 1, "threads": 8}).threads == 8
