"""Pipeline configuration and its key-value file format.

One ``key = value`` pair per line, ``#`` starts a comment.  Keys mirror the CLI
flags (``dt_us`` for ``--dt-us`` and so on); list values are comma-separated.
"""
import os
from dataclasses import dataclass, field

from ._backend import default_threads
from .datatypes import SensorGeometry
from .distance import Transfer, TransferParams
from .errors import ConfigError, EvflowError
from .filtering import FilterParams
from .flow import FlowConfig

REQUIRED = ("width", "height", "dt_us")
KEYS = REQUIRED + ("nd", "nf", "dsat", "transfer", "bound", "quantize", "levels", "lambda",
                   "iters", "gamma", "queue_capacity", "threads")


@dataclass(frozen=True)
class PipelineConfig:
    geometry: SensorGeometry
    dt_us: int
    filter: FilterParams = field(default_factory=FilterParams)
    transfer: TransferParams = field(default_factory=TransferParams)
    flow: FlowConfig = field(default_factory=FlowConfig)
    queue_capacity: int = 2
    threads: int = 1

    def __post_init__(self):
        if self.dt_us <= 0:
            raise ConfigError("dt_us must be positive")
        if self.queue_capacity < 1:
            raise ConfigError("queue_capacity must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")

    def to_mapping(self):
        t, f = self.transfer, self.flow
        return {
            "width": self.geometry.width,
            "height": self.geometry.height,
            "dt_us": self.dt_us,
            "nd": self.filter.nd,
            "nf": self.filter.nf,
            "dsat": t.d_sat,
            "transfer": t.variant.value,
            "bound": t.bound,
            "quantize": int(t.quantize),
            "levels": f.levels,
            "lambda": ",".join(repr(x) for x in f.lambdas),
            "iters": ",".join(str(x) for x in f.iterations),
            "gamma": f.gamma,
            "queue_capacity": self.queue_capacity,
            "threads": self.threads,
        }


def parse_kv(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_kv(path):
    with open(path, encoding="utf-8") as fh:
        return parse_kv(fh.read())


def dump_kv(mapping):
    return "".join(f"{k} = {v}\n" for k, v in mapping.items())


def _floats(value):
    if isinstance(value, (list, tuple)):
        return tuple(float(x) for x in value)
    return tuple(float(x) for x in str(value).split(",") if x.strip())


def _ints(value):
    if isinstance(value, (list, tuple)):
        return tuple(int(x) for x in value)
    return tuple(int(x) for x in str(value).split(",") if x.strip())


def build_config(values):
    """Build a :class:`PipelineConfig` from a key-value mapping (strings or numbers)."""
    values = {k: v for k, v in values.items() if v is not None}
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing field: {key}")
    try:
        geometry = SensorGeometry(int(values["width"]), int(values["height"]))
        filt = FilterParams(int(values.get("nd", 1)), int(values.get("nf", 4)))
        transfer = TransferParams(
            Transfer.parse(values.get("transfer", "inverse_exp")),
            float(values.get("dsat", 6.0)),
            float(values.get("bound", 6.0)),
            str(values.get("quantize", "0")).lower() in ("1", "true", "yes", "on"),
        )
        levels = int(values.get("levels", 3))
        defaults = FlowConfig()
        if levels == defaults.levels:
            lambdas, iters = defaults.lambdas, defaults.iterations
        else:
            lambdas, iters = (defaults.lambdas[0],) * levels, (defaults.iterations[0],) * levels
        flow = FlowConfig(
            levels,
            _floats(values["lambda"]) if "lambda" in values else lambdas,
            _ints(values["iters"]) if "iters" in values else iters,
            float(values.get("gamma", defaults.gamma)),
        )
        threads = int(values.get("threads", default_threads()))
        if os.environ.get("EVFLOW_THREADS"):
            threads = default_threads()
        return PipelineConfig(geometry, int(values["dt_us"]), filt, transfer, flow,
                              int(values.get("queue_capacity", 2)), threads)
    except EvflowError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, overrides=None):
    """Read ``path`` (optional) and apply ``overrides``; overrides win."""
    values = load_kv(path) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return build_config(values)
