"""Plain data containers passed between pipeline stages."""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GeometryError

EVENT_DTYPE = np.dtype([("t", "<i8"), ("x", "<i4"), ("y", "<i4"), ("p", "u1")])


class Event(NamedTuple):
    t: int
    x: int
    y: int
    polarity: int


def as_event_array(events):
    """Return ``events`` as a structured array of ``EVENT_DTYPE``."""
    if isinstance(events, np.ndarray) and events.dtype == EVENT_DTYPE:
        return events
    if isinstance(events, np.ndarray) and events.dtype.names:
        out = np.empty(len(events), dtype=EVENT_DTYPE)
        for name in EVENT_DTYPE.names:
            out[name] = events[name]
        return out
    return np.array([tuple(e) for e in events], dtype=EVENT_DTYPE)


@dataclass(frozen=True)
class SensorGeometry:
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise GeometryError(f"sensor geometry must be at least 1x1, got {self.width}x{self.height}")

    @property
    def shape(self):
        return (self.height, self.width)

    def check(self, array, what="array"):
        if array.shape[:2] != self.shape:
            raise GeometryError(f"{what} has shape {array.shape[:2]}, expected {self.shape}")


@dataclass(frozen=True, eq=False)
class EdgeImage:
    """Binary occupancy grid for one accumulation window (row-major, uint8)."""

    geometry: SensorGeometry
    bits: np.ndarray
    window_start: int = 0
    window_length: int = 1
    index: int = 0

    def __post_init__(self):
        self.geometry.check(self.bits, "edge image")
        if self.window_length <= 0:
            raise GeometryError("window length must be positive")

    @property
    def count(self):
        return int(np.count_nonzero(self.bits))

    def with_bits(self, bits):
        return EdgeImage(self.geometry, bits, self.window_start, self.window_length, self.index)


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel displacement in pixels per window.

    ``vectors`` has shape ``(H, W, 2)`` holding ``(u, v)`` as float32;
    ``valid`` is a boolean mask.  Equality compares masks and the bit patterns
    of vectors on valid pixels only.
    """

    geometry: SensorGeometry
    vectors: np.ndarray
    valid: np.ndarray
    window_index: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.geometry.check(self.vectors, "flow vectors")
        self.geometry.check(self.valid, "flow mask")

    @classmethod
    def invalid(cls, geometry, window_index=0):
        return cls(geometry, np.zeros(geometry.shape + (2,), np.float32),
                   np.zeros(geometry.shape, bool), window_index)

    @classmethod
    def constant(cls, geometry, u, v, valid=None, window_index=0):
        vec = np.empty(geometry.shape + (2,), np.float32)
        vec[..., 0] = u
        vec[..., 1] = v
        if valid is None:
            valid = np.ones(geometry.shape, bool)
        return cls(geometry, vec, np.asarray(valid, bool), window_index)

    @property
    def u(self):
        return self.vectors[..., 0]

    @property
    def v(self):
        return self.vectors[..., 1]

    @property
    def valid_count(self):
        return int(np.count_nonzero(self.valid))

    def __eq__(self, other):
        if not isinstance(other, FlowField):
            return NotImplemented
        if self.geometry != other.geometry or not np.array_equal(self.valid, other.valid):
            return False
        a = np.ascontiguousarray(self.vectors, np.float32).view(np.uint32)[self.valid]
        b = np.ascontiguousarray(other.vectors, np.float32).view(np.uint32)[other.valid]
        return bool(np.array_equal(a, b))

    __hash__ = None
