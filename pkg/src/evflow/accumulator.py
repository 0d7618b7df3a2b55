"""Accumulate events into binary edge images over fixed windows."""
import numpy as np

from .datatypes import EdgeImage, as_event_array
from .errors import GeometryError, OrderingError


class Accumulator:
    """Streaming window builder.

    Windows are half-open ``[t0 + k*dt, t0 + (k+1)*dt)`` with ``t0`` the first
    event's timestamp.  :meth:`push` returns every window closed by the new
    chunk (including all-zero windows inside event gaps); :meth:`finish`
    returns the last, still open window.
    """

    def __init__(self, dt_us, geometry):
        if dt_us <= 0:
            raise GeometryError("accumulation window must be positive")
        self.dt = int(dt_us)
        self.geometry = geometry
        self.t0 = None
        self.last_t = None
        self.current = 0
        self._buf = np.zeros(geometry.shape, np.uint8)

    def _emit(self):
        bits, self._buf = self._buf, np.zeros(self.geometry.shape, np.uint8)
        img = EdgeImage(self.geometry, bits, self.t0 + self.current * self.dt, self.dt, self.current)
        self.current += 1
        return img

    def push(self, events):
        ev = as_event_array(events)
        if len(ev) == 0:
            return []
        t = ev["t"]
        if (self.last_t is not None and t[0] < self.last_t) or np.any(np.diff(t) < 0):
            raise OrderingError(f"events out of order near window {self.current}")
        if self.t0 is None:
            self.t0 = int(t[0])
        self.last_t = int(t[-1])
        win = (t - self.t0) // self.dt
        out = []
        bounds = np.searchsorted(win, np.arange(self.current, int(win[-1]) + 1), side="left")
        bounds = np.append(bounds, len(ev))
        for i, k in enumerate(range(self.current, int(win[-1]) + 1)):
            sl = ev[bounds[i]:bounds[i + 1]]
            self._buf[sl["y"], sl["x"]] = 1
            if k < win[-1]:
                out.append(self._emit())
        return out

    def finish(self):
        if self.t0 is None:
            return []
        return [self._emit()]


def window_count(events, dt_us):
    ev = as_event_array(events)
    if len(ev) == 0:
        return 0
    return int((ev["t"][-1] - ev["t"][0]) // dt_us) + 1


def accumulate(events, dt_us, geometry):
    """Split ordered events into a list of :class:`EdgeImage`, one per window."""
    acc = Accumulator(dt_us, geometry)
    return acc.push(events) + acc.finish()


def split_windows(events, dt_us):
    """Yield the event slice belonging to each window (same rule as ``accumulate``)."""
    ev = as_event_array(events)
    if len(ev) == 0:
        return []
    win = (ev["t"] - ev["t"][0]) // dt_us
    bounds = np.searchsorted(win, np.arange(int(win[-1]) + 2), side="left")
    return [ev[bounds[k]:bounds[k + 1]] for k in range(int(win[-1]) + 1)]
