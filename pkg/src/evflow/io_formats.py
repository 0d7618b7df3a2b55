"""Event CSV, flow files (Middlebury ``.flo`` layout), PNG renderings and masks."""
import io
import os
import struct

import numpy as np

from .datatypes import EVENT_DTYPE, FlowField, SensorGeometry, as_event_array
from .errors import FlowFormatError, GeometryError, OrderingError, ParseError

FLO_MAGIC = 202021.25
FLO_SENTINEL = np.float32(1e10)
SENTINEL_THRESHOLD = 1e9
GRAY = 128


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("ascii")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("ascii")
    data = source.read()
    return data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data


def _parse_line(line, lineno):
    parts = line.split(",")
    if len(parts) != 4:
        raise ParseError(f"expected 4 comma-separated fields, got {len(parts)}", lineno)
    try:
        t, x, y, p = (int(s) for s in parts)
    except ValueError:
        raise ParseError(f"non-integer field in {line.strip()!r}", lineno) from None
    return t, x, y, p


def parse_event_stream(source, geometry):
    """Parse ``t,x,y,p`` lines into a structured array of ``EVENT_DTYPE``.

    ``source`` may be bytes, a path, or a text/binary file object.  Lines
    starting with ``#`` and blank lines are skipped.
    """
    text = _read_text(source)
    rows, linenos = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append(line)
        linenos.append(lineno)
    if not rows:
        return np.empty(0, dtype=EVENT_DTYPE)

    try:
        data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",", dtype=np.int64, ndmin=2)
        if data.shape[1] != 4:
            raise ValueError
    except ValueError:
        data = np.array([_parse_line(r, n) for r, n in zip(rows, linenos)], dtype=np.int64)
    linenos = np.asarray(linenos)

    t, x, y, p = data.T
    bad = np.flatnonzero((t < 0) | ((p != 0) & (p != 1)))
    if bad.size:
        raise ParseError(f"invalid timestamp or polarity in {rows[bad[0]]!r}", int(linenos[bad[0]]))
    bad = np.flatnonzero((x < 0) | (x >= geometry.width) | (y < 0) | (y >= geometry.height))
    if bad.size:
        i = bad[0]
        raise GeometryError(
            f"line {linenos[i]}: pixel ({x[i]}, {y[i]}) outside {geometry.width}x{geometry.height}")
    bad = np.flatnonzero(np.diff(t) < 0)
    if bad.size:
        i = bad[0] + 1
        raise OrderingError(f"line {linenos[i]}: timestamp {t[i]} precedes {t[i - 1]}")

    out = np.empty(len(data), dtype=EVENT_DTYPE)
    out["t"], out["x"], out["y"], out["p"] = t, x, y, p
    return out


def format_events(events):
    ev = as_event_array(events)
    if len(ev) == 0:
        return ""
    cols = np.stack([ev["t"], ev["x"], ev["y"], ev["p"]], axis=1).astype(np.int64)
    buf = io.StringIO()
    np.savetxt(buf, cols, fmt="%d", delimiter=",")
    return buf.getvalue()


def write_events(events, sink):
    text = format_events(events)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sink.write(text.encode("ascii") if isinstance(sink, io.RawIOBase | io.BufferedIOBase) else text)


# -- flow files -------------------------------------------------------------

def flow_to_bytes(field):
    h, w = field.geometry.shape
    data = np.array(field.vectors, dtype="<f4", copy=True)
    data[~field.valid] = FLO_SENTINEL
    return struct.pack("<fii", FLO_MAGIC, w, h) + data.tobytes()


def flow_from_bytes(buf, window_index=0):
    if len(buf) < 12:
        raise FlowFormatError("truncated header")
    magic, w, h = struct.unpack("<fii", buf[:12])
    if magic != FLO_MAGIC:
        raise FlowFormatError(f"bad magic tag {magic!r}")
    if w < 1 or h < 1:
        raise FlowFormatError(f"bad dimensions {w}x{h}")
    need = 12 + 8 * w * h
    if len(buf) < need:
        raise FlowFormatError(f"truncated payload: {len(buf)} bytes, need {need}")
    vec = np.frombuffer(buf, dtype="<f4", count=2 * w * h, offset=12).reshape(h, w, 2)
    vec = vec.astype(np.float32)
    invalid = (np.abs(vec) > SENTINEL_THRESHOLD).any(axis=2) | ~np.isfinite(vec).all(axis=2)
    vec[invalid] = 0.0
    return FlowField(SensorGeometry(w, h), vec, ~invalid, window_index)


def write_flow(field, sink):
    payload = flow_to_bytes(field)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(payload)
    else:
        sink.write(payload)


def read_flow(source, window_index=0):
    if isinstance(source, (bytes, bytearray)):
        buf = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            buf = fh.read()
    else:
        buf = source.read()
    return flow_from_bytes(buf, window_index)


def flow_filename(index, prefix="flow"):
    return f"{prefix}_{index:05d}.flo"


# -- visualisation ----------------------------------------------------------

def flow_to_rgb(field):
    """Colour-code a flow field: hue is direction, saturation is magnitude.

    Magnitude is normalised by the 99th percentile over valid pixels, so the
    strongest vectors are fully saturated; zero flow is white and invalid
    pixels are medium gray.
    """
    from matplotlib.colors import hsv_to_rgb

    u = field.vectors[..., 0].astype(np.float64)
    v = field.vectors[..., 1].astype(np.float64)
    mag = np.hypot(u, v)
    valid = field.valid
    scale = float(np.percentile(mag[valid], 99)) if valid.any() else 0.0
    hsv = np.zeros(field.geometry.shape + (3,))
    hsv[..., 0] = np.mod(np.arctan2(v, u), 2 * np.pi) / (2 * np.pi)
    hsv[..., 1] = np.clip(mag / scale, 0.0, 1.0) if scale > 0 else 0.0
    hsv[..., 2] = 1.0
    rgb = np.round(hsv_to_rgb(hsv) * 255.0).astype(np.uint8)
    rgb[~valid] = GRAY
    return rgb


def _save_png(array, sink):
    from PIL import Image

    Image.fromarray(array).save(sink, format="PNG")


def render_flow_png(field, sink):
    _save_png(flow_to_rgb(field), sink)


def write_surface_png(surface, sink):
    """Dump the 8-bit view of a distance surface as grayscale."""
    _save_png(np.ascontiguousarray(surface.quantized, dtype=np.uint8), sink)


def load_mask(path, geometry):
    """Read an exclusion mask PNG; non-zero pixels are excluded."""
    from PIL import Image

    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim == 3:
        arr = arr.max(axis=2)
    geometry.check(arr, "exclusion mask")
    return arr != 0
