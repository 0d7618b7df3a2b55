"""Exact Euclidean distance transform and the transfer functions applied to it."""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _backend
from .errors import ParameterError

EPSILON = 1.0 / 255.0


class Transfer(str, Enum):
    INVERSE_EXP = "inverse_exp"
    LINEAR = "linear"
    LINEAR_BOUNDED = "linear_bounded"
    LOG = "log"

    @classmethod
    def parse(cls, name):
        aliases = {"invexp": cls.INVERSE_EXP, "bounded": cls.LINEAR_BOUNDED}
        if isinstance(name, cls):
            return name
        try:
            return aliases.get(name) or cls(name)
        except ValueError:
            raise ParameterError(f"unknown transfer {name!r}") from None


def alpha_from_dsat(d_sat):
    """Spreading parameter reaching the 8-bit ceiling at ``d_sat`` pixels.

    Solves ``1 - exp(-d_sat / alpha) = 1 - 1/255`` for alpha.
    """
    if not d_sat > 0:
        raise ParameterError(f"saturation distance must be positive, got {d_sat}")
    return d_sat / math.log(255.0)


@dataclass(frozen=True)
class TransferParams:
    variant: Transfer = Transfer.INVERSE_EXP
    d_sat: float = 6.0
    bound: float = 6.0
    quantize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Transfer.parse(self.variant))
        if not self.d_sat > 0:
            raise ParameterError(f"saturation distance must be positive, got {self.d_sat}")
        if not self.bound > 0:
            raise ParameterError(f"bound must be positive, got {self.bound}")

    @property
    def alpha(self):
        return alpha_from_dsat(self.d_sat)


@dataclass(frozen=True, eq=False)
class DistanceField:
    geometry: object
    squared: np.ndarray
    values: np.ndarray
    no_edges: bool = False


@dataclass(frozen=True, eq=False)
class DistanceSurface:
    """Transfer output: ``values`` in the variant's own units, ``normalized``
    in [0, 1] and its 8-bit view ``quantized``."""

    geometry: object
    values: np.ndarray
    normalized: np.ndarray
    quantized: np.ndarray
    params: TransferParams

    def intensity(self):
        """Grey levels on a 0-255 scale, as consumed by the flow stage."""
        if self.params.quantize:
            return self.quantized.astype(np.float64)
        return self.normalized * 255.0


def euclidean_dt(edge, threads=1):
    """Distance from every pixel to the closest edge pixel.

    An image without edge pixels yields ``no_edges=True`` with every distance
    set to the frame diagonal instead of infinity.
    """
    bits = edge.bits
    if not bits.any():
        h, w = bits.shape
        diag2 = (h - 1) ** 2 + (w - 1) ** 2 + 1
        sq = np.full(bits.shape, diag2, np.int64)
        return DistanceField(edge.geometry, sq, np.sqrt(sq.astype(np.float64)), True)
    sq = _backend.kernels().edt_squared(bits, threads)
    return DistanceField(edge.geometry, sq, np.sqrt(sq.astype(np.float64)))


def quantize(x):
    return np.clip(np.floor(255.0 * x + 0.5), 0, 255).astype(np.uint8)


def apply_transfer(field, params):
    d = field.values
    variant = params.variant
    if variant is Transfer.INVERSE_EXP:
        values = 1.0 - np.exp(-d / params.alpha)
        normalized = values
    elif variant is Transfer.LINEAR_BOUNDED:
        values = np.minimum(d, params.bound)
        normalized = values / params.bound
    else:
        values = d if variant is Transfer.LINEAR else np.log(d + 1.0)
        peak = values.max()
        normalized = values / peak if peak > 0 else np.zeros_like(values)
    if field.no_edges:
        normalized = np.ones_like(values)
        if variant is Transfer.INVERSE_EXP:
            values = normalized
    return DistanceSurface(field.geometry, values, normalized, quantize(normalized), params)


def distance_surface(edge, params, threads=1):
    return apply_transfer(euclidean_dt(edge, threads), params)
