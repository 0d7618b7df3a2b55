"""Denoising and filling of edge images over the 4-neighbourhood.

Both passes read the input image and write a fresh output, so results never
depend on scan order.  Out-of-frame neighbours count as non-edge.
"""
from dataclasses import dataclass

from . import _backend
from .errors import ParameterError


@dataclass(frozen=True)
class FilterParams:
    nd: int = 1
    nf: int = 4

    def __post_init__(self):
        if not 0 <= self.nd <= 4:
            raise ParameterError(f"denoising threshold must be in [0, 4], got {self.nd}")
        if not 1 <= self.nf <= 5:
            raise ParameterError(f"filling threshold must be in [1, 5], got {self.nf}")


LOW_RES = FilterParams(nd=1, nf=4)
HIGH_RES = FilterParams(nd=2, nf=3)


def denoise(edge, nd, threads=1):
    """Drop edge pixels with fewer than ``nd`` edge pixels among their 4 neighbours."""
    if not 0 <= nd <= 4:
        raise ParameterError(f"denoising threshold must be in [0, 4], got {nd}")
    return edge.with_bits(_backend.kernels().denoise(edge.bits, nd, threads))


def fill(edge, nf, threads=1):
    """Set non-edge pixels having at least ``nf`` edge pixels among their 4 neighbours."""
    if not 1 <= nf <= 5:
        raise ParameterError(f"filling threshold must be in [1, 5], got {nf}")
    return edge.with_bits(_backend.kernels().fill(edge.bits, nf, threads))


def denoise_fill(edge, params, threads=1, keep_denoised=False):
    """``fill(denoise(edge))``; with ``keep_denoised`` also return the denoised image."""
    denoised = denoise(edge, params.nd, threads)
    filled = fill(denoised, params.nf, threads)
    if keep_denoised:
        return denoised, filled
    return filled
