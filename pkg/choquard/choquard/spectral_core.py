"""Grids, the tabulated Riesz kernel and free-space convolution."""

import logging
import math
from typing import Sequence, Type

import numpy as np
from scipy.special import gamma

from choquard.convolvers.base import BaseConvolver
from choquard.convolvers.direct import DirectConvolver
from choquard.convolvers.fft import FFTConvolver
from choquard.errors import InvalidExponentError, ShiftOutOfRangeError
from choquard.models import Field, Grid, KernelTable

logger = logging.getLogger(__name__)


def build_grid(dim: int, n: int, length: float) -> Grid:
    """Builds the cell-centred grid of the box [-L/2, L/2)^dim."""
    return Grid(dim=int(dim), n=int(n), length=float(length))


def riesz_normalization(dim: int, alpha: float) -> float:
    """A_alpha = Gamma((N - alpha)/2) / (pi^(N/2) 2^alpha Gamma(alpha/2))."""
    return float(gamma((dim - alpha) / 2) / (math.pi ** (dim / 2) * 2**alpha * gamma(alpha / 2)))


def unit_ball_volume(dim: int) -> float:
    return float(math.pi ** (dim / 2) / gamma(dim / 2 + 1))


def singular_cell_value(dim: int, alpha: float, h: float) -> float:
    """Average of A_alpha |x|^(alpha - N) over the ball of volume h^N centred at 0."""
    omega = unit_ball_volume(dim)
    radius = h / omega ** (1 / dim)
    return riesz_normalization(dim, alpha) * dim * omega * radius**alpha / (alpha * h**dim)


def build_riesz_kernel(grid: Grid, alpha: float) -> KernelTable:
    """Tabulates the Riesz kernel at every offset between two grid points."""
    if not 0 < alpha < grid.dim:
        error_message = f"alpha must lie in (0, {grid.dim}), got {alpha}."
        logger.error(error_message)
        raise InvalidExponentError(error_message)

    normalization = riesz_normalization(grid.dim, alpha)
    offsets = np.arange(-(grid.n - 1), grid.n) * grid.h
    axes = np.ix_(*([offsets] * grid.dim))
    distance_squared = sum(a**2 for a in axes)

    origin = (grid.n - 1,) * grid.dim
    with np.errstate(divide="ignore"):
        values = normalization * distance_squared ** ((alpha - grid.dim) / 2)
    values[origin] = singular_cell_value(grid.dim, alpha, grid.h)

    logger.info(
        f"Built Riesz kernel: dim={grid.dim}, n={grid.n}, alpha={alpha}, "
        f"{values.size} offsets."
    )
    return KernelTable(grid=grid, alpha=float(alpha), normalization=normalization, values=values)


def get_convolver(method: str, kernel: KernelTable) -> BaseConvolver:
    """Returns the convolver registered under the given name."""
    convolver_map: dict[str, Type[BaseConvolver]] = {
        "direct": DirectConvolver,
        "fft": FFTConvolver,
    }

    if method not in convolver_map:
        raise ValueError(
            f"Unsupported convolver: {method}. Supported convolvers: {list(convolver_map.keys())}"
        )

    return convolver_map[method](kernel)


def riesz_convolve(f: Field, kernel: KernelTable) -> Field:
    """I_alpha * f on the grid through the zero-padded fast path."""
    return FFTConvolver(kernel).convolve(f)


def direct_convolve_oracle(f: Field, kernel: KernelTable) -> Field:
    """Same discrete sum as riesz_convolve, evaluated pair by pair."""
    return DirectConvolver(kernel).convolve(f)


def translate_array(data: np.ndarray, shift: Sequence[int]) -> np.ndarray:
    """Whole-cell translation without wrap-around; vacated cells are zero."""
    out = np.zeros_like(data)
    source = []
    target = []
    for size, s in zip(data.shape, shift):
        if abs(s) >= size:
            return out
        source.append(slice(max(0, -s), size - max(0, s)))
        target.append(slice(max(0, s), size - max(0, -s)))
    out[tuple(target)] = data[tuple(source)]
    return out


def translate_field(f: Field, shift: Sequence[int], strict: bool = False) -> Field:
    """Moves f by whole cells; with strict=True, losing nonzero values is an error."""
    if len(shift) != f.grid.dim:
        raise ValueError(f"Shift {tuple(shift)} does not have {f.grid.dim} components.")
    shifted = translate_array(f.data, shift)
    if strict and np.count_nonzero(shifted) != np.count_nonzero(f.data):
        error_message = f"Shift {tuple(shift)} moves part of the support out of the box."
        logger.error(error_message)
        raise ShiftOutOfRangeError(error_message)
    return f.with_data(shifted)
