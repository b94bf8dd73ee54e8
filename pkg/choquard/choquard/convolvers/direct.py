"""Brute-force convolver used as ground truth."""

import logging

import numpy as np

from choquard.convolvers.base import BaseConvolver
from choquard.errors import OracleRefusedError
from choquard.models import KernelTable

logger = logging.getLogger(__name__)

MAX_ORACLE_POINTS = 10**5
# number of target-source pairs evaluated per vectorized block
_BLOCK_PAIRS = 2**21


class DirectConvolver(BaseConvolver):
    """O(M^2) double sum over all pairs of grid points."""

    name = "direct"

    def __init__(self, kernel: KernelTable):
        if kernel.grid.size > MAX_ORACLE_POINTS:
            error_message = (
                f"Direct convolution refused: {kernel.grid.size} points exceed the limit of "
                f"{MAX_ORACLE_POINTS}."
            )
            logger.error(error_message)
            raise OracleRefusedError(error_message)
        super().__init__(kernel)

    def _convolve(self, data: np.ndarray) -> np.ndarray:
        grid = self.kernel.grid
        flat = data.reshape(-1)
        indices = np.stack(np.unravel_index(np.arange(grid.size), grid.shape), axis=1)
        out = np.empty(grid.size)
        block = max(1, _BLOCK_PAIRS // grid.size)
        for start in range(0, grid.size, block):
            targets = indices[start : start + block]
            offsets = targets[:, None, :] - indices[None, :, :] + (grid.n - 1)
            weights = self.kernel.values[tuple(np.moveaxis(offsets, -1, 0))]
            out[start : start + block] = weights @ flat
        return out.reshape(grid.shape)
