"""Zero-padded FFT convolver."""

import logging
from functools import lru_cache

import numpy as np
import scipy.fft

from choquard.convolvers.base import BaseConvolver
from choquard.models import KernelTable

logger = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def kernel_spectrum(kernel: KernelTable) -> np.ndarray:
    """Real FFT of the kernel laid out on the doubled periodic grid."""
    logger.debug(f"Computing kernel spectrum for n={kernel.grid.n}, dim={kernel.grid.dim}")
    return scipy.fft.rfftn(kernel.cyclic_layout())


class FFTConvolver(BaseConvolver):
    """Free-space convolution through cyclic convolution on a (2n)^N grid.

    Padding every axis to 2n keeps all differences x_i - x_j in [-(n-1), n-1]
    apart, so the cyclic sum equals the free-space one.
    """

    name = "fft"

    def _convolve(self, data: np.ndarray) -> np.ndarray:
        grid = self.kernel.grid
        padded_shape = tuple(2 * s for s in grid.shape)
        spectrum = scipy.fft.rfftn(data, s=padded_shape)
        spectrum *= kernel_spectrum(self.kernel)
        full = scipy.fft.irfftn(spectrum, s=padded_shape)
        return np.ascontiguousarray(full[tuple(slice(0, s) for s in grid.shape)])
