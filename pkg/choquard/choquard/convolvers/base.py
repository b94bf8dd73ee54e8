"""Convolvers' base class definition."""

from abc import ABC, abstractmethod

import numpy as np

from choquard.errors import ShapeMismatchError
from choquard.models import Field, KernelTable


class BaseConvolver(ABC):
    """Base convolver class from which the Riesz convolution backends inherit.

    A convolver computes g(x_i) = h^N * sum_j K(x_i - x_j) f(x_j) over the box,
    with f taken as zero outside it.
    """

    name: str = ""

    def __init__(self, kernel: KernelTable):
        self.kernel = kernel

    def convolve(self, f: Field) -> Field:
        """Convolves a field with the tabulated kernel."""
        if f.grid != self.kernel.grid:
            raise ShapeMismatchError(
                f"Field grid {f.grid} does not match kernel grid {self.kernel.grid}."
            )
        return Field(f.grid, self.convolve_array(f.data))

    def convolve_array(self, data: np.ndarray) -> np.ndarray:
        """Convolves raw grid data; the caller guarantees the shape."""
        return self._convolve(data) * self.kernel.grid.cell_volume

    @abstractmethod
    def _convolve(self, data: np.ndarray) -> np.ndarray:
        """Returns sum_j K(x_i - x_j) data_j without the h^N weight."""
        raise NotImplementedError()
