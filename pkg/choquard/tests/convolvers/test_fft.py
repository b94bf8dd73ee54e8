"""Unit tests for the zero-padded FFT convolver."""

import numpy as np

from choquard.convolvers.fft import FFTConvolver, kernel_spectrum
from choquard.models import Field


def test_kernel_spectrum_is_cached(unit_kernel):
    """Test that the kernel spectrum is computed once per kernel."""
    kernel_spectrum.cache_clear()

    first = kernel_spectrum(unit_kernel)
    second = kernel_spectrum(unit_kernel)
    assert first is second
    assert kernel_spectrum.cache_info().hits == 1
    assert first.shape == (12, 12, 7)


def test_no_wrap_around(unit_kernel, make_spikes):
    """Test that opposite corners only interact through the free-space kernel."""
    grid = unit_kernel.grid
    corners = make_spikes(grid, (0, 0, 0), (5, 5, 5))

    g = FFTConvolver(unit_kernel).convolve(corners)
    expected = unit_kernel.origin_value + unit_kernel.at_offset((5, 5, 5))
    np.testing.assert_allclose(g.data[0, 0, 0], expected, rtol=1e-12)
    np.testing.assert_allclose(g.data[5, 5, 5], expected, rtol=1e-12)


def test_convolve_array_matches_convolve(unit_kernel, random_field):
    """Test that the array and Field entry points agree."""
    convolver = FFTConvolver(unit_kernel)

    from_array = convolver.convolve_array(random_field.data)
    assert isinstance(convolver.convolve(random_field), Field)
    np.testing.assert_array_equal(convolver.convolve(random_field).data, from_array)
    assert convolver.name == "fft"
