"""Discrete H1 norm, nonlocal interaction, equation right-hand side and energy."""

import logging
import math
from typing import Optional

import numpy as np

from choquard.convolvers.fft import FFTConvolver
from choquard.errors import NonsmoothExponentError, ShapeMismatchError
from choquard.models import EnergyBreakdown, Field, KernelTable, Params, check_stencil

logger = logging.getLogger(__name__)


def centered_difference(data: np.ndarray, axis: int, h: float) -> np.ndarray:
    """(u[i+1] - u[i-1]) / 2h along one axis, with zero values outside the box."""
    pad_width = [(1, 1) if a == axis else (0, 0) for a in range(data.ndim)]
    padded = np.moveaxis(np.pad(data, pad_width), axis, 0)
    return np.moveaxis((padded[2:] - padded[:-2]) / (2 * h), 0, axis)


def face_difference(data: np.ndarray, axis: int, h: float) -> np.ndarray:
    """(u[i] - u[i-1]) / h on the n + 1 cell faces of one axis, zero outside the box.

    Each entry is the centred difference at a face midpoint, so it is second
    order there and couples every cell to its nearest neighbours.
    """
    pad_width = [(1, 1) if a == axis else (0, 0) for a in range(data.ndim)]
    padded = np.moveaxis(np.pad(data, pad_width), axis, 0)
    return np.moveaxis((padded[1:] - padded[:-1]) / h, 0, axis)


def _face_divergence(faces: np.ndarray, axis: int, h: float) -> np.ndarray:
    moved = np.moveaxis(faces, axis, 0)
    return np.moveaxis((moved[1:] - moved[:-1]) / h, 0, axis)


def gradient_components(data: np.ndarray, h: float, stencil: str = "centered") -> list[np.ndarray]:
    check_stencil(stencil)
    difference = centered_difference if stencil == "centered" else face_difference
    return [difference(data, axis, h) for axis in range(data.ndim)]


def laplacian_array(data: np.ndarray, h: float, stencil: str = "centered") -> np.ndarray:
    check_stencil(stencil)
    if stencil == "compact":
        # (u[i+1] - 2u[i] + u[i-1]) / h^2
        return sum(
            _face_divergence(face_difference(data, axis, h), axis, h) for axis in range(data.ndim)
        )
    # the centered difference is antisymmetric, so D(D u) is the negative of D^T D u
    return sum(
        centered_difference(centered_difference(data, axis, h), axis, h)
        for axis in range(data.ndim)
    )


def discrete_laplacian(u: Field, stencil: str = "centered") -> Field:
    """Laplacian whose quadratic form is the kinetic term of h1_normsq."""
    return u.with_data(laplacian_array(u.data, u.grid.h, stencil))


def h1_normsq(u: Field, stencil: str = "centered") -> tuple[float, float]:
    """Returns (kinetic, mass) = (sum |grad_h u|^2 h^N, sum u^2 h^N).

    "centered" differentiates at cell centres with the wide stencil, "compact"
    at cell faces; the wide stencil leaves the 2^N sub-lattices of every other
    cell uncoupled.
    """
    weight = u.grid.cell_volume
    kinetic = sum(
        float(np.sum(component**2))
        for component in gradient_components(u.data, u.grid.h, stencil)
    )
    mass = float(np.sum(u.data**2))
    return kinetic * weight, mass * weight


def absolute_power(data: np.ndarray, s: float, epsilon: Optional[float] = None) -> np.ndarray:
    """|u|^s, or (u^2 + eps^2)^(s/2) - eps^s when regularized."""
    if epsilon is None:
        return np.abs(data) ** s
    return (data**2 + epsilon**2) ** (s / 2) - epsilon**s


def signed_power(data: np.ndarray, s: float, epsilon: Optional[float] = None) -> np.ndarray:
    """|u|^(s-2) u taken as sign(u)|u|^(s-1), or (u^2 + eps^2)^((s-2)/2) u when regularized."""
    if epsilon is None:
        return np.sign(data) * np.abs(data) ** (s - 1)
    return (data**2 + epsilon**2) ** ((s - 2) / 2) * data


def check_smooth_exponents(params: Params, epsilon: Optional[float]) -> None:
    if epsilon is None and not params.solver_admissible:
        error_message = (
            f"The nonlinearity is not differentiable for p={params.p}, q={params.q}; "
            "both exponents must exceed 1 unless epsilon regularization is enabled."
        )
        logger.error(error_message)
        raise NonsmoothExponentError(error_message)


def nonlocal_terms(
    u: Field,
    params: Params,
    kernel: KernelTable,
    epsilon: Optional[float] = None,
    with_rhs: bool = True,
) -> tuple[float, Optional[Field]]:
    """Returns D(u) and, when requested, the right-hand side, sharing the convolutions."""
    if u.grid != kernel.grid:
        raise ShapeMismatchError(f"Field grid {u.grid} does not match kernel grid {kernel.grid}.")
    convolver = FFTConvolver(kernel)
    power_p = absolute_power(u.data, params.p, epsilon)
    potential_p = convolver.convolve_array(power_p)
    if params.p == params.q:
        power_q, potential_q = power_p, potential_p
    else:
        power_q = absolute_power(u.data, params.q, epsilon)
        potential_q = convolver.convolve_array(power_q) if with_rhs else None

    value = float(np.sum(potential_p * power_q)) * u.grid.cell_volume
    if not with_rhs:
        return value, None

    rhs = params.q * potential_p * signed_power(u.data, params.q, epsilon)
    rhs += params.p * potential_q * signed_power(u.data, params.p, epsilon)
    return value, u.with_data(rhs)


def d_functional(
    u: Field, params: Params, kernel: KernelTable, epsilon: Optional[float] = None
) -> float:
    """D(u) = h^N sum (I_alpha * |u|^p) |u|^q."""
    value, _ = nonlocal_terms(u, params, kernel, epsilon, with_rhs=False)
    return value


def nonlinear_rhs(
    u: Field, params: Params, kernel: KernelTable, epsilon: Optional[float] = None
) -> Field:
    """q (I_alpha * |u|^p)|u|^(q-2)u + p (I_alpha * |u|^q)|u|^(p-2)u, the derivative of D."""
    check_smooth_exponents(params, epsilon)
    _, rhs = nonlocal_terms(u, params, kernel, epsilon)
    assert rhs is not None
    return rhs


def energy_and_grad(
    u: Field,
    params: Params,
    kernel: KernelTable,
    epsilon: Optional[float] = None,
    stencil: str = "centered",
) -> tuple[EnergyBreakdown, Field]:
    """Energy E(u) = (K + M)/2 - D(u) and its gradient (-Lap_h + 1)u - rhs(u)."""
    check_smooth_exponents(params, epsilon)
    kinetic, mass = h1_normsq(u, stencil)
    value, rhs = nonlocal_terms(u, params, kernel, epsilon)
    assert rhs is not None
    grad = u.data - laplacian_array(u.data, u.grid.h, stencil) - rhs.data
    return EnergyBreakdown.from_parts(kinetic, mass, value), u.with_data(grad)


def equation_residual(
    u: Field,
    params: Params,
    kernel: KernelTable,
    epsilon: Optional[float] = None,
    stencil: str = "centered",
) -> float:
    """||(-Lap_h + 1)u - rhs(u)||_2 / ||u||_H1, zero for the zero field."""
    breakdown, grad = energy_and_grad(u, params, kernel, epsilon, stencil)
    h1 = breakdown.kinetic + breakdown.mass
    if h1 == 0:
        return 0.0
    return grad.l2_norm() / math.sqrt(h1)
