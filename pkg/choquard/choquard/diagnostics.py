"""Scaling identities, phase classification and splitting/vanishing experiments."""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.signal

from choquard.errors import GridTooSmallError
from choquard.functionals import absolute_power, d_functional, h1_normsq
from choquard.models import (
    Field,
    IdentityReport,
    KernelTable,
    Params,
    PhaseClassification,
    PhaseLabel,
    VanishingSample,
)
from choquard.spectral_core import translate_field

logger = logging.getLogger(__name__)

Profile = Callable[[tuple[np.ndarray, ...]], np.ndarray]

# relative tolerance for placing p + q exactly on a critical exponent
CRITICAL_RTOL = 1e-12


def identity_report(
    u: Field,
    params: Params,
    kernel: KernelTable,
    epsilon: Optional[float] = None,
    stencil: str = "centered",
) -> IdentityReport:
    kinetic, mass = h1_normsq(u, stencil)
    nonlocal_ = d_functional(u, params, kernel, epsilon)
    return IdentityReport(params=params, kinetic=kinetic, mass=mass, nonlocal_=nonlocal_)


def pohozaev_residual(
    u: Field,
    params: Params,
    kernel: KernelTable,
    epsilon: Optional[float] = None,
    stencil: str = "centered",
) -> IdentityReport:
    """Fills K, M, D; the report's pohozaev entry vanishes for solutions."""
    return identity_report(u, params, kernel, epsilon, stencil)


def nehari_residual(
    u: Field,
    params: Params,
    kernel: KernelTable,
    epsilon: Optional[float] = None,
    stencil: str = "centered",
) -> float:
    """(K + M - (p+q) D) / (K + M)."""
    return identity_report(u, params, kernel, epsilon, stencil).normalized_nehari


def classify_exponents(params: Params) -> PhaseClassification:
    """Places p + q relative to the existence window and returns the sign coefficients.

    a1 = (N-2)/2 - (N+alpha)/(p+q) and a2 = N/2 - (N+alpha)/(p+q) multiply the
    kinetic and mass integrals once the Pohozaev and Nehari identities are combined.
    """
    N, alpha, degree = params.N, params.alpha, params.degree
    lower, upper = params.lower_critical, params.upper_critical
    a1 = (N - 2) / 2 - (N + alpha) / degree
    a2 = N / 2 - (N + alpha) / degree

    if math.isclose(degree, lower, rel_tol=CRITICAL_RTOL):
        label = PhaseLabel.CRITICAL_LOWER
        a2 = 0.0
    elif math.isclose(degree, upper, rel_tol=CRITICAL_RTOL):
        label = PhaseLabel.CRITICAL_UPPER
        a1 = 0.0
    elif degree < lower:
        label = PhaseLabel.NONEXIST_SUBCRITICAL
    elif degree > upper:
        label = PhaseLabel.NONEXIST_SUPERCRITICAL
    else:
        label = PhaseLabel.EXISTS

    return PhaseClassification(
        label=label, a1=a1, a2=a2, degree=degree, lower=lower, upper=upper
    )


def brezis_lieb_defect(
    w: Field,
    v: Field,
    shifts: Sequence[Sequence[int]],
    params: Params,
    kernel: KernelTable,
) -> list[float]:
    """|D(w + v(. - z)) - D(v(. - z)) - D(w)| for each whole-cell shift z."""
    w.check_same_grid(v)
    d_w = d_functional(w, params, kernel)
    defects = []
    for shift in shifts:
        moved = translate_field(v, shift, strict=True)
        d_moved = d_functional(moved, params, kernel)
        defect = abs(d_functional(w + moved, params, kernel) - d_moved - d_w)
        logger.debug(f"Splitting defect at shift {tuple(shift)}: {defect:.6e}")
        defects.append(defect)
    return defects


def pointwise_splitting_defect(w_m: Field, w: Field, r: float, t: float) -> float:
    """h^N sum | |w_m|^r - |w_m - w|^r - |w|^r |^(t/r)."""
    w_m.check_same_grid(w)
    local = np.abs(w_m.data) ** r - np.abs(w_m.data - w.data) ** r - np.abs(w.data) ** r
    return float(np.sum(np.abs(local) ** (t / r))) * w.grid.cell_volume


def bump_profile(radius: float, power: int = 4) -> Profile:
    """Smooth compactly supported bump (1 - |x|^2/R^2)_+^power."""

    def profile(coords: tuple[np.ndarray, ...]) -> np.ndarray:
        s = 1.0 - sum(c**2 for c in coords) / radius**2
        return np.where(s > 0, s, 0.0) ** power

    return profile


def hls_exponents(params: Params) -> tuple[float, float]:
    """Lebesgue exponents (l, t) pairing |u|^q and |u|^p in the HLS bound, with lq = pt."""
    scale = params.degree * params.N / (params.N + params.alpha)
    return scale / params.q, scale / params.p


def predicted_vanishing_slope(params: Params) -> float:
    """Exponent of lambda in D(lambda^(N/2) g(lambda x)) = lambda^k D(g)."""
    return params.N * params.degree / 2 - (params.N + params.alpha)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    slope, _ = np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)
    return float(slope)


def local_mass_concentration(u: Field, radius: float = 1.0, s: float = 2.0) -> float:
    """max_z of the integral of |u|^s over the ball B_radius(z), z on the grid."""
    h = u.grid.h
    reach = int(radius // h)
    offsets = np.arange(-reach, reach + 1) * h
    ball = (sum(a**2 for a in np.ix_(*([offsets] * u.grid.dim))) <= radius**2).astype(float)
    local = scipy.signal.fftconvolve(np.abs(u.data) ** s, ball, mode="same")
    return float(np.max(local)) * u.grid.cell_volume


def _touches_boundary(data: np.ndarray) -> bool:
    for axis in range(data.ndim):
        faces = np.take(data, [0, data.shape[axis] - 1], axis=axis)
        if np.any(faces):
            return True
    return False


def vanishing_decay_test(
    profile: Profile, lambdas: Sequence[float], params: Params, kernel: KernelTable
) -> list[VanishingSample]:
    """D of the L2-preserving dilations v_lambda(x) = lambda^(N/2) g(lambda x).

    Each sample also carries D(v)/(int |v|^t)^((N+alpha)/N), t = N(p+q)/(N+alpha),
    which does not depend on lambda, and the largest mass of |v|^2 in a unit ball.
    """
    grid = kernel.grid
    t = params.N * params.degree / (params.N + params.alpha)
    samples = []
    for lam in lambdas:
        if not 0 < lam <= 1:
            raise ValueError(f"Dilation factors must lie in (0, 1], got {lam}.")
        values = lam ** (grid.dim / 2) * profile(tuple(lam * c for c in grid.coords))
        if _touches_boundary(values):
            error_message = (
                f"Profile dilated by 1/{lam} reaches the boundary of a box of side {grid.length}."
            )
            logger.error(error_message)
            raise GridTooSmallError(error_message)

        v = Field(grid, values)
        value = d_functional(v, params, kernel)
        lebesgue = float(np.sum(absolute_power(v.data, t))) * grid.cell_volume
        ratio = value / lebesgue ** ((params.N + params.alpha) / params.N)
        concentration = local_mass_concentration(v)
        logger.info(f"lambda={lam}: D={value:.6e}, HLS ratio={ratio:.6e}")
        samples.append(
            VanishingSample(lam=lam, d_value=value, hls_ratio=ratio, concentration=concentration)
        )
    return samples
