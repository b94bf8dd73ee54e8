"""Constrained minimization of the H1 norm on the manifold D(u) = 1."""

import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from choquard.diagnostics import classify_exponents
from choquard.errors import (
    DegenerateFieldError,
    InvalidExponentError,
    NotOnManifoldError,
    RefusedRegimeError,
    SolverStalledError,
)
from choquard.functionals import (
    check_smooth_exponents,
    d_functional,
    equation_residual,
    h1_normsq,
    laplacian_array,
    nonlocal_terms,
)
from choquard.models import (
    Field,
    Grid,
    KernelTable,
    Params,
    PhaseLabel,
    SolveConfig,
    SolveResult,
    TraceEntry,
)
from choquard.spectral_core import translate_field

logger = logging.getLogger(__name__)

MIN_STEP = 1e-14
BB_STEP_BOUNDS = (1e-10, 1e3)
# smallest relative decrease of the objective that floating point can resolve
RESOLVABLE_DECREASE = 8 * np.finfo(float).eps
MANIFOLD_TOL = 1e-8


def gaussian_initializer(grid: Grid, shift: Optional[Sequence[int]] = None) -> Field:
    """exp(-|x - c|^2 / 2) with c displaced from the origin by whole cells."""
    shift = tuple(shift) if shift is not None else (0,) * grid.dim
    if len(shift) != grid.dim:
        raise ValueError(f"Shift {shift} does not have {grid.dim} components.")
    distance_squared = sum((c - s * grid.h) ** 2 for c, s in zip(grid.coords, shift))
    return Field(grid, np.exp(-distance_squared / 2))


def random_initializer(
    grid: Grid, seed: int, shift: Optional[Sequence[int]] = None
) -> Field:
    """Gaussian modulated by seeded uniform noise, still positive."""
    rng = np.random.default_rng(seed)
    base = gaussian_initializer(grid, shift)
    return base.with_data(base.data * (1.0 + 0.25 * rng.random(grid.shape)))


def project_to_constraint(
    u: Field, params: Params, kernel: KernelTable, epsilon: Optional[float] = None
) -> Field:
    """Rescales u so that D(s u) = 1."""
    value = d_functional(u, params, kernel, epsilon)
    if u.is_zero() or not value > 0:
        error_message = "Cannot project a field with vanishing nonlocal interaction."
        logger.error(error_message)
        raise DegenerateFieldError(error_message)

    guess = value ** (-1 / params.degree)
    if epsilon is None:
        return u * guess

    # regularized powers are not homogeneous, so solve D(s u) = 1 for s
    def excess(s: float) -> float:
        return d_functional(u * s, params, kernel, epsilon) - 1.0

    low, high = guess, guess
    while excess(low) > 0:
        low /= 2
    while excess(high) < 0:
        high *= 2
    return u * brentq(excess, low, high, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _objective(u: Field, stencil: str) -> float:
    kinetic, mass = h1_normsq(u, stencil)
    return kinetic + mass


def _tangent_gradient(
    u: Field,
    objective: float,
    params: Params,
    kernel: KernelTable,
    epsilon: Optional[float],
    stencil: str,
) -> tuple[np.ndarray, float, float]:
    """Gradient of K + M with its component along D'(u) removed.

    Returns the tangent gradient, its norm relative to ||u||_H1 and |D(u) - 1|.
    """
    value, rhs = nonlocal_terms(u, params, kernel, epsilon)
    assert rhs is not None
    gradient = 2.0 * (u.data - laplacian_array(u.data, u.grid.h, stencil))
    normal = rhs.data
    normal_sq = float(np.vdot(normal, normal))
    if normal_sq > 0:
        gradient = gradient - float(np.vdot(gradient, normal)) / normal_sq * normal
    norm = math.sqrt(float(np.vdot(gradient, gradient)) * u.grid.cell_volume)
    return gradient, norm / math.sqrt(objective), abs(value - 1.0)


def _absolute_step(u: Field, step: float, gradient: np.ndarray) -> Field:
    """|u - step * gradient|; the discrete Dirichlet form never grows under |.|."""
    return u.with_data(np.abs(u.data - step * gradient))


def minimize_mp(
    init: Field, params: Params, kernel: KernelTable, cfg: Optional[SolveConfig] = None
) -> SolveResult:
    """Projected gradient descent for M_p = inf {K + M : D(u) = 1}.

    Each step moves along the tangent gradient, takes the absolute value and
    rescales back onto the constraint; the step is halved until the objective
    decreases. Once the decrease falls below floating-point resolution, a step
    that keeps the objective and lowers the tangent gradient is accepted instead.
    """
    cfg = cfg or SolveConfig()
    classification = classify_exponents(params)
    if classification.label != PhaseLabel.EXISTS:
        error_message = (
            f"No ground state for p+q={params.degree:g} ({classification.label.value}): "
            f"the existence window is ({classification.lower:g}, {classification.upper:g})."
        )
        logger.error(error_message)
        raise RefusedRegimeError(error_message, label=classification.label)
    check_smooth_exponents(params, cfg.epsilon)
    if init.is_zero():
        error_message = "Initial field is identically zero."
        logger.error(error_message)
        raise DegenerateFieldError(error_message)
    if cfg.epsilon is not None:
        logger.warning(f"Running with epsilon regularization {cfg.epsilon}.")

    logger.info(
        f"Minimizing on n={init.grid.n}, L={init.grid.length}, N={params.N}, "
        f"alpha={params.alpha}, p={params.p}, q={params.q}, stencil={cfg.stencil}"
    )
    u = project_to_constraint(abs(init), params, kernel, cfg.epsilon)
    objective = _objective(u, cfg.stencil)
    gradient, relative, drift = _tangent_gradient(
        u, objective, params, kernel, cfg.epsilon, cfg.stencil
    )
    trace = [TraceEntry(objective, 0.0, drift)]

    step = cfg.step0
    previous: Optional[tuple[np.ndarray, np.ndarray]] = None
    converged = False
    for iteration in range(cfg.max_iters):
        if relative <= cfg.tol:
            converged = True
            break

        if cfg.bb_steps and previous is not None:
            s = u.data - previous[0]
            y = gradient - previous[1]
            sy = float(np.vdot(s, y))
            step = float(np.vdot(s, s)) / sy if sy > 0 else 2 * step
            step = min(max(step, BB_STEP_BOUNDS[0]), BB_STEP_BOUNDS[1])

        accepted = None
        while step >= MIN_STEP:
            stepped = _absolute_step(u, step, gradient)
            if not stepped.is_zero():
                trial = project_to_constraint(stepped, params, kernel, cfg.epsilon)
                trial_objective = _objective(trial, cfg.stencil)
                decrease = objective - trial_objective
                if decrease >= 0:
                    state = _tangent_gradient(
                        trial, trial_objective, params, kernel, cfg.epsilon, cfg.stencil
                    )
                    if decrease > RESOLVABLE_DECREASE * objective or state[1] < relative:
                        accepted = trial, trial_objective, state
                        break
            step /= 2

        if accepted is None:
            error_message = (
                f"Descent stalled after {iteration} iterations: no decreasing step above "
                f"{MIN_STEP:g} (relative tangent gradient {relative:.3e})."
            )
            logger.error(error_message)
            raise SolverStalledError(error_message)

        previous = (u.data, gradient)
        u, objective, (gradient, relative, drift) = accepted
        trace.append(TraceEntry(objective, step, drift))
        logger.debug(
            f"iteration {iteration + 1}: objective={objective:.12e} step={step:.3e} "
            f"gradient={relative:.3e}"
        )
        if not cfg.bb_steps:
            step *= 2

    if not converged:
        logger.warning(
            f"No convergence within {cfg.max_iters} iterations "
            f"(relative tangent gradient {relative:.3e})."
        )

    mp = objective
    solution = rescale_to_solution(u, mp, params, kernel, cfg.epsilon)
    residual = equation_residual(solution, params, kernel, cfg.epsilon, cfg.stencil)
    logger.info(
        f"Finished after {len(trace) - 1} iterations: mp={mp:.10g}, converged={converged}, "
        f"equation residual={residual:.3e}"
    )
    return SolveResult(
        w=u,
        mp=mp,
        u=solution,
        params=params,
        trace=trace,
        converged=converged,
        equation_residual=residual,
        stencil=cfg.stencil,
    )


def rescale_to_solution(
    w: Field, mp: float, params: Params, kernel: KernelTable, epsilon: Optional[float] = None
) -> Field:
    """Multiplies the constrained minimizer by c = (mp/(p+q))^(1/(p+q-2)).

    The Lagrange condition (-Lap_h + 1)w = mp/(p+q) rhs(w) then becomes the
    equation itself for u = c w.
    """
    if params.degree == 2:
        raise InvalidExponentError("Rescaling is undefined for p + q = 2.")
    drift = abs(d_functional(w, params, kernel, epsilon) - 1.0)
    if drift > MANIFOLD_TOL:
        error_message = f"Field is off the constraint manifold: |D(w) - 1| = {drift:.3e}."
        logger.error(error_message)
        raise NotOnManifoldError(error_message)
    return w * scaling_constant(mp, params)


def scaling_constant(mp: float, params: Params) -> float:
    return (mp / params.degree) ** (1 / (params.degree - 2))


def recenter(u: Field) -> tuple[Field, tuple[int, ...]]:
    """Moves the largest |u| (first in row-major order) to the cell nearest the origin."""
    if u.is_zero():
        error_message = "Cannot recenter the zero field."
        logger.error(error_message)
        raise DegenerateFieldError(error_message)
    peak = np.unravel_index(int(np.argmax(np.abs(u.data))), u.grid.shape)
    shift = tuple(int(c - p) for c, p in zip(u.grid.center_index, peak))
    return translate_field(u, shift), shift
