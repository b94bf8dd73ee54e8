"""Solver module tying the kernel, the minimization and the diagnostics together."""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from choquard.diagnostics import classify_exponents, identity_report
from choquard.errors import ChoquardError, ShapeMismatchError
from choquard.minimizer import gaussian_initializer, minimize_mp, random_initializer, recenter
from choquard.models import (
    EnergyBreakdown,
    Field,
    Grid,
    IdentityReport,
    KernelTable,
    Params,
    SolveConfig,
    SolveResult,
)
from choquard.spectral_core import build_riesz_kernel

logger = logging.getLogger(__name__)

DIAGNOSTICS_KEYS = frozenset(
    {
        "N",
        "alpha",
        "p",
        "q",
        "n",
        "L",
        "label",
        "mp",
        "energy",
        "pohozaev",
        "nehari",
        "scaling_balance",
        "equation_residual",
        "iterations",
        "converged",
        "epsilon_regularization",
        "stencil",
    }
)
ENERGY_KEYS = frozenset({"kinetic", "mass", "nonlocal", "energy"})


def radial_profile(u: Field) -> tuple[np.ndarray, np.ndarray]:
    """Mean of u over h-wide shells around its recentred peak.

    Shell k holds the cells whose integer offset from the peak has length in
    [k, k + 1). Returns the shell midpoints and the mean values, skipping empty
    shells.
    """
    centered, _ = recenter(u)
    grid = u.grid
    offsets = np.indices(grid.shape) - np.reshape(grid.center_index, (-1,) + (1,) * grid.dim)
    shells = np.floor(np.sqrt(np.sum(offsets**2, axis=0))).astype(int).ravel()
    sums = np.bincount(shells, weights=centered.data.ravel())
    counts = np.bincount(shells)
    occupied = counts > 0
    midpoints = (np.arange(counts.size) + 0.5) * grid.h
    return midpoints[occupied], sums[occupied] / counts[occupied]


class GroundStateSolver:
    """Ground state solver class.

    The kernel, the minimization and the identity report are computed on first
    access and cached.
    """

    def __init__(
        self,
        params: Params,
        grid: Grid,
        config: Optional[SolveConfig] = None,
        init: str = "gaussian",
        init_shift: Optional[Sequence[int]] = None,
        kernel: Optional[KernelTable] = None,
    ):
        if params.N != grid.dim:
            raise ShapeMismatchError(
                f"Params dimension {params.N} does not match grid dimension {grid.dim}."
            )
        if kernel is not None and (kernel.grid != grid or kernel.alpha != params.alpha):
            raise ShapeMismatchError("Kernel was built for a different grid or alpha.")
        self._get_initializer(init)

        self.params = params
        self.grid = grid
        self.config = config or SolveConfig()
        self.init = init
        self.init_shift = tuple(init_shift) if init_shift is not None else None
        self._kernel = kernel
        self._result: Optional[SolveResult] = None
        self._report: Optional[IdentityReport] = None
        self.error: str = ""

    @staticmethod
    def _get_initializer(init: str) -> Callable[..., Field]:
        """Get the initializer function based on its name."""
        initializer_map: dict[str, Callable[..., Field]] = {
            "gaussian": lambda grid, seed, shift: gaussian_initializer(grid, shift),
            "random": random_initializer,
        }

        if init not in initializer_map:
            raise ValueError(
                f"Unsupported initializer: {init}. "
                f"Supported initializers: {list(initializer_map.keys())}"
            )

        return initializer_map[init]

    @property
    def kernel(self) -> KernelTable:
        if self._kernel is None:
            self._kernel = build_riesz_kernel(self.grid, self.params.alpha)
        return self._kernel

    def initial_field(self) -> Field:
        initializer = self._get_initializer(self.init)
        return initializer(self.grid, self.config.seed, self.init_shift)

    def solve(self) -> SolveResult:
        """Runs the minimization, keeping the error message on failure."""
        try:
            self._result = minimize_mp(self.initial_field(), self.params, self.kernel, self.config)
        except ChoquardError as e:
            error_message = f"Failed to solve for {self.params.to_dict()}. {e}"
            logger.error(error_message)
            self.error = error_message
            raise
        self._report = None
        return self._result

    @property
    def result(self) -> SolveResult:
        """Solve, if needed, and return the result."""
        if self._result is None:
            self.solve()
        assert self._result is not None
        return self._result

    @property
    def report(self) -> IdentityReport:
        """Identity report of the rescaled solution, with the kinetic stencil of the solve."""
        if self._report is None:
            self._report = identity_report(
                self.result.u, self.params, self.kernel, self.config.epsilon, self.config.stencil
            )
        return self._report

    def radial_profile(self) -> tuple[np.ndarray, np.ndarray]:
        return radial_profile(self.result.u)

    def diagnostics(self) -> dict:
        """Summary of the solve with the keys listed in DIAGNOSTICS_KEYS."""
        result, report = self.result, self.report
        energy = EnergyBreakdown.from_parts(report.kinetic, report.mass, report.nonlocal_)
        return {
            **self.params.to_dict(),
            "n": self.grid.n,
            "L": self.grid.length,
            "label": classify_exponents(self.params).label.value,
            "mp": result.mp,
            "energy": energy.to_dict(),
            "pohozaev": report.normalized_pohozaev,
            "nehari": report.normalized_nehari,
            "scaling_balance": report.normalized_scaling_balance,
            "equation_residual": result.equation_residual,
            "iterations": result.iterations,
            "converged": result.converged,
            "epsilon_regularization": self.config.epsilon,
            "stencil": self.config.stencil,
        }
