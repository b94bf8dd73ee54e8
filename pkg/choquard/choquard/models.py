"""Data classes shared across the library."""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from choquard.errors import (
    InvalidExponentError,
    InvalidGridError,
    ShapeMismatchError,
    UnsupportedDimensionError,
)

# kinetic-term discretizations: the wide (u[i+1] - u[i-1])/2h difference at cell
# centres, or the face difference (u[i+1] - u[i])/h at cell faces
STENCILS = ("centered", "compact")


def check_stencil(stencil: str) -> None:
    if stencil not in STENCILS:
        raise ValueError(f"Unsupported stencil: {stencil}. Supported stencils: {list(STENCILS)}")


@dataclass(frozen=True)
class Grid:
    """Cell-centred discretization of the box [-L/2, L/2)^dim."""

    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim < 3:
            raise UnsupportedDimensionError(f"Dimension must be at least 3, got {self.dim}.")
        if self.n < 2:
            raise InvalidGridError(f"Grid needs at least 2 points per axis, got {self.n}.")
        if not self.length > 0 or not math.isfinite(self.length):
            raise InvalidGridError(f"Box length must be positive and finite, got {self.length}.")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        """Quadrature weight h^N of the midpoint rule."""
        return self.h**self.dim

    @property
    def center_index(self) -> tuple[int, ...]:
        """Index of the cell nearest the origin (the upper one when n is even)."""
        return (self.n // 2,) * self.dim

    @cached_property
    def axis_coords(self) -> np.ndarray:
        return -self.length / 2 + (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of every grid point, one array per axis."""
        return tuple(np.meshgrid(*([self.axis_coords] * self.dim), indexing="ij"))

    @cached_property
    def radius_squared(self) -> np.ndarray:
        return sum(c**2 for c in self.coords)


@dataclass(frozen=True)
class Params:
    """Dimension N, Riesz order alpha and the two exponents p, q."""

    N: int
    alpha: float
    p: float
    q: float

    def __post_init__(self):
        if self.N < 3:
            raise UnsupportedDimensionError(f"Dimension must be at least 3, got {self.N}.")
        if not 0 < self.alpha < self.N:
            raise InvalidExponentError(f"alpha must lie in (0, {self.N}), got {self.alpha}.")
        if not (self.p > 0 and self.q > 0):
            raise InvalidExponentError(
                f"Exponents must be positive, got p={self.p}, q={self.q}."
            )

    @property
    def degree(self) -> float:
        """Homogeneity degree p + q of the nonlocal interaction."""
        return self.p + self.q

    @property
    def lower_critical(self) -> float:
        return 2 * (self.N + self.alpha) / self.N

    @property
    def upper_critical(self) -> float:
        return 2 * (self.N + self.alpha) / (self.N - 2)

    @property
    def solver_admissible(self) -> bool:
        return self.p > 1 and self.q > 1

    def swapped(self) -> "Params":
        return Params(N=self.N, alpha=self.alpha, p=self.q, q=self.p)

    def to_dict(self) -> dict:
        return {"N": self.N, "alpha": self.alpha, "p": self.p, "q": self.q}


@dataclass(frozen=True, eq=False)
class Field:
    """Real function sampled on a grid.

    The data is copied on construction and kept read-only, so a Field behaves
    like a value.
    """

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.size != self.grid.size:
            raise ShapeMismatchError(
                f"Field has {data.size} values but the grid has {self.grid.size} points."
            )
        data = data.reshape(self.grid.shape)
        if not np.all(np.isfinite(data)):
            raise ValueError("Field values must be finite.")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def with_data(self, data: np.ndarray) -> "Field":
        return Field(self.grid, data)

    def check_same_grid(self, other: "Field") -> None:
        if self.grid != other.grid:
            raise ShapeMismatchError(f"Grid mismatch: {self.grid} vs {other.grid}.")

    def inner(self, other: "Field") -> float:
        """Discrete L2 inner product with weight h^N."""
        self.check_same_grid(other)
        return float(np.vdot(self.data, other.data)) * self.grid.cell_volume

    def l2_norm(self) -> float:
        return math.sqrt(self.inner(self))

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def __add__(self, other: "Field") -> "Field":
        self.check_same_grid(other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other: "Field") -> "Field":
        self.check_same_grid(other)
        return self.with_data(self.data - other.data)

    def __mul__(self, scalar: float) -> "Field":
        return self.with_data(self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self.with_data(-self.data)

    def __abs__(self) -> "Field":
        return self.with_data(np.abs(self.data))


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Riesz kernel tabulated over all grid offsets.

    values[o + (n - 1)] holds the kernel at offset o for each axis, so the table
    has (2n - 1)^N entries.
    """

    grid: Grid
    alpha: float
    normalization: float
    values: np.ndarray

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def origin_value(self) -> float:
        return float(self.values[(self.grid.n - 1,) * self.grid.dim])

    def at_offset(self, offset: tuple[int, ...]) -> float:
        return float(self.values[tuple(o + self.grid.n - 1 for o in offset)])

    def cyclic_layout(self) -> np.ndarray:
        """Kernel placed on the (2n)^N periodic grid, offset o at index o mod 2n."""
        n = self.grid.n
        padded = np.zeros((2 * n,) * self.grid.dim)
        padded[(slice(0, 2 * n - 1),) * self.grid.dim] = self.values
        return np.roll(padded, shift=-(n - 1), axis=tuple(range(self.grid.dim)))


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    mass: float
    nonlocal_: float
    energy: float

    @classmethod
    def from_parts(cls, kinetic: float, mass: float, nonlocal_: float) -> "EnergyBreakdown":
        return cls(kinetic, mass, nonlocal_, 0.5 * (kinetic + mass) - nonlocal_)

    def to_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "mass": self.mass,
            "nonlocal": self.nonlocal_,
            "energy": self.energy,
        }


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-8
    max_iters: int = 50000
    step0: float = 0.1
    bb_steps: bool = True
    seed: int = 0
    epsilon: Optional[float] = None
    stencil: str = "compact"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}.")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}.")
        if not self.step0 > 0:
            raise ValueError(f"step0 must be positive, got {self.step0}.")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive when set, got {self.epsilon}.")
        check_stencil(self.stencil)


class TraceEntry(NamedTuple):
    objective: float
    step: float
    constraint_drift: float


@dataclass
class SolveResult:
    w: Field
    mp: float
    u: Field
    params: Params
    trace: list[TraceEntry] = field(default_factory=list)
    converged: bool = False
    equation_residual: float = float("nan")
    stencil: str = "compact"

    @property
    def iterations(self) -> int:
        return max(len(self.trace) - 1, 0)


class PhaseLabel(str, Enum):
    EXISTS = "Exists"
    NONEXIST_SUBCRITICAL = "NonexistSubcritical"
    NONEXIST_SUPERCRITICAL = "NonexistSupercritical"
    CRITICAL_LOWER = "CriticalLower"
    CRITICAL_UPPER = "CriticalUpper"


@dataclass(frozen=True)
class PhaseClassification:
    label: PhaseLabel
    a1: float
    a2: float
    degree: float
    lower: float
    upper: float

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "a1": self.a1,
            "a2": self.a2,
            "p+q": self.degree,
            "lower": self.lower,
            "upper": self.upper,
        }


@dataclass(frozen=True)
class IdentityReport:
    """Integrals of a field and the two scaling identities built from them."""

    params: Params
    kinetic: float
    mass: float
    nonlocal_: float

    @property
    def pohozaev(self) -> float:
        N, alpha = self.params.N, self.params.alpha
        return (N - 2) / 2 * self.kinetic + N / 2 * self.mass - (N + alpha) * self.nonlocal_

    @property
    def nehari(self) -> float:
        return self.kinetic + self.mass - self.params.degree * self.nonlocal_

    @property
    def scaling_balance(self) -> float:
        """a1*K + a2*M, the combination of both identities that vanishes for solutions."""
        N, alpha, degree = self.params.N, self.params.alpha, self.params.degree
        a1 = (N - 2) / 2 - (N + alpha) / degree
        a2 = N / 2 - (N + alpha) / degree
        return a1 * self.kinetic + a2 * self.mass

    def _normalize(self, value: float) -> float:
        denominator = self.kinetic + self.mass
        return value / denominator if denominator > 0 else 0.0

    @property
    def normalized_pohozaev(self) -> float:
        return self._normalize(self.pohozaev)

    @property
    def normalized_nehari(self) -> float:
        return self._normalize(self.nehari)

    @property
    def normalized_scaling_balance(self) -> float:
        return self._normalize(self.scaling_balance)

    def to_dict(self) -> dict:
        return {
            **self.params.to_dict(),
            "kinetic": self.kinetic,
            "mass": self.mass,
            "nonlocal": self.nonlocal_,
            "pohozaev": self.pohozaev,
            "nehari": self.nehari,
            "scaling_balance": self.scaling_balance,
            "normalized_pohozaev": self.normalized_pohozaev,
            "normalized_nehari": self.normalized_nehari,
            "normalized_scaling_balance": self.normalized_scaling_balance,
        }


class VanishingSample(NamedTuple):
    lam: float
    d_value: float
    hls_ratio: float
    concentration: float
