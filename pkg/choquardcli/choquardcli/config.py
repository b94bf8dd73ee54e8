"""Run configuration parsing for the choquard CLI."""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from choquard.errors import ChoquardError
from choquard.models import Grid, Params, SolveConfig

logger = logging.getLogger(__name__)

THREADS_ENV = "CHOQUARD_THREADS"

TOP_LEVEL_KEYS = {
    "params",
    "grid",
    "solver",
    "output",
    "phase",
    "check",
    "convolve",
    "bltest",
    "vanish",
}


class ConfigError(ChoquardError, ValueError):
    """The run configuration is malformed."""


@dataclass(frozen=True)
class PhaseBlock:
    p_min: float = 1.1
    p_max: float = 5.0
    p_steps: int = 5
    q_min: float = 1.1
    q_max: float = 5.0
    q_steps: int = 5
    solve: bool = True


@dataclass(frozen=True)
class ConvolveBlock:
    method: str = "fft"
    source: str = "random"
    seed: int = 0
    compare: bool = False


@dataclass(frozen=True)
class BLTestBlock:
    shifts: Optional[tuple[tuple[int, ...], ...]] = None
    bump_radius: float = 1.5


@dataclass(frozen=True)
class VanishBlock:
    lambdas: tuple[float, ...] = (1.0, 0.5, 0.25)
    bump_radius: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    params: Optional[Params] = None
    grid: Optional[Grid] = None
    solver: SolveConfig = field(default_factory=SolveConfig)
    init: str = "gaussian"
    init_shift: Optional[tuple[int, ...]] = None
    output: str = "."
    phase: PhaseBlock = field(default_factory=PhaseBlock)
    snapshot: Optional[str] = None
    convolve: ConvolveBlock = field(default_factory=ConvolveBlock)
    bltest: BLTestBlock = field(default_factory=BLTestBlock)
    vanish: VanishBlock = field(default_factory=VanishBlock)

    def require_params(self) -> Params:
        if self.params is None:
            raise ConfigError("Missing required block 'params'.")
        return self.params

    def require_grid(self) -> Grid:
        if self.grid is None:
            raise ConfigError("Missing required block 'grid'.")
        return self.grid

    def bltest_shifts(self, dim: int) -> tuple[tuple[int, ...], ...]:
        if self.bltest.shifts is not None:
            for shift in self.bltest.shifts:
                if len(shift) != dim:
                    raise ConfigError(
                        f"Field 'bltest.shifts': shift {shift} does not have {dim} components."
                    )
            return self.bltest.shifts
        return tuple((k,) + (0,) * (dim - 1) for k in (4, 6, 8))


def _block(raw: dict, name: str, allowed: set[str]) -> dict:
    block = raw.get(name, {})
    if block is None:
        return {}
    if not isinstance(block, dict):
        raise ConfigError(f"Block '{name}' must be an object.")
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"Unknown key(s) {unknown} in block '{name}'.")
    return block


def _number(block: dict, key: str, name: str, default: Any = None) -> Any:
    value = block.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"Field '{name}.{key}' must be a number, got {value!r}.")
    return float(value)


def _integer(block: dict, key: str, name: str, default: Any = None) -> Any:
    value = block.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"Field '{name}.{key}' must be an integer, got {value!r}.")
    return value


def _flag(block: dict, key: str, name: str, default: bool) -> bool:
    value = block.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"Field '{name}.{key}' must be true or false, got {value!r}.")
    return value


def _text(block: dict, key: str, name: str, default: Optional[str]) -> Optional[str]:
    value = block.get(key, default)
    if value is not None and not isinstance(value, str):
        raise ConfigError(f"Field '{name}.{key}' must be a string, got {value!r}.")
    return value


def _int_list(value: Any, name: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"Field '{name}' must be a list of integers, got {value!r}.")
    return tuple(value)


def parse_run_config(raw: Any) -> RunConfig:
    """Validates a decoded JSON document and builds the run configuration."""
    if not isinstance(raw, dict):
        raise ConfigError("Configuration must be a JSON object.")
    unknown = sorted(set(raw) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"Unknown top-level key(s) {unknown}.")

    params = None
    if "params" in raw:
        block = _block(raw, "params", {"N", "alpha", "p", "q"})
        missing = sorted({"N", "alpha", "p", "q"} - set(block))
        if missing:
            raise ConfigError(f"Missing field(s) {missing} in block 'params'.")
        try:
            params = Params(
                N=_integer(block, "N", "params"),
                alpha=_number(block, "alpha", "params"),
                p=_number(block, "p", "params"),
                q=_number(block, "q", "params"),
            )
        except ChoquardError as e:
            raise ConfigError(f"Block 'params': {e}") from e

    grid = None
    if "grid" in raw:
        block = _block(raw, "grid", {"n", "L"})
        missing = sorted({"n", "L"} - set(block))
        if missing:
            raise ConfigError(f"Missing field(s) {missing} in block 'grid'.")
        if params is None:
            raise ConfigError("Block 'grid' needs block 'params' for the dimension.")
        try:
            grid = Grid(
                dim=params.N,
                n=_integer(block, "n", "grid"),
                length=_number(block, "L", "grid"),
            )
        except ChoquardError as e:
            raise ConfigError(f"Block 'grid': {e}") from e

    block = _block(
        raw,
        "solver",
        {
            "tol",
            "max_iters",
            "step0",
            "bb_steps",
            "seed",
            "epsilon_regularization",
            "stencil",
            "init",
            "init_shift",
        },
    )
    defaults = SolveConfig()
    settings = dict(
        tol=_number(block, "tol", "solver", defaults.tol),
        max_iters=_integer(block, "max_iters", "solver", defaults.max_iters),
        step0=_number(block, "step0", "solver", defaults.step0),
        bb_steps=_flag(block, "bb_steps", "solver", defaults.bb_steps),
        seed=_integer(block, "seed", "solver", defaults.seed),
        epsilon=_number(block, "epsilon_regularization", "solver"),
        stencil=_text(block, "stencil", "solver", defaults.stencil),
    )
    try:
        solver = SolveConfig(**settings)
    except ValueError as e:
        raise ConfigError(f"Block 'solver': {e}") from e
    init = _text(block, "init", "solver", "gaussian")
    init_shift = None
    if "init_shift" in block:
        init_shift = _int_list(block["init_shift"], "solver.init_shift")

    output = raw.get("output", ".")
    if not isinstance(output, str):
        raise ConfigError(f"Field 'output' must be a string, got {output!r}.")

    block = _block(raw, "phase", set(PhaseBlock.__dataclass_fields__))
    phase_defaults = PhaseBlock()
    phase = PhaseBlock(
        p_min=_number(block, "p_min", "phase", phase_defaults.p_min),
        p_max=_number(block, "p_max", "phase", phase_defaults.p_max),
        p_steps=_integer(block, "p_steps", "phase", phase_defaults.p_steps),
        q_min=_number(block, "q_min", "phase", phase_defaults.q_min),
        q_max=_number(block, "q_max", "phase", phase_defaults.q_max),
        q_steps=_integer(block, "q_steps", "phase", phase_defaults.q_steps),
        solve=_flag(block, "solve", "phase", phase_defaults.solve),
    )
    if phase.p_steps < 1 or phase.q_steps < 1:
        raise ConfigError("Fields 'phase.p_steps' and 'phase.q_steps' must be at least 1.")

    block = _block(raw, "check", {"snapshot"})
    snapshot = _text(block, "snapshot", "check", None)

    block = _block(raw, "convolve", set(ConvolveBlock.__dataclass_fields__))
    convolve = ConvolveBlock(
        method=_text(block, "method", "convolve", "fft") or "fft",
        source=_text(block, "source", "convolve", "random") or "random",
        seed=_integer(block, "seed", "convolve", 0),
        compare=_flag(block, "compare", "convolve", False),
    )

    block = _block(raw, "bltest", {"shifts", "bump_radius"})
    shifts = None
    if "shifts" in block:
        if not isinstance(block["shifts"], list) or not block["shifts"]:
            raise ConfigError("Field 'bltest.shifts' must be a non-empty list of shifts.")
        shifts = tuple(_int_list(s, "bltest.shifts") for s in block["shifts"])
    bltest = BLTestBlock(
        shifts=shifts,
        bump_radius=_number(block, "bump_radius", "bltest", BLTestBlock.bump_radius),
    )

    block = _block(raw, "vanish", {"lambdas", "bump_radius"})
    lambdas = block.get("lambdas", list(VanishBlock.lambdas))
    if (
        not isinstance(lambdas, list)
        or not lambdas
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in lambdas)
    ):
        raise ConfigError(f"Field 'vanish.lambdas' must be a list of numbers, got {lambdas!r}.")
    vanish = VanishBlock(
        lambdas=tuple(float(v) for v in lambdas),
        bump_radius=_number(block, "bump_radius", "vanish", VanishBlock.bump_radius),
    )

    return RunConfig(
        params=params,
        grid=grid,
        solver=solver,
        init=init or "gaussian",
        init_shift=init_shift,
        output=output,
        phase=phase,
        snapshot=snapshot,
        convolve=convolve,
        bltest=bltest,
        vanish=vanish,
    )


def load_run_config(path: str) -> RunConfig:
    """Reads and validates a JSON run configuration."""
    try:
        with open(path, "r") as config_file:
            raw = json.load(config_file)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"Malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}."
        ) from e
    except OSError as e:
        raise ConfigError(f"Could not read {path}: {e}.") from e
    return parse_run_config(raw)


def thread_cap() -> int:
    """Worker cap for concurrent solves, from the CHOQUARD_THREADS environment variable."""
    value = os.getenv(THREADS_ENV)
    if value is None or value == "":
        return 1
    try:
        threads = int(value)
    except ValueError:
        threads = 0
    if threads < 1:
        error_message = f"{THREADS_ENV} must be a positive integer, got {value!r}."
        logger.error(error_message)
        raise ConfigError(error_message)
    return threads
