"""Model parameters and small value types shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

ULTRA_STRONG_THRESHOLD = 0.1
DEFAULT_N_MAX = 60


class ParameterError(ValueError):
    """Raised for physically or numerically invalid inputs."""


@dataclass(frozen=True)
class ModelParams:
    """Physical triple of the Rabi / Jaynes-Cummings models.

    Parameters
    ----------
    delta : float
        Atom transition frequency. Must be >= 0; ``delta == 0`` is accepted
        here and rejected by operations that need a strictly positive value.
    omega : float
        Cavity resonance frequency, > 0.
    g : float
        Coupling constant, any real value.
    """

    delta: float
    omega: float
    g: float = 0.0

    def __post_init__(self):
        for name in ("delta", "omega", "g"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.omega <= 0:
            raise ParameterError(f"omega must be > 0, got {self.omega!r}")
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta!r}")

    def with_g(self, g: float) -> ModelParams:
        return replace(self, g=float(g))

    def scaled(self, c: float) -> ModelParams:
        """Multiply every energy scale by ``c > 0``."""
        if c <= 0:
            raise ParameterError("scale factor must be > 0")
        return ModelParams(c * self.delta, c * self.omega, c * self.g)

    @property
    def detuning(self) -> float:
        """``2*delta - omega``, the JC detuning that enters every JC formula."""
        return 2.0 * self.delta - self.omega

    @property
    def coupling_ratio(self) -> float:
        return self.g / self.omega

    @property
    def is_ultra_strong(self) -> bool:
        return abs(self.coupling_ratio) > ULTRA_STRONG_THRESHOLD

    @property
    def zero_point_energy(self) -> float:
        return 0.5 * self.omega

    def require_positive_delta(self, what: str) -> None:
        if self.delta <= 0:
            raise ParameterError(f"{what} requires delta > 0, got {self.delta!r}")


@dataclass(frozen=True)
class FockTruncation:
    """Retain Fock states ``|0>, ..., |n_max>`` of the single mode."""

    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def mode_dim(self) -> int:
        return self.n_max + 1

    @property
    def full_dim(self) -> int:
        return 2 * (self.n_max + 1)


class ParitySector(IntEnum):
    """Eigenvalue of ``sigma_x (x) (-1)**(a^dag a)`` in the rotated frame.

    ``PLUS`` holds the uncoupled ground state (energy ``-delta``).
    """

    PLUS = 1
    MINUS = -1

    @property
    def label(self) -> str:
        return "+" if self is ParitySector.PLUS else "-"

    @classmethod
    def parse(cls, value) -> ParitySector:
        if isinstance(value, str):
            value = {"+": 1, "+1": 1, "plus": 1, "-": -1, "-1": -1, "minus": -1}.get(value.strip().lower(), value)
        try:
            return cls(int(value))
        except (ValueError, TypeError):
            raise ParameterError(f"not a parity sector: {value!r}") from None
