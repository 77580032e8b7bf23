"""Ornstein-Uhlenbeck position process and unit-rate Poisson spin flips.

The position process is ``dX = -omega X dt + dW``: stationary law
``N(0, 1/(2 omega))`` and autocovariance ``exp(-omega |t-s|) / (2 omega)``.
Over a segment of length ``dt`` the pair (endpoint, time integral) is jointly
Gaussian given the start, so both are drawn exactly without time stepping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit

# Below this value of omega*dt the variance formulas switch to power series.
_SERIES_CUTOFF = 0.05


@njit
def segment_coefficients(u, omega):
    """Coefficients of the exact segment law for ``u = omega * dt``.

    Returns ``(decay, int_coef, sd_x, reg, sd_i)`` such that, with independent
    standard normals ``z1, z2``::

        x_end = decay * x + sd_x * z1
        integral = int_coef * x + reg * sd_x * z1 + sd_i * z2
    """
    a = -math.expm1(-u)  # 1 - exp(-u)
    decay = 1.0 - a
    int_coef = a / omega
    var_x = a * (2.0 - a) / (2.0 * omega)
    # Var(integral | x_end) * omega**3
    if u < _SERIES_CUTOFF:
        u2 = u * u
        cond = u2 * u * (1.0 / 12.0 - u2 * (1.0 / 120.0 - u2 * (17.0 / 20160.0 - u2 * (31.0 / 362880.0))))
    else:
        cond = u - a - 0.5 * a * a - 0.5 * a * a * a / (2.0 - a)
    if cond < 0.0:
        cond = 0.0
    # Cov(x_end, integral) / Var(x_end)
    reg = a / (omega * (2.0 - a)) if a > 0.0 else 0.0
    return decay, int_coef, math.sqrt(var_x), reg, math.sqrt(cond / omega**3)


def segment_covariance(dt: float, omega: float) -> np.ndarray:
    """Covariance of ``(x_end, integral)`` given the start point."""
    u = omega * dt
    a = -math.expm1(-u)
    var_x = a * (2.0 - a) / (2.0 * omega)
    cov = a * a / (2.0 * omega**2)
    if u < _SERIES_CUTOFF:
        u2 = u * u
        b = u2 * u * (1 / 3 - u / 4 + 7 * u2 / 60 - u2 * u / 24 + 31 * u2 * u2 / 2520 - u2 * u2 * u / 320)
    else:
        b = u - a - 0.5 * a * a
    return np.array([[var_x, cov], [cov, b / omega**3]])


@dataclass(frozen=True)
class OUModel:
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be > 0")

    @property
    def stationary_variance(self) -> float:
        return 0.5 / self.omega

    def autocovariance(self, lag):
        return np.exp(-self.omega * np.abs(lag)) * self.stationary_variance

    def ground_state(self, x):
        """Normalized oscillator ground state ``(omega/pi)**0.25 exp(-omega x**2 / 2)``."""
        return (self.omega / np.pi) ** 0.25 * np.exp(-0.5 * self.omega * np.asarray(x) ** 2)

    def mehler_kernel(self, x, y, t):
        """Integral kernel of ``exp(-t (omega a^dag a))`` in position space."""
        w = self.omega
        q = np.exp(-w * t)
        s = -np.expm1(-2.0 * w * t)
        x, y = np.asarray(x), np.asarray(y)
        return np.sqrt(w / (np.pi * s)) * np.exp(w * (4 * x * y * q - (x * x + y * y) * (1 + q * q)) / (2 * s))

    def transition_density(self, x, y, t):
        """Density of ``X_t`` at ``y`` given ``X_0 = x``, by ground-state transform of the Mehler kernel."""
        return self.ground_state(y) * self.mehler_kernel(x, y, t) / self.ground_state(x)

    def sample_stationary(self, rng: np.random.Generator, size=None):
        return math.sqrt(self.stationary_variance) * rng.standard_normal(size)


def sample_ou_segment(x_start, dt: float, omega: float, rng: np.random.Generator, size=None):
    """Draw ``(X_dt, int_0^dt X_s ds)`` exactly, given ``X_0 = x_start``.

    ``x_start`` may be an array; ``size`` defaults to its shape.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x = np.asarray(x_start, dtype=np.float64)
    if size is None:
        size = x.shape
    decay, int_coef, sd_x, reg, sd_i = segment_coefficients(omega * dt, omega)
    z1 = rng.standard_normal(size)
    z2 = rng.standard_normal(size)
    noise_x = sd_x * z1
    return decay * x + noise_x, int_coef * x + reg * noise_x + sd_i * z2


@dataclass(frozen=True)
class JumpRecord:
    """Spin flips of one path on ``[0, t]``."""

    jump_times: np.ndarray
    sigma_0: int
    t: float = field(default=math.inf)

    @property
    def n_t(self) -> int:
        return int(self.jump_times.size)

    def sigma_at(self, s: float) -> int:
        """``sigma_0 * (-1)**N_s`` with ``N_s`` counting jumps at times ``<= s``."""
        n_s = int(np.searchsorted(self.jump_times, s, side="right"))
        return self.sigma_0 * (-1 if n_s % 2 else 1)


def sample_jumps(t: float, sigma_0: int, rng: np.random.Generator) -> JumpRecord:
    """Unit-intensity Poisson flips on ``[0, t]``."""
    if not t > 0:
        raise ValueError("t must be > 0")
    if sigma_0 not in (-1, 1):
        raise ValueError("sigma_0 must be +1 or -1")
    n = rng.poisson(t)
    return JumpRecord(np.sort(rng.uniform(0.0, t, n)), int(sigma_0), t)


def draw_jump_batch(n: int, t: float, rng: np.random.Generator):
    """Jump records of ``n`` independent paths in flat form.

    Returns ``(counts, offsets, times)``; the jumps of path ``i`` are
    ``times[offsets[i]:offsets[i] + counts[i]]`` in ascending order.
    """
    counts = rng.poisson(t, n).astype(np.int64)
    offsets = np.zeros(n, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    times = rng.uniform(0.0, t, int(counts.sum()))
    owner = np.repeat(np.arange(n), counts)
    times = times[np.lexsort((times, owner))]
    return counts, offsets, times
