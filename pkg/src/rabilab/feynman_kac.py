"""Monte Carlo evaluation of ``<f, exp(-tH) g>`` from the Feynman-Kac formula.

``H`` acts on scalar functions ``f(x, sigma)`` of a position and a spin
``sigma = +-1``, with inner product ``sum_sigma int f g dmu`` where ``mu`` is
the stationary OU law. For ``delta > 0``::

    <f, e^{-tH} g> = e^t E[ conj f(X_0, s_0) g(X_t, s_t)
                           exp(-g sqrt(2 omega) int_0^t s_r X_r dr) delta^{N_t} ]

and for ``delta = 0`` only flip-free paths contribute, with ``e^t P(N_t = 0) = 1``.
The spin sum is realized as twice the average over a uniform ``s_0``.

Sampling is split into fixed-size chunks. Chunk ``c`` draws from
``Philox(SeedSequence([seed, c]))`` and partial sums are merged in chunk
order, so results depend only on ``(seed, n_samples)`` and not on the
number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm

from .ou import OUModel, draw_jump_batch
from .params import ModelParams, ParameterError
from .paths import integrate_paths, normal_offsets

CHUNK_SIZE = 1 << 16
RNG_NAME = "Philox4x64 keyed by SeedSequence([seed, chunk_index])"


class FKVarianceError(RuntimeError):
    """The Monte Carlo ratio is unusable (non-positive or non-finite)."""


def chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    if seed < 0:
        raise ParameterError("seed must be a non-negative integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


def _chunks(n_samples: int):
    if n_samples < 2:
        raise ParameterError("n_samples must be >= 2")
    n_chunks = -(-n_samples // CHUNK_SIZE)
    return [(c, min(CHUNK_SIZE, n_samples - c * CHUNK_SIZE)) for c in range(n_chunks)]


def _map_chunks(fn, n_samples: int, workers: int | None):
    jobs = _chunks(n_samples)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    total = parts[0]
    for p in parts[1:]:
        total = total.merge(p)
    return total


@dataclass
class PathBatch:
    x0: np.ndarray
    sigma0: np.ndarray
    checkpoints: np.ndarray
    action: np.ndarray
    x_at: np.ndarray
    sigma_at: np.ndarray
    flips_at: np.ndarray


def simulate_paths(params: ModelParams, checkpoints, n: int, rng: np.random.Generator, flips: bool = True) -> PathBatch:
    """Sample ``n`` paths from the stationary start up to ``checkpoints[-1]``.

    With ``flips=False`` every path keeps its initial spin.
    """
    checkpoints = np.atleast_1d(np.asarray(checkpoints, dtype=np.float64))
    ou = OUModel(params.omega)
    x0 = ou.sample_stationary(rng, n)
    sigma0 = 1 - 2 * rng.integers(0, 2, n, dtype=np.int64)
    if flips:
        counts, joff, jtimes = draw_jump_batch(n, float(checkpoints[-1]), rng)
    else:
        counts, joff, jtimes = np.zeros(n, np.int64), np.zeros(n, np.int64), np.empty(0)
    noff, total = normal_offsets(counts, checkpoints.size)
    normals = rng.standard_normal(total)
    action, x_at, sigma_at, flips_at = integrate_paths(
        x0, sigma0, counts, joff, jtimes, checkpoints, normals, noff, params.omega
    )
    return PathBatch(x0, sigma0, checkpoints, action, x_at, sigma_at, flips_at)


def log_weights(params: ModelParams, batch: PathBatch) -> np.ndarray:
    """Log of ``2 e^t exp(-g sqrt(2 omega) action) delta^{N_t}`` per path and checkpoint."""
    c = params.g * math.sqrt(2.0 * params.omega)
    logw = math.log(2.0) - c * batch.action
    if params.delta > 0:
        logw = logw + batch.checkpoints[None, :] + batch.flips_at * math.log(params.delta)
    return logw


@dataclass
class _Sums:
    """Power sums of ``exp(logw - shift) * value``; merging rescales to the larger shift."""

    n: int
    shift: float
    s1: np.ndarray
    s2: np.ndarray
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, logw: np.ndarray, values: np.ndarray, cross: bool = False) -> _Sums:
        finite = logw[np.isfinite(logw)]
        shift = float(finite.max()) if finite.size else 0.0
        scale = np.exp(logw - shift)
        v = (scale[:, None] if np.ndim(values) == 2 else scale) * values
        s2 = v.T @ np.conj(v) if cross else np.sum(np.abs(v) ** 2, axis=0)
        return cls(v.shape[0], shift, v.sum(axis=0), s2)

    def merge(self, other: _Sums) -> _Sums:
        s = max(self.shift, other.shift)
        a, b = math.exp(self.shift - s), math.exp(other.shift - s)
        extra = {k: self.extra[k] + other.extra[k] for k in self.extra}
        return _Sums(
            self.n + other.n, s, a * self.s1 + b * other.s1, a * a * self.s2 + b * b * other.s2, extra
        )

    def log_mean(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.s1 / self.n) + self.shift

    def mean(self) -> np.ndarray:
        return self.s1 / self.n * math.exp(self.shift)

    def covariance(self) -> np.ndarray:
        """Sample (co)variance, ddof=1, in units scaled by ``exp(2 shift)``."""
        if self.s2.ndim == 2:
            m = np.outer(self.s1, np.conj(self.s1)) / self.n
        else:
            m = np.abs(self.s1) ** 2 / self.n
        return np.real(self.s2 - m) / (self.n - 1)

    def stderr(self) -> np.ndarray:
        var = self.covariance()
        if var.ndim == 2:
            var = np.diag(var)
        return np.sqrt(np.maximum(var, 0.0) / self.n) * math.exp(self.shift)


@dataclass(frozen=True)
class FKEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class GroundEnergyEstimate:
    energy: float
    stderr: float
    n_samples: int
    seed: int
    t: float
    dt_ratio: float
    log_ratio: float


def _check_common(params: ModelParams, t: float, n_samples: int):
    if not t > 0:
        raise ParameterError("t must be > 0")
    if params.delta < 0:  # pragma: no cover - ModelParams already rejects this
        raise ParameterError("delta must be >= 0")
    _chunks(n_samples)


def fk_matrix_element(
    f: Callable,
    g: Callable,
    params: ModelParams,
    t: float,
    n_samples: int,
    seed: int,
    workers: int | None = None,
) -> FKEstimate:
    """Estimate ``<f, exp(-tH) g>``.

    ``f`` and ``g`` are called as ``f(x, sigma)`` on arrays and must return
    arrays of the same shape.
    """
    _check_common(params, t, n_samples)
    flips = params.delta > 0

    def chunk(c, n):
        batch = simulate_paths(params, [t], n, chunk_generator(seed, c), flips)
        vals = np.conj(f(batch.x0, batch.sigma0)) * g(batch.x_at[:, 0], batch.sigma_at[:, 0])
        return _Sums.from_values(log_weights(params, batch)[:, 0], np.asarray(vals))

    sums = _map_chunks(chunk, n_samples, workers)
    mean = sums.mean()
    mean = mean.item() if np.iscomplexobj(mean) and mean.imag != 0 else float(np.real(mean))
    return FKEstimate(mean, float(sums.stderr()), n_samples, seed)


def fk_ground_energy(
    params: ModelParams,
    t: float | None = None,
    dt_ratio: float | None = None,
    n_samples: int = 10**6,
    seed: int = 0,
    workers: int | None = None,
) -> GroundEnergyEstimate:
    """Ground-state energy from the decay of ``M(s) = <1, exp(-sH) 1>``.

    ``E = -log(M(t + dt_ratio) / M(t)) / dt_ratio`` with both horizons taken
    from the same paths; the standard error follows from the delta method.
    Defaults are ``t = 6/omega`` and ``dt_ratio = 1/omega``.
    """
    t = 6.0 / params.omega if t is None else float(t)
    dt_ratio = 1.0 / params.omega if dt_ratio is None else float(dt_ratio)
    if not dt_ratio > 0:
        raise ParameterError("dt_ratio must be > 0")
    _check_common(params, t, n_samples)
    flips = params.delta > 0
    horizons = np.array([t, t + dt_ratio])

    def chunk(c, n):
        batch = simulate_paths(params, horizons, n, chunk_generator(seed, c), flips)
        logw = log_weights(params, batch)
        # common shift across both horizons keeps the cross moment meaningful
        shift = float(logw.max())
        return _Sums.from_values(np.full(n, shift), np.exp(logw - shift), cross=True)

    sums = _map_chunks(chunk, n_samples, workers)
    log_m = sums.log_mean()
    log_ratio = float(log_m[1] - log_m[0])
    if not math.isfinite(log_ratio):
        raise FKVarianceError(
            "non-positive or non-finite ratio M(t+dt)/M(t); raise n_samples or lower t"
        )
    m = np.real(sums.s1) / sums.n
    cov = sums.covariance()
    rel_var = (cov[1, 1] / m[1] ** 2 + cov[0, 0] / m[0] ** 2 - 2.0 * cov[0, 1] / (m[0] * m[1])) / sums.n
    stderr = math.sqrt(max(rel_var, 0.0)) / dt_ratio
    if not math.isfinite(stderr):
        raise FKVarianceError("non-finite standard error; raise n_samples or lower t")
    return GroundEnergyEstimate(-log_ratio / dt_ratio, stderr, n_samples, seed, t, dt_ratio, log_ratio)


def stationary_bin_edges(omega: float, n_bins: int) -> np.ndarray:
    """Edges splitting the stationary position law into equal-mass bins."""
    if n_bins < 1:
        raise ParameterError("n_bins must be >= 1")
    return norm.ppf(np.linspace(0.0, 1.0, n_bins + 1)) * math.sqrt(0.5 / omega)


@dataclass
class PositivityProbe:
    """``<1_A, exp(-tH) 1_B>`` over all cells ``A, B`` = (position bin, spin).

    Cells are ordered ``(bin 0, +1), (bin 0, -1), (bin 1, +1), ...``.
    """

    edges: np.ndarray
    cells: list[tuple[int, int]]
    mean: np.ndarray
    stderr: np.ndarray
    hits: np.ndarray
    n_samples: int
    seed: int
    min_hits: int
    undersampled: list[tuple[int, int]]

    def estimate(self, a: int, b: int) -> FKEstimate:
        return FKEstimate(float(self.mean[a, b]), float(self.stderr[a, b]), self.n_samples, self.seed)

    @property
    def significant(self) -> np.ndarray:
        return self.mean > 3.0 * self.stderr

    @property
    def passed(self) -> bool:
        return not self.undersampled and bool(np.all(self.mean > 0)) and bool(np.all(self.significant))


def positivity_probe(
    params: ModelParams,
    t: float,
    n_bins: int = 4,
    n_samples: int = 10**6,
    seed: int = 0,
    edges=None,
    min_hits: int = 100,
    workers: int | None = None,
) -> PositivityProbe:
    """Estimate every cell-to-cell matrix element of ``exp(-tH)``.

    Cell pairs with fewer than ``min_hits`` contributing paths are listed in
    ``undersampled`` rather than judged.
    """
    _check_common(params, t, n_samples)
    edges = stationary_bin_edges(params.omega, n_bins) if edges is None else np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ParameterError("bin edges must be strictly increasing")
    nb = edges.size - 1
    mass = np.diff(norm.cdf(edges / math.sqrt(0.5 / params.omega)))
    if np.any(mass <= 0):
        raise ParameterError("every bin needs positive stationary measure")
    ncell = 2 * nb
    flips = params.delta > 0

    def cell_of(x, sigma):
        b = np.searchsorted(edges, x, side="right") - 1
        inside = (b >= 0) & (b < nb)
        return np.where(inside, 2 * b + (sigma < 0), -1)

    def chunk(c, n):
        batch = simulate_paths(params, [t], n, chunk_generator(seed, c), flips)
        logw = log_weights(params, batch)[:, 0]
        ca = cell_of(batch.x0, batch.sigma0)
        cb = cell_of(batch.x_at[:, 0], batch.sigma_at[:, 0])
        ok = (ca >= 0) & (cb >= 0)
        pair = ca[ok] * ncell + cb[ok]
        finite = logw[np.isfinite(logw)]
        shift = float(finite.max()) if finite.size else 0.0
        w = np.exp(logw[ok] - shift)
        size = ncell * ncell
        s = _Sums(n, shift, np.bincount(pair, w, size), np.bincount(pair, w * w, size))
        s.extra["hits"] = np.bincount(pair[w > 0], minlength=size)
        return s

    sums = _map_chunks(chunk, n_samples, workers)
    mean = sums.mean().reshape(ncell, ncell)
    stderr = sums.stderr().reshape(ncell, ncell)
    hits = sums.extra["hits"].reshape(ncell, ncell)
    cells = [(b, s) for b in range(nb) for s in (1, -1)]
    under = [(a, b) for a in range(ncell) for b in range(ncell) if hits[a, b] < min_hits]
    return PositivityProbe(edges, cells, mean, stderr, hits, n_samples, seed, min_hits, under)
