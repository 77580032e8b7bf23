"""Parity-resolved Rabi spectra, coupling sweeps and level-crossing census."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .hamiltonian import build_rabi_parity_block
from .params import DEFAULT_N_MAX, FockTruncation, ModelParams, ParameterError, ParitySector
from .tridiag import eigen_tridiagonal

N_MAX_CAP = 4096
DEFAULT_TOL = 1e-10
DEFAULT_GRID_STEP = 0.02
DEFAULT_DEG_TOL = 1e-9
REFINE_FACTOR = 10


class TruncationError(RuntimeError):
    """Levels did not settle before the Fock cutoff cap."""


class SweepError(RuntimeError):
    def __init__(self, g: float, cause: Exception):
        super().__init__(f"sweep failed at g={g!r}: {cause}")
        self.g = g
        self.cause = cause


class GridTooCoarseError(RuntimeError):
    pass


class Level(NamedTuple):
    energy: float
    sector: ParitySector
    index: int


@dataclass(frozen=True)
class SpectrumResult:
    levels: tuple[Level, ...]
    params: ModelParams
    n_max_used: int
    converged: bool
    truncation_error_estimate: float

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    @property
    def sectors(self) -> np.ndarray:
        return np.array([int(lv.sector) for lv in self.levels], dtype=np.int64)

    @property
    def ground(self) -> Level:
        return self.levels[0]


@dataclass(frozen=True)
class SpectrumTable:
    g_grid: np.ndarray
    rows: tuple[SpectrumResult, ...]
    params_base: ModelParams | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        g = np.asarray(self.g_grid, dtype=np.float64)
        object.__setattr__(self, "g_grid", g)
        if len(self.rows) != g.size:
            raise ValueError("one row per grid point required")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("g_grid must be strictly increasing")
        if len({len(r.levels) for r in self.rows}) > 1:
            raise ValueError("rows must hold the same number of levels")

    @property
    def k(self) -> int:
        return len(self.rows[0].levels) if self.rows else 0

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energies for r in self.rows]).reshape(len(self.rows), self.k)

    @property
    def sectors(self) -> np.ndarray:
        return np.array([r.sectors for r in self.rows], dtype=np.int64).reshape(len(self.rows), self.k)


@dataclass(frozen=True)
class CrossingRecord:
    g_star: float
    level_pair: tuple[int, int]
    sectors: tuple[ParitySector, ParitySector]
    gap_at_star: float

    def __post_init__(self):
        if self.sectors[0] == self.sectors[1]:
            raise AssertionError("a true crossing must join opposite parity sectors")


@dataclass
class C1Report:
    min_gap: float
    argmin_g: float
    passed: bool
    ground_sectors: np.ndarray = field(repr=False, default=None)
    g_grid: np.ndarray = field(repr=False, default=None)
    gaps: np.ndarray = field(repr=False, default=None)

    @property
    def ground_sector_constant(self) -> bool:
        return self.ground_sectors is not None and len(set(self.ground_sectors.tolist())) == 1


def make_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Uniform grid from ``lo`` to ``hi`` inclusive with spacing close to ``step``."""
    if hi < lo:
        raise ParameterError("grid upper bound below lower bound")
    if hi == lo:
        return np.array([float(lo)])
    if step <= 0:
        raise ParameterError("grid step must be > 0")
    n = max(1, int(round((hi - lo) / step)))
    return np.linspace(lo, hi, n + 1)


def default_n_max(params: ModelParams, k: int = 1) -> int:
    n = DEFAULT_N_MAX
    # photon number of the dressed ground state grows like (g/omega)**2
    ratio = abs(params.g) / params.omega
    while ratio > 2.0 and n < N_MAX_CAP:
        n *= 2
        ratio /= math.sqrt(2.0)
    return max(n, 2 * k)


def sector_eigenvalues(params: ModelParams, sector, n_max: int, k: int) -> np.ndarray:
    block = build_rabi_parity_block(params, sector, FockTruncation(n_max))
    return eigen_tridiagonal(block, min(k, block.size))


def _merge(plus: np.ndarray, minus: np.ndarray, k: int) -> tuple[Level, ...]:
    levels = [Level(float(e), ParitySector.PLUS, i) for i, e in enumerate(plus)]
    levels += [Level(float(e), ParitySector.MINUS, i) for i, e in enumerate(minus)]
    levels.sort(key=lambda lv: (lv.energy, -int(lv.sector), lv.index))
    return tuple(levels[:k])


def _levels(params: ModelParams, n_max: int, k: int) -> tuple[Level, ...]:
    return _merge(
        sector_eigenvalues(params, ParitySector.PLUS, n_max, k),
        sector_eigenvalues(params, ParitySector.MINUS, n_max, k),
        k,
    )


def _max_shift(a: Sequence[Level], b: Sequence[Level]) -> float:
    return max(abs(x.energy - y.energy) for x, y in zip(a, b))


def rabi_spectrum(
    params: ModelParams, trunc: FockTruncation | int, k: int, tol: float | None = None
) -> SpectrumResult:
    """Lowest ``k`` levels of the truncated Rabi Hamiltonian with parity labels.

    The error estimate compares against a run at half the cutoff; the result
    counts as converged only when ``tol`` is given and the estimate is below it.
    """
    if not isinstance(trunc, FockTruncation):
        trunc = FockTruncation(trunc)
    if k < 1 or k > trunc.n_max / 2:
        raise ParameterError(f"k={k} violates the truncation guard k <= n_max/2 (n_max={trunc.n_max})")
    levels = _levels(params, trunc.n_max, k)
    half = trunc.n_max // 2
    if 2 * (half + 1) >= k:
        err = _max_shift(_levels(params, half, k), levels)
    else:  # pragma: no cover - unreachable under the guard
        err = math.inf
    converged = tol is not None and err < tol
    return SpectrumResult(levels, params, trunc.n_max, converged, err)


def converge_truncation(
    params: ModelParams, k: int, tol: float = DEFAULT_TOL, n_start: int | None = None
) -> SpectrumResult:
    """Double ``n_max`` until the ``k`` lowest levels move by less than ``tol``.

    Raises
    ------
    TruncationError
        When ``n_max`` would exceed :data:`N_MAX_CAP`.
    """
    if tol <= 0:
        raise ParameterError("tol must be > 0")
    n = n_start if n_start is not None else default_n_max(params, k)
    n = max(n, 2 * k)
    prev = _levels(params, n // 2, k)
    while True:
        cur = _levels(params, n, k)
        shift = _max_shift(prev, cur)
        if shift < tol:
            return SpectrumResult(cur, params, n, True, shift)
        if 2 * n > N_MAX_CAP:
            raise TruncationError(
                f"levels still moving by {shift:.3e} at n_max={n} (cap {N_MAX_CAP}) for g={params.g!r}"
            )
        prev, n = cur, 2 * n


def sweep(
    params_base: ModelParams,
    g_grid,
    k: int,
    tol: float = DEFAULT_TOL,
    workers: int | None = None,
) -> SpectrumTable:
    """Converged spectra on every coupling of ``g_grid``.

    Rows are independent and may be evaluated on a thread pool; output order
    always follows the grid.
    """
    g_grid = np.asarray(g_grid, dtype=np.float64).ravel()
    if k < 2:
        raise ParameterError("sweep needs k >= 2")
    if g_grid.size == 0:
        raise ParameterError("empty g grid")
    if g_grid.size > 1 and not np.all(np.diff(g_grid) > 0):
        raise ParameterError("g grid must be strictly ascending")

    def one(g):
        try:
            return converge_truncation(params_base.with_g(g), k, tol)
        except Exception as exc:
            raise SweepError(float(g), exc) from exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(one, g_grid))
    else:
        rows = tuple(one(g) for g in g_grid)
    return SpectrumTable(g_grid, rows, params_base.with_g(0.0), tol)


def _labels(levels: Sequence[Level]):
    return [(lv.sector, lv.index) for lv in levels]


def _single_swap(la: Sequence[Level], lb: Sequence[Level]):
    """Classify the label permutation between two neighbouring couplings.

    Returns ``-1`` if nothing moved, ``s`` if exactly slots ``s`` and ``s+1``
    exchanged labels (a label entering at the top slot counts as an exchange
    with the first unlisted level), and ``None`` for anything else.
    """
    a, b = _labels(la), _labels(lb)
    changed = [s for s in range(len(a)) if a[s] != b[s]]
    if not changed:
        return -1
    top = len(a) - 1
    if changed == [top] and b[top] not in a:
        return top
    if len(changed) == 2 and changed[1] == changed[0] + 1:
        s = changed[0]
        if a[s] == b[s + 1] and a[s + 1] == b[s]:
            return s
    return None


def _curve(params: ModelParams, label, g: float, n_max: int) -> float:
    sector, idx = label
    return float(sector_eigenvalues(params.with_g(g), sector, n_max, idx + 1)[idx])


def _refine_crossing(params, lab_lo, lab_hi, ga, gb, n_max, deg_tol, max_iter=200):
    """Bisection on the difference of two tracked per-sector curves."""

    def diff(g):
        return _curve(params, lab_lo, g, n_max) - _curve(params, lab_hi, g, n_max)

    fa, fb = diff(ga), diff(gb)
    if abs(fa) < deg_tol:
        return ga, abs(fa)
    if abs(fb) < deg_tol:
        return gb, abs(fb)
    if fa > 0 or fb < 0:
        raise GridTooCoarseError(f"no sign change of tracked curves on [{ga!r}, {gb!r}]")
    for _ in range(max_iter):
        gm = 0.5 * (ga + gb)
        fm = diff(gm)
        if abs(fm) < deg_tol:
            return gm, abs(fm)
        if fm < 0:
            ga = gm
        else:
            gb = gm
    raise GridTooCoarseError(f"bisection did not reach deg_tol={deg_tol!r} near g={gm!r}")


def detect_crossings(
    table: SpectrumTable,
    pair: tuple[int, int],
    deg_tol: float | None = None,
    max_depth: int = 2,
) -> list[CrossingRecord]:
    """True crossings between adjacent global levels ``pair = (i, i+1)``.

    Each level is tracked by its (sector, rank-within-sector) label, which
    never changes along a curve because a single parity block has a simple
    spectrum. A crossing is an exchange of the labels in slots ``i`` and
    ``i+1`` between neighbouring couplings. Candidate intervals are
    subdivided ``REFINE_FACTOR``-fold to confirm a lone exchange, as are
    intervals where several labels move at once. An even number of exchanges
    of the same pair inside one interval is invisible to this test.
    """
    i, j = pair
    if j != i + 1 or i < 0:
        raise ParameterError("pair must be two adjacent global levels (i, i+1)")
    if j >= table.k:
        raise ParameterError(f"table holds only {table.k} levels")
    params = table.params_base or table.rows[0].params.with_g(0.0)
    if deg_tol is None:
        deg_tol = DEFAULT_DEG_TOL * params.omega
    n_max = max(r.n_max_used for r in table.rows)
    k = table.k
    records: list[CrossingRecord] = []

    def levels_at(g):
        return _levels(params.with_g(g), n_max, k)

    def scan(ga, gb, la, lb, depth):
        swap = _single_swap(la, lb)
        if swap is not None and swap != i:
            return
        if swap == i and depth >= 1:
            lo_label, hi_label = (la[i].sector, la[i].index), (la[j].sector, la[j].index)
            g_star, gap = _refine_crossing(params, lo_label, hi_label, ga, gb, n_max, deg_tol)
            records.append(CrossingRecord(g_star, (i, j), (lo_label[0], hi_label[0]), gap))
            return
        if depth >= max_depth:
            raise GridTooCoarseError(
                f"ambiguous level tracking for pair {pair} on [{ga!r}, {gb!r}]; use a finer grid"
            )
        sub = np.linspace(ga, gb, REFINE_FACTOR + 1)
        sub_levels = [la] + [levels_at(g) for g in sub[1:-1]] + [lb]
        for s in range(REFINE_FACTOR):
            scan(sub[s], sub[s + 1], sub_levels[s], sub_levels[s + 1], depth + 1)

    for a in range(len(table.rows) - 1):
        scan(table.g_grid[a], table.g_grid[a + 1], table.rows[a].levels, table.rows[a + 1].levels, 0)
    return records


def check_c1(
    params: ModelParams,
    g_range: tuple[float, float],
    grid_step: float | None = None,
    k_gap_floor: float | None = None,
    tol: float = DEFAULT_TOL,
) -> C1Report:
    """Smallest ground-to-first-excited gap over a coupling grid.

    With ``delta == 0`` the two sectors are identical and the gap is exactly
    zero, so the check is only meaningful for ``delta > 0``.
    """
    step = grid_step if grid_step is not None else DEFAULT_GRID_STEP * params.omega
    floor = k_gap_floor if k_gap_floor is not None else 1e-6 * params.omega
    table = sweep(params, make_grid(g_range[0], g_range[1], step), 2, tol)
    e = table.energies
    gaps = e[:, 1] - e[:, 0]
    idx = int(np.argmin(gaps))
    min_gap = float(gaps[idx])
    return C1Report(min_gap, float(table.g_grid[idx]), min_gap > floor, table.sectors[:, 0], table.g_grid, gaps)


def ground_sector_constancy(
    params: ModelParams, g_range, grid_step: float | None = None, tol: float = DEFAULT_TOL
) -> bool:
    """True iff the ground level keeps one parity label across the coupling range."""
    params.require_positive_delta("ground_sector_constancy")
    step = grid_step if grid_step is not None else DEFAULT_GRID_STEP * params.omega
    lo, hi = (g_range, g_range) if np.isscalar(g_range) else g_range
    grid = make_grid(lo, hi, step)
    sectors = {converge_truncation(params.with_g(g), 1, tol).ground.sector for g in grid}
    return len(sectors) == 1
