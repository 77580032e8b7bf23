"""Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

The Sturm count kernel exists as a numba kernel and as a numpy fallback that
bisects all requested eigenvalues at once; :data:`rabilab._accel.USE_NUMBA`
picks one at call time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import _accel
from ._accel import njit


class EigenConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SymmetricTridiagonal:
    """Real symmetric tridiagonal matrix stored as diagonal and one off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=np.float64)
        e = np.ascontiguousarray(self.offdiag, dtype=np.float64)
        if d.ndim != 1 or e.ndim != 1 or d.size < 1 or e.size != d.size - 1:
            raise ValueError(f"need len(offdiag) == len(diag) - 1, got {d.shape} and {e.shape}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("tridiagonal entries must be finite")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def size(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros_like(self.diag)
        r[:-1] += np.abs(self.offdiag)
        r[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))


def _pivot_floor(d, e2):
    # Replacement for an exactly-zero pivot; keeps the count well defined.
    scale = np.max(np.abs(d)) + (np.sqrt(np.max(e2)) if e2.size else 0.0)
    return np.finfo(np.float64).tiny / np.finfo(np.float64).eps * max(scale, 1.0)


@njit
def _sturm_count_nb(d, e2, x, floor):
    count = 0
    q = d[0] - x
    if q == 0.0:
        q = -floor
    if q < 0.0:
        count += 1
    for i in range(1, d.size):
        q = d[i] - x - e2[i - 1] / q
        if q == 0.0:
            q = -floor
        if q < 0.0:
            count += 1
    return count


@njit
def _bisect_nb(d, e2, lo0, hi0, k, abstol, floor, max_steps):
    """Lowest ``k`` eigenvalues; returns (values, total Sturm sweeps)."""
    out = np.empty(k)
    steps = 0
    lo_next = lo0
    for j in range(k):
        lo = lo_next
        hi = hi0
        # invariant: count(lo) <= j < count(hi)
        while True:
            mid = 0.5 * (lo + hi)
            if hi - lo <= abstol or mid <= lo or mid >= hi:
                break
            if steps >= max_steps:
                return out, -1
            steps += 1
            if _sturm_count_nb(d, e2, mid, floor) > j:
                hi = mid
            else:
                lo = mid
        out[j] = 0.5 * (lo + hi)
        lo_next = lo
    return out, steps


def _bisect_np(d, e2, lo0, hi0, k, abstol, floor, max_steps):
    # All k eigenvalues bisected together; the row recurrence runs over m.
    target = np.arange(k)
    lo = np.full(k, lo0)
    hi = np.full(k, hi0)
    steps = 0
    while True:
        mid = 0.5 * (lo + hi)
        active = (hi - lo > abstol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        if steps >= max_steps:
            return 0.5 * (lo + hi), -1
        steps += int(active.sum())
        x = mid[active]
        q = d[0] - x
        q[q == 0.0] = -floor
        count = (q < 0.0).astype(np.int64)
        for i in range(1, d.size):
            q = d[i] - x - e2[i - 1] / q
            q[q == 0.0] = -floor
            count += q < 0.0
        above = count > target[active]
        idx = np.flatnonzero(active)
        hi[idx[above]] = x[above]
        lo[idx[~above]] = x[~above]
    return 0.5 * (lo + hi), steps


def eigen_tridiagonal(
    t: SymmetricTridiagonal,
    k: int | None = None,
    *,
    return_vectors: bool = False,
    rtol: float = 2.0 * np.finfo(np.float64).eps,
):
    """Lowest ``k`` eigenvalues of ``t`` in ascending order.

    Bisection stops once an interval is narrower than ``rtol`` times the
    Gershgorin spectral bound (or cannot shrink further in floating point).
    The total number of Sturm sweeps is capped at ``60 * m``.

    Parameters
    ----------
    t : SymmetricTridiagonal
    k : int, optional
        Number of eigenvalues, ``1 <= k <= m``. Defaults to all of them.
    return_vectors : bool
        Also return unit eigenvectors (columns), computed by inverse iteration.

    Returns
    -------
    ndarray or (ndarray, ndarray)

    Raises
    ------
    EigenConvergenceError
        If the sweep cap is reached.
    """
    m = t.size
    if k is None:
        k = m
    if not 1 <= k <= m:
        raise ValueError(f"k must satisfy 1 <= k <= {m}, got {k}")
    d = t.diag
    e2 = t.offdiag**2
    lo, hi = t.gershgorin()
    span = max(abs(lo), abs(hi), hi - lo)
    if span == 0.0:
        vals = np.zeros(k)
    else:
        # widen so count(lo) == 0 and count(hi) == m hold strictly
        pad = 4.0 * np.finfo(np.float64).eps * span + np.finfo(np.float64).tiny
        lo, hi = lo - pad, hi + pad
        abstol = rtol * span
        floor = _pivot_floor(d, e2)
        max_steps = 60 * m
        kernel = _bisect_nb if _accel.USE_NUMBA else _bisect_np
        vals, steps = kernel(d, e2, lo, hi, k, abstol, floor, max_steps)
        if steps < 0:
            raise EigenConvergenceError(f"Sturm bisection exceeded {max_steps} sweeps for m={m}")
        vals = np.sort(vals)
    if not return_vectors:
        return vals
    return vals, _inverse_iteration(t, vals)


def _inverse_iteration(t: SymmetricTridiagonal, vals: np.ndarray, iters: int = 3) -> np.ndarray:
    m = t.size
    ab = np.zeros((3, m))
    ab[0, 1:] = t.offdiag
    ab[2, :-1] = t.offdiag
    scale = max(np.max(np.abs(t.diag)), np.max(np.abs(t.offdiag)) if m > 1 else 0.0, 1.0)
    vecs = np.empty((m, vals.size))
    start = 1.0 + 0.01 * np.cos(np.arange(m) * 1.3)
    for j, lam in enumerate(vals):
        ab[1] = t.diag - lam - 1e3 * np.finfo(np.float64).eps * scale
        v = start / np.linalg.norm(start)
        for _ in range(iters):
            v = solve_banded((1, 1), ab, v, check_finite=False)
            # keep clustered eigenvectors mutually orthogonal
            for i in range(j):
                if abs(vals[i] - lam) < 1e-8 * scale:
                    v -= (vecs[:, i] @ v) * vecs[:, i]
            v /= np.linalg.norm(v)
        vecs[:, j] = v
    return vecs
