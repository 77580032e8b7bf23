"""Path integration kernel: exact OU segments between spin flips and checkpoints.

All randomness is drawn beforehand by numpy, so the numba kernel and the
numpy fallback consume identical inputs. For path ``i`` the events are its
jumps and the shared ``checkpoints``, merged in time order with a jump
placed before a checkpoint at the same instant. Segment ``c`` of path ``i``
(ending at its ``c``-th event) uses ``normals[noff[i] + 2c]`` and
``normals[noff[i] + 2c + 1]``.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit
from .ou import _SERIES_CUTOFF, segment_coefficients


def normal_offsets(counts: np.ndarray, n_checkpoints: int) -> tuple[np.ndarray, int]:
    seg = counts + n_checkpoints
    noff = np.zeros(counts.size, dtype=np.int64)
    np.cumsum(2 * seg[:-1], out=noff[1:])
    return noff, int(2 * seg.sum())


@njit
def _integrate_nb(x0, sigma0, counts, joff, jtimes, checkpoints, normals, noff, omega):
    n = x0.size
    nc = checkpoints.size
    action = np.empty((n, nc))
    x_at = np.empty((n, nc))
    sigma_at = np.empty((n, nc), dtype=np.int64)
    flips_at = np.empty((n, nc), dtype=np.int64)
    for i in range(n):
        x = x0[i]
        sig = sigma0[i]
        acc = 0.0
        now = 0.0
        jn = 0
        cn = 0
        k = noff[i]
        while cn < nc:
            if jn < counts[i] and jtimes[joff[i] + jn] <= checkpoints[cn]:
                tnext = jtimes[joff[i] + jn]
                is_jump = True
            else:
                tnext = checkpoints[cn]
                is_jump = False
            dt = tnext - now
            if dt > 0.0:
                decay, int_coef, sd_x, reg, sd_i = segment_coefficients(omega * dt, omega)
                noise = sd_x * normals[k]
                integral = int_coef * x + reg * noise + sd_i * normals[k + 1]
                x = decay * x + noise
                acc += sig * integral
            k += 2
            now = tnext
            if is_jump:
                sig = -sig
                jn += 1
            else:
                action[i, cn] = acc
                x_at[i, cn] = x
                sigma_at[i, cn] = sig
                flips_at[i, cn] = jn
                cn += 1
    return action, x_at, sigma_at, flips_at


def _segment_coefficients_np(u, omega):
    a = -np.expm1(-u)
    decay = 1.0 - a
    int_coef = a / omega
    var_x = a * (2.0 - a) / (2.0 * omega)
    u2 = u * u
    series = u2 * u * (1.0 / 12.0 - u2 * (1.0 / 120.0 - u2 * (17.0 / 20160.0 - u2 * (31.0 / 362880.0))))
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = u - a - 0.5 * a * a - 0.5 * a * a * a / (2.0 - a)
        reg = np.where(a > 0.0, a / (omega * (2.0 - a)), 0.0)
    cond = np.maximum(np.where(u < _SERIES_CUTOFF, series, direct), 0.0)
    return decay, int_coef, np.sqrt(var_x), reg, np.sqrt(cond / omega**3)


def _integrate_np(x0, sigma0, counts, joff, jtimes, checkpoints, normals, noff, omega):
    n = x0.size
    nc = checkpoints.size
    kmax = int(counts.max()) if n else 0
    pad = np.full((n, kmax), np.inf)
    col = np.arange(kmax)
    has = col[None, :] < counts[:, None]
    pad[has] = jtimes[(joff[:, None] + col[None, :])[has]]
    events = np.concatenate([pad, np.broadcast_to(checkpoints, (n, nc))], axis=1)
    is_ck = np.concatenate([np.zeros((n, kmax), bool), np.ones((n, nc), bool)], axis=1)
    order = np.argsort(events, axis=1, kind="stable")
    events = np.take_along_axis(events, order, axis=1)
    is_ck = np.take_along_axis(is_ck, order, axis=1)
    ck_index = np.cumsum(is_ck, axis=1) - 1

    action = np.empty((n, nc))
    x_at = np.empty((n, nc))
    sigma_at = np.empty((n, nc), dtype=np.int64)
    flips_at = np.empty((n, nc), dtype=np.int64)
    x = x0.astype(np.float64).copy()
    sig = sigma0.astype(np.int64).copy()
    acc = np.zeros(n)
    now = np.zeros(n)
    jn = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    for c in range(kmax + nc):
        live = np.isfinite(events[:, c])
        if not live.any():
            break
        r = rows[live]
        t_next = events[r, c]
        dt = t_next - now[r]
        decay, int_coef, sd_x, reg, sd_i = _segment_coefficients_np(omega * dt, omega)
        k = noff[r] + 2 * c
        noise = sd_x * normals[k]
        integral = int_coef * x[r] + reg * noise + sd_i * normals[k + 1]
        moved = dt > 0.0
        x[r] = np.where(moved, decay * x[r] + noise, x[r])
        acc[r] = np.where(moved, acc[r] + sig[r] * integral, acc[r])
        now[r] = t_next
        ck = is_ck[r, c]
        rj = r[~ck]
        sig[rj] = -sig[rj]
        jn[rj] += 1
        rc = r[ck]
        ci = ck_index[rc, c]
        action[rc, ci] = acc[rc]
        x_at[rc, ci] = x[rc]
        sigma_at[rc, ci] = sig[rc]
        flips_at[rc, ci] = jn[rc]
    return action, x_at, sigma_at, flips_at


def integrate_paths(x0, sigma0, counts, joff, jtimes, checkpoints, normals, noff, omega):
    """Run every path to the last checkpoint.

    Returns ``(action, x_at, sigma_at, flips_at)``, each of shape
    ``(n_paths, n_checkpoints)``: ``int_0^t sigma_s X_s ds``, ``X_t``,
    ``sigma_t`` and ``N_t`` at each checkpoint ``t``.
    """
    args = (
        np.ascontiguousarray(x0, dtype=np.float64),
        np.ascontiguousarray(sigma0, dtype=np.int64),
        np.ascontiguousarray(counts, dtype=np.int64),
        np.ascontiguousarray(joff, dtype=np.int64),
        np.ascontiguousarray(jtimes, dtype=np.float64),
        np.ascontiguousarray(checkpoints, dtype=np.float64),
        np.ascontiguousarray(normals, dtype=np.float64),
        np.ascontiguousarray(noff, dtype=np.int64),
        float(omega),
    )
    if np.any(np.diff(args[5]) < 0) or args[5].size == 0 or args[5][0] < 0:
        raise ValueError("checkpoints must be non-empty, non-negative and ascending")
    if _accel.USE_NUMBA:
        return _integrate_nb(*args)
    return _integrate_np(*args)
