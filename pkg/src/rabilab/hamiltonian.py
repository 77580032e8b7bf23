"""Truncated Fock-space matrices of the Rabi and Jaynes-Cummings Hamiltonians.

The parity blocks come from the spin-rotated form
``omega a^dag a + g sigma_z (a + a^dag) - delta sigma_x``. In the basis
``|n> (x) |s_n>`` with ``sigma_x |s_n> = p (-1)**n |s_n>`` each parity sector
``p`` is tridiagonal. The dense builders work in the unrotated product basis
and serve as oracles.
"""

from __future__ import annotations

import numpy as np

from .params import FockTruncation, ModelParams, ParitySector
from .tridiag import SymmetricTridiagonal


def _check_trunc(trunc: FockTruncation) -> FockTruncation:
    if not isinstance(trunc, FockTruncation):
        trunc = FockTruncation(trunc)
    return trunc


def build_rabi_parity_block(
    params: ModelParams, sector: ParitySector | int, trunc: FockTruncation | int
) -> SymmetricTridiagonal:
    """Parity block of the renormalized Rabi Hamiltonian (no ``omega/2``).

    ``diag[n] = omega*n - sector*delta*(-1)**n``, ``offdiag[n] = g*sqrt(n+1)``.
    """
    trunc = _check_trunc(trunc)
    p = int(ParitySector.parse(sector))
    n = np.arange(trunc.mode_dim, dtype=np.float64)
    alt = 1.0 - 2.0 * (np.arange(trunc.mode_dim) % 2)
    diag = params.omega * n - p * params.delta * alt
    off = params.g * np.sqrt(n[1:])
    return SymmetricTridiagonal(diag, off)


def _ladder(dim: int) -> np.ndarray:
    """Truncated annihilation operator."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=np.float64)), 1)


_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SPLUS = np.array([[0.0, 1.0], [0.0, 0.0]])


def build_rabi_dense(params: ModelParams, trunc: FockTruncation | int) -> np.ndarray:
    """``sigma_z*delta + omega*a^dag a + g*sigma_x*(a + a^dag)``, product basis.

    Row ``s*(n_max+1) + n`` is ``|s> (x) |n>`` with ``s = 0`` for ``|+>``
    (``sigma_z = +1``) and ``s = 1`` for ``|->``.
    """
    trunc = _check_trunc(trunc)
    dim = trunc.mode_dim
    a = _ladder(dim)
    num = np.diag(np.arange(dim, dtype=np.float64))
    eye = np.eye(dim)
    h = params.delta * np.kron(_SZ, eye) + params.omega * np.kron(np.eye(2), num)
    h += params.g * np.kron(_SX, a + a.T)
    return 0.5 * (h + h.T)


def build_jc_dense(params: ModelParams, trunc: FockTruncation | int) -> np.ndarray:
    """JC Hamiltonian including the zero-point term, same basis as :func:`build_rabi_dense`.

    The top Fock state couples to nothing above it, so only the doublets with
    ``|nu| <= n_max`` are exact.
    """
    trunc = _check_trunc(trunc)
    dim = trunc.mode_dim
    a = _ladder(dim)
    num = np.diag(np.arange(dim, dtype=np.float64))
    h = params.delta * np.kron(_SZ, np.eye(dim)) + params.omega * np.kron(np.eye(2), num + 0.5 * np.eye(dim))
    # sigma_- a^dag + sigma_+ a
    h += params.g * (np.kron(_SPLUS.T, a.T) + np.kron(_SPLUS, a))
    return 0.5 * (h + h.T)
