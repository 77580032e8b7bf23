"""Closed-form Jaynes-Cummings eigensystem, ground-state envelope and crossings.

Energies here follow the JC Hamiltonian *with* the zero-point term
``omega/2``; the Rabi routines use the renormalized convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import ModelParams, ParameterError


class EnvelopeBoundaryError(RuntimeError):
    """The envelope minimum sits on the edge of the searched index range."""


class NoRootError(RuntimeError):
    pass


@dataclass(frozen=True)
class JCEigenpair:
    """One JC eigenstate.

    ``amplitudes`` are the coefficients on ``|+, |nu|-1>`` and ``|-, |nu|>``.
    ``theta`` is ``None`` for ``nu == 0``.
    """

    nu: int
    energy: float
    theta: float | None
    amplitudes: tuple[float, float]


def _radicand(params: ModelParams, m: int) -> float:
    return 0.25 * params.detuning**2 + params.g**2 * m


def jc_energy(params: ModelParams, nu: int) -> float:
    nu = int(nu)
    if nu == 0:
        return -0.5 * params.detuning
    m = abs(nu)
    root = math.sqrt(_radicand(params, m))
    return params.omega * m + (root if nu > 0 else -root)


def jc_theta(params: ModelParams, m: int) -> float:
    if params.detuning == 0.0:
        return math.pi / 4
    return 0.5 * math.atan(2.0 * params.g * math.sqrt(m) / params.detuning)


def jc_eigenstate(params: ModelParams, nu: int) -> JCEigenpair:
    nu = int(nu)
    if nu == 0:
        return JCEigenpair(0, jc_energy(params, 0), None, (0.0, 1.0))
    theta = jc_theta(params, abs(nu))
    c, s = math.cos(theta), math.sin(theta)
    amps = (c, s) if nu > 0 else (-s, c)
    return JCEigenpair(nu, jc_energy(params, nu), theta, amps)


def jc_ground_energy(params: ModelParams, nu_search_limit: int) -> tuple[float, int]:
    """Minimum of ``E_nu`` over ``nu = 0, -1, ..., -nu_search_limit``.

    Returns ``(energy, nu_g)``. Ties resolve to the index closest to zero.

    Raises
    ------
    EnvelopeBoundaryError
        If the minimizer is ``-nu_search_limit``; the true envelope may lie
        further out.
    """
    if nu_search_limit < 1:
        raise ParameterError("nu_search_limit must be >= 1")
    best_e, best_nu = jc_energy(params, 0), 0
    for m in range(1, nu_search_limit + 1):
        e = jc_energy(params, -m)
        if e < best_e:
            best_e, best_nu = e, -m
    if best_nu == -nu_search_limit:
        raise EnvelopeBoundaryError(
            f"envelope minimum at search boundary nu={best_nu} for g={params.g!r}; raise nu_search_limit"
        )
    return best_e, best_nu


def jc_envelope(params: ModelParams, start_limit: int = 16) -> tuple[float, int]:
    """:func:`jc_ground_energy` with the search limit doubled until interior."""
    limit = max(1, start_limit)
    while True:
        try:
            return jc_ground_energy(params, limit)
        except EnvelopeBoundaryError:
            limit *= 2
            if limit > 1 << 24:
                raise


def _check_crossing_args(params: ModelParams, n: int) -> None:
    if n < 0:
        raise ParameterError("crossing index n must be >= 0")
    if params.detuning < 0:
        raise ParameterError(
            f"JC crossings are defined only for 2*delta >= omega (got delta={params.delta!r}, omega={params.omega!r})"
        )


def jc_crossing_closed_form(params: ModelParams, n: int) -> float:
    """Positive root of ``E_{-n}(g) = E_{-(n+1)}(g)`` in closed form.

    With ``u = g**2`` and ``D = (2*delta - omega)**2 / 4`` the crossing solves
    ``u**2 - 2*omega**2*(2n+1)*u + omega**2*(omega**2 - 4D) = 0``; the larger
    root is the physical one.
    """
    _check_crossing_args(params, n)
    w = params.omega
    d = 0.25 * params.detuning**2
    u = w * w * (2 * n + 1) + 2.0 * w * math.sqrt(w * w * n * (n + 1) + d)
    return math.sqrt(u)


def _crossing_gap(params: ModelParams, n: int, g: float) -> float:
    p = params.with_g(g)
    return jc_energy(p, -(n + 1)) - jc_energy(p, -n)


def jc_crossing_bisect(params: ModelParams, n: int, max_iter: int = 400) -> float:
    """Bisection on the sign change of ``E_{-(n+1)} - E_{-n}`` over ``g >= 0``."""
    _check_crossing_args(params, n)
    lo, hi = 0.0, params.omega
    if _crossing_gap(params, n, lo) <= 0:
        raise NoRootError(f"no sign change at g=0 for n={n}")
    while _crossing_gap(params, n, hi) > 0:
        hi *= 2.0
        if hi > 1e12 * params.omega:
            raise NoRootError(f"could not bracket crossing n={n}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _crossing_gap(params, n, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def jc_crossing(params: ModelParams, n: int, rtol: float = 1e-12) -> float:
    """Coupling ``g_{n+1}`` where ``E_{-n}`` and ``E_{-(n+1)}`` cross.

    Computed in closed form and by bisection; both must agree to ``rtol``.
    """
    closed = jc_crossing_closed_form(params, n)
    bisected = jc_crossing_bisect(params, n)
    if abs(closed - bisected) > rtol * closed:
        raise NoRootError(f"closed form {closed!r} and bisection {bisected!r} disagree for n={n}")
    return closed
