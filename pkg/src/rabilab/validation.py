"""Oracle and sampler gating checks.

Each ``check_*`` function returns one or more :class:`CheckResult` rows. The
``validate`` CLI command and the acceptance tests both run these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import chisquare, poisson

from .feynman_kac import chunk_generator, fk_ground_energy, positivity_probe
from .hamiltonian import build_rabi_dense
from .jc import jc_crossing_bisect, jc_crossing_closed_form, jc_envelope
from .ou import OUModel, draw_jump_batch, sample_ou_segment, segment_covariance
from .params import FockTruncation, ModelParams
from .spectra import check_c1, converge_truncation, detect_crossings, ground_sector_constancy, make_grid, rabi_spectrum, sweep

DELTA_RATIOS = (0.25, 0.5, 1.0, 2.0)
G_RATIOS = (0.0, 0.2, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _z(est: float, ref: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if est == ref else math.inf
    return (est - ref) / se


def euler_maruyama_segment(x_start: float, dt: float, omega: float, step: float, n: int, seed: int, chunk: int = 1 << 15):
    """Brute-force ``(X_dt, int_0^dt X ds)`` by Euler-Maruyama with left-point quadrature."""
    n_steps = int(round(dt / step))
    h = dt / n_steps
    sq = math.sqrt(h)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE11]))
    x_end = np.empty(n)
    integral = np.empty(n)
    for lo in range(0, n, chunk):
        m = min(chunk, n - lo)
        x = np.full(m, float(x_start))
        acc = np.zeros(m)
        z = np.empty(m)
        for _ in range(n_steps):
            rng.standard_normal(out=z)
            acc += h * x
            x *= 1.0 - omega * h
            z *= sq
            x += z
        x_end[lo : lo + m] = x
        integral[lo : lo + m] = acc
    return x_end, integral


def _moments(x, y):
    """First and second moments of a pair with their standard errors."""
    n = x.size
    dx, dy = x - x.mean(), y - y.mean()
    rows = {
        "E[x]": (x.mean(), x.std(ddof=1) / math.sqrt(n)),
        "E[I]": (y.mean(), y.std(ddof=1) / math.sqrt(n)),
        "Var[x]": ((dx * dx).mean(), (dx * dx).std(ddof=1) / math.sqrt(n)),
        "Var[I]": ((dy * dy).mean(), (dy * dy).std(ddof=1) / math.sqrt(n)),
        "Cov[x,I]": ((dx * dy).mean(), (dx * dy).std(ddof=1) / math.sqrt(n)),
    }
    return rows


# -- spectra --------------------------------------------------------------------


def check_oracle_equivalence(n_max: int = 80, k: int = 8, atol: float = 1e-10) -> CheckResult:
    worst = 0.0
    for dr, gr in product(DELTA_RATIOS, G_RATIOS):
        p = ModelParams(dr, 1.0, gr)
        blocks = rabi_spectrum(p, FockTruncation(n_max), k).energies
        dense = np.linalg.eigvalsh(build_rabi_dense(p, FockTruncation(n_max)))[:k]
        worst = max(worst, float(np.max(np.abs(blocks - dense))))
    return CheckResult("oracle-equivalence", worst <= atol * 1.0, f"max |blocks - dense| = {worst:.3e} (tol {atol:g})")


def check_exact_anchors() -> list[CheckResult]:
    worst = 0.0
    for dr in DELTA_RATIOS:
        p = ModelParams(dr, 1.0, 0.0)
        res = rabi_spectrum(p, FockTruncation(60), 20)
        n = np.arange(30)
        exact = np.sort(np.concatenate([n - dr, n + dr]))[:20]
        worst = max(worst, float(np.max(np.abs(res.energies - exact))))
    out = [CheckResult("anchor g=0", worst <= 1e-12, f"max |E - (n*omega +- delta)| = {worst:.3e}")]
    worst = 0.0
    for gr in (0.2, 0.5, 1.0, 1.5, 2.0):
        e0 = converge_truncation(ModelParams(0.0, 1.0, gr), 1).ground.energy
        worst = max(worst, abs(e0 + gr * gr))
    out.append(CheckResult("anchor delta=0", worst <= 1e-10, f"max |E0 + g^2/omega| = {worst:.3e}"))
    return out


def check_jc_crossings() -> list[CheckResult]:
    worst = 0.0
    for dr in (0.5, 0.75, 1.5, 3.0):
        p = ModelParams(dr, 1.0)
        for n in range(8):
            a, b = jc_crossing_closed_form(p, n), jc_crossing_bisect(p, n)
            worst = max(worst, abs(a - b) / a)
    g1 = jc_crossing_bisect(ModelParams(0.5, 1.0), 0)
    nus = [jc_envelope(ModelParams(0.5, 1.0, g))[1] for g in make_grid(0.0, 3.0, 0.01)]
    monotone = all(b <= a for a, b in zip(nus, nus[1:]))
    return [
        CheckResult("jc closed-form vs bisection", worst <= 1e-12, f"max rel diff {worst:.3e}"),
        CheckResult("jc g1 at 2*delta=omega=1", abs(g1 - 1.0) <= 1e-12, f"g1 = {g1!r}"),
        CheckResult("jc envelope index non-increasing", monotone, f"nu_g from {nus[0]} to {nus[-1]}"),
    ]


def check_conjecture_c1(gap_floor: float = 1e-6) -> list[CheckResult]:
    out = []
    for dr in DELTA_RATIOS:
        p = ModelParams(dr, 1.0)
        rep = check_c1(p, (0.0, 3.0), 0.02, gap_floor)
        const = ground_sector_constancy(p, (0.0, 3.0), 0.02)
        out.append(
            CheckResult(
                f"C1 delta={dr:g}",
                rep.passed and const,
                f"min gap {rep.min_gap:.3e} at g={rep.argmin_g:.2f} (floor {gap_floor:g}); ground sector constant: {const}",
            )
        )
    return out


def check_conjecture_c2() -> list[CheckResult]:
    table = sweep(ModelParams(0.5, 1.0), make_grid(0.0, 3.0, 0.02), 8)
    out = []
    for pair, expected in (((2, 3), 1), ((4, 5), 2)):
        recs = detect_crossings(table, pair)
        opposite = all(r.sectors[0] != r.sectors[1] for r in recs)
        gs = ", ".join(f"{r.g_star:.10f}" for r in recs)
        out.append(
            CheckResult(
                f"C2 levels {pair}",
                len(recs) == expected and opposite,
                f"{len(recs)} crossing(s) (expected {expected}) at g = [{gs}]",
            )
        )
    return out


# -- samplers -------------------------------------------------------------------


def check_poisson_law(n: int = 10**6, t: float = 1.0, seed: int = 11) -> list[CheckResult]:
    counts, _, _ = draw_jump_batch(n, t, chunk_generator(seed, 0))
    out = []
    for k in (0, 2):
        p = poisson.pmf(k, t)
        phat = float(np.mean(counts == k))
        z = _z(phat, p, math.sqrt(p * (1 - p) / n))
        out.append(CheckResult(f"poisson P(N={k})", abs(z) <= 4, f"{phat:.6f} vs {p:.6f} (z={z:+.2f})"))
    kmax = int(poisson.ppf(1 - 5.0 / n, t))
    obs = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
    exp = n * np.append(poisson.pmf(np.arange(kmax), t), poisson.sf(kmax - 1, t))
    pval = float(chisquare(obs, exp).pvalue)
    out.append(CheckResult("poisson chi-square", pval > 1e-3, f"p = {pval:.4f} over {kmax + 1} bins"))
    return out


def check_ou_covariance(n: int = 10**6, omega: float = 1.0, seed: int = 12) -> list[CheckResult]:
    ou = OUModel(omega)
    out = []
    for j, dt in enumerate((0.5, 1.0, 2.0)):
        rng = chunk_generator(seed, j)
        x0 = ou.sample_stationary(rng, n)
        xt, _ = sample_ou_segment(x0, dt, omega, rng)
        sq = xt * xt
        z_var = _z(sq.mean(), ou.stationary_variance, sq.std(ddof=1) / math.sqrt(n))
        prod = x0 * xt
        z_cov = _z(prod.mean(), float(ou.autocovariance(dt)), prod.std(ddof=1) / math.sqrt(n))
        out.append(
            CheckResult(
                f"OU covariance dt={dt:g}",
                abs(z_var) <= 4 and abs(z_cov) <= 4,
                f"Var z={z_var:+.2f}, Cov z={z_cov:+.2f}",
            )
        )
    return out


def check_segment_vs_euler(
    n: int = 10**6, x_start: float = 1.0, dt: float = 0.7, omega: float = 1.0, step: float = 1e-4, seed: int = 13
) -> list[CheckResult]:
    rng = chunk_generator(seed, 0)
    xe, ie = sample_ou_segment(np.full(n, x_start), dt, omega, rng)
    xm, im = euler_maruyama_segment(x_start, dt, omega, step, n, seed)
    exact = _moments(xe, ie)
    euler = _moments(xm, im)
    zs = {}
    for key in exact:
        (a, sa), (b, sb) = exact[key], euler[key]
        zs[key] = _z(a, b, math.hypot(sa, sb))
    worst = max(abs(v) for v in zs.values())
    detail = ", ".join(f"{k} z={v:+.2f}" for k, v in zs.items())
    return [CheckResult(f"segment vs Euler-Maruyama (h={step:g}, n={n})", worst <= 4, detail)]


def check_segment_moments(n: int = 10**6, x_start: float = 1.0, dt: float = 0.7, omega: float = 1.0, seed: int = 14) -> CheckResult:
    """Exact sampler against its own closed-form mean and covariance."""
    xe, ie = sample_ou_segment(np.full(n, x_start), dt, omega, chunk_generator(seed, 0))
    mom = _moments(xe, ie)
    cov = segment_covariance(dt, omega)
    a = -math.expm1(-omega * dt)
    ref = {"E[x]": x_start * (1 - a), "E[I]": x_start * a / omega, "Var[x]": cov[0, 0], "Var[I]": cov[1, 1], "Cov[x,I]": cov[0, 1]}
    zs = {k: _z(mom[k][0], ref[k], mom[k][1]) for k in ref}
    worst = max(abs(v) for v in zs.values())
    return CheckResult("segment closed-form moments", worst <= 4, ", ".join(f"{k} z={v:+.2f}" for k, v in zs.items()))


# -- Feynman-Kac ----------------------------------------------------------------


def check_fk_consistency(n_samples: int = 10**6, seed: int = 0, t: float = 6.0) -> list[CheckResult]:
    out = []
    for dr, gr in product((0.0, 0.5), (0.2, 0.5, 1.0)):
        p = ModelParams(dr, 1.0, gr)
        est = fk_ground_energy(p, t=t / p.omega, dt_ratio=1.0 / p.omega, n_samples=n_samples, seed=seed)
        ref = converge_truncation(p, 2).ground.energy
        z = _z(est.energy, ref, est.stderr)
        out.append(
            CheckResult(
                f"FK energy delta={dr:g} g={gr:g}",
                abs(z) <= 3,
                f"{est.energy:.5f} +- {est.stderr:.5f} vs {ref:.5f} (z={z:+.2f})",
            )
        )
    p = ModelParams(0.5, 1.0, 0.0)
    est = fk_ground_energy(p, t=t, dt_ratio=1.0, n_samples=n_samples, seed=seed)
    lo, hi = est.energy - 3 * est.stderr, est.energy + 3 * est.stderr
    out.append(CheckResult("FK energy g=0 brackets -delta", lo <= -0.5 <= hi, f"[{lo:.5f}, {hi:.5f}]"))
    return out


def check_positivity(n_samples: int = 10**6, seed: int = 0) -> CheckResult:
    probe = positivity_probe(ModelParams(0.5, 1.0, 0.5), t=2.0, n_bins=4, n_samples=n_samples, seed=seed)
    ratio = probe.mean / np.where(probe.stderr > 0, probe.stderr, np.nan)
    return CheckResult(
        "positivity probe 4 bins x 2 spins",
        probe.passed,
        f"min mean {probe.mean.min():.3e}, min mean/stderr {np.nanmin(ratio):.1f}, undersampled {len(probe.undersampled)}",
    )


def gating_suite(quick: bool = False) -> list[CheckResult]:
    """All checks; ``quick`` shrinks Monte Carlo sizes tenfold."""
    n = 10**5 if quick else 10**6
    results = [check_oracle_equivalence()]
    results += check_exact_anchors()
    results += check_jc_crossings()
    results += check_conjecture_c1()
    results += check_conjecture_c2()
    results += check_poisson_law(n)
    results += check_ou_covariance(n)
    results.append(check_segment_moments(n))
    results += check_segment_vs_euler(n)
    results += check_fk_consistency(n)
    results.append(check_positivity(n))
    return results
