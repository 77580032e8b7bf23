import math

import numpy as np
import pytest
from scipy.linalg import expm

from rabilab.feynman_kac import (
    CHUNK_SIZE,
    chunk_generator,
    fk_ground_energy,
    fk_matrix_element,
    positivity_probe,
    simulate_paths,
    stationary_bin_edges,
)
from rabilab.params import ModelParams, ParameterError


def exact_one_one(params: ModelParams, t: float, n_max: int = 80) -> float:
    """<1, exp(-tH) 1> from the rotated Hamiltonian in the spin-z x Fock basis.

    The constant function 1 of (position, spin) is the oscillator vacuum in
    both spin slots.
    """
    dim = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    h = (
        params.omega * np.kron(np.eye(2), a.T @ a)
        + params.g * np.kron(sz, a + a.T)
        - params.delta * np.kron(sx, np.eye(dim))
    )
    psi = np.zeros(2 * dim)
    psi[0] = psi[dim] = 1.0
    return float(psi @ expm(-t * h) @ psi)


def one(x, s):
    return np.ones_like(x)


@pytest.mark.parametrize(
    "delta,g,t",
    [(0.5, 0.5, 1.0), (0.5, 1.0, 1.0), (0.0, 1.0, 2.0), (2.0, 0.7, 1.5)],
)
def test_matches_exact_semigroup(delta, g, t):
    p = ModelParams(delta, 1.0, g)
    est = fk_matrix_element(one, one, p, t, 2 * CHUNK_SIZE, seed=3)
    assert abs(est.mean - exact_one_one(p, t)) < 4 * est.stderr


def test_free_spin_value():
    p = ModelParams(0.5, 1.0, 0.0)
    est = fk_matrix_element(one, one, p, 1.0, 2 * CHUNK_SIZE, seed=1)
    exact = 2.0 * math.exp(0.5)
    assert exact_one_one(p, 1.0) == pytest.approx(exact, rel=1e-12)
    assert abs(est.mean - exact) < 4 * est.stderr


def test_free_case_is_exact():
    est = fk_matrix_element(one, one, ModelParams(0.0, 1.0, 0.0), 1.3, 1000, seed=0)
    assert est.mean == pytest.approx(2.0, rel=1e-15) and est.stderr == 0.0


def test_stderr_scaling():
    p = ModelParams(0.5, 1.0, 0.5)
    a = fk_matrix_element(one, one, p, 1.0, 2 * CHUNK_SIZE, seed=7)
    b = fk_matrix_element(one, one, p, 1.0, 4 * CHUNK_SIZE, seed=8)
    assert b.stderr / a.stderr == pytest.approx(1 / math.sqrt(2), rel=0.10)


def test_reproducible_and_worker_independent():
    p = ModelParams(0.5, 1.0, 0.8)
    n = 3 * CHUNK_SIZE + 17
    a = fk_matrix_element(one, one, p, 1.0, n, seed=5)
    b = fk_matrix_element(one, one, p, 1.0, n, seed=5)
    c = fk_matrix_element(one, one, p, 1.0, n, seed=5, workers=3)
    assert a == b == c
    assert fk_matrix_element(one, one, p, 1.0, n, seed=6) != a


def test_backends_agree(monkeypatch):
    from rabilab import _accel

    if not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    p = ModelParams(0.5, 1.0, 0.8)
    monkeypatch.setattr(_accel, "USE_NUMBA", True)
    a = fk_matrix_element(one, one, p, 2.0, 20_000, seed=2)
    monkeypatch.setattr(_accel, "USE_NUMBA", False)
    b = fk_matrix_element(one, one, p, 2.0, 20_000, seed=2)
    assert a.mean == pytest.approx(b.mean, rel=1e-12)
    assert a.stderr == pytest.approx(b.stderr, rel=1e-10)


def test_spin_conserved_without_flips():
    p = ModelParams(0.0, 1.0, 0.6)
    batch = simulate_paths(p, [0.5, 2.0], 5000, chunk_generator(0, 0), flips=False)
    assert np.all(batch.sigma_at == batch.sigma0[:, None])
    assert np.all(batch.flips_at == 0)


def test_test_functions_enter_correctly():
    # <1_{s=+1}, e^{-tH} 1_{s=+1}> at g=0 is e^{-t(-delta sigma_x)} restricted to one spin
    p = ModelParams(0.5, 1.0, 0.0)
    plus = lambda x, s: (s > 0).astype(float)
    est = fk_matrix_element(plus, plus, p, 1.0, 2 * CHUNK_SIZE, seed=4)
    assert abs(est.mean - math.cosh(0.5)) < 4 * est.stderr


def test_argument_checks():
    p = ModelParams(0.5, 1.0, 0.5)
    with pytest.raises(ParameterError):
        fk_matrix_element(one, one, p, 0.0, 100, 0)
    with pytest.raises(ParameterError):
        fk_matrix_element(one, one, p, 1.0, 1, 0)
    with pytest.raises(ParameterError):
        fk_matrix_element(one, one, p, 1.0, 100, -1)
    with pytest.raises(ParameterError):
        fk_ground_energy(p, dt_ratio=0.0, n_samples=100)


class TestGroundEnergy:
    def test_displaced_oscillator(self):
        est = fk_ground_energy(ModelParams(0.0, 1.0, 0.4), t=4.0, dt_ratio=1.0, n_samples=10**6, seed=0)
        assert abs(est.energy + 0.16) < 3 * est.stderr

    def test_uncoupled(self):
        est = fk_ground_energy(ModelParams(0.5, 1.0, 0.0), n_samples=4 * CHUNK_SIZE, seed=1)
        assert abs(est.energy + 0.5) < 3 * est.stderr

    def test_exact_log_ratio(self):
        # same estimator applied to the exact semigroup: checks the energy extraction itself
        p = ModelParams(0.5, 1.0, 0.5)
        ratio = exact_one_one(p, 7.0) / exact_one_one(p, 6.0)
        assert -math.log(ratio) == pytest.approx(-0.6332942354616238, abs=2e-3)

    def test_defaults(self):
        est = fk_ground_energy(ModelParams(0.5, 2.0, 0.3), n_samples=1000, seed=0)
        assert est.t == 3.0 and est.dt_ratio == 0.5


class TestPositivity:
    def test_equal_mass_edges(self):
        e = stationary_bin_edges(2.0, 4)
        assert e[0] == -np.inf and e[-1] == np.inf and e[2] == 0.0
        assert e[3] == pytest.approx(0.5 * 0.6744897501960817, rel=1e-12)

    def test_all_cells_positive(self):
        probe = positivity_probe(ModelParams(0.5, 1.0, 0.5), 2.0, 4, 4 * CHUNK_SIZE, seed=0)
        assert probe.mean.shape == (8, 8)
        assert probe.passed

    def test_cross_cell_positive(self):
        probe = positivity_probe(ModelParams(0.5, 1.0, 0.5), 2.0, 2, 2 * CHUNK_SIZE, seed=2)
        a = probe.cells.index((1, 1))  # x > 0, spin +1
        b = probe.cells.index((0, -1))  # x < 0, spin -1
        est = probe.estimate(a, b)
        assert est.mean > 3 * est.stderr

    def test_no_spin_transfer_without_delta(self):
        probe = positivity_probe(ModelParams(0.0, 1.0, 0.5), 1.0, 2, 20_000, seed=0, min_hits=1)
        spins = np.array([s for _, s in probe.cells])
        cross = spins[:, None] != spins[None, :]
        assert np.all(probe.mean[cross] == 0.0)
        assert not probe.passed

    def test_undersampled_cells_are_listed(self):
        probe = positivity_probe(ModelParams(0.5, 1.0, 0.5), 1.0, 4, 1000, seed=0, min_hits=10**6)
        assert len(probe.undersampled) == 64 and not probe.passed

    def test_bad_edges(self):
        with pytest.raises(ParameterError):
            positivity_probe(ModelParams(0.5, 1.0, 0.5), 1.0, edges=[0.0, 0.0, 1.0], n_samples=100)
