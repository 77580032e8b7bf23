import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabilab.hamiltonian import build_jc_dense, build_rabi_dense, build_rabi_parity_block
from rabilab.jc import (
    EnvelopeBoundaryError,
    jc_crossing,
    jc_crossing_bisect,
    jc_crossing_closed_form,
    jc_eigenstate,
    jc_energy,
    jc_envelope,
    jc_ground_energy,
)
from rabilab.params import FockTruncation, ModelParams, ParameterError, ParitySector


class TestModelParams:
    def test_rejects_bad_values(self):
        with pytest.raises(ParameterError):
            ModelParams(0.5, 0.0)
        with pytest.raises(ParameterError):
            ModelParams(-0.1, 1.0)
        with pytest.raises(ParameterError):
            ModelParams(0.5, 1.0, math.nan)

    def test_derived_quantities(self):
        p = ModelParams(0.5, 2.0, 0.3)
        assert p.detuning == -1.0
        assert p.coupling_ratio == pytest.approx(0.15)
        assert p.is_ultra_strong
        assert not ModelParams(0.5, 1.0, 0.05).is_ultra_strong
        assert p.zero_point_energy == 1.0
        assert p.scaled(2.0) == ModelParams(1.0, 4.0, 0.6)

    def test_truncation(self):
        assert FockTruncation(3).full_dim == 8
        with pytest.raises(ParameterError):
            FockTruncation(0)

    def test_parity_parse(self):
        assert ParitySector.parse("+") is ParitySector.PLUS
        assert ParitySector.parse(-1) is ParitySector.MINUS
        with pytest.raises(ParameterError):
            ParitySector.parse(0)


class TestJCEnergies:
    def test_examples(self):
        assert jc_energy(ModelParams(0.5, 1.0, 2.7), 0) == 0.0
        assert jc_energy(ModelParams(0.5, 1.0, 0.0), -1) == 1.0
        assert jc_energy(ModelParams(1.5, 1.0, 0.5), -2) == pytest.approx(2 - math.sqrt(1.5), abs=1e-15)
        assert jc_energy(ModelParams(1.5, 1.0, 0.5), -2) == pytest.approx(0.7752551286, abs=1e-10)

    def test_dense_oracle(self):
        p = ModelParams(0.8, 1.0, 0.37)
        n_max = 12
        dense = np.linalg.eigvalsh(build_jc_dense(p, n_max))
        exact = [jc_energy(p, 0)] + [jc_energy(p, s * m) for m in range(1, n_max + 1) for s in (1, -1)]
        # the top photon state is an uncoupled leftover of the truncation
        leftover = p.omega * (n_max + 0.5) + p.delta
        assert np.allclose(np.sort(exact + [leftover]), dense, atol=1e-12)

    @pytest.mark.parametrize("nu", [-3, -1, 0, 2])
    def test_eigenvector_against_dense(self, nu):
        p = ModelParams(1.3, 1.0, 0.45)
        n_max = 6
        h = build_jc_dense(p, n_max)
        pair = jc_eigenstate(p, nu)
        dim = n_max + 1
        vec = np.zeros(2 * dim)
        m = abs(nu)
        if nu == 0:
            vec[dim + 0] = 1.0
        else:
            vec[m - 1] = pair.amplitudes[0]  # |+, m-1>
            vec[dim + m] = pair.amplitudes[1]  # |-, m>
        assert np.allclose(h @ vec, pair.energy * vec, atol=1e-12)


class TestJCStates:
    def test_resonant_theta(self):
        s = jc_eigenstate(ModelParams(0.5, 1.0, 0.3), 1)
        assert s.theta == math.pi / 4
        assert s.amplitudes == (math.cos(math.pi / 4), math.sin(math.pi / 4))

    def test_ground_state_slot(self):
        assert jc_eigenstate(ModelParams(2.0, 1.0, 0.9), 0).amplitudes == (0.0, 1.0)

    def test_uncoupled(self):
        s = jc_eigenstate(ModelParams(1.5, 1.0, 0.0), -3)
        assert s.theta == 0.0
        assert s.amplitudes == (-0.0, 1.0)

    @given(
        st.floats(0.5, 5.0),
        st.floats(-3.0, 3.0),
        st.integers(-20, 20).filter(lambda n: n != 0),
    )
    def test_normalized(self, delta, g, nu):
        c, s = jc_eigenstate(ModelParams(delta, 1.0, g), nu).amplitudes
        assert abs(c * c + s * s - 1.0) < 1e-14


class TestEnvelope:
    def test_examples(self):
        assert jc_ground_energy(ModelParams(0.5, 1.0, 0.5), 10) == (0.0, 0)
        assert jc_ground_energy(ModelParams(0.5, 1.0, 0.0), 10) == (0.0, 0)
        assert jc_envelope(ModelParams(0.5, 1.0, 1.5))[1] <= -1

    def test_boundary_is_an_error(self):
        with pytest.raises(EnvelopeBoundaryError):
            jc_ground_energy(ModelParams(0.5, 1.0, 10.0), 3)
        e, nu = jc_envelope(ModelParams(0.5, 1.0, 10.0), start_limit=3)
        assert nu < -3
        assert e == min(jc_energy(ModelParams(0.5, 1.0, 10.0), -m) for m in range(0, 400))


class TestCrossings:
    def test_examples(self):
        assert jc_crossing(ModelParams(0.5, 1.0), 0) == pytest.approx(1.0, rel=1e-12)
        assert jc_crossing(ModelParams(1.5, 1.0), 0) == pytest.approx(math.sqrt(3.0), rel=1e-12)

    @pytest.mark.parametrize("delta", [0.5, 0.9, 1.5, 4.0])
    @pytest.mark.parametrize("n", [0, 1, 2, 5, 10])
    def test_two_ways_agree_and_degenerate(self, delta, n):
        p = ModelParams(delta, 1.0)
        a = jc_crossing_closed_form(p, n)
        b = jc_crossing_bisect(p, n)
        assert abs(a - b) <= 1e-12 * a
        q = p.with_g(a)
        assert abs(jc_energy(q, -n) - jc_energy(q, -(n + 1))) < 1e-10

    def test_increasing_sequence(self):
        p = ModelParams(0.5, 1.0)
        gs = [jc_crossing(p, n) for n in range(8)]
        assert all(b > a for a, b in zip(gs, gs[1:]))

    @given(st.floats(0.1, 10.0), st.integers(0, 6))
    @settings(max_examples=40)
    def test_scaling(self, c, n):
        p = ModelParams(1.2, 1.0)
        assert jc_crossing_closed_form(p.scaled(c), n) == pytest.approx(c * jc_crossing_closed_form(p, n), rel=1e-12)

    def test_precondition(self):
        with pytest.raises(ParameterError):
            jc_crossing(ModelParams(0.4, 1.0), 0)


class TestRabiMatrices:
    def test_block_examples(self):
        b = build_rabi_parity_block(ModelParams(0.5, 1.0, 0.0), +1, FockTruncation(3))
        assert np.array_equal(b.diag, [-0.5, 1.5, 1.5, 3.5])
        assert np.array_equal(b.offdiag, [0.0, 0.0, 0.0])
        b = build_rabi_parity_block(ModelParams(0.5, 1.0, 0.2), +1, FockTruncation(2))
        assert np.allclose(b.offdiag, [0.2, 0.2 * math.sqrt(2)], rtol=0, atol=1e-16)
        b = build_rabi_parity_block(ModelParams(0.5, 1.0, 0.0), -1, FockTruncation(1))
        assert np.array_equal(b.diag, [0.5, 0.5])

    def test_dense_entries(self):
        p = ModelParams(0.5, 1.0, 0.7)
        h = build_rabi_dense(p, 4)
        assert np.array_equal(h, h.T)
        dim = 5
        assert h[0, dim + 1] == pytest.approx(0.7)  # <+,0|H|-,1>
        assert h[0, 0] == 0.5
        assert h[dim, dim] == -0.5

    def test_dense_g0_spectrum(self):
        p = ModelParams(0.3, 1.0, 0.0)
        vals = np.linalg.eigvalsh(build_rabi_dense(p, 10))
        n = np.arange(11)
        assert np.allclose(vals, np.sort(np.concatenate([n - 0.3, n + 0.3])), atol=1e-14)

    @pytest.mark.parametrize("delta,g", [(0.5, 0.2), (1.0, 1.0), (0.25, 2.0)])
    def test_blocks_union_equals_dense(self, delta, g):
        p = ModelParams(delta, 1.0, g)
        trunc = FockTruncation(40)
        dense = np.linalg.eigvalsh(build_rabi_dense(p, trunc))
        blocks = np.concatenate(
            [np.linalg.eigvalsh(build_rabi_parity_block(p, s, trunc).to_dense()) for s in (1, -1)]
        )
        # the rotated frame truncates differently; compare well inside the cutoff
        assert np.allclose(np.sort(blocks)[:10], dense[:10], atol=1e-10)
