"""Probe states, unitary encoding, fidelity and resource quantities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbound.errors import DimensionMismatch, EmptySupport, QBoundError
from qbound.linalg import random_psd, random_unitary
from qbound.rng import substream
from qbound.states import (
    Generator,
    QuantumState,
    evolve,
    fidelity,
    ground_energy,
    joint_fidelity,
    moments,
    populations,
    resources,
    tensor_power,
)

PLUS = QuantumState.pure([1, 1])
ZERO = QuantumState.pure([1, 0])
ONE = QuantumState.pure([0, 1])
H01 = Generator.diagonal([0.0, 1.0])


def random_mixed(dim, rng):
    rho = random_psd(dim, rng)
    return QuantumState.mixed(rho / np.trace(rho).real)


def random_pure(dim, rng):
    return QuantumState.pure(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


class TestQuantumState:
    def test_pure_normalizes(self):
        s = QuantumState.pure([3, 4])
        assert abs(np.trace(s.rho).real - 1) < 1e-15
        assert s.is_pure and abs(s.purity() - 1) < 1e-12

    def test_mixed_rejects_bad_trace(self):
        with pytest.raises(QBoundError):
            QuantumState.mixed(np.diag([0.5, 0.6]))

    def test_mixed_rejects_non_psd(self):
        with pytest.raises(QBoundError):
            QuantumState.mixed(np.diag([1.5, -0.5]))

    def test_mixed_detects_purity(self):
        assert QuantumState.mixed(PLUS.rho).is_pure
        assert not QuantumState.mixed(np.eye(2) / 2).is_pure

    def test_claimed_purity_checked(self):
        with pytest.raises(QBoundError):
            QuantumState.mixed(np.eye(2) / 2, is_pure=True)


class TestEvolve:
    def test_zero_is_identity(self):
        out = evolve(PLUS, H01, 0.0)
        assert np.max(np.abs(out.rho - PLUS.rho)) <= 1e-12

    def test_half_turn_gives_minus(self):
        out = evolve(PLUS, H01, math.pi)
        minus = QuantumState.pure([1, -1])
        assert np.max(np.abs(out.rho - minus.rho)) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            evolve(PLUS, Generator.diagonal([0, 1, 2]), 0.3)

    @pytest.mark.parametrize("dim", [2, 3, 4, 5])
    def test_integer_spectrum_periodic(self, dim):
        for i in range(10):
            rng = substream(dim, "test", i)
            u = random_unitary(dim, rng)
            gen = Generator(u @ np.diag(rng.integers(-3, 4, dim).astype(float)) @ u.conj().T)
            s = random_mixed(dim, rng)
            x = rng.uniform(0, 2 * math.pi)
            a, b = evolve(s, gen, x), evolve(s, gen, x + 2 * math.pi)
            assert np.max(np.abs(a.rho - b.rho)) <= 1e-10

    def test_preserves_spectrum(self):
        rng = substream(2, "test", 0)
        s = random_mixed(3, rng)
        gen = Generator(random_psd(3, rng))
        out = evolve(s, gen, 1.7)
        np.testing.assert_allclose(np.linalg.eigvalsh(out.rho), np.linalg.eigvalsh(s.rho), atol=1e-10)
        assert abs(out.purity() - s.purity()) <= 1e-10


class TestFidelity:
    def test_self(self):
        assert fidelity(PLUS, PLUS) == pytest.approx(1.0, abs=1e-12)
        m = QuantumState.mixed(np.diag([0.3, 0.7]))
        assert fidelity(m, m) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert fidelity(ZERO, ONE) == pytest.approx(0.0, abs=1e-15)

    def test_zero_plus(self):
        assert fidelity(ZERO, PLUS) == pytest.approx(0.5, abs=1e-12)

    def test_commuting_mixed(self):
        a = QuantumState.mixed(np.diag([0.2, 0.8]))
        b = QuantumState.mixed(np.diag([0.5, 0.5]))
        expected = (math.sqrt(0.1) + math.sqrt(0.4)) ** 2
        assert fidelity(a, b) == pytest.approx(expected, abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            fidelity(PLUS, QuantumState.pure([1, 0, 0]))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32), dim=st.integers(2, 4), x=st.floats(-10, 10))
    def test_symmetric_and_unitarily_invariant(self, seed, dim, x):
        rng = substream(seed, "test", 1)
        a, b = random_mixed(dim, rng), random_mixed(dim, rng)
        gen = Generator(random_psd(dim, rng))
        f = fidelity(a, b)
        assert 0.0 <= f <= 1.0
        assert abs(f - fidelity(b, a)) <= 1e-9
        assert abs(f - fidelity(evolve(a, gen, x), evolve(b, gen, x))) <= 1e-9

    def test_pure_shortcut_matches_overlap(self):
        rng = substream(8, "test", 0)
        for _ in range(20):
            psi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            psi /= np.linalg.norm(psi)
            m = random_mixed(3, rng)
            assert abs(fidelity(QuantumState.pure(psi), m) - np.vdot(psi, m.rho @ psi).real) <= 1e-12

    def test_general_formula_on_rank_one_input(self):
        # sqrt of rounding-level eigenvalues limits this route to ~1e-8
        rng = substream(8, "test", 1)
        for _ in range(20):
            p, m = random_pure(3, rng), random_mixed(3, rng)
            general = fidelity(QuantumState(p.rho, False), m)
            assert abs(fidelity(p, m) - general) <= 1e-7


class TestJointFidelity:
    def test_nu_one(self):
        rng = substream(4, "test", 0)
        a, b = random_mixed(2, rng), random_mixed(2, rng)
        assert joint_fidelity(a, b, 1) == fidelity(a, b)

    def test_unit_fidelity(self):
        for nu in (1, 5, 50):
            assert joint_fidelity(PLUS, PLUS, nu) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("nu", [2, 3])
    def test_matches_explicit_tensor_power(self, nu):
        for i in range(25):
            rng = substream(nu, "test", i)
            a, b = random_mixed(2, rng), random_mixed(2, rng)
            explicit = fidelity(tensor_power(a, nu), tensor_power(b, nu))
            assert abs(joint_fidelity(a, b, nu) - explicit) <= 1e-9

    def test_non_increasing_in_nu(self):
        rng = substream(6, "test", 0)
        a, b = random_mixed(3, rng), random_mixed(3, rng)
        values = [joint_fidelity(a, b, nu) for nu in range(1, 10)]
        assert all(v2 <= v1 for v1, v2 in zip(values, values[1:]))

    def test_rejects_zero_nu(self):
        with pytest.raises(QBoundError):
            joint_fidelity(PLUS, PLUS, 0)


class TestMoments:
    def test_eigenstate(self):
        gen = Generator.diagonal([0.0, 1.0, 2.5])
        assert moments(QuantumState.pure([0, 0, 1]), gen) == pytest.approx((2.5, 0.0), abs=1e-14)

    def test_plus(self):
        assert moments(PLUS, H01) == pytest.approx((0.5, 0.25), abs=1e-14)

    def test_eigenbasis_summation(self):
        for i in range(20):
            rng = substream(9, "test", i)
            dim = 2 + i % 4
            s = random_mixed(dim, rng)
            gen = Generator(random_psd(dim, rng) - np.eye(dim))
            w, v = np.linalg.eigh(gen.H)
            p = np.real(np.einsum("ij,jk,ki->i", v.conj().T, s.rho, v))
            mean, var = moments(s, gen)
            assert abs(mean - p @ w) <= 1e-10
            assert abs(var - (p @ w**2 - (p @ w) ** 2)) <= 1e-10


class TestGroundEnergy:
    def test_vacuum_populated(self):
        assert ground_energy(PLUS, H01) == pytest.approx(0.0, abs=1e-15)

    def test_vacuum_empty(self):
        s = QuantumState.pure([0, 1, 1])
        assert ground_energy(s, Generator.diagonal([0, 1, 2])) == pytest.approx(1.0)

    def test_population_below_threshold(self):
        p = 1e-15
        s = QuantumState.mixed(np.diag([p, 0.0, 1 - p]))
        gen = Generator.diagonal([0, 1, 2])
        pops = dict(populations(s, gen))
        assert pops[0.0] == pytest.approx(p, abs=1e-18)
        assert ground_energy(s, gen, 1e-12) == pytest.approx(2.0)

    def test_degenerate_ground_level_grouped(self):
        gen = Generator.diagonal([0.0, 1e-12, 1.0])
        s = QuantumState.pure([0, 1, 1])
        assert ground_energy(s, gen) == pytest.approx(5e-13, abs=1e-12)

    def test_empty_support(self):
        with pytest.raises(EmptySupport):
            ground_energy(QuantumState.mixed(np.eye(3) / 3), Generator.diagonal([0, 1, 2]), 0.5)

    def test_never_above_mean(self):
        for i in range(30):
            rng = substream(10, "test", i)
            s = random_mixed(3, rng)
            gen = Generator(random_psd(3, rng))
            assert ground_energy(s, gen) <= moments(s, gen)[0] + 1e-10


class TestResources:
    def test_qubit(self):
        r = resources(PLUS, H01)
        assert (r.mean_h, r.var_h, r.e0, r.gap) == pytest.approx((0.5, 0.25, 0.0, 0.5), abs=1e-14)
        assert r.delta_h == pytest.approx(0.5)

    def test_gap_zero_on_single_eigenspace(self):
        gen = Generator.diagonal([1.0, 1.0, 3.0])
        r = resources(QuantumState.pure([1, 2j, 0]), gen)
        assert r.gap == 0.0 and r.var_h == pytest.approx(0.0, abs=1e-14)

    def test_gap_positive_on_two_eigenspaces(self):
        r = resources(QuantumState.pure([1, 0, 1]), Generator.diagonal([1.0, 1.0, 3.0]))
        assert r.gap == pytest.approx(1.0)
