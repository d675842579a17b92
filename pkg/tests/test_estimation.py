"""POVM statistics, estimators, the RMSE decomposition and Cramer-Rao quantities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbound.errors import (
    CombinatorialOverflow,
    DimensionMismatch,
    MissingEstimate,
    NotPure,
    QBoundError,
)
from qbound.estimation import (
    COUNTS,
    JOINT,
    SINGLE,
    TUPLES,
    Distribution,
    EstimatorMap,
    Povm,
    Strategy,
    compositions,
    cramer_rao,
    distribution_rows,
    iter_outcomes,
    multinomial_probs,
    n_compositions,
    outcome_distribution,
    qfi_pure,
    rmse_from_values,
    rmse_report,
)
from qbound.linalg import random_psd, random_unitary
from qbound.rng import substream
from qbound.states import Generator, QuantumState, tensor_power

PLUS = QuantumState.pure([1, 1])
H01 = Generator.diagonal([0.0, 1.0])
PM = Povm.projective(np.array([[1, 1], [1, -1]]) / math.sqrt(2), ("+", "-"))
Z = Povm.projective(np.eye(2), ("0", "1"))


def zero_estimator(labels):
    return EstimatorMap.from_table({lab: 0.0 for lab in labels})


class TestPovm:
    def test_incomplete(self):
        with pytest.raises(QBoundError):
            Povm((np.diag([1.0, 0.0]),), ("a",))

    def test_not_psd(self):
        with pytest.raises(QBoundError):
            Povm((np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])), ("a", "b"))

    def test_not_hermitian(self):
        e = np.array([[0.5, 0.1], [0.0, 0.5]])
        with pytest.raises(QBoundError):
            Povm((e, np.eye(2) - e), ("a", "b"))

    def test_duplicate_labels(self):
        with pytest.raises(QBoundError):
            Povm.projective(np.eye(2), ("a", "a"))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            PM.probabilities(QuantumState.pure([1, 0, 0]))


class TestOutcomeDistribution:
    def test_eigenstate_deterministic(self):
        s = Strategy(QuantumState.pure([0, 1]), H01, Z, zero_estimator(("0", "1")))
        d = outcome_distribution(s, 0.7)
        np.testing.assert_allclose(d.probs, [0.0, 1.0], atol=1e-15)

    def test_plus_in_z(self):
        s = Strategy(PLUS, H01, Z, zero_estimator(("0", "1")))
        np.testing.assert_allclose(outcome_distribution(s, 0.3).probs, [0.5, 0.5], atol=1e-15)

    @pytest.mark.parametrize("x", [0.0, math.pi / 2, math.pi, 2.1])
    def test_phase_qubit(self, x):
        s = Strategy(PLUS, H01, PM, zero_estimator(("+", "-")))
        p = outcome_distribution(s, x).probs
        assert p[0] == pytest.approx(math.cos(x / 2) ** 2, abs=1e-14)

    def test_tuples_and_counts(self):
        est = EstimatorMap.linear_readout({"+": 1.0, "-": 0.0})
        s = Strategy(PLUS, H01, PM, est, nu=3)
        tup = outcome_distribution(s, 1.0, aggregate=TUPLES)
        cnt = outcome_distribution(s, 1.0)
        assert cnt.kind == COUNTS and tup.kind == TUPLES
        assert len(tup) == 8 and len(cnt) == 4
        assert tup.probs.sum() == pytest.approx(1.0) and cnt.probs.sum() == pytest.approx(1.0)
        # both aggregations give the same RMSE for a counts-based estimator
        a = rmse_report(tup, est, 1.0)
        b = rmse_report(cnt, est, 1.0)
        assert a.delta_x == pytest.approx(b.delta_x, abs=1e-14)

    def test_per_copy_matches_joint_explicit(self):
        for i in range(20):
            rng = substream(21, "test", i)
            rho = random_psd(2, rng)
            probe = QuantumState.mixed(rho / np.trace(rho).real)
            gen = Generator(random_psd(2, rng))
            u = random_unitary(2, rng)
            per_copy = Povm.projective(u, ("a", "b"))
            joint_basis = np.kron(u, u)
            joint_labels = tuple(("a", "b")[j] + ("a", "b")[k] for j in range(2) for k in range(2))
            joint = Povm.projective(joint_basis, joint_labels)
            x = rng.uniform(0, 6)
            s1 = Strategy(probe, gen, per_copy, zero_estimator(()), nu=2)
            s2 = Strategy(probe, gen, joint, zero_estimator(()), nu=2, povm_scope=JOINT)
            p1 = outcome_distribution(s1, x, aggregate=TUPLES).probs
            p2 = outcome_distribution(s2, x).probs
            np.testing.assert_allclose(p1, p2, atol=1e-10)

    def test_global_phase_invariance(self):
        psi = np.array([0.6, 0.8j])
        s1 = Strategy(QuantumState.pure(psi), H01, PM, zero_estimator(()))
        s2 = Strategy(QuantumState.pure(np.exp(0.37j) * psi), H01, PM, zero_estimator(()))
        np.testing.assert_allclose(outcome_distribution(s1, 0.4).probs, outcome_distribution(s2, 0.4).probs,
                                   atol=1e-15)

    def test_overflow(self):
        s = Strategy(PLUS, H01, PM, zero_estimator(()), nu=30)
        with pytest.raises(CombinatorialOverflow):
            outcome_distribution(s, 0.1, aggregate=TUPLES)

    def test_streaming_matches_materialized(self):
        s = Strategy(PLUS, H01, PM, zero_estimator(()), nu=3)
        streamed = list(iter_outcomes(s, 0.9))
        d = outcome_distribution(s, 0.9, aggregate=TUPLES)
        assert [lab for lab, _ in streamed] == list(d.labels)
        np.testing.assert_allclose([p for _, p in streamed], d.probs, atol=1e-15)

    def test_joint_dimension_check(self):
        with pytest.raises(DimensionMismatch):
            Strategy(PLUS, H01, PM, zero_estimator(()), nu=2, povm_scope=JOINT)

    def test_rows(self):
        s = Strategy(PLUS, H01, PM, zero_estimator(()), nu=2)
        rows = distribution_rows(outcome_distribution(s, 0.0, aggregate=TUPLES))
        assert rows[0] == ("+ +", pytest.approx(1.0))


class TestCombinatorics:
    def test_compositions(self):
        c = compositions(3, 3)
        assert len(c) == n_compositions(3, 3) == 10
        assert np.all(c.sum(axis=1) == 3)
        assert len({tuple(r) for r in c}) == 10

    def test_multinomial_normalized(self):
        p = np.array([0.2, 0.3, 0.5])
        c = compositions(7, 3)
        assert multinomial_probs(c, p).sum() == pytest.approx(1.0, abs=1e-13)

    def test_multinomial_zero_probability(self):
        out = multinomial_probs(np.array([[2, 0], [1, 1]]), np.array([1.0, 0.0]))
        np.testing.assert_allclose(out, [1.0, 0.0])


class TestRmse:
    def test_symmetric(self):
        r = rmse_from_values([0.5, 0.5], [1.0, -1.0], 0.0)
        assert (r.delta_x, r.small_delta_x, r.bias) == pytest.approx((1.0, 1.0, 0.0))

    def test_constant_estimator(self):
        r = rmse_from_values([0.2, 0.8], [1.5, 1.5], 0.25)
        assert r.small_delta_x == pytest.approx(0.0, abs=1e-15)
        assert r.delta_x == pytest.approx(1.25)

    def test_missing_estimate(self):
        d = Distribution(("a", "b"), np.array([0.5, 0.5]))
        with pytest.raises(MissingEstimate):
            rmse_report(d, EstimatorMap.from_table({"a": 0.0}), 0.0)

    def test_estimator_needs_exactly_one_source(self):
        with pytest.raises(QBoundError):
            EstimatorMap()
        with pytest.raises(QBoundError):
            EstimatorMap(table={"a": 1.0}, label_fn=lambda v: v)

    def test_linear_readout_default(self):
        est = EstimatorMap.linear_readout({"+": 1.0}, default=0.5)
        d = Distribution(((1, 1),), np.array([1.0]), COUNTS, 2, ("+", "x"))
        assert est.values_for(d)[0] == pytest.approx(0.75)
        strict = EstimatorMap.linear_readout({"+": 1.0})
        with pytest.raises(MissingEstimate):
            strict.values_for(d)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32), m=st.integers(1, 30), x=st.floats(-10, 10))
    def test_identity(self, seed, m, x):
        rng = substream(seed, "test", 2)
        p = rng.dirichlet(np.ones(m))
        v = rng.normal(0, 3, m)
        r = rmse_from_values(p, v, x)
        assert abs(r.delta_x**2 - (r.small_delta_x**2 + r.bias**2)) <= 1e-12 * (1 + r.delta_x**2)
        assert r.delta_x >= 0 and r.small_delta_x >= 0


class TestFisher:
    def test_eigenstate(self):
        assert qfi_pure(QuantumState.pure([1, 0]), H01) == 0.0

    def test_plus(self):
        assert qfi_pure(PLUS, H01) == pytest.approx(0.25)
        assert qfi_pure(PLUS, H01, convention=4) == pytest.approx(1.0)

    def test_mixed_rejected(self):
        with pytest.raises(NotPure):
            qfi_pure(QuantumState.mixed(np.eye(2) / 2), H01)

    def test_bad_convention(self):
        with pytest.raises(QBoundError):
            qfi_pure(PLUS, H01, convention=2)

    def test_cramer_rao(self):
        assert cramer_rao(1, 1.0) == 1.0
        assert cramer_rao(100, 4.0) == pytest.approx(0.025)
        assert cramer_rao(16, 4.0) == pytest.approx(0.0625)
        assert cramer_rao(4, 1.0, convention=4) == pytest.approx(0.25)
        assert cramer_rao(3, 0.0) == math.inf
