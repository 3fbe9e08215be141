"""Tests for the state-tomography pipeline (design, inversion, moments, CIs)."""

import math

import numpy as np
import pytest

from _oracles import (
    dense_gaussian_moments,
    dense_paper_moments,
    enumerate_xi_moments,
    normal_equation_pinv,
)
from tomoci.errors import DegenerateDataError, InvalidArgumentError
from tomoci.linalg import DensityMatrix, hs_distance, pure_state_density
from tomoci.protocols import mub_protocol, sic_protocol
from tomoci.qst import (
    MODE_GAUSSIAN,
    MODE_PAPER,
    ConfidenceRegion,
    MomentEstimates,
    build_design,
    confidence_level,
    confidence_radius,
    frequencies_from_counts,
    linear_inversion,
    moments,
    probabilities,
    region_from_level,
    region_from_radius,
    xi_statistic,
)
from tomoci._backend import kernels


def qubit0():
    return pure_state_density(np.array([1.0, 0.0]))


def qubit_theta():
    t = math.pi / 8
    amp = np.array([math.cos(t), math.sin(t) * np.exp(1j * math.pi / 4)])
    return pure_state_density(amp)


def ghz(m):
    amp = np.zeros(2**m)
    amp[0] = amp[-1] = 1.0 / math.sqrt(2.0)
    return pure_state_density(amp)


def fully_mixed(m):
    d = 2**m
    return DensityMatrix.from_matrix(np.eye(d) / d)


def exact_counts(model, rho):
    """Integer counts reproducing the exact outcome probabilities."""
    p = probabilities(rho, model)
    counts = np.rint(model.shots_per_block * p)
    assert np.max(np.abs(counts - model.shots_per_block * p)) < 1e-9
    return frequencies_from_counts(model, counts.astype(np.int64))


def random_counts(model, rng, probs=None):
    counts = []
    for b in range(len(model.starts)):
        s, n = model.starts[b], model.sizes[b]
        if probs is None:
            w = rng.random(n) + 0.05
            w /= w.sum()
        else:
            w = probs[s : s + n]
        counts.append(rng.multinomial(model.shots_per_block, w))
    return frequencies_from_counts(model, np.concatenate(counts))


class TestDesign:
    def test_single_qubit_mub_rows(self):
        model = build_design(mub_protocol(1, 100))
        assert model.A.shape == (6, 4)
        expected = np.array(
            [
                [1, 1, 0, 0],
                [1, -1, 0, 0],
                [1, 0, 1, 0],
                [1, 0, -1, 0],
                [1, 0, 0, 1],
                [1, 0, 0, -1],
            ],
            dtype=float,
        )
        np.testing.assert_allclose(model.A, expected, atol=1e-14)
        assert np.linalg.matrix_rank(model.A) == 4

    def test_pinv_solves_normal_equations(self):
        for m in (1, 2):
            model = build_design(mub_protocol(m, 10))
            np.testing.assert_allclose(
                model.pinv, normal_equation_pinv(model.A), atol=1e-12
            )
            np.testing.assert_allclose(
                model.pinv @ model.A, np.eye(4**m), atol=1e-12
            )

    def test_gram_kernel_entries_single_qubit_mub(self):
        # T = pinv^T pinv for the 6x4 design: diagonal 5/18, the
        # opposite-outcome partner within a basis -2/9, all cross-basis
        # entries 1/36.
        model = build_design(mub_protocol(1, 10))
        T = model.T
        assert T.shape == (6, 6)
        for i in range(6):
            assert T[i, i] == pytest.approx(5.0 / 18.0, abs=1e-14)
        for a, b in ((0, 1), (2, 3), (4, 5)):
            assert T[a, b] == pytest.approx(-2.0 / 9.0, abs=1e-14)
            assert T[b, a] == pytest.approx(-2.0 / 9.0, abs=1e-14)
        for a in (0, 1):
            for b in (2, 3, 4, 5):
                assert T[a, b] == pytest.approx(1.0 / 36.0, abs=1e-14)

    def test_two_qubit_mub_shape_and_rank(self):
        model = build_design(mub_protocol(2, 10))
        assert model.A.shape == (36, 16)
        assert np.linalg.matrix_rank(model.A) == 16
        assert list(model.sizes) == [4] * 9
        assert list(model.starts) == list(range(0, 36, 4))

    def test_sic_design(self):
        model = build_design(sic_protocol(1, 10))
        assert model.A.shape == (4, 4)
        assert np.linalg.matrix_rank(model.A) == 4
        assert list(model.sizes) == [4]

    def test_block_rows_sum_to_one_probability(self):
        # each block is a POVM, so every probability block sums to 1
        model = build_design(mub_protocol(2, 10))
        rng = np.random.default_rng(5)
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho = pure_state_density(z / np.linalg.norm(z))
        p = probabilities(rho, model)
        for b in range(len(model.starts)):
            s, n = model.starts[b], model.sizes[b]
            assert p[s : s + n].sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(p[s : s + n] > -1e-12)


class TestProbabilities:
    def test_qubit0(self):
        model = build_design(mub_protocol(1, 10))
        p = probabilities(qubit0(), model)
        np.testing.assert_allclose(
            p, [0.5, 0.5, 0.5, 0.5, 1.0, 0.0], atol=1e-14
        )

    def test_ghz3_z_block(self):
        model = build_design(mub_protocol(3, 10))
        p = probabilities(ghz(3), model)
        zzz = p[model.starts[-1] :]
        expected = np.zeros(8)
        expected[0] = expected[7] = 0.5
        np.testing.assert_allclose(zzz, expected, atol=1e-14)

    def test_rejects_unphysical_state(self):
        model = build_design(mub_protocol(1, 10))
        matrix = 0.5 * np.array([[2.0, 1.0], [1.0, 0.0]])  # eigs (1 +- sqrt2)/2
        rho = DensityMatrix.from_matrix(matrix)
        assert not rho.physical
        with pytest.raises(InvalidArgumentError):
            probabilities(rho, model)

    def test_rejects_dimension_mismatch(self):
        model = build_design(mub_protocol(2, 10))
        with pytest.raises(InvalidArgumentError):
            probabilities(qubit0(), model)


class TestFrequencies:
    def test_block_sum_validation(self):
        model = build_design(mub_protocol(1, 10))
        with pytest.raises(InvalidArgumentError):
            frequencies_from_counts(model, [5, 4, 5, 5, 10, 0])
        with pytest.raises(InvalidArgumentError):
            frequencies_from_counts(model, [11, -1, 5, 5, 10, 0])

    def test_frequencies_property(self):
        model = build_design(mub_protocol(1, 10))
        data = frequencies_from_counts(model, [7, 3, 5, 5, 10, 0])
        np.testing.assert_allclose(
            data.frequencies, [0.7, 0.3, 0.5, 0.5, 1.0, 0.0]
        )
        assert data.n_blocks == 3


class TestLinearInversion:
    def test_noiseless_recovery(self):
        cases = [
            (1, qubit0()),
            (1, fully_mixed(1)),
            (2, ghz(2)),
            (2, fully_mixed(2)),
            (3, ghz(3)),
        ]
        for m, rho in cases:
            model = build_design(mub_protocol(m, 8))
            est = linear_inversion(model, exact_counts(model, rho))
            assert hs_distance(est, rho) <= 1e-10
            assert est.physical

    def test_trace_is_always_one(self):
        rng = np.random.default_rng(11)
        for m in (1, 2):
            model = build_design(mub_protocol(m, 50))
            for _ in range(10):
                est = linear_inversion(model, random_counts(model, rng))
                assert np.trace(est.matrix).real == pytest.approx(1.0, abs=1e-12)
                assert abs(np.trace(est.matrix).imag) < 1e-14

    def test_unphysical_estimate_is_flagged(self):
        # frequencies (1,0),(1/2,1/2),(1,0) put the Bloch vector at
        # (1,0,1), outside the ball: eigenvalues (1 +- sqrt 2)/2
        model = build_design(mub_protocol(1, 2))
        data = frequencies_from_counts(model, [2, 0, 1, 1, 2, 0])
        est = linear_inversion(model, data)
        assert not est.physical
        eigs = np.linalg.eigvalsh(est.matrix)
        np.testing.assert_allclose(
            eigs, [(1 - math.sqrt(2)) / 2, (1 + math.sqrt(2)) / 2], atol=1e-12
        )
        assert np.trace(est.matrix).real == pytest.approx(1.0, abs=1e-13)

    def test_structure_mismatch_rejected(self):
        model1 = build_design(mub_protocol(1, 10))
        model2 = build_design(mub_protocol(2, 10))
        data = random_counts(model2, np.random.default_rng(0))
        with pytest.raises(InvalidArgumentError):
            linear_inversion(model1, data)


class TestXiStatistic:
    def test_zero_residual(self):
        model = build_design(mub_protocol(1, 10))
        p = probabilities(qubit0(), model)
        assert xi_statistic(model, p, p) == 0.0

    def test_squared_error_identity(self):
        # (d/2) xi equals the squared Hilbert-Schmidt distance between
        # the estimate and the true state
        rng = np.random.default_rng(21)
        for m in (1, 2):
            model = build_design(mub_protocol(m, 200))
            d = model.dim
            z = rng.normal(size=d) + 1j * rng.normal(size=d)
            rho = pure_state_density(z / np.linalg.norm(z))
            p = probabilities(rho, model)
            for _ in range(5):
                data = random_counts(model, rng, probs=p)
                est = linear_inversion(model, data)
                xi = xi_statistic(model, data.frequencies, p)
                assert hs_distance(est, rho) ** 2 == pytest.approx(
                    d * xi / 2.0, rel=1e-10, abs=1e-30
                )

    def test_length_validation(self):
        model = build_design(mub_protocol(1, 10))
        with pytest.raises(InvalidArgumentError):
            xi_statistic(model, np.zeros(5), np.zeros(6))


class TestMoments:
    def test_gaussian_matches_dense_oracle(self):
        rng = np.random.default_rng(31)
        for m in (1, 2):
            model = build_design(mub_protocol(m, 137))
            for _ in range(5):
                data = random_counts(model, rng)
                est = moments(model, data, MODE_GAUSSIAN)
                mu_ref, v_ref = dense_gaussian_moments(
                    model.T,
                    data.frequencies,
                    model.starts,
                    model.sizes,
                    model.shots_per_block,
                )
                assert est.mu == pytest.approx(mu_ref, rel=1e-12)
                assert est.var == pytest.approx(v_ref, rel=1e-12)

    def test_paper_matches_dense_oracle(self):
        rng = np.random.default_rng(37)
        for m in (1, 2):
            model = build_design(mub_protocol(m, 89))
            for _ in range(5):
                data = random_counts(model, rng)
                est = moments(model, data, MODE_PAPER)
                mu_ref, v_ref = dense_paper_moments(
                    model.T,
                    data.frequencies,
                    model.starts,
                    model.sizes,
                    model.shots_per_block,
                )
                assert est.mu == pytest.approx(mu_ref, rel=1e-12)
                assert est.var == pytest.approx(v_ref, rel=1e-12)

    def test_uniform_frequencies_closed_form(self):
        # all outcomes equally likely on the single-qubit six-outcome
        # design: paper-mode mu = 5/(6N), gaussian-mode mu = 3/(4N)
        N = 100
        model = build_design(mub_protocol(1, N))
        data = frequencies_from_counts(model, [50, 50, 50, 50, 50, 50])
        assert moments(model, data, MODE_PAPER).mu * N == pytest.approx(
            5.0 / 6.0, abs=1e-14
        )
        assert moments(model, data, MODE_GAUSSIAN).mu * N == pytest.approx(
            3.0 / 4.0, abs=1e-14
        )

    def test_qubit0_gaussian_moments_give_unit_shape(self):
        # at the |0> frequencies the fitted gamma has shape exactly 1:
        # mu = 1/(2N), V = 1/(4 N^2)
        N = 1000
        model = build_design(mub_protocol(1, N))
        data = exact_counts(model, qubit0())
        est = moments(model, data, MODE_GAUSSIAN)
        assert est.mu == pytest.approx(0.5 / N, rel=1e-13)
        assert est.var == pytest.approx(0.25 / N**2, rel=1e-13)
        params = est.gamma_params()
        assert params.shape == pytest.approx(1.0, abs=1e-12)
        assert params.scale == pytest.approx(0.5 / N, rel=1e-12)

    def test_gaussian_mean_is_exact_for_multinomial(self):
        # brute-force enumeration over every outcome table at tiny N:
        # the gaussian-mode mean must match E[xi] to near machine
        # precision, and the variance stays within the coarse Gaussian
        # tolerance expected at N=3
        for protocol, rho in (
            (sic_protocol(1, 3), qubit_theta()),
            (mub_protocol(1, 3), qubit_theta()),
        ):
            model = build_design(protocol)
            f0 = probabilities(rho, model)
            e_ref, v_ref = enumerate_xi_moments(
                model.pinv, f0, model.starts, model.sizes, 3
            )
            mu, v = kernels("numpy").moments_gaussian_batch(
                model.T, f0[None, :], model.starts, model.sizes, 3.0
            )
            assert mu[0] == pytest.approx(e_ref, rel=1e-12)
            assert abs(v_ref / v[0] - 1.0) <= 0.30

    def test_moments_scale_with_shots(self):
        # same frequencies at N and 2N: mu halves and V quarters
        model_1 = build_design(mub_protocol(1, 40))
        model_2 = build_design(mub_protocol(1, 80))
        counts = np.array([27, 13, 22, 18, 31, 9])
        data_1 = frequencies_from_counts(model_1, counts)
        data_2 = frequencies_from_counts(model_2, 2 * counts)
        for mode in (MODE_GAUSSIAN, MODE_PAPER):
            a = moments(model_1, data_1, mode)
            b = moments(model_2, data_2, mode)
            assert b.mu == pytest.approx(a.mu / 2.0, rel=1e-12)
            assert b.var == pytest.approx(a.var / 4.0, rel=1e-12)

    def test_unknown_mode_rejected(self):
        model = build_design(mub_protocol(1, 10))
        data = frequencies_from_counts(model, [5, 5, 5, 5, 5, 5])
        with pytest.raises(InvalidArgumentError):
            moments(model, data, "bogus")
        with pytest.raises(InvalidArgumentError):
            MomentEstimates(mu=1.0, var=1.0, mode="bogus")


class TestConfidence:
    def _moments(self):
        return MomentEstimates(mu=3.2e-4, var=4.1e-8, mode=MODE_GAUSSIAN)

    def test_level_radius_round_trip(self):
        est = self._moments()
        for level in (1e-6, 0.1, 0.5, 0.9, 0.95, 0.99, 0.999999):
            delta = confidence_radius(est, 8, level)
            assert confidence_level(est, 8, delta) == pytest.approx(
                level, abs=1e-9
            )

    def test_radius_monotone_in_level(self):
        est = self._moments()
        radii = [
            confidence_radius(est, 2, level)
            for level in (0.0, 0.1, 0.5, 0.9, 0.95, 0.99)
        ]
        assert all(b > a for a, b in zip(radii, radii[1:]))

    def test_zero_edge_cases(self):
        est = self._moments()
        assert confidence_level(est, 2, 0.0) == 0.0
        assert confidence_radius(est, 2, 0.0) == 0.0

    def test_radius_scales_with_dimension(self):
        # delta = sqrt(d x / 2) at fixed xi quantile x
        est = self._moments()
        assert confidence_radius(est, 8, 0.9) == pytest.approx(
            2.0 * confidence_radius(est, 2, 0.9), rel=1e-12
        )

    def test_invalid_inputs(self):
        est = self._moments()
        with pytest.raises(InvalidArgumentError):
            confidence_level(est, 2, -0.1)
        with pytest.raises(InvalidArgumentError):
            confidence_radius(est, 2, 1.0)
        with pytest.raises(InvalidArgumentError):
            confidence_radius(est, 2, -0.2)


class TestConfidenceRegion:
    def _setup(self):
        model = build_design(mub_protocol(1, 500))
        data = frequencies_from_counts(model, [260, 240, 255, 245, 490, 10])
        est = moments(model, data)
        center = linear_inversion(model, data)
        return center, est

    def test_region_from_level(self):
        center, est = self._setup()
        region = region_from_level(center, est, 0.95)
        assert region.level == pytest.approx(0.95, abs=1e-9)
        assert region.radius > 0.0
        assert region.dim == 2

    def test_region_from_radius_round_trip(self):
        center, est = self._setup()
        region = region_from_level(center, est, 0.9)
        again = region_from_radius(center, est, region.radius)
        assert again.level == pytest.approx(region.level, abs=1e-12)

    def test_inconsistent_region_rejected(self):
        center, est = self._setup()
        with pytest.raises(InvalidArgumentError):
            ConfidenceRegion(center=center, radius=0.1, level=0.3, moments=est)

    def test_zero_radius_region(self):
        center, est = self._setup()
        region = region_from_radius(center, est, 0.0)
        assert region.level == 0.0


class TestDegenerateData:
    def test_deterministic_counts_raise_on_gamma_fit(self):
        N = 20
        model = build_design(mub_protocol(1, N))
        data = frequencies_from_counts(model, [N, 0, N, 0, N, 0])
        est = moments(model, data)
        assert est.mu == 0.0
        assert est.var == 0.0
        with pytest.raises(DegenerateDataError):
            est.gamma_params()
        with pytest.raises(DegenerateDataError):
            confidence_radius(est, 2, 0.5)
        with pytest.raises(DegenerateDataError):
            confidence_level(est, 2, 0.1)
        # zero radius never needs the gamma fit
        assert confidence_level(est, 2, 0.0) == 0.0
