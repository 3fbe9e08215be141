"""Tests for affine-functional confidence intervals."""

import math

import numpy as np
import pytest

from tomoci.affine import (
    AffineFunctional,
    Interval,
    affine_interval,
    extremal_coordinates,
    fidelity_functional,
    observable_functional,
)
from tomoci.errors import InvalidArgumentError
from tomoci.linalg import DensityMatrix, pure_state_density
from tomoci.protocols import PAULI_AXES, mub_protocol, process_protocol
from tomoci.qpt import (
    build_process_design,
    choi_of_unitary,
    depolarizing_channel,
    process_frequencies_from_counts,
    process_linear_inversion,
    process_moments,
    process_probabilities,
)
from tomoci.qst import (
    MomentEstimates,
    build_design,
    frequencies_from_counts,
    linear_inversion,
    moments,
    region_from_radius,
)


def qubit_state(bloch):
    b = np.asarray(bloch, dtype=float)
    rho = (
        np.eye(2) + b[0] * PAULI_AXES["x"] + b[1] * PAULI_AXES["y"] + b[2] * PAULI_AXES["z"]
    ) / 2.0
    return DensityMatrix.from_matrix(rho)


def state_region(radius):
    model = build_design(mub_protocol(1, 100))
    data = frequencies_from_counts(model, [52, 48, 47, 53, 95, 5])
    est = moments(model, data)
    center = linear_inversion(model, data)
    return region_from_radius(center, est, radius)


def process_region(radius, seed=5):
    protocol = process_protocol(1, 200)
    model = build_process_design(protocol)
    p = process_probabilities(depolarizing_channel(1, 0.1), protocol)
    rng = np.random.default_rng(seed)
    counts = np.concatenate(
        [
            rng.multinomial(200, p[s : s + 2])
            for s in range(0, 24, 2)
        ]
    )
    data = process_frequencies_from_counts(model, counts)
    est = process_moments(model, data)
    center = process_linear_inversion(model, data).estimate
    return region_from_radius(center, est, radius)


class TestFunctionals:
    def test_pure_state_fidelity_gradient(self):
        fn = fidelity_functional(pure_state_density(np.array([1.0, 0.0])))
        np.testing.assert_allclose(fn.phi, [1.0, 0.0, 0.0, 1.0], atol=1e-14)
        assert fn.phi0 == 0.0
        assert fn.kind == "state"
        assert fn.value(pure_state_density(np.array([1.0, 0.0]))) == pytest.approx(1.0, abs=1e-12)
        assert fn.value(qubit_state([0, 0, 0])) == pytest.approx(0.5, abs=1e-12)
        assert fn.value(pure_state_density(np.array([0.0, 1.0]))) == pytest.approx(0.0, abs=1e-12)

    def test_mixed_target_rejected(self):
        with pytest.raises(InvalidArgumentError):
            fidelity_functional(qubit_state([0.3, 0.0, 0.4]))

    def test_process_fidelity(self):
        fn = fidelity_functional(choi_of_unitary(np.eye(2)))
        assert fn.kind == "process"
        assert fn.value(depolarizing_channel(1, 0.1)) == pytest.approx(
            0.925, abs=1e-12
        )
        assert fn.value(choi_of_unitary(np.eye(2))) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_nonunitary_process_target_rejected(self):
        with pytest.raises(InvalidArgumentError):
            fidelity_functional(depolarizing_channel(1, 0.1))

    def test_observable_values(self):
        z = observable_functional(PAULI_AXES["z"])
        assert z.value(pure_state_density(np.array([1.0, 0.0]))) == pytest.approx(1.0, abs=1e-12)
        x = observable_functional(PAULI_AXES["x"])
        assert x.value(qubit_state([0, 0, 0])) == pytest.approx(0.0, abs=1e-13)
        with pytest.raises(InvalidArgumentError):
            observable_functional(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_identity_observable_is_constant(self):
        fn = observable_functional(np.eye(2))
        rng = np.random.default_rng(1)
        for _ in range(5):
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            rho = pure_state_density(z / np.linalg.norm(z))
            assert fn.value(rho) == pytest.approx(1.0, abs=1e-12)
        interval = affine_interval(fn, state_region(0.3))
        assert interval.width == pytest.approx(0.0, abs=1e-14)


class TestIntervals:
    def test_zero_radius_degenerates(self):
        region = state_region(0.0)
        fn = fidelity_functional(pure_state_density(np.array([1.0, 0.0])))
        interval = affine_interval(fn, region)
        assert interval.lo == interval.hi == pytest.approx(
            fn.value(region.center), abs=1e-14
        )

    def test_reference_interval_for_aligned_center(self):
        # center |0><0|, target |0>: ||P_free phi||=1 and sqrt(2/d)=1,
        # so delta=0.1 gives [0.9, 1.1]; clamping caps at 1
        model = build_design(mub_protocol(1, 100))
        data = frequencies_from_counts(model, [50, 50, 50, 50, 100, 0])
        center = linear_inversion(model, data)
        est = MomentEstimates(mu=1e-3, var=1e-6, mode="gaussian")
        region = region_from_radius(center, est, 0.1)
        fn = fidelity_functional(pure_state_density(np.array([1.0, 0.0])))
        unclamped = affine_interval(fn, region)
        assert unclamped.lo == pytest.approx(0.9, abs=1e-12)
        assert unclamped.hi == pytest.approx(1.1, abs=1e-12)
        assert not unclamped.clamped
        clamped = affine_interval(fn, region, clamp=True)
        assert clamped.lo == pytest.approx(0.9, abs=1e-12)
        assert clamped.hi == 1.0
        assert clamped.clamped

    def test_levels_propagate(self):
        region = state_region(0.07)
        fn = fidelity_functional(pure_state_density(np.array([1.0, 0.0])))
        assert affine_interval(fn, region).level == region.level

    def test_space_mismatch_rejected(self):
        state_fn = fidelity_functional(pure_state_density(np.array([1.0, 0.0])))
        with pytest.raises(InvalidArgumentError):
            affine_interval(state_fn, process_region(0.05))
        process_fn = fidelity_functional(choi_of_unitary(np.eye(2)))
        with pytest.raises(InvalidArgumentError):
            affine_interval(process_fn, state_region(0.05))

    def test_interval_validation(self):
        with pytest.raises(InvalidArgumentError):
            Interval(lo=0.5, hi=0.4, level=0.9, clamped=False)
        with pytest.raises(InvalidArgumentError):
            Interval(lo=-0.1, hi=0.5, level=0.9, clamped=True)


class TestSoundnessAndTightness:
    def _sample_ball(self, rng, r0, mask, step, n):
        k = int(mask.sum())
        g = rng.normal(size=(n, k))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = step * rng.random(n) ** (1.0 / k)
        points = np.tile(r0, (n, 1))
        points[:, mask] += g * radii[:, None]
        return points

    def test_state_functional_sampling(self):
        rng = np.random.default_rng(13)
        region = state_region(0.12)
        center = region.center
        fn = fidelity_functional(
            pure_state_density(np.array([math.cos(0.4), math.sin(0.4)]))
        )
        interval = affine_interval(fn, region)
        r0 = np.array(
            [
                np.trace(center.matrix @ s).real / 2
                for s in (np.eye(2), PAULI_AXES["x"], PAULI_AXES["y"], PAULI_AXES["z"])
            ]
        )
        mask = np.array([False, True, True, True])
        step = math.sqrt(2.0 / 2.0) * region.radius
        points = self._sample_ball(rng, r0, mask, step, 20000)
        values = points @ fn.phi + fn.phi0
        assert values.min() >= interval.lo - 1e-12
        assert values.max() <= interval.hi + 1e-12

    def test_process_functional_sampling(self):
        rng = np.random.default_rng(17)
        region = process_region(0.08)
        fn = fidelity_functional(choi_of_unitary(np.eye(2)))
        interval = affine_interval(fn, region)
        r_lo, r_hi = extremal_coordinates(fn, region)
        mask = (np.arange(16) % 4) != 0
        r0 = (r_lo + r_hi) / 2.0
        step = math.sqrt(2.0 / 4.0) * region.radius
        points = self._sample_ball(rng, r0, mask, step, 20000)
        values = points @ fn.phi + fn.phi0
        assert values.min() >= interval.lo - 1e-12
        assert values.max() <= interval.hi + 1e-12

    def test_extremizers_attain_bounds(self):
        for region, fn in (
            (
                state_region(0.09),
                fidelity_functional(pure_state_density(np.array([0.6, 0.8]))),
            ),
            (
                process_region(0.06),
                fidelity_functional(choi_of_unitary(np.eye(2))),
            ),
        ):
            interval = affine_interval(fn, region)
            r_lo, r_hi = extremal_coordinates(fn, region)
            assert r_lo @ fn.phi + fn.phi0 == pytest.approx(
                interval.lo, abs=1e-12
            )
            assert r_hi @ fn.phi + fn.phi0 == pytest.approx(
                interval.hi, abs=1e-12
            )
            # the extremizers sit on the ball boundary with constrained
            # coordinates untouched
            dim = region.center.dim
            for r in (r_lo, r_hi):
                assert np.linalg.norm(
                    r - (r_lo + r_hi) / 2.0
                ) == pytest.approx(
                    math.sqrt(2.0 / dim) * region.radius, rel=1e-10
                )

    def test_identity_target_free_gradient_norm(self):
        # the identity-channel fidelity has sqrt(3)/2 of gradient norm on
        # the free Choi coordinates (XX, YY, ZZ at +-1/2)
        fn = fidelity_functional(choi_of_unitary(np.eye(2)))
        mask = (np.arange(16) % 4) != 0
        assert np.linalg.norm(fn.phi[mask]) == pytest.approx(
            math.sqrt(3.0) / 2.0, abs=1e-12
        )
