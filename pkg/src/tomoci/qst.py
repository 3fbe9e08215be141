"""State tomography by least-squares inversion with gamma-moment
confidence regions.

The estimation pipeline: a measurement protocol yields the design matrix A
with rows Tr(E_i sigma_j), so outcome probabilities are p = A r(rho).
Observed frequencies f give the estimate r~ = A+ f, and the squared
Hilbert-Schmidt estimation error is (d/2) xi with xi = ||A+ (f - p)||^2.
A gamma distribution fitted to the first two moments of xi converts a
confidence level into a ball radius and back.

Two moment modes exist. GAUSSIAN (default) uses the exact multinomial mean
mu = tr(T Sigma) and the Gaussian quadratic-form variance 2 tr((T Sigma)^2)
with the block-diagonal multinomial covariance at p := f. PAPER evaluates
the first-order formulas mu = sum_i T_ii f_i / N and V = sum_{i != j,
within block} T_ij^2 f_i f_j / N^2; it is retained for reproduction and
comparison, and its variance can sit far from the empirical one (the
Monte-Carlo baseline arbitrates; see the bootstrap module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DegenerateDataError, InvalidArgumentError
from .linalg import (
    DensityMatrix,
    PauliBasis,
    from_pauli_vector,
    left_pseudo_inverse,
    pauli_basis,
)
from .protocols import MeasurementProtocol
from .special import GammaParams, gamma_cdf, gamma_cdf_inverse

MODE_GAUSSIAN = "gaussian"
MODE_PAPER = "paper"


@dataclass(frozen=True, eq=False)
class DesignModel:
    """The linear map from Pauli coordinates to stacked outcome probabilities.

    A has one row per outcome, pinv is its left pseudo-inverse, and
    T = pinv^T pinv is the Gram kernel entering the moment formulas.
    starts/sizes delimit the per-block row ranges.
    """

    A: np.ndarray
    pinv: np.ndarray
    T: np.ndarray
    starts: np.ndarray
    sizes: np.ndarray
    shots_per_block: int
    basis: PauliBasis

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.dim


@dataclass(frozen=True, eq=False)
class FrequencyVector:
    """Stacked per-block outcome counts with their block structure."""

    counts: np.ndarray
    starts: np.ndarray
    sizes: np.ndarray
    shots_per_block: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or np.any(counts < 0):
            raise InvalidArgumentError("counts must be a 1-d nonnegative vector")
        for b in range(len(self.starts)):
            s, n = self.starts[b], self.sizes[b]
            total = int(counts[s : s + n].sum())
            if total != self.shots_per_block:
                raise InvalidArgumentError(
                    f"block {b} counts sum to {total}, expected {self.shots_per_block}"
                )
        object.__setattr__(self, "counts", counts)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / float(self.shots_per_block)

    @property
    def n_blocks(self) -> int:
        return len(self.starts)


@dataclass(frozen=True)
class MomentEstimates:
    """First two moments of xi under the fitted multinomial model."""

    mu: float
    var: float
    mode: str

    def __post_init__(self):
        if self.mode not in (MODE_GAUSSIAN, MODE_PAPER):
            raise InvalidArgumentError(f"unknown moment mode {self.mode!r}")
        if self.mu < 0.0 or self.var < 0.0:
            raise InvalidArgumentError("moments must be nonnegative")

    def gamma_params(self) -> GammaParams:
        if self.mu <= 0.0 or self.var <= 0.0:
            raise DegenerateDataError(
                "observed data gives a degenerate xi distribution "
                f"(mu={self.mu}, var={self.var}); a gamma fit needs positive moments"
            )
        return GammaParams(mean=self.mu, var=self.var)


@dataclass(frozen=True, eq=False)
class ConfidenceRegion:
    """Hilbert-Schmidt ball around a point estimate.

    level = gamma_cdf(moments, 2 delta^2 / d) holds by construction; the
    constructor re-checks it to 1e-10.
    """

    center: object
    radius: float
    level: float
    moments: MomentEstimates

    def __post_init__(self):
        if self.radius < 0.0:
            raise InvalidArgumentError("radius must be nonnegative")
        if not (0.0 <= self.level < 1.0):
            raise InvalidArgumentError("level must lie in [0, 1)")
        check = confidence_level(self.moments, self.dim, self.radius)
        if abs(check - self.level) > 1e-10:
            raise InvalidArgumentError(
                f"inconsistent region: level {self.level} vs CDF value {check}"
            )

    @property
    def dim(self) -> int:
        return self.center.dim


def build_design(
    protocol: MeasurementProtocol, basis: PauliBasis | None = None
) -> DesignModel:
    """Stack rows Tr(E_i sigma_j) and precompute the inversion operators."""
    if basis is None:
        basis = pauli_basis(protocol.qubits)
    if basis.dim != protocol.dim:
        raise InvalidArgumentError("basis and protocol dimensions differ")
    blocks = []
    for block in protocol.blocks:
        rows = np.einsum("nij,kji->nk", block.elements, basis.elements).real
        blocks.append(rows)
    A = np.ascontiguousarray(np.vstack(blocks))
    pinv = np.ascontiguousarray(left_pseudo_inverse(A))
    T = np.ascontiguousarray(pinv.T @ pinv)
    sizes = np.array(protocol.outcomes_per_block, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
    return DesignModel(
        A=A,
        pinv=pinv,
        T=T,
        starts=starts,
        sizes=sizes,
        shots_per_block=protocol.shots_per_block,
        basis=basis,
    )


def probabilities(rho: DensityMatrix, model: DesignModel) -> np.ndarray:
    """Stacked outcome probabilities A r(rho) of a physical state."""
    if not isinstance(rho, DensityMatrix) or not rho.physical:
        raise InvalidArgumentError("probabilities require a physical density matrix")
    if rho.dim != model.dim:
        raise InvalidArgumentError(
            f"state dim {rho.dim} does not match design dim {model.dim}"
        )
    r = np.einsum("kij,ji->k", model.basis.elements, rho.matrix).real / model.dim
    return model.A @ r


def frequencies_from_counts(model: DesignModel, counts) -> FrequencyVector:
    """Wrap raw stacked counts in the model's block structure."""
    return FrequencyVector(
        counts=np.asarray(counts, dtype=np.int64),
        starts=model.starts,
        sizes=model.sizes,
        shots_per_block=model.shots_per_block,
    )


def _check_structure(model, data: FrequencyVector):
    if len(data.counts) != model.n_rows or not (
        np.array_equal(data.starts, model.starts)
        and np.array_equal(data.sizes, model.sizes)
    ):
        raise InvalidArgumentError("data block structure does not match the design")


def _frequencies_of(model, data) -> np.ndarray:
    """Stacked frequencies from a FrequencyVector or a raw vector.

    A raw vector represents exact frequencies (e.g. true probabilities for
    noiseless recovery); it must match the design rows and sum to 1 within
    each block.
    """
    if isinstance(data, FrequencyVector):
        _check_structure(model, data)
        return data.frequencies
    f = np.asarray(data, dtype=np.float64)
    if f.shape != (model.n_rows,):
        raise InvalidArgumentError(
            f"frequency vector length {f.shape} does not match the design"
        )
    # Exact probabilities computed in floating point may carry roundoff-scale
    # negatives where the true value is zero; only reject genuine negativity.
    if np.any(f < -1e-12):
        raise InvalidArgumentError("frequencies must be nonnegative")
    for b in range(len(model.starts)):
        s, n = model.starts[b], model.sizes[b]
        if abs(f[s : s + n].sum() - 1.0) > 1e-10:
            raise InvalidArgumentError(f"block {b} frequencies do not sum to 1")
    return f


def linear_inversion(model: DesignModel, data) -> DensityMatrix:
    """Least-squares estimate sigma . (A+ f); unit trace is automatic.

    data is a FrequencyVector or a raw frequency vector in design row order.
    """
    r = model.pinv @ _frequencies_of(model, data)
    op = from_pauli_vector(r, model.basis)
    min_eig = np.linalg.eigvalsh(op.entries)[0]
    return DensityMatrix(op=op, physical=bool(min_eig >= -1e-10))


def xi_statistic(model: DesignModel, f: np.ndarray, p: np.ndarray) -> float:
    """Squared l2 norm of A+ (f - p)."""
    f = np.asarray(f, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if f.shape != (model.n_rows,) or p.shape != (model.n_rows,):
        raise InvalidArgumentError("frequency/probability length mismatch")
    resid = model.pinv @ (f - p)
    return float(resid @ resid)


def _moments_from_parts(
    T: np.ndarray,
    starts: np.ndarray,
    sizes: np.ndarray,
    shots_per_block: int,
    frequencies: np.ndarray,
    mode: str,
) -> MomentEstimates:
    """Shared moment dispatch for state and process designs."""
    mode = mode.lower()
    F = np.ascontiguousarray(frequencies[None, :])
    N = float(shots_per_block)
    kern = kernels()
    if mode == MODE_GAUSSIAN:
        mu, V = kern.moments_gaussian_batch(T, F, starts, sizes, N)
    elif mode == MODE_PAPER:
        mu, V = kern.moments_paper_batch(T, F, starts, sizes, N)
    else:
        raise InvalidArgumentError(f"unknown moment mode {mode!r}")
    return MomentEstimates(
        mu=float(mu[0]), var=float(max(V[0], 0.0)), mode=mode
    )


def moments(
    model: DesignModel, data: FrequencyVector, mode: str = MODE_GAUSSIAN
) -> MomentEstimates:
    """Fit (mu, V) of xi from observed frequencies, in the selected mode."""
    _check_structure(model, data)
    return _moments_from_parts(
        model.T,
        model.starts,
        model.sizes,
        data.shots_per_block,
        data.frequencies,
        mode,
    )


def confidence_level(moments: MomentEstimates, d: int, delta: float) -> float:
    """Level C(delta) = F_{mu,V}(2 delta^2 / d)."""
    if delta < 0.0:
        raise InvalidArgumentError("radius must be nonnegative")
    if delta == 0.0:
        return 0.0
    return gamma_cdf(moments.gamma_params(), 2.0 * delta * delta / d)


def confidence_radius(moments: MomentEstimates, d: int, level: float) -> float:
    """Radius delta with C(delta) = level; inverse of confidence_level."""
    if not (0.0 <= level < 1.0):
        raise InvalidArgumentError(f"level must lie in [0, 1), got {level}")
    if level == 0.0:
        return 0.0
    x = gamma_cdf_inverse(moments.gamma_params(), level)
    return math.sqrt(d * x / 2.0)


def region_from_level(
    center, moments: MomentEstimates, level: float
) -> ConfidenceRegion:
    radius = confidence_radius(moments, center.dim, level)
    # store the CDF at the realized radius so the invariant is exact
    realized = confidence_level(moments, center.dim, radius)
    return ConfidenceRegion(center=center, radius=radius, level=realized, moments=moments)


def region_from_radius(
    center, moments: MomentEstimates, radius: float
) -> ConfidenceRegion:
    level = confidence_level(moments, center.dim, radius)
    return ConfidenceRegion(center=center, radius=radius, level=level, moments=moments)
