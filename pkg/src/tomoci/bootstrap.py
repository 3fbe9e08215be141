"""Monte-Carlo bootstrap baseline for the xi distribution.

The empirical alternative to gamma moment matching: resample counts from
the block multinomial at the observed frequencies (parametric bootstrap),
score each resample with xi = ||pinv (f* - f)||^2, and read radii off the
empirical quantiles. Slow but assumption-free; the gamma method is
validated against it.

Each resample draws from its own RNG stream seeded by
SeedSequence(entropy=seed, spawn_key=(sample_index,)), so results are
independent of batching or parallel scheduling and any prefix of a run
is reproducible on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import InvalidArgumentError
from .qst import FrequencyVector, _check_structure, _frequencies_of


@dataclass(frozen=True)
class BootstrapConfig:
    """Sample count and root seed for a bootstrap run."""

    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 2:
            raise InvalidArgumentError(
                f"bootstrap needs at least 2 samples, got {self.samples}"
            )


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted nonnegative xi samples."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or len(samples) < 1:
            raise InvalidArgumentError("samples must be a nonempty 1-d vector")
        if samples[0] < 0.0:
            raise InvalidArgumentError("xi samples must be nonnegative")
        if np.any(np.diff(samples) < 0.0):
            raise InvalidArgumentError("samples must be sorted ascending")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def count(self) -> int:
        return len(self.samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def variance(self) -> float:
        return float(np.var(self.samples, ddof=1))


def _sample_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def bootstrap_xi(
    model, f, cfg: BootstrapConfig, shots: int | None = None
) -> EmpiricalDistribution:
    """Resample counts at f and score xi against f, cfg.samples times.

    f is a FrequencyVector (shots inferred) or a raw frequency/probability
    vector with explicit shots — the latter supports sampling at the true
    probabilities for oracle studies. model may be a state or process
    design; only its pinv and block structure are used.
    """
    if isinstance(f, FrequencyVector):
        _check_structure(model, f)
        if shots is None:
            shots = f.shots_per_block
        elif shots != f.shots_per_block:
            raise InvalidArgumentError(
                f"shots={shots} conflicts with the data's {f.shots_per_block}"
            )
        f0 = f.frequencies
    else:
        f0 = _frequencies_of(model, f)
        if shots is None:
            raise InvalidArgumentError("raw frequencies require explicit shots")
    N = int(shots)
    if N < 1:
        raise InvalidArgumentError(f"shots must be at least 1, got {N}")
    starts, sizes = model.starts, model.sizes
    n_blocks = len(starts)
    # exact renormalization guards multinomial's sum-to-1 check against
    # representation error in f0
    pvals = [
        f0[starts[b] : starts[b] + sizes[b]]
        / f0[starts[b] : starts[b] + sizes[b]].sum()
        for b in range(n_blocks)
    ]
    F = np.empty((cfg.samples, model.n_rows))
    for i in range(cfg.samples):
        rng = _sample_stream(cfg.seed, i)
        for b in range(n_blocks):
            s, n = starts[b], sizes[b]
            F[i, s : s + n] = rng.multinomial(N, pvals[b])
    F /= N
    xi = kernels().xi_batch(
        np.ascontiguousarray(model.pinv),
        np.ascontiguousarray(F),
        np.ascontiguousarray(f0),
    )
    return EmpiricalDistribution(samples=np.sort(xi))


def empirical_cdf(dist: EmpiricalDistribution, x: float) -> float:
    """Right-continuous empirical CDF: fraction of samples <= x."""
    return float(
        np.searchsorted(dist.samples, x, side="right") / dist.count
    )


def empirical_quantile(dist: EmpiricalDistribution, q: float) -> float:
    """Nearest-rank quantile: the ceil(q * count)-th order statistic.

    q = 0 returns the lowest sample.
    """
    if not 0.0 <= q < 1.0:
        raise InvalidArgumentError(f"quantile level must lie in [0, 1), got {q}")
    rank = max(math.ceil(q * dist.count), 1)
    return float(dist.samples[rank - 1])


def mc_confidence_radius(dist: EmpiricalDistribution, d: int, level: float) -> float:
    """Radius sqrt(d q / 2) from the empirical level-quantile q of xi."""
    return math.sqrt(d * empirical_quantile(dist, level) / 2.0)
