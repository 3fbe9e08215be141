"""Synthetic data, random ensembles, and calibration experiments.

Reproducibility contract: every randomized routine takes a 64-bit seed
(or an existing Generator). Internally, work item k of a seeded routine
draws from SeedSequence(entropy=seed, spawn_key=path + (k,)), so results
are independent of batching and parallel scheduling, and nested
experiments stay reproducible when given distinct path prefixes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .bootstrap import BootstrapConfig, bootstrap_xi, mc_confidence_radius
from .errors import InvalidArgumentError
from .linalg import DensityMatrix, pure_state_density
from .protocols import (
    MAX_QST_QUBITS,
    MeasurementProtocol,
    ProcessProtocol,
    mub_protocol,
    process_protocol,
    sic_protocol,
)
from .qpt import (
    ChoiMatrix,
    build_process_design,
    choi_of_unitary,
    depolarizing_channel,
    process_probabilities,
)
from .qst import (
    MODE_GAUSSIAN,
    MODE_PAPER,
    FrequencyVector,
    MomentEstimates,
    _frequencies_of,
    _moments_from_parts,
    build_design,
    confidence_radius,
    probabilities,
)
from .special import gamma_cdf_inverse

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)
# quarter turns about the x and y axes
RX90 = np.array([[1, -1j], [-1j, 1]], dtype=np.complex128) / math.sqrt(2.0)
RY90 = np.array([[1, -1], [1, 1]], dtype=np.complex128) / math.sqrt(2.0)


def derived_stream(seed: int, path: tuple[int, ...] = ()) -> np.random.Generator:
    """The documented substream at a derivation path under a root seed."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=path))
    )


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return derived_stream(int(seed))


def _guard_qubits(m: int):
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"qubit count must be a positive integer, got {m}")
    if m > MAX_QST_QUBITS:
        raise InvalidArgumentError(
            f"qubit count {m} exceeds the resource guard of {MAX_QST_QUBITS}"
        )


def sample_counts(model, p, seed) -> FrequencyVector:
    """Draw per-block multinomial counts at probabilities p.

    model supplies the block structure and shots per block; p is a stacked
    probability vector in design row order; seed is an integer or a
    Generator to consume.
    """
    p = _frequencies_of(model, p)
    rng = _as_generator(seed)
    counts = np.empty(model.n_rows, dtype=np.int64)
    N = model.shots_per_block
    for b in range(len(model.starts)):
        s, n = model.starts[b], model.sizes[b]
        # Roundoff-scale negatives (true zeros) have already passed
        # validation; clip them so the multinomial weights are proper.
        block = np.clip(p[s : s + n], 0.0, None)
        counts[s : s + n] = rng.multinomial(N, block / block.sum())
    return FrequencyVector(
        counts=counts,
        starts=model.starts,
        sizes=model.sizes,
        shots_per_block=N,
    )


def random_pure_state(m: int, seed) -> DensityMatrix:
    """Haar-random pure state: normalized complex-Gaussian amplitudes."""
    _guard_qubits(m)
    rng = _as_generator(seed)
    d = 2**m
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return pure_state_density(z / np.linalg.norm(z))


def random_mixed_state(m: int, seed) -> DensityMatrix:
    """Hilbert-Schmidt uniform mixed state: G G^dagger / Tr from Ginibre G."""
    _guard_qubits(m)
    rng = _as_generator(seed)
    d = 2**m
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    W = G @ G.conj().T
    return DensityMatrix.from_matrix(W / np.trace(W).real)


def random_unitary(m: int, seed) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with phase correction."""
    _guard_qubits(m)
    rng = _as_generator(seed)
    d = 2**m
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def channel_from_dilation(U, d_in: int) -> ChoiMatrix:
    """Choi matrix of rho -> Tr_anc[U (rho (x) |0><0|) U^dagger].

    U acts on system (x) ancilla; the ancilla dimension is inferred from
    the shape of U.
    """
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] % d_in != 0:
        raise InvalidArgumentError(
            f"dilation unitary shape {U.shape} does not factor over d_in={d_in}"
        )
    d_anc = U.shape[0] // d_in
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-10:
        raise InvalidArgumentError("dilation matrix is not unitary")
    U4 = U.reshape(d_in, d_anc, d_in, d_anc)
    entries = np.zeros((d_in * d_in, d_in * d_in), dtype=np.complex128)
    for k in range(d_anc):
        # Kraus operator K_k[a, i] = <a,k|U|i,0>; its Choi vector is
        # v[i*d + a] = K_k[a, i]
        v = np.ascontiguousarray(U4[:, k, :, 0].T).reshape(-1)
        entries += np.outer(v, v.conj())
    return ChoiMatrix.from_matrix(entries, d_in, d_in)


def random_channel(m: int, seed) -> ChoiMatrix:
    """Random CPTP map: Haar dilation over an equal-size |0> ancilla."""
    _guard_qubits(m)
    rng = _as_generator(seed)
    return channel_from_dilation(random_unitary(2 * m, rng), 2**m)


# ---------------------------------------------------------------------------
# named subjects


def _ghz(m: int) -> DensityMatrix:
    amp = np.zeros(2**m)
    amp[0] = amp[-1] = 1.0 / math.sqrt(2.0)
    return pure_state_density(amp)


def _qubit_theta() -> DensityMatrix:
    t = math.pi / 8.0
    return pure_state_density(
        np.array([math.cos(t), math.sin(t) * np.exp(1j * math.pi / 4.0)])
    )


_STATE_BUILDERS = {
    "qubit0": lambda: pure_state_density(np.array([1.0, 0.0])),
    "qubit-theta": _qubit_theta,
    "qubit00": lambda: pure_state_density(np.array([1.0, 0.0, 0.0, 0.0])),
    "mixed1": lambda: DensityMatrix.from_matrix(np.eye(2) / 2.0),
    "mixed2": lambda: DensityMatrix.from_matrix(np.eye(4) / 4.0),
    "bell2": lambda: _ghz(2),
    "ghz3": lambda: _ghz(3),
}

_CHANNEL_BUILDERS = {
    "hadamard": lambda: choi_of_unitary(HADAMARD),
    "rx90": lambda: choi_of_unitary(RX90),
    "ry90": lambda: choi_of_unitary(RY90),
    "identity1": lambda: choi_of_unitary(np.eye(2)),
}


def subject_names() -> tuple[str, ...]:
    return tuple(_STATE_BUILDERS) + tuple(_CHANNEL_BUILDERS) + (
        "depol1-<rate>",
        "depol2-<rate>",
    )


def subject(name: str):
    """Build a named state or channel, e.g. 'ghz3' or 'depol1-0.1'."""
    key = name.strip().lower()
    if key in _STATE_BUILDERS:
        return _STATE_BUILDERS[key]()
    if key in _CHANNEL_BUILDERS:
        return _CHANNEL_BUILDERS[key]()
    for qubits in (1, 2):
        prefix = f"depol{qubits}-"
        if key.startswith(prefix):
            try:
                rate = float(key[len(prefix) :])
            except ValueError:
                raise InvalidArgumentError(
                    f"malformed depolarizing rate in subject {name!r}"
                ) from None
            return depolarizing_channel(qubits, rate)
    raise InvalidArgumentError(
        f"unknown subject {name!r}; known: {', '.join(subject_names())}"
    )


def subject_qubits(obj) -> int:
    d = obj.d_in if isinstance(obj, ChoiMatrix) else obj.dim
    return int(round(math.log2(d)))


def default_protocol(obj, shots: int, readout: str = "mub"):
    """The standard measurement scheme for a subject at a shot budget."""
    m = subject_qubits(obj)
    if isinstance(obj, ChoiMatrix):
        if readout != "mub":
            raise InvalidArgumentError(
                "process tomography here uses tetrahedron inputs with MUB readout"
            )
        return process_protocol(m, shots)
    if readout == "mub":
        return mub_protocol(m, shots)
    if readout == "sic":
        return sic_protocol(m, shots)
    raise InvalidArgumentError(f"readout must be 'mub' or 'sic', got {readout!r}")


# ---------------------------------------------------------------------------
# coverage experiments


@dataclass(frozen=True)
class CoverageReport:
    """Observed coverage per requested level for one subject."""

    subject: str
    levels: tuple[float, ...]
    f_in: tuple[float, ...]
    reps: int
    shots: int
    mode: str
    seconds: float

    def __post_init__(self):
        if self.reps < 1:
            raise InvalidArgumentError("reps must be at least 1")
        if len(self.levels) != len(self.f_in):
            raise InvalidArgumentError("levels and coverage lengths differ")
        if any(not 0.0 <= f <= 1.0 for f in self.f_in):
            raise InvalidArgumentError("coverage fractions must lie in [0, 1]")


def binomial_spread(level: float, reps: int) -> float:
    """Expected statistical spread of an observed coverage fraction."""
    return math.sqrt(level * (1.0 - level) / reps)


def model_and_probabilities(truth, protocol):
    if isinstance(truth, ChoiMatrix):
        if not isinstance(protocol, ProcessProtocol):
            raise InvalidArgumentError("a channel subject needs a ProcessProtocol")
        model = build_process_design(protocol)
        return model, process_probabilities(truth, protocol)
    if not isinstance(protocol, MeasurementProtocol):
        raise InvalidArgumentError("a state subject needs a MeasurementProtocol")
    model = build_design(protocol)
    return model, probabilities(truth, model)


def _sample_batch(model, p, reps: int, seed: int, path: tuple[int, ...]) -> np.ndarray:
    """Stacked frequencies for `reps` independent replications."""
    N = model.shots_per_block
    starts, sizes = model.starts, model.sizes
    blocks = [
        np.clip(p[starts[b] : starts[b] + sizes[b]], 0.0, None)
        for b in range(len(starts))
    ]
    pvals = [block / block.sum() for block in blocks]
    F = np.empty((reps, model.n_rows))
    for r in range(reps):
        rng = derived_stream(seed, path + (r,))
        for b in range(len(starts)):
            s, n = starts[b], sizes[b]
            F[r, s : s + n] = rng.multinomial(N, pvals[b])
    return F / N


def coverage_experiment(
    truth,
    protocol,
    levels,
    reps: int,
    mode: str = MODE_GAUSSIAN,
    seed: int = 0,
    path: tuple[int, ...] = (),
    label: str | None = None,
) -> CoverageReport:
    """Fraction of replications whose region contains the true object.

    Each replication samples counts at the true probabilities, fits the
    xi moments from the observed frequencies, and checks whether the true
    state or channel lies within the level-C radius of the estimate —
    equivalently, whether the realized xi falls below the fitted gamma
    quantile.
    """
    levels = tuple(float(c) for c in levels)
    for c in levels:
        if not 0.0 <= c < 1.0:
            raise InvalidArgumentError(f"levels must lie in [0, 1), got {c}")
    if reps < 1:
        raise InvalidArgumentError("reps must be at least 1")
    t0 = time.perf_counter()
    model, p = model_and_probabilities(truth, protocol)
    F = _sample_batch(model, p, reps, seed, path)
    kern = kernels()
    xi = kern.xi_batch(model.pinv, F, np.ascontiguousarray(p))
    N = float(model.shots_per_block)
    if mode == MODE_GAUSSIAN:
        mu, V = kern.moments_gaussian_batch(model.T, F, model.starts, model.sizes, N)
    elif mode == MODE_PAPER:
        mu, V = kern.moments_paper_batch(model.T, F, model.starts, model.sizes, N)
    else:
        raise InvalidArgumentError(f"unknown moment mode {mode!r}")
    hits = np.zeros(len(levels), dtype=np.int64)
    for r in range(reps):
        params = MomentEstimates(
            mu=float(mu[r]), var=float(max(V[r], 0.0)), mode=mode
        ).gamma_params()
        for j, c in enumerate(levels):
            if c == 0.0:
                continue
            if xi[r] < gamma_cdf_inverse(params, c):
                hits[j] += 1
    f_in = tuple(float(h) / reps for h in hits)
    return CoverageReport(
        subject=label or type(truth).__name__,
        levels=levels,
        f_in=f_in,
        reps=reps,
        shots=model.shots_per_block,
        mode=mode,
        seconds=time.perf_counter() - t0,
    )


def moments_like(model, frequencies: np.ndarray, mode: str, shots: int) -> MomentEstimates:
    """Moment estimates for one stacked frequency vector."""
    return _moments_from_parts(
        model.T, model.starts, model.sizes, shots, frequencies, mode
    )


def ensemble_coverage(
    kind: str,
    qubits: int,
    count: int,
    shots: int,
    reps: int,
    levels,
    mode: str = MODE_GAUSSIAN,
    seed: int = 0,
) -> list[CoverageReport]:
    """Coverage reports over randomly drawn subjects of one kind."""
    builders = {
        "pure": random_pure_state,
        "mixed": random_mixed_state,
        "unitary": lambda m, rng: choi_of_unitary(random_unitary(m, rng)),
        "channel": random_channel,
    }
    if kind not in builders:
        raise InvalidArgumentError(
            f"kind must be one of {sorted(builders)}, got {kind!r}"
        )
    if count < 1:
        raise InvalidArgumentError("subject count must be at least 1")
    reports = []
    for i in range(count):
        truth = builders[kind](qubits, derived_stream(seed, (i, 0)))
        if isinstance(truth, ChoiMatrix):
            protocol = process_protocol(qubits, shots)
        else:
            protocol = mub_protocol(qubits, shots)
        reports.append(
            coverage_experiment(
                truth,
                protocol,
                levels,
                reps,
                mode=mode,
                seed=seed,
                path=(i, 1),
                label=f"{kind}-{i}",
            )
        )
    return reports


# ---------------------------------------------------------------------------
# profiling


@dataclass(frozen=True)
class ProfileReport:
    """Wall-clock comparison of the gamma and bootstrap region methods."""

    subject: str
    shots: int
    bootstrap_samples: int
    gamma_seconds: float
    bootstrap_seconds: float

    @property
    def speedup(self) -> float:
        return self.bootstrap_seconds / self.gamma_seconds


def profile_methods(
    truth,
    protocol,
    level: float = 0.95,
    bootstrap_samples: int = 1000,
    seed: int = 0,
    label: str | None = None,
) -> ProfileReport:
    """Time a gamma-moment radius against a bootstrap radius on one dataset.

    The sub-millisecond gamma path is timed over enough repetitions to
    meter reliably; the reported figure is per call.
    """
    model, p = model_and_probabilities(truth, protocol)
    data = sample_counts(model, p, derived_stream(seed, (0,)))
    d = model.dim

    def gamma_radius():
        est = moments_like(model, data.frequencies, MODE_GAUSSIAN, data.shots_per_block)
        return confidence_radius(est, d, level)

    gamma_radius()  # warm the kernels before metering
    t0 = time.perf_counter()
    calls = 0
    while True:
        gamma_radius()
        calls += 1
        elapsed = time.perf_counter() - t0
        if elapsed > 0.2 and calls >= 5:
            break
        if calls >= 1000:
            break
    gamma_seconds = (time.perf_counter() - t0) / calls

    cfg = BootstrapConfig(samples=bootstrap_samples, seed=seed)
    t0 = time.perf_counter()
    dist = bootstrap_xi(model, data, cfg)
    mc_confidence_radius(dist, d, level)
    bootstrap_seconds = time.perf_counter() - t0
    return ProfileReport(
        subject=label or type(truth).__name__,
        shots=model.shots_per_block,
        bootstrap_samples=bootstrap_samples,
        gamma_seconds=gamma_seconds,
        bootstrap_seconds=bootstrap_seconds,
    )
