"""Process tomography on Choi matrices with the same gamma-moment regions.

A channel Phi on d_in dimensions is represented by its Choi matrix
C = sum_ij |i><j| (x) Phi(|i><j|) on the input (x) output space, so
Tr C = d_in and trace preservation reads Tr_out C = identity_in. In the
doubled Pauli basis sigma_i (x) sigma_j (flat index i*d_out^2 + j) trace
preservation fixes every j = 0 coordinate -- c_00 = 1/d_out and the rest
zero -- leaving d_in^2 (d_out^2 - 1) free coordinates. Preparing input
state rho_s and measuring POVM element E_e gives the probability
Tr[(rho_s^T (x) E_e) C], which is affine in the free coordinates: a fixed
offset Tr(E_e)/d_out plus a design row. Estimation, the xi statistic, and
the gamma-moment confidence machinery then work exactly as for states,
with dimension D = d_in * d_out; build regions with region_from_level /
region_from_radius from the state-tomography module, passing the Choi
estimate as the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    PauliBasis,
    from_pauli_vector,
    left_pseudo_inverse,
    partial_trace,
    pauli_basis,
)
from .protocols import ProcessProtocol
from .qst import (
    MODE_GAUSSIAN,
    ConfidenceRegion,
    FrequencyVector,
    MomentEstimates,
    _check_structure,
    _frequencies_of,
    _moments_from_parts,
)

TRACE_PRESERVING_ATOL = 1e-8
CHOI_EIGEN_ATOL = 1e-8


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi matrix of a trace-preserving map, input factor first.

    The physical flag records complete positivity (PSD entries); linear
    inversion can produce valid estimates where it is False.
    """

    op: HermitianOperator
    d_in: int
    d_out: int
    physical: bool

    def __post_init__(self):
        if self.op.dim != self.d_in * self.d_out:
            raise InvalidArgumentError(
                f"matrix dim {self.op.dim} does not factor as "
                f"{self.d_in}x{self.d_out}"
            )
        tr = np.trace(self.op.entries).real
        if abs(tr - self.d_in) > TRACE_PRESERVING_ATOL:
            raise InvalidArgumentError(f"trace must be d_in={self.d_in}, got {tr}")
        reduced = partial_trace(self.op.entries, self.d_in, self.d_out, keep="a")
        if np.max(np.abs(reduced - np.eye(self.d_in))) > TRACE_PRESERVING_ATOL:
            raise InvalidArgumentError(
                "map is not trace-preserving: Tr_out C deviates from identity"
            )
        if self.physical:
            min_eig = np.linalg.eigvalsh(self.op.entries)[0]
            if min_eig < -CHOI_EIGEN_ATOL:
                raise InvalidArgumentError(
                    f"flagged physical but minimum eigenvalue is {min_eig}"
                )

    @classmethod
    def from_matrix(cls, entries, d_in: int, d_out: int) -> "ChoiMatrix":
        op = HermitianOperator(entries)
        min_eig = np.linalg.eigvalsh(op.entries)[0]
        return cls(
            op=op,
            d_in=d_in,
            d_out=d_out,
            physical=bool(min_eig >= -CHOI_EIGEN_ATOL),
        )

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.d_in * self.d_out


@dataclass(frozen=True, eq=False)
class ProcessDesignModel:
    """Affine map from free Choi coordinates to stacked probabilities.

    Row order: inputs outer, readout blocks inner, outcomes innermost.
    Column order: flat (i, j) with the fixed j = 0 columns removed;
    free_mask marks the retained positions within the full coordinate
    vector. offset carries the constant contribution of the fixed
    coordinates. pinv recovers free coordinates from offset-corrected
    probabilities, and T = pinv^T pinv drives the moment formulas.
    """

    A: np.ndarray
    offset: np.ndarray
    pinv: np.ndarray
    T: np.ndarray
    starts: np.ndarray
    sizes: np.ndarray
    shots_per_block: int
    configs: tuple[tuple[int, int], ...]
    free_mask: np.ndarray
    d_in: int
    d_out: int
    basis: PauliBasis

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.d_in * self.d_out


@dataclass(frozen=True, eq=False)
class ProcessTomographyResult:
    """A Choi estimate, optionally paired with its confidence region."""

    estimate: ChoiMatrix
    region: ConfidenceRegion | None = None


def choi_of_unitary(U) -> ChoiMatrix:
    """Rank-one Choi matrix of the conjugation channel U . U^dagger."""
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got {U.shape}")
    d = U.shape[0]
    if np.max(np.abs(U.conj().T @ U - np.eye(d))) > 1e-10:
        raise InvalidArgumentError("matrix is not unitary")
    # C = |Omega><Omega| with |Omega> = sum_i |i> (x) U|i>
    omega = np.ascontiguousarray(U.T).reshape(-1)
    entries = np.outer(omega, omega.conj())
    return ChoiMatrix(
        op=HermitianOperator(entries), d_in=d, d_out=d, physical=True
    )


def depolarizing_channel(m: int, p: float) -> ChoiMatrix:
    """Mix the identity channel with the fully depolarizing one at rate p."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"depolarizing rate must lie in [0, 1], got {p}")
    d = 2**m
    identity = choi_of_unitary(np.eye(d)).matrix
    entries = (1.0 - p) * identity + (p / d) * np.eye(d * d)
    return ChoiMatrix(
        op=HermitianOperator(entries), d_in=d, d_out=d, physical=True
    )


def apply_channel(rho: DensityMatrix, C: ChoiMatrix) -> DensityMatrix:
    """Output state Tr_in[(rho^T (x) 1) C]."""
    if not isinstance(rho, DensityMatrix):
        raise InvalidArgumentError("input must be a DensityMatrix")
    if rho.dim != C.d_in:
        raise InvalidArgumentError(
            f"input dim {rho.dim} does not match channel input dim {C.d_in}"
        )
    C4 = C.matrix.reshape(C.d_in, C.d_out, C.d_in, C.d_out)
    out = np.einsum("ki,kaib->ab", rho.matrix, C4)
    return DensityMatrix.from_matrix(out)


def process_probabilities(C: ChoiMatrix, protocol: ProcessProtocol) -> np.ndarray:
    """Stacked outcome probabilities over all (input, readout block) configs."""
    if not C.physical:
        raise InvalidArgumentError("probabilities require a physical channel")
    if C.d_in != protocol.inputs.dim or C.d_out != protocol.readout.dim:
        raise InvalidArgumentError("channel dims do not match the protocol")
    rows = []
    for rho_in in protocol.inputs.states:
        out = apply_channel(rho_in, C)
        for block in protocol.readout.blocks:
            rows.append(
                np.einsum("nij,ji->n", block.elements, out.matrix).real
            )
    return np.concatenate(rows)


def build_process_design(protocol: ProcessProtocol) -> ProcessDesignModel:
    """Assemble the design over free Choi coordinates and invert it."""
    inputs, readout = protocol.inputs, protocol.readout
    d_in, d_out = inputs.dim, readout.dim
    m_in = int(round(math.log2(d_in)))
    basis_in = pauli_basis(m_in)
    basis_out = pauli_basis(readout.qubits)
    # input-side row R[s, i] = Tr(rho_s^T sigma_i)
    R = np.array(
        [
            np.einsum("ij,kij->k", rho.matrix, basis_in.elements).real
            for rho in inputs.states
        ]
    )
    # readout-side rows M[e, j] = Tr(E_e sigma_j), stacked over blocks
    M = np.vstack(
        [
            np.einsum("nij,kji->nk", block.elements, basis_out.elements).real
            for block in readout.blocks
        ]
    )
    full = np.einsum("si,ej->seij", R, M).reshape(
        len(inputs) * M.shape[0], d_in**2 * d_out**2
    )
    # fixed coordinates contribute only through c_00 = 1/d_out
    offset = full[:, 0] / d_out
    free_mask = (np.arange(d_in**2 * d_out**2) % d_out**2) != 0
    A = np.ascontiguousarray(full[:, free_mask])
    pinv = np.ascontiguousarray(left_pseudo_inverse(A))
    T = np.ascontiguousarray(pinv.T @ pinv)
    out_sizes = np.asarray(readout.outcomes_per_block, dtype=np.int64)
    sizes = np.tile(out_sizes, len(inputs))
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
    configs = tuple(
        (s, b) for s in range(len(inputs)) for b in range(readout.n_blocks)
    )
    return ProcessDesignModel(
        A=A,
        offset=offset,
        pinv=pinv,
        T=T,
        starts=starts,
        sizes=sizes,
        shots_per_block=protocol.shots_per_config,
        configs=configs,
        free_mask=free_mask,
        d_in=d_in,
        d_out=d_out,
        basis=pauli_basis(m_in + readout.qubits),
    )


def process_frequencies_from_counts(
    model: ProcessDesignModel, counts
) -> FrequencyVector:
    """Wrap raw stacked counts in the model's configuration structure."""
    return FrequencyVector(
        counts=np.asarray(counts, dtype=np.int64),
        starts=model.starts,
        sizes=model.sizes,
        shots_per_block=model.shots_per_block,
    )


def process_linear_inversion(
    model: ProcessDesignModel, data
) -> ProcessTomographyResult:
    """Least-squares Choi estimate; Tr_out = identity holds by construction.

    data is a FrequencyVector or a raw frequency vector in design row order.
    """
    f = _frequencies_of(model, data)
    c_free = model.pinv @ (f - model.offset)
    D = model.dim
    c = np.zeros(D * D)
    c[0] = 1.0 / model.d_out
    c[model.free_mask] = c_free
    op = from_pauli_vector(c, model.basis)
    min_eig = np.linalg.eigvalsh(op.entries)[0]
    estimate = ChoiMatrix(
        op=op,
        d_in=model.d_in,
        d_out=model.d_out,
        physical=bool(min_eig >= -CHOI_EIGEN_ATOL),
    )
    return ProcessTomographyResult(estimate=estimate)


def process_moments(
    model: ProcessDesignModel, data: FrequencyVector, mode: str = MODE_GAUSSIAN
) -> MomentEstimates:
    """Fit (mu, V) of the process xi statistic from observed frequencies."""
    _check_structure(model, data)
    return _moments_from_parts(
        model.T,
        model.starts,
        model.sizes,
        data.shots_per_block,
        data.frequencies,
        mode,
    )
