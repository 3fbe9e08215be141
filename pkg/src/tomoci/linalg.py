"""Pauli-basis construction, operator/vector transforms, Hilbert-Schmidt
geometry, and stable left pseudo-inversion.

Conventions fixed here and relied on everywhere else:

- Pauli strings are ordered lexicographically in (I, X, Y, Z) per qubit,
  identity first; index i in [0, 4^m) has base-4 digits giving the
  single-qubit factors, first qubit most significant.
- The basis is orthogonal with Tr(sigma_i sigma_j) = d * delta_ij, so the
  Pauli vector of an operator is r_i = Tr(op sigma_i) / d and the zeroth
  coordinate of any unit-trace operator is 1/d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NotInformationallyCompleteError

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-10
EIGEN_ATOL = 1e-10
RANK_RTOL = 1e-10

PAULI_1 = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
PAULI_NAMES = "IXYZ"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A d x d complex matrix equal to its own conjugate transpose."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidArgumentError(f"expected a square matrix, got {entries.shape}")
        if np.max(np.abs(entries - entries.conj().T)) > HERMITIAN_ATOL:
            raise InvalidArgumentError("matrix is not Hermitian within 1e-12")
        object.__setattr__(self, "entries", _readonly(entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace Hermitian operator with a physicality flag.

    The flag records whether the matrix is positive semidefinite; linear
    inversion can produce valid estimates where it is False.
    """

    op: HermitianOperator
    physical: bool

    def __post_init__(self):
        tr = np.trace(self.op.entries)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise InvalidArgumentError(f"trace must be 1, got {tr}")
        if self.physical:
            min_eig = np.linalg.eigvalsh(self.op.entries)[0]
            if min_eig < -EIGEN_ATOL:
                raise InvalidArgumentError(
                    f"flagged physical but minimum eigenvalue is {min_eig}"
                )

    @classmethod
    def from_matrix(cls, entries) -> "DensityMatrix":
        op = HermitianOperator(entries)
        min_eig = np.linalg.eigvalsh(op.entries)[0]
        return cls(op=op, physical=bool(min_eig >= -EIGEN_ATOL))

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.op.dim


def pure_state_density(psi) -> DensityMatrix:
    """Density matrix |psi><psi| of a (not necessarily normalized) vector."""
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise InvalidArgumentError("state vector must be nonzero")
    psi = psi / norm
    return DensityMatrix(op=HermitianOperator(np.outer(psi, psi.conj())), physical=True)


@dataclass(frozen=True, eq=False)
class PauliBasis:
    """All 4^m Pauli strings on m qubits as a (4^m, 2^m, 2^m) array."""

    qubits: int
    elements: np.ndarray

    @property
    def dim(self) -> int:
        return 2**self.qubits

    @property
    def size(self) -> int:
        return 4**self.qubits

    def labels(self) -> list[str]:
        out = []
        for i in range(self.size):
            digits = np.base_repr(i, base=4).zfill(self.qubits)
            out.append("".join(PAULI_NAMES[int(c)] for c in digits))
        return out


@dataclass(frozen=True, eq=False)
class PauliVector:
    """Real coordinates of a Hermitian operator in a PauliBasis."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 1:
            raise InvalidArgumentError("coords must be a 1-d real vector")
        object.__setattr__(self, "coords", _readonly(coords))


def pauli_basis(m: int) -> PauliBasis:
    """Tensor-product Pauli basis on m qubits, identity first.

    Guarded at m <= 10: the dense element array grows as 16^m.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"qubit count must be a positive integer, got {m}")
    if m > 10:
        raise InvalidArgumentError(f"qubit count {m} exceeds the resource guard of 10")
    elements = PAULI_1
    for _ in range(m - 1):
        # index (i_prev * 4 + i_last) preserves lexicographic order
        elements = np.einsum("aij,bkl->abikjl", elements, PAULI_1).reshape(
            elements.shape[0] * 4,
            elements.shape[1] * 2,
            elements.shape[2] * 2,
        )
    return PauliBasis(qubits=m, elements=_readonly(np.ascontiguousarray(elements)))


def _entries_of(op) -> np.ndarray:
    if isinstance(op, HermitianOperator):
        return op.entries
    if isinstance(op, DensityMatrix):
        return op.op.entries
    if hasattr(op, "op") and isinstance(op.op, HermitianOperator):
        return op.op.entries
    return np.asarray(op, dtype=np.complex128)


def to_pauli_vector(op, basis: PauliBasis) -> PauliVector:
    """Coordinates r_i = Tr(op sigma_i) / d."""
    entries = _entries_of(op)
    if entries.shape != (basis.dim, basis.dim):
        raise InvalidArgumentError(
            f"operator shape {entries.shape} does not match basis dim {basis.dim}"
        )
    coords = np.einsum("kij,ji->k", basis.elements, entries) / basis.dim
    return PauliVector(coords=coords.real)


def from_pauli_vector(r, basis: PauliBasis) -> HermitianOperator:
    """Operator sum_i r_i sigma_i."""
    coords = r.coords if isinstance(r, PauliVector) else np.asarray(r, dtype=np.float64)
    if coords.shape != (basis.size,):
        raise InvalidArgumentError(
            f"coordinate length {coords.shape} does not match basis size {basis.size}"
        )
    entries = np.einsum("k,kij->ij", coords, basis.elements)
    return HermitianOperator(entries)


def hs_distance(a, b) -> float:
    """Hilbert-Schmidt distance sqrt(Tr[(a-b)^2] / 2)."""
    ea, eb = _entries_of(a), _entries_of(b)
    if ea.shape != eb.shape:
        raise InvalidArgumentError(f"dimension mismatch: {ea.shape} vs {eb.shape}")
    diff = ea - eb
    # Tr(diff^2) equals the squared Frobenius norm for Hermitian diff
    return math.sqrt(max(np.linalg.norm(diff) ** 2 / 2.0, 0.0))


def left_pseudo_inverse(A: np.ndarray) -> np.ndarray:
    """Left pseudo-inverse of a full-column-rank tall matrix, via SVD.

    Raises NotInformationallyCompleteError when the smallest singular
    value falls below 1e-10 of the largest; the normal-equation formula
    (A^T A)^{-1} A^T is avoided for conditioning reasons.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {A.shape}")
    P, K = A.shape
    if P < K:
        raise NotInformationallyCompleteError(
            f"design has more columns ({K}) than rows ({P})"
        )
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        raise NotInformationallyCompleteError(
            f"rank-deficient design: singular values span [{s[-1]:.3e}, {s[0]:.3e}]"
        )
    return (Vt.T / s) @ U.T


def partial_trace(M: np.ndarray, dim_a: int, dim_b: int, keep: str) -> np.ndarray:
    """Trace out one tensor factor of a (dim_a*dim_b) square matrix.

    keep="a" traces out the second factor, keep="b" the first.
    """
    M = np.asarray(M)
    if M.shape != (dim_a * dim_b, dim_a * dim_b):
        raise InvalidArgumentError(
            f"matrix shape {M.shape} does not factor as {dim_a}x{dim_b}"
        )
    M4 = M.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "a":
        return np.einsum("ibjb->ij", M4)
    if keep == "b":
        return np.einsum("aiaj->ij", M4)
    raise InvalidArgumentError(f"keep must be 'a' or 'b', got {keep!r}")
