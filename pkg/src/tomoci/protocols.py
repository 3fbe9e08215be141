"""Measurement and preparation ensembles: per-qubit MUB projective blocks,
SIC-POVMs, tetrahedron input states, and the protocol descriptors that fix
the multinomial block structure of an experiment.

Ordering conventions (fixed so file layouts and design matrices are
reproducible byte-for-byte):

- MUB blocks are indexed by axis words over {x, y, z}, first qubit first,
  in lexicographic order with x < y < z. Outcomes within a block follow
  binary order of the sign pattern with + mapped to bit 0.
- SIC elements and tetrahedron states follow base-4 lexicographic order of
  the per-qubit tetrahedron indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .linalg import DensityMatrix, HermitianOperator, _readonly

PAULI_AXES = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

# tetrahedron Bloch vectors: even-parity sign set, unit length
TETRAHEDRON_BLOCH = np.array(
    [
        [1, 1, 1],
        [1, -1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
    ],
    dtype=np.float64,
) / np.sqrt(3.0)

MAX_QST_QUBITS = 8
MAX_QPT_QUBITS = 5


@dataclass(frozen=True, eq=False)
class Povm:
    """A set of PSD operators that sums to the identity."""

    elements: np.ndarray

    def __post_init__(self):
        elements = np.asarray(self.elements, dtype=np.complex128)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise InvalidArgumentError(
                f"expected a stack of square matrices, got {elements.shape}"
            )
        total = elements.sum(axis=0)
        if np.max(np.abs(total - np.eye(elements.shape[1]))) > 1e-10:
            raise InvalidArgumentError("POVM elements do not sum to the identity")
        for idx, e in enumerate(elements):
            if np.max(np.abs(e - e.conj().T)) > 1e-12:
                raise InvalidArgumentError(f"POVM element {idx} is not Hermitian")
            if np.linalg.eigvalsh(e)[0] < -1e-10:
                raise InvalidArgumentError(f"POVM element {idx} is not PSD")
        object.__setattr__(self, "elements", _readonly(elements))

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]


@dataclass(frozen=True, eq=False)
class MeasurementProtocol:
    """Ordered POVM blocks, each measured with its own batch of shots."""

    qubits: int
    blocks: tuple[Povm, ...]
    labels: tuple[str, ...]
    shots_per_block: int
    kind: str

    def __post_init__(self):
        if self.shots_per_block < 1:
            raise InvalidArgumentError("shots per block must be at least 1")
        if len(self.blocks) != len(self.labels):
            raise InvalidArgumentError("one label per block required")
        dims = {b.dim for b in self.blocks}
        if dims != {2**self.qubits}:
            raise InvalidArgumentError(f"block dims {dims} do not match qubit count")

    @property
    def dim(self) -> int:
        return 2**self.qubits

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def outcomes_per_block(self) -> tuple[int, ...]:
        return tuple(b.n_outcomes for b in self.blocks)

    @property
    def total_shots(self) -> int:
        return self.shots_per_block * len(self.blocks)


@dataclass(frozen=True, eq=False)
class InputStateSet:
    """Pure product preparation states for process tomography."""

    states: tuple[DensityMatrix, ...]

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class ProcessProtocol:
    """Input states crossed with readout blocks; shots per configuration."""

    inputs: InputStateSet
    readout: MeasurementProtocol
    shots_per_config: int

    def __post_init__(self):
        if self.shots_per_config < 1:
            raise InvalidArgumentError("shots per configuration must be at least 1")
        if self.inputs.dim != self.readout.dim:
            raise InvalidArgumentError("input and readout dimensions differ")

    @property
    def n_configs(self) -> int:
        return len(self.inputs) * self.readout.n_blocks

    @property
    def total_shots(self) -> int:
        return self.shots_per_config * self.n_configs


def _axis_projectors(axis: str) -> np.ndarray:
    P = PAULI_AXES[axis]
    eye = np.eye(2, dtype=np.complex128)
    return np.stack([(eye + P) / 2.0, (eye - P) / 2.0])


def mub_protocol(m: int, N: int, for_process: bool = False) -> MeasurementProtocol:
    """Per-qubit Pauli-axis readout: 3^m blocks of 2^m rank-1 projectors.

    Block for axis word w measures every qubit along its letter of w;
    outcome bit 0 is the + eigenstate.
    """
    limit = MAX_QPT_QUBITS if for_process else MAX_QST_QUBITS
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"qubit count must be a positive integer, got {m}")
    if m > limit:
        raise InvalidArgumentError(
            f"qubit count {m} exceeds the resource guard of {limit}"
        )
    if N < 1:
        raise InvalidArgumentError("shots per block must be at least 1")

    single = {a: _axis_projectors(a) for a in "xyz"}
    blocks = []
    labels = []
    for word in itertools.product("xyz", repeat=m):
        elements = np.ones((1, 1, 1), dtype=np.complex128)
        for axis in word:
            elements = np.einsum("aij,bkl->abikjl", elements, single[axis]).reshape(
                elements.shape[0] * 2,
                elements.shape[1] * 2,
                elements.shape[2] * 2,
            )
        blocks.append(Povm(elements=elements))
        labels.append("".join(word))
    return MeasurementProtocol(
        qubits=m,
        blocks=tuple(blocks),
        labels=tuple(labels),
        shots_per_block=N,
        kind="mub",
    )


def sic_povm(m: int) -> Povm:
    """Tensor-product SIC-POVM: 4^m sub-normalized tetrahedron projectors."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"qubit count must be a positive integer, got {m}")
    if m > MAX_QST_QUBITS:
        raise InvalidArgumentError(
            f"qubit count {m} exceeds the resource guard of {MAX_QST_QUBITS}"
        )
    eye = np.eye(2, dtype=np.complex128)
    single = np.stack(
        [
            (eye + sum(s[i] * PAULI_AXES[a] for i, a in enumerate("xyz"))) / 4.0
            for s in TETRAHEDRON_BLOCH
        ]
    )
    elements = single
    for _ in range(m - 1):
        elements = np.einsum("aij,bkl->abikjl", elements, single).reshape(
            elements.shape[0] * 4,
            elements.shape[1] * 2,
            elements.shape[2] * 2,
        )
    return Povm(elements=elements)


def sic_protocol(m: int, N: int) -> MeasurementProtocol:
    """Single-block protocol wrapping the m-qubit SIC-POVM."""
    return MeasurementProtocol(
        qubits=m,
        blocks=(sic_povm(m),),
        labels=("sic",),
        shots_per_block=N,
        kind="sic",
    )


def tetrahedron_states() -> InputStateSet:
    """The four pure single-qubit states on the tetrahedron Bloch vectors."""
    eye = np.eye(2, dtype=np.complex128)
    states = []
    for s in TETRAHEDRON_BLOCH:
        rho = (eye + sum(s[i] * PAULI_AXES[a] for i, a in enumerate("xyz"))) / 2.0
        states.append(DensityMatrix(op=HermitianOperator(rho), physical=True))
    return InputStateSet(states=tuple(states))


def product_input_states(m: int) -> InputStateSet:
    """All 4^m tensor products of tetrahedron states, base-4 index order."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"qubit count must be a positive integer, got {m}")
    if m > MAX_QPT_QUBITS:
        raise InvalidArgumentError(
            f"qubit count {m} exceeds the resource guard of {MAX_QPT_QUBITS}"
        )
    singles = [dm.matrix for dm in tetrahedron_states().states]
    states = []
    for combo in itertools.product(range(4), repeat=m):
        rho = np.ones((1, 1), dtype=np.complex128)
        for idx in combo:
            rho = np.kron(rho, singles[idx])
        states.append(DensityMatrix(op=HermitianOperator(rho), physical=True))
    return InputStateSet(states=tuple(states))


def process_protocol(m: int, N: int) -> ProcessProtocol:
    """Tetrahedron inputs crossed with MUB readout, shots per configuration."""
    return ProcessProtocol(
        inputs=product_input_states(m),
        readout=mub_protocol(m, N, for_process=True),
        shots_per_config=N,
    )
