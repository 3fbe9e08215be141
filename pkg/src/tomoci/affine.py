"""Confidence intervals for affine functionals over Hilbert-Schmidt balls.

Any functional of the form phi(x) = r(x) . phi + phi0 -- fidelity to a
pure target, the mean of an observable -- is extremized over the region
{ ||r - r_center||_2 <= sqrt(2/d) delta, constrained coordinates fixed }
in closed form: the feasible set is a Euclidean ball inside an affine
slice, so the optimum moves from the center along the projection of phi
onto the free coordinates. For states the free coordinates are the
traceless ones; for Choi matrices, those not pinned by trace
preservation. Positivity is NOT imposed, so fidelity intervals can
protrude past [0, 1]; an explicit clamp is available and recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    _entries_of,
    pauli_basis,
    to_pauli_vector,
)
from .qpt import ChoiMatrix
from .qst import ConfidenceRegion

KIND_STATE = "state"
KIND_PROCESS = "process"


@dataclass(frozen=True, eq=False)
class AffineFunctional:
    """Gradient/offset representation phi(x) = r(x) . phi + phi0."""

    phi: np.ndarray
    phi0: float
    label: str
    kind: str

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        if phi.ndim != 1:
            raise InvalidArgumentError("gradient must be a 1-d real vector")
        if self.kind not in (KIND_STATE, KIND_PROCESS):
            raise InvalidArgumentError(f"unknown functional kind {self.kind!r}")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    def value(self, x) -> float:
        """Evaluate on a state or Choi matrix (or its coordinate vector)."""
        coords = _coordinates(x, len(self.phi))
        return float(coords @ self.phi + self.phi0)


@dataclass(frozen=True)
class Interval:
    """A confidence interval [lo, hi] at the region's level."""

    lo: float
    hi: float
    level: float
    clamped: bool

    def __post_init__(self):
        if self.lo > self.hi:
            raise InvalidArgumentError(f"empty interval [{self.lo}, {self.hi}]")
        if self.clamped and (self.lo < 0.0 or self.hi > 1.0):
            raise InvalidArgumentError("clamped interval must lie in [0, 1]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _coordinates(x, length: int) -> np.ndarray:
    if isinstance(x, np.ndarray):
        coords = np.asarray(x, dtype=np.float64)
        if coords.shape != (length,):
            raise InvalidArgumentError(
                f"coordinate length {coords.shape} does not match the functional"
            )
        return coords
    entries = _entries_of(x)
    dim = entries.shape[0]
    if dim * dim != length:
        raise InvalidArgumentError(
            f"operator dim {dim} does not match functional length {length}"
        )
    m = int(round(math.log2(dim)))
    return to_pauli_vector(x, pauli_basis(m)).coords


def _free_mask(center) -> np.ndarray:
    """Coordinates the confidence ball allows to vary around the center."""
    if isinstance(center, ChoiMatrix):
        n = center.dim**2
        return (np.arange(n) % center.d_out**2) != 0
    if isinstance(center, DensityMatrix):
        mask = np.ones(center.dim**2, dtype=bool)
        mask[0] = False
        return mask
    raise InvalidArgumentError(
        f"unsupported region center type {type(center).__name__}"
    )


def _kind_of(center) -> str:
    return KIND_PROCESS if isinstance(center, ChoiMatrix) else KIND_STATE


def fidelity_functional(target) -> AffineFunctional:
    """Fidelity to a pure state or to a unitary channel, as an affine map.

    States: phi(rho) = Tr(rho |psi><psi|) for a pure target. Processes:
    phi(C) = Tr(C_target C) / d_in^2, the process fidelity to a unitary
    target. Mixed or non-unitary targets have no affine fidelity and are
    rejected.
    """
    if isinstance(target, DensityMatrix):
        if not target.physical:
            raise InvalidArgumentError("fidelity target must be physical")
        eigs = np.linalg.eigvalsh(target.matrix)
        if eigs[-1] < 1.0 - 1e-10:
            raise InvalidArgumentError(
                "fidelity is affine only for pure state targets"
            )
        d = target.dim
        basis = pauli_basis(int(round(math.log2(d))))
        phi = d * to_pauli_vector(target, basis).coords
        return AffineFunctional(
            phi=phi, phi0=0.0, label="fidelity", kind=KIND_STATE
        )
    if isinstance(target, ChoiMatrix):
        if not target.physical:
            raise InvalidArgumentError("fidelity target must be physical")
        purity = np.trace(target.matrix @ target.matrix).real
        if purity < target.d_in**2 - 1e-8:
            raise InvalidArgumentError(
                "process fidelity is affine only for unitary channel targets"
            )
        D = target.dim
        m = int(round(math.log2(D)))
        coords = to_pauli_vector(target, pauli_basis(m)).coords
        phi = coords * D / target.d_in**2
        return AffineFunctional(
            phi=phi, phi0=0.0, label="process-fidelity", kind=KIND_PROCESS
        )
    raise InvalidArgumentError(
        "fidelity target must be a DensityMatrix or a ChoiMatrix"
    )


def observable_functional(observable) -> AffineFunctional:
    """The mean value Tr(rho O) of a Hermitian observable."""
    if not isinstance(observable, HermitianOperator):
        observable = HermitianOperator(observable)
    d = observable.dim
    basis = pauli_basis(int(round(math.log2(d))))
    phi = d * to_pauli_vector(observable, basis).coords
    return AffineFunctional(
        phi=phi, phi0=0.0, label="observable", kind=KIND_STATE
    )


def extremal_coordinates(
    fn: AffineFunctional, region: ConfidenceRegion
) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate vectors attaining the interval's lo and hi."""
    center = region.center
    _check_space(fn, center)
    mask = _free_mask(center)
    r0 = _coordinates(center, len(fn.phi))
    grad = np.where(mask, fn.phi, 0.0)
    norm = float(np.linalg.norm(grad))
    if norm == 0.0:
        return r0.copy(), r0.copy()
    step = math.sqrt(2.0 / center.dim) * region.radius / norm
    return r0 - step * grad, r0 + step * grad


def affine_interval(
    fn: AffineFunctional, region: ConfidenceRegion, clamp: bool = False
) -> Interval:
    """Extremize the functional over the confidence ball, in closed form.

    lo/hi = phi(center) -/+ sqrt(2/d) delta ||P_free phi||_2; with clamp
    the interval is intersected with [0, 1] (for fidelities).
    """
    center = region.center
    _check_space(fn, center)
    mask = _free_mask(center)
    r0 = _coordinates(center, len(fn.phi))
    value = float(r0 @ fn.phi + fn.phi0)
    half = (
        math.sqrt(2.0 / center.dim)
        * region.radius
        * float(np.linalg.norm(np.where(mask, fn.phi, 0.0)))
    )
    lo, hi = value - half, value + half
    if clamp:
        lo, hi = min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)
    return Interval(lo=lo, hi=hi, level=region.level, clamped=clamp)


def _check_space(fn: AffineFunctional, center):
    if _kind_of(center) != fn.kind:
        raise InvalidArgumentError(
            f"functional over {fn.kind} space applied to a "
            f"{_kind_of(center)} region"
        )
    if len(fn.phi) != center.dim**2:
        raise InvalidArgumentError(
            f"functional length {len(fn.phi)} does not match "
            f"region dimension {center.dim}"
        )
