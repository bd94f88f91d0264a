"""Truncated multi-mode Fock space: basis, ladder operators, states, projectors.

Flat indices are lexicographic in occupation vectors with mode 0 most
significant, so ``|0,1>`` precedes ``|1,0>``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BasisError, NotOrthonormalError, SizingError

DEFAULT_DIM_CAP = 4096

OPERATOR_KINDS = ("annihilation", "creation", "number", "hamiltonian", "projector", "generic")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class FockBasis:
    modes: int
    n_max: int
    occupations: np.ndarray = field(repr=False)
    _lookup: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    @property
    def total_number(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def index(self, occupation: Sequence[int]) -> int:
        occ = tuple(int(n) for n in occupation)
        if len(occ) != self.modes:
            raise BasisError(f"occupation {occ} has {len(occ)} entries, basis has {self.modes} modes")
        if any(n < 0 or n > self.n_max for n in occ):
            raise BasisError(f"occupation {occ} outside cutoff 0..{self.n_max}")
        return self._lookup[occ]

    def occupation(self, index: int) -> tuple[int, ...]:
        return tuple(int(n) for n in self.occupations[index])

    def label(self, index: int) -> str:
        return "|" + ",".join(str(n) for n in self.occupation(index)) + ">"

    def sectors(self) -> dict[int, np.ndarray]:
        """Indices grouped by total particle number."""
        tot = self.total_number
        return {int(n): np.flatnonzero(tot == n) for n in np.unique(tot)}

    def same_as(self, other: "FockBasis") -> bool:
        return self is other or (self.modes == other.modes and self.n_max == other.n_max)


def build_basis(modes: int, n_max: int, dim_cap: int = DEFAULT_DIM_CAP) -> FockBasis:
    if modes < 1:
        raise SizingError(f"need at least one mode, got {modes}")
    if n_max < 0:
        raise SizingError(f"cutoff must be non-negative, got {n_max}")
    dim = (n_max + 1) ** modes
    if dim > dim_cap:
        raise SizingError(f"dimension ({n_max}+1)^{modes} = {dim} exceeds cap {dim_cap}")
    occ = np.array(list(itertools.product(range(n_max + 1), repeat=modes)), dtype=int)
    lookup = {tuple(int(n) for n in row): i for i, row in enumerate(occ)}
    return FockBasis(modes, n_max, _frozen(occ), lookup)


@dataclass(frozen=True, eq=False)
class StateVector:
    basis: FockBasis
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (self.basis.dim,):
            raise BasisError(f"state has shape {data.shape}, basis dimension is {self.basis.dim}")
        if not np.all(np.isfinite(data)):
            raise ValueError("state amplitudes must be finite")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    @property
    def normalized(self) -> bool:
        return abs(self.norm - 1.0) < 1e-12

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.data, other.data))

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, np.outer(self.data, self.data.conj()))

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same(self.basis, other.basis)
        return StateVector(self.basis, self.data + other.data)

    def __rmul__(self, c: complex) -> "StateVector":
        return StateVector(self.basis, c * self.data)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    basis: FockBasis
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        d = self.basis.dim
        if data.shape != (d, d):
            raise BasisError(f"density matrix has shape {data.shape}, expected {(d, d)}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def validate(self, trace: float = 1.0, herm_tol: float = 1e-10, trace_tol: float = 1e-8,
                 eig_tol: float = 1e-8) -> "DensityMatrix":
        rho = self.data
        if not np.all(np.isfinite(rho)):
            raise ValueError("density matrix has non-finite entries")
        herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
        if herm > herm_tol:
            raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3e})")
        if abs(np.trace(rho).real - trace) > trace_tol:
            raise ValueError(f"trace {np.trace(rho).real:.12g} differs from {trace}")
        lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if lo < -eig_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        return self

    def expect(self, op: "Operator") -> complex:
        return complex(np.trace(op.data @ self.data))


@dataclass(frozen=True, eq=False)
class Operator:
    basis: FockBasis
    data: np.ndarray
    kind: str = "generic"

    def __post_init__(self):
        if self.kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        data = np.asarray(self.data, dtype=complex)
        d = self.basis.dim
        if data.shape != (d, d):
            raise BasisError(f"operator has shape {data.shape}, expected {(d, d)}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def dag(self) -> "Operator":
        kind = {"annihilation": "creation", "creation": "annihilation"}.get(self.kind, self.kind)
        return Operator(self.basis, self.data.conj().T, kind)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_same(self.basis, other.basis)
            return Operator(self.basis, self.data @ other.data)
        if isinstance(other, StateVector):
            _check_same(self.basis, other.basis)
            return StateVector(self.basis, self.data @ other.data)
        return NotImplemented

    def commutator(self, other: "Operator") -> "Operator":
        _check_same(self.basis, other.basis)
        return Operator(self.basis, self.data @ other.data - other.data @ self.data)


def _check_same(a: FockBasis, b: FockBasis) -> None:
    if not a.same_as(b):
        raise BasisError(f"basis mismatch: (L={a.modes}, n_max={a.n_max}) vs (L={b.modes}, n_max={b.n_max})")


def _ladder(basis: FockBasis, mode: int) -> np.ndarray:
    d = basis.dim
    b = np.zeros((d, d))
    step = (basis.n_max + 1) ** (basis.modes - 1 - mode)
    occ = basis.occupations[:, mode]
    src = np.flatnonzero(occ > 0)
    b[src - step, src] = np.sqrt(occ[src])
    return b


def mode_operator(basis: FockBasis, mode: int, kind: str) -> Operator:
    """Ladder or number operator on one mode; ``kind`` is annihilate, create or number."""
    if not 0 <= mode < basis.modes:
        raise BasisError(f"mode {mode} out of range for {basis.modes} modes")
    b = _ladder(basis, mode)
    if kind == "annihilate":
        return Operator(basis, b, "annihilation")
    if kind == "create":
        return Operator(basis, b.T.copy(), "creation")
    if kind == "number":
        return Operator(basis, b.T @ b, "number")
    raise ValueError(f"unknown mode-operator kind {kind!r}")


def fock_state(basis: FockBasis, occupations: Sequence[int]) -> StateVector:
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.index(occupations)] = 1.0
    return StateVector(basis, v)


def projector(states: Sequence[StateVector], tol: float = 1e-10) -> Operator:
    if not states:
        raise NotOrthonormalError("projector needs at least one state")
    basis = states[0].basis
    for s in states[1:]:
        _check_same(basis, s.basis)
    V = np.stack([s.data for s in states], axis=1)
    gram = V.conj().T @ V
    err = np.max(np.abs(gram - np.eye(len(states))))
    if err > tol:
        raise NotOrthonormalError(f"states are not orthonormal (Gram deviation {err:.3e})")
    return Operator(basis, V @ V.conj().T, "projector")


def occupation_projector(basis: FockBasis, mask: np.ndarray) -> Operator:
    """Diagonal projector onto the basis states selected by a boolean mask."""
    return Operator(basis, np.diag(np.asarray(mask, dtype=float)), "projector")
