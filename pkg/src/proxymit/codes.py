"""Logical subspaces: bosonic codes, proxy spaces, logical Paulis and error-detection projectors."""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from math import comb, sqrt
from typing import Callable, Sequence

import numpy as np

from .errors import BasisError, ConfigError, NotOrthonormalError
from .fock import FockBasis, Operator, StateVector, build_basis, occupation_projector, projector

# Two-mode spaces used in the proxy experiments. Each proxy is oriented like the
# code space: |0'> is the ket whose second mode carries more bosons, as |4,8> does.
NAMED_SPACES: dict[str, tuple[tuple[int, int], tuple[int, int]]] = {
    "C": ((4, 8), (8, 4)),
    "P1": ((0, 12), (12, 0)),
    "P2": ((1, 11), (11, 1)),
    "P3": ((3, 7), (7, 3)),
    "P4": ((3, 6), (6, 3)),
    "P5": ((6, 9), (9, 6)),
}

PAULI_LABELS = ("I", "X", "Y", "Z")


@dataclass(frozen=True, eq=False)
class CodeSpace:
    label: str
    v0: StateVector
    v1: StateVector

    @property
    def basis(self) -> FockBasis:
        return self.v0.basis

    @cached_property
    def isometry(self) -> np.ndarray:
        """(d, 2) matrix with columns |0>, |1>."""
        V = np.stack([self.v0.data, self.v1.data], axis=1)
        V.flags.writeable = False
        return V

    @cached_property
    def projector(self) -> Operator:
        return projector([self.v0, self.v1])

    def coords(self, psi: StateVector | np.ndarray) -> np.ndarray:
        data = psi.data if isinstance(psi, StateVector) else np.asarray(psi)
        return self.isometry.conj().T @ data


def make_code(label: str, v0: StateVector, v1: StateVector, tol: float = 1e-10) -> CodeSpace:
    if not v0.basis.same_as(v1.basis):
        raise BasisError("codewords live on different bases")
    gram = np.array([[v0.inner(v0), v0.inner(v1)], [v1.inner(v0), v1.inner(v1)]])
    err = np.max(np.abs(gram - np.eye(2)))
    if err > tol:
        raise NotOrthonormalError(f"codewords of {label!r} are not orthonormal (Gram deviation {err:.3e})")
    return CodeSpace(label, v0, v1)


def _ket_sum(basis: FockBasis, terms: Sequence[tuple[complex, Sequence[int]]]) -> StateVector:
    v = np.zeros(basis.dim, dtype=complex)
    for amp, occ in terms:
        if len(occ) != basis.modes:
            raise BasisError(f"codeword occupation {tuple(occ)} needs {len(occ)} modes, basis has {basis.modes}")
        if max(occ) > basis.n_max:
            raise BasisError(f"basis cutoff {basis.n_max} too small for occupation {tuple(occ)}")
        v[basis.index(occ)] += amp
    return StateVector(basis, v)


def _binomial_terms(S: int, N: int, parity: int, two_mode: bool) -> list[tuple[float, tuple[int, ...]]]:
    total = (N + 1) * (S + 1)
    out = []
    for p in range(parity, N + 2, 2):
        amp = sqrt(comb(N + 1, p)) / 2 ** (N / 2)
        n = p * (S + 1)
        out.append((amp, (n, total - n) if two_mode else (n,)))
    return out


_SPAN_RE = re.compile(r"^span:(.+);(.+)$")
_BINOM_RE = re.compile(r"^binomial([12]):(\d+):(\d+)$")


def codeword_terms(name: str) -> tuple[list, list]:
    """Amplitude/occupation lists for |0> and |1> of a registered code name."""
    s = 1 / np.sqrt(2)
    if name == "dual-rail":
        return [(1.0, (0, 1))], [(1.0, (1, 0))]
    if name == "cly-4222":
        return [(s, (4, 0)), (s, (0, 4))], [(1.0, (2, 2))]
    if name == "binomial-024":
        return [(s, (0,)), (s, (4,))], [(1.0, (2,))]
    if name in NAMED_SPACES:
        a, b = NAMED_SPACES[name]
        return [(1.0, a)], [(1.0, b)]
    m = _BINOM_RE.match(name)
    if m:
        two_mode = m.group(1) == "2"
        S, N = int(m.group(2)), int(m.group(3))
        return _binomial_terms(S, N, 0, two_mode), _binomial_terms(S, N, 1, two_mode)
    m = _SPAN_RE.match(name)
    if m:
        parse = lambda txt: tuple(int(x) for x in txt.split(","))
        return [(1.0, parse(m.group(1)))], [(1.0, parse(m.group(2)))]
    raise ConfigError(f"unknown code {name!r}")


def code_footprint(name: str) -> tuple[int, int]:
    """(modes, largest total occupation) needed to represent a code exactly."""
    t0, t1 = codeword_terms(name)
    occs = [occ for _, occ in t0 + t1]
    modes = {len(o) for o in occs}
    if len(modes) != 1:
        raise ConfigError(f"code {name!r} mixes mode counts")
    return modes.pop(), max(sum(o) for o in occs)


def basis_for(names: Sequence[str]) -> FockBasis:
    """Smallest per-mode cutoff that holds every listed space with number-conserving dynamics exact."""
    feet = [code_footprint(n) for n in names]
    modes = {f[0] for f in feet}
    if len(modes) != 1:
        raise ConfigError(f"codes {list(names)} need different mode counts")
    return build_basis(modes.pop(), max(f[1] for f in feet))


def standard_code(name: str, basis: FockBasis) -> CodeSpace:
    """Build a registered code: dual-rail, cly-4222, binomial-024, binomial1:S:N,
    binomial2:S:N, the named spaces C and P1..P5, or ``span:a,b;c,d``."""
    t0, t1 = codeword_terms(name)
    return make_code(name, _ket_sum(basis, t0), _ket_sum(basis, t1))


def logical_pauli(code: CodeSpace, which: str) -> Operator:
    v0, v1 = code.v0.data, code.v1.data
    p00, p11 = np.outer(v0, v0.conj()), np.outer(v1, v1.conj())
    p01, p10 = np.outer(v0, v1.conj()), np.outer(v1, v0.conj())
    mats = {
        "I": p00 + p11,
        "X": p01 + p10,
        "Y": -1j * p01 + 1j * p10,
        "Z": p00 - p11,
    }
    if which not in mats:
        raise ValueError(f"logical Pauli must be one of {PAULI_LABELS}, got {which!r}")
    return Operator(code.basis, mats[which])


def logical_paulis(code: CodeSpace) -> list[Operator]:
    return [logical_pauli(code, w) for w in PAULI_LABELS]


_NAMED_STATES = {
    "0": (1, 0),
    "1": (0, 1),
    "X+": (1 / np.sqrt(2), 1 / np.sqrt(2)),
    "X-": (1 / np.sqrt(2), -1 / np.sqrt(2)),
    "Y+": (1 / np.sqrt(2), 1j / np.sqrt(2)),
    "Y-": (1 / np.sqrt(2), -1j / np.sqrt(2)),
}

PROBE_STATES = ("0", "1", "X+", "Y+")


def state_coefficients(spec) -> tuple[complex, complex]:
    if isinstance(spec, (int, np.integer)) or isinstance(spec, str):
        key = str(spec)
        if key not in _NAMED_STATES:
            raise ValueError(f"unknown logical state {spec!r}")
        return _NAMED_STATES[key]
    a, b = spec
    a, b = complex(a), complex(b)
    norm = abs(a) ** 2 + abs(b) ** 2
    if abs(norm - 1) > 1e-12:
        raise ValueError(f"coefficients ({a}, {b}) are not normalised: |a|^2+|b|^2 = {norm}")
    return a, b


def logical_state(code: CodeSpace, spec) -> StateVector:
    """a|0> + b|1> for spec in {0, 1, 'X+', 'Y+', 'X-', 'Y-'} or an (a, b) pair."""
    a, b = state_coefficients(spec)
    return StateVector(code.basis, a * code.v0.data + b * code.v1.data)


DETECTION_KINDS = ("none", "total-number", "number-mod", "mode-parity", "code-projector")


@dataclass(frozen=True)
class DetectionStrategy:
    kind: str = "none"
    value: int | None = None
    per_mode: bool = False

    def __post_init__(self):
        if self.kind not in DETECTION_KINDS:
            raise ConfigError(f"detection kind must be one of {DETECTION_KINDS}, got {self.kind!r}")
        if self.kind == "total-number" and (self.value is None or self.value < 0):
            raise ConfigError("total-number detection needs a non-negative particle number")
        if self.kind == "number-mod" and (self.value is None or self.value < 2):
            raise ConfigError(f"number-mod detection needs modulus >= 2, got {self.value}")

    @property
    def tag(self) -> str:
        if self.kind == "none":
            return "raw"
        if self.kind == "code-projector":
            return "code"
        return "number"

    @classmethod
    def parse(cls, text: str) -> "DetectionStrategy":
        """'none', 'code', 'total-number:N', 'number-mod:m', 'number-mod:m:per-mode', 'mode-parity'."""
        parts = text.split(":")
        head = parts[0]
        if head in ("none", "raw"):
            return cls("none")
        if head in ("code", "code-projector"):
            return cls("code-projector")
        if head == "mode-parity":
            return cls("mode-parity", per_mode=True)
        if head in ("total-number", "number-mod") and len(parts) >= 2:
            per_mode = len(parts) == 3 and parts[2] == "per-mode"
            return cls(head, int(parts[1]), per_mode)
        raise ConfigError(f"cannot parse detection strategy {text!r}")

    def __str__(self) -> str:
        if self.kind in ("none", "code-projector", "mode-parity"):
            return self.kind
        return f"{self.kind}:{self.value}" + (":per-mode" if self.per_mode else "")


NONE = DetectionStrategy("none")
CODE = DetectionStrategy("code-projector")


def detection_projector(code: CodeSpace, strategy: DetectionStrategy, basis: FockBasis | None = None) -> Operator:
    basis = basis or code.basis
    if not basis.same_as(code.basis):
        raise BasisError("detection basis differs from the code basis")
    occ = basis.occupations
    if strategy.kind == "none":
        return Operator(basis, np.eye(basis.dim), "projector")
    if strategy.kind == "code-projector":
        return code.projector
    if strategy.kind == "total-number":
        if strategy.value > basis.modes * basis.n_max:
            raise ConfigError(f"total number {strategy.value} unreachable in this basis")
        return occupation_projector(basis, occ.sum(axis=1) == strategy.value)
    if strategy.kind == "number-mod":
        m = strategy.value
        mask = np.all(occ % m == 0, axis=1) if strategy.per_mode else occ.sum(axis=1) % m == 0
        return occupation_projector(basis, mask)
    return occupation_projector(basis, np.all(occ % 2 == 0, axis=1))


def default_number_detection(name: str) -> DetectionStrategy:
    """Number measurement that flags a loss for each benchmark code."""
    if name == "binomial-024":
        return DetectionStrategy("number-mod", 2)
    m = _BINOM_RE.match(name)
    if m and m.group(1) == "1":
        return DetectionStrategy("number-mod", int(m.group(2)) + 1)
    _, total = code_footprint(name)
    return DetectionStrategy("total-number", total)


def _subspace_coords(states: Sequence[StateVector], code: CodeSpace, tol: float = 1e-10) -> np.ndarray:
    V = code.isometry
    out = []
    for s in states:
        c = V.conj().T @ s.data
        if np.linalg.norm(s.data - V @ c) > tol:
            raise ValueError("state lies outside the code subspace")
        out.append(c)
    return np.array(out)


def design_deviation(states: Sequence[StateVector], code: CodeSpace, order: int) -> float:
    """Frobenius distance of the state set's t-th moment from the Haar moment on the code space."""
    c = _subspace_coords(states, code)
    if order == 1:
        avg = np.einsum("ki,kj->ij", c, c.conj()) / len(c)
        return float(np.linalg.norm(avg - np.eye(2) / 2))
    if order == 2:
        cc = np.einsum("ki,kj->kij", c, c).reshape(len(c), 4)
        avg = np.einsum("ki,kj->ij", cc, cc.conj()) / len(c)
        swap = np.eye(4)[[0, 2, 1, 3]]
        sym = (np.eye(4) + swap) / 2
        return float(np.linalg.norm(avg - sym / 3))
    raise ValueError(f"order must be 1 or 2, got {order}")


def cross_term_average(channel: Callable[[np.ndarray], np.ndarray], code: CodeSpace, proxy: CodeSpace,
                       code_state: StateVector, proxy_states: Sequence[StateVector], phase_samples: int,
                       rng: np.random.Generator) -> float:
    """Norm of Pi_C E(|phi><psi'|) Pi_C averaged over proxy states and random global proxy phases."""
    Pc = code.projector.data
    acc = np.zeros_like(Pc)
    for psi in proxy_states:
        term = Pc @ channel(np.outer(code_state.data, psi.data.conj())) @ Pc
        phases = np.exp(-1j * rng.uniform(0, 2 * np.pi, phase_samples))
        acc = acc + phases.sum() * term
    return float(np.linalg.norm(acc / (len(proxy_states) * phase_samples)))
