"""Residual Bose-Hubbard Hamiltonian, Lindblad boson loss and quasi-static disorder ensembles."""
from __future__ import annotations

import functools
import re
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import BasisError, ConfigError, StepSizeError
from .fock import DensityMatrix, FockBasis, Operator, _ladder

INTEGRATORS = ("rk4", "liouvillian-expm")
SIGNS = ("standard", "paper")
DISTRIBUTIONS = ("two-point", "normal")

_PARAM_RE = re.compile(r"^(Delta|U)_(\d+)$|^(J|U)$")


@dataclass(frozen=True)
class HamiltonianParams:
    """On-site energies per mode, hopping J and on-site interaction U (scalar or per mode)."""

    delta: tuple[float, ...]
    J: float = 0.0
    U: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        delta = tuple(float(x) for x in np.atleast_1d(self.delta))
        object.__setattr__(self, "delta", delta)
        U = self.U
        if np.ndim(U) == 0:
            U = (float(U),) * len(delta)
        U = tuple(float(x) for x in U)
        if len(U) != len(delta):
            raise BasisError(f"U has {len(U)} entries but delta has {len(delta)}")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "J", float(self.J))

    @classmethod
    def zeros(cls, modes: int) -> "HamiltonianParams":
        return cls((0.0,) * modes)

    @property
    def modes(self) -> int:
        return len(self.delta)

    def get(self, name: str) -> float:
        kind, idx = _parse_param(name, self.modes)
        if kind == "J":
            return self.J
        if kind == "U" and idx is None:
            return self.U[0]
        return (self.delta if kind == "Delta" else self.U)[idx]

    def with_values(self, values: dict[str, float]) -> "HamiltonianParams":
        delta, U, J = list(self.delta), list(self.U), self.J
        for name, v in values.items():
            kind, idx = _parse_param(name, self.modes)
            if kind == "J":
                J = v
            elif kind == "U" and idx is None:
                U = [v] * self.modes
            elif kind == "U":
                U[idx] = v
            else:
                delta[idx] = v
        return HamiltonianParams(tuple(delta), J, tuple(U))


def _parse_param(name: str, modes: int) -> tuple[str, int | None]:
    m = _PARAM_RE.match(name)
    if not m:
        raise ConfigError(f"unknown Hamiltonian parameter {name!r}")
    if m.group(3):
        return m.group(3), None
    i = int(m.group(2))
    if not 1 <= i <= modes:
        raise ConfigError(f"parameter {name!r} refers to mode {i}, system has {modes} modes")
    return m.group(1), i - 1


@dataclass(frozen=True)
class LossRates:
    gamma: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in np.atleast_1d(self.gamma))
        if any(x < 0 for x in g):
            raise ValueError(f"loss rates must be non-negative, got {g}")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def uniform(cls, modes: int, gamma: float) -> "LossRates":
        return cls((gamma,) * modes)

    @property
    def lossless(self) -> bool:
        return all(g == 0 for g in self.gamma)


def default_fluctuating(modes: int) -> tuple[str, ...]:
    """Delta_i and U_i for every mode, plus J when there is a bond."""
    names = [f"Delta_{i + 1}" for i in range(modes)]
    if modes > 1:
        names.append("J")
    return tuple(names + [f"U_{i + 1}" for i in range(modes)])


@dataclass(frozen=True)
class DisorderSpec:
    distribution: str = "two-point"
    sigma: float = 0.0
    mean: float = 0.0
    fluctuating: tuple[str, ...] = ("Delta_1", "Delta_2", "J")
    samples: int = 1

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be non-negative, got {self.sigma}")
        if self.samples < 1:
            raise ConfigError(f"sample count must be >= 1, got {self.samples}")
        object.__setattr__(self, "fluctuating", tuple(self.fluctuating))

    @property
    def deterministic(self) -> bool:
        return not self.fluctuating or self.sigma == 0


@dataclass(frozen=True)
class EvolutionConfig:
    t_final: float = 1.0
    dt: float = 1e-3
    integrator: str = "rk4"
    sign: str = "standard"
    self_check: bool = False
    self_check_tol: float = 1e-7

    def __post_init__(self):
        if not 0 < self.dt <= self.t_final:
            raise ConfigError(f"need 0 < dt <= t_final, got dt={self.dt}, t_final={self.t_final}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.sign not in SIGNS:
            raise ConfigError(f"sign must be one of {SIGNS}, got {self.sign!r}")


@functools.lru_cache(maxsize=16)
def _terms(modes: int, n_max: int) -> dict:
    from .fock import build_basis

    basis = build_basis(modes, n_max, dim_cap=10**9)
    occ = basis.occupations.astype(float)
    ladders = [_ladder(basis, i) for i in range(modes)]
    hop = np.zeros((basis.dim, basis.dim))
    for i in range(modes - 1):
        t = ladders[i].T @ ladders[i + 1]
        hop += t + t.T
    terms = {
        "number": [occ[:, i] for i in range(modes)],
        "pair": [occ[:, i] * (occ[:, i] - 1) / 2 for i in range(modes)],
        "hop": hop,
        "ladders": ladders,
    }
    for v in terms.values():
        for a in v if isinstance(v, list) else [v]:
            a.flags.writeable = False
    return terms


def build_hamiltonian(basis: FockBasis, p: HamiltonianParams) -> Operator:
    """H = sum_i Delta_i n_i + J sum_i (b_i^+ b_{i+1} + h.c.) + sum_i U_i n_i(n_i - 1)/2 on an open chain."""
    if p.modes != basis.modes:
        raise BasisError(f"parameters describe {p.modes} modes, basis has {basis.modes}")
    t = _terms(basis.modes, basis.n_max)
    diag = np.zeros(basis.dim)
    for i in range(basis.modes):
        diag += p.delta[i] * t["number"][i] + p.U[i] * t["pair"][i]
    H = p.J * t["hop"] + np.diag(diag)
    return Operator(basis, H, "hamiltonian")


class _Generator:
    """Lindblad generator acting on density matrices or stacks of them."""

    def __init__(self, basis: FockBasis, H: np.ndarray, rates: LossRates, sign: str):
        if len(rates.gamma) != basis.modes:
            raise BasisError(f"{len(rates.gamma)} loss rates for {basis.modes} modes")
        if H.shape != (basis.dim, basis.dim):
            raise BasisError(f"Hamiltonian shape {H.shape} does not match basis dimension {basis.dim}")
        t = _terms(basis.modes, basis.n_max)
        self.basis = basis
        self.H = np.asarray(H, dtype=complex)
        self.phase = -1j if sign == "standard" else 1j
        self.jumps = [(g, t["ladders"][i]) for i, g in enumerate(rates.gamma) if g > 0]
        k = np.zeros(basis.dim)
        for i, g in enumerate(rates.gamma):
            k += 0.5 * g * t["number"][i]
        self.k = k

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = self.phase * (self.H @ rho - rho @ self.H)
        for g, b in self.jumps:
            out += g * (b @ rho @ b.T)
        out -= self.k[:, None] * rho + rho * self.k[None, :]
        return out

    def liouvillian(self) -> sp.csr_matrix:
        """Row-major superoperator: vec(d rho/dt) = L vec(rho)."""
        d = self.basis.dim
        eye = sp.identity(d, format="csr")
        Hs = sp.csr_matrix(self.H)
        L = self.phase * (sp.kron(Hs, eye) - sp.kron(eye, Hs.T))
        for g, b in self.jumps:
            bs = sp.csr_matrix(b)
            L = L + g * sp.kron(bs, bs)
        K = sp.diags(self.k)
        L = L - sp.kron(K, eye) - sp.kron(eye, K)
        return sp.csr_matrix(L)


def lindblad_rhs(rho: DensityMatrix | np.ndarray, H: Operator, rates: LossRates,
                 sign: str = "standard") -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        if not rho.basis.same_as(H.basis):
            raise BasisError("density matrix and Hamiltonian live on different bases")
        rho = rho.data
    return _Generator(H.basis, H.data, rates, sign)(np.asarray(rho, dtype=complex))


def _rk4(gen: _Generator, rho: np.ndarray, t_final: float, dt: float) -> np.ndarray:
    n = max(1, int(round(t_final / dt)))
    h = t_final / n
    rho = np.array(rho, dtype=complex)
    for _ in range(n):
        k1 = gen(rho)
        k2 = gen(rho + 0.5 * h * k1)
        k3 = gen(rho + 0.5 * h * k2)
        k4 = gen(rho + h * k3)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def unitary_propagator(basis: FockBasis, H: np.ndarray, t: float, sign: str = "standard") -> np.ndarray:
    """exp(-iHt) (exp(+iHt) when sign="paper"), diagonalised one number sector at a time."""
    phase = -1j if sign == "standard" else 1j
    H = np.asarray(H)
    sectors = basis.sectors()
    U = np.zeros(H.shape, dtype=complex)
    covered = np.zeros(H.shape, dtype=bool)
    for idx in sectors.values():
        block = np.ix_(idx, idx)
        w, V = np.linalg.eigh(H[block])
        U[block] = (V * np.exp(phase * w * t)) @ V.conj().T
        covered[block] = True
    if np.any(np.abs(H[~covered]) > 0):
        w, V = np.linalg.eigh(H)
        U = (V * np.exp(phase * w * t)) @ V.conj().T
    return U


class LindbladChannel:
    """The map rho(0) -> rho(t) for one fixed Hamiltonian and set of loss rates.

    Acts linearly on any (d, d) array or (k, d, d) stack, not only on density
    matrices. With no loss and the exact integrator the propagator is a cached
    unitary, and ``apply_state`` keeps pure states as vectors.
    """

    def __init__(self, basis: FockBasis, H: Operator | np.ndarray, rates: LossRates,
                 cfg: EvolutionConfig = EvolutionConfig()):
        H = H.data if isinstance(H, Operator) else np.asarray(H)
        self.basis = basis
        self.cfg = cfg
        self.rates = rates
        self._gen = _Generator(basis, H, rates, cfg.sign)
        self._U = None
        self._L = None
        if cfg.integrator == "liouvillian-expm" and rates.lossless:
            self._U = unitary_propagator(basis, H, cfg.t_final, cfg.sign)

    @property
    def unitary(self) -> np.ndarray | None:
        return self._U

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if self._U is not None:
            return self._U @ rho @ self._U.conj().T
        if self.cfg.integrator == "liouvillian-expm":
            return self._expm(rho)
        out = _rk4(self._gen, rho, self.cfg.t_final, self.cfg.dt)
        if self.cfg.self_check:
            fine = _rk4(self._gen, rho, self.cfg.t_final, self.cfg.dt / 2)
            diff = float(np.max(np.abs(fine - out)))
            if diff > self.cfg.self_check_tol:
                raise StepSizeError(
                    f"halving dt={self.cfg.dt} changed the state by {diff:.3e} > {self.cfg.self_check_tol}")
        return out

    def _expm(self, rho: np.ndarray) -> np.ndarray:
        d = self.basis.dim
        if self._L is None:
            self._L = self._gen.liouvillian()
        flat = rho.reshape(-1, d * d).T
        out = expm_multiply(self._L * self.cfg.t_final, flat)
        return np.ascontiguousarray(out.T).reshape(rho.shape)

    def apply_state(self, psi: np.ndarray) -> np.ndarray:
        """Evolve a pure state: a vector when the evolution is unitary, otherwise a density matrix."""
        psi = np.asarray(psi, dtype=complex)
        if self._U is not None:
            return self._U @ psi
        return self(np.outer(psi, psi.conj()))


def _check_cutoff(rho: np.ndarray, basis: FockBasis, p: HamiltonianParams) -> None:
    if p.J == 0 or basis.modes < 2:
        return
    pops = np.abs(np.diagonal(rho))
    occupied = basis.total_number[pops > 1e-14]
    if occupied.size and occupied.max() > basis.n_max:
        warnings.warn(f"initial state reaches total number {occupied.max()} above cutoff {basis.n_max}; "
                      "hopping will be truncated", RuntimeWarning, stacklevel=3)


def evolve(rho0: DensityMatrix, p: HamiltonianParams, rates: LossRates,
           cfg: EvolutionConfig = EvolutionConfig()) -> DensityMatrix:
    basis = rho0.basis
    _check_cutoff(rho0.data, basis, p)
    H = build_hamiltonian(basis, p)
    out = LindbladChannel(basis, H, rates, cfg)(rho0.data)
    return DensityMatrix(basis, out)


def sample_rng(seed: int, index: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Independent generator for one ensemble member; depends only on (seed, stream, index)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(*stream, int(index))))


def sample_disorder(spec: DisorderSpec, base: HamiltonianParams, rng: np.random.Generator) -> HamiltonianParams:
    """Draw one quasi-static Hamiltonian: each fluctuating parameter becomes base + mean + delta."""
    if not spec.fluctuating or (spec.sigma == 0 and spec.mean == 0):
        return base
    values = {}
    for name in spec.fluctuating:
        if spec.sigma == 0:
            delta = 0.0
        elif spec.distribution == "two-point":
            delta = spec.sigma if rng.integers(2) else -spec.sigma
        else:
            delta = rng.normal(0.0, spec.sigma)
        values[name] = base.get(name) + spec.mean + delta
    return base.with_values(values)


def ensemble_average(rho0: DensityMatrix, spec: DisorderSpec, base: HamiltonianParams,
                     rates: LossRates, cfg: EvolutionConfig = EvolutionConfig(), seed: int = 0,
                     stream: Sequence[int] = ()) -> DensityMatrix:
    """Mean of ``spec.samples`` independently evolved density matrices."""
    if spec.deterministic:
        return evolve(rho0, sample_disorder(spec, base, sample_rng(seed, 0, stream)), rates, cfg)
    total = np.zeros_like(rho0.data)
    for j in range(spec.samples):
        p = sample_disorder(spec, base, sample_rng(seed, j, stream))
        total = total + evolve(rho0, p, rates, cfg).data
    return DensityMatrix(rho0.basis, total / spec.samples)


def sample_channels(basis: FockBasis, spec: DisorderSpec, base: HamiltonianParams, rates: LossRates,
                    cfg: EvolutionConfig, seed: int, stream: Sequence[int] = ()):
    """Yield (params, channel) per ensemble member; a deterministic spec yields one member."""
    n = 1 if spec.deterministic else spec.samples
    for j in range(n):
        p = sample_disorder(spec, base, sample_rng(seed, j, stream))
        yield p, LindbladChannel(basis, build_hamiltonian(basis, p), rates, cfg)
