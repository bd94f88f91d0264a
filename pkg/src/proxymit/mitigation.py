"""Code-plus-proxy superposition runs and mitigation by inverting the proxy LPTM's unital block.

Every ensemble member evolves the four superpositions alpha|target> + beta|proxy_k>
(k over the proxy probe states) and, on request, the bare proxy and code probe
states under the same Hamiltonian. Only the 2x2 projections onto the code and
proxy spaces are kept; they are linear in the state, so ensemble quantities are
built from their sample means.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .affine import AffineMap, apply_affine
from .codes import CODE, PROBE_STATES, CodeSpace, DetectionStrategy, basis_for, logical_state, standard_code
from .dynamics import DisorderSpec, EvolutionConfig, HamiltonianParams, LossRates, default_fluctuating, sample_channels
from .errors import IllConditionedError, NumericalError
from .fock import FockBasis, StateVector
from .tomography import LPTM, SIGMA, Projection, lptm_from_blocks, lptm_trace_distance

DEFAULT_TARGET = (0.5, np.sqrt(3) / 2)


@dataclass(frozen=True)
class ExpectationTriple:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(np.isfinite([self.x, self.y, self.z])):
            raise NumericalError(f"non-finite expectation values ({self.x}, {self.y}, {self.z})")

    @classmethod
    def from_array(cls, v) -> "ExpectationTriple":
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class MitigationConfig:
    code: str = "C"
    proxy: str = "P4"
    alpha: complex = 1 / np.sqrt(2)
    beta: complex = 1 / np.sqrt(2)
    target: tuple = DEFAULT_TARGET
    disorder: DisorderSpec = DisorderSpec("two-point", 0.02, fluctuating=default_fluctuating(2), samples=200)
    base: HamiltonianParams | None = None
    gamma: float = 0.0
    evolution: EvolutionConfig = EvolutionConfig(integrator="liouvillian-expm")
    affine_map: AffineMap | None = None
    proxy_detection: DetectionStrategy = CODE
    condition_cap: float = 1e6
    per_sample_inversion: bool = False

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm}, expected 1")

    @cached_property
    def spaces(self) -> tuple[FockBasis, CodeSpace, CodeSpace]:
        basis = basis_for([self.code, self.proxy])
        return basis, standard_code(self.code, basis), standard_code(self.proxy, basis)

    @property
    def params(self) -> HamiltonianParams:
        return self.base if self.base is not None else HamiltonianParams.zeros(self.spaces[0].modes)

    @property
    def rates(self) -> LossRates:
        g = self.gamma
        return LossRates(g) if np.ndim(g) else LossRates.uniform(self.spaces[0].modes, g)


def _check_orthogonal(code: CodeSpace, proxy: CodeSpace, tol: float = 1e-10) -> None:
    overlap = np.max(np.abs(code.isometry.conj().T @ proxy.isometry))
    if overlap > tol:
        raise ValueError(f"code {code.label!r} and proxy {proxy.label!r} overlap ({overlap:.3e})")


def prepare_superposition(cfg: MitigationConfig, proxy_state_index) -> StateVector:
    """alpha (a|0> + b|1>) + beta |proxy state>, with proxy_state_index in {0, 1, 'X+', 'Y+'}."""
    _, code, proxy = cfg.spaces
    _check_orthogonal(code, proxy)
    psi = cfg.alpha * logical_state(code, cfg.target).data + cfg.beta * logical_state(proxy, proxy_state_index).data
    out = StateVector(code.basis, psi)
    if abs(out.norm - 1) > 1e-12:
        raise NumericalError(f"superposition norm {out.norm:.15g}")
    return out


def exact_triple(target) -> ExpectationTriple:
    a, b = complex(target[0]), complex(target[1])
    c = np.array([a, b])
    return ExpectationTriple.from_array([np.real(c.conj() @ SIGMA[k] @ c) for k in (1, 2, 3)])


def invert_block(T: LPTM | np.ndarray, condition_cap: float = 1e6) -> np.ndarray:
    M = T.matrix if isinstance(T, LPTM) else np.asarray(T, dtype=float)
    block = M[1:, 1:]
    cond = float(np.linalg.cond(block))
    if not np.isfinite(cond) or cond > condition_cap:
        raise IllConditionedError(f"3x3 LPTM block has condition number {cond:.3e} > cap {condition_cap:g}", cond)
    return np.linalg.inv(block)


def mitigate(raw: ExpectationTriple | np.ndarray, T: LPTM | np.ndarray, condition_cap: float = 1e6) -> ExpectationTriple:
    r = raw.as_array() if isinstance(raw, ExpectationTriple) else np.asarray(raw, dtype=float)
    return ExpectationTriple.from_array(invert_block(T, condition_cap) @ r)


@dataclass
class EnsembleRecord:
    """Per-sample 2x2 projections (samples, 4, 2, 2) and detection probabilities (samples, 4).

    ``sup_*`` come from the superposition runs (index = proxy probe state),
    ``proxy_*`` and ``code_*`` from bare probe-state runs.
    """

    sup_code: tuple | None = None
    sup_proxy: tuple | None = None
    proxy: tuple | None = None
    code: tuple | None = None
    samples: int = 0
    nominal_samples: int = 0


def simulate_ensemble(cfg: MitigationConfig, seed: int, stream: Sequence[int] = (), superposition: bool = True,
                      proxy_only: bool = False, code_only: bool = False) -> EnsembleRecord:
    basis, code, proxy = cfg.spaces
    _check_orthogonal(code, proxy)
    code_proj = Projection(code, CODE)
    proxy_proj = Projection(proxy, cfg.proxy_detection)

    inputs, kinds = [], []
    if superposition:
        inputs += [prepare_superposition(cfg, k).data for k in PROBE_STATES]
        kinds += ["sup"] * 4
    if proxy_only:
        inputs += [logical_state(proxy, k).data for k in PROBE_STATES]
        kinds += ["proxy"] * 4
    if code_only:
        inputs += [logical_state(code, k).data for k in PROBE_STATES]
        kinds += ["code"] * 4

    acc = {"sup_code": ([], []), "sup_proxy": ([], []), "proxy": ([], []), "code": ([], [])}
    n = 0
    for _, channel in sample_channels(basis, cfg.disorder, cfg.params, cfg.rates, cfg.evolution, seed, stream):
        if channel.unitary is not None:
            outs = [channel.unitary @ psi for psi in inputs]
        else:
            outs = list(channel(np.stack([np.outer(p, p.conj()) for p in inputs])))
        groups = {"sup_code": [], "sup_proxy": [], "proxy": [], "code": []}
        for kind, o in zip(kinds, outs):
            if kind == "sup":
                groups["sup_code"].append(code_proj(o))
                groups["sup_proxy"].append(proxy_proj(o))
            elif kind == "proxy":
                groups["proxy"].append(proxy_proj(o))
            else:
                groups["code"].append(code_proj(o))
        for key, items in groups.items():
            if items:
                acc[key][0].append([b for b, _ in items])
                acc[key][1].append([p for _, p in items])
        n += 1
    rec = EnsembleRecord(samples=n, nominal_samples=cfg.disorder.samples)
    for key, (blocks, probs) in acc.items():
        if blocks:
            setattr(rec, key, (np.array(blocks), np.array(probs)))
    return rec


def _triple_from_blocks(blocks: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Code-space Pauli expectations per superposition run, averaged over the four runs."""
    rhos = blocks / probs[:, None, None]
    vals = np.einsum("kab,iba->ki", rhos, SIGMA[1:]).real
    return vals.mean(axis=0)


def raw_triple(rec: EnsembleRecord) -> np.ndarray:
    blocks, probs = rec.sup_code
    return _triple_from_blocks(blocks.mean(axis=0), probs.mean(axis=0))


def _jackknife(values_fn, arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Delete-one jackknife standard error of a function of sample means."""
    n = arrays[0].shape[0]
    if n < 2:
        return np.zeros_like(np.asarray(values_fn(*[a.mean(axis=0) for a in arrays])))
    totals = [a.sum(axis=0) for a in arrays]
    reps = np.array([values_fn(*[(t - a[j]) / (n - 1) for t, a in zip(totals, arrays)]) for j in range(n)])
    return np.sqrt((n - 1) / n * np.sum((reps - reps.mean(axis=0)) ** 2, axis=0))


@dataclass
class MitigationResult:
    raw: ExpectationTriple
    proxy_lptm: LPTM
    mitigated: ExpectationTriple
    exact: ExpectationTriple
    mitigated_mapped: ExpectationTriple | None = None
    stderr: dict = field(default_factory=dict)
    postselection: dict = field(default_factory=dict)
    samples: int = 0

    def errors(self, which: str = "mitigated") -> np.ndarray:
        val = getattr(self, which)
        return np.abs(val.as_array() - self.exact.as_array())


def run_mitigation_experiment(cfg: MitigationConfig, seed: int = 0, stream: Sequence[int] = (),
                              record: EnsembleRecord | None = None) -> MitigationResult:
    rec = record or simulate_ensemble(cfg, seed, stream)
    cb, cp = rec.sup_code
    pb, pp = rec.sup_proxy
    det = cfg.proxy_detection
    cap = cfg.condition_cap

    raw = raw_triple(rec)
    T_proxy = lptm_from_blocks(pb.mean(axis=0), pp.mean(axis=0), det, metadata={"proxy": cfg.proxy})

    def mitigated_from(cb_, cp_, pb_, pp_, mapped=False):
        T = lptm_from_blocks(pb_, pp_, det)
        if mapped:
            T = apply_affine(cfg.affine_map, T)
        return invert_block(T, cap) @ _triple_from_blocks(cb_, cp_)

    if cfg.per_sample_inversion:
        per = [mitigated_from(cb[j], cp[j], pb[j], pp[j]) for j in range(rec.samples)]
        mit = np.mean(per, axis=0)
    else:
        mit = mitigated_from(cb.mean(0), cp.mean(0), pb.mean(0), pp.mean(0))
    arrays = [cb, cp, pb, pp]
    stderr = {
        "raw": _jackknife(lambda b, p, *_: _triple_from_blocks(b, p), arrays),
        "mitigated": _jackknife(mitigated_from, arrays),
    }
    mapped = None
    if cfg.affine_map is not None:
        mapped = ExpectationTriple.from_array(mitigated_from(cb.mean(0), cp.mean(0), pb.mean(0), pp.mean(0), True))
        stderr["mitigated_mapped"] = _jackknife(lambda *a: mitigated_from(*a, mapped=True), arrays)
    return MitigationResult(
        raw=ExpectationTriple.from_array(raw),
        proxy_lptm=T_proxy,
        mitigated=ExpectationTriple.from_array(mit),
        exact=exact_triple(cfg.target),
        mitigated_mapped=mapped,
        stderr=stderr,
        postselection={"code": cp.mean(axis=0).tolist(), "proxy": pp.mean(axis=0).tolist()},
        samples=rec.samples,
    )


def proxy_consistency(cfg: MitigationConfig, seed: int = 0, stream: Sequence[int] = (),
                      record: EnsembleRecord | None = None) -> float:
    """Trace distance between the proxy LPTM seen in superposition runs and in proxy-only runs."""
    rec = record or simulate_ensemble(cfg, seed, stream, superposition=True, proxy_only=True)
    det = cfg.proxy_detection
    T_sup = lptm_from_blocks(rec.sup_proxy[0].mean(0), rec.sup_proxy[1].mean(0), det)
    T_alone = lptm_from_blocks(rec.proxy[0].mean(0), rec.proxy[1].mean(0), det)
    return lptm_trace_distance(T_sup, T_alone)


def per_sample_lptms(blocks_probs: tuple, detection: DetectionStrategy) -> list[LPTM]:
    blocks, probs = blocks_probs
    return [lptm_from_blocks(b, p, detection) for b, p in zip(blocks, probs)]


def training_pairs(rec: EnsembleRecord, proxy_detection: DetectionStrategy = CODE) -> list[tuple[LPTM, LPTM]]:
    """One (proxy LPTM, code LPTM) pair per ensemble member."""
    return list(zip(per_sample_lptms(rec.proxy, proxy_detection), per_sample_lptms(rec.code, CODE)))
