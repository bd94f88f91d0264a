"""Logical Pauli transfer matrices from four-state channel probes, with optional post-selection.

A probe feeds |0>, |1>, |X+>, |Y+> of a code space through a channel. The
outputs are recombined into images of the logical Paulis with
``2 (c^T)^-1`` where ``c`` is the state-into-Pauli decomposition below.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .codes import (CODE, NONE, PAULI_LABELS, PROBE_STATES, CodeSpace, DetectionStrategy,
                    detection_projector, logical_state)
from .errors import BasisError, NumericalError, PostSelectionError
from .fock import DensityMatrix

# rho_i = 1/2 sum_k c[k, i] p_k for the probe states (0, 1, X+, Y+)
STATE_DECOMPOSITION = np.array([
    [1, 1, 1, 1],
    [0, 0, 1, 0],
    [0, 0, 0, 1],
    [1, -1, 0, 0],
], dtype=float)
STATE_DECOMPOSITION.flags.writeable = False

PAULI_FROM_STATES = 2 * np.linalg.inv(STATE_DECOMPOSITION.T)
PAULI_FROM_STATES.flags.writeable = False

SIGMA = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

POSTSELECTION_FLOOR = 1e-12


@dataclass
class LPTM:
    matrix: np.ndarray
    detection: str = "raw"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float).reshape(4, 4)
        if not np.all(np.isfinite(self.matrix)):
            raise NumericalError("LPTM has non-finite entries")

    @property
    def block(self) -> np.ndarray:
        """Unital 3x3 block over (X, Y, Z)."""
        return self.matrix[1:, 1:]

    def vec(self) -> np.ndarray:
        return self.matrix.reshape(16)

    def to_dict(self) -> dict:
        return {
            "order": list(PAULI_LABELS),
            "detection": self.detection,
            "rows": self.matrix.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LPTM":
        if list(d.get("order", PAULI_LABELS)) != list(PAULI_LABELS):
            raise ValueError(f"unsupported Pauli order {d.get('order')}")
        return cls(np.array(d["rows"], dtype=float), d.get("detection", "raw"), dict(d.get("metadata", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LPTM":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class ChannelProbe:
    """Un-post-selected channel outputs for the four probe states.

    Each output is a density matrix, or a state vector when the channel kept
    the probe pure.
    """

    code: CodeSpace
    outputs: tuple

    @property
    def density_matrices(self) -> list[DensityMatrix]:
        return [DensityMatrix(self.code.basis, _as_dm(o)) for o in self.outputs]


def _as_dm(o: np.ndarray) -> np.ndarray:
    return np.outer(o, o.conj()) if o.ndim == 1 else o


def _validate_output(o: np.ndarray, label: str) -> None:
    if o.ndim == 1:
        tr = float(np.vdot(o, o).real)
        if abs(tr - 1) > 1e-8:
            raise NumericalError(f"channel output for |{label}> has norm^2 {tr:.12g}")
        return
    try:
        _check_dm(o)
    except ValueError as exc:
        raise NumericalError(f"channel output for |{label}> is not a density matrix: {exc}") from exc


def _check_dm(rho: np.ndarray) -> None:
    if abs(np.trace(rho).real - 1) > 1e-8:
        raise ValueError(f"trace {np.trace(rho).real:.12g}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > 1e-10:
        raise ValueError(f"Hermiticity deviation {herm:.3e}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < -1e-8:
        raise ValueError(f"negative eigenvalue {lo:.3e}")


def probe_states(code: CodeSpace) -> list[np.ndarray]:
    return [logical_state(code, s).data for s in PROBE_STATES]


def probe_channel(code: CodeSpace, channel: Callable, validate: bool = True) -> ChannelProbe:
    outs = []
    for label, psi in zip(PROBE_STATES, probe_states(code)):
        if hasattr(channel, "apply_state"):
            o = np.asarray(channel.apply_state(psi))
        else:
            o = np.asarray(channel(np.outer(psi, psi.conj())))
        if o.shape not in ((code.basis.dim,), (code.basis.dim, code.basis.dim)):
            raise BasisError(f"channel output has shape {o.shape}")
        if validate:
            _validate_output(o, label)
        outs.append(o)
    return ChannelProbe(code, tuple(outs))


class Projection:
    """Precomputed post-selection data for one code space and detection strategy."""

    def __init__(self, code: CodeSpace, detection: DetectionStrategy | None = None):
        detection = detection or NONE
        self.code = code
        self.detection = detection
        V = code.isometry
        if detection.kind == "none":
            self.P = None
            self.W = V
        else:
            self.P = detection_projector(code, detection).data
            self.W = self.P @ V
        self._Wh = self.W.conj().T

    def __call__(self, output: np.ndarray) -> tuple[np.ndarray, float]:
        """(W^+ rho W, Tr[P rho]) for one output, unnormalised."""
        if output.ndim == 1:
            c = self._Wh @ output
            block = np.outer(c, c.conj())
            if self.P is None:
                prob = float(np.vdot(output, output).real)
            else:
                po = self.P @ output
                prob = float(np.vdot(po, po).real)
        else:
            block = self._Wh @ output @ self.W
            if self.P is None:
                prob = float(np.trace(output).real)
            else:
                prob = float(np.sum(self.P * output.T).real)
        return block, prob

    def project_all(self, outputs: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        pairs = [self(o) for o in outputs]
        return np.array([b for b, _ in pairs]), np.array([p for _, p in pairs])


def lptm_from_blocks(blocks: np.ndarray, probs: np.ndarray, detection: DetectionStrategy | None = None,
                     floor: float = POSTSELECTION_FLOOR, metadata: dict | None = None) -> LPTM:
    """LPTM from projected probe outputs (4, 2, 2) and detection probabilities (4,).

    Blocks and probabilities are linear in the channel output, so ensemble means
    of both give the LPTM of the ensemble-averaged state.
    """
    detection = detection or NONE
    blocks = np.asarray(blocks)
    if detection.kind != "none":
        for label, p in zip(PROBE_STATES, probs):
            if p < floor:
                raise PostSelectionError(
                    f"post-selection probability {p:.3e} for |{label}> is below floor {floor:g}", p, label)
        blocks = blocks / np.asarray(probs)[:, None, None]
    images = np.einsum("ji,iab->jab", PAULI_FROM_STATES, blocks)
    T = 0.5 * np.einsum("iab,jba->ij", SIGMA, images)
    resid = float(np.max(np.abs(T.imag)))
    if resid > 1e-8:
        raise NumericalError(f"LPTM has imaginary residue {resid:.3e}")
    meta = {"imag_residue": resid, "postselection": [float(p) for p in probs]}
    meta.update(metadata or {})
    return LPTM(T.real, detection.tag, meta)


def pauli_images(probe: ChannelProbe, code: CodeSpace, detection: DetectionStrategy | None = None,
                 floor: float = POSTSELECTION_FLOOR) -> list[np.ndarray]:
    """Full-space images Lambda(p_j) of the logical Paulis, post-selected per probe state."""
    detection = detection or NONE
    rhos = [_as_dm(o) for o in probe.outputs]
    if detection.kind != "none":
        P = detection_projector(code, detection).data
        selected = []
        for label, rho in zip(PROBE_STATES, rhos):
            r = P @ rho @ P
            p = float(np.trace(r).real)
            if p < floor:
                raise PostSelectionError(
                    f"post-selection probability {p:.3e} for |{label}> is below floor {floor:g}", p, label)
            selected.append(r / p)
        rhos = selected
    return [sum(PAULI_FROM_STATES[j, i] * rhos[i] for i in range(4)) for j in range(4)]


def lptm(probe: ChannelProbe, code: CodeSpace, detection: DetectionStrategy | None = None,
         floor: float = POSTSELECTION_FLOOR) -> LPTM:
    blocks, probs = Projection(code, detection).project_all(probe.outputs)
    return lptm_from_blocks(blocks, probs, detection, floor, {"code": code.label})


def process_fidelity(T: LPTM | np.ndarray) -> float:
    M = T.matrix if isinstance(T, LPTM) else np.asarray(T)
    return float(np.trace(M) / 4)


def lptm_trace_distance(T1: LPTM | np.ndarray, T2: LPTM | np.ndarray) -> float:
    a = T1.matrix if isinstance(T1, LPTM) else np.asarray(T1)
    b = T2.matrix if isinstance(T2, LPTM) else np.asarray(T2)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(0.5 * np.linalg.norm(a - b))


def leakage_norms(channel: Callable, code: CodeSpace, proxy: CodeSpace, code_state) -> tuple[float, float]:
    """Frobenius norms of Pi_C E(Pi_P) Pi_C and Pi_P E(|phi><phi|) Pi_P."""
    Pc, Pp = code.projector.data, proxy.projector.data
    if np.max(np.abs(Pc @ Pp)) > 1e-10:
        raise ValueError(f"code {code.label!r} and proxy {proxy.label!r} overlap")
    phi = code_state.data if hasattr(code_state, "data") else np.asarray(code_state)
    into_code = 2 * (Pc @ channel(Pp / 2) @ Pc)
    into_proxy = Pp @ channel(np.outer(phi, phi.conj())) @ Pp
    return float(np.linalg.norm(into_code)), float(np.linalg.norm(into_proxy))


__all__ = [
    "CODE", "NONE", "LPTM", "ChannelProbe", "Projection", "STATE_DECOMPOSITION", "PAULI_FROM_STATES",
    "probe_channel", "pauli_images", "lptm", "lptm_from_blocks", "process_fidelity",
    "lptm_trace_distance", "leakage_norms",
]
