"""Split an LPTM into leakage, Markovian, coherent and non-Markovian noise measures."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .tomography import LPTM

VARIANTS = ("paper", "deviation")


@dataclass(frozen=True)
class NoiseBreakdown:
    leakage: float
    markovian: float
    coherent: float
    non_markovian: float
    variant: str = "paper"

    def as_dict(self) -> dict:
        return asdict(self)


def proper_svd(block: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD U diag(s) Vh with det(U Vh) = +1.

    When the plain SVD gives an improper rotation, the last column of U and the
    smallest singular value both change sign, so the product is unchanged.
    """
    U, s, Vh = np.linalg.svd(block)
    if np.linalg.det(U @ Vh) < 0:
        U = U.copy()
        U[:, -1] *= -1
        s = s.copy()
        s[-1] *= -1
    return U, s, Vh


def noise_decomposition(T: LPTM | np.ndarray, variant: str = "paper") -> NoiseBreakdown:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    M = T.matrix if isinstance(T, LPTM) else np.asarray(T, dtype=float)
    leak = np.sqrt((1 - M[0, 0]) ** 2 + M[0, 1] ** 2 + M[0, 2] ** 2 + M[0, 3] ** 2)
    markov = np.sqrt(M[1, 0] ** 2 + M[2, 0] ** 2 + M[3, 0] ** 2)
    U, s, Vh = proper_svd(M[1:, 1:])
    coherent = np.linalg.norm(np.eye(3) - U @ Vh)
    if variant == "paper":
        nonmarkov = np.linalg.norm(s)
    else:
        nonmarkov = np.linalg.norm(1 - s)
    return NoiseBreakdown(float(leak), float(markov), float(coherent), float(nonmarkov), variant)
