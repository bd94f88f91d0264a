"""Affine maps vec(T) = A vec(T') + B from proxy LPTMs to code-space LPTMs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, NumericalError
from .tomography import LPTM

VECTORIZATION = "row-major-IXYZ"
METHODS = ("squared", "sum-of-norms")


@dataclass
class AffineMap:
    A: np.ndarray
    B: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(16, 16)
        self.B = np.asarray(self.B, dtype=float).reshape(16)
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.B))):
            raise NumericalError("affine map has non-finite entries")

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(np.eye(16), np.zeros(16), {"method": "identity"})

    def __call__(self, T: LPTM) -> LPTM:
        return apply_affine(self, T)

    def to_dict(self) -> dict:
        d = {"A": self.A.tolist(), "B": self.B.tolist(), "vectorization": VECTORIZATION}
        for key in ("method", "code", "proxy", "seed", "residual"):
            d[key] = self.metadata.get(key)
        d["metadata"] = {k: v for k, v in self.metadata.items() if k not in d}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AffineMap":
        if d.get("vectorization", VECTORIZATION) != VECTORIZATION:
            raise ConfigError(f"unsupported vectorization {d.get('vectorization')!r}")
        meta = dict(d.get("metadata", {}))
        for key in ("method", "code", "proxy", "seed", "residual"):
            if d.get(key) is not None:
                meta[key] = d[key]
        return cls(np.array(d["A"]), np.array(d["B"]), meta)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "AffineMap":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TrainingSet:
    """Pairs (proxy LPTM, code LPTM)."""

    pairs: list[tuple[LPTM, LPTM]]

    def __post_init__(self):
        self.pairs = list(self.pairs)
        if not self.pairs:
            raise ConfigError("training set is empty")
        tags = {t.detection for pair in self.pairs for t in pair}
        if len(tags) > 1:
            raise ConfigError(f"training pairs mix detection tags {sorted(tags)}")

    def __len__(self) -> int:
        return len(self.pairs)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        X = np.array([p.vec() for p, _ in self.pairs])
        Y = np.array([c.vec() for _, c in self.pairs])
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise NumericalError("training set has non-finite entries")
        return X, Y

    def to_dict(self) -> dict:
        return {"pairs": [{"proxy": p.to_dict(), "code": c.to_dict()} for p, c in self.pairs]}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingSet":
        return cls([(LPTM.from_dict(p["proxy"]), LPTM.from_dict(p["code"])) for p in d.get("pairs", [])])

    @classmethod
    def from_arrays(cls, X: np.ndarray, Y: np.ndarray, detection: str = "code") -> "TrainingSet":
        return cls([(LPTM(x, detection), LPTM(y, detection)) for x, y in zip(X, Y)])


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _residuals(W: np.ndarray, Xa: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return Xa @ W - Y


def _cost(R: np.ndarray, method: str) -> float:
    if method == "squared":
        return float(np.sum(R ** 2))
    return float(np.sum(np.linalg.norm(R, axis=1)))


def fit_affine(data: TrainingSet | Iterable[tuple[LPTM, LPTM]], method: str = "squared", eps: float = 1e-9,
               maxiter: int = 2000, gtol: float = 1e-10, **metadata) -> AffineMap:
    """Fit (A, B) to the training pairs.

    ``squared`` solves the least-squares problem in closed form (minimum-norm
    when fewer than 17 independent augmented vectors are available).
    ``sum-of-norms`` minimises the sum of Frobenius residual norms with BFGS,
    starting from the squared solution and smoothing each norm as
    sqrt(|r|^2 + eps^2).
    """
    if method not in METHODS:
        raise ConfigError(f"fit method must be one of {METHODS}, got {method!r}")
    if not isinstance(data, TrainingSet):
        data = TrainingSet(list(data))
    X, Y = data.arrays()
    Xa = _augment(X)
    W, *_ = np.linalg.lstsq(Xa, Y, rcond=None)
    rank = int(np.linalg.matrix_rank(Xa))
    meta = {"method": method, "n_pairs": len(data), "rank": rank, "underdetermined": rank < Xa.shape[1]}

    if method == "sum-of-norms":
        start_cost = _cost(_residuals(W, Xa, Y), method)

        def fun(theta):
            R = _residuals(theta.reshape(17, 16), Xa, Y)
            norms = np.sqrt(np.sum(R ** 2, axis=1) + eps ** 2)
            grad = Xa.T @ (R / norms[:, None])
            return float(norms.sum()), grad.ravel()

        res = minimize(fun, W.ravel(), jac=True, method="BFGS", options={"maxiter": maxiter, "gtol": gtol})
        W_opt = res.x.reshape(17, 16)
        opt_cost = _cost(_residuals(W_opt, Xa, Y), method)
        meta.update(initial_cost=start_cost, optimizer_iterations=int(res.nit), optimizer_message=str(res.message))
        if opt_cost <= start_cost:
            W = W_opt
        else:
            meta["kept_initializer"] = True

    meta["residual"] = _cost(_residuals(W, Xa, Y), method)
    meta.update(metadata)
    return AffineMap(W[:16].T, W[16], meta)


def apply_affine(m: AffineMap, T: LPTM) -> LPTM:
    out = m.A @ T.vec() + m.B
    meta = dict(T.metadata)
    meta["mapped"] = True
    return LPTM(out.reshape(4, 4), T.detection, meta)


def affine_cost(m: AffineMap, data: TrainingSet | Sequence[tuple[LPTM, LPTM]], method: str = "squared") -> float:
    """sum_i |T_i - f(T'_i)|^2 (squared) or sum_i |T_i - f(T'_i)| (sum-of-norms), unsmoothed."""
    if method not in METHODS:
        raise ConfigError(f"cost method must be one of {METHODS}, got {method!r}")
    if not isinstance(data, TrainingSet):
        data = TrainingSet(list(data))
    X, Y = data.arrays()
    R = X @ m.A.T + m.B - Y
    return _cost(R, method)
