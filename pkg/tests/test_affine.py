import numpy as np
import pytest

from proxymit.affine import AffineMap, TrainingSet, affine_cost, apply_affine, fit_affine
from proxymit.errors import ConfigError, NumericalError
from proxymit.tomography import LPTM


def synthetic(rng, n=40):
    A0 = rng.normal(size=(16, 16))
    B0 = rng.normal(size=16)
    X = rng.normal(size=(n, 16))
    return A0, B0, TrainingSet.from_arrays(X, X @ A0.T + B0)


def test_recovery(rng):
    A0, B0, data = synthetic(rng)
    m = fit_affine(data)
    assert np.max(np.abs(m.A - A0)) < 1e-8 and np.max(np.abs(m.B - B0)) < 1e-8
    held = LPTM(rng.normal(size=(4, 4)), "code")
    assert np.allclose(apply_affine(m, held).vec(), A0 @ held.vec() + B0, atol=1e-8)
    assert affine_cost(m, data) < 1e-14


def test_identity_pairs(rng):
    X = rng.normal(size=(20, 16))
    m = fit_affine(TrainingSet.from_arrays(X, X))
    assert np.allclose(m.A, np.eye(16), atol=1e-8) and np.allclose(m.B, 0, atol=1e-8)
    assert affine_cost(AffineMap.identity(), TrainingSet.from_arrays(X, X)) == 0


def test_single_pair_is_underdetermined(rng):
    X = rng.normal(size=(1, 16))
    m = fit_affine(TrainingSet.from_arrays(X, rng.normal(size=(1, 16))))
    assert m.metadata["residual"] < 1e-20 and m.metadata["underdetermined"]


def test_apply_examples():
    T = LPTM(np.arange(16.0).reshape(4, 4), "number")
    out = apply_affine(AffineMap.identity(), T)
    assert np.array_equal(out.matrix, T.matrix) and out.detection == "number" and out.metadata["mapped"]
    const = AffineMap(np.zeros((16, 16)), np.eye(4).ravel())
    assert np.array_equal(apply_affine(const, T).matrix, np.eye(4))


def test_squared_fit_beats_identity(rng):
    X = rng.normal(size=(30, 16))
    data = TrainingSet.from_arrays(X, 0.9 * X + 0.05 * rng.normal(size=X.shape))
    assert affine_cost(fit_affine(data), data) <= affine_cost(AffineMap.identity(), data)


def test_squared_fit_is_a_minimum(rng):
    X = rng.normal(size=(30, 16))
    data = TrainingSet.from_arrays(X, X @ rng.normal(size=(16, 16)).T + rng.normal(size=(30, 16)))
    m = fit_affine(data)
    c0 = affine_cost(m, data)
    for _ in range(100):
        dA, dB = rng.normal(size=(16, 16)), rng.normal(size=16)
        s = 1e-3 / np.sqrt(np.sum(dA ** 2) + np.sum(dB ** 2))
        assert affine_cost(AffineMap(m.A + s * dA, m.B + s * dB), data) >= c0 - 1e-12


def test_sum_of_norms_not_worse_than_initializer(rng):
    X = rng.normal(size=(25, 16))
    Y = X @ rng.normal(size=(16, 16)).T + rng.standard_t(1.5, size=(25, 16))
    data = TrainingSet.from_arrays(X, Y)
    sq = fit_affine(data)
    son = fit_affine(data, "sum-of-norms")
    assert affine_cost(son, data, "sum-of-norms") <= affine_cost(sq, data, "sum-of-norms") + 1e-12


def test_order_independence(rng):
    X = rng.normal(size=(30, 16))
    Y = rng.normal(size=(30, 16))
    perm = rng.permutation(30)
    a = fit_affine(TrainingSet.from_arrays(X, Y))
    b = fit_affine(TrainingSet.from_arrays(X[perm], Y[perm]))
    assert np.allclose(a.A, b.A, atol=1e-10) and np.allclose(a.B, b.B, atol=1e-10)


def test_training_set_validation():
    with pytest.raises(ConfigError):
        TrainingSet([])
    with pytest.raises(ConfigError):
        TrainingSet([(LPTM(np.eye(4), "code"), LPTM(np.eye(4), "raw"))])
    with pytest.raises(NumericalError):
        LPTM(np.full((4, 4), np.nan))
    with pytest.raises(ConfigError):
        fit_affine([(LPTM(np.eye(4)), LPTM(np.eye(4)))], method="newton")


def test_persistence(tmp_path, rng):
    A0, B0, data = synthetic(rng)
    m = fit_affine(data, code="C", proxy="P4", seed=3)
    path = tmp_path / "map.json"
    m.save(path)
    back = AffineMap.load(path)
    assert np.array_equal(back.A, m.A) and np.array_equal(back.B, m.B)
    d = m.to_dict()
    assert d["vectorization"] == "row-major-IXYZ" and d["proxy"] == "P4" and d["seed"] == 3
    assert np.max(np.abs(back.A - A0)) < 1e-8
    ts = TrainingSet.from_dict(data.to_dict())
    assert np.array_equal(ts.arrays()[0], data.arrays()[0])
