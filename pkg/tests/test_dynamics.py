import numpy as np
import pytest
from scipy.linalg import expm

from proxymit.dynamics import (DisorderSpec, EvolutionConfig, HamiltonianParams, LindbladChannel, LossRates,
                               build_hamiltonian, ensemble_average, evolve, lindblad_rhs, sample_disorder,
                               sample_rng)
from proxymit.errors import BasisError, StepSizeError
from proxymit.fock import DensityMatrix, build_basis, fock_state, mode_operator

from conftest import random_density_matrix

EXACT = EvolutionConfig(integrator="liouvillian-expm")


def test_hamiltonian_single_excitation_block():
    b = build_basis(2, 1)
    H = build_hamiltonian(b, HamiltonianParams((0.3, -0.7), J=0.25)).data
    idx = [b.index((1, 0)), b.index((0, 1))]
    assert np.allclose(H[np.ix_(idx, idx)], [[0.3, 0.25], [0.25, -0.7]])


def test_hamiltonian_interaction_and_zero():
    b = build_basis(1, 4)
    H = build_hamiltonian(b, HamiltonianParams((0.0,), U=1.0)).data
    assert np.isclose(H[2, 2], 1.0)
    assert not np.any(build_hamiltonian(b, HamiltonianParams.zeros(1)).data)


def test_hamiltonian_conserves_number(rng):
    b = build_basis(3, 3)
    p = HamiltonianParams(tuple(rng.normal(size=3)), J=rng.normal(), U=tuple(rng.normal(size=3)))
    H = build_hamiltonian(b, p).data
    N = np.diag(b.total_number.astype(float))
    assert np.allclose(H, H.conj().T, atol=1e-12)
    assert np.linalg.norm(N @ H - H @ N) < 1e-10


def test_parameter_length_mismatch():
    with pytest.raises(BasisError):
        build_hamiltonian(build_basis(2, 2), HamiltonianParams.zeros(3))


def test_rhs_examples(rng):
    b = build_basis(1, 3)
    H0 = build_hamiltonian(b, HamiltonianParams.zeros(1))
    rho = DensityMatrix(b, random_density_matrix(rng, 4))
    assert not np.any(lindblad_rhs(rho, H0, LossRates((0.0,))))
    g = 0.3
    one = fock_state(b, [1]).dm()
    expected = np.zeros((4, 4))
    expected[0, 0], expected[1, 1] = g, -g
    assert np.allclose(lindblad_rhs(one, H0, LossRates((g,))), expected)
    H = build_hamiltonian(b, HamiltonianParams((0.4,), U=0.2))
    out = lindblad_rhs(rho, H, LossRates((0.1,)))
    assert abs(np.trace(out)) < 1e-10 and np.allclose(out, out.conj().T, atol=1e-10)


def test_single_mode_decay():
    b = build_basis(1, 1)
    rho = evolve(fock_state(b, [1]).dm(), HamiltonianParams.zeros(1), LossRates((0.02,)))
    assert abs(rho.data[1, 1].real - np.exp(-0.02)) < 1e-6
    assert abs(rho.data[1, 1].real - 0.980199) < 1e-6


def test_rabi_oscillation():
    b = build_basis(2, 1)
    J = 0.7
    rho = evolve(fock_state(b, [1, 0]).dm(), HamiltonianParams((0.0, 0.0), J=J), LossRates((0.0, 0.0)))
    i = b.index((1, 0))
    assert abs(rho.data[i, i].real - np.cos(J) ** 2) < 1e-6


def test_identity_evolution_is_exact(rng):
    b = build_basis(2, 2)
    rho0 = random_density_matrix(rng, b.dim)
    for cfg in (EvolutionConfig(), EXACT):
        out = evolve(DensityMatrix(b, rho0), HamiltonianParams.zeros(2), LossRates((0.0, 0.0)), cfg)
        assert np.array_equal(out.data, rho0)


def test_rk4_matches_dense_exponential(rng):
    # independent oracle: dense scipy expm of the column-stacked Liouvillian built from scratch
    b = build_basis(2, 2)
    p = HamiltonianParams((0.3, -0.2), J=0.5, U=(0.4, 0.1))
    gam = (0.2, 0.05)
    H = build_hamiltonian(b, p).data
    I = np.eye(b.dim)
    L = -1j * (np.kron(I, H) - np.kron(H.T, I))
    for g, m in zip(gam, range(2)):
        a = mode_operator(b, m, "annihilate").data
        ad = a.conj().T
        L += g * (np.kron(a.conj(), a) - 0.5 * np.kron(I, ad @ a) - 0.5 * np.kron((ad @ a).T, I))
    rho0 = random_density_matrix(rng, b.dim)
    expected = (expm(L) @ rho0.reshape(-1, order="F")).reshape(b.dim, b.dim, order="F")
    for cfg in (EvolutionConfig(), EXACT):
        got = LindbladChannel(b, H, LossRates(gam), cfg)(rho0)
        assert np.max(np.abs(got - expected)) < 1e-6


def test_unitary_fast_path_matches_expm(rng):
    b = build_basis(2, 3)
    H = build_hamiltonian(b, HamiltonianParams((0.1, 0.3), J=0.4, U=0.2)).data
    ch = LindbladChannel(b, H, LossRates((0.0, 0.0)), EXACT)
    assert np.allclose(ch.unitary, expm(-1j * H), atol=1e-12)
    psi = rng.normal(size=b.dim) + 1j * rng.normal(size=b.dim)
    psi /= np.linalg.norm(psi)
    out = ch.apply_state(psi)
    assert np.allclose(ch(np.outer(psi, psi.conj())), np.outer(out, out.conj()))


def test_paper_sign_is_time_reversal():
    b = build_basis(2, 1)
    H = build_hamiltonian(b, HamiltonianParams((0.5, 0.0), J=0.3)).data
    std = LindbladChannel(b, H, LossRates((0.0, 0.0)), EXACT).unitary
    pap = LindbladChannel(b, H, LossRates((0.0, 0.0)), EvolutionConfig(integrator="liouvillian-expm",
                                                                       sign="paper")).unitary
    assert np.allclose(pap, std.conj())


def test_step_size_self_check():
    b = build_basis(1, 3)
    H = build_hamiltonian(b, HamiltonianParams((3.0,), U=2.0))
    rho0 = np.full((4, 4), 0.25)
    coarse = EvolutionConfig(dt=0.25, self_check=True)
    with pytest.raises(StepSizeError):
        LindbladChannel(b, H, LossRates((0.5,)), coarse)(rho0)
    LindbladChannel(b, H, LossRates((0.5,)), EvolutionConfig(dt=1e-3, self_check=True))(rho0)


@pytest.mark.filterwarnings("ignore:initial state reaches")
def test_evolution_validity_and_number_monotone(rng):
    b = build_basis(2, 2)
    p = HamiltonianParams((0.2, -0.1), J=0.3, U=0.5)
    rho = DensityMatrix(b, random_density_matrix(rng, b.dim))
    N = np.diag(b.total_number.astype(float))
    prev = np.trace(N @ rho.data).real
    for _ in range(4):
        rho = evolve(rho, p, LossRates((0.1, 0.2)), EvolutionConfig(t_final=0.25))
        rho.validate()
        cur = np.trace(N @ rho.data).real
        assert cur <= prev + 1e-8
        prev = cur


def test_sample_disorder_sigma_zero_returns_base():
    base = HamiltonianParams((0.1, 0.2), J=0.3)
    spec = DisorderSpec("normal", 0.0, fluctuating=("Delta_1", "J"))
    assert sample_disorder(spec, base, sample_rng(1, 0)) == base


def test_two_point_mean():
    spec = DisorderSpec("two-point", 0.02, mean=0.1, fluctuating=("J",))
    base = HamiltonianParams.zeros(2)
    rng = np.random.default_rng(5)
    js = np.array([sample_disorder(spec, base, rng).J for _ in range(100_000)])
    assert set(np.round(js, 12)) == {0.08, 0.12}
    assert abs(js.mean() - 0.1) < 3 * 0.02 / np.sqrt(1e5)


def test_normal_std():
    spec = DisorderSpec("normal", 0.02, fluctuating=("Delta_1",))
    rng = np.random.default_rng(6)
    d = np.array([sample_disorder(spec, HamiltonianParams.zeros(2), rng).delta[0] for _ in range(100_000)])
    assert abs(d.std() / 0.02 - 1) < 0.05


def test_per_mode_interaction_fluctuates_independently():
    spec = DisorderSpec("two-point", 0.02, fluctuating=("U_1", "U_2"))
    Us = {sample_disorder(spec, HamiltonianParams.zeros(2), sample_rng(0, j)).U for j in range(64)}
    assert len(Us) == 4


def test_ensemble_single_sample_equals_evolve():
    b = build_basis(2, 1)
    rho0 = fock_state(b, [1, 0]).dm()
    spec = DisorderSpec("normal", 0.3, fluctuating=("Delta_1", "J"), samples=1)
    base = HamiltonianParams.zeros(2)
    avg = ensemble_average(rho0, spec, base, LossRates((0.0, 0.0)), seed=11)
    one = evolve(rho0, sample_disorder(spec, base, sample_rng(11, 0)), LossRates((0.0, 0.0)))
    assert np.array_equal(avg.data, one.data)


def test_ensemble_sigma_zero_is_deterministic():
    b = build_basis(2, 1)
    rho0 = fock_state(b, [1, 0]).dm()
    base = HamiltonianParams((0.0, 0.0), J=0.4)
    avg = ensemble_average(rho0, DisorderSpec(sigma=0.0, samples=50), base, LossRates((0.1, 0.1)))
    assert np.allclose(avg.data, evolve(rho0, base, LossRates((0.1, 0.1))).data, atol=1e-14)


def test_two_point_dephasing_closed_form():
    # |+> on {|1,0>,|0,1>} with Delta_1 = +/- s: off-diagonal averages to cos(s t)/2
    b = build_basis(2, 1)
    s = 0.3
    psi = (fock_state(b, [1, 0]).data + fock_state(b, [0, 1]).data) / np.sqrt(2)
    rho0 = DensityMatrix(b, np.outer(psi, psi.conj()))
    spec = DisorderSpec("two-point", s, fluctuating=("Delta_1",), samples=400)
    avg = ensemble_average(rho0, spec, HamiltonianParams.zeros(2), LossRates((0.0, 0.0)), EXACT, seed=3)
    plus = sum(sample_disorder(spec, HamiltonianParams.zeros(2), sample_rng(3, j)).delta[0] > 0
               for j in range(400)) / 400
    i, k = b.index((1, 0)), b.index((0, 1))
    expected = 0.5 * (plus * np.exp(-1j * s) + (1 - plus) * np.exp(1j * s))
    assert abs(avg.data[i, k] - expected) < 1e-10
    if abs(plus - 0.5) < 1e-12:
        assert abs(avg.data[i, k] - 0.5 * np.cos(s)) < 1e-10


def test_ensemble_is_order_independent():
    b = build_basis(2, 2)
    rho0 = fock_state(b, [2, 0]).dm()
    spec = DisorderSpec("normal", 0.2, fluctuating=("Delta_1", "J", "U_2"), samples=6)
    base = HamiltonianParams.zeros(2)
    avg = ensemble_average(rho0, spec, base, LossRates((0.05, 0.0)), EXACT, seed=9)
    members = [evolve(rho0, sample_disorder(spec, base, sample_rng(9, j)), LossRates((0.05, 0.0)), EXACT).data
               for j in range(6)]
    assert np.allclose(avg.data, sum(members[::-1]) / 6, atol=1e-14)
