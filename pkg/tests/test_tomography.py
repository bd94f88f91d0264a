import numpy as np
import pytest

from proxymit.codes import CODE, NONE, DetectionStrategy, logical_pauli, logical_state, standard_code
from proxymit.dynamics import EvolutionConfig, HamiltonianParams, LindbladChannel, LossRates, build_hamiltonian
from proxymit.errors import NumericalError, PostSelectionError
from proxymit.fock import build_basis
from proxymit.tomography import (LPTM, PAULI_FROM_STATES, STATE_DECOMPOSITION, Projection, leakage_norms, lptm,
                                 lptm_from_blocks, lptm_trace_distance, pauli_images, probe_channel,
                                 process_fidelity)

G = 0.02


def loss_channel(basis, gamma=G, H=None):
    H = np.zeros((basis.dim, basis.dim)) if H is None else H
    return LindbladChannel(basis, H, LossRates.uniform(basis.modes, gamma))


@pytest.fixture(scope="module")
def dual_rail():
    return standard_code("dual-rail", build_basis(2, 1))


def test_state_decomposition_reproduces_paulis(dual_rail):
    rhos = [np.outer(v, v.conj()) for v in
            (logical_state(dual_rail, s).data for s in ("0", "1", "X+", "Y+"))]
    for j, w in enumerate("IXYZ"):
        img = sum(PAULI_FROM_STATES[j, i] * rhos[i] for i in range(4))
        assert np.allclose(img, logical_pauli(dual_rail, w).data)
    assert np.array_equal(STATE_DECOMPOSITION[3], [1, -1, 0, 0])


def test_identity_probe(dual_rail):
    probe = probe_channel(dual_rail, lambda r: r)
    for o, s in zip(probe.density_matrices, ("0", "1", "X+", "Y+")):
        v = logical_state(dual_rail, s).data
        assert np.array_equal(o.data, np.outer(v, v.conj()))
    for det in (NONE, CODE):
        imgs = pauli_images(probe, dual_rail, det)
        for img, w in zip(imgs, "IXYZ"):
            assert np.allclose(img, logical_pauli(dual_rail, w).data, atol=1e-15)
        assert np.allclose(lptm(probe, dual_rail, det).matrix, np.eye(4), atol=1e-10)


def test_full_loss_probe(dual_rail):
    vac = np.zeros((4, 4))
    vac[0, 0] = 1
    probe = probe_channel(dual_rail, lambda r: vac)
    assert all(np.array_equal(o.data, vac) for o in probe.density_matrices)
    with pytest.raises(PostSelectionError) as err:
        lptm(probe, dual_rail, CODE)
    assert err.value.label == "0"


def test_dual_rail_loss_images(dual_rail):
    probe = probe_channel(dual_rail, loss_channel(dual_rail.basis))
    lam_I = pauli_images(probe, dual_rail, NONE)[0]
    expected = np.exp(-G) * dual_rail.projector.data
    expected[0, 0] = 2 * (1 - np.exp(-G))
    assert np.allclose(lam_I, expected, atol=1e-6)
    T = lptm(probe, dual_rail, NONE)
    assert np.allclose(T.matrix, np.exp(-G) * np.eye(4), atol=1e-6)
    assert abs(process_fidelity(T) - 0.980199) < 1e-6
    assert np.allclose(lptm(probe, dual_rail, CODE).matrix, np.eye(4), atol=1e-6)


def test_blocks_agree_with_full_space_images(rng):
    b = build_basis(2, 4)
    code = standard_code("cly-4222", b)
    H = build_hamiltonian(b, HamiltonianParams((0.3, -0.1), J=0.2, U=(0.1, 0.4))).data
    probe = probe_channel(code, loss_channel(b, 0.1, H))
    for det in (NONE, DetectionStrategy("number-mod", 2, True), CODE):
        imgs = pauli_images(probe, code, det)
        direct = np.array([[0.5 * np.trace(logical_pauli(code, wi).data @ img).real for img in imgs]
                           for wi in "IXYZ"])
        assert np.allclose(lptm(probe, code, det).matrix, direct, atol=1e-12)


def test_process_fidelity_and_distance():
    assert process_fidelity(np.eye(4)) == 1
    assert abs(process_fidelity(np.exp(-0.02) * np.eye(4)) - 0.980199) < 1e-6
    assert process_fidelity(np.zeros((4, 4))) == 0
    a, b = np.eye(4), np.zeros((4, 4))
    assert lptm_trace_distance(a, a) == 0 and lptm_trace_distance(a, b) == 1
    m = np.arange(16.0).reshape(4, 4)
    assert lptm_trace_distance(m, a) == lptm_trace_distance(a, m)


def test_leakage_norms():
    b = build_basis(2, 12)
    C, P4 = standard_code("C", b), standard_code("P4", b)
    phi = logical_state(C, "X+")
    assert leakage_norms(lambda r: r, C, P4, phi) == (0.0, 0.0)
    H = build_hamiltonian(b, HamiltonianParams((0.02, -0.02), J=0.02, U=0.02)).data
    unitary = LindbladChannel(b, H, LossRates((0.0, 0.0)), EvolutionConfig(integrator="liouvillian-expm"))
    assert max(leakage_norms(unitary, C, P4, phi)) < 1e-10
    lossy = LindbladChannel(b, H, LossRates((0.02, 0.02)), EvolutionConfig(integrator="liouvillian-expm"))
    assert leakage_norms(lossy, C, P4, phi)[1] > 0


def test_leaky_trace_preserving_channel_first_row():
    # a logical unitary on the code space: first row exactly (1,0,0,0)
    b = build_basis(2, 1)
    code = standard_code("dual-rail", b)
    th = 0.3
    U = np.eye(4, dtype=complex)
    i, j = b.index((0, 1)), b.index((1, 0))
    U[np.ix_([i, j], [i, j])] = [[np.cos(th), -1j * np.sin(th)], [-1j * np.sin(th), np.cos(th)]]
    T = lptm(probe_channel(code, lambda r: U @ r @ U.conj().T), code, NONE)
    assert np.allclose(T.matrix[0], [1, 0, 0, 0], atol=1e-8)


def test_lptm_json_roundtrip():
    T = LPTM(np.arange(16.0).reshape(4, 4) / 16, "code", {"sigma": 0.02})
    back = LPTM.from_json(T.to_json())
    assert np.array_equal(back.matrix, T.matrix) and back.detection == "code" and back.metadata == T.metadata
    assert T.to_dict()["order"] == ["I", "X", "Y", "Z"]


def test_invalid_channel_output(dual_rail):
    with pytest.raises(NumericalError):
        probe_channel(dual_rail, lambda r: 2 * r)


def test_linearity_without_detection(rng):
    b = build_basis(2, 2)
    code = standard_code("span:0,1;1,0", b)
    H1 = build_hamiltonian(b, HamiltonianParams((0.4, 0.0), J=0.3)).data
    H2 = build_hamiltonian(b, HamiltonianParams((0.0, 0.2), J=-0.5, U=0.3)).data
    e1, e2 = loss_channel(b, 0.2, H1), loss_channel(b, 0.05, H2)
    lam = 0.3
    mix = lambda r: lam * e1(r) + (1 - lam) * e2(r)
    T1, T2, Tm = (lptm(probe_channel(code, e), code, NONE).matrix for e in (e1, e2, mix))
    assert np.allclose(Tm, lam * T1 + (1 - lam) * T2, atol=1e-10)


def test_projection_matches_explicit_postselection(rng):
    b = build_basis(2, 4)
    code = standard_code("cly-4222", b)
    probe = probe_channel(code, loss_channel(b, 0.3))
    proj = Projection(code, CODE)
    blocks, probs = proj.project_all(probe.outputs)
    T = lptm_from_blocks(blocks, probs, CODE)
    assert np.allclose(T.matrix[0], [1, 0, 0, 0], atol=1e-8)
    assert np.all((probs > 0) & (probs <= 1))
