import math

import numpy as np
import pytest
from scipy.linalg import expm

from openqsl.dynamics import (
    align_basis,
    bohr_components,
    build_jump_decomposition,
    dissipator,
    dissipator_split,
    effective_hamiltonian,
    evolve,
    rhs,
)
from openqsl.errors import (
    BohrFrequencyError,
    DegeneracyError,
    DetailedBalanceError,
    DimensionError,
    InputError,
    JumpStructureError,
)
from openqsl.operators import SIGMA_MINUS, SIGMA_PLUS, gibbs_state, spectral_state, with_basis

from randoms import density, herm, random_model

SM, SP = SIGMA_MINUS, SIGMA_PLUS


def liouvillian(h, jumps):
    """Row-major superoperator: vec(A rho B) = (A kron B^T) vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for gamma, op in jumps:
        ldl = op.conj().T @ op
        sup += gamma * (
            np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T)
        )
    return sup


def test_preset_resolves_to_emission_and_absorption(qubit_model):
    jumps = {round(j.omega, 12): j for j in qubit_model.resolved_jumps}
    assert set(jumps) == {1.0, -1.0}
    assert np.allclose(jumps[1.0].op, SM)
    assert np.allclose(jumps[-1.0].op, SP)
    assert jumps[1.0].rate == pytest.approx(2.0)
    assert jumps[-1.0].rate == pytest.approx(1.5)


def test_dissipator_closed_form(qubit_model, preset):
    a, b, c = 0.7, 0.3, 0.2 + 0.1j
    gm, gp = 2.0, 1.5
    want = np.array(
        [[-gm * a + gp * b, -(gm + gp) / 2 * c], [-(gm + gp) / 2 * np.conj(c), gm * a - gp * b]]
    )
    assert np.allclose(dissipator(qubit_model, preset.rho0), want, atol=1e-12)


def test_rhs_matches_kronecker_liouvillian(rng):
    model = random_model(rng, 3, couplings=2)
    rho = density(rng, 3)
    sup = liouvillian(model.hamiltonian, [(j.rate, j.op) for j in model.resolved_jumps])
    want = (sup @ rho.ravel()).reshape(3, 3)
    assert np.allclose(rhs(model, rho), want, atol=1e-12)


def test_bohr_components_brute_force(rng):
    # equally spaced levels: omega = 1 collects two pairs
    u, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    eps = np.array([0.0, 1.0, 2.0])
    h = u @ np.diag(eps) @ u.conj().T
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    comps = bohr_components(h, a)
    want = {}
    for n in range(3):
        for m in range(3):
            w = round(eps[m] - eps[n], 9)
            pn = np.outer(u[:, n], u[:, n].conj())
            pm = np.outer(u[:, m], u[:, m].conj())
            want[w] = want.get(w, 0) + pn @ a @ pm
    assert sorted(round(w, 9) for w in comps) == sorted(want)
    for w, comp in comps.items():
        assert np.allclose(comp, want[round(w, 9)], atol=1e-10)
        # ladder relation [H, L_w] = -w L_w
        assert np.allclose(h @ comp - comp @ h, -w * comp, atol=1e-10)
    assert np.allclose(sum(comps.values()), a, atol=1e-10)


def test_gibbs_state_is_stationary(rng):
    for d in (2, 3, 4):
        model = random_model(rng, d)
        g = gibbs_state(model.hamiltonian, model.beta)
        assert np.max(np.abs(rhs(model, g))) < 1e-12


def test_detailed_balance_violation():
    h = np.diag([0.5, -0.5])
    with pytest.raises(DetailedBalanceError):
        build_jump_decomposition(h, [("a", SM)], {("a", 1.0): 1.0, ("a", -1.0): 1.0}, 0.5)
    # no temperature but thermal transitions
    with pytest.raises(DetailedBalanceError):
        build_jump_decomposition(h, [("a", SM)], {("a", 1.0): 1.0}, None)
    # pure dephasing needs no beta
    model = build_jump_decomposition(h, [("z", np.diag([1.0, -1.0]))], {("z", 0.0): 0.3}, None)
    assert [j.omega for j in model.resolved_jumps] == [0.0]


def test_model_validation_errors():
    h = np.diag([0.5, -0.5])
    with pytest.raises(BohrFrequencyError):
        build_jump_decomposition(h, [("a", SM)], {("a", 0.7): 1.0}, 0.5)
    with pytest.raises(InputError):
        build_jump_decomposition(h, [("a", SM)], {("a", 1.0): -1.0}, 0.5)
    with pytest.raises(DimensionError):
        build_jump_decomposition(h, [("a", np.eye(3))], {}, 0.5)
    # components at +1 and -1 that are not adjoint to each other
    bad = np.array([[0, 2.0], [1.0, 0]])
    with pytest.raises(JumpStructureError):
        build_jump_decomposition(h, [("a", bad)], {("a", 1.0): 1.0, ("a", -1.0): 0.5}, 0.1)


def test_split_and_effective_hamiltonian(rng):
    model = random_model(rng, 4)
    st = spectral_state(density(rng, 4))
    d_d, d_nd = dissipator_split(model, st)
    aligned = align_basis(model, st)
    dt = aligned.in_basis(d_d)
    assert np.allclose(dt - np.diag(np.diag(dt)), 0, atol=1e-12)
    assert np.allclose(np.diag(aligned.in_basis(d_nd)), 0, atol=1e-12)
    h_d = effective_hamiltonian(model, st)
    assert np.allclose(h_d, h_d.conj().T)
    assert np.allclose(-1j * (h_d @ st.rho - st.rho @ h_d), d_nd, atol=1e-10)


def test_degenerate_state_aligned_and_rejected_when_not(qubit_model):
    st = spectral_state(np.eye(2) / 2)
    h_d = effective_hamiltonian(qubit_model, st)
    assert np.allclose(h_d, 0)
    hadamard = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    forced = with_basis(st, hadamard, qubit_model.key)
    with pytest.raises(DegeneracyError):
        effective_hamiltonian(qubit_model, forced)


def test_relaxation_matches_closed_form(qubit_model, preset):
    traj = evolve(qubit_model, preset.rho0, (0.0, 5.0), 1e-3, stride=250)
    for t, rho in zip(traj.times, traj.rhos):
        pe = 3 / 7 + (0.7 - 3 / 7) * math.exp(-3.5 * t)
        coh = (0.2 + 0.1j) * np.exp(-(1j + 1.75) * t)
        assert rho[0, 0].real == pytest.approx(pe, abs=1e-10)
        assert abs(rho[0, 1] - coh) < 1e-10


def test_evolve_matches_matrix_exponential(rng):
    model = random_model(rng, 3, couplings=2)
    rho0 = density(rng, 3)
    sup = liouvillian(model.hamiltonian, [(j.rate, j.op) for j in model.resolved_jumps])
    traj = evolve(model, rho0, (0.0, 1.0), 1e-3, stride=1000)
    want = (expm(sup) @ rho0.ravel()).reshape(3, 3)
    assert np.allclose(traj.rhos[-1], want, atol=1e-9)
    for rho in traj.rhos:
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_evolve_rejects_bad_arguments(qubit_model, preset):
    with pytest.raises(InputError):
        evolve(qubit_model, preset.rho0, (0.0, 1.0), -1e-3)
    with pytest.raises(InputError):
        evolve(qubit_model, preset.rho0, (0.0, 1.0), 1e-3, stride=0)
