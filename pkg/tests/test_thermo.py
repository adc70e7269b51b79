import math

import numpy as np
import pytest

from openqsl.dynamics import align_basis, rhs
from openqsl.errors import BasisError, InputError
from openqsl.operators import SIGMA_X, gibbs_state, spectral_state, with_basis
from openqsl.thermo import (
    activity,
    entropy_production_paths,
    entropy_production_rate,
    log_mean,
    mobility,
    rate_matrix,
)

from randoms import density, random_model


def brute_rates(model, state):
    """Forward/reverse flux pairs by explicit loops over jumps and levels."""
    v = state.eigenvectors
    p = state.eigenvalues
    d = len(p)
    pairs = []
    for jump in model.resolved_jumps:
        partner = next(
            j for j in model.resolved_jumps
            if j.label == jump.label and abs(j.omega + jump.omega) < 1e-9
        )
        for m in range(d):
            for n in range(d):
                if m == n and jump.omega == 0.0:
                    continue
                w_fwd = jump.rate * abs(v[:, m].conj() @ jump.op @ v[:, n]) ** 2
                w_rev = partner.rate * abs(v[:, n].conj() @ partner.op @ v[:, m]) ** 2
                pairs.append((m, n, w_fwd * p[n], w_rev * p[m]))
    return pairs


def setup(rng, d):
    model = random_model(rng, d, couplings=2)
    st = align_basis(model, spectral_state(density(rng, d)))
    return model, st, rhs(model, st), rate_matrix(model, st)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_sigma_dot_brute_force_and_flux_form(rng, d):
    model, st, rd, W = setup(rng, d)
    pairs = brute_rates(model, st)
    want = sum(f * math.log(f / r) for _, _, f, r in pairs if f > 0)
    rate_form, flux_form = entropy_production_paths(st, rd, model.hamiltonian, model.beta, W)
    assert rate_form == pytest.approx(want, rel=1e-10)
    assert flux_form == pytest.approx(want, rel=1e-8, abs=1e-12)
    assert entropy_production_rate(st, rd, model.hamiltonian, model.beta, W) >= 0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_activity_and_mobilities(rng, d):
    model, st, rd, W = setup(rng, d)
    pairs = brute_rates(model, st)
    a = 0.5 * sum(f + r for _, _, f, r in pairs)
    m = sum(log_mean(f, r) for _, _, f, r in pairs)
    m_prime = sum(log_mean(f, r) for mm, nn, f, r in pairs if mm != nn)
    assert activity(W) == pytest.approx(a, rel=1e-12)
    assert mobility(W, "M") == pytest.approx(m, rel=1e-12)
    assert mobility(W, "M_prime") == pytest.approx(m_prime, rel=1e-12)
    assert mobility(W, "M_prime") <= mobility(W, "M") + 1e-12 <= activity(W) + 2e-12
    x = SIGMA_X if d == 2 else np.diag(np.arange(d, dtype=float))
    xdiag = np.real(np.einsum("im,ij,jm->m", st.eigenvectors.conj(), x, st.eigenvectors))
    m_x = sum(4 * xdiag[mm] ** 2 * log_mean(f, r) for mm, nn, f, r in pairs if mm != nn)
    assert mobility(W, "M_X", x) == pytest.approx(m_x, rel=1e-12)


def test_gibbs_state_produces_no_entropy(rng):
    model = random_model(rng, 3)
    st = align_basis(model, spectral_state(gibbs_state(model.hamiltonian, model.beta)))
    W = rate_matrix(model, st)
    sigma = entropy_production_rate(st, rhs(model, st), model.hamiltonian, model.beta, W)
    assert sigma < 1e-12


def test_pure_excited_state_diverges(qubit_model):
    st = align_basis(qubit_model, spectral_state(np.diag([1.0, 0.0])))
    W = rate_matrix(qubit_model, st)
    rd = rhs(qubit_model, st)
    rate_form, flux_form = entropy_production_paths(st, rd, qubit_model.hamiltonian, qubit_model.beta, W)
    assert rate_form == math.inf
    assert flux_form == math.inf
    assert entropy_production_rate(st, rd, qubit_model.hamiltonian, qubit_model.beta, W) == math.inf


def test_rate_matrix_needs_aligned_basis_for_degenerate_states(qubit_model):
    st = spectral_state(np.eye(2) / 2)
    hadamard = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    with pytest.raises(BasisError):
        rate_matrix(qubit_model, with_basis(st, hadamard, -1))
    # a raw, non-degenerate state is aligned on the fly
    rate_matrix(qubit_model, spectral_state(np.diag([0.6, 0.4])))


def test_log_mean():
    assert log_mean(2.0, 2.0) == 2.0
    assert log_mean(3.0, 0.0) == 0.0
    assert log_mean(1.0, math.e) == pytest.approx((math.e - 1.0))
    assert log_mean(1.0, 1.0 + 1e-9) == pytest.approx(1.0 + 5e-10, rel=1e-15)
    a, b = 0.3, 1.7
    assert math.sqrt(a * b) <= log_mean(a, b) <= (a + b) / 2
    assert log_mean(a, b) == log_mean(b, a)
    with pytest.raises(InputError):
        log_mean(-1.0, 1.0)


@pytest.mark.parametrize("p", [[0.5, 0.5], [0.4, 0.4, 0.2], [0.3, 0.3, 0.2, 0.2]])
def test_degenerate_state_rate_form_matches_flux_form(rng, p):
    d = len(p)
    model = random_model(rng, d, couplings=2)
    u, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    st = align_basis(model, spectral_state((u * np.array(p)) @ u.conj().T))
    rate_form, flux_form = entropy_production_paths(
        st, rhs(model, st), model.hamiltonian, model.beta, rate_matrix(model, st)
    )
    assert rate_form == pytest.approx(flux_form, rel=1e-9, abs=1e-12)
