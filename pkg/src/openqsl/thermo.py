"""Rate matrix and stochastic-thermodynamic scalars in the eigenbasis of rho.

For each resolved jump k = (omega, alpha) the transition rates are
``W[k, m, n] = gamma |<m|L|n>|^2``. The forward flux of entry (k, m, n) is
``W[k, m, n] p_n`` and its reverse partner is ``W[k', n, m] p_m`` with k' the
(-omega, alpha) jump. "Primed" sums skip entries with m == n and omega == 0.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .dynamics import align_basis
from .errors import BasisError, ConsistencyError, DimensionError, InputError

logger = logging.getLogger(__name__)

PRUNE_TOL = 1e-15
POP_FLOOR = 1e-14
DIVERGENT_FLUX_TOL = 1e-6
FLUX_BALANCE_TOL = 1e-9
DUAL_ROUTE_TOL = 1e-6
NEG_SIGMA_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RateMatrix:
    W: np.ndarray  # (K, d, d)
    omegas: np.ndarray  # (K,)
    labels: Tuple[str, ...]
    reverse: np.ndarray  # (K,) index of the (-omega, alpha) partner
    populations: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    basis_key: Optional[int] = None

    @property
    def dim(self):
        return self.populations.shape[0]

    def forward_flux(self):
        return self.W * self.populations[None, None, :]

    def reverse_flux(self):
        # R[k, m, n] = W[k', n, m] p_m
        return np.transpose(self.W[self.reverse], (0, 2, 1)) * self.populations[None, :, None]

    def primed_mask(self):
        d = self.dim
        diag = np.eye(d, dtype=bool)[None, :, :]
        zero = (self.omegas == 0.0)[:, None, None]
        return ~(diag & zero) & np.ones((len(self.omegas), d, d), dtype=bool)

    def offdiag_mask(self):
        d = self.dim
        return np.broadcast_to(~np.eye(d, dtype=bool), self.W.shape)

    def entries(self):
        """Nonzero rates keyed by (omega, label, m, n)."""
        out = {}
        for k, m, n in zip(*np.nonzero(self.W)):
            out[(float(self.omegas[k]), self.labels[k], int(m), int(n))] = float(self.W[k, m, n])
        return out


def rate_matrix(model, state):
    """Transition rates in the (model-aligned) eigenbasis of ``state``."""
    if state.basis_key != model.key:
        if state.basis_key is not None or state.has_degeneracy():
            raise BasisError(
                "state eigenbasis is not aligned with this model; call dynamics.align_basis first"
            )
        state = align_basis(model, state)
    v = state.eigenvectors
    jumps = model.resolved_jumps
    d = state.dim
    W = np.zeros((len(jumps), d, d))
    for k, jump in enumerate(jumps):
        if jump.rate > 0:
            W[k] = jump.rate * np.abs(v.conj().T @ jump.op @ v) ** 2
    W[W < PRUNE_TOL] = 0.0
    W.setflags(write=False)
    rm = RateMatrix(
        W,
        np.array([j.omega for j in jumps], dtype=float),
        tuple(j.label for j in jumps),
        np.array(model.reverse, dtype=int),
        state.eigenvalues,
        v,
        model.key,
    )
    mask = rm.primed_mask()
    fwd = rm.forward_flux()[mask].sum()
    rev = rm.reverse_flux()[mask].sum()
    if abs(fwd - rev) > FLUX_BALANCE_TOL * max(1.0, fwd):
        raise ConsistencyError(f"flux balance broken: forward {fwd:.15g} vs reverse {rev:.15g}")
    return rm


def entropy_flux(state, rho_dot):
    """-Tr[rho_dot ln rho] evaluated in the eigenbasis of rho.

    Populations below 1e-14 are floored; if such a level carries a population
    current above 1e-6 the flux diverges and a signed infinity is returned.
    """
    p = state.eigenvalues
    flow = np.real(np.diag(state.in_basis(rho_dot)))
    small = p < POP_FLOOR
    if np.any(small):
        logger.debug("entropy flux: flooring %d populations at %g", small.sum(), POP_FLOOR)
        hot = small & (np.abs(flow) > DIVERGENT_FLUX_TOL)
        if np.any(hot):
            return math.copysign(math.inf, float(flow[hot].sum()) or 1.0)
    return float(-np.sum(flow * np.log(np.maximum(p, POP_FLOOR))))


def heat_flux(rho_dot, hamiltonian):
    if np.shape(rho_dot) != np.shape(hamiltonian):
        raise DimensionError("rho_dot and hamiltonian dimensions differ")
    return float(np.real(np.trace(rho_dot @ hamiltonian)))


def entropy_production_rate_flux(state, rho_dot, hamiltonian, beta):
    """sigma_dot as entropy flux minus beta times heat flux."""
    s_dot = entropy_flux(state, rho_dot)
    q_dot = heat_flux(rho_dot, hamiltonian)
    return s_dot - (beta or 0.0) * q_dot


def entropy_production_rate_rates(W):
    """sigma_dot as the relative entropy of forward vs reverse fluxes (primed sum)."""
    mask = W.primed_mask()
    fwd = np.ascontiguousarray(W.forward_flux()[mask])
    rev = np.ascontiguousarray(W.reverse_flux()[mask])
    return float(kernels.relative_entropy(fwd, rev))


def entropy_production_paths(state, rho_dot, hamiltonian, beta, W):
    """(rate-matrix form, flux form) of sigma_dot, unclamped."""
    return (
        entropy_production_rate_rates(W),
        entropy_production_rate_flux(state, rho_dot, hamiltonian, beta),
    )


def entropy_production_rate(state, rho_dot, hamiltonian, beta, W):
    """Entropy production rate from the rate matrix, cross-checked by the flux form.

    Returns ``math.inf`` when a forward flux has no reverse partner. Raises
    ConsistencyError if the two routes disagree by more than 1e-6 or the
    result is negative beyond round-off.
    """
    return reconcile_sigma(*entropy_production_paths(state, rho_dot, hamiltonian, beta, W))


def reconcile_sigma(primary, alt):
    """Validate the two sigma_dot routes against each other and clamp round-off."""
    if math.isfinite(primary) and math.isfinite(alt) and abs(primary - alt) > DUAL_ROUTE_TOL:
        raise ConsistencyError(
            f"entropy production routes disagree: rate form {primary:.12g}, flux form {alt:.12g}"
        )
    if primary < -NEG_SIGMA_TOL:
        raise ConsistencyError(f"negative entropy production {primary:.3e}")
    return max(primary, 0.0)


def log_mean(a, b):
    """(a - b) / ln(a / b), with f(a, a) = a and f(a, 0) = 0."""
    a = float(a)
    b = float(b)
    if a < 0 or b < 0 or math.isnan(a) or math.isnan(b):
        raise InputError(f"log_mean needs non-negative arguments, got ({a}, {b})")
    return float(kernels.log_mean_array(np.array([a]), np.array([b]))[0])


def activity(W):
    mask = W.primed_mask()
    return 0.5 * float(W.forward_flux()[mask].sum() + W.reverse_flux()[mask].sum())


def _pair_log_means(W):
    return kernels.log_mean_array(W.forward_flux(), W.reverse_flux())


def mobility(W, variant="M", observable=None):
    """Sum of logarithmic means of forward/reverse fluxes.

    ``"M"`` uses the primed index set, ``"M_prime"`` only m != n, and
    ``"M_X"`` weights each m != n term by 4 |<m|X|m>|^2 for ``observable`` X.
    """
    lm = _pair_log_means(W)
    if variant == "M":
        return float(lm[W.primed_mask()].sum())
    if variant == "M_prime":
        return float(lm[W.offdiag_mask()].sum())
    if variant == "M_X":
        if observable is None:
            raise InputError("mobility variant M_X needs an observable")
        if W.eigenvectors is None:
            raise BasisError("rate matrix carries no eigenbasis to express X in")
        x = np.asarray(observable)
        if x.shape != (W.dim, W.dim):
            raise DimensionError(f"observable shape {x.shape} vs rate-matrix dimension {W.dim}")
        v = W.eigenvectors
        xdiag2 = np.abs(np.einsum("im,ij,jm->m", v.conj(), x, v)) ** 2
        weighted = 4.0 * xdiag2[None, :, None] * lm
        return float(weighted[W.offdiag_mask()].sum())
    raise InputError(f"unknown mobility variant {variant!r}")
