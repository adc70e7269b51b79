"""Dense Hermitian linear algebra on small matrices.

Hermitian operators are plain ``complex128`` numpy arrays that went through
:func:`hermitian`. Density matrices additionally carry their eigendecomposition
in a :class:`SpectralState`, the basis every rate-matrix quantity lives in.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, HermiticityError, InputError, InvalidStateError

HERMITIAN_REJECT_TOL = 1e-8
SIGN_ZERO_TOL = 1e-12
EIG_NEG_TOL = 1e-10
TRACE_TOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
# basis order is (excited, ground) so that sigma_z/2 = diag(+1/2, -1/2)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=np.complex128)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()


def _square(a, name):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    return a.astype(np.complex128, copy=True)


def hermitian(a, name="operator"):
    """Return ``(a + a^dagger)/2`` after checking the anti-Hermitian part is tiny.

    Raises HermiticityError if the largest entry of ``(a - a^dagger)/2``
    exceeds 1e-8.
    """
    a = _square(a, name)
    residual = np.max(np.abs(a - a.conj().T)) / 2 if a.size else 0.0
    if residual > HERMITIAN_REJECT_TOL:
        raise HermiticityError(f"{name} is not Hermitian (anti-Hermitian residual {residual:.3e})")
    return 0.5 * (a + a.conj().T)


def check_same_dim(*ops):
    dims = {np.shape(op) for op in ops}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")


def spectral_decompose(op):
    """Eigenvalues in descending order with matching orthonormal eigenvectors (columns).

    Ties keep the order returned by LAPACK (stable sort), so repeated calls on
    the same matrix give the same basis.
    """
    op = hermitian(op)
    w, v = np.linalg.eigh(op)
    order = np.argsort(-w, kind="stable")
    return w[order], np.ascontiguousarray(v[:, order])


def reconstruct(eigenvalues, eigenvectors):
    return (eigenvectors * eigenvalues) @ eigenvectors.conj().T


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Density matrix with cached eigendata.

    ``basis_key`` is set when the eigenbasis inside degenerate blocks has been
    adapted to a particular Lindblad model (see
    ``dynamics.align_basis``); ``None`` means the raw eigensolver basis.
    """

    rho: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis_key: Optional[int] = None

    @property
    def dim(self):
        return self.rho.shape[0]

    def in_basis(self, op):
        """Matrix elements <m|op|n> in the eigenbasis."""
        v = self.eigenvectors
        return v.conj().T @ op @ v

    def from_basis(self, mat):
        v = self.eigenvectors
        return v @ mat @ v.conj().T

    def degenerate_blocks(self, tol=1e-10):
        """Index ranges [start, stop) of runs of equal eigenvalues."""
        p = self.eigenvalues
        blocks = []
        start = 0
        for i in range(1, len(p) + 1):
            if i == len(p) or abs(p[i] - p[i - 1]) >= tol:
                blocks.append((start, i))
                start = i
        return blocks

    def has_degeneracy(self, tol=1e-10):
        return any(stop - start > 1 for start, stop in self.degenerate_blocks(tol))


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def spectral_state(rho, name="rho", neg_tol=EIG_NEG_TOL):
    """Validate a density matrix and cache its spectral decomposition.

    Eigenvalues in ``[-neg_tol, 0)`` are clipped to zero.
    """
    rho = hermitian(rho, name)
    p, v = spectral_decompose(rho)
    if p[-1] < -neg_tol:
        raise InvalidStateError(f"{name} has negative eigenvalue {p[-1]:.3e}")
    total = float(np.sum(p))
    if abs(total - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"{name} has trace {total:.12g}, expected 1")
    p = np.clip(p, 0.0, None)
    _freeze(rho, p, v)
    return SpectralState(rho, p, v)


def with_basis(state, eigenvectors, basis_key):
    """Same state, different (still valid) eigenbasis."""
    v = np.ascontiguousarray(eigenvectors, dtype=np.complex128)
    _freeze(v)
    return SpectralState(state.rho, state.eigenvalues, v, basis_key)


def trace_norm(op):
    """Half the sum of absolute eigenvalues."""
    w = np.linalg.eigvalsh(hermitian(op))
    return 0.5 * float(np.sum(np.abs(w)))


def expectation(state, obs):
    check_same_dim(state.rho, obs)
    return float(np.real(np.trace(state.rho @ obs)))


def variance(state, obs):
    """Tr[rho A^2] - Tr[rho A]^2, with round-off below zero clamped."""
    check_same_dim(state.rho, obs)
    # centring first keeps the result shift-invariant in floating point
    mean = expectation(state, obs)
    centred = obs - mean * np.eye(obs.shape[0])
    v = float(np.real(np.trace(state.rho @ centred @ centred)))
    return max(v, 0.0)


def sign_operator(op):
    """sgn applied to the spectrum; eigenvalues with |x| < 1e-12 map to 0."""
    w, v = np.linalg.eigh(hermitian(op))
    s = np.where(np.abs(w) < SIGN_ZERO_TOL, 0.0, np.sign(w))
    return (v * s) @ v.conj().T


def commutator(a, b):
    check_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b):
    check_same_dim(a, b)
    return a @ b + b @ a


def gibbs_state(hamiltonian, beta):
    w, v = np.linalg.eigh(hermitian(hamiltonian))
    x = -beta * (w - w.min())
    weights = np.exp(x)
    weights /= weights.sum()
    return (v * weights) @ v.conj().T


def purity(state):
    return float(np.sum(state.eigenvalues**2))


def is_pure(state, tol=1e-12):
    return abs(purity(state) - 1.0) < tol
