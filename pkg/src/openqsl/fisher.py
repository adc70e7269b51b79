"""Monotone-metric Fisher information and related fluctuation measures.

All quantities are evaluated in the eigenbasis of rho through the pair weights

    c_ij = p_j f(p_i / p_j) = p_i f(p_j / p_i)

computed with the larger population in front so that zero populations only
ever reach f through f(0). Pairs with p_i = p_j = 0 have weight 0.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import optimize

from . import kernels
from .errors import DimensionError, InputError, SupportError
from .operators import check_same_dim, commutator, expectation, hermitian, is_pure, variance

SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class MonotoneFunction:
    name: str
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class FisherResult:
    value: float
    metric: str
    generator_kind: str  # "state-family" or "unitary-asymmetry"

    def __float__(self):
        return float(self.value)


_GRID = 10.0 ** np.arange(-6, 7)


def validate_metric(mf):
    """Check f(1) = 1, f(x) = x f(1/x) and monotonicity on a log grid.

    Operator monotonicity itself is assumed, not verified.
    """
    one = float(mf(np.array([1.0]))[0])
    if abs(one - 1.0) > 1e-12:
        raise InputError(f"metric {mf.name!r}: f(1) = {one!r}, expected 1")
    fx = mf(_GRID)
    mirrored = _GRID * mf(1.0 / _GRID)
    if np.any(~np.isfinite(fx)) or np.any(fx <= 0):
        raise InputError(f"metric {mf.name!r} must be positive on (0, inf)")
    if np.any(np.abs(fx - mirrored) > 1e-10 * np.maximum(1.0, np.abs(fx))):
        raise InputError(f"metric {mf.name!r} violates f(x) = x f(1/x)")
    if np.any(np.diff(fx) < 0):
        raise InputError(f"metric {mf.name!r} is not monotone on the sample grid")


_REGISTRY: Dict[str, MonotoneFunction] = {}


def register_metric(name, func):
    mf = MonotoneFunction(name, func)
    validate_metric(mf)
    _REGISTRY[name] = mf
    return mf


def get_metric(name):
    if isinstance(name, MonotoneFunction):
        return name
    try:
        return _REGISTRY[name]
    except KeyError:
        raise InputError(f"unknown metric {name!r}; registered: {sorted(_REGISTRY)}") from None


def registered_metrics():
    return list(_REGISTRY.values())


SLD = register_metric("sld", lambda x: (1.0 + x) / 2.0)
register_metric("wigner-yanase", lambda x: ((1.0 + np.sqrt(x)) / 2.0) ** 2)
register_metric("bkm", lambda x: kernels.log_mean_array(x, np.ones_like(x)))
register_metric("harmonic", lambda x: 2.0 * x / (1.0 + x))


def pair_weights(f, p):
    """Matrix c_ij = p_j f(p_i/p_j) in its symmetric, zero-safe form."""
    f = get_metric(f)
    hi = np.maximum(p[:, None], p[None, :])
    lo = np.minimum(p[:, None], p[None, :])
    live = hi > 0
    ratio = np.where(live, lo / np.where(live, hi, 1.0), 1.0)
    return np.where(live, hi * f(ratio), 0.0)


def f_inner_product(f, state, a, b):
    """<A, B>^f = Tr[A J_f(B)] = sum_ij c_ij conj(A_ij) B_ij in the eigenbasis."""
    check_same_dim(state.rho, a, b)
    c = pair_weights(f, state.eigenvalues)
    return complex(np.sum(c * np.conj(state.in_basis(a)) * state.in_basis(b)))


def f_variance(f, state, a):
    centred = a - expectation(state, a) * np.eye(state.dim)
    return max(float(np.real(f_inner_product(f, state, centred, centred))), 0.0)


def apply_j(f, state, op):
    """Superoperator J_f(op) = f(L R^-1) R applied to op."""
    c = pair_weights(f, state.eigenvalues)
    return state.from_basis(c * state.in_basis(op))


def _inverse_weights(f, state, rd_t):
    c = pair_weights(f, state.eigenvalues)
    dead = c <= 0
    scale = max(1.0, float(np.max(np.abs(rd_t)))) if rd_t.size else 1.0
    leaking = dead & (np.abs(rd_t) > SUPPORT_TOL * scale)
    if np.any(leaking):
        i, j = np.argwhere(leaking)[0]
        raise SupportError(
            f"tangent element <{i}|rho_dot|{j}> = {rd_t[i, j]:.3e} has no finite "
            f"logarithmic derivative (pair weight 0)"
        )
    return np.where(dead, 0.0, 1.0 / np.where(dead, 1.0, c))


def log_derivative(f, state, rho_dot):
    """Hermitian L with J_f(L) = rho_dot on the support of rho."""
    check_same_dim(state.rho, rho_dot)
    rd_t = state.in_basis(rho_dot)
    inv = _inverse_weights(f, state, rd_t)
    return hermitian(state.from_basis(inv * rd_t), "logarithmic derivative")


def fisher_information(f, state, rho_dot):
    """J^f = Tr[rho_dot J_f^{-1}(rho_dot)] for the family through rho with tangent rho_dot."""
    f = get_metric(f)
    check_same_dim(state.rho, rho_dot)
    rd_t = state.in_basis(rho_dot)
    inv = _inverse_weights(f, state, rd_t)
    value = float(np.sum(inv * np.abs(rd_t) ** 2))
    return FisherResult(max(value, 0.0), f.name, "state-family")


def asymmetry_fisher(f, state, hamiltonian):
    """F^f_rho(H) = sum_ij (p_i - p_j)^2 / c_ij |<i|H|j>|^2.

    For the SLD metric this is the usual 2 (p_i - p_j)^2 / (p_i + p_j) sum.
    """
    f = get_metric(f)
    check_same_dim(state.rho, hamiltonian)
    p = state.eigenvalues
    h2 = np.ascontiguousarray(np.abs(state.in_basis(hamiltonian)) ** 2)
    if f.name == "sld":
        value = float(kernels.sld_fisher_sum(np.ascontiguousarray(p), h2))
    else:
        c = pair_weights(f, p)
        num = (p[:, None] - p[None, :]) ** 2 * h2
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(num > 0, num / c, 0.0)
        value = float(np.sum(terms))
    return FisherResult(max(value, 0.0), f.name, "unitary-asymmetry")


def quantum_fluctuation(state, hamiltonian):
    """Q = F_SLD / 4."""
    return asymmetry_fisher(SLD, state, hamiltonian).value / 4.0


def variance_split(state, hamiltonian):
    """(Q, C): quantum part F_SLD/4 and classical remainder of the variance."""
    v = variance(state, hamiltonian)
    q = quantum_fluctuation(state, hamiltonian)
    q = max(q, 0.0)
    c = max(v - q, 0.0)
    return q, c


def cramer_rao_check(f, state, generator, observable):
    """(|d<A>/dt|, sqrt(J^f) sqrt(V^f(A))) for rho_t = exp(-iHt) rho exp(iHt) at t = 0."""
    check_same_dim(state.rho, generator, observable)
    rho_dot = -1j * commutator(generator, state.rho)
    lhs = abs(float(np.real(np.trace(observable @ rho_dot))))
    j = fisher_information(f, state, rho_dot).value
    rhs = math.sqrt(j) * math.sqrt(f_variance(f, state, observable))
    return lhs, rhs


# --------------------------------------------------------------------------
# minimal ensemble variance
# --------------------------------------------------------------------------


@dataclass
class EnsembleResult:
    value: float
    converged: bool
    weights: np.ndarray
    vectors: np.ndarray  # rows are normalised ensemble members
    evaluations: List[float] = field(default_factory=list)


def _isometry(z):
    u, _, vh = np.linalg.svd(z, full_matrices=False)
    return u @ vh


def _ensemble_objective(u, sqrt_p, h_t, second_moment):
    c = u * sqrt_p[None, :]  # unnormalised members in the eigenbasis
    q = np.sum(np.abs(c) ** 2, axis=1)
    hc = np.einsum("ij,kj->ki", h_t, c)
    mean = np.real(np.einsum("ki,ki->k", c.conj(), hc))
    live = q > 1e-300
    return second_moment - float(np.sum(mean[live] ** 2 / q[live]))


def _agree(results, rtol=1e-7):
    """True when the two lowest restart values coincide to ``rtol``."""
    if len(results) < 2:
        return False
    a, b = sorted(val for val, _ in results)[:2]
    return abs(b - a) <= rtol * max(abs(a), 1e-9)


def min_ensemble_variance(state, hamiltonian, budget=400, restarts=8, seed=0, members=None):
    """Minimise the average pure-state variance over ensembles realising rho.

    Ensembles are |phi_i> ~ sum_j U_ij sqrt(p_j) |j> for isometries U with
    ``members`` rows (default rank^2). Each restart runs BFGS for at most
    ``budget`` iterations; the first restart starts from the eigen-ensemble.
    Restarts stop early, and ``converged`` is set, once the two best values
    agree to 1e-7 relative.
    """
    if state.dim > 6:
        raise InputError("min_ensemble_variance is a desk-scale oracle (dim <= 6)")
    if budget < 1 or restarts < 1:
        raise InputError("budget and restarts must be >= 1")
    check_same_dim(state.rho, hamiltonian)
    keep = state.eigenvalues > 1e-14
    p = state.eigenvalues[keep]
    p = p / p.sum()
    vecs = state.eigenvectors[:, keep]
    h_t = vecs.conj().T @ hamiltonian @ vecs
    sqrt_p = np.sqrt(p)
    r = len(p)
    k = members or r * r
    if k < r:
        raise InputError(f"need at least rank={r} ensemble members")
    # shift H so the objective is well-scaled; variances are shift-invariant
    shift = float(np.real(np.sum(p * np.diag(h_t))))
    h_t = h_t - shift * np.eye(r)
    # <H^2> needs H off the support too, so take it from the full operator
    h_full = hamiltonian - shift * np.eye(state.dim)
    h2_t = vecs.conj().T @ h_full @ h_full @ vecs
    second_moment = float(np.real(np.sum(p * np.diag(h2_t))))

    evaluations = []

    def objective(x):
        z = (x[: k * r] + 1j * x[k * r :]).reshape(k, r)
        val = _ensemble_objective(_isometry(z), sqrt_p, h_t, second_moment)
        evaluations.append(val)
        return val

    rng = np.random.default_rng(seed)
    results = []
    for attempt in range(restarts):
        if attempt == 0:
            z0 = np.zeros((k, r), dtype=np.complex128)
            z0[:r, :r] = np.eye(r)
            z0 += 1e-3 * (rng.standard_normal((k, r)) + 1j * rng.standard_normal((k, r)))
        else:
            z0 = rng.standard_normal((k, r)) + 1j * rng.standard_normal((k, r))
        x0 = np.concatenate([z0.real.ravel(), z0.imag.ravel()])
        if r == 1:
            res_x, res_fun = x0, objective(x0)
        else:
            res = optimize.minimize(
                objective, x0, method="BFGS", options={"maxiter": budget, "gtol": 1e-10}
            )
            res_x, res_fun = res.x, float(res.fun)
        results.append((res_fun, res_x))
        if r == 1 or _agree(results):
            break

    results.sort(key=lambda item: item[0])
    best_val, best_x = results[0]
    converged = r == 1 or _agree(results)
    z = (best_x[: k * r] + 1j * best_x[k * r :]).reshape(k, r)
    c = _isometry(z) * sqrt_p[None, :]
    weights = np.sum(np.abs(c) ** 2, axis=1)
    live = weights > 1e-300
    members_vecs = (c[live] / np.sqrt(weights[live])[:, None]) @ vecs.T
    return EnsembleResult(max(best_val, 0.0), converged, weights[live], members_vecs, evaluations)
