"""Numeric inner loops, each in a numba and a numpy flavour.

Every public name here resolves to the numba loop version when
``_accel.USE_NUMBA`` is set, otherwise to the numpy version. Both flavours are
importable under their private names so tests and the benchmark can compare
them directly.

The master-equation kernels take the generator in the form

    rho_dot = -i (K rho - rho K^dagger) + sum_k A_k rho A_k^dagger

with ``K = H - (i/2) sum_k A_k^dagger A_k`` and ``A_k = sqrt(gamma_k) L_k``.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_NEGATIVE = 2

TRACE_DRIFT_TOL = 1e-12
POSITIVITY_TOL = 1e-8


# --------------------------------------------------------------------------
# master equation right-hand side
# --------------------------------------------------------------------------


def _rhs_numpy(k_eff, amps, rho):
    out = -1j * (k_eff @ rho - rho @ k_eff.conj().T)
    if amps.shape[0]:
        out += np.einsum("kij,jl,kml->im", amps, rho, amps.conj())
    return out


@njit
def _rhs_loops(k_eff, amps, rho):
    d = rho.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            acc = 0j
            for m in range(d):
                acc += k_eff[i, m] * rho[m, j] - rho[i, m] * np.conj(k_eff[j, m])
            out[i, j] = -1j * acc
    tmp = np.empty((d, d), dtype=np.complex128)
    for k in range(amps.shape[0]):
        for i in range(d):
            for j in range(d):
                acc = 0j
                for m in range(d):
                    acc += amps[k, i, m] * rho[m, j]
                tmp[i, j] = acc
        for i in range(d):
            for j in range(d):
                acc = 0j
                for m in range(d):
                    acc += tmp[i, m] * np.conj(amps[k, j, m])
                out[i, j] += acc
    return out


# --------------------------------------------------------------------------
# fixed-step RK4
# --------------------------------------------------------------------------


def _rk4_numpy(k_eff, amps, rho0, dt, nsteps, stride):
    d = rho0.shape[0]
    samples = np.empty((nsteps // stride + 1, d, d), dtype=np.complex128)
    rho = rho0.astype(np.complex128).copy()
    samples[0] = rho
    renorms = 0
    for step in range(1, nsteps + 1):
        # blow-ups are reported through the status code, not warnings
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = _rhs_numpy(k_eff, amps, rho)
            k2 = _rhs_numpy(k_eff, amps, rho + 0.5 * dt * k1)
            k3 = _rhs_numpy(k_eff, amps, rho + 0.5 * dt * k2)
            k4 = _rhs_numpy(k_eff, amps, rho + dt * k3)
            rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if not np.isfinite(np.abs(rho).sum()):
            return samples, STATUS_NONFINITE, step, renorms
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_DRIFT_TOL:
            rho = rho / tr
            renorms += 1
        if np.linalg.eigvalsh(rho)[0] < -POSITIVITY_TOL:
            return samples, STATUS_NEGATIVE, step, renorms
        if step % stride == 0:
            samples[step // stride] = rho
    return samples, STATUS_OK, nsteps, renorms


@njit
def _rk4_loops(k_eff, amps, rho0, dt, nsteps, stride):
    d = rho0.shape[0]
    samples = np.empty((nsteps // stride + 1, d, d), dtype=np.complex128)
    rho = rho0.astype(np.complex128).copy()
    samples[0] = rho
    renorms = 0
    for step in range(1, nsteps + 1):
        k1 = _rhs_loops(k_eff, amps, rho)
        k2 = _rhs_loops(k_eff, amps, rho + 0.5 * dt * k1)
        k3 = _rhs_loops(k_eff, amps, rho + 0.5 * dt * k2)
        k4 = _rhs_loops(k_eff, amps, rho + dt * k3)
        new = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(d):
            for j in range(i, d):
                v = 0.5 * (new[i, j] + np.conj(new[j, i]))
                rho[i, j] = v
                rho[j, i] = np.conj(v)
        if not np.isfinite(np.abs(rho).sum()):
            return samples, STATUS_NONFINITE, step, renorms
        tr = 0.0
        for i in range(d):
            tr += rho[i, i].real
        if abs(tr - 1.0) > TRACE_DRIFT_TOL:
            rho = rho / tr
            renorms += 1
        if np.linalg.eigvalsh(rho)[0] < -POSITIVITY_TOL:
            return samples, STATUS_NEGATIVE, step, renorms
        if step % stride == 0:
            samples[step // stride] = rho
    return samples, STATUS_OK, nsteps, renorms


# --------------------------------------------------------------------------
# logarithmic mean
# --------------------------------------------------------------------------

_SERIES_CUTOFF = 1e-6


def _log_mean_numpy(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(a.shape)
    pos = (a > 0) & (b > 0)
    hi = np.where(pos, np.maximum(a, b), 1.0)
    lo = np.where(pos, np.minimum(a, b), 1.0)
    r = (hi - lo) / lo
    small = pos & (r < _SERIES_CUTOFF)
    big = pos & ~small
    with np.errstate(divide="ignore", invalid="ignore"):
        out[big] = (hi[big] - lo[big]) / np.log1p(r[big])
    rs = r[small]
    out[small] = lo[small] * (1.0 + rs / 2.0 - rs * rs / 12.0)
    return out


@njit
def _log_mean_scalar(a, b):
    if a <= 0.0 or b <= 0.0:
        return 0.0
    hi = max(a, b)
    lo = min(a, b)
    r = (hi - lo) / lo
    if r < _SERIES_CUTOFF:
        return lo * (1.0 + r / 2.0 - r * r / 12.0)
    return (hi - lo) / np.log1p(r)


@njit
def _log_mean_loops(a, b):
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        out[i] = _log_mean_scalar(a[i], b[i])
    return out


# --------------------------------------------------------------------------
# flux sums over forward / reverse probability currents
# --------------------------------------------------------------------------


def _relative_entropy_numpy(fwd, rev):
    live = fwd > 0
    if np.any(live & (rev <= 0)):
        return np.inf
    f = fwd[live]
    return float(np.sum(f * np.log(f / rev[live])))


@njit
def _relative_entropy_loops(fwd, rev):
    acc = 0.0
    for i in range(fwd.shape[0]):
        f = fwd[i]
        if f > 0.0:
            if rev[i] <= 0.0:
                return np.inf
            acc += f * np.log(f / rev[i])
    return acc


def _sld_fisher_numpy(p, h2):
    s = p[:, None] + p[None, :]
    diff2 = (p[:, None] - p[None, :]) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(s > 0, 2.0 * diff2 / np.where(s > 0, s, 1.0) * h2, 0.0)
    return float(terms.sum())


@njit
def _sld_fisher_loops(p, h2):
    d = p.shape[0]
    acc = 0.0
    for i in range(d):
        for j in range(d):
            s = p[i] + p[j]
            if s > 0.0:
                diff = p[i] - p[j]
                acc += 2.0 * diff * diff / s * h2[i, j]
    return acc


if USE_NUMBA:
    lindblad_rhs = _rhs_loops
    rk4_integrate = _rk4_loops
    _log_mean_flat = _log_mean_loops
    relative_entropy = _relative_entropy_loops
    sld_fisher_sum = _sld_fisher_loops
else:
    lindblad_rhs = _rhs_numpy
    rk4_integrate = _rk4_numpy
    _log_mean_flat = _log_mean_numpy
    relative_entropy = _relative_entropy_numpy
    sld_fisher_sum = _sld_fisher_numpy


def log_mean_array(a, b):
    """Elementwise logarithmic mean of two non-negative arrays of equal shape."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return _log_mean_flat(a.ravel(), b.ravel()).reshape(a.shape)


def backend():
    return "numba" if USE_NUMBA else "numpy"
