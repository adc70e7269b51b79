"""Detailed-balance GKSL generators and their integration.

A model is built once from a Hamiltonian, raw jump operators and bath rates.
Each raw jump is split into Bohr-frequency components

    L(omega, alpha) = sum_{eps_m - eps_n = omega} P_n L_alpha P_m

and the rates are checked against gamma(-omega) = gamma(omega) exp(-beta omega).
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import (
    BohrFrequencyError,
    DegeneracyError,
    DetailedBalanceError,
    DimensionError,
    InputError,
    IntegrationError,
    JumpStructureError,
    PositivityLossError,
)
from .operators import (
    SpectralState,
    check_same_dim,
    commutator,
    hermitian,
    spectral_state,
    with_basis,
)

logger = logging.getLogger(__name__)

BOHR_TOL = 1e-9
INVOLUTION_TOL = 1e-10
DETAILED_BALANCE_RTOL = 1e-9
DEGENERATE_P_TOL = 1e-10
DEGENERATE_D_TOL = 1e-8
TRAJECTORY_NEG_TOL = 1e-8

_model_ids = itertools.count(1)


@dataclass(frozen=True, eq=False)
class ResolvedJump:
    omega: float
    label: str
    op: np.ndarray
    rate: float


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian: np.ndarray
    raw_jumps: Tuple[Tuple[str, np.ndarray], ...]
    rates: Mapping[Tuple[str, float], float]
    beta: Optional[float]
    resolved_jumps: Tuple[ResolvedJump, ...]
    # index of the (-omega, alpha) partner of every resolved jump
    reverse: Tuple[int, ...]
    key: int = field(default_factory=lambda: next(_model_ids))

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def active_jumps(self):
        return [j for j in self.resolved_jumps if j.rate > 0]

    def generator_arrays(self):
        """(K_eff, K_diss, A) for the kernels; A stacks sqrt(gamma) L over active jumps."""
        cached = self.__dict__.get("_gen")
        if cached is None:
            d = self.dim
            active = self.active_jumps
            amps = np.zeros((len(active), d, d), dtype=np.complex128)
            g = np.zeros((d, d), dtype=np.complex128)
            for k, jump in enumerate(active):
                amps[k] = math.sqrt(jump.rate) * jump.op
                g += jump.rate * (jump.op.conj().T @ jump.op)
            k_diss = -0.5j * g
            k_eff = self.hamiltonian + k_diss
            cached = (np.ascontiguousarray(k_eff), np.ascontiguousarray(k_diss), amps)
            object.__setattr__(self, "_gen", cached)
        return cached


# --------------------------------------------------------------------------
# Bohr-frequency decomposition
# --------------------------------------------------------------------------


def _cluster(values, tol):
    """Group sorted values whose consecutive gaps are below tol; returns (labels, centres)."""
    order = np.argsort(values, kind="stable")
    labels = np.empty(len(values), dtype=int)
    centres = []
    members = []
    for idx in order:
        if members and values[idx] - values[members[-1]] >= tol:
            centres.append(float(np.mean(values[members])))
            members = []
        if not members:
            current = len(centres)
        members.append(idx)
        labels[idx] = current
    if members:
        centres.append(float(np.mean(values[members])))
    return labels, np.array(centres)


def energy_eigenspaces(hamiltonian, tol=BOHR_TOL):
    """List of (energy, projector) pairs, energies ascending."""
    h = hermitian(hamiltonian, "hamiltonian")
    w, v = np.linalg.eigh(h)
    labels, centres = _cluster(w, tol)
    spaces = []
    for c, energy in enumerate(centres):
        cols = v[:, labels == c]
        spaces.append((energy, cols @ cols.conj().T))
    return spaces


def bohr_frequencies(hamiltonian, tol=BOHR_TOL):
    energies = np.array([e for e, _ in energy_eigenspaces(hamiltonian, tol)])
    gaps = (energies[:, None] - energies[None, :]).ravel()
    _, centres = _cluster(gaps, tol)
    # snap the zero cluster to exactly 0
    centres[np.argmin(np.abs(centres))] = 0.0
    return centres


def bohr_components(hamiltonian, jump, tol=BOHR_TOL):
    """Split ``jump`` into {omega: sum P_n L P_m} with omega = eps_m - eps_n.

    Components with negligible norm are dropped.
    """
    spaces = energy_eigenspaces(hamiltonian, tol)
    jump = np.asarray(jump, dtype=np.complex128)
    check_same_dim(hamiltonian, jump)
    energies = np.array([e for e, _ in spaces])
    gaps = energies[None, :] - energies[:, None]  # [n, m] -> eps_m - eps_n
    labels, centres = _cluster(gaps.ravel(), tol)
    labels = labels.reshape(gaps.shape)
    zero = int(np.argmin(np.abs(centres)))
    centres[zero] = 0.0
    scale = max(1.0, float(np.max(np.abs(jump))))
    comps = {}
    for c, omega in enumerate(centres):
        acc = np.zeros_like(jump)
        for n, m in zip(*np.nonzero(labels == c)):
            acc += spaces[n][1] @ jump @ spaces[m][1]
        if np.max(np.abs(acc)) > 1e-12 * scale:
            comps[float(omega)] = acc
    return comps


def _lookup_rate(rates, label, omega, tol):
    for (lab, w), gamma in rates.items():
        if lab == label and abs(w - omega) <= tol:
            return float(gamma)
    return 0.0


def _find_omega(keys, omega, tol):
    for w in keys:
        if abs(w - omega) <= tol:
            return w
    return None


def build_jump_decomposition(hamiltonian, raw_jumps, rates, beta, tol=BOHR_TOL):
    """Resolve raw jumps by Bohr frequency and validate detailed balance.

    ``raw_jumps`` is a mapping or sequence of ``(label, matrix)``; ``rates``
    maps ``(label, omega)`` to gamma >= 0. Missing rates count as zero. A
    component at omega != 0 whose partner at -omega vanishes is completed by
    its adjoint, so a bare lowering operator yields both emission and
    absorption channels.
    """
    h = hermitian(hamiltonian, "hamiltonian")
    if isinstance(raw_jumps, Mapping):
        raw_jumps = list(raw_jumps.items())
    raw = tuple((str(label), np.array(op, dtype=np.complex128)) for label, op in raw_jumps)
    labels = [label for label, _ in raw]
    if len(set(labels)) != len(labels):
        raise InputError(f"duplicate jump labels: {labels}")
    for label, op in raw:
        if op.shape != h.shape:
            raise DimensionError(f"jump {label!r} has shape {op.shape}, hamiltonian {h.shape}")
        if not np.all(np.isfinite(op)):
            raise InputError(f"jump {label!r} has non-finite entries")

    rates = {(str(label), float(w)): float(g) for (label, w), g in dict(rates).items()}
    freqs = bohr_frequencies(h, tol)
    for (label, w), gamma in rates.items():
        if not math.isfinite(gamma) or gamma < 0:
            raise InputError(f"rate for ({label!r}, {w}) must be finite and >= 0, got {gamma}")
        if label not in labels:
            raise InputError(f"rate given for unknown jump {label!r}")
        if not np.any(np.abs(freqs - w) <= tol):
            raise BohrFrequencyError(
                f"rate key omega={w} for jump {label!r} matches no Bohr frequency of H"
            )
    if beta is not None and (math.isnan(beta) or beta < 0):
        raise InputError(f"beta must be >= 0, got {beta}")

    resolved = []
    for label, op in raw:
        comps = bohr_components(h, op, tol)
        for w in list(comps):
            if w != 0.0 and _find_omega(comps, -w, tol) is None:
                comps[-w] = comps[w].conj().T.copy()
        for w, comp in comps.items():
            if w <= 0.0:
                continue
            partner = comps[_find_omega(comps, -w, tol)]
            err = float(np.max(np.abs(comp.conj().T - partner)))
            if err > INVOLUTION_TOL:
                raise JumpStructureError(
                    f"jump {label!r}: L(omega)^dagger != L(-omega) at omega={w:.12g} "
                    f"(residual {err:.3e}); use a Hermitian coupling or a one-sided ladder operator"
                )
            g_fwd = _lookup_rate(rates, label, w, tol)
            g_rev = _lookup_rate(rates, label, -w, tol)
            if beta is None:
                if g_fwd or g_rev:
                    raise DetailedBalanceError(label, w, max(g_fwd, g_rev))
                continue
            target = g_fwd * math.exp(-beta * w)
            residual = abs(g_rev - target)
            if residual > DETAILED_BALANCE_RTOL * max(g_rev, target, 1e-300):
                raise DetailedBalanceError(label, w, residual)
        for w in sorted(comps, reverse=True):
            comp = comps[w]
            comp.setflags(write=False)
            resolved.append(ResolvedJump(w, label, comp, _lookup_rate(rates, label, w, tol)))

    reverse = []
    for jump in resolved:
        for j, other in enumerate(resolved):
            if other.label == jump.label and abs(other.omega + jump.omega) <= tol:
                reverse.append(j)
                break
    h.setflags(write=False)
    return LindbladModel(h, raw, rates, beta, tuple(resolved), tuple(reverse))


# --------------------------------------------------------------------------
# generator pieces
# --------------------------------------------------------------------------


def _as_rho(model, state):
    rho = state.rho if isinstance(state, SpectralState) else np.asarray(state, dtype=np.complex128)
    if rho.shape != model.hamiltonian.shape:
        raise DimensionError(f"state shape {rho.shape} vs model dimension {model.dim}")
    return np.ascontiguousarray(rho, dtype=np.complex128)


def _herm(a):
    return 0.5 * (a + a.conj().T)


def dissipator(model, state):
    """sum gamma (L rho L^dagger - {L^dagger L, rho}/2) over resolved jumps."""
    rho = _as_rho(model, state)
    _, k_diss, amps = model.generator_arrays()
    return _herm(kernels.lindblad_rhs(k_diss, amps, rho))


def rhs(model, state):
    """rho_dot = -i[H, rho] + D[rho]."""
    rho = _as_rho(model, state)
    k_eff, _, amps = model.generator_arrays()
    return _herm(kernels.lindblad_rhs(k_eff, amps, rho))


def align_basis(model, state):
    """Eigenbasis of ``state`` rotated inside degenerate blocks to diagonalise D[rho].

    Outside degenerate blocks the basis is unique up to phases, which no
    downstream quantity depends on. The returned state is tagged with the
    model key so rate matrices can verify they share this basis.
    """
    if state.basis_key == model.key:
        return state
    v = np.array(state.eigenvectors)
    if state.has_degeneracy(DEGENERATE_P_TOL):
        d_t = state.in_basis(dissipator(model, state))
        for start, stop in state.degenerate_blocks(DEGENERATE_P_TOL):
            if stop - start < 2:
                continue
            _, u = np.linalg.eigh(_herm(d_t[start:stop, start:stop]))
            v[:, start:stop] = v[:, start:stop] @ u
    return with_basis(state, v, model.key)


def dissipator_split(model, state):
    """(D_d, D_nd): diagonal and off-diagonal parts of D[rho] in rho's eigenbasis."""
    state = align_basis(model, state)
    d = dissipator(model, state)
    d_t = state.in_basis(d)
    d_diag = _herm(state.from_basis(np.diag(np.diag(d_t))))
    return d_diag, d - d_diag


def effective_hamiltonian(model, state):
    """Hermitian H_D with -i[H_D, rho] = D_nd[rho]."""
    state = align_basis(model, state)
    d_t = state.in_basis(dissipator(model, state))
    p = state.eigenvalues
    gap = p[None, :] - p[:, None]  # [m, n] -> p_n - p_m
    degenerate = np.abs(gap) < DEGENERATE_P_TOL
    np.fill_diagonal(degenerate, False)
    offending = degenerate & (np.abs(d_t) > DEGENERATE_D_TOL)
    if np.any(offending):
        m, n = np.argwhere(offending)[0]
        raise DegeneracyError(
            f"D[rho] couples equal populations p={p[m]:.12g} at ({m}, {n}) with "
            f"|<m|D|n>|={abs(d_t[m, n]):.3e}; no commutator can produce it"
        )
    safe = np.where(np.abs(gap) < DEGENERATE_P_TOL, 1.0, gap)
    h_t = np.where(np.abs(gap) < DEGENERATE_P_TOL, 0.0, 1j * d_t / safe)
    return _herm(state.from_basis(h_t))


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------


@dataclass
class TrajectoryPoint:
    time: float
    state: SpectralState
    rho_dot: np.ndarray
    report: Optional[object] = None


@dataclass
class Trajectory:
    times: np.ndarray
    rhos: np.ndarray
    dt: float
    t_span: Tuple[float, float]
    model: LindbladModel
    renormalizations: int = 0

    def __len__(self):
        return len(self.times)

    def point(self, i):
        state = spectral_state(self.rhos[i], neg_tol=TRAJECTORY_NEG_TOL)
        return TrajectoryPoint(float(self.times[i]), state, rhs(self.model, state))

    def points(self):
        for i in range(len(self.times)):
            yield self.point(i)


def step_count(t_span, dt):
    t0, t1 = (float(t) for t in t_span)
    if not dt > 0 or not math.isfinite(dt):
        raise InputError(f"dt must be positive, got {dt}")
    if not t1 > t0:
        raise InputError(f"empty time span {t_span}")
    n = int(round((t1 - t0) / dt))
    if n < 1 or abs(n * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise InputError(f"time span {t_span} is not a whole number of steps of {dt}")
    return n


def evolve(model, rho0, t_span, dt=1e-3, stride=1):
    """Fixed-step RK4 integration of the master equation.

    Stores every ``stride``-th step (the default keeps all of them). After each
    step rho is re-symmetrised and its trace renormalised if it drifted by more
    than 1e-12.
    """
    if isinstance(rho0, SpectralState):
        rho0 = rho0.rho
    rho0 = spectral_state(rho0, "rho0").rho
    _as_rho(model, rho0)
    nsteps = step_count(t_span, dt)
    stride = int(stride)
    if stride < 1:
        raise InputError("stride must be >= 1")
    k_eff, _, amps = model.generator_arrays()
    samples, status, step, renorms = kernels.rk4_integrate(
        k_eff, amps, np.ascontiguousarray(rho0), float(dt), nsteps, stride
    )
    t0 = float(t_span[0])
    if status == kernels.STATUS_NONFINITE:
        raise IntegrationError(f"non-finite state at t={t0 + step * dt:.6g}")
    if status == kernels.STATUS_NEGATIVE:
        raise PositivityLossError(
            f"density matrix lost positivity at t={t0 + step * dt:.6g}; reduce dt (now {dt})"
        )
    if renorms:
        logger.info("trace renormalised on %d of %d steps", renorms, nsteps)
    times = t0 + dt * stride * np.arange(samples.shape[0])
    return Trajectory(times, samples, float(dt), (t0, float(t_span[1])), model, int(renorms))
