"""Entropy-based speed limits evaluated at a single state.

The four state-speed bounds, loosest first:

    fss   = sqrt V(H) + sqrt V(H_D) + sqrt(sigma_dot A / 2)
    vs    = sqrt V(H) + sqrt V(H_D) + sqrt(sigma_dot M / 2)
    qfi   = sqrt F(H + H_D) / 2    + sqrt(sigma_dot M' / 2)
    X'    = sqrt F(H + H_D) sqrt V(X') + sqrt(sigma_dot M_X' / 2),  X' = sgn(rho_dot) / 2

with F the SLD Fisher information and hbar = 1. All of them bound the
trace-norm speed ||rho_dot||_Tr.
"""
import math
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple

import numpy as np

from . import thermo
from .dynamics import align_basis, effective_hamiltonian, rhs
from .errors import OpenQSLError
from .fisher import SLD, asymmetry_fisher
from .operators import purity, sign_operator, trace_norm, variance

CHAIN_SLACK = 1e-9


class PointEvaluationError(OpenQSLError):
    def __init__(self, time, cause):
        self.time = time
        super().__init__(f"at t={time:.6g}: {type(cause).__name__}: {cause}")


def _entropy_term(sigma_dot, mobility):
    if math.isinf(sigma_dot):
        return math.inf
    return math.sqrt(max(sigma_dot, 0.0) * max(mobility, 0.0) / 2.0)


def fss_bound(state, hamiltonian, h_d, sigma_dot, activity):
    return (
        math.sqrt(variance(state, hamiltonian))
        + math.sqrt(variance(state, h_d))
        + _entropy_term(sigma_dot, activity)
    )


def vs_bound(state, hamiltonian, h_d, sigma_dot, mobility):
    return (
        math.sqrt(variance(state, hamiltonian))
        + math.sqrt(variance(state, h_d))
        + _entropy_term(sigma_dot, mobility)
    )


class QfiBound(NamedTuple):
    total: float
    fisher_term: float
    entropy_term: float


def qfi_bound(state, hamiltonian, h_d, sigma_dot, mobility_prime):
    fisher_term = 0.5 * math.sqrt(asymmetry_fisher(SLD, state, hamiltonian + h_d).value)
    entropy_term = _entropy_term(sigma_dot, mobility_prime)
    return QfiBound(fisher_term + entropy_term, fisher_term, entropy_term)


def current_bound(state, rho_dot, hamiltonian, h_d, observable, sigma_dot, W):
    """(bound, |Tr[X rho_dot]|) for a time-independent observable X.

    ``W`` must be the rate matrix built in the same eigenbasis as ``state``.
    """
    lhs = abs(float(np.real(np.trace(observable @ rho_dot))))
    fisher = asymmetry_fisher(SLD, state, hamiltonian + h_d).value
    m_x = thermo.mobility(W, "M_X", observable)
    bound = math.sqrt(fisher) * math.sqrt(variance(state, observable)) + _entropy_term(
        sigma_dot, m_x
    )
    return bound, lhs


def optimal_probe(rho_dot):
    """X' = sgn(rho_dot) / 2, the probe that turns the current bound into a state bound."""
    return 0.5 * sign_operator(rho_dot)


def state_current_bound(state, rho_dot, hamiltonian, h_d, sigma_dot, W):
    bound, _ = current_bound(
        state, rho_dot, hamiltonian, h_d, optimal_probe(rho_dot), sigma_dot, W
    )
    return bound


@dataclass
class BoundReport:
    time: float
    speed_tr: float
    fss: float
    vs: float
    qfi: float
    current_xprime: float
    fisher_term_qfi: float
    entropy_term_qfi: float
    entropy_term_fss: float
    entropy_term_vs: float
    entropy_term_xprime: float
    sqrt_var_h: float
    sqrt_var_hd: float
    sigma_dot: float
    sigma_dot_flux: float
    activity: float
    mobility_m: float
    mobility_mprime: float
    mobility_xprime: float
    var_xprime: float
    heat_flux: float
    entropy_flux: float
    purity: float
    violations: List[str] = field(default_factory=list)

    @property
    def finite(self):
        return math.isfinite(self.sigma_dot)

    def as_dict(self):
        return asdict(self)


def check_chain(report, slack=CHAIN_SLACK):
    """Names of every violated ordering link; empty when the report is consistent."""
    r = report
    bad = []
    values = {
        "speed_tr": r.speed_tr,
        "current_xprime": r.current_xprime,
        "qfi": r.qfi,
        "vs": r.vs,
        "fss": r.fss,
    }
    for name, value in values.items():
        if not value >= 0:
            bad.append(f"{name} < 0 ({value!r})")
    if r.finite:
        chain = list(values.items())
        for (lo_name, lo), (hi_name, hi) in zip(chain, chain[1:]):
            if lo > hi + slack:
                bad.append(f"{lo_name} <= {hi_name} violated ({lo!r} > {hi!r})")
    if r.mobility_mprime > r.mobility_m + slack:
        bad.append(f"M' <= M violated ({r.mobility_mprime!r} > {r.mobility_m!r})")
    if r.mobility_m > r.activity + slack:
        bad.append(f"M <= A violated ({r.mobility_m!r} > {r.activity!r})")
    return bad


def bound_report(model, state, time=0.0):
    """Evaluate every speed-limit ingredient and bound at one state.

    Upstream errors are re-raised as PointEvaluationError carrying ``time``.
    Chain violations do not raise; they are listed in ``report.violations``.
    """
    try:
        return _bound_report(model, state, time)
    except PointEvaluationError:
        raise
    except OpenQSLError as exc:
        raise PointEvaluationError(time, exc) from exc


def _bound_report(model, state, time):
    state = align_basis(model, state)
    h = model.hamiltonian
    rho_dot = rhs(model, state)
    h_d = effective_hamiltonian(model, state)
    W = thermo.rate_matrix(model, state)
    sigma_rate, sigma_flux = thermo.entropy_production_paths(state, rho_dot, h, model.beta, W)
    sigma = thermo.reconcile_sigma(sigma_rate, sigma_flux)
    act = thermo.activity(W)
    m = thermo.mobility(W, "M")
    m_prime = thermo.mobility(W, "M_prime")

    sv_h = math.sqrt(variance(state, h))
    sv_hd = math.sqrt(variance(state, h_d))
    qfi = qfi_bound(state, h, h_d, sigma, m_prime)
    x_prime = optimal_probe(rho_dot)
    m_xprime = thermo.mobility(W, "M_X", x_prime)
    var_xprime = variance(state, x_prime)
    et_fss = _entropy_term(sigma, act)
    et_vs = _entropy_term(sigma, m)
    et_x = _entropy_term(sigma, m_xprime)
    current = 2.0 * qfi.fisher_term * math.sqrt(var_xprime) + et_x
    report = BoundReport(
        time=float(time),
        speed_tr=trace_norm(rho_dot),
        fss=sv_h + sv_hd + et_fss,
        vs=sv_h + sv_hd + et_vs,
        qfi=qfi.total,
        current_xprime=current,
        fisher_term_qfi=qfi.fisher_term,
        entropy_term_qfi=qfi.entropy_term,
        entropy_term_fss=et_fss,
        entropy_term_vs=et_vs,
        entropy_term_xprime=et_x,
        sqrt_var_h=sv_h,
        sqrt_var_hd=sv_hd,
        sigma_dot=sigma,
        sigma_dot_flux=sigma_flux,
        activity=act,
        mobility_m=m,
        mobility_mprime=m_prime,
        mobility_xprime=m_xprime,
        var_xprime=var_xprime,
        heat_flux=thermo.heat_flux(rho_dot, h),
        entropy_flux=thermo.entropy_flux(state, rho_dot),
        purity=purity(state),
    )
    report.violations = check_chain(report)
    return report
