"""Entropy-based quantum speed limits for finite-dimensional GKSL dynamics.

Typical use::

    from openqsl import preset_two_level, evolve, bound_report

    sc = preset_two_level()
    model = sc.model()
    traj = evolve(model, sc.rho0, sc.t_span, sc.dt, stride=10)
    reports = [bound_report(model, p.state, p.time) for p in traj.points()]
"""
__version__ = "0.1.0"

from .bounds import BoundReport, bound_report, check_chain, current_bound, qfi_bound
from .dynamics import (
    LindbladModel,
    build_jump_decomposition,
    dissipator,
    dissipator_split,
    effective_hamiltonian,
    evolve,
)
from .errors import OpenQSLError
from .fisher import asymmetry_fisher, fisher_information, min_ensemble_variance
from .operators import spectral_state, trace_norm, variance
from .scenario import Scenario, load_scenario, preset_two_level
from .thermo import activity, entropy_production_rate, mobility, rate_matrix
