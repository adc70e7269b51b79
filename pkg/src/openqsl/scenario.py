"""Scenario files: JSON description of a model, an initial state and a time grid.

Complex matrices are stored as ``{"real": [[...]], "imag": [[...]]}``. Rates
are either explicit::

    "rates": [{"jump": "sigma_minus", "omega": 1.0, "gamma": 2.0}, ...],
    "beta": 0.2876...

or the thermal-bath shorthand, which fixes beta as well::

    "bath": {"jump": "sigma_minus", "gamma0": 0.5, "omega0": 1.0, "N": 3.0}

giving gamma(+omega0) = gamma0 omega0 (N + 1), gamma(-omega0) = gamma0 omega0 N
and beta omega0 = ln((N + 1) / N).
"""
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .dynamics import build_jump_decomposition, step_count
from .errors import (
    DetailedBalanceError,
    HermiticityError,
    InputError,
    InvalidStateError,
    ModelError,
    OpenQSLError,
)
from .operators import SIGMA_MINUS, hermitian, spectral_state

SCHEMA_VERSION = 1


class ScenarioError(OpenQSLError):
    """Scenario validation failure with a stable code and the offending field path."""

    codes = {
        "malformed": 3,
        "non_hermitian": 4,
        "invalid_state": 5,
        "detailed_balance": 6,
        "model": 7,
    }

    def __init__(self, code, path, message):
        self.code = code
        self.path = path
        super().__init__(f"[{code}] {path}: {message}")

    @property
    def exit_status(self):
        return self.codes[self.code]


@dataclass(frozen=True)
class Bath:
    jump: str
    gamma0: float
    omega0: float
    N: float

    @property
    def gamma_minus(self):
        return self.gamma0 * self.omega0 * (self.N + 1.0)

    @property
    def gamma_plus(self):
        return self.gamma0 * self.omega0 * self.N

    @property
    def beta(self):
        return math.log(self.gamma_minus / self.gamma_plus) / self.omega0


@dataclass
class Scenario:
    hamiltonian: np.ndarray
    jumps: List[Tuple[str, np.ndarray]]
    rho0: np.ndarray
    rates: Dict[Tuple[str, float], float] = field(default_factory=dict)
    bath: Optional[Bath] = None
    beta: Optional[float] = None
    t_span: Tuple[float, float] = (0.0, 5.0)
    dt: float = 1e-3
    stride: int = 10
    seed: Optional[int] = None
    name: str = "scenario"

    def effective_rates(self):
        if self.bath is None:
            return dict(self.rates)
        b = self.bath
        return {(b.jump, b.omega0): b.gamma_minus, (b.jump, -b.omega0): b.gamma_plus}

    def effective_beta(self):
        if self.bath is not None and self.beta is None:
            return self.bath.beta
        return self.beta

    def model(self):
        return build_jump_decomposition(
            self.hamiltonian, self.jumps, self.effective_rates(), self.effective_beta()
        )


def preset_two_level():
    """Driven-free qubit relaxing in a thermal bath (omega0 = 1, gamma0 = 0.5, N = 3)."""
    return Scenario(
        hamiltonian=np.diag([0.5, -0.5]).astype(np.complex128),
        jumps=[("sigma_minus", SIGMA_MINUS.copy())],
        rho0=np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]]),
        bath=Bath("sigma_minus", gamma0=0.5, omega0=1.0, N=3.0),
        t_span=(0.0, 5.0),
        dt=1e-3,
        stride=10,
        name="two-level",
    )


PRESETS = {"two-level": preset_two_level}


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------


def _matrix_to_json(a):
    a = np.asarray(a, dtype=np.complex128)
    return {"real": a.real.tolist(), "imag": a.imag.tolist()}


def scenario_to_dict(sc):
    doc = {
        "version": SCHEMA_VERSION,
        "name": sc.name,
        "hamiltonian": _matrix_to_json(sc.hamiltonian),
        "jumps": [{"label": label, "matrix": _matrix_to_json(op)} for label, op in sc.jumps],
    }
    if sc.bath is not None:
        b = sc.bath
        doc["bath"] = {"jump": b.jump, "gamma0": b.gamma0, "omega0": b.omega0, "N": b.N}
    else:
        doc["rates"] = [
            {"jump": label, "omega": omega, "gamma": gamma}
            for (label, omega), gamma in sc.rates.items()
        ]
    doc["beta"] = sc.beta
    doc["rho0"] = _matrix_to_json(sc.rho0)
    doc["t_span"] = [float(sc.t_span[0]), float(sc.t_span[1])]
    doc["dt"] = sc.dt
    doc["stride"] = sc.stride
    doc["seed"] = sc.seed
    return doc


def dumps(sc):
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def save_scenario(sc, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(sc))


def _need(doc, key, path):
    if not isinstance(doc, dict) or key not in doc:
        raise ScenarioError("malformed", f"{path}.{key}" if path else key, "missing field")
    return doc[key]


def _number(value, path, positive=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError("malformed", path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or (positive and value <= 0):
        raise ScenarioError("malformed", path, f"invalid value {value!r}")
    return value


def _matrix(doc, path):
    try:
        real = np.array(_need(doc, "real", path), dtype=np.float64)
        imag = np.array(_need(doc, "imag", path), dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ScenarioError("malformed", path, f"not a numeric matrix ({exc})") from None
    if real.ndim != 2 or real.shape[0] != real.shape[1] or real.shape != imag.shape:
        raise ScenarioError("malformed", path, f"real/imag must be equal square matrices")
    if not (np.all(np.isfinite(real)) and np.all(np.isfinite(imag))):
        raise ScenarioError("malformed", path, "non-finite entries")
    return real + 1j * imag


def scenario_from_dict(doc):
    if not isinstance(doc, dict):
        raise ScenarioError("malformed", "$", "top level must be an object")
    h = _matrix(_need(doc, "hamiltonian", ""), "hamiltonian")
    try:
        h = hermitian(h, "hamiltonian")
    except HermiticityError as exc:
        raise ScenarioError("non_hermitian", "hamiltonian", str(exc)) from None

    jumps = []
    raw_jumps = _need(doc, "jumps", "")
    if not isinstance(raw_jumps, list):
        raise ScenarioError("malformed", "jumps", "expected a list")
    for i, item in enumerate(raw_jumps):
        label = _need(item, "label", f"jumps[{i}]")
        if not isinstance(label, str):
            raise ScenarioError("malformed", f"jumps[{i}].label", "expected a string")
        op = _matrix(_need(item, "matrix", f"jumps[{i}]"), f"jumps[{i}].matrix")
        if op.shape != h.shape:
            raise ScenarioError("malformed", f"jumps[{i}].matrix", "shape differs from hamiltonian")
        jumps.append((label, op))

    bath = None
    rates = {}
    if "bath" in doc and doc["bath"] is not None:
        b = doc["bath"]
        bath = Bath(
            str(_need(b, "jump", "bath")),
            _number(_need(b, "gamma0", "bath"), "bath.gamma0", positive=True),
            _number(_need(b, "omega0", "bath"), "bath.omega0", positive=True),
            _number(_need(b, "N", "bath"), "bath.N", positive=True),
        )
    else:
        raw_rates = _need(doc, "rates", "")
        if not isinstance(raw_rates, list):
            raise ScenarioError("malformed", "rates", "expected a list")
        for i, item in enumerate(raw_rates):
            key = (
                str(_need(item, "jump", f"rates[{i}]")),
                _number(_need(item, "omega", f"rates[{i}]"), f"rates[{i}].omega"),
            )
            gamma = _number(_need(item, "gamma", f"rates[{i}]"), f"rates[{i}].gamma")
            if gamma < 0:
                raise ScenarioError("malformed", f"rates[{i}].gamma", "rates must be >= 0")
            rates[key] = gamma

    beta = _number(doc.get("beta"), "beta", allow_none=True)
    rho0 = _matrix(_need(doc, "rho0", ""), "rho0")
    t_span = doc.get("t_span", [0.0, 5.0])
    if not isinstance(t_span, list) or len(t_span) != 2:
        raise ScenarioError("malformed", "t_span", "expected [t0, t1]")
    t_span = (_number(t_span[0], "t_span[0]"), _number(t_span[1], "t_span[1]"))
    dt = _number(doc.get("dt", 1e-3), "dt", positive=True)
    stride = doc.get("stride", 10)
    if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        raise ScenarioError("malformed", "stride", f"expected a positive integer, got {stride!r}")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ScenarioError("malformed", "seed", "expected an integer or null")
    name = doc.get("name", "scenario")

    sc = Scenario(h, jumps, rho0, rates, bath, beta, t_span, dt, stride, seed, str(name))
    validate(sc)
    return sc


def validate(sc):
    """Raise ScenarioError unless the model, state and time grid are usable."""
    try:
        spectral_state(sc.rho0, "rho0")
    except HermiticityError as exc:
        raise ScenarioError("invalid_state", "rho0", str(exc)) from None
    except InvalidStateError as exc:
        raise ScenarioError("invalid_state", "rho0", str(exc)) from None
    if sc.rho0.shape != sc.hamiltonian.shape:
        raise ScenarioError("malformed", "rho0", "shape differs from hamiltonian")
    if sc.bath is not None and sc.beta is not None:
        if abs(sc.bath.beta - sc.beta) > 1e-9 * max(1.0, abs(sc.beta)):
            raise ScenarioError(
                "detailed_balance", "beta", f"beta {sc.beta} contradicts bath beta {sc.bath.beta}"
            )
    try:
        sc.model()
    except DetailedBalanceError as exc:
        raise ScenarioError("detailed_balance", "rates", str(exc)) from None
    except (ModelError, InputError) as exc:
        raise ScenarioError("model", "jumps", str(exc)) from None
    try:
        step_count(sc.t_span, sc.dt)
    except InputError as exc:
        raise ScenarioError("malformed", "t_span", str(exc)) from None


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("malformed", "$", f"invalid JSON ({exc})") from None
    return scenario_from_dict(doc)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
