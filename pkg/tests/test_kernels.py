"""The numba and numpy flavours of every kernel must agree."""
import numpy as np
import pytest

from openqsl import kernels

from randoms import density, random_model


@pytest.fixture
def generator(rng):
    model = random_model(rng, 4, couplings=2)
    k_eff, _, amps = model.generator_arrays()
    return k_eff, amps, density(rng, 4)


def test_rhs_twins(generator):
    k_eff, amps, rho = generator
    assert np.allclose(
        kernels._rhs_numpy(k_eff, amps, rho), kernels._rhs_loops(k_eff, amps, rho), atol=1e-13
    )


def test_rk4_twins(generator):
    k_eff, amps, rho = generator
    a = kernels._rk4_numpy(k_eff, amps, rho, 1e-3, 500, 50)
    b = kernels._rk4_loops(k_eff, amps, rho, 1e-3, 500, 50)
    assert a[0].shape == b[0].shape == (11, 4, 4)
    assert np.allclose(a[0], b[0], atol=1e-12)
    assert a[1:] == b[1:]


def test_rk4_flags_nonfinite(generator):
    k_eff, amps, rho = generator
    for fn in (kernels._rk4_numpy, kernels._rk4_loops):
        _, status, _, _ = fn(k_eff * 1e200, amps, rho, 1.0, 10, 1)
        assert status in (kernels.STATUS_NONFINITE, kernels.STATUS_NEGATIVE)


def test_log_mean_twins(rng):
    a = rng.exponential(size=200)
    b = a * (1 + rng.choice([0.0, 1e-9, 1e-4, 0.5, 10.0], size=200))
    a[:5] = 0.0
    b[5:8] = 0.0
    assert np.allclose(kernels._log_mean_numpy(a, b), kernels._log_mean_loops(a, b), rtol=1e-14)


def test_relative_entropy_twins(rng):
    f = rng.exponential(size=50)
    r = rng.exponential(size=50)
    f[:3] = 0.0
    assert kernels._relative_entropy_numpy(f, r) == pytest.approx(
        kernels._relative_entropy_loops(f, r), rel=1e-13
    )
    r[10] = 0.0
    assert kernels._relative_entropy_numpy(f, r) == np.inf
    assert kernels._relative_entropy_loops(f, r) == np.inf


def test_sld_fisher_twins(rng):
    p = rng.dirichlet(np.ones(5))
    p[-1] = 0.0
    h2 = rng.exponential(size=(5, 5))
    assert kernels._sld_fisher_numpy(p, h2) == pytest.approx(
        kernels._sld_fisher_loops(p, h2), rel=1e-13
    )


def test_backend_reports_selection():
    assert kernels.backend() in ("numba", "numpy")


def test_env_flag_selects_numpy():
    import os
    import subprocess
    import sys

    env = dict(os.environ, OPENQSL_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from openqsl import kernels; print(kernels.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
