import numpy as np
import pytest

from jeanslab.contrast_ode import ToleranceSpec, integrate_contrast
from jeanslab.params import params_from_iota3
from jeanslab.timemaps import compute_diagnostics, compute_g

TIGHT = ToleranceSpec(rel_tol=1e-12, abs_tol=1e-14)


@pytest.fixture(scope="session")
def params():
    return params_from_iota3(0.2, beta=0.1, gamma=0.5, lam=0.1, A=1.0)


@pytest.fixture(scope="session")
def traj(params):
    return integrate_contrast(params, f_cap=1e6, controls=TIGHT)


@pytest.fixture(scope="session")
def maps(traj, params):
    return compute_diagnostics(traj, compute_g(traj, params, refine=4), params,
                               thetas=(2.0,))


@pytest.fixture(scope="session")
def traj_deep(params):
    # deeper run for the singular-system ladder (smaller terminal -tau)
    return integrate_contrast(params, f_cap=1e8, controls=TIGHT)


@pytest.fixture(scope="session")
def maps_deep(traj_deep, params):
    return compute_diagnostics(traj_deep, compute_g(traj_deep, params, refine=2),
                               params, thetas=(2.0,))


@pytest.fixture(scope="session")
def params_window():
    # faster-collapsing data used for the terminal-window limit checks
    return params_from_iota3(0.2, beta=0.1, gamma=0.9, lam=0.1, A=1.0)


@pytest.fixture(scope="session")
def traj_window(params_window):
    return integrate_contrast(params_window, f_cap=1e6, controls=TIGHT)


@pytest.fixture(scope="session")
def maps_window(traj_window, params_window):
    return compute_diagnostics(traj_window, compute_g(traj_window, params_window, refine=4),
                               params_window, thetas=(2.0,))


def cosine_profiles(params, eps, eps_v=0.0):
    scale = (1.0 + params.beta) ** (1.0 / 3.0)

    def d(r):
        return 1.0 + eps * np.cos(2.0 * np.pi * np.log(scale * np.asarray(r, float)))

    def v(r):
        return -1.0 + eps_v * np.cos(2.0 * np.pi * np.log(scale * np.asarray(r, float)))

    return d, v


def flat_profiles():
    return (lambda r: np.ones_like(np.asarray(r, float)),
            lambda r: -np.ones_like(np.asarray(r, float)))
