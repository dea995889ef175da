import math

import numpy as np
import pytest

from jeanslab.contrast_ode import (ToleranceSpec, blowup_bracket, blowup_ladder,
                                   bound_certificates, envelope_constants,
                                   integrate_contrast, rk4_reference,
                                   zero_trajectory)
from jeanslab.params import params_from_iota3
from jeanslab.timemaps import compute_g


def test_initial_data_exact(traj, params):
    assert traj.f[0] == pytest.approx(params.beta, abs=1e-14)
    assert traj.f0[0] == pytest.approx(params.beta0, rel=1e-13)


def test_positivity_and_monotone(traj):
    assert np.all(traj.f > 0.0)
    assert np.all(traj.f0 > 0.0)
    assert np.all(np.diff(traj.f) > 0.0)


def test_zero_data_fixed_point():
    beta = 1e-14
    p = params_from_iota3(0.2, beta=beta, gamma=beta / (3.0 * (1.0 + beta)))
    tr = integrate_contrast(p, f_cap=1.0,
                            controls=ToleranceSpec(1e-10, 1e-16, t_ceiling=10.0))
    assert not tr.reached_cap
    assert tr.f.max() < 1e-10


def test_rk4_oracle_cross_validation(traj, params):
    # fixed-step oracle at 10x the adaptive solver's resolution
    t_probe = traj.time_of_contrast(1e3)
    n = 10 * len(traj.t_grid)
    _, f_oracle, f0_oracle = rk4_reference(params, t_probe, n)
    assert abs(f_oracle[-1] - float(traj.f_at(t_probe))) / f_oracle[-1] < 1e-8
    assert abs(f0_oracle[-1] - float(traj.f0_at(t_probe))) / f0_oracle[-1] < 1e-8


def test_contrast_rate_identity(traj, params):
    # f' expressed through (f, g) along the whole run
    maps = compute_g(traj, params, refine=2)
    pred = (1.0 / params.B) * maps.t_grid ** (-params.ode_a) \
        * maps.g ** (-params.ode_b / params.A) * (1.0 + maps.f) ** params.ode_c
    assert np.max(np.abs(pred - maps.f0) / maps.f0) < 1e-6


def test_envelope_constants_frozen(params):
    ec = envelope_constants(params)
    assert ec.a_bar == pytest.approx(-1.0 / 3.0)
    assert ec.c_bar == pytest.approx(-1.0 / 3.0)
    assert ec.triangle == pytest.approx(5.0 / 3.0)
    assert ec.cA == pytest.approx(0.78182, abs=1e-5)
    assert ec.cB == pytest.approx(-0.87273, abs=1e-5)
    assert ec.cB < 0.0 and ec.cC > 0.0 and ec.cE > 0.0
    # at t0 both envelopes reproduce the data exactly
    assert math.exp(ec.cC + ec.cD) == pytest.approx(1.0 + params.beta, abs=1e-9)
    assert ec.bracket_fn(1.0) == pytest.approx(1.0 / (1.0 + params.beta), abs=1e-12)


def test_bracket_bisection_oracle(params):
    ec = envelope_constants(params)
    t_star, t_star_up = blowup_bracket(params)
    lo, hi = 1.5, 3.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ec.bracket_fn(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    assert abs(t_star - 0.5 * (lo + hi)) < 1e-10
    assert abs(t_star - 2.01) < 1e-2
    # upper end closed form: gamma = 0.5 -> (1 - 1/(3 gamma))^-3 = 27
    assert t_star_up == pytest.approx(27.0, rel=1e-12)
    assert 1.0 < t_star < t_star_up


def test_bracket_threshold_case():
    # gamma = 1/3 exactly: supercritical hypothesis fails marginally
    p = params_from_iota3(0.2, beta=0.1, gamma=1.0 / 3.0)
    t_star, t_star_up = blowup_bracket(p)
    assert t_star > 1.0
    assert t_star_up is None


def test_bound_certificates(traj, params):
    rep = bound_certificates(traj, params)
    assert rep.all_ok
    assert rep.first_violation is None
    assert rep.improved_applicable  # gamma = 0.5 > 1/3
    # upper envelope blows up approaching t_star
    eps_t = 1e-9
    assert 1.0 / rep.constants.bracket_fn(rep.t_star - eps_t) > 1e6


def test_blowup_estimate_bracket_containment(traj, params):
    t_star, t_star_up = blowup_bracket(params)
    est, spread = blowup_ladder(traj)
    assert t_star <= est < t_star_up
    assert spread < 1e-3
    assert spread < 1e-4  # measured self-consistency is much tighter


def test_blowup_estimate_cap_stability(params):
    # doubling the cap moves the estimate by less than the reported spread
    tight = ToleranceSpec(1e-12, 1e-14)
    tr1 = integrate_contrast(params, f_cap=5e5, controls=tight)
    tr2 = integrate_contrast(params, f_cap=1e6, controls=tight)
    e1, s1 = blowup_ladder(tr1)
    e2, _ = blowup_ladder(tr2)
    assert abs(e2 - e1) / e1 < max(s1, 1e-6)


def test_blowup_estimate_deep_run_consistency(params):
    # a four-decade-deeper run must stay below the shallow estimate and
    # refine it only within a narrow band
    tight = ToleranceSpec(1e-12, 1e-14)
    shallow = integrate_contrast(params, f_cap=1e6, controls=tight)
    deep = integrate_contrast(params, f_cap=1e10, controls=tight)
    e_s, s_s = blowup_ladder(shallow)
    e_d, s_d = blowup_ladder(deep)
    assert deep.t_end < e_s  # reached time is always below the blowup estimate
    assert abs(e_d - e_s) < 5e-5
    assert s_d < s_s  # the ladder tightens as the cap deepens


def test_no_blowup_detected_error(params):
    tr = integrate_contrast(params, f_cap=1e6,
                            controls=ToleranceSpec(1e-10, 1e-12, t_ceiling=1.5))
    assert not tr.reached_cap
    with pytest.raises(RuntimeError, match="no blowup detected"):
        blowup_ladder(tr)


def test_randomized_envelopes():
    rng = np.random.default_rng(42)
    for _ in range(6):
        beta = rng.uniform(0.02, 1.0)
        gamma = rng.uniform(0.02, 1.0)
        p = params_from_iota3(rng.uniform(0.01, 0.2), beta=beta, gamma=gamma)
        tr = integrate_contrast(p, f_cap=1e3, controls=ToleranceSpec(1e-10, 1e-12))
        assert bound_certificates(tr, p).all_ok


def test_refinement_convergence(params):
    probes = [1.5, 2.5, 3.5]
    coarse = integrate_contrast(params, f_cap=1e6, controls=ToleranceSpec(1e-8, 1e-10))
    fine = integrate_contrast(params, f_cap=1e6, controls=ToleranceSpec(1e-12, 1e-14))
    for t in probes:
        rel = abs(coarse.f_at(t) - fine.f_at(t)) / fine.f_at(t)
        assert rel < 10.0 * 1e-8


def test_zero_trajectory(params):
    z = zero_trajectory(params)
    assert float(z.f_at(3.7)) == 0.0
    assert float(z.f0_at(100.0)) == 0.0


def test_f_cap_precondition(params):
    with pytest.raises(ValueError):
        integrate_contrast(params, f_cap=0.05)
