import numpy as np
import pytest

from conftest import cosine_profiles
from jeanslab import pde
from jeanslab.fuchsian import (assemble_matrices, find_certified_radius,
                               fuchsian_fields, gamma_constants, q_lower_bound,
                               q_quantity, system_residual, system_rhs_direct,
                               verify_conditions, wave_block_weight)
from jeanslab.pde import EvolveControls, diff1, evolve, init_from_data


@pytest.fixture(scope="module")
def gconsts(params, maps_deep):
    g_range = (float(maps_deep.G_frak.min()), float(maps_deep.G_frak.max()))
    return gamma_constants(params, g_range)


# ---------------------------------------------------------------------------
# field extraction


def test_fields_vanish_on_homogeneous(traj, maps, params):
    d = lambda r: np.ones_like(np.asarray(r, float))
    v = lambda r: -np.ones_like(np.asarray(r, float))
    st = init_from_data(params, d, v, 64)
    F = fuchsian_fields(st, traj, maps, params)
    assert np.max(np.abs(F.U)) < 1e-13
    assert F.tau == pytest.approx(-1.0, abs=1e-10)


def test_uz_consistency(traj, maps, params):
    d, v = cosine_profiles(params, 1e-2)
    st = init_from_data(params, d, v, 128)
    F = fuchsian_fields(st, traj, maps, params)
    u0_, uz_, u_, nu_, psi_ = F.U
    h = 1.0 / st.n
    cs = params.c_scale
    f = F.f
    expect = (cs * f / (1.0 + f)) * diff1(u_, h)
    assert np.max(np.abs(uz_ - expect)) < 1e-12


def test_psi_field_bound(traj, maps, params):
    d, v = cosine_profiles(params, 1e-2, eps_v=5e-3)
    st = init_from_data(params, d, v, 128)
    F = fuchsian_fields(st, traj, maps, params)
    assert np.max(np.abs(F.U[4])) <= np.max(np.abs(F.U[2])) / 3.0 + 1e-14


# ---------------------------------------------------------------------------
# matrix assembly


def test_blocks_at_zero(params):
    ev = assemble_matrices(-0.5, np.zeros(5), 0.0, 2.0, params)
    lam, i3 = params.lam, params.iota**3
    assert np.max(np.abs(ev.Z)) == 0.0
    assert np.max(np.abs(ev.H)) == 0.0
    assert np.max(np.abs(ev.F)) == 0.0
    # singular-block diagonal entries at the origin
    q = lam + (3.0 - 8.0 * i3) / 30.0
    assert ev.B0[2, 2] == pytest.approx(q)
    assert ev.frakB[2, 2] == pytest.approx((4.0 * lam + 2.0 * (3.0 - 8.0 * i3) / 15.0)
                                           / params.A)
    assert ev.frakB[2, 2] == pytest.approx(0.5866666666666667 / params.A)
    # derivative-block diagonal carries the wave weight (see ledger: the
    # sound-speed factor (2+omega)(1-iota^3) replaces the fixed 1/4)
    q_w = wave_block_weight(params)
    f, G = 2.0, 1.0
    ev2 = assemble_matrices(-0.5, np.zeros(5), G, f, params)
    assert ev2.B0[1, 1] == pytest.approx(q_w * (1.0 + 1.0 / f) / (4.0 + G / params.B))


def test_symmetry_exact(params):
    rng = np.random.default_rng(5)
    for _ in range(20):
        U = rng.uniform(-0.2, 0.2, 5)
        ev = assemble_matrices(-0.3, U, 1.5, 3.0, params)
        assert np.array_equal(ev.Bz, ev.Bz.T)
        assert np.array_equal(ev.B0, ev.B0.T)


def test_z_vanish_at_origin_all_tau(params):
    for tau in (-1.0, -0.25, -0.01):
        ev = assemble_matrices(tau, np.zeros(5), 0.7, 11.0, params)
        assert np.max(np.abs(ev.Z)) == 0.0


def test_z_shrinks_with_radius(params):
    rng = np.random.default_rng(2)
    direc = rng.uniform(-1.0, 1.0, 5)
    direc /= np.linalg.norm(direc)
    prev = np.inf
    for r in (1e-2, 1e-3, 1e-4, 1e-6):
        ev = assemble_matrices(-0.4, r * direc, 1.0, 4.0, params)
        assert ev.sum_abs_z < prev
        prev = ev.sum_abs_z
    assert prev < 1e-4  # linear in the radius near the origin


def test_domain_guards(params):
    with pytest.raises(ValueError, match="fractional-power"):
        assemble_matrices(-0.5, np.array([0.0, 0.0, -3.0, 0.0, 0.0]), 0.0, 10.0, params)
    with pytest.raises(ValueError, match="chi must stay positive"):
        assemble_matrices(-0.5, np.zeros(5), -5.0 * params.B, 1.0, params)


def test_two_path_agreement(params):
    # the assembled blocks must reproduce the literally transcribed equations
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        tau = -(10.0 ** rng.uniform(-2, 0))
        U = rng.uniform(-0.3, 0.3, 5)
        dUdz = rng.uniform(-0.5, 0.5, 5)
        f = 10.0 ** rng.uniform(-1, 5)
        G = rng.uniform(-1.5, 12.0)
        if 4.0 + G / params.B <= 0.05:
            continue
        ev = assemble_matrices(tau, U, G, f, params)
        rhs_mat = ev.frakB @ ev.U / tau + ev.H + (-tau) ** -0.5 * ev.F - ev.Bz @ dUdz
        rhs_dir = system_rhs_direct(tau, U, dUdz, G, f, params)
        scale = np.maximum(np.abs(rhs_dir), 1.0)
        worst = max(worst, float(np.max(np.abs(rhs_mat - rhs_dir) / scale)))
    assert worst < 1e-12


# ---------------------------------------------------------------------------
# constants and conditions


def test_gamma_closed_forms(gconsts):
    # candidate list and the frozen minima for lam = 0.1, iota^3 = 0.2
    c1, c2, c3 = gconsts.candidates
    assert c1 == pytest.approx(0.8 / 415.0, rel=1e-12)           # 0.0019277...
    assert c2 == pytest.approx(1.0 / 1500.0, rel=1e-15)          # 0.0006667
    assert c3 == pytest.approx(1.0 / (27.0 * 13.3 * 10.2**2), rel=1e-12)  # 2.6766e-5
    assert gconsts.gamma1 == pytest.approx(0.5 * c3, rel=1e-15)
    assert gconsts.gamma1 == pytest.approx(1.3383e-5, abs=1e-9)
    assert gconsts.gamma2 == pytest.approx(6.4 + gconsts.gamma1, rel=1e-15)
    assert gconsts.gamma2 == pytest.approx(6.40001, abs=1e-5)
    assert 0.0 < gconsts.gamma1 < gconsts.gamma2
    assert gconsts.kappa_const == pytest.approx(
        gconsts.gamma1 / (1.0 * gconsts.gamma2_hat), rel=1e-15)
    assert gconsts.beta1_budget > 0.0


def test_gamma_randomized_order():
    from jeanslab.params import params_from_iota3

    rng = np.random.default_rng(9)
    for _ in range(20):
        lam = 10.0 ** rng.uniform(-3, 1)
        i3 = rng.uniform(1e-3, 0.2)
        p = params_from_iota3(i3, beta=0.1, gamma=0.5, lam=lam)
        gc = gamma_constants(p, (0.0, 5.0))
        assert gc.gamma1 > 0.0
        assert gc.gamma2 > gc.gamma1


def test_gamma_rejects_bad_G_range(params):
    with pytest.raises(ValueError, match="positivity"):
        gamma_constants(params, (-4.1 * params.B, 1.0))


def test_q_positivity_sampled():
    rng = np.random.default_rng(1)
    for _ in range(100):
        lam = 10.0 ** rng.uniform(-3, 1)
        i3 = rng.uniform(1e-4, 0.2)
        assert q_quantity(lam, i3) > q_lower_bound(lam, i3)


def test_certified_radius_and_conditions(params, maps_deep, gconsts):
    r = find_certified_radius(params, maps_deep, gconsts, n_samples=200)
    assert r > 0.0
    rep = verify_conditions(params, maps_deep, gconsts, r_tilde=r, n_samples=1000)
    assert rep.all_ok, rep.verdict
    assert rep.max_sum_abs_z < gconsts.gamma1
    assert rep.sandwich_margin > 0.0
    assert rep.H_at_zero_max == 0.0
    # |G|/sqrt(-tau) finite and stable under ladder refinement
    assert rep.G_halforder_stable
    assert 0.0 < rep.G_halforder_sup < 100.0
    # fitted singular orders: the 1/tau pieces sit near slope -1
    assert -1.35 < rep.divB_orders["b_singular"] < -0.65
    assert -1.35 < rep.divB_orders["c_dUBz"] < -0.65
    # half-order pieces never steeper than tau^(-3/4)
    assert rep.divB_orders["d_dtauB0"] > -0.75
    assert rep.divB_orders["e_halforder"] > -0.75


def test_sandwich_violated_outside_ball(params, maps_deep, gconsts):
    # far outside the certified ball the smallness budget must fail
    rep = verify_conditions(params, maps_deep, gconsts, r_tilde=0.3,
                            n_samples=200, divB_check=False)
    assert not rep.sum_z_ok


def test_noncertified_params_refused(maps_deep, gconsts):
    from jeanslab.params import build_params, k_from_iota

    loose = build_params(k_from_iota(0.7), beta=0.1, gamma=0.5, force=True)
    with pytest.raises(ValueError, match="certified"):
        verify_conditions(loose, maps_deep, gconsts, r_tilde=1e-7, n_samples=10)


# ---------------------------------------------------------------------------
# equivalence with the evolved system


def test_run_extraction_satisfies_system(traj_deep, maps_deep, params):
    d, v = cosine_profiles(params, 1e-3)
    st = init_from_data(params, d, v, 64)
    res = evolve(st, traj_deep, params, f_cap=50.0,
                 controls=EvolveControls(out_target=10**9))
    states = res.states
    mid = len(states) // 2
    win = states[mid - 2:mid + 3]
    fields = [fuchsian_fields(s, traj_deep, maps_deep, params) for s in win]
    taus = np.array([F.tau for F in fields])
    stack = np.stack([F.U for F in fields])
    center = 2
    dU = np.empty_like(fields[center].U)
    for i in range(5):
        for j in range(fields[center].n):
            dU[i, j] = np.polyfit(taus - taus[center], stack[:, i, j], 4)[3]
    Fc = fields[center]
    h = 1.0 / Fc.n
    dUdz = np.stack([diff1(Fc.U[i], h) for i in range(5)])
    defect = np.empty_like(Fc.U)
    for j in range(Fc.n):
        ev = assemble_matrices(Fc.tau, Fc.U[:, j], Fc.G_frak, Fc.f, params)
        defect[:, j] = system_residual(ev, dU[:, j], dUdz[:, j])
    assert float(np.max(np.abs(defect))) < 1e-8
