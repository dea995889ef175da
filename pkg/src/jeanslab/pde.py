"""Log-periodic spherically symmetric evolution of (density contrast, velocity).

State variables on the unit-period grid in the logarithmic radial coordinate
zeta: the contrast rho_hat, its time derivative, and the rescaled speed nu.
The second-order contrast equation is reduced to first order and marched with
explicit RK4 under a CFL condition; the nonlocal rescaled gravity Psi is
re-evaluated from the current contrast at every stage.

The wave operator acting on rho_hat is

    d_t^2 - gzz d_zeta^2 + 2 g0z d_zeta d_t,

and the run stops hard if the effective squared wave speed gzz loses
positivity anywhere (the equation leaves the hyperbolic regime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contrast_ode import OdeTrajectory
from .params import ModelParams


class HyperbolicityLossError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# periodic grid operators


def zeta_grid(n: int) -> np.ndarray:
    if n < 16 or n % 2:
        raise ValueError(f"grid size must be even and >= 16, got {n!r}")
    return np.arange(n) / n


def diff1(u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered first derivative on the periodic grid."""
    return (-np.roll(u, -2) + 8.0 * np.roll(u, -1)
            - 8.0 * np.roll(u, 1) + np.roll(u, 2)) / (12.0 * h)


def diff2(u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered second derivative on the periodic grid."""
    return (-np.roll(u, -2) + 16.0 * np.roll(u, -1) - 30.0 * u
            + 16.0 * np.roll(u, 1) - np.roll(u, 2)) / (12.0 * h * h)


def diff1_spectral(u: np.ndarray, h: float) -> np.ndarray:
    n = len(u)
    k = 2.0j * math.pi * np.fft.rfftfreq(n, d=1.0 / n)
    return np.fft.irfft(k * np.fft.rfft(u), n=n)


def diff2_spectral(u: np.ndarray, h: float) -> np.ndarray:
    n = len(u)
    k = 2.0j * math.pi * np.fft.rfftfreq(n, d=1.0 / n)
    return np.fft.irfft(k * k * np.fft.rfft(u), n=n)


_DERIV_MODES = {
    "fd4": (diff1, diff2),
    "spectral": (diff1_spectral, diff2_spectral),
}


def compute_psi(u_grid: np.ndarray) -> np.ndarray:
    """Rescaled gravity from the contrast deviation u on the periodic grid.

    Psi solves d_zeta Psi = u - 3 Psi with unit period; equivalently it is the
    one-period closed form of the infinite-tail integral,

        Psi(zeta) = e^(-3 zeta) (1 - e^-3)^(-1) * int_{zeta-1}^{zeta} u(z) e^(3z) dz,

    evaluated with the trigonometric interpolant of the grid values, for which
    the weighted integral is exact mode by mode: mode k of u maps to mode k of
    Psi divided by (3 + 2 pi i k).  The output is periodic by construction and
    shift-equivariant under whole-grid-point shifts.
    """
    n = len(u_grid)
    k = np.fft.rfftfreq(n, d=1.0 / n)
    return np.fft.irfft(np.fft.rfft(u_grid) / (3.0 + 2.0j * math.pi * k), n=n)


def psi_brute_force(u_fn, zeta: np.ndarray, periods: int = 20, n_sub: int = 4096) -> np.ndarray:
    """Truncated multi-period tail integral of Psi, as an independent oracle.

    Direct Simpson evaluation of e^(-3 zeta) int_{zeta - periods}^{zeta} u e^(3z) dz;
    the truncation error is e^(-3 periods).
    """
    from scipy.integrate import simpson

    out = np.empty_like(zeta)
    for i, z in enumerate(zeta):
        zs = np.linspace(z - periods, z, n_sub + 1)
        out[i] = simpson(u_fn(zs) * np.exp(3.0 * (zs - z)), x=zs)
    return out


# ---------------------------------------------------------------------------
# state and controls


@dataclass
class FieldState:
    t: float
    zeta: np.ndarray
    rho_hat: np.ndarray
    drho_dt: np.ndarray
    nu: np.ndarray
    psi: np.ndarray

    @property
    def n(self) -> int:
        return len(self.zeta)


@dataclass(frozen=True)
class EvolveControls:
    cfl: float = 0.4
    growth_cap: float = 0.01  # max fractional ODE-scale growth per step
    out_target: int = 400     # approximate number of stored snapshots
    deriv: str = "fd4"
    dt_floor: float = 1e-13


@dataclass
class MonitorSeries:
    t: list = field(default_factory=list)
    ratio_rho_min: list = field(default_factory=list)
    ratio_rho_max: list = field(default_factory=list)
    ratio_drho_min: list = field(default_factory=list)
    ratio_drho_max: list = field(default_factory=list)
    uz_sup: list = field(default_factory=list)
    nu_sup: list = field(default_factory=list)
    continuity_residual: list = field(default_factory=list)

    def as_arrays(self) -> dict:
        return {k: np.asarray(v) for k, v in self.__dict__.items()}


@dataclass
class EvolveResult:
    states: list
    monitors: MonitorSeries
    stop_reason: str
    n_steps: int
    dt_min: float
    dt_max: float

    @property
    def final(self) -> FieldState:
        return self.states[-1]


# ---------------------------------------------------------------------------
# initial data


def profile_endpoint_mismatch(profile, params: ModelParams, n_check: int = 64) -> float:
    """Sup over grid points of |F(y1(zeta+1)) - F(y1(zeta))| for a radial profile."""
    z = np.linspace(0.0, 1.0, n_check, endpoint=False)
    r0 = (1.0 + params.beta) ** (-1.0 / 3.0) * np.exp(z)
    r1 = (1.0 + params.beta) ** (-1.0 / 3.0) * np.exp(z + 1.0)
    return float(np.max(np.abs(np.asarray(profile(r1)) - np.asarray(profile(r0)))))


def data_smallness(state: FieldState, params: ModelParams) -> float:
    """Sup-norm proxy of the perturbation size of the initial data.

    Reports max over |u|, |nu| and their first two grid derivatives at t = t0,
    the quantity the smallness budget of the stability theorem constrains.
    """
    h = 1.0 / state.n
    f = params.beta
    u = (state.rho_hat - f) / f
    vals = [u, state.nu]
    vals += [diff1(u, h), diff1(state.nu, h), diff2(u, h), diff2(state.nu, h)]
    return float(max(np.max(np.abs(v)) for v in vals))


def init_from_data(params: ModelParams, d_profile, v_profile, n: int,
                   periodicity_tol: float = 1e-10) -> FieldState:
    """Build the t = t0 state from radial profiles d(|x|), v(|x|).

    The contrast and speed come straight from the data map; the time
    derivative of the contrast is reconstructed from the continuity identity
    (the evolution preserves that identity, so prescribing it independently
    would inject an inconsistent mode).  Profiles must be 1-log-periodic.
    """
    zeta = zeta_grid(n)
    h = 1.0 / n
    for name, prof in (("d", d_profile), ("v", v_profile)):
        gap = profile_endpoint_mismatch(prof, params)
        if gap > periodicity_tol:
            raise ValueError(f"profile {name!r} is not 1-log-periodic: "
                             f"endpoint mismatch {gap:.3g} > {periodicity_tol:.3g}")
    r_phys = (1.0 + params.beta) ** (-1.0 / 3.0) * np.exp(zeta)
    f = params.beta
    f0 = params.beta0
    rho_hat = f * np.asarray(d_profile(r_phys), dtype=float)
    nu = 1.0 + np.asarray(v_profile(r_phys), dtype=float)
    one_pr = 1.0 + rho_hat
    if np.any(one_pr <= 0.0):
        raise ValueError("initial data reaches vacuum: 1 + rho_hat <= 0")
    z_rate = f0 / (3.0 * (1.0 + f))
    drho_dt = (one_pr * f0 / (1.0 + f)
               - z_rate * nu * diff1(rho_hat, h)
               - one_pr * (f0 / (1.0 + f)) * nu
               - one_pr * z_rate * diff1(nu, h))
    psi = compute_psi((rho_hat - f) / f)
    return FieldState(t=params.t0, zeta=zeta, rho_hat=rho_hat,
                      drho_dt=drho_dt, nu=nu, psi=psi)


# ---------------------------------------------------------------------------
# right-hand side


def wave_coefficients(state_t: float, rho_hat: np.ndarray, nu: np.ndarray,
                      f: float, f0: float, params: ModelParams):
    """(gzz, g0z) of the reduced wave operator at one time level."""
    om, i3 = params.omega, params.iota**3
    t = state_t
    one_pf = 1.0 + f
    one_pr = 1.0 + rho_hat
    gzz = ((2.0 + om) * (1.0 - i3) / (9.0 * t * t) * one_pr ** (om + 1.0) / one_pf**om
           - (f0**2 / (9.0 * one_pf**2)) * nu**2)
    g0z = f0 * nu / (3.0 * one_pf)
    return gzz, g0z


def rhs(state: FieldState, traj: OdeTrajectory, params: ModelParams,
        deriv: str = "fd4"):
    """Time derivatives (d rho_hat, d drho_dt, d nu) of the reduced system.

    Raises HyperbolicityLossError if gzz <= 0 anywhere and ValueError on
    vacuum (1 + rho_hat <= 0).  Psi is re-evaluated from the instantaneous
    contrast before use.
    """
    d1, d2 = _DERIV_MODES[deriv]
    t = state.t
    f = float(traj.f_at(t))
    f0 = float(traj.f0_at(t))
    om, i3, kap = params.omega, params.iota**3, params.kappa
    r, rt, nu = state.rho_hat, state.drho_dt, state.nu
    h = 1.0 / state.n
    one_pf = 1.0 + f
    one_pr = 1.0 + r
    if np.any(one_pr <= 0.0):
        raise ValueError("vacuum formation: 1 + rho_hat <= 0 on the grid")
    gzz, g0z = wave_coefficients(t, r, nu, f, f0, params)
    if np.any(gzz <= 0.0):
        raise HyperbolicityLossError(
            f"hyperbolicity loss at t={t:.9g}: min gzz = {float(gzz.min()):.3g}")

    rz, rzz, rtz, nuz = d1(r, h), d2(r, h), d1(rt, h), d1(nu, h)
    psi = compute_psi((r - f) / f)
    ratio = one_pr / one_pf
    z_rate = f0 / (3.0 * one_pf)

    f1 = (-(2.0 * f0**2 / (9.0 * one_pf**2)) * nu * rz
          + ((om + 1.0) * (om + 2.0) * (1.0 - i3) / (9.0 * t * t)) * ratio**om * rz**2
          + (f0**2 / (9.0 * one_pf**2)) * nu**2 * rz
          + (2.0 * (1.0 - i3) * one_pf / (9.0 * t * t)) * (ratio ** (1.0 + om) - 1.0) * rz
          + (2.0 * i3 * f / (3.0 * t * t)) * rz * psi
          + 4.0 * f0**2 * nu**2 * rz**2 / (27.0 * one_pf**2 * one_pr)
          + 8.0 * f0 * nu * rz * rt / (9.0 * one_pf * one_pr)
          + (2.0 / 3.0) * one_pr * (f0 / one_pf - rt / one_pr
                                    - z_rate * nu * rz / one_pr
                                    - (f0 / one_pf) * nu) ** 2
          + (2.0 * (1.0 - i3) / (3.0 * t * t)) * (ratio**om - 1.0) * one_pr**2
          + ((8.0 + 5.0 * om) * (1.0 - i3) / (9.0 * t * t)) * one_pr ** (om + 1.0) / one_pf**om * rz
          + kap * f0**2 * one_pr / one_pf**2)

    d_rt = (gzz * rzz - 2.0 * g0z * rtz
            - (4.0 / (3.0 * t) + kap * f0 / one_pf) * rt
            + (2.0 / (3.0 * t * t)) * r * one_pr
            + (4.0 / 3.0) * rt**2 / one_pr
            + f1)

    g1 = (-(2.0 * one_pf * f / (3.0 * t * t * f0)) * nu
          + (1.0 / 3.0 - kap) * (f0 / one_pf) * nu
          - z_rate * nu**2
          - ((om + 2.0) * (1.0 - i3) * one_pf ** (1.0 - om) * one_pr**om
             / (3.0 * t * t * f0)) * rz
          - (2.0 * (1.0 - i3) * one_pf**2 / (3.0 * t * t * f0)) * (ratio ** (1.0 + om) - 1.0)
          - (2.0 * i3 * one_pf * f / (t * t * f0)) * psi)
    d_nu = g1 - z_rate * nu * nuz

    return rt.copy(), d_rt, d_nu


def continuity_residual(state: FieldState, traj: OdeTrajectory,
                        params: ModelParams, deriv: str = "fd4") -> float:
    """Max-norm defect of the reduced continuity identity at one time level."""
    d1, _ = _DERIV_MODES[deriv]
    f = float(traj.f_at(state.t))
    f0 = float(traj.f0_at(state.t))
    h = 1.0 / state.n
    one_pf, one_pr = 1.0 + f, 1.0 + state.rho_hat
    z_rate = f0 / (3.0 * one_pf)
    defect = (f0 / one_pf
              - state.drho_dt / one_pr
              - z_rate * state.nu * d1(state.rho_hat, h) / one_pr
              - (f0 / one_pf) * state.nu
              - z_rate * d1(state.nu, h))
    return float(np.max(np.abs(defect)))


def entropy_field(state: FieldState, traj: OdeTrajectory, params: ModelParams,
                  x_slice: float | None = None) -> np.ndarray:
    """Specific entropy on the grid from the algebraic reduction.

    With the model's entropy-production exponent the transport equation
    collapses to s = ln(t^(-4/3) (1+rho_hat)^(2/3+omega) (1+f)^(-omega) |x|^2);
    |x| is reconstructed from zeta through the time-dependent exp-log map
    unless a fixed slice radius is supplied.
    """
    t = state.t
    f = float(traj.f_at(t))
    om = params.omega
    if np.any(1.0 + state.rho_hat <= 0.0):
        raise ValueError("entropy undefined at vacuum: 1 + rho_hat <= 0")
    if x_slice is None:
        x_abs = t ** (2.0 / 3.0) * (1.0 + f) ** (-1.0 / 3.0) * np.exp(state.zeta)
    else:
        x_abs = np.full(state.n, float(x_slice))
    return np.log(t ** (-4.0 / 3.0) * (1.0 + state.rho_hat) ** (2.0 / 3.0 + om)
                  * (1.0 + f) ** (-om) * x_abs**2)


# ---------------------------------------------------------------------------
# time marching


def _record(mon: MonitorSeries, state: FieldState, traj, params, deriv):
    f = float(traj.f_at(state.t))
    f0 = float(traj.f0_at(state.t))
    d1, _ = _DERIV_MODES[deriv]
    rr = state.rho_hat / f
    rd = state.drho_dt / f0
    uz = (params.c_scale / (1.0 + f)) * d1(state.rho_hat, 1.0 / state.n)
    mon.t.append(state.t)
    mon.ratio_rho_min.append(float(rr.min()))
    mon.ratio_rho_max.append(float(rr.max()))
    mon.ratio_drho_min.append(float(rd.min()))
    mon.ratio_drho_max.append(float(rd.max()))
    mon.uz_sup.append(float(np.max(np.abs(uz))))
    mon.nu_sup.append(float(np.max(np.abs(state.nu))))
    mon.continuity_residual.append(continuity_residual(state, traj, params, deriv))


def evolve(state: FieldState, traj: OdeTrajectory, params: ModelParams,
           t_end: float | None = None, f_cap: float | None = None,
           controls: EvolveControls = EvolveControls()) -> EvolveResult:
    """March the reduced system with RK4 under CFL and ODE-growth step caps.

    dt <= cfl * dzeta / max(sqrt(gzz) + |g0z|) controls the wave part, and
    dt <= growth_cap * (1+f)/f' keeps the time integration locked to the
    steepening homogeneous contrast near blowup.  Stops at t_end, when the
    reference contrast reaches f_cap, or on hyperbolicity loss / dt underflow.
    """
    if t_end is None and f_cap is None:
        raise ValueError("need t_end or f_cap as a stopping rule")
    t_stop = traj.t_end if t_end is None else min(t_end, traj.t_end)
    if f_cap is not None:
        if traj.f[-1] < f_cap:
            raise ValueError(f"trajectory only reaches f = {traj.f[-1]:.3g} < f_cap")
        t_stop = min(t_stop, traj.time_of_contrast(f_cap))
    h = 1.0 / state.n
    est_steps = _estimate_steps(state, traj, params, t_stop, controls, h)
    out_every = max(1, est_steps // max(controls.out_target, 2))

    mon = MonitorSeries()
    states = [state]
    _record(mon, state, traj, params, controls.deriv)
    stop_reason = "t_end"
    n_steps = 0
    dt_min, dt_max = math.inf, 0.0
    cur = state
    while cur.t < t_stop * (1.0 - 1e-14):
        f = float(traj.f_at(cur.t))
        f0 = float(traj.f0_at(cur.t))
        gzz, g0z = wave_coefficients(cur.t, cur.rho_hat, cur.nu, f, f0, params)
        if np.any(gzz <= 0.0):
            stop_reason = "hyperbolicity_loss"
            break
        speed = float(np.max(np.sqrt(gzz) + np.abs(g0z)))
        dt = min(controls.cfl * h / speed,
                 controls.growth_cap * (1.0 + f) / f0,
                 t_stop - cur.t)
        if dt < controls.dt_floor:
            stop_reason = "dt_underflow"
            break
        try:
            cur = _rk4_step(cur, dt, traj, params, controls.deriv)
        except HyperbolicityLossError:
            stop_reason = "hyperbolicity_loss"
            break
        except ValueError:
            stop_reason = "vacuum"
            break
        n_steps += 1
        dt_min, dt_max = min(dt_min, dt), max(dt_max, dt)
        if n_steps % out_every == 0 or cur.t >= t_stop * (1.0 - 1e-14):
            states.append(cur)
            _record(mon, cur, traj, params, controls.deriv)
    if stop_reason == "t_end" and f_cap is not None and t_stop < (t_end or math.inf):
        stop_reason = "f_cap"
    if states[-1] is not cur:
        states.append(cur)
        _record(mon, cur, traj, params, controls.deriv)
    return EvolveResult(states=states, monitors=mon, stop_reason=stop_reason,
                        n_steps=n_steps, dt_min=dt_min, dt_max=dt_max)


def _estimate_steps(state, traj, params, t_stop, controls, h) -> int:
    f = float(traj.f_at(state.t))
    f0 = float(traj.f0_at(state.t))
    gzz, g0z = wave_coefficients(state.t, state.rho_hat, state.nu, f, f0, params)
    speed = float(np.max(np.sqrt(np.maximum(gzz, 0.0)) + np.abs(g0z)))
    dt0 = controls.cfl * h / max(speed, 1e-30)
    # growth cap dominates late; ln-contrast span divided by per-step budget
    span = math.log1p(float(traj.f_at(t_stop))) - math.log1p(f)
    return max(2, int((t_stop - state.t) / dt0 + span / controls.growth_cap))


def _rk4_step(state: FieldState, dt: float, traj, params, deriv) -> FieldState:
    def as_vec(s):
        return s.rho_hat, s.drho_dt, s.nu

    def mk(t, r, rt, nu):
        return FieldState(t=t, zeta=state.zeta, rho_hat=r, drho_dt=rt, nu=nu,
                          psi=state.psi)

    t = state.t
    r0, rt0, nu0 = as_vec(state)
    k1 = rhs(state, traj, params, deriv)
    s2 = mk(t + 0.5 * dt, r0 + 0.5 * dt * k1[0], rt0 + 0.5 * dt * k1[1], nu0 + 0.5 * dt * k1[2])
    k2 = rhs(s2, traj, params, deriv)
    s3 = mk(t + 0.5 * dt, r0 + 0.5 * dt * k2[0], rt0 + 0.5 * dt * k2[1], nu0 + 0.5 * dt * k2[2])
    k3 = rhs(s3, traj, params, deriv)
    s4 = mk(t + dt, r0 + dt * k3[0], rt0 + dt * k3[1], nu0 + dt * k3[2])
    k4 = rhs(s4, traj, params, deriv)
    r = r0 + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    rt = rt0 + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    nu = nu0 + (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    t_new = t + dt
    f_new = float(traj.f_at(t_new))
    psi = compute_psi((r - f_new) / f_new)
    return FieldState(t=t_new, zeta=state.zeta, rho_hat=r, drho_dt=rt, nu=nu, psi=psi)
