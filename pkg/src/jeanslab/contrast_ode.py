"""Blowup ODE for the homogeneous density contrast f(t).

The contrast of the reference solution solves

    f'' + (a/t) f' - (b/t^2) f (1+f) - c (f')^2 / (1+f) = 0,
    f(t0) = beta,  f'(t0) = beta0 = 3 (1+beta) gamma,

with (a, b, c) = (4/3, 2/3, 4/3).  We integrate y = ln(1+f) instead of f:
the derivative-quadratic term becomes polynomial in y' and the solution,
which grows faster than exponentially, stays representable up to very large
contrast caps.  In the y variable the equation reads

    y'' = -(a/t) y' + (b/t^2) (e^y - 1) + (c - 1) (y')^2.

Everything downstream (time maps, PDE coefficients, bound certificates) is
driven by the dense output stored on the returned trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .params import ModelParams


@dataclass(frozen=True)
class ToleranceSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    t_ceiling: float = 1e6


@dataclass
class OdeTrajectory:
    """Dense-output record of one contrast integration.

    ``t_grid`` holds the accepted solver steps; ``f_at`` / ``f0_at`` evaluate
    the dense output anywhere inside [t0, t_end].
    """

    params: ModelParams
    t_grid: np.ndarray
    f: np.ndarray
    f0: np.ndarray
    f_cap: float
    t_end: float
    reached_cap: bool
    t_m_estimate: float = math.inf
    _sol: object = field(default=None, repr=False)

    def _y(self, t):
        return self._sol(t)

    def f_at(self, t):
        """Contrast f(t) from dense output (scalar or array t)."""
        return np.expm1(self._sol(np.asarray(t))[0])

    def f0_at(self, t):
        """Derivative f'(t) from dense output."""
        y, yp = self._sol(np.asarray(t))
        return yp * np.exp(y)

    def time_of_contrast(self, f_target: float) -> float:
        """Smallest t with f(t) = f_target (f is strictly increasing)."""
        lo, hi = self.f[0], self.f[-1]
        if f_target < lo * (1.0 - 1e-9) or f_target > hi * (1.0 + 1e-9):
            raise ValueError(f"contrast {f_target!r} outside computed range "
                             f"[{lo:.6g}, {hi:.6g}]")
        f_target = min(max(f_target, lo), hi)
        if f_target == hi:
            return self.t_end
        y_t = math.log1p(f_target)
        return brentq(lambda t: self._sol(t)[0] - y_t, self.t_grid[0], self.t_end,
                      xtol=1e-14, rtol=8.9e-16)


class _ZeroSol:
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros((2,) + t.shape)


def zero_trajectory(params: ModelParams, t_end: float = 1e9) -> OdeTrajectory:
    """Trajectory of the unperturbed background family: f = f' = 0 for all t.

    The exact background universe is the beta = gamma = 0 member, for which
    the source terms carry f = 0; residual checks of that solution consume
    this trivial trajectory.
    """
    t_grid = np.array([params.t0, t_end])
    return OdeTrajectory(
        params=params, t_grid=t_grid, f=np.zeros(2), f0=np.zeros(2),
        f_cap=0.0, t_end=t_end, reached_cap=False, _sol=_ZeroSol(),
    )


def _rhs_y(t, y, a, b, c):
    return (y[1], -(a / t) * y[1] + (b / t**2) * np.expm1(y[0]) + (c - 1.0) * y[1] ** 2)


def integrate_contrast(
    params: ModelParams,
    f_cap: float = 1e6,
    controls: ToleranceSpec = ToleranceSpec(),
) -> OdeTrajectory:
    """Integrate the contrast ODE adaptively until f >= f_cap or the ceiling.

    Uses an embedded Runge-Kutta pair with dense output; the cap crossing is
    located by a terminal event on y = ln(1+f).  Positivity of f and f' on
    every accepted step is asserted (an interior violation would contradict
    the monotonicity of the contrast and signals an integration fault).
    """
    if not f_cap > params.beta:
        raise ValueError(f"f_cap must exceed beta, got {f_cap!r} <= {params.beta!r}")
    a, b, c = params.ode_a, params.ode_b, params.ode_c
    y0 = (math.log1p(params.beta), params.beta0 / (1.0 + params.beta))
    y_cap = math.log1p(f_cap)

    def hit_cap(t, y, *args):
        return y[0] - y_cap

    hit_cap.terminal = True
    hit_cap.direction = 1

    sol = solve_ivp(
        _rhs_y, (params.t0, controls.t_ceiling), y0, args=(a, b, c),
        method="RK45", rtol=controls.rel_tol, atol=controls.abs_tol,
        dense_output=True, events=hit_cap,
    )
    if sol.status < 0:
        raise RuntimeError(f"stiffness failure: integrator stopped at t={sol.t[-1]:.12g} "
                           f"with f={math.expm1(sol.y[0, -1]):.6g}: {sol.message}")
    reached_cap = sol.status == 1
    t_grid = sol.t
    f_grid = np.expm1(sol.y[0])
    f0_grid = sol.y[1] * np.exp(sol.y[0])
    if np.any(f_grid <= 0.0) or np.any(f0_grid <= 0.0):
        raise RuntimeError("internal-consistency error: f or f' non-positive on an "
                           "accepted step (contradicts positivity of the contrast)")
    traj = OdeTrajectory(
        params=params, t_grid=t_grid, f=f_grid, f0=f0_grid,
        f_cap=f_cap, t_end=float(t_grid[-1]), reached_cap=reached_cap, _sol=sol.sol,
    )
    if reached_cap:
        traj.t_m_estimate = estimate_blowup_time(traj)
    return traj


def rk4_reference(params: ModelParams, t_end: float, n_steps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed-step classical RK4 integration of the same ODE in y = ln(1+f).

    Independent oracle for cross-validating the adaptive path; returns
    (t, f, f0) on the uniform grid.
    """
    a, b, c = params.ode_a, params.ode_b, params.ode_c
    t = np.linspace(params.t0, t_end, n_steps + 1)
    h = (t_end - params.t0) / n_steps
    y = np.empty((n_steps + 1, 2))
    y[0] = (math.log1p(params.beta), params.beta0 / (1.0 + params.beta))
    for k in range(n_steps):
        tk, yk = t[k], y[k]
        k1 = np.asarray(_rhs_y(tk, yk, a, b, c))
        k2 = np.asarray(_rhs_y(tk + 0.5 * h, yk + 0.5 * h * k1, a, b, c))
        k3 = np.asarray(_rhs_y(tk + 0.5 * h, yk + 0.5 * h * k2, a, b, c))
        k4 = np.asarray(_rhs_y(tk + h, yk + h * k3, a, b, c))
        y[k + 1] = yk + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    f = np.expm1(y[:, 0])
    return t, f, y[:, 1] * (1.0 + f)


@dataclass(frozen=True)
class EnvelopeConstants:
    """Data-dependent constants of the contrast envelopes.

    ``a_bar = 1 - a``, ``c_bar = 1 - c`` and ``triangle = sqrt((1-a)^2 + 4b)``
    together with the five envelope constants; cA and cB shape the algebraic
    bracket whose first root past t0 is t_star, cE the improved lower bound
    whose root (when the data is supercritical) caps the blowup time.
    """

    a_bar: float
    c_bar: float
    triangle: float
    cA: float
    cB: float
    cC: float
    cD: float
    cE: float

    @property
    def p_minus(self) -> float:
        return 0.5 * (self.a_bar - self.triangle)

    @property
    def p_plus(self) -> float:
        return 0.5 * (self.a_bar + self.triangle)

    def bracket_fn(self, t):
        return self.cA * t**self.p_minus + self.cB * t**self.p_plus + 1.0


def envelope_constants(params: ModelParams) -> EnvelopeConstants:
    a, b, c = params.ode_a, params.ode_b, params.ode_c
    a_bar = 1.0 - a
    c_bar = 1.0 - c
    tri = math.sqrt((1.0 - a) ** 2 + 4.0 * b)
    t0, beta, beta0 = params.t0, params.beta, params.beta0
    p_minus = 0.5 * (a_bar - tri)
    p_plus = 0.5 * (a_bar + tri)
    cA = (t0**-p_minus / tri) * (t0 * beta0 / (1.0 + beta) ** 2
                                 - p_plus * beta / (1.0 + beta))
    cB = (t0**-p_plus / tri) * (p_minus * beta / (1.0 + beta)
                                - t0 * beta0 / (1.0 + beta) ** 2)
    cC = (2.0 / (2.0 + a_bar + tri)) * (
        math.log1p(beta) + (p_plus / b) * t0 * beta0 / (1.0 + beta)
    ) * t0**-p_plus
    cD = ((a_bar + tri) / (2.0 + a_bar + tri)) * (
        math.log1p(beta) - t0 * beta0 / (b * (1.0 + beta))
    ) * t0
    cE = c_bar * beta0 * t0 ** (1.0 - a_bar) / (a_bar * (1.0 + beta))
    out = EnvelopeConstants(a_bar, c_bar, tri, cA, cB, cC, cD, cE)
    assert out.cB < 0.0 and out.cC > 0.0 and out.cE > 0.0
    return out


def blowup_bracket(params: ModelParams, search_ceiling: float = 1e12) -> tuple[float, float | None]:
    """Bracket [t_star, t_star_upper) for the blowup time.

    t_star is the first root past t0 of the algebraic bracket function,
    located by geometric scan plus bisection to 1e-10 relative.  The upper
    end exists only for supercritical data beta0 > a_bar (1+beta)/(c_bar t0)
    (gamma > 1/3 at t0 = 1) and is closed form.
    """
    ec = envelope_constants(params)
    t = params.t0
    fac = 1.0 + 2.0 ** -6
    t_hi = t * fac
    while ec.bracket_fn(t_hi) > 0.0:
        t, t_hi = t_hi, t_hi * fac
        fac = min(fac * fac, 2.0)
        if t_hi > search_ceiling:
            raise RuntimeError(f"no bracket: no sign change of the envelope "
                               f"denominator below t={search_ceiling:.3g}")
    t_star = brentq(ec.bracket_fn, t, t_hi, xtol=1e-13, rtol=1e-11)
    supercritical = params.beta0 > ec.a_bar * (1.0 + params.beta) / (ec.c_bar * params.t0)
    t_star_upper = None
    if supercritical and params.t0**ec.a_bar > 1.0 / ec.cE:
        t_star_upper = (params.t0**ec.a_bar - 1.0 / ec.cE) ** (1.0 / ec.a_bar)
    return t_star, t_star_upper


@dataclass
class BoundReport:
    """Per-grid-point envelope certificates of the contrast bounds."""

    constants: EnvelopeConstants
    t_star: float
    t_star_upper: float | None
    lower_ok: np.ndarray
    upper_ok: np.ndarray
    improved_ok: np.ndarray
    improved_applicable: bool
    first_violation: tuple[str, float] | None

    @property
    def all_ok(self) -> bool:
        return bool(self.lower_ok.all() and self.upper_ok.all() and self.improved_ok.all())


def bound_certificates(traj: OdeTrajectory, params: ModelParams) -> BoundReport:
    """Check the lower/upper/improved envelopes at every accepted grid point.

    The upper bound applies on (t0, t_star) only; the improved lower bound
    only when its data hypothesis holds.  At t0 the lower bound degenerates
    to equality by construction, so the strict check starts past t0.
    """
    ec = envelope_constants(params)
    t_star, t_star_up = blowup_bracket(params)
    t = traj.t_grid
    one_pf = 1.0 + traj.f
    interior = t > params.t0 * (1.0 + 1e-12)

    lower_env = np.exp(ec.cC * t**ec.p_plus + ec.cD / t)
    lower_ok = ~interior | (lower_env < one_pf)

    upper_ok = np.ones_like(lower_ok)
    on_window = interior & (t < t_star)
    denom = ec.bracket_fn(t[on_window])
    upper_ok[on_window] = one_pf[on_window] < 1.0 / denom

    supercritical = params.beta0 > ec.a_bar * (1.0 + params.beta) / (ec.c_bar * params.t0)
    improved_ok = np.ones_like(lower_ok)
    if supercritical:
        base = 1.0 - ec.cE * params.t0**ec.a_bar + ec.cE * t**ec.a_bar
        improved_env = (1.0 + params.beta) * base ** (1.0 / ec.c_bar)
        improved_ok = ~interior | (improved_env < one_pf)

    first = None
    for name, ok in (("lower", lower_ok), ("upper", upper_ok), ("improved", improved_ok)):
        bad = np.flatnonzero(~ok)
        if bad.size:
            cand = (name, float(t[bad[0]]))
            if first is None or cand[1] < first[1]:
                first = cand
    return BoundReport(
        constants=ec, t_star=t_star, t_star_upper=t_star_up,
        lower_ok=lower_ok, upper_ok=upper_ok, improved_ok=improved_ok,
        improved_applicable=supercritical, first_violation=first,
    )


def estimate_blowup_time(traj: OdeTrajectory, n_rungs: int = 5) -> float:
    """Blowup time by geometric-ladder extrapolation of cap-crossing times.

    The crossing times t_k of f = f_cap / 2^k behave like t_m - C f^{-q};
    halving the contrast multiplies the distance to t_m by 2^q, so from three
    consecutive rungs r = (t2 - t1)/(t3 - t2) = 2^q and

        t_m = t3 + (t3 - t2) / (r - 1).

    The returned estimate is the extrapolant from the last triplet; the
    spread across all triplets is available via :func:`blowup_ladder`.
    """
    est, _spread = blowup_ladder(traj, n_rungs)
    return est


def blowup_ladder(traj: OdeTrajectory, n_rungs: int = 5) -> tuple[float, float]:
    """Return (t_m estimate, relative spread of the triplet extrapolants)."""
    if not traj.reached_cap:
        raise RuntimeError("no blowup detected in window: trajectory never reached f_cap")
    caps = traj.f_cap / 2.0 ** np.arange(n_rungs - 1, -1, -1)
    times = np.array([traj.time_of_contrast(c) for c in caps])
    ests = []
    for i in range(len(times) - 2):
        t1, t2, t3 = times[i], times[i + 1], times[i + 2]
        r = (t2 - t1) / (t3 - t2)
        if r <= 1.0:
            continue
        ests.append(t3 + (t3 - t2) / (r - 1.0))
    if not ests:
        raise RuntimeError("no blowup detected in window: extrapolation ladder degenerate")
    est = ests[-1]
    spread = (max(ests) - min(ests)) / est
    return float(est), float(spread)
