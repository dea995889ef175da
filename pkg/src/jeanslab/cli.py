"""Command-line driver: reproducible runs, manifests, CSV/JSON artifacts.

Every subcommand writes a ``manifest.json`` (full configuration echo plus
environment versions) and a ``summary.json`` whose ``verdicts`` block maps
named invariants to booleans and whose ``digests`` block carries sha256 of
every data artifact.  Re-running from an emitted manifest reproduces the
verdicts and digests bit for bit.

Exit codes: 0 all verdicts pass, 1 invariant failure, 2 usage error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .contrast_ode import (ToleranceSpec, blowup_bracket, blowup_ladder,
                           bound_certificates, envelope_constants,
                           integrate_contrast, zero_trajectory)
from .fuchsian import (find_certified_radius, gamma_constants, q_lower_bound,
                       q_quantity, verify_conditions)
from .params import ModelParams, build_params, params_from_iota3, solve_iota
from .pde import (EvolveControls, data_smallness, entropy_field, evolve,
                  init_from_data)
from .reference import (background_state, euler_poisson_residual,
                        homogeneous_state, sample_annulus)
from .timemaps import check_G_decay, compute_diagnostics, compute_g


@dataclass
class RunConfig:
    command: str
    iota3: float | None = 0.2
    k_tilde: float | None = None
    beta: float = 0.1
    gamma: float = 0.5
    lam: float = 0.1
    A: float = 1.0
    profile: dict = field(default_factory=lambda: {"kind": "homogeneous", "eps": 0.0, "eps_v": 0.0})
    grid_n: int = 128
    f_cap: float = 1e6
    pde_f_cap: float = 1e3
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    cfl: float = 0.4
    growth_cap: float = 0.005
    n_fuchsian_samples: int = 2000
    output_dir: str = "runs/out"
    seed: int = 20240
    svg: bool = False
    force: bool = False  # admit iota^3 > 1/5, marked non-certified

    def to_params(self) -> ModelParams:
        if self.k_tilde is not None:
            return build_params(self.k_tilde, self.beta, self.gamma, self.lam,
                                self.A, force=self.force)
        return params_from_iota3(self.iota3, self.beta, self.gamma, self.lam,
                                 self.A, force=self.force)


_CONFIG_KEYS = set(RunConfig.__dataclass_fields__)


def load_config(path: str | Path, command: str | None = None) -> RunConfig:
    raw = json.loads(Path(path).read_text())
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # accept a manifest as a config source
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if command is not None:
        raw["command"] = command
    if "command" not in raw:
        raise ValueError("config missing 'command'")
    return RunConfig(**raw)


# ---------------------------------------------------------------------------
# artifact helpers


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([f"{v:.17g}" for v in row])


def write_svg_lines(path: Path, x: np.ndarray, series: dict[str, np.ndarray],
                    title: str = "", logy: bool = False) -> None:
    """Minimal standalone SVG polyline chart (data inspection, no dependencies)."""
    w_px, h_px, pad = 720, 420, 50
    xs = np.asarray(x, dtype=float)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}">',
             f'<text x="{w_px // 2}" y="20" text-anchor="middle">{title}</text>']
    ys_all = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    if logy:
        ys_all = np.log10(np.abs(ys_all[ys_all != 0.0]) + 1e-300)
    lo, hi = float(ys_all.min()), float(ys_all.max())
    if hi == lo:
        hi = lo + 1.0
    x0, x1 = float(xs.min()), float(xs.max())
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    for i, (name, ys) in enumerate(series.items()):
        ys = np.asarray(ys, dtype=float)
        if logy:
            ys = np.log10(np.abs(ys) + 1e-300)
        px = pad + (xs - x0) / (x1 - x0) * (w_px - 2 * pad)
        py = h_px - pad - (ys - lo) / (hi - lo) * (h_px - 2 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        c = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{pad}" y="{pad + 14 * i}" fill="{c}">{name}</text>')
    parts.append(f'<rect x="{pad}" y="{pad}" width="{w_px - 2 * pad}" height="{h_px - 2 * pad}" '
                 'fill="none" stroke="#888"/></svg>')
    path.write_text("\n".join(parts))


class RunDir:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.path = Path(cfg.output_dir)
        self.path.mkdir(parents=True, exist_ok=True)
        self.verdicts: dict[str, bool] = {}
        self.values: dict[str, object] = {}
        self.artifacts: list[Path] = []

    def manifest(self) -> None:
        import scipy

        doc = {
            "config": asdict(self.cfg),
            "package_version": __version__,
            "python_version": sys.version.split()[0],
            "numpy_version": np.__version__,
            "scipy_version": scipy.__version__,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        }
        (self.path / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True))

    def add_artifact(self, name: str) -> Path:
        p = self.path / name
        self.artifacts.append(p)
        return p

    def verdict(self, name: str, ok: bool) -> None:
        self.verdicts[name] = bool(ok)

    def finish(self) -> int:
        digests = {p.name: _sha256(p) for p in self.artifacts if p.exists()}
        summary = {
            "command": self.cfg.command,
            "verdicts": self.verdicts,
            "values": _jsonable(self.values),
            "digests": digests,
            "all_pass": all(self.verdicts.values()),
        }
        (self.path / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
        return 0 if summary["all_pass"] else 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


# ---------------------------------------------------------------------------
# profiles


def make_profiles(cfg: RunConfig, params: ModelParams):
    """Radial profile callables (d, v) for the configured initial data."""
    kind = cfg.profile.get("kind", "homogeneous")
    eps = float(cfg.profile.get("eps", 0.0))
    eps_v = float(cfg.profile.get("eps_v", 0.0))
    scale = (1.0 + params.beta) ** (1.0 / 3.0)

    def log_angle(r):
        return 2.0 * math.pi * np.log(scale * np.asarray(r, dtype=float))

    if kind == "homogeneous":
        return (lambda r: np.ones_like(np.asarray(r, float)),
                lambda r: -np.ones_like(np.asarray(r, float)))
    if kind == "cosine":
        return (lambda r: 1.0 + eps * np.cos(log_angle(r)),
                lambda r: -1.0 + eps_v * np.cos(log_angle(r)))
    if kind == "square":
        delta = float(cfg.profile.get("delta", 0.15))
        norm = math.tanh(1.0 / delta)

        def smooth_square(r):
            return np.tanh(np.cos(log_angle(r)) / delta) / norm

        return (lambda r: 1.0 + eps * smooth_square(r),
                lambda r: -1.0 + eps_v * smooth_square(r))
    if kind == "table":
        zs, ds, vs = np.loadtxt(cfg.profile["path"], delimiter=",", unpack=True, skiprows=1)

        def interp(vals):
            def fn(r):
                zeta = np.log(scale * np.asarray(r, dtype=float)) % 1.0
                return np.interp(zeta, zs, vals, period=1.0)
            return fn

        return interp(ds), interp(vs)
    raise ValueError(f"unknown profile kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommands


def _run_ode_pipeline(cfg: RunConfig, params: ModelParams):
    traj = integrate_contrast(params, f_cap=cfg.f_cap,
                              controls=ToleranceSpec(cfg.rel_tol, cfg.abs_tol))
    maps = compute_diagnostics(traj, compute_g(traj, params, refine=2), params,
                               thetas=(2.0,))
    return traj, maps


def cmd_iota(run: RunDir) -> None:
    k_grid = np.logspace(-8, 1, 50)
    iotas = np.array([solve_iota(k) for k in k_grid])
    resid = np.abs(iotas**3 + 9.0 * (k_grid / 6.0) ** (1.0 / 3.0) * iotas - 1.0)
    _write_csv(run.add_artifact("iota_scan.csv"), ["k_tilde", "iota", "residual"],
               [k_grid, iotas, resid])
    run.verdict("iota_cubic_residual_below_1e12", bool(resid.max() < 1e-12))
    run.verdict("iota_strictly_decreasing", bool(np.all(np.diff(iotas) < 0.0)))
    run.verdict("iota_small_k_limit", bool(abs(solve_iota(1e-12) - 1.0) < 1e-3))
    run.values["iota_at_1e-12"] = solve_iota(1e-12)
    if run.cfg.svg:
        write_svg_lines(run.add_artifact("iota.svg"), np.log10(k_grid),
                        {"iota": iotas}, title="iota vs log10 k_tilde")


def cmd_ode(run: RunDir) -> None:
    params = run.cfg.to_params()
    traj, maps = _run_ode_pipeline(run.cfg, params)
    eta2 = maps.eta[2.0]
    _write_csv(run.add_artifact("trajectory.csv"),
               ["t", "f", "f0", "g", "tau", "chi", "xi", "G_frak", "eta_2"],
               [maps.t_grid, maps.f, maps.f0, maps.g, maps.tau, maps.chi,
                maps.xi, maps.G_frak, eta2])
    ec = envelope_constants(params)
    t_star, t_star_up = blowup_bracket(params)
    est, spread = blowup_ladder(traj)
    sidecar = {
        "A": ec.cA, "B": ec.cB, "C": ec.cC, "D": ec.cD, "E": ec.cE,
        "t_star": t_star, "t_star_upper": t_star_up,
        "t_m_estimate": est, "ladder_spread": spread,
    }
    p = run.add_artifact("constants.json")
    p.write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True))
    # identity verdicts along the trajectory
    a, b, c, A, B = params.ode_a, params.ode_b, params.ode_c, params.A, params.B
    f0_pred = (1.0 / B) * maps.t_grid**-a * maps.g ** (-b / A) * (1.0 + maps.f) ** c
    rel_f0 = float(np.max(np.abs(f0_pred - maps.f0) / maps.f0))
    lhs = maps.f0**2 / (1.0 + maps.f) ** 2
    rhs = maps.f * maps.chi / (B * maps.t_grid**2)
    rel_limf = float(np.max(np.abs(lhs - rhs) / rhs))
    run.verdict("contrast_rate_identity_rel_1e-4", rel_f0 < 1e-4)
    run.verdict("terminal_rate_identity_rel_1e-4", rel_limf < 1e-4)
    run.verdict("g_representation_agreement_rel_1e-4", maps.representation_gap < 1e-4)
    gd = check_G_decay(maps, params)
    run.verdict("G_decay_exponent_ge_0.4", gd.slope >= 0.4)
    run.verdict("dchi_identity_rel_1e-3", gd.dchi_rel_err < 1e-3)
    run.values.update({
        "t_m_estimate": est, "ladder_spread": spread, "t_star": t_star,
        "t_star_upper": t_star_up, "g_end": float(maps.g[-1]),
        "G_decay_slope": gd.slope, "dchi_rel_err": gd.dchi_rel_err,
        "f0_identity_rel": rel_f0, "limf_identity_rel": rel_limf,
        "g_representation_gap": maps.representation_gap,
    })
    if run.cfg.svg:
        write_svg_lines(run.add_artifact("contrast.svg"), maps.t_grid,
                        {"f": maps.f}, title="contrast growth", logy=True)


def cmd_blowup(run: RunDir) -> None:
    params = run.cfg.to_params()
    traj, maps = _run_ode_pipeline(run.cfg, params)
    rep = bound_certificates(traj, params)
    est, spread = blowup_ladder(traj)
    t = traj.t_grid
    ec = rep.constants
    lower = np.exp(ec.cC * t**ec.p_plus + ec.cD / t)
    _write_csv(run.add_artifact("envelopes.csv"),
               ["t", "one_plus_f", "lower_envelope",
                "lower_ok", "upper_ok", "improved_ok"],
               [t, 1.0 + traj.f, lower, rep.lower_ok.astype(float),
                rep.upper_ok.astype(float), rep.improved_ok.astype(float)])
    contained = (rep.t_star <= est < (rep.t_star_upper or math.inf))
    doc = {
        "t_star": rep.t_star, "t_star_upper": rep.t_star_upper,
        "t_m_estimate": est, "ladder_spread": spread,
        "improved_bound_applicable": rep.improved_applicable,
        "first_violation": rep.first_violation,
    }
    run.add_artifact("blowup.json").write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True))
    run.verdict("envelopes_hold_everywhere", rep.all_ok)
    run.verdict("estimate_inside_bracket", bool(contained))
    run.verdict("ladder_spread_below_1e-3", bool(spread < 1e-3))
    run.values.update(doc)


def cmd_residuals(run: RunDir) -> None:
    params = run.cfg.to_params()
    family = run.cfg.profile.get("family", "both")
    pts = sample_annulus(32, seed=run.cfg.seed)
    t_values = [1.2, 1.5, 2.0]
    out = {}
    if family in ("background", "both"):
        ztraj = zero_trajectory(params)
        rep = euler_poisson_residual(lambda t, x: background_state(t, x, params),
                                     t_values, pts, ztraj, params)
        out["background"] = {"max_norms": rep.max_norms, "verdict": rep.verdict,
                             "source_gap_max": rep.source_gap_max}
        run.verdict("background_residuals_below_1e-6", rep.verdict)
    if family in ("homogeneous", "both"):
        traj, _ = _run_ode_pipeline(run.cfg, params)
        rep = euler_poisson_residual(lambda t, x: homogeneous_state(t, x, traj, params),
                                     t_values, pts, traj, params)
        out["homogeneous"] = {"max_norms": rep.max_norms, "verdict": rep.verdict,
                              "source_gap_max": rep.source_gap_max}
        run.verdict("homogeneous_residuals_below_1e-6", rep.verdict)
    run.add_artifact("residuals.json").write_text(json.dumps(_jsonable(out), indent=2, sort_keys=True))
    run.values.update(out)


def cmd_simulate(run: RunDir) -> None:
    cfg = run.cfg
    params = cfg.to_params()
    traj = integrate_contrast(params, f_cap=max(10.0 * cfg.pde_f_cap, cfg.f_cap),
                              controls=ToleranceSpec(cfg.rel_tol, cfg.abs_tol))
    d_prof, v_prof = make_profiles(cfg, params)
    state0 = init_from_data(params, d_prof, v_prof, cfg.grid_n)
    run.values["data_smallness"] = data_smallness(state0, params)
    controls = EvolveControls(cfl=cfg.cfl, growth_cap=cfg.growth_cap)
    res = evolve(state0, traj, params, f_cap=cfg.pde_f_cap, controls=controls)

    snaps = run.path / "snapshots"
    snaps.mkdir(exist_ok=True)
    stride = max(1, len(res.states) // 20)
    for i, st in enumerate(res.states[::stride]):
        s_field = entropy_field(st, traj, params)
        p = snaps / f"snap_{i:04d}.csv"
        _write_csv(p, ["zeta", "rho_hat", "drho_dt", "nu", "psi", "s"],
                   [st.zeta, st.rho_hat, st.drho_dt, st.nu, st.psi, s_field])
        run.artifacts.append(p)
    mon = res.monitors.as_arrays()
    _write_csv(run.add_artifact("monitors.csv"),
               list(mon.keys()), list(mon.values()))

    dev_rho = max(float(np.max(np.abs(s.rho_hat - traj.f_at(s.t)))) for s in res.states)
    dev_nu = max(float(np.max(np.abs(s.nu))) for s in res.states)
    run.values.update({
        "stop_reason": res.stop_reason, "n_steps": res.n_steps,
        "final_t": res.final.t, "final_f": float(traj.f_at(res.final.t)),
        "homogeneous_deviation": dev_rho, "nu_sup": dev_nu,
        "continuity_residual_max": float(max(res.monitors.continuity_residual)),
    })
    run.verdict("run_completed", res.stop_reason in ("t_end", "f_cap"))
    run.verdict("hyperbolicity_preserved", res.stop_reason != "hyperbolicity_loss")
    run.verdict("continuity_identity_small",
                max(res.monitors.continuity_residual) < 1e-4)
    if cfg.profile.get("kind") == "homogeneous":
        run.verdict("homogeneous_manifold_dev_below_1e-6", dev_rho < 1e-6)
        run.verdict("homogeneous_nu_below_1e-8", dev_nu < 1e-8)
    if run.cfg.svg:
        write_svg_lines(run.add_artifact("monitors.svg"), mon["t"],
                        {"ratio_rho_max": mon["ratio_rho_max"],
                         "ratio_rho_min": mon["ratio_rho_min"]},
                        title="contrast ratio envelope")


def cmd_fuchsian(run: RunDir) -> None:
    cfg = run.cfg
    params = cfg.to_params()
    traj = integrate_contrast(params, f_cap=max(cfg.f_cap, 1e8),
                              controls=ToleranceSpec(cfg.rel_tol, cfg.abs_tol))
    maps = compute_diagnostics(traj, compute_g(traj, params, refine=2), params)
    g_range = (float(np.min(maps.G_frak)), float(np.max(maps.G_frak)))
    gc = gamma_constants(params, g_range)
    r_tilde = find_certified_radius(params, maps, gc, seed=cfg.seed)
    rep = verify_conditions(params, maps, gc, r_tilde,
                            n_samples=cfg.n_fuchsian_samples, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    pairs = [(10 ** rng.uniform(-3, 1), rng.uniform(1e-4, 0.2)) for _ in range(100)]
    q_ok = all(q_quantity(lam_, i3_) > q_lower_bound(lam_, i3_) for lam_, i3_ in pairs)
    doc = {
        "constants": asdict(gc), "r_tilde": r_tilde,
        "verdicts": rep.verdict, "sandwich_margin": rep.sandwich_margin,
        "eig_B0_range": rep.eig_B0_range, "eig_frakB_range": rep.eig_frakB_range,
        "max_sum_abs_z": rep.max_sum_abs_z, "divB_orders": rep.divB_orders,
        "G_halforder_sup": rep.G_halforder_sup,
        "q_positivity_100_samples": q_ok,
        "projector_note": rep.p_trivial_note,
    }
    run.add_artifact("fuchsian.json").write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True))
    for k, v in rep.verdict.items():
        run.verdict(f"fuchsian_{k}", v)
    run.verdict("fuchsian_q_positivity", q_ok)
    run.values.update(doc)


def cmd_report(run: RunDir) -> None:
    """Desk-scale sweep of every pipeline with a combined verdict set."""
    cfg = run.cfg
    sub_cfgs = {
        "iota": cmd_iota,
        "ode": cmd_ode,
        "blowup": cmd_blowup,
        "residuals": cmd_residuals,
    }
    for name, fn in sub_cfgs.items():
        fn(run)
    small = RunConfig(**{**asdict(cfg), "command": "simulate", "grid_n": 64,
                         "pde_f_cap": 50.0,
                         "profile": {"kind": "cosine", "eps": 1e-3},
                         "output_dir": str(run.path)})
    sub = RunDir(small)
    sub.verdicts, sub.values, sub.artifacts = run.verdicts, {}, run.artifacts
    cmd_simulate(sub)
    run.values["simulate"] = _jsonable(sub.values)
    fu = RunDir(RunConfig(**{**asdict(cfg), "command": "fuchsian-check",
                             "n_fuchsian_samples": 500,
                             "output_dir": str(run.path)}))
    fu.verdicts, fu.values, fu.artifacts = run.verdicts, {}, run.artifacts
    cmd_fuchsian(fu)
    run.values["fuchsian"] = _jsonable(fu.values)


_COMMANDS = {
    "iota": cmd_iota,
    "ode": cmd_ode,
    "blowup": cmd_blowup,
    "residuals": cmd_residuals,
    "simulate": cmd_simulate,
    "fuchsian-check": cmd_fuchsian,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="jeanslab",
        description="Gravitational-instability laboratory: contrast blowup, "
                    "log-periodic evolution, and coefficient certification.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="JSON config (a manifest.json also works)")
        p.add_argument("--output-dir", type=str, default=None)
        p.add_argument("--iota3", type=float, default=None)
        p.add_argument("--k-tilde", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--lam", type=float, default=None)
        p.add_argument("--A", dest="A", type=float, default=None)
        p.add_argument("--grid-n", type=int, default=None)
        p.add_argument("--f-cap", type=float, default=None)
        p.add_argument("--pde-f-cap", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--profile-kind", type=str, default=None,
                       choices=["homogeneous", "cosine", "square", "table"])
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--family", type=str, default=None,
                       choices=["background", "homogeneous", "both"])
        p.add_argument("--svg", action="store_true", default=None)
        p.add_argument("--force", action="store_true", default=None,
                       help="admit iota^3 > 1/5 (results marked non-certified)")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        cfg = load_config(args.config, command=args.command)
    else:
        cfg = RunConfig(command=args.command)
    override_map = {
        "output_dir": args.output_dir, "iota3": args.iota3, "beta": args.beta,
        "gamma": args.gamma, "lam": args.lam, "A": args.A, "grid_n": args.grid_n,
        "f_cap": args.f_cap, "pde_f_cap": args.pde_f_cap, "seed": args.seed,
        "svg": args.svg, "force": args.force,
    }
    for k, v in override_map.items():
        if v is not None:
            setattr(cfg, k, v)
    if args.k_tilde is not None:
        cfg.k_tilde = args.k_tilde
        cfg.iota3 = None
    if args.profile_kind is not None:
        cfg.profile = dict(cfg.profile)
        cfg.profile["kind"] = args.profile_kind
    if args.eps is not None:
        cfg.profile = dict(cfg.profile)
        cfg.profile["eps"] = args.eps
    if args.family is not None:
        cfg.profile = dict(cfg.profile)
        cfg.profile["family"] = args.family
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    run = RunDir(cfg)
    run.manifest()
    try:
        _COMMANDS[cfg.command](run)
    except (ValueError, TypeError) as exc:
        (run.path / "error.json").write_text(json.dumps({"error": str(exc), "kind": "usage"}))
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        (run.path / "error.json").write_text(json.dumps({"error": str(exc), "kind": "numerical"}))
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return run.finish()


if __name__ == "__main__":
    raise SystemExit(main())
