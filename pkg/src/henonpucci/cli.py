"""Command-line front end: ``henon-pucci <command> [options]``.

Commands: ``solve-annulus``, ``solve-exterior``, ``phase-portrait`` and
``check-invariants``. Options may come from ``--config file.ini``; flags
given on the command line override the file. Output goes to ``--out``,
else ``$HENON_PUCCI_OUT``, else ``./henon_pucci_out``.

Exit codes: 0 success, 1 failed invariant check, 2 invalid input,
3 solver found no bracket or transition.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .energy import growth_bound_at_tau, monotonicity_audit, small_delta_bound
from .io import (
    PROFILE_COLUMNS,
    STATIONARY_COLUMNS,
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    ConfigError,
    RunConfig,
    check_params,
    load_config,
    output_dir,
    profile_rows,
    stationary_dict,
    stationary_rows,
    trajectory_rows,
    write_csv,
    write_json,
)
from .ivp import IntegrationError, ShootingInput, equation_residual, integrate_ivp, negate_profile, residual_audit
from .phase import (
    EV_SECTION,
    Classification,
    PhaseConfig,
    PrecisionLoss,
    _field,
    blowup_bound_2Q,
    branch_field,
    flow_direction_audit,
    geometry,
    integrate_phase,
    numerical_jacobian,
    poincare_return,
    stable_manifold_A0,
    stationary_points,
    to_phase,
    unstable_manifold_O,
    z0_value,
)
from .pucci import ProblemParams, derive_exponents, singular_solution
from .shooting import (
    AnnulusRequest,
    BracketFailure,
    ClassifierConfig,
    DecayClass,
    ExteriorRequest,
    InvalidAnnulus,
    NoTransitionFound,
    classify_decay,
    explore_D,
    find_fast_decay_delta,
    phase_start,
    solve_annulus,
    solve_negative,
)
from .svg import curve, portrait_window, render_portrait

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3

# flag dest -> RunConfig attribute
_OVERRIDES = {
    "operator": "operator", "lam": "lam", "Lam": "Lam", "N": "N", "p": "p", "a": "a",
    "inner": "inner", "outer": "outer", "R": "R", "rel_tol": "rel_tol", "abs_tol": "abs_tol",
    "event_tol": "event_tol", "r_max": "r_max", "max_steps": "max_steps",
    "boundary_tol": "boundary_tol", "delta_rtol": "delta_rtol", "mode": "mode", "delta": "delta",
    "sweep_lo": "sweep_lo", "sweep_hi": "sweep_hi", "sweep_n": "sweep_n", "workers": "workers",
    "fan": "fan", "flow_samples": "flow_samples", "seed": "seed", "negative": "negative", "out": "out",
}


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("problem")
    g.add_argument("--config", help="INI file with [problem], [geometry], [solver], ... sections")
    g.add_argument("--operator", choices=["plus", "minus"])
    g.add_argument("--lambda", dest="lam", type=float, help="lower ellipticity constant")
    g.add_argument("--Lambda", dest="Lam", type=float, help="upper ellipticity constant")
    g.add_argument("--N", type=int, help="dimension")
    g.add_argument("--p", type=float, help="exponent")
    g.add_argument("--a", type=float, help="weight power")
    g = p.add_argument_group("geometry")
    g.add_argument("--inner", type=float, help="inner radius")
    g.add_argument("--outer", type=float, help="outer radius (annulus)")
    g.add_argument("--R", type=float, help="exterior radius")
    g = p.add_argument_group("solver")
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--abs-tol", dest="abs_tol", type=float)
    g.add_argument("--event-tol", dest="event_tol", type=float)
    g.add_argument("--r-max", dest="r_max", type=float)
    g.add_argument("--max-steps", dest="max_steps", type=int)
    g.add_argument("--seed", type=int, help="seed for random sampling")
    g.add_argument("--negative", action="store_const", const=True, default=None,
                   help="negative solution via the operator swap")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="henon-pucci", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-annulus", help="positive radial solution in an annulus")
    _common(p)
    p.add_argument("--boundary-tol", dest="boundary_tol", type=float)

    p = sub.add_parser("solve-exterior", help="exterior domain: fast-decay slope, one slope, or a sweep")
    _common(p)
    p.add_argument("--mode", help="fast | delta | delta=<value> | sweep")
    p.add_argument("--delta", type=float, help="slope for --mode delta")
    p.add_argument("--delta-rtol", dest="delta_rtol", type=float)
    p.add_argument("--sweep-lo", dest="sweep_lo", type=float)
    p.add_argument("--sweep-hi", dest="sweep_hi", type=float)
    p.add_argument("--sweep-n", dest="sweep_n", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("phase-portrait", help="SVG portrait and tables of the phase plane")
    _common(p)
    p.add_argument("--fan", type=int, help="number of sample trajectories")

    p = sub.add_parser("check-invariants", help="run the audit suite, exit 1 on any failure")
    _common(p)
    p.add_argument("--delta", type=float, help="shooting slope of the audited profile")
    p.add_argument("--flow-samples", dest="flow_samples", type=int)
    return ap


def build_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    for dest, attr in _OVERRIDES.items():
        v = getattr(args, dest, None)
        if v is not None:
            setattr(cfg, attr, v)
    mode = str(cfg.mode)
    if mode.startswith("delta="):
        try:
            cfg.delta = float(mode.split("=", 1)[1])
        except ValueError:
            raise ConfigError(f"--mode: bad slope in {mode!r}") from None
        cfg.mode = "delta"
    if cfg.mode not in ("fast", "delta", "sweep"):
        raise ConfigError(f"--mode must be fast, delta or sweep, got {cfg.mode!r}")
    return cfg


def _header(command: str, cfg: RunConfig, params: ProblemParams) -> dict:
    return {"command": command, "version": __version__, "params": params.to_dict(),
            "derived": derive_exponents(params), "run_config": cfg.to_dict(), "seed": cfg.seed}


def _integrator_dict(cfg: RunConfig, inner: float) -> dict:
    ic = cfg.integrator()
    r_max, ev = ic.resolve(inner)
    return {**ic.to_dict(), "r_max_resolved": r_max, "event_tol_resolved": ev}


# ---------------------------------------------------------------- commands


def cmd_solve_annulus(cfg: RunConfig, out: Path) -> int:
    cfg.validate_geometry("annulus")
    params = check_params(cfg)
    summary = _header("solve-annulus", cfg, params)
    summary["geometry"] = {"inner": cfg.inner, "outer": cfg.outer}
    try:
        req = AnnulusRequest(params, cfg.inner, cfg.outer, cfg.boundary_tol)
    except InvalidAnnulus as exc:
        raise ConfigError(f"[geometry] {exc}") from None
    ic = cfg.integrator()
    try:
        rep = solve_negative(req, ic) if cfg.negative else solve_annulus(req, ic)
    except BracketFailure as exc:
        write_csv(out / "bracket.csv", ("delta", "rho"), exc.sweep)
        summary["error"] = str(exc)
        write_json(out / "summary.json", summary)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    prof = rep.profile
    # audits run on the positive solution of the operator actually integrated
    pos = negate_profile(prof, params.swapped()) if rep.negative else prof
    mono = monotonicity_audit(pos)
    resid = residual_audit(prof)
    inner_u = pos.u[1:-1]
    audit = {
        "energy_monotonicity": mono,
        "equation_residual_max": resid,
        "interior_positive": bool(np.all(inner_u > 0)),
        "maximum_count": int(np.sum(np.diff(np.sign(pos.uprime[np.abs(pos.uprime) > 0])) != 0)),
    }
    summary.update({
        "found_delta": rep.found_delta, "boundary_residual": rep.boundary_residual,
        "negative": rep.negative, "tau": prof.tau, "u_tau": prof.u_tau,
        "diagnostics": rep.diagnostics, "integrator": _integrator_dict(cfg, cfg.inner),
        "n_samples": len(prof),
    })
    write_csv(out / "bracket.csv", ("delta", "rho"), rep.bracket_history)
    write_csv(out / "profile.csv", PROFILE_COLUMNS, profile_rows(prof) if not rep.negative
              else _negated_rows(prof))
    write_json(out / "audit.json", audit)
    write_json(out / "summary.json", summary)
    print(f"delta = {rep.found_delta!r}  |u(outer)| = {rep.boundary_residual:.3e}  -> {out}")
    return EXIT_OK


def _negated_rows(prof):
    """Profile rows of a negative solution; phase columns use ``|u|``."""
    rows = profile_rows(negate_profile(prof))
    return [(r, -u, -up, x, z, e, E) for r, u, up, x, z, e, E in rows]


def cmd_solve_exterior(cfg: RunConfig, out: Path) -> int:
    cfg.validate_geometry("exterior")
    params = check_params(cfg)
    R = cfg.R
    summary = _header("solve-exterior", cfg, params)
    summary["geometry"] = {"R": R}
    summary["mode"] = cfg.mode
    summary["integrator"] = _integrator_dict(cfg, R)
    ic = cfg.integrator()
    classifier = ClassifierConfig()
    summary["classifier"] = classifier.to_dict()

    if cfg.mode == "delta":
        if cfg.delta is None or not cfg.delta > 0:
            raise ConfigError("--mode delta needs a positive --delta")
        decay, info = classify_decay(params, R, cfg.delta, ic, classifier, details=True)
        traj = info.pop("trajectory", None)
        ext = info.pop("extension", None)
        prof = phase_start(params, R, cfg.delta, ic)[0]
        summary.update({"delta": cfg.delta, "decay": decay, "classification": info})
        write_csv(out / "profile.csv", PROFILE_COLUMNS, profile_rows(prof))
        rows = []
        for tr in (traj, ext):
            if tr is not None:
                rows.extend(trajectory_rows(tr))
        write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, rows)
        write_json(out / "summary.json", summary)
        print(f"delta = {cfg.delta!r}: {decay.value}")
        return EXIT_OK

    if cfg.mode == "sweep":
        grid = np.geomspace(cfg.sweep_lo, cfg.sweep_hi, cfg.sweep_n)
        ex = explore_D(params, R, grid, ic, classifier, workers=cfg.workers)
        rows = [(d, rho, c.value, err or "") for d, rho, c, err in ex.rows]
        write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
        summary.update({"sweep": {"lo": cfg.sweep_lo, "hi": cfg.sweep_hi, "n": cfg.sweep_n},
                        "D": ex.to_dict()})
        write_json(out / "summary.json", summary)
        print(f"annular components: {ex.components}  delta* ~ {ex.delta_star}")
        return EXIT_OK

    try:
        if cfg.negative:
            rep = solve_negative(ExteriorRequest(params, R), ic, classifier=classifier,
                                 delta_rtol=cfg.delta_rtol)
        else:
            rep = find_fast_decay_delta(params, R, ic, classifier, delta_rtol=cfg.delta_rtol)
    except NoTransitionFound as exc:
        write_csv(out / "sweep.csv", ("delta", "side"), exc.sweep)
        summary["error"] = str(exc)
        write_json(out / "summary.json", summary)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    summary.update({"delta_star": rep.found_delta, "decay": rep.decay, "negative": rep.negative,
                    "diagnostics": rep.diagnostics})
    write_csv(out / "bracket.csv", ("delta", "side"), rep.bracket_history)
    if rep.trajectory is not None:
        write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(rep.trajectory))
    solved = params.swapped() if rep.negative else params
    try:
        ups = stable_manifold_A0(solved)
        write_csv(out / "upsilon.csv", TRAJECTORY_COLUMNS, trajectory_rows(ups))
        summary["upsilon"] = ups.info
    except (PrecisionLoss, ValueError) as exc:
        summary["upsilon"] = {"error": str(exc)}
    write_json(out / "summary.json", summary)
    exp = rep.diagnostics.get("decay_exponent")
    print(f"delta* = {rep.found_delta!r}  decay = {rep.decay.value}  exponent = {exp}")
    return EXIT_OK


def _fan(params: ProblemParams, xlim, zlim, n: int):
    """Orbits through ``n`` points of the z axis, integrated both ways."""
    cfg = PhaseConfig(rel_tol=1e-9, abs_tol=1e-11)
    span = xlim[1] - xlim[0]
    out = []
    for k in range(1, n + 1):
        z = zlim[1] * k / (n + 1)
        fwd = integrate_phase(params, 0.0, z, 0.0, 30.0, cfg, x_hi=xlim[1] + span)
        bwd = integrate_phase(params, 0.0, z, 0.0, -30.0, cfg, x_lo=xlim[0] - span).ordered()
        out.append((f"fan{k}-backward", bwd))
        out.append((f"fan{k}-forward", fwd))
    return out


def cmd_phase_portrait(cfg: RunConfig, out: Path) -> int:
    params = check_params(cfg)
    summary = _header("phase-portrait", cfg, params)
    pts = stationary_points(params)
    geo = geometry(params)
    xlim, zlim = portrait_window(geo, pts)
    curves, tables = [], []
    gamma = unstable_manifold_O(params)
    curves.append(curve("Gamma", gamma, "#d62728", 1.6))
    tables.append(("Gamma", gamma))
    summary["gamma"] = {"termination": gamma.termination, "converged_to": gamma.converged_to,
                        **gamma.info}
    try:
        ups = stable_manifold_A0(params, require_crossing=False)
        curves.append(curve("Upsilon", ups, "#1f77b4", 1.6))
        tables.append(("Upsilon", ups))
        summary["upsilon"] = {"termination": ups.termination, **ups.info}
    except (PrecisionLoss, ValueError) as exc:
        summary["upsilon"] = {"error": str(exc)}
    m0 = next(p for p in pts if p.name == "M0")
    if m0.classification is Classification.CENTER:
        rm = poincare_return(params, 0.1 * z0_value(params), 1)
        if rm.times:
            orbit = integrate_phase(params, params.alpha, rm.z_seed, 0.0, rm.times[0],
                                    PhaseConfig(rel_tol=1e-12, abs_tol=1e-14),
                                    section=params.alpha)
            curves.append(curve("closed-orbit", orbit, "#2ca02c", 1.4))
            tables.append(("closed-orbit", orbit))
            summary["closed_orbit"] = {"z_seed": rm.z_seed, "z_return": rm.z_returns[0],
                                       "period": rm.times[0]}
    for label, tr in _fan(params, xlim, zlim, cfg.fan):
        curves.append(curve(label, tr, "#555", 0.7))
        tables.append((label, tr))
    title = f"{params.variant.value} lambda={params.lam:g} Lambda={params.Lam:g} N={params.N} " \
            f"p={params.p:g} a={params.a:g}"
    (out / "portrait.svg").write_text(render_portrait(geo, pts, curves, title))
    write_csv(out / "stationary.csv", STATIONARY_COLUMNS, stationary_rows(pts))
    rows = [(label, *row) for label, tr in tables for row in trajectory_rows(tr)]
    write_csv(out / "trajectories.csv", ("curve", *TRAJECTORY_COLUMNS), rows)
    summary.update({
        "stationary_points": [stationary_dict(p) for p in pts],
        "geometry": {"ell_slope": geo.ell_slope, "parabola_b_c": geo.parabola, "pi2_x": geo.pi2_x,
                     "tangency_point": geo.tangency_point, "box": geo.box},
        "window": {"x": xlim, "z": zlim}, "fan": cfg.fan,
    })
    write_json(out / "summary.json", summary)
    labels = ", ".join(f"{p.name} {p.classification.value}" for p in pts)
    print(f"{labels}  -> {out / 'portrait.svg'}")
    return EXIT_OK


def run_invariants(params: ProblemParams, cfg: RunConfig) -> dict:
    """Every audit as ``name -> {"ok": bool, ...}``."""
    checks = {}
    rng = np.random.default_rng(cfg.seed)
    pts = stationary_points(params)

    worst = max(math.hypot(*_field(p.location[0], p.location[1], params)) for p in pts
                if p.location[1] >= 0)
    checks["stationarity"] = {"ok": worst < 1e-12, "max_field_norm": worst}

    bad = []
    for sp in pts:
        if sp.location[1] < 0 or sp.classification in (Classification.CENTER, Classification.DEGENERATE):
            continue
        J = numerical_jacobian(*sp.location, params, branch="rminus")
        re = np.linalg.eigvals(J).real
        got = {(True, True): Classification.SOURCE, (False, False): Classification.SINK}.get(
            (bool(re[0] > 0), bool(re[1] > 0)), Classification.SADDLE)
        if got is not sp.classification:
            bad.append({"point": sp.name, "expected": sp.classification.value, "got": got.value})
    checks["jacobian_signs"] = {"ok": not bad, "mismatches": bad}

    xs = rng.uniform(1e-3, 5.0, 1000)
    zs = rng.uniform(0.0, 20.0, 1000)
    diff = max(abs(_field(x, z, params)[0] - branch_field(x, z, params)[0]) / max(1.0, abs(x * x) + z)
               for x, z in zip(xs, zs))
    checks["field_consistency"] = {"ok": diff < 1e-12, "max_relative_difference": diff}

    flow = flow_direction_audit(params, cfg.flow_samples, seed=cfg.seed)
    checks["flow_directions"] = flow.to_dict()

    if z0_value(params) > 0:
        c, alpha = singular_solution(params)
        rr = np.geomspace(0.5, 50.0, 200)
        res = max(abs(equation_residual(r, c * r ** -alpha, -alpha * c * r ** (-alpha - 1),
                                        alpha * (alpha + 1) * c * r ** (-alpha - 2), params))
                  for r in rr)
        checks["singular_solution"] = {"ok": res < 1e-8, "max_residual": res}

    inner = cfg.inner or cfg.R or 1.0
    delta = cfg.delta or 1.0
    try:
        prof = integrate_ivp(ShootingInput(params, inner, delta), cfg.integrator())
    except IntegrationError as exc:
        checks["integration"] = {"ok": False, "error": str(exc)}
        return checks
    mono = monotonicity_audit(prof)
    checks["energy_monotonicity"] = mono.to_dict()
    if prof.tau_index is not None:
        gap, _ = small_delta_bound(prof)
        lhs, rhs = growth_bound_at_tau(prof)
        checks["energy_bounds"] = {"ok": gap <= 1e-12 * max(1.0, abs(rhs)) and lhs >= rhs * (1 - 1e-9),
                                   "small_delta_gap": gap, "growth_lhs": lhs, "growth_rhs": rhs}
    resid = residual_audit(prof)
    checks["equation_residual"] = {"ok": resid < 1e-5, "max_residual": resid}
    traj = to_phase(prof)
    two_q = np.nonzero(traj.x < 0)[0]
    if len(two_q):
        rep = blowup_bound_2Q(traj.t, traj.x, traj.z, float(traj.t[two_q[-1]]), params)
        checks["blowup_2Q"] = rep.to_dict()
    return checks


def cmd_check_invariants(cfg: RunConfig, out: Path) -> int:
    params = check_params(cfg)
    summary = _header("check-invariants", cfg, params)
    checks = run_invariants(params, cfg)
    summary["checks"] = checks
    summary["ok"] = all(c["ok"] for c in checks.values())
    write_json(out / "invariants.json", summary)
    for name, c in checks.items():
        print(f"{'PASS' if c['ok'] else 'FAIL'}  {name}")
    return EXIT_OK if summary["ok"] else EXIT_CHECK_FAILED


COMMANDS = {
    "solve-annulus": cmd_solve_annulus,
    "solve-exterior": cmd_solve_exterior,
    "phase-portrait": cmd_phase_portrait,
    "check-invariants": cmd_check_invariants,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "solve-annulus":
            cfg.validate_geometry("annulus")
        check_params(cfg)
        out = output_dir(cfg.out)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, InvalidAnnulus) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
