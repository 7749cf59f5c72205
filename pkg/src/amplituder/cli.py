"""Command-line entry point: ``amplituder <command> --problem P --outdir DIR``.

Exit codes: 0 when every pass flag holds, 1 on errors or failed checks,
2 when a precondition (dispersion assumption, stable steady state) fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import dispersion
from .harness import (
    DegenerateFit,
    NewtonDiverged,
    PreconditionFailure,
    SingularJacobian,
    default_dt,
    error_scaling,
    find_steady,
    prepare,
    scaled_initial_decay,
    semigroup_decay,
    steady_orbit_residuals,
    verify_periodic_stability,
)
from .problem import ParseError, ValidationError, parse_problem
from .solver.grid import Grid, gaussian, ifft
from .solver.reconstruct import initial_amplitudes, reconstruct, synthesize_initial, sup_error
from .solver.stepping import NonlinearTerm, SpectralSystem, iterate

EXIT_PASS, EXIT_FAIL, EXIT_PRECONDITION = 0, 1, 2

COMMANDS = (
    "analyze",
    "derive",
    "simulate",
    "verify-error",
    "verify-semigroup",
    "verify-scaled",
    "steady",
    "verify-stability",
)


# --------------------------------------------------------------------------
# output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def write_report(outdir: Path, command: str, report: dict) -> Path:
    path = outdir / f"{command}.report"
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in row])


def _poly_table(poly) -> list:
    return [{"exponents": list(e), "coefficient": complex(c)} for e, c in poly.items()]


def _symbol_table(Q) -> list:
    return [{"exponents": list(a), "coefficient": complex(c[0, 0])} for a, c in Q.items()]


def _analysis_dict(rep) -> dict:
    c = rep.critical
    return {
        "checks": rep.checks,
        "pass": rep.passed,
        "messages": rep.messages,
        "stability": rep.stability.as_dict() if rep.stability else None,
        "ellipticity_P": {"c1": rep.ellipticity_P[0], "c2": rep.ellipticity_P[1]} if rep.ellipticity_P else None,
        "ellipticity_Q": [{"c1": e[0], "c2": e[1]} if e else None for e in rep.ellipticity_Q],
        "omega": c.omega,
        "k": c.k,
        "D": c.D,
        "J": c.J,
        "M": c.M,
        "eta_exponent": c.eta_exponent,
        "pair_mode": c.pair_mode,
        "symmetric": c.symmetric,
        "Q": [_symbol_table(Q) for Q in c.Q],
        "w": c.w,
        "l": c.l,
        "residuals": rep.residuals,
    }


# --------------------------------------------------------------------------
# commands


def _model(prob):
    return prepare(prob.symbol, prob.nonlinearity, prob.k, prob.omega, prob.D, **prob.analysis_kwargs)


def _profiles(prob, section, model, default):
    given = prob.option(section, "profiles")
    n = model.critical.n_independent
    if given is None:
        return [default] * n
    if len(given) == 1:
        return list(given) * n
    if len(given) != n:
        raise ValidationError(f"{section}.profiles lists {len(given)} profiles, the reduction has {n} amplitudes")
    return list(given)


def cmd_analyze(prob, outdir):
    rep = dispersion.analyze(prob.symbol, prob.k, prob.omega, prob.D, prob.nonlinearity, **prob.analysis_kwargs)
    out = _analysis_dict(rep)
    write_report(outdir, "analyze", out)
    return EXIT_PASS if rep.passed else EXIT_PRECONDITION, out


def cmd_derive(prob, outdir):
    model = _model(prob)
    s = model.system
    checks = dict(s.checks)
    ok = checks["equivariance_defect"] <= 1e-12 and checks["quadrature_defect"] <= 1e-10
    ok &= checks.get("conjugation_defect", 0.0) <= 1e-12
    ok &= checks.get("symmetric_consistent", True)
    out = {
        "mode": s.mode,
        "J": s.J,
        "M": s.M,
        "Q": [_symbol_table(Q) for Q in s.Q],
        "R": [r.to_string() for r in s.R_general],
        "R_terms": [_poly_table(r) for r in s.R_general],
        "reactions": [r.to_string() for r in s.reactions],
        "reaction_terms": [_poly_table(r) for r in s.reactions],
        "w": s.w,
        "l": s.l,
        "checks": checks,
        "analysis": _analysis_dict(model.analysis),
        "pass": bool(ok),
    }
    write_report(outdir, "derive", out)
    return EXIT_PASS if ok else EXIT_FAIL, out


def cmd_simulate(prob, outdir):
    model = _model(prob)
    crit = model.critical
    eps = prob.option("simulate", "epsilon")
    eta = crit.eta(eps)
    points = prob.option("simulate", "points")
    grid = Grid.for_problem(crit, points, eta, prob.option("simulate", "n_periods"))
    dt = default_dt(crit, eps, prob.option("simulate", "dt_factor"))
    n_steps = int(round(prob.option("simulate", "T0") / eps / dt))
    stride = prob.option("simulate", "snapshot_stride")
    dealias = prob.option("simulate", "dealias")
    profiles = _profiles(prob, "simulate", model, gaussian(0.5, 1.0))
    u0 = synthesize_initial(profiles, crit, grid, eta, model.symmetric)
    A0 = initial_amplitudes(profiles, grid, crit.D, eta)
    full = SpectralSystem.build(model.P, NonlinearTerm.from_nonlinearity(model.f), grid, dt, eps, dealias)
    amp = SpectralSystem.build(list(model.system.Q), NonlinearTerm.from_reduced(model.system.reactions),
                               grid.sub(crit.D), dt, eps, dealias)
    summary, snaps_u, snaps_A = [], [], []
    for s, ((t, uh), (_, Ah)) in enumerate(zip(iterate(full, u0.physical(), n_steps), iterate(amp, A0, n_steps))):
        if s % stride and s != n_steps:
            continue
        u, A = ifft(uh), ifft(Ah)
        ua = reconstruct(A, crit, t, grid, model.symmetric)
        summary.append((t, float(np.abs(u).max()), float(np.abs(A).max()), sup_error(u, ua.physical()),
                        float(np.abs(u.imag).max())))
        snaps_u.append((t, u))
        snaps_A.append((t, A))
    write_csv(outdir / "simulate_summary.csv", ["time", "sup_u", "sup_A", "error", "max_imag_u"], summary)
    for name, snaps in (("simulate_full.csv", snaps_u), ("simulate_amplitude.csv", snaps_A)):
        rows = []
        for t, data in snaps:
            flat = data.reshape(data.shape[0], -1)
            for c in range(flat.shape[0]):
                for i, z in enumerate(flat[c]):
                    rows.append((t, c, i, float(z.real), float(z.imag)))
        write_csv(outdir / name, ["time", "component", "index", "re", "im"], rows)
    out = {
        "epsilon": eps,
        "eta": eta,
        "dt": dt,
        "steps": n_steps,
        "grid": {"lengths": grid.lengths, "points": grid.points},
        "snapshots": len(summary),
        "max_error": max(r[3] for r in summary),
        "max_imag_u": max(r[4] for r in summary),
        "pass": True,
    }
    write_report(outdir, "simulate", out)
    return EXIT_PASS, out


def cmd_verify_error(prob, outdir):
    model = _model(prob)
    g = lambda key: prob.option("error", key)  # noqa: E731
    rep = error_scaling(
        model,
        g("epsilons"),
        _profiles(prob, "error", model, gaussian(0.5, 1.0)),
        g("points"),
        n_periods=g("n_periods"),
        t0=g("t0"),
        T0=g("T0"),
        r=g("r"),
        dealias=g("dealias"),
        error_stride=g("error_stride"),
        dt_factor=g("dt_factor"),
    )
    write_csv(outdir / "verify-error.csv", ["epsilon", "max_error"], rep.points)
    out = rep.as_dict()
    for d in out["details"]:
        d.pop("series", None)
    write_report(outdir, "verify-error", out)
    return EXIT_PASS if rep.passed else EXIT_FAIL, out


def cmd_verify_semigroup(prob, outdir):
    model = _model(prob)
    g = lambda key: prob.option("semigroup", key)  # noqa: E731
    times = np.geomspace(g("t_min"), g("t_max"), g("count"))
    rep = semigroup_decay(model, g("profile"), times, n_periods=g("n_periods"), points=g("points"))
    write_csv(outdir / "verify-semigroup.csv", ["t", "error"], rep.points)
    out = rep.as_dict()
    write_report(outdir, "verify-semigroup", out)
    return EXIT_PASS if rep.passed else EXIT_FAIL, out


def cmd_verify_scaled(prob, outdir):
    model = _model(prob)
    g = lambda key: prob.option("scaled", key)  # noqa: E731
    rep = scaled_initial_decay(model, g("profile"), g("etas"), g("t0"), g("points"), g("n_periods"))
    write_csv(outdir / "verify-scaled.csv", ["eta", "error"], rep.points)
    out = rep.as_dict()
    write_report(outdir, "verify-scaled", out)
    return EXIT_PASS if rep.passed else EXIT_FAIL, out


def _steady(model, guess):
    n = model.critical.n_independent
    guess = np.broadcast_to(np.atleast_1d(guess), (n,))
    return find_steady(model.system.reactions, guess)


def cmd_steady(prob, outdir):
    model = _model(prob)
    guesses = prob.option("steady", "guesses")
    results, ok = [], True
    for g in guesses:
        try:
            rep = _steady(model, g)
            entry = {"guess": g, **rep.as_dict()}
            if model.symmetric:
                J = model.critical.J
                pos = [n for n, j in enumerate(J) if j > 0]
                phi_general = np.array([rep.phi[pos.index(J.index(abs(j)))] for j in J])
                thetas = np.linspace(0, 2 * np.pi, 8, endpoint=False)
                entry["orbit_residuals"] = steady_orbit_residuals(model.system.R_general, J, phi_general, thetas)
        except (NewtonDiverged, SingularJacobian) as exc:
            entry = {"guess": g, "error": str(exc)}
            ok = False
        results.append(entry)
    rows = [(r["guess"], r["phi"][0], r["jacobian_eigs"][0][0], int(r["stable"])) for r in results if "phi" in r]
    write_csv(outdir / "steady.csv", ["guess", "phi_1", "re_eig_1", "stable"], rows)
    out = {"mode": model.system.mode, "results": results, "pass": ok}
    write_report(outdir, "steady", out)
    return EXIT_PASS if ok else EXIT_FAIL, out


def cmd_verify_stability(prob, outdir):
    model = _model(prob)
    g = lambda key: prob.option("stability", key)  # noqa: E731
    steady = _steady(model, g("guess"))
    if not steady.stable:
        out = {"steady": steady.as_dict(), "pass": False, "message": "steady state is not stable"}
        write_report(outdir, "verify-stability", out)
        return EXIT_PRECONDITION, out
    kw = dict(
        epsilon=g("epsilon"),
        points=g("points"),
        n_periods=g("n_periods"),
        T_factor=g("T_factor"),
        dt=default_dt(model.critical, g("epsilon"), g("dt_factor")),
        perturbation=g("perturbation"),
    )
    runs = [verify_periodic_stability(model, steady.phi.real, delta, **kw) for delta in (g("delta"), 0.0)]
    for run, tag in zip(runs, ("perturbed", "unperturbed")):
        write_csv(outdir / f"verify-stability-{tag}.csv", ["t", "error"], list(zip(run.times, run.errors)))
    ok = all(r.passed for r in runs)
    out = {"steady": steady.as_dict(), "perturbed": runs[0].as_dict(), "unperturbed": runs[1].as_dict(), "pass": ok}
    write_report(outdir, "verify-stability", out)
    return EXIT_PASS if ok else EXIT_FAIL, out


HANDLERS = {
    "analyze": cmd_analyze,
    "derive": cmd_derive,
    "simulate": cmd_simulate,
    "verify-error": cmd_verify_error,
    "verify-semigroup": cmd_verify_semigroup,
    "verify-scaled": cmd_verify_scaled,
    "steady": cmd_steady,
    "verify-stability": cmd_verify_stability,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amplituder", description="Amplitude-equation reduction and verification.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--problem", required=True, help="problem file path or bundled config name")
    p.add_argument("--outdir", default=".", help="directory for reports and CSVs")
    p.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="replace a key of the problem file (repeatable)")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        prob = parse_problem(args.problem, args.override)
        code, out = HANDLERS[args.command](prob, outdir)
    except (PreconditionFailure, dispersion.DispersionError) as exc:
        write_report(outdir, args.command, {"pass": False, "precondition": str(exc)})
        print(f"{args.command}: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ParseError, ValidationError, FileNotFoundError, DegenerateFit, ValueError, FloatingPointError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    status = "pass" if code == EXIT_PASS else "FAIL"
    print(f"{args.command} [{prob.name}]: {status} ({time.perf_counter() - start:.2f} s) -> {outdir / (args.command + '.report')}")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
