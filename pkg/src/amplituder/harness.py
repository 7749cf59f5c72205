"""Numerical experiments that check the reduction's predicted exponents.

Each experiment measures a family of errors, fits a log-log slope and
compares it with the exponent predicted by the degeneracy order ``M``.
Constants are never tested, only slopes.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dispersion import AnalysisReport, analyze
from .nonlinear import AmplitudeSystem, ReducedPolynomial, derive, jacobian
from .solver.grid import Grid, Profile, SpectralField, check_carriers, fft, gaussian, constant, ifft, plateau, tent
from .solver.propagator import linear_propagator
from .solver.reconstruct import initial_amplitudes, reconstruct, synthesize_initial, sup_error
from .solver.stepping import NonlinearTerm, SpectralSystem, iterate
from .symbols import MatrixPolynomial, PolynomialNonlinearity

SLOPE_TOL_NONLINEAR = 0.15
SLOPE_TOL_LINEAR = 0.10
R2_MIN = 0.95


class DegenerateFit(ValueError):
    pass


class PreconditionFailure(RuntimeError):
    """A dispersion or reduction assumption needed by an experiment fails."""


class NewtonDiverged(RuntimeError):
    pass


class SingularJacobian(RuntimeError):
    def __init__(self, point, kernel):
        self.point = np.asarray(point)
        self.kernel = np.asarray(kernel)
        super().__init__(f"singular Jacobian at {self.point.tolist()}; near-kernel vector {self.kernel.tolist()}")


def fit_loglog(points) -> tuple[float, float, float]:
    """Least-squares line through ``(log x, log y)``; returns slope, intercept, r^2."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DegenerateFit("need at least three points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(pts)):
        raise DegenerateFit("abscissae and values must be positive and finite")
    if len(np.unique(x)) < len(x):
        raise DegenerateFit("abscissae must be distinct")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


@dataclass
class ScalingReport:
    points: list
    fitted_slope: float
    intercept: float
    r_squared: float
    expected_slope: float
    slope_tol: float
    passed: bool
    details: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @classmethod
    def from_points(cls, points, expected: float, slope_tol: float, details=None, failures=None) -> "ScalingReport":
        pts = sorted((float(a), float(b)) for a, b in points)
        try:
            s, c, r2 = fit_loglog(pts)
            ok = abs(s - expected) <= slope_tol and r2 >= R2_MIN and not failures
        except DegenerateFit:
            s = c = r2 = float("nan")
            ok = False
        return cls(pts, s, c, r2, expected, slope_tol, bool(ok), list(details or []), list(failures or []))

    def as_dict(self) -> dict:
        return {
            "points": self.points,
            "fitted_slope": self.fitted_slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "expected_slope": self.expected_slope,
            "slope_tol": self.slope_tol,
            "pass": self.passed,
            "details": self.details,
            "failures": self.failures,
        }


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("AMPLITUDER_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn: Callable, items: Sequence) -> list:
    """Ordered map over independent experiment cells."""
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# model bundle


@dataclass
class Model:
    """Symbol, nonlinearity and the derived reduction."""

    P: MatrixPolynomial
    f: PolynomialNonlinearity
    analysis: AnalysisReport
    system: AmplitudeSystem

    @property
    def critical(self):
        return self.analysis.critical

    @property
    def symmetric(self) -> bool:
        return self.system.mode == "symmetric"

    @property
    def M(self) -> int:
        return self.critical.eta_exponent


def prepare(P: MatrixPolynomial, f: PolynomialNonlinearity, k, omega: float, D: int = 1, require: bool = True, **kw) -> Model:
    """Analyze and derive; raise :class:`PreconditionFailure` when a check fails."""
    rep = analyze(P, k, omega, D, f, **kw)
    if require and not rep.passed:
        bad = [name for name, ok in rep.checks.items() if not ok]
        raise PreconditionFailure(f"dispersion checks failed: {', '.join(bad)}")
    system = derive(rep.critical, f)
    return Model(P, f, rep, system)


def default_dt(critical, epsilon: float, dt_factor: float = 0.005) -> float:
    """``dt_factor/eps``, capped at ``0.1/|omega|`` so oscillating carriers stay resolved."""
    dt = dt_factor / epsilon
    if critical.omega:
        dt = min(dt, 0.1 / abs(critical.omega))
    return dt


def _full_system(model: Model, grid: Grid, dt: float, eps: float, dealias: bool) -> SpectralSystem:
    return SpectralSystem.build(model.P, NonlinearTerm.from_nonlinearity(model.f), grid, dt, eps, dealias)


def _amp_system(model: Model, grid: Grid, dt: float, eps: float, dealias: bool) -> SpectralSystem:
    sysm = model.system
    return SpectralSystem.build(
        list(sysm.Q), NonlinearTerm.from_reduced(sysm.reactions), grid.sub(model.critical.D), dt, eps, dealias
    )


# --------------------------------------------------------------------------
# error scaling


def error_run(
    model: Model,
    epsilon: float,
    profiles: Sequence[Profile],
    points,
    n_periods: int = 2,
    t0: float = 1.0,
    T0: float = 1.0,
    dt_factor: float = 0.005,
    dealias: bool = True,
    r: int = 0,
    error_stride: int = 1,
) -> dict:
    """Simulate both systems in lockstep; max error over ``[t0, T0/eps]``."""
    crit = model.critical
    eta = crit.eta(epsilon)
    grid = Grid.for_problem(crit, points, eta, n_periods)
    T_end = T0 / epsilon
    dt = default_dt(crit, epsilon, dt_factor)
    n_steps = int(round(T_end / dt))
    u0 = synthesize_initial(profiles, crit, grid, eta, model.symmetric)
    A0 = initial_amplitudes(profiles, grid, crit.D, eta)
    full = _full_system(model, grid, dt, epsilon, dealias)
    amp = _amp_system(model, grid, dt, epsilon, dealias)
    worst, t_worst = 0.0, float("nan")
    series = []
    for s, ((t, uh), (_, Ah)) in enumerate(zip(iterate(full, u0.physical(), n_steps), iterate(amp, A0, n_steps))):
        if t < t0 - 1e-12 or (s % error_stride and s != n_steps):
            continue
        ua = reconstruct(ifft(Ah), crit, t, grid, model.symmetric)
        e = sup_error(SpectralField(grid, uh, "fourier"), ua, r)
        series.append((t, e))
        if e > worst:
            worst, t_worst = e, t
    return {
        "epsilon": epsilon,
        "eta": eta,
        "max_error": worst,
        "t_of_max": t_worst,
        "dt": dt,
        "steps": n_steps,
        "lengths": list(grid.lengths),
        "points": list(grid.points),
        "series": series,
    }


def error_scaling(
    model: Model,
    epsilons: Sequence[float],
    profiles: Sequence[Profile] | None = None,
    points=1024,
    slope_tol: float = SLOPE_TOL_NONLINEAR,
    **kw,
) -> ScalingReport:
    """Fit ``max_t |u - u_approx|`` against ``eps``; expected slope ``1/M``."""
    eps = sorted(float(e) for e in epsilons)
    if len(eps) < 3 or eps[-1] / eps[0] < 10 - 1e-9:
        raise DegenerateFit("need at least three epsilons spanning a decade")
    profiles = profiles or [gaussian(0.5, 1.0)] * model.critical.n_independent
    details, failures = [], []

    def cell(e):
        try:
            return error_run(model, e, profiles, points, **kw)
        except (FloatingPointError, ValueError) as exc:
            return {"epsilon": e, "error": str(exc)}

    for res in _map(cell, eps):
        (failures if "error" in res else details).append(res)
    pts = [(d["epsilon"], d["max_error"]) for d in details]
    return ScalingReport.from_points(pts, 1.0 / model.M, slope_tol, details, failures)


# --------------------------------------------------------------------------
# linear decay experiments


def _linear_error(model: Model, grid: Grid, v_slow: np.ndarray, t: float, n: int = 0) -> float:
    """``|e^{Pt}(carrier v w) - carrier(t) e^{Qt} v w|`` for a single carrier ``n``."""
    crit = model.critical
    check_carriers(grid, crit.k, [crit.J[n]])
    m = len(crit.w[n])
    pad = (Ellipsis,) + (None,) * (grid.ndim - crit.D)
    kx = sum(crit.k[i] * X for i, X in enumerate(grid.mesh))
    carrier = np.exp(1j * crit.J[n] * kx)
    w = np.asarray(crit.w[n]).reshape((m,) + (1,) * grid.ndim)
    u0 = w * (v_slow[pad] * carrier)[None]
    ut = ifft(linear_propagator(model.P, grid, t).apply(fft(u0)))
    slow = grid.sub(crit.D)
    At = ifft(linear_propagator(crit.Q[n], slow, t).apply(fft(v_slow[None])))[0]
    ua = w * (At[pad] * carrier * np.exp(1j * crit.J[n] * crit.omega * t))[None]
    return float(np.abs(ut - ua).max())


def semigroup_decay(
    model: Model,
    profile: Profile | None = None,
    times: Sequence[float] | None = None,
    n_periods: int = 160,
    points=None,
    slope_tol: float = SLOPE_TOL_LINEAR,
    lengths=None,
) -> ScalingReport:
    """Fit the linear approximation error against ``t``; expected slope ``-1/M``.

    The slow axes hold ``n_periods`` carrier periods unless explicit box
    ``lengths`` are given.
    """
    crit = model.critical
    times = np.geomspace(1.0, 100.0, 9) if times is None else np.asarray(times, dtype=float)
    if times.max() / times.min() < 10**1.5 - 1e-9:
        raise DegenerateFit("times must span at least 1.5 decades")
    profile = profile or plateau(1.0, 300.0, 1.0)
    points = points or [2**14 if i < crit.D else 8 for i in range(len(crit.k))]
    grid = Grid.for_problem(crit, points, 1.0, n_periods)
    if lengths is not None:
        grid = Grid(tuple(lengths), grid.points)
    v = profile(np.stack(grid.sub(crit.D).mesh))
    errs = _map(lambda t: _linear_error(model, grid, v, t), list(times))
    pts = list(zip(times.tolist(), errs))
    details = [{"t": t, "error": e} for t, e in pts]
    if max(errs) == 0.0:
        return ScalingReport(pts, float("nan"), float("nan"), float("nan"), -1.0 / model.M, slope_tol, False, details,
                             ["zero signal"])
    return ScalingReport.from_points(pts, -1.0 / model.M, slope_tol, details)


def scaled_initial_decay(
    model: Model,
    profile: Profile | None = None,
    etas: Sequence[float] = (0.2, 0.1, 0.05),
    t0: float = 1.0,
    points=None,
    n_periods: int = 40,
    slope_tol: float = SLOPE_TOL_NONLINEAR,
) -> ScalingReport:
    """Error at fixed ``t0`` for slow data ``v0(eta x)``; expected slope 1."""
    crit = model.critical
    profile = profile or tent(1.0, 2.0)
    points = points or [2**14 if i < crit.D else 8 for i in range(len(crit.k))]

    def cell(eta):
        grid = Grid.for_problem(crit, points, eta, n_periods)
        v = profile(eta * np.stack(grid.sub(crit.D).mesh))
        return _linear_error(model, grid, v, t0)

    etas = [float(e) for e in etas]
    errs = _map(cell, etas)
    pts = list(zip(etas, errs))
    return ScalingReport.from_points(pts, 1.0, slope_tol, [{"eta": a, "error": b} for a, b in pts])


# --------------------------------------------------------------------------
# steady states


@dataclass
class SteadyStateReport:
    phi: np.ndarray
    residual: float
    jacobian_eigs: np.ndarray
    stable: bool
    iterations: int
    history: list

    def as_dict(self) -> dict:
        return {
            "phi": np.real(self.phi).tolist(),
            "residual": self.residual,
            "jacobian_eigs": [[float(z.real), float(z.imag)] for z in self.jacobian_eigs],
            "stable": self.stable,
            "iterations": self.iterations,
            "residual_history": self.history,
        }


def find_steady(S: Sequence[ReducedPolynomial], guess, max_iter: int = 50, tol: float = 1e-10) -> SteadyStateReport:
    """Newton's method with the exact polynomial Jacobian."""
    x = np.array(np.atleast_1d(guess), dtype=complex)
    if not np.all(np.isfinite(x)):
        raise ValueError("guess must be finite")

    def resid(z):
        return np.array([p.evaluate(z) for p in S])

    F = resid(x)
    history = [float(np.abs(F).max())]
    it = 0
    while it < max_iter:
        if history[-1] <= 1e-3 * tol or (history[-1] <= tol and len(history) > 1 and history[-1] >= history[-2]):
            break
        Jm = jacobian(S, x)
        if abs(np.linalg.det(Jm)) < 1e-12:
            raise SingularJacobian(x, np.linalg.svd(Jm)[2][-1].conj())
        x = x - np.linalg.solve(Jm, F)
        F = resid(x)
        history.append(float(np.abs(F).max()))
        it += 1
    if history[-1] > tol:
        raise NewtonDiverged(f"residual {history[-1]:.3e} after {it} iterations")
    eigs = np.linalg.eigvals(jacobian(S, x))
    if np.all(np.abs(x.imag) <= 1e-14 * max(1.0, np.abs(x).max())):
        x = x.real.astype(complex)
    return SteadyStateReport(x.real if not np.any(x.imag) else x, history[-1], eigs, bool(np.all(eigs.real < 0)), it, history)


def steady_orbit_residuals(R: Sequence[ReducedPolynomial], J: Sequence[int], phi_general, thetas) -> list[float]:
    """Residual of the general system at ``e^{i j_n theta} phi_n`` for each ``theta``."""
    phi = np.asarray(phi_general, dtype=complex)
    J = np.asarray(J)
    return [float(np.abs([p.evaluate(phi * np.exp(1j * J * th)) for p in R]).max()) for th in thetas]


# --------------------------------------------------------------------------
# periodic-solution stability


def _trend_non_increasing(e: np.ndarray, blocks: int = 5, slack: float = 0.05) -> bool:
    """Block maxima after the first fifth never rise by more than ``slack * e[0]``.

    Comparing maxima rather than samples ignores the bounded carrier-periodic
    ripple that remains once the perturbation has decayed.
    """
    tail = e[len(e) // 5 :]
    if len(tail) < blocks:
        return bool(np.all(np.diff(tail) <= slack * e[0]))
    peaks = [blk.max() for blk in np.array_split(tail, blocks)]
    return bool(np.all(np.diff(peaks) <= slack * e[0]))


@dataclass
class StabilityRunReport:
    delta: float
    epsilon: float
    eta: float
    times: list
    errors: list
    contraction: float
    band: float
    trend_ok: bool
    passed: bool

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "contraction": self.contraction,
            "band": self.band,
            "max_error": max(self.errors),
            "final_error": self.errors[-1],
            "trend_ok": self.trend_ok,
            "pass": self.passed,
        }


def verify_periodic_stability(
    model: Model,
    phi,
    delta: float = 0.05,
    epsilon: float = 0.01,
    points=1024,
    n_periods: int = 2,
    T_factor: float = 5.0,
    dt: float | None = None,
    perturbation: Profile | None = None,
    dealias: bool = True,
    record_stride: int = 10,
) -> StabilityRunReport:
    """Run the full system from ``phi + delta * bump`` and track the distance to the carrier state.

    The comparison state is ``reconstruct(A = phi)`` advanced with the exact
    carrier phase. With ``delta > 0`` the run passes when the distance
    shrinks at least tenfold; with ``delta = 0`` when it stays inside the
    ``3 eta |phi|`` band.
    """
    crit = model.critical
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    eta = crit.eta(epsilon)
    grid = Grid.for_problem(crit, points, eta, n_periods)
    T_end = T_factor / epsilon
    dt = default_dt(crit, epsilon) if dt is None else dt
    n_steps = int(round(T_end / dt))
    bump = perturbation or gaussian(1.0, 1.0)
    profiles = [constant(p) + bump.scaled(delta) for p in phi]
    u0 = synthesize_initial(profiles, crit, grid, eta, model.symmetric)
    Aphi = np.stack([np.full(grid.sub(crit.D).shape, p, dtype=complex) for p in phi])
    full = _full_system(model, grid, dt, epsilon, dealias)
    times, errors = [], []
    for s, (t, uh) in enumerate(iterate(full, u0.physical(), n_steps)):
        if s % record_stride and s != n_steps:
            continue
        up = reconstruct(Aphi, crit, t, grid, model.symmetric)
        times.append(t)
        errors.append(sup_error(ifft(uh), up.physical()))
    band = 3.0 * eta * float(np.abs(phi).max())
    e = np.asarray(errors)
    contraction = float(e[0] / e[-1]) if e[-1] > 0 else float("inf")
    trend_ok = _trend_non_increasing(e)
    if delta > 0:
        passed = contraction >= 10.0 and trend_ok
    else:
        passed = bool(e.max() <= band)
    return StabilityRunReport(delta, epsilon, eta, times, errors, contraction, band, trend_ok, bool(passed))
