import numpy as np
import pytest

from amplituder import harness
from amplituder.harness import (
    DegenerateFit,
    NewtonDiverged,
    PreconditionFailure,
    ScalingReport,
    SingularJacobian,
    default_dt,
    error_run,
    error_scaling,
    find_steady,
    fit_loglog,
    prepare,
    scaled_initial_decay,
    semigroup_decay,
    steady_orbit_residuals,
    verify_periodic_stability,
)
from amplituder.nonlinear import ReducedPolynomial, jacobian
from amplituder.solver import constant, gaussian
from amplituder.symbols import MatrixPolynomial

from conftest import cubic_scalar

SH_S = ReducedPolynomial(1, {(1,): 1.0, (3,): -3.0})


# fit_loglog ----------------------------------------------------------------


def test_fit_exact_line():
    s, c, r2 = fit_loglog([(1, 1), (10, 10), (100, 100)])
    assert s == pytest.approx(1.0) and c == pytest.approx(0.0, abs=1e-14) and r2 == pytest.approx(1.0)


def test_fit_power_law():
    x = np.array([1.0, 2.0, 5.0, 9.0])
    s, c, r2 = fit_loglog(list(zip(x, 3 * x**0.5)))
    assert s == pytest.approx(0.5) and c == pytest.approx(np.log(3))


def test_fit_noisy_power_law(rng):
    x = np.geomspace(1, 100, 10)
    y = 2 * x**-0.25 * (1 + rng.uniform(-0.02, 0.02, x.size))
    s, _, r2 = fit_loglog(list(zip(x, y)))
    assert abs(s + 0.25) <= 0.02 and r2 >= 0.99


@pytest.mark.parametrize(
    "pts",
    [[(1, 1), (2, 2)], [(1, 1), (1, 2), (1, 3)], [(1, 0), (2, 1), (3, 1)], [(1, 1), (2, np.nan), (3, 1)]],
)
def test_fit_degenerate(pts):
    with pytest.raises(DegenerateFit):
        fit_loglog(pts)


def test_scaling_report_pass_rule():
    pts = [(0.01, 0.1), (0.1, 0.1 * 10**0.5), (1.0, 1.0)]
    assert ScalingReport.from_points(pts, 0.5, 0.15).passed
    assert not ScalingReport.from_points(pts, 0.8, 0.15).passed
    assert not ScalingReport.from_points(pts, 0.5, 0.15, failures=[{"epsilon": 1}]).passed
    bad = ScalingReport.from_points([(1, 1), (1, 2), (1, 3)], 0.5, 0.15)
    assert not bad.passed and np.isnan(bad.fitted_slope)
    assert set(bad.as_dict()) >= {"points", "fitted_slope", "r_squared", "pass"}


# preconditions -------------------------------------------------------------


def test_prepare_rejects_unstable_problem():
    # ellipticity fails for a symbol whose spectrum grows at large |xi|
    P = MatrixPolynomial.scalar(1, {(4,): 1.0, (2,): 2.0, (0,): 1.0})
    with pytest.raises(PreconditionFailure):
        prepare(P, cubic_scalar(), [1.0], 0.0)


def test_default_dt(sh_model, osc_model):
    assert default_dt(sh_model.critical, 0.01) == pytest.approx(0.5)
    assert default_dt(osc_model.critical, 0.01) == pytest.approx(0.1)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("AMPLITUDER_THREADS", "3")
    assert harness._threads() == 3
    assert harness._map(lambda x: x * x, [3, 1, 2]) == [9, 1, 4]
    monkeypatch.setenv("AMPLITUDER_THREADS", "many")
    assert harness._threads() == 1


# error scaling -------------------------------------------------------------


def test_error_scaling_rejects_narrow_range(sh_model):
    with pytest.raises(DegenerateFit):
        error_scaling(sh_model, [0.01, 0.01, 0.01])
    with pytest.raises(DegenerateFit):
        error_scaling(sh_model, [0.01, 0.02, 0.05])


def test_error_run_is_deterministic(sh_model):
    a = error_run(sh_model, 0.04, [gaussian(0.5, 1.0)], 256)
    b = error_run(sh_model, 0.04, [gaussian(0.5, 1.0)], 256)
    assert a == b
    assert 0 < a["max_error"] < 0.5


def test_error_run_zero_data_is_exact(sh_model):
    res = error_run(sh_model, 0.04, [constant(0.0)], 128)
    assert res["max_error"] == 0.0


# linear decay --------------------------------------------------------------


def test_semigroup_zero_profile(sh_model):
    rep = semigroup_decay(sh_model, profile=constant(0.0), points=[256])
    assert not rep.passed and rep.failures == ["zero signal"]
    assert all(e == 0 for _, e in rep.points)


def test_semigroup_needs_time_span(sh_model):
    with pytest.raises(DegenerateFit):
        semigroup_decay(sh_model, times=[1, 2, 3])


def test_scaled_decay_repeated_eta_is_rejected(sh_model):
    rep = scaled_initial_decay(sh_model, etas=(0.1, 0.1, 0.1), points=[1024], n_periods=4)
    assert not rep.passed and np.isnan(rep.fitted_slope)


def test_scaled_decay_constant_profile(sh_model):
    # a constant envelope makes the carrier an exact eigenmode, so the
    # first-order error term vanishes together with all the others
    rep = scaled_initial_decay(sh_model, profile=constant(1.0), points=[1024], n_periods=4)
    assert max(e for _, e in rep.points) <= 1e-13


# steady states -------------------------------------------------------------


def test_steady_sh():
    rep = find_steady([SH_S], 0.5)
    assert rep.phi[0] == pytest.approx(1 / np.sqrt(3), abs=1e-12)
    assert rep.jacobian_eigs[0] == pytest.approx(-2.0, abs=1e-12)
    assert rep.stable and rep.residual <= 1e-10


def test_steady_zero_is_unstable():
    rep = find_steady([SH_S], 0.0)
    assert rep.phi[0] == 0 and rep.jacobian_eigs[0] == pytest.approx(1.0) and not rep.stable


def test_steady_cel(cel_model):
    rep = find_steady(cel_model.system.reactions, 0.5)
    assert rep.phi[0] == pytest.approx(1 / np.sqrt(3), abs=1e-10)
    assert rep.jacobian_eigs[0].real == pytest.approx(-8 / 3, abs=1e-8)


def test_newton_quadratic_convergence():
    h = find_steady([SH_S], 0.7).history
    for a, b in zip(h, h[1:]):
        if 1e-14 < a < 1e-3 and b > 1e-15:
            assert b <= 10 * a**2


def test_newton_singular_jacobian():
    with pytest.raises(SingularJacobian) as err:
        find_steady([SH_S], 1 / 3)
    assert err.value.kernel.shape == (1,)


def test_newton_diverges():
    S = ReducedPolynomial(1, {(2,): 1.0, (0,): 1.0})  # A^2 + 1 has no real root
    with pytest.raises((NewtonDiverged, SingularJacobian)):
        find_steady([S], 0.3, max_iter=50)


def test_newton_rejects_nonfinite_guess():
    with pytest.raises(ValueError):
        find_steady([SH_S], np.nan)


def test_jacobian_against_finite_differences(rng):
    S = [
        ReducedPolynomial(2, {(1, 0): 1.0, (3, 0): -3.0, (1, 2): 0.5}),
        ReducedPolynomial(2, {(0, 1): -1.0, (2, 1): 2.0}),
    ]
    for _ in range(50):
        A = rng.uniform(-1, 1, 2)
        Jm = jacobian(S, A)
        for b in range(2):
            h = np.zeros(2)
            h[b] = 1e-6
            fd = np.array([(p.evaluate(A + h) - p.evaluate(A - h)) / 2e-6 for p in S])
            np.testing.assert_allclose(Jm[:, b], fd, atol=1e-7)


def test_steady_orbit(sh_model):
    R = sh_model.system.R_general
    res = steady_orbit_residuals(R, [1, -1], [1 / np.sqrt(3)] * 2, np.linspace(0, 2 * np.pi, 8, endpoint=False))
    assert max(res) <= 1e-10


# stability -----------------------------------------------------------------


def test_trend_check():
    e = np.r_[np.linspace(1, 0.1, 50), 0.1 + 0.01 * np.sin(np.arange(50))]
    assert harness._trend_non_increasing(e)
    assert not harness._trend_non_increasing(np.linspace(0.1, 1, 100))


def test_stability_rejects_unstable_state(sh_model):
    rep = verify_periodic_stability(sh_model, [0.0], delta=0.05, epsilon=0.01, points=256)
    assert not rep.passed and rep.contraction < 1
