import numpy as np
import pytest

from lumpkit.catalog import (
    G4AB_PRINTED, H6_PRINTED, TAU_FAMILIES, check_omega_identities, check_tau_positive,
    check_zz_identities, eta_display, eta_error, g4AB, hAB, kernel_fields, lump_U_float, omega_float,
    peak_residuals, peaks, pretty, realize_hAB, solution_from_tau, sup_error, tau2, tau2_shifted,
    u_evaluator,
)
from lumpkit.backlund import BacklundSystem, verify_pair
from lumpkit.hirota import boussinesq_residual
from lumpkit.polyring import parse_poly


@pytest.mark.parametrize("name", sorted(TAU_FAMILIES))
def test_families_solve_bilinear(name):
    assert boussinesq_residual(TAU_FAMILIES[name]()).is_zero()


def test_printed_variants_fail():
    assert not boussinesq_residual(parse_poly(H6_PRINTED)).is_zero()
    diff = g4AB() - parse_poly(G4AB_PRINTED)
    assert diff == parse_poly("61*s3i/24*y^3")


def test_realization():
    assert realize_hAB() == hAB()
    text = pretty(realize_hAB(0, 0))
    assert text.endswith("+ 1875")
    assert text.startswith("x^6 + 3*x^4*y^2")
    r1, r2 = verify_pair(g4AB(), hAB(), BacklundSystem.gh())
    assert r1.is_zero() and r2.is_zero()
    r1, r2 = verify_pair(tau2_shifted(), g4AB(), BacklundSystem.back2(1))
    assert r1.is_zero() and r2.is_zero()


def test_solution_from_tau():
    sol = solution_from_tau(tau2())
    u = sol.evaluator()
    assert u(0.0, 0.0) == pytest.approx(4 / 3)
    x = np.linspace(-3, 3, 7)
    assert np.allclose(u(x, 0.5 * x), lump_U_float(x, 0.5 * x))
    with pytest.raises(ValueError):
        solution_from_tau(parse_poly("i*x^2 + y^2 + 3"))


def test_tau_positive():
    assert check_tau_positive(hAB(), {"A": 0.0, "B": 0.0}, extent=10, n=101) > 0


def test_kernel_fields_against_finite_differences():
    f = kernel_fields(0.3, 5.0)
    u = lambda A, B: u_evaluator(hAB(), {"A": A, "B": B})
    x, y, h = 0.7, -1.1, 1e-5
    u0 = u(0.3, 5.0)
    assert f["x"](x, y) == pytest.approx((u0(x + h, y) - u0(x - h, y)) / (2 * h), rel=1e-6)
    assert f["y"](x, y) == pytest.approx((u0(x, y + h) - u0(x, y - h)) / (2 * h), rel=1e-6)
    dA = (u(0.3 + h, 5.0)(x, y) - u(0.3 - h, 5.0)(x, y)) / (2 * h)
    dB = (u(0.3, 5.0 + h)(x, y) - u(0.3, 5.0 - h)(x, y)) / (2 * h)
    assert f["A"](x, y) == pytest.approx(dA, rel=1e-5)
    assert f["B"](x, y) == pytest.approx(dB, rel=1e-5)


def test_peaks():
    pk = peaks(2.0)
    assert pk.gamma == pytest.approx(1.0)
    assert pk.points[0] == (-1.0, 0.0)
    with pytest.raises(ValueError):
        peaks(0.0)
    for phi, dphi in peak_residuals():
        assert phi.is_zero() and dphi.is_zero()


def test_eta():
    eta, vals = eta_error()
    assert eta == eta_display()
    assert [str(v) for v in vals] == [
        "-179*gamma^2 + 1848", "271*gamma^2 + 1848", "271*gamma^2 + 1848"]


def test_identities():
    assert check_zz_identities()
    assert check_omega_identities()
    x = np.linspace(-2, 2, 5)
    L = x * x + 3
    assert np.allclose(omega_float(x, 0 * x), 24 * (-3) * (L - 4 * x * x) / L**3)


def test_sup_error_small_grid():
    with pytest.raises(ValueError):
        sup_error(1e3, extent=1.0)
    assert sup_error(1e3, n=201, patch_n=81) > 0
