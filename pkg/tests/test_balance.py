import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lumpkit.balance import (
    Configuration, F_jacobian, F_map, _U_derivs, integrate2d, graded_rule, integrate_polar,
    interaction_constants, newton_refine, orbit_distance, p_values, pairing_check,
    reference_configuration, reference_kernel,
)
from lumpkit.catalog import lump_U_float
from lumpkit.exactfield import ZERO

cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def test_reference_is_balanced_exactly():
    cfg = reference_configuration()
    assert all(f == ZERO for f in F_map(cfg))
    J = F_jacobian(cfg)
    for row in J:
        assert row[0] + row[1] + row[2] == ZERO


def test_reference_kernel():
    rep = reference_kernel()
    assert (rep.rank, rep.nullity) == (1, 2)
    assert rep.matches


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration((1, 1, 2))
    with pytest.raises(ValueError):
        Configuration((1, 2))


@settings(max_examples=50)
@given(cplx, cplx, cplx, cplx, cplx)
def test_F_equivariance(z1, z2, z3, a, b):
    zs = (z1, z2, z3)
    if min(abs(zs[i] - zs[j]) for i in range(3) for j in range(i)) < 0.1 or abs(a) < 0.1:
        return
    F = np.array(F_map(Configuration(zs)))
    G = np.array(F_map(Configuration(tuple(a * z + b for z in zs))))
    assert np.allclose(G, F / a**3, rtol=1e-8, atol=1e-10)
    P = np.array(F_map(Configuration((z2, z3, z1))))
    assert np.allclose(P, F[[1, 2, 0]])
    assert abs(F.sum()) < 1e-8 * (1 + np.abs(F).sum())


def test_newton_from_perturbed_reference():
    ref = reference_configuration().as_complex()
    rng = np.random.default_rng(3)
    z0 = ref + 0.05 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
    rep = newton_refine(Configuration(tuple(z0)))
    assert rep.converged and rep.iterations < 10
    assert rep.orbit_distance < 1e-10


def test_newton_reports_failure():
    rep = newton_refine(Configuration((0j, 1 + 0j, 2 + 0j)), max_iter=20)
    assert not rep.converged and rep.message


def test_orbit_distance_invariance():
    ref = reference_configuration().as_complex()
    moved = (2 - 1j) * ref[[2, 0, 1]] + 0.3j
    assert orbit_distance(moved) < 1e-12


def test_U_derivs_closed_form():
    x, y, h = 0.8, -0.4, 1e-5
    U, Ux, Uy, Uxx, Uxy, Uyy = _U_derivs(np.array(x), np.array(y))
    assert U == pytest.approx(lump_U_float(x, y))
    assert Ux == pytest.approx((lump_U_float(x + h, y) - lump_U_float(x - h, y)) / (2 * h), rel=1e-6)
    assert Uy == pytest.approx((lump_U_float(x, y + h) - lump_U_float(x, y - h)) / (2 * h), rel=1e-6)


def test_polar_rule_exact_integral():
    # int 24 U^2 over the plane equals 64 pi
    val = integrate_polar(lambda x, y: 24 * lump_U_float(x, y) ** 2, 72, 144)
    assert val == pytest.approx(64 * math.pi, rel=1e-11)


def test_graded_rule_integral():
    rx = graded_rule([0.0], n=16)
    val = integrate2d(lambda x, y: 1.0 / (1 + x * x + y * y) ** 2, rx, rx)
    # the mapped tails converge algebraically for r^-4 decay
    assert val == pytest.approx(math.pi, rel=1e-6)


def test_interaction_constants():
    c = interaction_constants()
    assert abs(c.bstar) < 1e-8
    assert c.dstar == pytest.approx(64 * math.pi, rel=1e-9)
    assert c.cstar < 0 and c.astar < 0


def test_p_values_reference():
    p = p_values(reference_configuration().as_complex())
    # (z_1 - z_2)^-2 = e^{-i pi/3} / 3 has real part 1/6
    assert np.allclose(p, [-2 / 3, 1 / 3, 1 / 3], atol=1e-14)
    assert abs(p.sum()) < 1e-14


def test_pairing_single_offdiagonal():
    rep = pairing_check(2 * 25.0**3, pairs=[(0, 1, "x", "x")])
    row = rep["rows"][0]
    assert row["rel_error"] < 0.15
