import pytest
from hypothesis import given, settings, strategies as st

from lumpkit.exactfield import I, S3, FieldElem
from lumpkit.hirota import (
    BILINEAR_BOUSSINESQ, BilinearOp, apply_op, back2, boussinesq_residual, gh_system,
    hirota_apply, parse_op,
)
from lumpkit.polyring import XY, ParamPoly, parse_poly

coef = st.builds(FieldElem, st.integers(-4, 4), st.integers(-2, 2), st.integers(-4, 4))
polys = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, max_size=4).map(
    lambda d: ParamPoly(d, XY))
orders = st.tuples(st.integers(0, 3), st.integers(0, 3))


def test_small_products():
    f, g = parse_poly("x"), parse_poly("x^2")
    # D_x f.g = f_x g - f g_x
    assert hirota_apply(1, 0, f, g) == parse_poly("x^2 - 2*x^2")
    assert hirota_apply(2, 0, f, f) == parse_poly("-2")


def test_residual_of_lump_and_counterexample():
    assert boussinesq_residual(parse_poly("x^2 + y^2 + 3")).is_zero()
    assert boussinesq_residual(parse_poly("x^2")) == parse_poly("4*x^2 + 24")


def test_parse_op():
    assert parse_op("D_x^4 - D_x^2 - D_y^2") == BILINEAR_BOUSSINESQ
    assert parse_op("2*D_z - s3*D_x^2") == gh_system()[0]
    assert parse_op("D_z + D_zb") == BilinearOp.D_x()
    assert str(BILINEAR_BOUSSINESQ) == "D_x^4 - D_x^2 - D_y^2"


def test_back2_sign():
    with pytest.raises(ValueError):
        back2(0)
    e1, _ = back2(1)
    assert e1.terms[(1, 0)] == S3 / 3


@settings(max_examples=40)
@given(orders, polys, polys)
def test_symmetry(m, f, g):
    a = hirota_apply(m[0], m[1], f, g)
    b = hirota_apply(m[0], m[1], g, f)
    assert a == (b if (m[0] + m[1]) % 2 == 0 else -b)


@settings(max_examples=40)
@given(orders, polys, polys, polys, coef)
def test_bilinear(m, f, g, h, c):
    lhs = hirota_apply(m[0], m[1], f + h.scale(c), g)
    rhs = hirota_apply(m[0], m[1], f, g) + hirota_apply(m[0], m[1], h, g).scale(c)
    assert lhs == rhs


@settings(max_examples=30)
@given(polys, polys)
def test_zz_and_xy_agree(f, g):
    op = parse_op("D_x^3 - s3i*D_x*D_y + D_y")
    assert apply_op(op, f, g) == apply_op(op, f.to_zz(), g.to_zz())


def _check_degree_products(n, j, k):
    z, zb = ParamPoly.z(), ParamPoly.zbar()
    Dz, Dzb = BilinearOp.D_z(), BilinearOp.D_zbar()
    f = z ** n * zb ** n
    g = z ** j * zb ** k
    # D_zbar(z^n zb^n . z^j zb^k) = (n - k) z^(n+j) zb^(n+k-1)
    want = (z ** (n + j) * zb ** (n + k - 1)).scale(n - k)
    assert apply_op(Dzb, f, g).to_zz() == want.to_zz()
    # D_z^2 has coefficient n(n-1) - 2nj + j(j-1)
    want = (z ** (n + j - 2) * zb ** (n + k)).scale(n * (n - 1) - 2 * n * j + j * (j - 1)) \
        if n + j >= 2 else ParamPoly.zero()
    assert apply_op(Dz * Dz, f, g).to_zz() == want.to_zz()
    # D_z D_zbar
    want = (z ** (n + j - 1) * zb ** (n + k - 1)).scale(n * n - n * k - n * j + j * k) \
        if n + j >= 1 and n + k >= 1 else ParamPoly.zero()
    assert apply_op(Dz * Dzb, f, g).to_zz() == want.to_zz()


@pytest.mark.parametrize("n", range(1, 6))
def test_monomial_products(n):
    for j in range(6):
        for k in range(6):
            _check_degree_products(n, j, k)
