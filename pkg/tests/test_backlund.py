import pytest

from lumpkit.backlund import (
    BacklundError, BacklundSystem, Direction, SingularFormulaError, chain_step, chain_step_all,
    index_quadratic, jn_roots, subleading_coefficient, verify_pair,
)
from lumpkit.catalog import g4, h6, tau2
from lumpkit.exactfield import S3, FieldElem
from lumpkit.polyring import parse_poly


def test_jn_roots_small():
    assert jn_roots(1) == {0, 3}
    assert jn_roots(2) == set()
    assert jn_roots(3) == {1, 6}
    with pytest.raises(ValueError):
        jn_roots(0)


@pytest.mark.parametrize("k", range(1, 7))
def test_jn_roots_triangular(k):
    n = k * (k + 1) // 2
    roots = jn_roots(n)
    assert {n + j for j in roots} == {k * k, (k + 1) ** 2}
    assert all(index_quadratic(n, j) == 0 for j in roots)


def test_subleading_coefficient():
    assert subleading_coefficient(1, 3) == S3
    assert subleading_coefficient(1, 0) == FieldElem(0)
    with pytest.raises(ValueError):
        subleading_coefficient(1, 2)


def test_subleading_pole_unreachable():
    # the pole j = n + 1 is never a root: the quadratic there equals -2n
    for n in range(1, 30):
        assert index_quadratic(n, n + 1) == -2 * n
        assert n + 1 not in jn_roots(n)
    assert issubclass(SingularFormulaError, ZeroDivisionError)


def test_subleading_matches_solver():
    g = chain_step(tau2(), BacklundSystem.back2(1), 3, ["alpha"]).transforms[0]
    assert g.to_zz().coeff(3, 0).constant_value() == subleading_coefficient(1, 3)


def test_chain_from_tau2():
    res = chain_step(tau2(), BacklundSystem.back2(1), 3, ["alpha"])
    assert res.transforms[0] == g4()
    assert res.free_parameters == [(1, (0, 1), "alpha")]
    assert res.leading == [(3, 4, (3, 1))]


def test_chain_j0():
    res = chain_step(tau2(), BacklundSystem.back2(1), 0)
    assert res.transforms[0] == parse_poly("zb + s3")
    assert res.free_parameters == []


def test_chain_all_runs_both_roots():
    res = chain_step_all(tau2(), BacklundSystem.back2(1), free_names=["alpha"])
    assert [lead[0] for lead in res.leading] == [0, 3]


def test_chain_from_g4_under_gh():
    res = chain_step(g4(), BacklundSystem.gh(), 3, ["beta"])
    assert res.transforms[0] == h6()
    assert res.free_parameters == [(3, (3, 0), "beta")]
    assert BacklundSystem.gh().direction is Direction.Z_LEADING


def test_default_free_names():
    res = chain_step(tau2(), BacklundSystem.back2(1), 3)
    assert res.free_parameters[0][2] == "sigma"


def test_verify_pair_zero():
    r1, r2 = verify_pair(tau2(), g4(), BacklundSystem.back2(1))
    assert r1.is_zero() and r2.is_zero()


def test_errors():
    with pytest.raises(BacklundError):
        chain_step(parse_poly("x^2"), BacklundSystem.back2(1), 3)
    with pytest.raises(BacklundError):
        chain_step(tau2(), BacklundSystem.back2(1), 2)
    # an untranslated input violates the f_{2n-1} = 0 normalization
    shifted = parse_poly("(x+1)^2 + y^2 + 3")
    with pytest.raises(BacklundError) as exc:
        chain_step(shifted, BacklundSystem.back2(1), 3)
    assert exc.value.level == 1
    # free names may not clash with symbols already in f
    with pytest.raises(BacklundError):
        chain_step(g4(), BacklundSystem.gh(), 3, ["alpha"])
