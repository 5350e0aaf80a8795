import numpy as np
import pytest

from lumpkit.spectral import (
    Family, SpectralGrid, SpectralProblem, _choose_delta0, apply_S, assemble, dense_eigs,
    kernel_count, kernel_residual, lowest_eigs, morse_index,
)


def _free(L=10.0, N=32):
    g = SpectralGrid.square(L, N)
    return SpectralProblem(g, np.zeros((N, N)))


def test_grid_validation():
    with pytest.raises(ValueError):
        SpectralGrid(1.0, 1.0, 31, 32)
    with pytest.raises(ValueError):
        SpectralGrid(0.0, 1.0, 32, 32)
    assert SpectralGrid.square(30, 128).scaled(fL=1.5, fN=1.5) == SpectralGrid.square(45, 192)


def test_free_symbol_on_plane_wave():
    P = _free()
    X, _ = P.grid.nodes()
    k = np.pi / P.grid.Lx
    v = np.cos(k * X)
    Sv = apply_S(P, v)
    assert np.allclose(Sv, (k * k + 1) * v, atol=1e-10)


def test_kx_zero_content_is_projected_out():
    P = _free()
    _, Y = P.grid.nodes()
    v = np.cos(np.pi * Y / P.grid.Ly) + 1.0
    assert np.abs(apply_S(P, v)).max() < 1e-12
    assert np.abs(P.project(v)).max() < 1e-12


def test_symmetry_random_pairs():
    P = assemble(Family("hAB", 0.0, 0.0), SpectralGrid.square(12, 32))
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        v, w = rng.standard_normal((2, 32, 32))
        v /= np.linalg.norm(v)
        w /= np.linalg.norm(w)
        worst = max(worst, abs(np.sum(v * apply_S(P, w)) - np.sum(w * apply_S(P, v))))
    assert worst < 1e-10


def test_nonpotential_part_bounded_below():
    P = _free()
    rng = np.random.default_rng(1)
    for _ in range(10):
        v = P.project(rng.standard_normal((32, 32)))
        assert np.sum(v * apply_S(P, v)) >= np.sum(v * v) * (1 - 1e-12)


def test_free_spectrum_at_least_one():
    res = lowest_eigs(_free(), 6)
    assert res.eigenvalues.min() >= 1 - 1e-8


@pytest.mark.parametrize("family", [Family("U"), Family("hAB", 0.0, 0.0)])
def test_dense_cross_check(family):
    P = assemble(family, SpectralGrid.square(12, 32))
    res = lowest_eigs(P, 10)
    assert np.all(res.residuals < 1e-8)
    assert np.abs(res.eigenvalues - dense_eigs(P, 10)).max() < 1e-6


def test_m_limit():
    with pytest.raises(ValueError):
        lowest_eigs(_free(), 41)


def test_disk_cache(tmp_path):
    fam = Family("U")
    g = SpectralGrid.square(12, 32)
    a = lowest_eigs(assemble(fam, g), 6, cache_dir=tmp_path)
    assert len(list(tmp_path.glob("eig-*.npz"))) == 1
    b = lowest_eigs(assemble(fam, g), 6, cache_dir=tmp_path)
    assert b.method == "lanczos(cached)"
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_choose_delta0():
    vals = np.array([-3.0, -0.5, 1e-4, -2e-4, 3e-4, 0.3, 0.9])
    d0, gap, K = _choose_delta0(vals, 1e-2)
    assert K == 3
    assert d0 == pytest.approx(np.sqrt(3e-4 * 0.3))
    assert gap == pytest.approx(0.3 / d0)


def test_family_validation():
    with pytest.raises(ValueError):
        Family("KdV")
    with pytest.raises(ValueError):
        morse_index(Family("hAB", 0.0, 2000.0), SpectralGrid.square(20, 64), check_stability=False)


def test_lump_counts_small_box():
    g = SpectralGrid.square(20, 96)
    m = morse_index(Family("U"), g, check_stability=False)
    assert m.count == 1
    k = kernel_count(Family("U"), g)
    assert k.count == 2 and k.status == "ok"
    assert max(k.defects.values()) < 0.1


def test_kernel_residual_decreases_with_box():
    fam = Family("U")
    res = []
    for L in (15.0, 30.0):
        g = SpectralGrid.square(L, int(L * 4.8) // 2 * 2)
        P = assemble(fam, g)
        X, Y = g.nodes()
        res.append(kernel_residual(P, fam.kernel_fields()["x"](X, Y)))
    assert res[1] < res[0] / 2


@pytest.mark.slow
def test_negative_cluster_shrinks_with_B():
    diam = []
    for B in (500.0, 2000.0, 8000.0):
        fam = Family("hAB", 0.0, B)
        L = max(30.0, 3.0 * fam.gamma)
        g = SpectralGrid.square(L, int(L * 128 / 30) // 2 * 2)
        w = lowest_eigs(assemble(fam, g), 8).eigenvalues
        diam.append(w[2] - w[0])
    assert diam[0] > diam[1] > diam[2]


def test_lobpcg_agrees_with_lanczos():
    P = assemble(Family("U"), SpectralGrid.square(12, 32))
    a = lowest_eigs(P, 6)
    b = lowest_eigs(P, 6, method="lobpcg")
    assert np.abs(a.eigenvalues - b.eigenvalues).max() < 1e-8
    with pytest.raises(ValueError):
        lowest_eigs(P, 6, method="arnoldi")
