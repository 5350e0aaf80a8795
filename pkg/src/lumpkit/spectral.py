"""Fourier-collocation spectra of the second-variation operator

    S = -d_x^2 + 1 - 6u + d_x^-2 d_y^2

on a periodic box, restricted to Fourier modes with k_x != 0 (where the
nonlocal symbol k_y^2/k_x^2 is finite).  Eigenvalue counts below -delta_neg
give the Morse index; counts inside (-delta_0, delta_0) give the kernel
dimension.
"""
from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, cg, eigsh, lobpcg

from . import __version__
from .catalog import hAB, kernel_fields, lump_U_float, tau2, u_evaluator

__all__ = [
    "SpectralGrid",
    "Family",
    "SpectralProblem",
    "SpectralError",
    "EigenResult",
    "MorseResult",
    "KernelResult",
    "assemble",
    "apply_S",
    "lowest_eigs",
    "dense_eigs",
    "morse_index",
    "kernel_count",
    "kernel_residual",
    "default_cache_dir",
]

# eigenvalue placed on the excluded k_x = 0 subspace, far above the window of interest
_NULL_SHIFT = 50.0
_PRECOND_SHIFT = 8.0


class SpectralError(RuntimeError):
    """The eigensolver did not converge."""


@dataclass(frozen=True)
class SpectralGrid:
    Lx: float
    Ly: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if self.Nx % 2 or self.Ny % 2 or self.Nx < 4 or self.Ny < 4:
            raise ValueError("Nx and Ny must be even and >= 4")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("box half-lengths must be positive")

    @classmethod
    def square(cls, L: float, N: int) -> "SpectralGrid":
        return cls(float(L), float(L), int(N), int(N))

    def scaled(self, fL: float = 1.0, fN: float = 1.0) -> "SpectralGrid":
        def even(n):
            n = int(round(n))
            return n + (n % 2)

        return SpectralGrid(self.Lx * fL, self.Ly * fL, even(self.Nx * fN), even(self.Ny * fN))

    def nodes(self):
        x = -self.Lx + np.arange(self.Nx) * (2 * self.Lx / self.Nx)
        y = -self.Ly + np.arange(self.Ny) * (2 * self.Ly / self.Ny)
        return np.meshgrid(x, y, indexing="ij")

    def wavenumbers(self):
        kx = 2 * np.pi * np.fft.fftfreq(self.Nx, d=2 * self.Lx / self.Nx)
        ky = 2 * np.pi * np.fft.fftfreq(self.Ny, d=2 * self.Ly / self.Ny)
        return np.meshgrid(kx, ky, indexing="ij")

    @property
    def cell_area(self) -> float:
        return (2 * self.Lx / self.Nx) * (2 * self.Ly / self.Ny)


@dataclass(frozen=True)
class Family:
    """A member of the solution families: the lump ``U`` or ``hAB`` with (A, B)."""

    name: str = "hAB"
    A: float = 0.0
    B: float = 0.0

    def __post_init__(self):
        if self.name not in ("U", "hAB"):
            raise ValueError(f"unknown family {self.name!r}")
        # floats so that cache keys do not depend on 0 versus 0.0
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "B", float(self.B))

    def potential(self) -> Callable:
        if self.name == "U":
            return lump_U_float
        return u_evaluator(hAB(), {"A": float(self.A), "B": float(self.B)})

    def kernel_fields(self) -> dict:
        if self.name == "U":
            f = kernel_fields(tau=tau2())
            return {"x": f["x"], "y": f["y"]}
        return kernel_fields(self.A, self.B)

    @property
    def gamma(self) -> float:
        return (abs(self.B) / 2.0) ** (1.0 / 3.0) if self.name == "hAB" else 0.0


@dataclass
class SpectralProblem:
    grid: SpectralGrid
    u: np.ndarray
    family: Family | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        KX, KY = self.grid.wavenumbers()
        adm = KX != 0
        safe = np.where(adm, KX, 1.0)
        self.admissible = adm
        self.symbol = np.where(adm, KX**2 + 1.0 + KY**2 / safe**2, 0.0)
        self.pot6 = 6.0 * np.asarray(self.u, dtype=float)

    @property
    def shape(self):
        return (self.grid.Nx, self.grid.Ny)

    @property
    def size(self) -> int:
        return self.grid.Nx * self.grid.Ny

    def project(self, V: np.ndarray) -> np.ndarray:
        """Remove k_x = 0 content; V has shape (Nx, Ny) or (Nx, Ny, m)."""
        Vh = sfft.fft2(V, axes=(0, 1), workers=-1)
        mask = self.admissible if V.ndim == 2 else self.admissible[..., None]
        return np.real(sfft.ifft2(Vh * mask, axes=(0, 1), workers=-1))

    def _apply(self, V: np.ndarray, null_shift: float = 0.0) -> np.ndarray:
        batched = V.ndim == 3
        adm = self.admissible[..., None] if batched else self.admissible
        sym = self.symbol[..., None] if batched else self.symbol
        pot = self.pot6[..., None] if batched else self.pot6
        Vh = sfft.fft2(V, axes=(0, 1), workers=-1)
        PV = np.real(sfft.ifft2(Vh * adm, axes=(0, 1), workers=-1))
        Wh = sfft.fft2(pot * PV, axes=(0, 1), workers=-1) * adm
        out_h = sym * Vh - Wh
        if null_shift:
            out_h = out_h + null_shift * Vh * (~adm)
        return np.real(sfft.ifft2(out_h, axes=(0, 1), workers=-1))

    def content_key(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps({"grid": asdict(self.grid),
                             "family": asdict(self.family) if self.family else None,
                             "version": __version__}, sort_keys=True).encode())
        if self.family is None:
            h.update(np.ascontiguousarray(self.u).tobytes())
        return h.hexdigest()[:24]


def assemble(family: Family, grid: SpectralGrid) -> SpectralProblem:
    X, Y = grid.nodes()
    return SpectralProblem(grid, family.potential()(X, Y), family)


def apply_S(problem: SpectralProblem, v: np.ndarray) -> np.ndarray:
    """S v on the admissible subspace (k_x = 0 content of v is projected out)."""
    return problem._apply(np.asarray(v, dtype=float))


# ---------------------------------------------------------------------------
# eigensolvers
# ---------------------------------------------------------------------------

@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    vectors: np.ndarray | None
    iterations: int
    method: str
    grid: SpectralGrid


def default_cache_dir() -> Path:
    return Path(os.environ.get("HLL_CACHE_DIR", Path.home() / ".cache" / "lumpkit"))


def _residuals(problem: SpectralProblem, w: np.ndarray, V: np.ndarray) -> np.ndarray:
    N = problem.shape
    Vg = V.reshape(N[0], N[1], -1)
    R = problem._apply(Vg, _NULL_SHIFT) - Vg * w[None, None, :]
    return np.linalg.norm(R.reshape(problem.size, -1), axis=0) / np.linalg.norm(V, axis=0)


def _sorted(w, V, m):
    order = np.argsort(w)
    return w[order][:m], V[:, order][:, :m]


def _rayleigh_ritz(problem: SpectralProblem, V: np.ndarray, m: int):
    """Orthonormalize V, diagonalize S on span(V), keep the m lowest pairs."""
    Nx, Ny = problem.shape
    V, _ = np.linalg.qr(V)
    SV = problem._apply(V.reshape(Nx, Ny, -1), _NULL_SHIFT).reshape(problem.size, -1)
    H = V.T @ SV
    w, Q = np.linalg.eigh(0.5 * (H + H.T))
    return _sorted(w, V @ Q, m)


def _lanczos_si(problem: SpectralProblem, m: int, guard: int, seed: int, maxiter: int):
    """Shift-invert Lanczos with sigma below the spectrum.

    sigma = -6 max(u) - 1 makes S - sigma >= 2, so each inverse is a CG
    solve preconditioned by the exact inverse of the free part.
    """
    n = problem.size
    Nx, Ny = problem.shape
    sigma = -6.0 * max(float(problem.u.max()), 0.0) - 1.0
    pre_sym = np.where(problem.admissible, problem.symbol, _NULL_SHIFT) - sigma

    def shifted(v):
        return problem._apply(v.reshape(Nx, Ny), _NULL_SHIFT).ravel() - sigma * v

    def pre(v):
        vh = sfft.fft2(v.reshape(Nx, Ny), workers=-1)
        return np.real(sfft.ifft2(vh / pre_sym, workers=-1)).ravel()

    A = LinearOperator((n, n), matvec=shifted, dtype=float)
    M = LinearOperator((n, n), matvec=pre, dtype=float)
    count = [0]

    def inverse(v):
        x, info = cg(A, v, rtol=1e-13, atol=0.0, M=M, maxiter=maxiter)
        if info > 0:
            raise SpectralError(f"inner CG solve did not converge in {maxiter} iterations")
        count[0] += 1
        return x

    T = LinearOperator((n, n), matvec=inverse, dtype=float)
    k = m + guard
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        _, V = eigsh(T, k=k, which="LA", tol=1e-12, v0=v0, ncv=max(2 * k + 1, 40))
    except ArpackNoConvergence as exc:
        raise SpectralError(f"Lanczos did not converge after {count[0]} inverse applications") from exc
    w, V = _rayleigh_ritz(problem, V, m)
    return w, V, count[0]


def _lobpcg(problem: SpectralProblem, m: int, guard: int, seed: int, maxiter: int, tol: float):
    """Preconditioned LOBPCG; the preconditioner is the inverse of (symbol + 8)."""
    n = problem.size
    Nx, Ny = problem.shape

    def mm(V):
        return problem._apply(V.reshape(Nx, Ny, -1), _NULL_SHIFT).reshape(n, -1)

    pre_sym = np.where(problem.admissible, problem.symbol, _NULL_SHIFT) + _PRECOND_SHIFT

    def pre(V):
        Vh = sfft.fft2(V.reshape(Nx, Ny, -1), axes=(0, 1), workers=-1)
        return np.real(sfft.ifft2(Vh / pre_sym[..., None], axes=(0, 1), workers=-1)).reshape(n, -1)

    A = LinearOperator((n, n), matvec=lambda v: mm(v.reshape(-1, 1)).ravel(), matmat=mm, dtype=float)
    M = LinearOperator((n, n), matvec=lambda v: pre(v.reshape(-1, 1)).ravel(), matmat=pre, dtype=float)
    X0 = np.random.default_rng(seed).standard_normal((n, m + guard))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        w, V, hist = lobpcg(A, X0, M=M, largest=False, tol=tol, maxiter=maxiter,
                            retResidualNormsHistory=True)
    w, V = _rayleigh_ritz(problem, V, m)
    return w, V, len(hist)


def lowest_eigs(problem: SpectralProblem, m: int = 10, tol: float = 1e-8, maxiter: int = 1000,
                guard: int = 4, seed: int = 0, cache_dir: Path | str | None = None,
                keep_vectors: bool = True, method: str = "lanczos") -> EigenResult:
    """The m smallest eigenvalues of S on the admissible subspace.

    ``method`` is "lanczos" (shift-invert, the default) or "lobpcg".  The
    k_x = 0 subspace is shifted to a large constant so it stays out of the
    low spectrum.  Every returned pair has relative residual below ``tol``,
    else SpectralError.
    """
    if m > 40:
        raise ValueError("m must be <= 40")
    if method not in ("lanczos", "lobpcg"):
        raise ValueError(f"unknown method {method!r}")
    key = f"{problem.content_key()}-{method}-m{m}-t{tol:g}-s{seed}-g{guard}"
    if key in problem._cache:
        return problem._cache[key]
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"eig-{key}.npz"
        if path.exists():
            d = np.load(path)
            res = EigenResult(d["w"], d["r"], d["V"] if keep_vectors else None, int(d["it"]),
                              f"{method}(cached)", problem.grid)
            problem._cache[key] = res
            return res

    if method == "lanczos":
        w, V, its = _lanczos_si(problem, m, guard, seed, maxiter)
    else:
        w, V, its = _lobpcg(problem, m, guard, seed, maxiter, tol)
    r = _residuals(problem, w, V)
    if np.any(r > tol):
        raise SpectralError(
            f"{method} did not converge: {its} iterations, residuals {np.array2string(r, precision=2)}"
        )
    res = EigenResult(w, r, V if keep_vectors else None, its, method, problem.grid)
    problem._cache[key] = res
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(path, w=w, r=r, V=V, it=its)
    return res


def dense_eigs(problem: SpectralProblem, m: int = 10) -> np.ndarray:
    """Dense reference: assemble S on the admissible subspace and call eigh."""
    n = problem.size
    if n > 4096:
        raise ValueError("dense solve is meant for small grids (Nx * Ny <= 4096)")
    Nx, Ny = problem.shape
    I = np.eye(n).reshape(Nx, Ny, n)
    S = problem._apply(I, _NULL_SHIFT).reshape(n, n)
    S = 0.5 * (S + S.T)
    return eigh(S, eigvals_only=True, subset_by_index=[0, m - 1])


# ---------------------------------------------------------------------------
# counts
# ---------------------------------------------------------------------------

@dataclass
class MorseResult:
    count: int
    status: str  # "ok" or "inconclusive"
    delta_neg: float
    runs: list  # (grid, count, eigenvalues)
    message: str = ""


@dataclass
class KernelResult:
    count: int
    status: str
    delta_zero: float
    gap_ratio: float
    eigenvalues: np.ndarray
    defects: dict
    basis: np.ndarray | None
    message: str = ""


def _solve(family: Family, grid: SpectralGrid, m: int, cache_dir=None, **kw) -> EigenResult:
    return lowest_eigs(assemble(family, grid), m=m, cache_dir=cache_dir, **kw)


def morse_index(family: Family, grid: SpectralGrid, delta_neg: float = 1e-2, m: int = 12,
                check_stability: bool = True, cache_dir=None) -> MorseResult:
    """Number of eigenvalues below -delta_neg.

    With ``check_stability`` the count is repeated with 1.5x the points and
    with a 1.5x box at the same grid spacing; disagreement is reported as
    status "inconclusive".
    """
    if family.name == "hAB" and min(grid.Lx, grid.Ly) < 3 * family.gamma:
        raise ValueError("box must extend at least 3 gamma in each direction")
    grids = [grid]
    if check_stability:
        grids += [grid.scaled(fN=1.5), grid.scaled(fL=1.5, fN=1.5)]
    runs = []
    for g in grids:
        res = _solve(family, g, m, cache_dir)
        cnt = int(np.sum(res.eigenvalues < -delta_neg))
        if cnt == m:
            raise SpectralError("all computed eigenvalues are negative; increase m")
        runs.append((g, cnt, res.eigenvalues))
    counts = {c for _, c, _ in runs}
    status = "ok" if len(counts) == 1 else "inconclusive"
    msg = "" if status == "ok" else f"count varies across refinements: {[c for _, c, _ in runs]}"
    return MorseResult(runs[0][1], status, delta_neg, runs, msg)


def _choose_delta0(vals: np.ndarray, delta_neg: float, max_kernel: int = 8):
    """Split the small |lambda| at the largest ratio gap.

    Returns (delta_0, gap_ratio, count).  The rule agrees with the geometric
    mean of the K-th and (K+1)-th smallest |lambda| when the kernel has
    dimension K.
    """
    a = np.sort(np.abs(vals[vals >= -delta_neg]))
    if len(a) < 2:
        raise SpectralError("too few eigenvalues above -delta_neg to locate a kernel gap")
    top = min(max_kernel, len(a) - 1)
    ratios = a[1:top + 1] / np.maximum(a[:top], 1e-300)
    K = int(np.argmax(ratios)) + 1
    d0 = float(np.sqrt(a[K - 1] * a[K]))
    return d0, float(a[K] / d0), K


def kernel_residual(problem: SpectralProblem, f: np.ndarray) -> float:
    """||S Pf|| / ||Pf|| for a sampled field f."""
    pf = problem.project(f)
    return float(np.linalg.norm(apply_S(problem, pf)) / np.linalg.norm(pf))


def kernel_count(family: Family, grid: SpectralGrid, delta_zero: float | None = None,
                 delta_neg: float = 1e-2, m: int = 12, gap_min: float = 3.0,
                 cache_dir=None) -> KernelResult:
    """Eigenvalues inside (-delta_0, delta_0), with gap guard and projection defects.

    The defect of an analytic kernel field f is ||Pf - QQ^T Pf|| / ||Pf||
    with Q an orthonormal basis of the numerical near-kernel eigenvectors.
    """
    problem = assemble(family, grid)
    res = lowest_eigs(problem, m=m, cache_dir=cache_dir)
    w = res.eigenvalues
    if delta_zero is None:
        d0, gap, _ = _choose_delta0(w, delta_neg)
    else:
        d0 = float(delta_zero)
        outside = np.abs(w[np.abs(w) >= d0])
        gap = float(outside.min() / d0) if len(outside) else float("inf")
    inside = np.abs(w) < d0
    count = int(inside.sum())
    Q = None
    defects = {}
    if res.vectors is not None and count:
        Q, _ = np.linalg.qr(res.vectors[:, inside])
        X, Y = grid.nodes()
        for name, f in family.kernel_fields().items():
            pf = problem.project(f(X, Y)).ravel()
            defects[name] = float(np.linalg.norm(pf - Q @ (Q.T @ pf)) / np.linalg.norm(pf))
    status = "ok" if gap >= gap_min else "inconclusive"
    msg = "" if status == "ok" else f"gap ratio {gap:.3g} below {gap_min}"
    return KernelResult(count, status, d0, gap, w, defects, Q, msg)
