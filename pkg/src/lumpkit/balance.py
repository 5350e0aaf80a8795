"""Balancing map for three lumps, its kernel, and quadrature checks of the
interaction formulas.

Exact configurations use ``FieldElem`` points; float configurations use
Python complex numbers.  Single-centre integrals over the plane use a polar
rule (tangent-mapped Gauss in r, trapezoid in the angle); multi-lump
integrands use tensor Gauss-Legendre panels graded around the lump centres
with mapped tails.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .catalog import hAB, lump_U_float, omega_float, peaks, u_evaluator
from .exactfield import ONE, S3I, ZERO, FieldElem, as_field

__all__ = [
    "Configuration",
    "reference_configuration",
    "F_map",
    "F_jacobian",
    "exact_rref",
    "reference_kernel",
    "KernelReport",
    "NewtonReport",
    "newton_refine",
    "orbit_distance",
    "InteractionConstants",
    "interaction_constants",
    "projection_check",
    "pairing_check",
    "p_values",
    "fit_centres",
    "QuadratureError",
]


class QuadratureError(RuntimeError):
    """Refinement did not reach the requested tolerance."""


# ---------------------------------------------------------------------------
# configurations and the map F
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Configuration:
    z: tuple
    exact: bool = False

    def __post_init__(self):
        if len(self.z) != 3:
            raise ValueError("a configuration has three points")
        for a, b in itertools.combinations(self.z, 2):
            if (a - b) == 0:
                raise ValueError("configuration points must be pairwise distinct")

    @classmethod
    def of(cls, points) -> "Configuration":
        pts = tuple(points)
        if all(as_field(p) is not NotImplemented for p in pts):
            return cls(tuple(as_field(p) for p in pts), exact=True)
        return cls(tuple(complex(p) for p in pts), exact=False)

    def as_complex(self) -> np.ndarray:
        if self.exact:
            return np.array([p.to_complex() for p in self.z])
        return np.array(self.z, dtype=complex)


def reference_configuration() -> Configuration:
    """z1 = -1, z2 = (1 + s3 i)/2, z3 = (1 - s3 i)/2."""
    half = Fraction(1, 2)
    return Configuration((-ONE, FieldElem(half) + S3I * half, FieldElem(half) - S3I * half), exact=True)


def _pw(x, k: int):
    return x ** k if not isinstance(x, FieldElem) else x.inv() ** (-k) if k < 0 else x ** k


def F_map(cfg: Configuration) -> tuple:
    """F_j = sum_{k != j} (z_j - z_k)^-3."""
    z = cfg.z
    out = []
    for j in range(3):
        s = ZERO if cfg.exact else 0j
        for k in range(3):
            if k != j:
                s = s + _pw(z[j] - z[k], -3)
        out.append(s)
    return tuple(out)


def F_jacobian(cfg: Configuration) -> list:
    """Holomorphic Jacobian: F_jk = 3 (z_j - z_k)^-4 off the diagonal, rows sum to zero."""
    z = cfg.z
    J = [[None] * 3 for _ in range(3)]
    for j in range(3):
        diag = ZERO if cfg.exact else 0j
        for k in range(3):
            if k != j:
                v = _pw(z[j] - z[k], -4) * 3
                J[j][k] = v
                diag = diag - v
        J[j][j] = diag
    return J


def exact_rref(rows: Sequence[Sequence[FieldElem]]) -> tuple[list, list]:
    """Reduced row echelon form over K; returns (rows, pivot columns)."""
    A = [[as_field(v) for v in r] for r in rows]
    nrows = len(A)
    ncols = len(A[0]) if A else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if not A[i][c].is_zero()), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = A[r][c].inv()
        A[r] = [v * inv for v in A[r]]
        for i in range(nrows):
            if i != r and not A[i][c].is_zero():
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return A, pivots


def _nullspace(M) -> list:
    R, piv = exact_rref(M)
    n = len(M[0])
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = [ZERO] * n
        v[f] = ONE
        for i, c in enumerate(piv):
            v[c] = -R[i][f]
        basis.append(v)
    return basis


@dataclass
class KernelReport:
    matrix: list
    rank: int
    nullity: int
    basis: list
    basis_rref: list
    expected_rref: list
    matches: bool


def reference_kernel() -> KernelReport:
    """Exact nullspace of M = DF at the reference configuration."""
    cfg = reference_configuration()
    M = F_jacobian(cfg)
    basis = _nullspace(M)
    b1 = [ONE, ONE, ONE]
    b2 = list(cfg.z)
    got, _ = exact_rref(basis)
    want, _ = exact_rref([b1, b2])
    return KernelReport(M, 3 - len(basis), len(basis), basis, got, want, got == want)


# ---------------------------------------------------------------------------
# Newton refinement with gauge fixing
# ---------------------------------------------------------------------------

@dataclass
class NewtonReport:
    config: Configuration
    iterations: int
    residual: float
    converged: bool
    orbit_distance: float
    history: list = field(default_factory=list)
    message: str = ""


def orbit_distance(z: np.ndarray, ref: np.ndarray | None = None) -> float:
    """Distance from z to {a + b ref_perm} after normalizing the scale of z."""
    ref = reference_configuration().as_complex() if ref is None else ref
    z = np.asarray(z, dtype=complex)
    zc = z - z.mean()
    scale = np.linalg.norm(zc)
    if scale == 0:
        return float("inf")
    zc = zc / scale
    best = np.inf
    for perm in itertools.permutations(range(3)):
        r = ref[list(perm)]
        rc = r - r.mean()
        b = np.vdot(rc, zc) / np.vdot(rc, rc)
        best = min(best, float(np.linalg.norm(zc - b * rc)))
    return best


def newton_refine(cfg: Configuration, tol: float = 1e-12, max_iter: int = 60) -> NewtonReport:
    """Solve F = 0 with z1 and the centroid pinned; z2 is the unknown, z3 = 3c - z1 - z2."""
    z = cfg.as_complex().astype(complex)
    z1, c = z[0], z.mean()
    w = z[1]
    history = []

    def state(w):
        zz = np.array([z1, w, 3 * c - z1 - w])
        return zz, np.array(F_map(Configuration(tuple(zz))), dtype=complex)

    it = 0
    msg = ""
    zz, F = state(w)
    res = float(np.linalg.norm(F))
    history.append(res)
    while res >= tol and it < max_iter:
        J = np.array(F_jacobian(Configuration(tuple(zz))), dtype=complex)
        col = (J[:, 1] - J[:, 2]).reshape(3, 1)
        if np.linalg.norm(col) == 0:
            msg = "singular reduced Jacobian"
            break
        step, *_ = np.linalg.lstsq(col, -F, rcond=None)
        w_new = w + step[0]
        # damped step keeps the points distinct
        lam = 1.0
        while lam > 1e-6:
            try:
                zn, Fn = state(w + lam * step[0])
                if np.linalg.norm(Fn) < res or lam < 1e-3:
                    break
            except ValueError:
                pass
            lam *= 0.5
        else:
            msg = "line search failed"
            break
        w_new = w + lam * step[0]
        it += 1
        w = w_new
        zz, F = state(w)
        res = float(np.linalg.norm(F))
        history.append(res)
    converged = res < tol
    if not converged and not msg:
        msg = f"no convergence after {it} iterations"
    return NewtonReport(Configuration(tuple(zz)), it, res, converged, orbit_distance(zz), history, msg)


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def tangent_rule(n: int, R: float = 2.0):
    """1D rule on the real line via x = R tan(theta)."""
    t, w = _leggauss(n)
    th = 0.5 * np.pi * t
    x = R * np.tan(th)
    wx = w * 0.5 * np.pi * R / np.cos(th) ** 2
    return x, wx


def graded_rule(centers: Sequence[float], n: int = 16, inner: float = 0.25, ratio: float = 2.0,
                reach: float | None = None):
    """Composite 1D rule with panels graded geometrically around each centre.

    Panels cover [lo, hi] = [min(c) - reach, max(c) + reach]; the two tails
    are mapped by x = hi / s (s in (0, 1]) so algebraic decay is integrated
    with smooth weights.
    """
    cs = sorted(set(float(c) for c in centers))
    if reach is None:
        reach = max(8.0, 0.5 * (cs[-1] - cs[0]) if len(cs) > 1 else 8.0)
    lo, hi = cs[0] - reach, cs[-1] + reach
    edges = {lo, hi}
    for c in cs:
        h = inner
        edges.add(c)
        while h < 2 * reach + (cs[-1] - cs[0]):
            for e in (c - h, c + h):
                if lo < e < hi:
                    edges.add(e)
            h *= ratio
    edges = np.array(sorted(edges))
    t, w = _leggauss(n)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (b - a) * t + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    # tails: x = X0 + (X1 scale) / s - scale, with s in (0, 1]
    s = 0.5 * (t + 1.0)
    sw = 0.5 * w
    for anchor, sign in ((hi, 1.0), (lo, -1.0)):
        sc = reach
        xs.append(anchor + sign * sc * (1.0 / s - 1.0))
        ws.append(sw * sc / s**2)
    x = np.concatenate(xs)
    wt = np.concatenate(ws)
    order = np.argsort(x)
    return x[order], wt[order]


def integrate2d(f: Callable, rx, ry, chunk: int = 512) -> float:
    """Tensor rule sum_{ij} wx_i wy_j f(x_i, y_j), summed in a fixed order."""
    x, wx = rx
    y, wy = ry
    total = 0.0
    for i in range(0, len(x), chunk):
        X, Y = np.meshgrid(x[i:i + chunk], y, indexing="ij")
        vals = f(X, Y)
        total += float(np.einsum("i,ij,j->", wx[i:i + chunk], vals, wy))
    return total


# ---------------------------------------------------------------------------
# single-lump fields
# ---------------------------------------------------------------------------

def _U_derivs(x, y):
    """U and its first and second derivatives in closed form."""
    L = x * x + y * y + 3.0
    N = y * y - x * x + 3.0
    U = 4.0 * N / L**2
    Nx, Ny = -2.0 * x, 2.0 * y
    Lx, Ly = 2.0 * x, 2.0 * y
    Ux = 4.0 * (Nx * L - 2.0 * N * Lx) / L**3
    Uy = 4.0 * (Ny * L - 2.0 * N * Ly) / L**3
    # second derivatives of 4 N / L^2
    Uxx = 4.0 * ((-2.0) / L**2 - 4.0 * Nx * Lx / L**3 - 2.0 * N * 2.0 / L**3 + 6.0 * N * Lx * Lx / L**4)
    Uyy = 4.0 * (2.0 / L**2 - 4.0 * Ny * Ly / L**3 - 2.0 * N * 2.0 / L**3 + 6.0 * N * Ly * Ly / L**4)
    Uxy = 4.0 * (-2.0 * Nx * Ly / L**3 - 2.0 * Ny * Lx / L**3 + 6.0 * N * Lx * Ly / L**4)
    return U, Ux, Uy, Uxx, Uxy, Uyy


# ---------------------------------------------------------------------------
# interaction constants
# ---------------------------------------------------------------------------

@dataclass
class InteractionConstants:
    dstar: float
    astar: float
    bstar: float
    cstar: float
    errors: dict
    history: list


def polar_rule(nr: int, nphi: int, R: float = 2.0):
    """Nodes and weights on the plane: r = R tan(pi t / 2) with Gauss in t,
    trapezoid in the angle (spectrally accurate for smooth periodic data).

    A tensor tangent map in (x, y) leaves a direction-dependent corner at
    infinity for r^-4 integrands and converges only algebraically.
    """
    t, w = _leggauss(nr)
    s = 0.5 * (t + 1.0)
    r = R * np.tan(0.5 * np.pi * s)
    wr = 0.5 * w * R * 0.5 * np.pi / np.cos(0.5 * np.pi * s) ** 2 * r
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    wphi = np.full(nphi, 2.0 * np.pi / nphi)
    X = np.outer(r, np.cos(phi))
    Y = np.outer(r, np.sin(phi))
    W = np.outer(wr, wphi)
    return X, Y, W


def integrate_polar(f: Callable, nr: int, nphi: int, R: float = 2.0) -> float:
    X, Y, W = polar_rule(nr, nphi, R)
    return float(np.sum(W * f(X, Y)))


def _refine(f: Callable, R: float, rtol: float, levels=(48, 72, 108, 162, 243)):
    hist = []
    prev = None
    for n in levels:
        val = integrate_polar(f, n, 2 * n, R)
        hist.append((n, val))
        if prev is not None:
            err = abs(val - prev)
            if err <= rtol * max(abs(val), 1e-300):
                return val, err, hist
        prev = val
    raise QuadratureError(f"no convergence to {rtol:g}: history {hist}")


@lru_cache(maxsize=4)
def interaction_constants(rtol: float = 1e-9) -> InteractionConstants:
    """d* = 24 int U^2 and a*, b*, c* = int (3 w^2 + 6 w) {U_xx, U_xy, U_yy}."""

    def dens(x, y):
        U = lump_U_float(x, y)
        return 24.0 * U * U

    def weight(x, y):
        w = omega_float(x, y)
        return 3.0 * w * w + 6.0 * w

    def a_int(x, y):
        return weight(x, y) * _U_derivs(x, y)[3]

    def b_int(x, y):
        return weight(x, y) * _U_derivs(x, y)[4]

    def c_int(x, y):
        return weight(x, y) * _U_derivs(x, y)[5]

    d, de, dh = _refine(dens, 2.0, rtol)
    a, ae, ah = _refine(a_int, 2.0, rtol)
    c, ce, ch = _refine(c_int, 2.0, rtol)
    n = ah[-1][0]
    b = integrate_polar(b_int, n, 2 * n, 2.0)
    return InteractionConstants(
        d, a, b, c,
        {"dstar": de, "astar": ae, "cstar": ce, "bstar": abs(b)},
        [("dstar", dh), ("astar", ah), ("cstar", ch)],
    )


# ---------------------------------------------------------------------------
# projection and pairing checks
# ---------------------------------------------------------------------------

def _centres(B: float, perturb: dict | None = None) -> np.ndarray:
    z = peaks(B).as_complex().copy()
    for j, dz in (perturb or {}).items():
        z[j] += dz
    return z


def _rules(z: np.ndarray, n: int):
    rx = graded_rule(z.real, n=n)
    ry = graded_rule(z.imag, n=n)
    return rx, ry


def _refined(f: Callable, z: np.ndarray, levels=(12, 18, 27)) -> tuple[float, float, list]:
    hist = []
    for n in levels:
        hist.append((n, integrate2d(f, *_rules(z, n))))
    val = hist[-1][1]
    err = abs(hist[-1][1] - hist[-2][1])
    return val, err, hist


def projection_check(B: float, perturb: dict | None = None, dstar: float | None = None) -> dict:
    """int E d_xU_j and int E d_yU_j versus -d* sum Re and d* sum Im (z_j - z_k)^-3.

    E = 6 (U1 U2 + U2 U3 + U1 U3) with U_j centred at the exact peaks (or at
    peaks moved by ``perturb``, a map index -> complex offset).
    """
    pk = peaks(B)
    z = _centres(B, perturb)
    d = dstar if dstar is not None else interaction_constants().dstar
    rows = []
    for j in range(3):
        for comp in ("x", "y"):
            def f(X, Y, j=j, comp=comp):
                Us = [_U_derivs(X - zk.real, Y - zk.imag) for zk in z]
                E = 6.0 * (Us[0][0] * Us[1][0] + Us[1][0] * Us[2][0] + Us[0][0] * Us[2][0])
                return E * (Us[j][1] if comp == "x" else Us[j][2])

            lhs, err, hist = _refined(f, z)
            s = sum(1.0 / (z[j] - z[k]) ** 3 for k in range(3) if k != j)
            rhs = -d * s.real if comp == "x" else d * s.imag
            rows.append({
                "j": j + 1, "component": comp, "lhs": lhs, "rhs": float(rhs),
                "abs_error": abs(lhs - rhs),
                "rel_error": abs(lhs - rhs) / abs(rhs) if rhs != 0 else None,
                "quad_error": err, "refinement_history": hist,
            })
    return {"B": float(B), "gamma": pk.gamma, "dstar": d, "rows": rows}


def p_values(z: np.ndarray) -> np.ndarray:
    """p_k = -2 sum_{j != k} Re (z_k - z_j)^-2."""
    z = np.asarray(z, dtype=complex)
    return np.array([-2.0 * sum((1.0 / (z[k] - z[j]) ** 2).real for j in range(3) if j != k)
                     for k in range(3)])


def fit_centres(B: float, n: int = 12) -> tuple[np.ndarray, float]:
    """Centres z_j* with xi = u - sum U_j* orthogonal to d_xU_j*, d_yU_j*.

    Starts from the exact peaks; returns (centres, max orthogonality residual).
    """
    from scipy.optimize import least_squares

    P = peaks(B).as_complex()
    u = u_evaluator(hAB(), {"A": 0.0, "B": float(B)})

    def resid(v):
        z = P + v[:3] + 1j * v[3:]
        rx, ry = _rules(z, n)
        out = []
        for j in range(3):
            for c in (1, 2):
                def f(X, Y, j=j, c=c):
                    Us = [_U_derivs(X - zk.real, Y - zk.imag) for zk in z]
                    return (u(X, Y) - sum(U[0] for U in Us)) * Us[j][c]

                out.append(integrate2d(f, rx, ry))
        return np.array(out)

    sol = least_squares(resid, np.zeros(6), xtol=1e-12, ftol=1e-14, diff_step=1e-4)
    return P + sol.x[:3] + 1j * sol.x[3:], float(np.abs(sol.fun).max())


def pairing_check(B: float, consts: InteractionConstants | None = None, pairs=None,
                  centres: str = "peaks") -> dict:
    """int d_aU_j L_u[d_bU_k] versus the closed forms in d*, a*, b*, c* and p_j.

    Since d_bU_k lies in the kernel of L_{U_k}, L_u[d_bU_k] = 6 (u - U_k) d_bU_k,
    so the pairing needs no nonlocal term.  ``centres`` is "peaks" (the exact
    P_j) or "fitted" (orthogonality-fitted centres, see ``fit_centres``).
    """
    pk = peaks(B)
    if centres == "peaks":
        z = pk.as_complex()
    elif centres == "fitted":
        z, _ = fit_centres(B)
    else:
        raise ValueError(f"unknown centres option {centres!r}")
    k_ = consts or interaction_constants()
    d = k_.dstar
    p = p_values(z)
    u = u_evaluator(hAB(), {"A": 0.0, "B": float(B)})
    comps = {"x": 1, "y": 2}
    pairs = pairs or [(j, k, a, b) for j in range(3) for k in range(3)
                      for a, b in (("x", "x"), ("x", "y"), ("y", "y"))]
    rows = []
    for j, k, a, b in pairs:
        def f(X, Y, j=j, k=k, a=a, b=b):
            Uj = _U_derivs(X - z[j].real, Y - z[j].imag)
            Uk = _U_derivs(X - z[k].real, Y - z[k].imag)
            return 6.0 * (u(X, Y) - Uk[0]) * Uj[comps[a]] * Uk[comps[b]]

        lhs, err, hist = _refined(f, z)
        if j != k:
            w = 1.0 / (z[j] - z[k]) ** 4
            rhs = {("x", "x"): 3 * d * w.real, ("x", "y"): -3 * d * w.imag,
                   ("y", "y"): -3 * d * w.real}[(a, b)]
        else:
            s = sum(1.0 / (z[j] - z[m]) ** 4 for m in range(3) if m != j)
            rhs = {("x", "x"): -3 * d * s.real + k_.astar * p[j] ** 2,
                   ("x", "y"): 3 * d * s.imag + k_.bstar * p[j] ** 2,
                   ("y", "y"): 3 * d * s.real + k_.cstar * p[j] ** 2}[(a, b)]
        rows.append({
            "j": j + 1, "k": k + 1, "pair": a + b, "lhs": lhs, "rhs": float(rhs),
            "rel_error": abs(lhs - rhs) / abs(rhs) if rhs != 0 else None,
            "quad_error": err, "refinement_history": hist,
        })
    return {"B": float(B), "gamma": pk.gamma, "dstar": d, "p": p.tolist(), "centres": centres,
            "z": [[c.real, c.imag] for c in z], "rows": rows}
