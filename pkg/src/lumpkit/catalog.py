"""Concrete tau functions, the real-form map to h_{A,B}, and the exact identities
used in the asymptotic analysis of u_{0,B}.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .exactfield import ONE, I, S3, S3I, FieldElem
from .hirota import boussinesq_residual
from .polyring import (
    XY,
    ZZBAR,
    ParamPoly,
    ParamScalar,
    RationalFunction,
    is_real_valued,
    param_substitute,
    parse_poly,
    poly_shift,
    ratfn_equal,
)

__all__ = [
    "tau2",
    "tau2_shifted",
    "g4",
    "g4AB",
    "h6",
    "hAB",
    "H6_PRINTED",
    "G4AB_PRINTED",
    "TAU_FAMILIES",
    "REALIZATION_BINDINGS",
    "REALIZATION_SHIFT",
    "realize",
    "realize_hAB",
    "RationalSolution",
    "solution_from_tau",
    "lump_U",
    "lump_U_float",
    "u_evaluator",
    "kernel_fields",
    "PeakSet",
    "peaks",
    "peak_residuals",
    "phi_poly",
    "eta_error",
    "eta_display",
    "sup_error",
    "check_zz_identities",
    "check_omega_identities",
    "omega_rational",
    "omega_float",
    "check_tau_positive",
    "pretty",
]

_TAU2 = "x^2 + y^2 + 3"

_G4 = "z^3*zb + s3*z^3 + s3*z^2*zb + 12*z^2 - 3*zb^2 + 3*z*zb + 9*s3*z + alpha*zb - 36 + s3*alpha"

# z^2 coefficient is -(90 + 2 s3 beta); the Backlund system forces the beta.
_H6 = (
    "z^3*zb^3 - 2*s3*z^2*zb^3 + 2*s3*z^3*zb^2 - 3*z^4 + 15*z^2*zb^2 + 6*z*zb^3 - 3*zb^4"
    " + 6*z^3*zb + beta*z^3 + 24*s3*z^2*zb - 24*s3*z*zb^2 + (3*s3 + alpha)*zb^3"
    " - (90 + 2*s3*beta)*z^2 + 63*z*zb - (72 - 2*s3*alpha)*zb^2"
    " + (189*s3 - 3*alpha + 6*beta)*z + (-180*s3 + 6*alpha - 3*beta)*zb"
    " + 1161 - 6*s3*alpha + 9*s3*beta + alpha*beta"
)

# As typeset, with -(90 + 2 s3) z^2; kept to document that it fails the system.
H6_PRINTED = _H6.replace("(90 + 2*s3*beta)", "(90 + 2*s3)")

_HAB = (
    "x^6 + 3*x^4*y^2 + 3*x^2*y^4 + y^6 + 25*x^4 + 90*x^2*y^2 + 17*y^4"
    " + B*x^3 + 3*A*x^2*y - 3*B*x*y^2 - A*y^3 - 125*x^2 + 475*y^2"
    " - B*x + 5*A*y + 1875 + A^2/4 + B^2/4"
)

# As typeset, with s3 i y^3 / 8; the realization of g4 gives 8 s3 i y^3 / 3.
G4AB_PRINTED = (
    "x^4 + 2*i*x^3*y + 2*i*x*y^3 - y^4 + 10*s3/3*x^3 + 4*s3i*x^2*y + 2*s3*x*y^2"
    " + s3i/8*y^3 + 20*x^2 + 30*i*x*y + 2*y^2 + (50*s3/3 + (A*i + B)/2)*x"
    " + (80*i*s3/3 + (A - B*i)/2)*y - 25 + (A*i + B)*s3/6"
)

# alpha - beta = A i - 211/(3 s3), alpha + beta = B - 3 s3
REALIZATION_BINDINGS = {
    "alpha": ParamScalar.symbol("A") * (I / 2) + ParamScalar.symbol("B") / 2 - S3 * Fraction(119, 9),
    "beta": ParamScalar.symbol("A") * (-I / 2) + ParamScalar.symbol("B") / 2 + S3 * Fraction(92, 9),
}
# y -> y - 2 s3 i / 3
REALIZATION_SHIFT = (FieldElem(0), S3I * Fraction(-2, 3))


def tau2() -> ParamPoly:
    return parse_poly(_TAU2)


def tau2_shifted() -> ParamPoly:
    return poly_shift(tau2(), *REALIZATION_SHIFT)


def g4() -> ParamPoly:
    """Degree-4 transform of z zbar + 3, free parameter alpha."""
    return parse_poly(_G4)


def h6() -> ParamPoly:
    """Degree-6 transform of g4, parameters alpha and beta."""
    return parse_poly(_H6)


def realize(p: ParamPoly) -> ParamPoly:
    """Apply the (alpha, beta) -> (A, B) binding and the shift y -> y - 2 s3 i/3."""
    return poly_shift(param_substitute(p, REALIZATION_BINDINGS), *REALIZATION_SHIFT).to_xy()


def g4AB() -> ParamPoly:
    return realize(g4())


def hAB() -> ParamPoly:
    """h_{A,B} as displayed, in the (x, y) basis."""
    return parse_poly(_HAB)


def _bind_AB(p: ParamPoly, A, B) -> ParamPoly:
    binds = {}
    for name, v in (("A", A), ("B", B)):
        if isinstance(v, str):
            if v != name:
                binds[name] = ParamScalar.symbol(v)
        else:
            binds[name] = ParamScalar.coerce(_exact(v))
    return param_substitute(p, binds) if binds else p


def _exact(v):
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**12) if v != int(v) else int(v)
    return v


def realize_hAB(A="A", B="B") -> ParamPoly:
    """Realization of h6; A, B are symbol names or exact numbers."""
    return _bind_AB(realize(h6()), A, B)


TAU_FAMILIES: dict[str, Callable[[], ParamPoly]] = {
    "tau2": tau2,
    "tau2_shifted": tau2_shifted,
    "g4": g4,
    "g4AB": g4AB,
    "h6": h6,
    "hAB": hAB,
}


def pretty(p: ParamPoly) -> str:
    """Conventional display: ``x^6 + 3*x^4*y^2 + ... + 1875``."""
    p = p.to_xy() if p.basis == XY else p
    v1, v2 = ("z", "zb") if p.basis == ZZBAR else ("x", "y")
    if p.is_zero():
        return "0"
    pieces = []
    for (a, b), c in p.sorted_items():
        mono = []
        if a:
            mono.append(v1 if a == 1 else f"{v1}^{a}")
        if b:
            mono.append(v2 if b == 1 else f"{v2}^{b}")
        mtxt = "*".join(mono)
        ctxt = str(c)
        compound = " + " in ctxt or " - " in ctxt
        if not mtxt:
            piece = ctxt
        elif c == ParamScalar.const(1):
            piece = mtxt
        elif c == ParamScalar.const(-1):
            piece = "-" + mtxt
        elif compound:
            piece = f"({ctxt})*{mtxt}"
        else:
            piece = f"{ctxt}*{mtxt}"
        pieces.append(piece)
    out = pieces[0]
    for piece in pieces[1:]:
        if piece.startswith("-") and not (" + " in piece or " - " in piece):
            out += " - " + piece[1:]
        else:
            out += " + " + piece
    return out


# ---------------------------------------------------------------------------
# solutions u = 2 d_x^2 ln tau
# ---------------------------------------------------------------------------

@dataclass
class RationalSolution:
    tau: ParamPoly
    u: RationalFunction

    def evaluator(self, values=None):
        return u_evaluator(self.tau, values or {})


def solution_from_tau(tau: ParamPoly) -> RationalSolution:
    if not is_real_valued(tau):
        raise ValueError("tau must be real valued for u = 2 d_x^2 ln tau to be real")
    t = tau.to_xy()
    tx = t.diff("x")
    num = (t * t.diff("x", 2) - tx * tx).scale(2)
    return RationalSolution(t, RationalFunction(num, t, 2))


def lump_U() -> RationalFunction:
    L = tau2()
    return RationalFunction(parse_poly("4*(y^2 - x^2 + 3)"), L, 2)


def lump_U_float(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    L = x * x + y * y + 3.0
    return 4.0 * (y * y - x * x + 3.0) / (L * L)


def u_evaluator(tau: ParamPoly, values=None) -> Callable:
    """Float evaluator of u = 2 (tau_xx / tau - (tau_x / tau)^2)."""
    t = tau.to_xy()
    h = t.to_numeric(values or {})
    hx = t.diff("x").to_numeric(values or {})
    hxx = t.diff("x", 2).to_numeric(values or {})

    def u(x, y):
        H = np.real(h(x, y))
        rx = np.real(hx(x, y)) / H
        return 2.0 * (np.real(hxx(x, y)) / H - rx * rx)

    return u


def kernel_fields(A: float = 0.0, B: float = 0.0, tau: ParamPoly | None = None) -> dict:
    """Float evaluators of d_x u, d_y u, d_A u, d_B u for u = u_{A,B}.

    The A and B derivatives are taken on the exact polynomial before
    evaluation; with ratios r_s = h_s/h the formula is
    d_s u = 2 (h_xxs/h - r_xx r_s - 2 r_x (h_xs/h - r_x r_s)).
    """
    h = (tau or hAB()).to_xy()
    vals = {"A": A, "B": B}
    num = {
        "h": h,
        "hx": h.diff("x"),
        "hxx": h.diff("x", 2),
    }
    for s in ("x", "y", "A", "B"):
        if s in ("x", "y"):
            d = lambda p, s=s: p.diff(s)
        else:
            d = lambda p, s=s: p.param_diff(s)
        num[f"h_{s}"] = d(h)
        num[f"hx_{s}"] = d(num["hx"])
        num[f"hxx_{s}"] = d(num["hxx"])
    ev = {k: p.to_numeric(vals) for k, p in num.items()}

    def make(s):
        def f(x, y):
            H = np.real(ev["h"](x, y))
            rx = np.real(ev["hx"](x, y)) / H
            rxx = np.real(ev["hxx"](x, y)) / H
            rs = np.real(ev[f"h_{s}"](x, y)) / H
            rxs = np.real(ev[f"hx_{s}"](x, y)) / H
            rxxs = np.real(ev[f"hxx_{s}"](x, y)) / H
            return 2.0 * (rxxs - rxx * rs - 2.0 * rx * (rxs - rx * rs))

        return f

    return {s: make(s) for s in ("x", "y", "A", "B")}


def check_tau_positive(tau: ParamPoly, values=None, extent: float = 50.0, n: int = 401) -> float:
    """Grid minimum plus local descent of tau on the real plane.

    Returns the smallest value found; raises if it is not positive.
    """
    f = tau.to_xy().to_numeric(values or {})
    xs = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    V = np.real(f(X, Y))
    idx = np.unravel_index(np.argmin(V), V.shape)
    start = np.array([X[idx], Y[idx]])
    res = minimize(lambda p: float(np.real(f(p[0], p[1]))), start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    best = min(float(V[idx]), float(res.fun))
    if not best > 0:
        raise ValueError(f"tau is not positive: value {best} near {res.x}")
    return best


# ---------------------------------------------------------------------------
# peaks and the eta error
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeakSet:
    B: float
    gamma: float
    points: tuple

    def as_complex(self) -> np.ndarray:
        return np.array([complex(*p) for p in self.points])


def peaks(B: float) -> PeakSet:
    if not B > 0:
        raise ValueError("B must be positive")
    g = (B / 2.0) ** (1.0 / 3.0)
    s = np.sqrt(3.0)
    pts = ((-g, 0.0), (g / 2, -s * g / 2), (g / 2, s * g / 2))
    return PeakSet(float(B), g, pts)


def _gamma_points():
    """P_j as exact ParamScalar pairs in the symbol gamma."""
    g = ParamScalar.symbol("gamma")
    half = Fraction(1, 2)
    return (
        (-g, ParamScalar.const(0)),
        (g * half, g * (-S3 * half)),
        (g * half, g * (S3 * half)),
    )


_B_OF_GAMMA = {"B": ParamScalar.symbol("gamma") ** 3 * 2}


def phi_poly() -> ParamPoly:
    return parse_poly("x^6 + 3*x^4*y^2 + 3*x^2*y^4 + y^6 + B*x^3 - 3*B*x*y^2 + B^2/4")


def peak_residuals() -> list[tuple[ParamScalar, ParamScalar]]:
    """(phi, d_x phi) at each P_j with B = 2 gamma^3; all entries vanish."""
    phi = param_substitute(phi_poly(), _B_OF_GAMMA)
    dphi = phi.diff("x")
    return [(phi.evaluate(px, py), dphi.evaluate(px, py)) for px, py in _gamma_points()]


def eta_display() -> ParamPoly:
    """The five-term closed form of eta with B = 2 gamma^3."""
    p = parse_poly(
        "16*x^4 + 72*x^2*y^2 + 8*y^4 - (152 + 9*gamma^2)*x^2 + (448 - 9*gamma^2)*y^2"
        " - B*x + 1848 - 27*gamma^2 - 9*gamma^4"
    )
    return param_substitute(p, _B_OF_GAMMA)


def eta_error() -> tuple[ParamPoly, list[ParamScalar]]:
    """eta = h_{0,B} - L_1 L_2 L_3 with B = 2 gamma^3, and its values at P_j."""
    h = param_substitute(hAB(), {"A": 0, **_B_OF_GAMMA})
    x, y = ParamPoly.x(), ParamPoly.y()
    prod = ParamPoly.const(1)
    pts = _gamma_points()
    for px, py in pts:
        Lj = (x - ParamPoly.const(px)) ** 2 + (y - ParamPoly.const(py)) ** 2 + 3
        prod = prod * Lj
    eta = h - prod
    return eta, [eta.evaluate(px, py) for px, py in pts]


def sup_error(B: float, extent: float | None = None, n: int = 601, patch: float = 6.0,
              patch_n: int = 241, u: Callable | None = None) -> float:
    """max |u_{0,B} - sum U_j| over a coarse grid plus fine patches around the peaks."""
    pk = peaks(B)
    if extent is None:
        extent = 3.0 * pk.gamma + 10.0
    if extent < 3.0 * pk.gamma:
        raise ValueError("grid extent must cover all peaks (extent >= 3 gamma)")
    uf = u or u_evaluator(hAB(), {"A": 0.0, "B": float(B)})

    def err(X, Y):
        s = sum(lump_U_float(X - px, Y - py) for px, py in pk.points)
        return np.max(np.abs(uf(X, Y) - s))

    xs = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    best = err(X, Y)
    loc = np.linspace(-patch, patch, patch_n)
    LX, LY = np.meshgrid(loc, loc, indexing="ij")
    for px, py in pk.points:
        best = max(best, err(LX + px, LY + py))
    return float(best)


# ---------------------------------------------------------------------------
# exact rational-function identities
# ---------------------------------------------------------------------------

def _zz(text: str) -> ParamPoly:
    return parse_poly(text, basis=ZZBAR)


def check_zz_identities(return_details: bool = False):
    """The closed forms of (y^2-x^2)/(x^2+y^2)^2 and its derivatives via z^-k."""
    r2 = parse_poly("x^2 + y^2")
    Q = RationalFunction(parse_poly("y^2 - x^2"), r2, 2)
    zzb = _zz("z*zb")

    def re_inv(k):  # Re z^-k = (z^k + zb^k) / (2 (z zb)^k)
        return RationalFunction(_zz(f"(z^{k} + zb^{k})/2"), zzb, k)

    def im_inv(k):  # Im z^-k = (zb^k - z^k) / (2 i (z zb)^k)
        return RationalFunction(_zz(f"(zb^{k} - z^{k})/(2*i)"), zzb, k)

    checks = {
        "ident": ratfn_equal(Q, RationalFunction(_zz("-(z^2 + zb^2)/2"), zzb, 2)),
        "dx": ratfn_equal(Q.diff("x"), re_inv(3) * 2),
        "dy": ratfn_equal(Q.diff("y"), im_inv(3) * (-2)),
        "dxx": ratfn_equal(Q.diff("x", 2), re_inv(4) * (-6)),
        "dyy": ratfn_equal(Q.diff("y", 2), re_inv(4) * 6),
        "dxy": ratfn_equal(Q.diff("x").diff("y"), im_inv(4) * 6),
    }
    ok = all(checks.values())
    return (ok, checks) if return_details else ok


def omega_rational() -> RationalFunction:
    return RationalFunction(parse_poly("24*x*(y^2 - 3)"), tau2(), 2).diff("x")


def omega_float(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    L = x * x + y * y + 3.0
    # d_x [24 x (y^2-3) / L^2] = 24 (y^2-3) (L - 4 x^2) / L^3
    return 24.0 * (y * y - 3.0) * (L - 4.0 * x * x) / L**3


def check_omega_identities(return_details: bool = False):
    """L_U w = -6U and L_U[w_x] = -6U_x - 6U_x w, after applying d_x^2 to clear d_x^-2."""
    U = lump_U()
    w = omega_rational()
    wx = w.diff("x")
    Ux = U.diff("x")

    def dx2_form(v, rhs):
        # d_x^2 (v_xx - v + 6 U v - rhs) - v_yy
        local = v.diff("x", 2) - v + U * v * 6 - rhs
        return local.diff("x", 2) - v.diff("y", 2)

    first = dx2_form(w, U * (-6))
    second = dx2_form(wx, Ux * (-6) - Ux * w * 6)
    checks = {"first": first.is_zero(), "second": second.is_zero()}
    ok = all(checks.values())
    return (ok, checks) if return_details else ok
