"""Hirota bilinear operators and the residuals built from them."""
from __future__ import annotations

import ast
from fractions import Fraction
from math import comb
from typing import Mapping

from .exactfield import ONE, I, S3, FieldElem, as_field
from .polyring import ZZBAR, ParamPoly, PolyParseError, _FIELD_NAMES, _field_atom

__all__ = [
    "BilinearOp",
    "hirota_apply",
    "apply_op",
    "boussinesq_residual",
    "BILINEAR_BOUSSINESQ",
    "back_general",
    "back2",
    "gh_system",
    "parse_op",
]


class BilinearOp:
    """Formal sum of coeff * D_x^mx D_y^my.

    Operators multiply as commuting polynomials in D_x, D_y, so D_z and
    D_zbar are just the combinations (D_x -/+ i D_y) / 2.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, int], object] | None = None):
        clean = {}
        for (mx, my), c in (terms or {}).items():
            if mx < 0 or my < 0:
                raise ValueError("operator orders must be nonnegative")
            c = as_field(c)
            if c is NotImplemented:
                raise TypeError(f"operator coefficient must be a field element, got {c!r}")
            if not c.is_zero():
                key = (int(mx), int(my))
                clean[key] = clean.get(key, FieldElem()) + c
        self._terms = {k: v for k, v in clean.items() if not v.is_zero()}

    @classmethod
    def D_x(cls, m: int = 1) -> "BilinearOp":
        return cls({(m, 0): 1})

    @classmethod
    def D_y(cls, m: int = 1) -> "BilinearOp":
        return cls({(0, m): 1})

    @classmethod
    def D_z(cls) -> "BilinearOp":
        half = FieldElem(Fraction(1, 2))
        return cls({(1, 0): half, (0, 1): -I * half})

    @classmethod
    def D_zbar(cls) -> "BilinearOp":
        half = FieldElem(Fraction(1, 2))
        return cls({(1, 0): half, (0, 1): I * half})

    @classmethod
    def scalar(cls, c) -> "BilinearOp":
        return cls({(0, 0): c})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other):
        other = _as_op(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, FieldElem()) + c
        return BilinearOp(out)

    __radd__ = __add__

    def __neg__(self):
        return BilinearOp({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_op(other))

    def __rsub__(self, other):
        return _as_op(other) + (-self)

    def __mul__(self, other):
        other = _as_op(other)
        out: dict = {}
        for (a, b), c in self._terms.items():
            for (e, f), d in other._terms.items():
                k = (a + e, b + f)
                out[k] = out.get(k, FieldElem()) + c * d
        return BilinearOp(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = BilinearOp.scalar(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, BilinearOp):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def zz_terms(self) -> dict:
        """The same operator as a polynomial in D_z, D_zbar.

        Uses D_x = D_z + D_zbar and D_y = i (D_z - D_zbar).
        """
        out: dict = {}
        for (mx, my), c in self._terms.items():
            # (Dz + Dzb)^mx * (i Dz - i Dzb)^my
            for a in range(mx + 1):
                for b in range(my + 1):
                    coeff = c * comb(mx, a) * comb(my, b) * (I ** my) * (-1) ** (my - b)
                    k = (a + b, mx - a + my - b)
                    out[k] = out.get(k, FieldElem()) + coeff
        return {k: v for k, v in out.items() if not v.is_zero()}

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (mx, my), c in sorted(self._terms.items(), key=lambda t: (-(t[0][0] + t[0][1]), -t[0][0])):
            ops = []
            if mx:
                ops.append("D_x" if mx == 1 else f"D_x^{mx}")
            if my:
                ops.append("D_y" if my == 1 else f"D_y^{my}")
            optxt = "*".join(ops)
            ctxt = str(c)
            if not optxt:
                parts.append(ctxt)
            elif c == ONE:
                parts.append(optxt)
            elif c == -ONE:
                parts.append("-" + optxt)
            else:
                parts.append(f"({ctxt})*{optxt}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"BilinearOp({self})"


def _as_op(x) -> BilinearOp:
    if isinstance(x, BilinearOp):
        return x
    return BilinearOp.scalar(x)


def _derivs(p: ParamPoly, amax: int, bmax: int) -> dict:
    """Table of raw basis derivatives d1^a d2^b p."""
    table = {(0, 0): p}
    for a in range(amax + 1):
        if a > 0:
            table[(a, 0)] = table[(a - 1, 0)]._raw_diff(0)
        for b in range(1, bmax + 1):
            table[(a, b)] = table[(a, b - 1)]._raw_diff(1)
    return table


def _hirota_raw(terms: Mapping[tuple[int, int], FieldElem], f: ParamPoly, g: ParamPoly) -> ParamPoly:
    """Apply sum c * D_1^m D_2^n in the native coordinates of f's basis."""
    if not terms:
        return ParamPoly.zero(f.basis)
    g = g.to_basis(f.basis)
    amax = max(m for m, _ in terms)
    bmax = max(n for _, n in terms)
    df = _derivs(f, amax, bmax)
    dg = _derivs(g, amax, bmax)
    # collect coefficient of each (df[a,b] * dg[c,d]) product first
    pair_coeff: dict = {}
    for (m, n), c in terms.items():
        for a in range(m + 1):
            for b in range(n + 1):
                w = c * comb(m, a) * comb(n, b)
                if (m - a + n - b) % 2:
                    w = -w
                key = (a, b, m - a, n - b)
                pair_coeff[key] = pair_coeff.get(key, FieldElem()) + w
    out = ParamPoly.zero(f.basis)
    for (a, b, c2, d2), w in pair_coeff.items():
        if w.is_zero():
            continue
        fa, gb = df[(a, b)], dg[(c2, d2)]
        if fa.is_zero() or gb.is_zero():
            continue
        out = out + (fa * gb).scale(w)
    return out


def hirota_apply(m_x: int, m_y: int, f: ParamPoly, g: ParamPoly) -> ParamPoly:
    """D_x^m_x D_y^m_y f.g via the signed Leibniz sum (result in f's basis)."""
    if m_x < 0 or m_y < 0:
        raise ValueError("operator orders must be nonnegative")
    return apply_op(BilinearOp({(m_x, m_y): 1}), f, g)


def apply_op(op: BilinearOp, f: ParamPoly, g: ParamPoly) -> ParamPoly:
    """Apply a bilinear operator; the result is in f's basis.

    In the ZZBAR basis the operator is rewritten in D_z, D_zbar first so
    that every derivative is a plain exponent shift.
    """
    if f.basis == ZZBAR:
        return _hirota_raw(op.zz_terms(), f, g)
    return _hirota_raw(op.terms, f, g.to_basis(f.basis))


BILINEAR_BOUSSINESQ = BilinearOp({(4, 0): 1, (2, 0): -1, (0, 2): -1})


def boussinesq_residual(tau: ParamPoly) -> ParamPoly:
    """(D_x^4 - D_x^2 - D_y^2) tau.tau, computed in the (z, zbar) basis."""
    return apply_op(BILINEAR_BOUSSINESQ, tau.to_zz(), tau.to_zz())


_INV_S3 = S3 / 3


def back_general(mu, lam, v) -> tuple[BilinearOp, BilinearOp]:
    """The two-parameter-family Backlund pair with free mu, lambda, v."""
    mu, lam, v = as_field(mu), as_field(lam), as_field(v)
    Dx, Dy = BilinearOp.D_x(), BilinearOp.D_y()
    eq1 = Dx * Dx + Dx * mu + Dy * (I * _INV_S3) - lam
    eq2 = Dx * (3 * lam - 1) - Dy * (S3 * I * mu) + Dx ** 3 - Dx * Dy * (S3 * I) + v
    return eq1, eq2


def back2(sign: int = 1) -> tuple[BilinearOp, BilinearOp]:
    """The pair with lambda = v = 0 and mu = sign/sqrt3."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return back_general(_INV_S3 * sign, 0, 0)


def gh_system() -> tuple[BilinearOp, BilinearOp]:
    """(2 D_z - sqrt3 D_x^2, 2 D_z + sqrt3 i D_x D_y - D_x^3)."""
    Dx, Dy, Dz = BilinearOp.D_x(), BilinearOp.D_y(), BilinearOp.D_z()
    eq1 = Dz * 2 - Dx * Dx * S3
    eq2 = Dz * 2 + Dx * Dy * (S3 * I) - Dx ** 3
    return eq1, eq2


def parse_op(text: str) -> BilinearOp:
    """Parse operator text such as ``"D_x^4 - D_x^2 - D_y^2"`` or ``"2*D_zb - s3*D_x^2"``."""
    src = text.replace("^", "**").strip()
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise PolyParseError(f"cannot parse operator {text!r}: {exc.msg}") from None
    atoms = {
        "D_x": BilinearOp.D_x(),
        "D_y": BilinearOp.D_y(),
        "D_z": BilinearOp.D_z(),
        "D_zb": BilinearOp.D_zbar(),
    }

    def ev(node) -> BilinearOp:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return BilinearOp.scalar(node.value)
        if isinstance(node, ast.Name):
            if node.id in atoms:
                return atoms[node.id]
            if node.id in _FIELD_NAMES:
                return BilinearOp.scalar(_field_atom(node.id))
            raise PolyParseError(f"unknown operator symbol {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a = ev(node.left)
            if isinstance(node.op, ast.Pow):
                r = node.right
                if not (isinstance(r, ast.Constant) and isinstance(r.value, int) and r.value >= 0):
                    raise PolyParseError("operator exponents must be nonnegative integers")
                return a ** r.value
            b = ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                t = b.terms
                if set(t) != {(0, 0)}:
                    raise PolyParseError("operator division only by nonzero constants")
                return a * BilinearOp.scalar(t[(0, 0)].inv())
        raise PolyParseError(f"unsupported operator syntax in {text!r}")

    return ev(tree)
