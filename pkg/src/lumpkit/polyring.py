"""Bivariate polynomials over Q(i, sqrt3) with symbolic parameters.

Three layers:

* ``ParamScalar`` -- a polynomial in named parameters (alpha, beta, A, B,
  sigma, gamma, solver unknowns, ...) with ``FieldElem`` coefficients.
* ``ParamPoly`` -- a sparse polynomial in either the (x, y) or the (z, zbar)
  basis whose coefficients are ``ParamScalar``.
* ``RationalFunction`` -- numerator over a factored denominator, compared by
  cross-multiplication and never gcd-reduced.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, inf
from typing import Iterable, Mapping

import numpy as np

from .exactfield import ONE, ZERO, I, FieldElem, as_field

__all__ = [
    "XY",
    "ZZBAR",
    "ParamScalar",
    "ParamPoly",
    "RationalFunction",
    "NumericPoly",
    "poly_arith",
    "poly_diff",
    "homogeneous_component",
    "poly_shift",
    "param_substitute",
    "is_real_valued",
    "ratfn_equal",
    "CyclicBindingError",
]

XY = "XY"
ZZBAR = "ZZBAR"

_SYMBOL_ORDER = ("alpha", "beta", "A", "B", "sigma", "gamma")


def _sym_key(name: str):
    try:
        return (0, _SYMBOL_ORDER.index(name), name)
    except ValueError:
        return (1, 0, name)


class CyclicBindingError(ValueError):
    """A parameter binding refers back to itself."""


# ---------------------------------------------------------------------------
# ParamScalar
# ---------------------------------------------------------------------------

def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for s, e in m2:
        exps[s] = exps.get(s, 0) + e
    return tuple(sorted(exps.items(), key=lambda t: _sym_key(t[0])))


class ParamScalar:
    """Sparse polynomial in parameter symbols with FieldElem coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple, FieldElem] | None = None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = as_field(c)
                if not c.is_zero():
                    clean[mono] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _wrap(cls, terms: dict) -> "ParamScalar":
        obj = object.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c) -> "ParamScalar":
        c = as_field(c)
        return cls._wrap({} if c.is_zero() else {(): c})

    @classmethod
    def symbol(cls, name: str) -> "ParamScalar":
        return cls._wrap({((name, 1),): ONE})

    # -- inspection --------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> FieldElem:
        """The coefficient of the empty monomial."""
        return self._terms.get((), ZERO)

    def symbols(self) -> set[str]:
        out = set()
        for mono in self._terms:
            out.update(s for s, _ in mono)
        return out

    def degree_in(self, name: str) -> int:
        return max((dict(m).get(name, 0) for m in self._terms), default=0)

    def split_linear(self, names: Iterable[str]):
        """Decompose as sum_k coeff_k * name_k + rest, assuming degree <= 1 in names.

        Returns (dict name -> ParamScalar coefficient, rest).
        """
        names = set(names)
        coeffs: dict[str, dict] = {}
        rest = {}
        for mono, c in self._terms.items():
            hit = [(s, e) for s, e in mono if s in names]
            if not hit:
                rest[mono] = c
                continue
            if len(hit) > 1 or hit[0][1] != 1:
                raise ValueError(f"term {mono} is not linear in {sorted(names)}")
            s = hit[0][0]
            reduced = tuple(t for t in mono if t[0] != s)
            coeffs.setdefault(s, {})[reduced] = c
        return {s: ParamScalar._wrap(t) for s, t in coeffs.items()}, ParamScalar._wrap(rest)

    # -- arithmetic --------------------------------------------------------
    @staticmethod
    def coerce(x) -> "ParamScalar":
        if isinstance(x, ParamScalar):
            return x
        c = as_field(x)
        if c is NotImplemented:
            raise TypeError(f"cannot coerce {x!r} to ParamScalar")
        return ParamScalar.const(c)

    def __add__(self, other):
        if isinstance(other, ParamPoly):
            return NotImplemented
        other = ParamScalar.coerce(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            v = out.get(mono)
            if v is None:
                out[mono] = c
            else:
                v = v + c
                if v.is_zero():
                    del out[mono]
                else:
                    out[mono] = v
        return ParamScalar._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return ParamScalar._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, ParamPoly):
            return NotImplemented
        return self + (-ParamScalar.coerce(other))

    def __rsub__(self, other):
        return ParamScalar.coerce(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, ParamPoly):
            return NotImplemented
        if not isinstance(other, ParamScalar):
            c = as_field(other)
            if c is NotImplemented:
                return NotImplemented
            if c.is_zero():
                return ParamScalar._wrap({})
            return ParamScalar._wrap({m: v * c for m, v in self._terms.items()})
        a, b = self._terms, other._terms
        if not a or not b:
            return ParamScalar._wrap({})
        if len(b) == 1 and () in b:
            c = b[()]
            return ParamScalar._wrap({m: v * c for m, v in a.items()})
        if len(a) == 1 and () in a:
            c = a[()]
            return ParamScalar._wrap({m: v * c for m, v in b.items()})
        out: dict = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = _mono_mul(m1, m2)
                v = out.get(m)
                out[m] = c1 * c2 if v is None else v + c1 * c2
        return ParamScalar._wrap({m: v for m, v in out.items() if not v.is_zero()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = as_field(other)
        if c is NotImplemented:
            if isinstance(other, ParamScalar) and other.is_constant() and not other.is_zero():
                c = other.constant_value()
            else:
                raise TypeError("ParamScalar division only by nonzero field constants")
        return self * c.inv()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = ParamScalar.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def conj(self) -> "ParamScalar":
        """Complex conjugate with every parameter treated as real."""
        return ParamScalar._wrap({m: c.conj() for m, c in self._terms.items()})

    def diff(self, name: str) -> "ParamScalar":
        out: dict = {}
        for mono, c in self._terms.items():
            exps = dict(mono)
            e = exps.get(name, 0)
            if e == 0:
                continue
            if e == 1:
                del exps[name]
            else:
                exps[name] = e - 1
            m = tuple(sorted(exps.items(), key=lambda t: _sym_key(t[0])))
            v = c * e
            out[m] = out[m] + v if m in out else v
        return ParamScalar._wrap({m: v for m, v in out.items() if not v.is_zero()})

    def substitute(self, bindings: Mapping[str, "ParamScalar"]) -> "ParamScalar":
        """Replace symbols simultaneously; unbound symbols are kept."""
        if not bindings or not (self.symbols() & set(bindings)):
            return self
        bound = {k: ParamScalar.coerce(v) for k, v in bindings.items()}
        out = ParamScalar._wrap({})
        power_cache: dict = {}
        for mono, c in self._terms.items():
            term = ParamScalar.const(c)
            keep = []
            for s, e in mono:
                if s in bound:
                    key = (s, e)
                    if key not in power_cache:
                        power_cache[key] = bound[s] ** e
                    term = term * power_cache[key]
                else:
                    keep.append((s, e))
            if keep:
                term = term * ParamScalar._wrap({tuple(keep): ONE})
            out = out + term
        return out

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        total = 0j
        for mono, c in self._terms.items():
            v = complex(c.to_complex())
            for s, e in mono:
                v *= complex(values[s]) ** e
            total += v
        return total

    # -- comparison / text --------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return NotImplemented
        try:
            other = ParamScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def sorted_terms(self):
        def key(item):
            mono = item[0]
            deg = sum(e for _, e in mono)
            return (-deg, [(_sym_key(s), -e) for s, e in mono])

        return sorted(self._terms.items(), key=key)

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for mono, c in self.sorted_terms():
            mono_txt = "*".join(s if e == 1 else f"{s}^{e}" for s, e in mono)
            ctxt = str(c)
            multi = (" + " in ctxt) or (" - " in ctxt)
            if not mono_txt:
                piece = ctxt
            elif c == ONE:
                piece = mono_txt
            elif c == -ONE:
                piece = "-" + mono_txt
            elif multi:
                piece = f"({ctxt})*{mono_txt}"
            else:
                piece = f"{ctxt}*{mono_txt}"
            pieces.append(piece)
        out = pieces[0]
        for p in pieces[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"ParamScalar({self})"


_ZERO_S = ParamScalar._wrap({})
_ONE_S = ParamScalar.const(1)


# ---------------------------------------------------------------------------
# basis conversion tables
# ---------------------------------------------------------------------------

def _poly_mul_dict(p: dict, q: dict) -> dict:
    out: dict = {}
    for (a, b), c in p.items():
        for (e, f), d in q.items():
            k = (a + e, b + f)
            v = out.get(k)
            out[k] = c * d if v is None else v + c * d
    return {k: v for k, v in out.items() if not v.is_zero()}


@lru_cache(maxsize=None)
def _pow_table(base: tuple, n: int) -> dict:
    if n == 0:
        return {(0, 0): ONE}
    prev = _pow_table(base, n - 1)
    return _poly_mul_dict(prev, dict(base))


_HALF = FieldElem(Fraction(1, 2))
# x = (z + zbar)/2, y = (z - zbar)/(2i) = -i/2 z + i/2 zbar
_X_IN_ZZ = (((1, 0), _HALF), ((0, 1), _HALF))
_Y_IN_ZZ = (((1, 0), -I * _HALF), ((0, 1), I * _HALF))
# z = x + i y, zbar = x - i y
_Z_IN_XY = (((1, 0), ONE), ((0, 1), I))
_ZB_IN_XY = (((1, 0), ONE), ((0, 1), -I))


@lru_cache(maxsize=None)
def _monomial_to_zz(i: int, j: int) -> tuple:
    return tuple(_poly_mul_dict(_pow_table(_X_IN_ZZ, i), _pow_table(_Y_IN_ZZ, j)).items())


@lru_cache(maxsize=None)
def _monomial_to_xy(p: int, q: int) -> tuple:
    return tuple(_poly_mul_dict(_pow_table(_Z_IN_XY, p), _pow_table(_ZB_IN_XY, q)).items())


# ---------------------------------------------------------------------------
# ParamPoly
# ---------------------------------------------------------------------------

class ParamPoly:
    """Sparse bivariate polynomial with ParamScalar coefficients.

    ``basis`` is ``XY`` (exponents of x, y) or ``ZZBAR`` (exponents of z, zbar).
    """

    __slots__ = ("basis", "_terms", "_hash", "_other")

    def __init__(self, terms: Mapping[tuple[int, int], object] | None = None, basis: str = XY):
        if basis not in (XY, ZZBAR):
            raise ValueError(f"unknown basis {basis!r}")
        self.basis = basis
        clean = {}
        if terms:
            for k, c in terms.items():
                c = ParamScalar.coerce(c)
                if not c.is_zero():
                    clean[(int(k[0]), int(k[1]))] = c
        self._terms = clean
        self._hash = None
        self._other = None

    @classmethod
    def _wrap(cls, terms: dict, basis: str) -> "ParamPoly":
        obj = object.__new__(cls)
        obj.basis = basis
        obj._terms = terms
        obj._hash = None
        obj._other = None
        return obj

    # -- constructors --------------------------------------------------------
    @classmethod
    def const(cls, c, basis: str = XY) -> "ParamPoly":
        c = ParamScalar.coerce(c)
        return cls._wrap({} if c.is_zero() else {(0, 0): c}, basis)

    @classmethod
    def zero(cls, basis: str = XY) -> "ParamPoly":
        return cls._wrap({}, basis)

    @classmethod
    def monomial(cls, p: int, q: int, coeff=1, basis: str = XY) -> "ParamPoly":
        return cls({(p, q): coeff}, basis)

    @classmethod
    def x(cls) -> "ParamPoly":
        return cls.monomial(1, 0)

    @classmethod
    def y(cls) -> "ParamPoly":
        return cls.monomial(0, 1)

    @classmethod
    def z(cls) -> "ParamPoly":
        return cls.monomial(1, 0, basis=ZZBAR)

    @classmethod
    def zbar(cls) -> "ParamPoly":
        return cls.monomial(0, 1, basis=ZZBAR)

    @classmethod
    def param(cls, name: str, basis: str = XY) -> "ParamPoly":
        return cls.const(ParamScalar.symbol(name), basis)

    # -- inspection ------------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, p: int, q: int) -> ParamScalar:
        return self._terms.get((p, q), _ZERO_S)

    def is_zero(self) -> bool:
        return not self._terms

    def total_degree(self) -> float:
        """Total degree; -inf for the zero polynomial."""
        if not self._terms:
            return -inf
        return max(p + q for p, q in self._terms)

    def symbols(self) -> set[str]:
        out = set()
        for c in self._terms.values():
            out |= c.symbols()
        return out

    def leading_terms(self) -> dict:
        d = self.total_degree()
        return {k: c for k, c in self._terms.items() if k[0] + k[1] == d}

    # -- basis handling ----------------------------------------------------------
    def to_basis(self, basis: str) -> "ParamPoly":
        if basis == self.basis:
            return self
        if self._other is not None:
            return self._other
        table = _monomial_to_zz if basis == ZZBAR else _monomial_to_xy
        out: dict = {}
        for (p, q), c in self._terms.items():
            for k, f in table(p, q):
                v = c * f
                w = out.get(k)
                out[k] = v if w is None else w + v
        res = ParamPoly._wrap({k: v for k, v in out.items() if not v.is_zero()}, basis)
        res._other = self
        self._other = res
        return res

    def to_xy(self) -> "ParamPoly":
        return self.to_basis(XY)

    def to_zz(self) -> "ParamPoly":
        return self.to_basis(ZZBAR)

    # -- arithmetic --------------------------------------------------------------
    def _coerce(self, other) -> "ParamPoly":
        if isinstance(other, ParamPoly):
            return other.to_basis(self.basis)
        return ParamPoly.const(ParamScalar.coerce(other), self.basis)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = out.get(k)
            if v is None:
                out[k] = c
            else:
                v = v + c
                if v.is_zero():
                    del out[k]
                else:
                    out[k] = v
        return ParamPoly._wrap(out, self.basis)

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return ParamPoly._wrap({k: -c for k, c in self._terms.items()}, self.basis)

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "ParamPoly":
        c = ParamScalar.coerce(c)
        if c.is_zero():
            return ParamPoly._wrap({}, self.basis)
        out = {}
        for k, v in self._terms.items():
            w = v * c
            if not w.is_zero():
                out[k] = w
        return ParamPoly._wrap(out, self.basis)

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        other = other.to_basis(self.basis)
        out: dict = {}
        for (a, b), c in self._terms.items():
            for (e, f), d in other._terms.items():
                k = (a + e, b + f)
                v = c * d
                w = out.get(k)
                out[k] = v if w is None else w + v
        return ParamPoly._wrap({k: v for k, v in out.items() if not v.is_zero()}, self.basis)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = ParamPoly.const(1, self.basis)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus ----------------------------------------------------------------
    def _raw_diff(self, axis: int) -> "ParamPoly":
        out = {}
        for (p, q), c in self._terms.items():
            e = (p, q)[axis]
            if e == 0:
                continue
            k = (p - 1, q) if axis == 0 else (p, q - 1)
            out[k] = c * e
        return ParamPoly._wrap(out, self.basis)

    def diff(self, var: str, order: int = 1) -> "ParamPoly":
        """Partial derivative in x, y, z or zbar, result in this polynomial's basis."""
        res = self
        for _ in range(order):
            res = res._diff1(var)
        return res

    def _diff1(self, var: str) -> "ParamPoly":
        if self.basis == XY:
            if var == "x":
                return self._raw_diff(0)
            if var == "y":
                return self._raw_diff(1)
            if var == "z":  # (d_x - i d_y)/2
                return (self._raw_diff(0) - self._raw_diff(1).scale(I)).scale(_HALF)
            if var == "zbar":
                return (self._raw_diff(0) + self._raw_diff(1).scale(I)).scale(_HALF)
        else:
            if var == "z":
                return self._raw_diff(0)
            if var == "zbar":
                return self._raw_diff(1)
            if var == "x":
                return self._raw_diff(0) + self._raw_diff(1)
            if var == "y":
                return (self._raw_diff(0) - self._raw_diff(1)).scale(I)
        raise ValueError(f"unknown variable {var!r}")

    def param_diff(self, name: str) -> "ParamPoly":
        out = {}
        for k, c in self._terms.items():
            d = c.diff(name)
            if not d.is_zero():
                out[k] = d
        return ParamPoly._wrap(out, self.basis)

    # -- structure -----------------------------------------------------------------
    def homogeneous_component(self, j: int) -> "ParamPoly":
        return ParamPoly._wrap({k: c for k, c in self._terms.items() if k[0] + k[1] == j}, self.basis)

    def substitute_params(self, bindings: Mapping[str, object]) -> "ParamPoly":
        return param_substitute(self, bindings)

    def shift(self, dx, dy) -> "ParamPoly":
        return poly_shift(self, dx, dy)

    def conj(self) -> "ParamPoly":
        """Conjugate as a function of real (x, y), parameters real."""
        if self.basis == XY:
            return ParamPoly._wrap({k: c.conj() for k, c in self._terms.items()}, XY)
        return ParamPoly._wrap({(q, p): c.conj() for (p, q), c in self._terms.items()}, ZZBAR)

    def evaluate(self, x, y) -> ParamScalar:
        """Exact evaluation at x, y given as ParamScalar (or field) values."""
        xs = ParamScalar.coerce(x)
        ys = ParamScalar.coerce(y)
        xy = self.to_xy()
        cache_x = {0: _ONE_S}
        cache_y = {0: _ONE_S}

        def pw(cache, base, n):
            if n not in cache:
                cache[n] = pw(cache, base, n - 1) * base
            return cache[n]

        total = _ZERO_S
        for (p, q), c in xy._terms.items():
            total = total + c * pw(cache_x, xs, p) * pw(cache_y, ys, q)
        return total

    def to_numeric(self, values: Mapping[str, float] | None = None) -> "NumericPoly":
        return NumericPoly.from_poly(self, values or {})

    # -- comparison / text -------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self._terms == other.to_basis(self.basis)._terms
        try:
            return self._terms == self._coerce(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.basis, frozenset(self._terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def sorted_items(self):
        return sorted(self._terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0]))

    def canonical(self) -> str:
        """Terms sorted by (total degree desc, first exponent desc)."""
        if not self._terms:
            return "0"
        v1, v2 = ("z", "zb") if self.basis == ZZBAR else ("x", "y")
        pieces = []
        for (p, q), c in self.sorted_items():
            ctxt = str(c)
            if " + " in ctxt or " - " in ctxt:
                ctxt = f"({ctxt})"
            pieces.append(f"{ctxt} * {v1}^{p} * {v2}^{q}")
        out = pieces[0]
        for p in pieces[1:]:
            if p.startswith("-") and not p.startswith("-("):
                out += " - " + p[1:]
            else:
                out += " + " + p
        return out

    def __str__(self):
        return self.canonical()

    def __repr__(self):
        return f"ParamPoly[{self.basis}]({self.canonical()})"


# ---------------------------------------------------------------------------
# operation-style API
# ---------------------------------------------------------------------------

def poly_arith(op: str, p: ParamPoly, q=None) -> ParamPoly:
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown op {op!r}")


def poly_diff(p: ParamPoly, var: str) -> ParamPoly:
    return p.diff(var)


def homogeneous_component(p: ParamPoly, j: int) -> ParamPoly:
    if j < 0:
        raise ValueError("component index must be nonnegative")
    return p.homogeneous_component(j)


def poly_shift(p: ParamPoly, dx, dy) -> ParamPoly:
    """Exact substitution x -> x + dx, y -> y + dy."""
    dx = ParamScalar.coerce(dx)
    dy = ParamScalar.coerce(dy)
    xy = p.to_xy()
    if dx.is_zero() and dy.is_zero():
        return p
    out = ParamPoly.zero(XY)
    xs = ParamPoly({(1, 0): 1, (0, 0): dx}, XY)
    ys = ParamPoly({(0, 1): 1, (0, 0): dy}, XY)
    px: dict = {0: ParamPoly.const(1)}
    py: dict = {0: ParamPoly.const(1)}
    for (a, b), c in xy.items():
        for cache, base, n in ((px, xs, a), (py, ys, b)):
            for k in range(1, n + 1):
                if k not in cache:
                    cache[k] = cache[k - 1] * base
        out = out + (px[a] * py[b]).scale(c)
    return out.to_basis(p.basis)


def _check_acyclic(bindings: Mapping[str, ParamScalar]) -> None:
    graph = {k: v.symbols() & set(bindings) for k, v in bindings.items()}
    state: dict = {}

    def visit(n, path):
        if state.get(n) == 1:
            raise CyclicBindingError(f"cyclic binding: {' -> '.join(path + [n])}")
        if state.get(n) == 2:
            return
        state[n] = 1
        for m in graph.get(n, ()):
            if m == n and bindings[n] == ParamScalar.symbol(n):
                continue
            visit(m, path + [n])
        state[n] = 2

    for k in graph:
        visit(k, [])


def _resolve(bindings: Mapping[str, object]) -> dict:
    bound = {k: ParamScalar.coerce(v) for k, v in bindings.items()}
    # identity bindings are harmless
    bound = {k: v for k, v in bound.items() if v != ParamScalar.symbol(k)}
    _check_acyclic(bound)
    resolved: dict = {}
    for _ in range(len(bound) + 1):
        changed = False
        for k, v in bound.items():
            w = v.substitute(bound)
            if w != v:
                changed = True
            resolved[k] = w
        bound = resolved
        resolved = {}
        if not changed:
            break
    return bound


def param_substitute(p, bindings: Mapping[str, object]):
    """Substitute parameters in a ParamPoly or ParamScalar.

    Bindings may reference other bound symbols; they are resolved
    transitively and a cycle raises ``CyclicBindingError``.
    """
    bound = _resolve(bindings)
    if isinstance(p, ParamScalar):
        return p.substitute(bound)
    out = {}
    for k, c in p.items():
        v = c.substitute(bound)
        if not v.is_zero():
            out[k] = v
    return ParamPoly._wrap(out, p.basis)


def is_real_valued(p: ParamPoly) -> bool:
    """True iff p is real for real (x, y) and real parameters."""
    zz = p.to_zz()
    for (a, b), c in zz.items():
        if zz.coeff(b, a) != c.conj():
            return False
    return True


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------

class NumericPoly:
    """Float evaluator for a ParamPoly with all parameters bound."""

    def __init__(self, px: np.ndarray, py: np.ndarray, coef: np.ndarray):
        self.px = px
        self.py = py
        self.coef = coef
        self.degree = int(max(px.max(initial=0), py.max(initial=0)))
        self.real = bool(np.all(coef.imag == 0))

    @classmethod
    def from_poly(cls, p: ParamPoly, values: Mapping[str, float]) -> "NumericPoly":
        xy = p.to_xy()
        px, py, cs = [], [], []
        for (a, b), c in xy.items():
            missing = c.symbols() - set(values)
            if missing:
                raise ValueError(f"unbound parameters {sorted(missing)}")
            v = c.evaluate(values)
            if v != 0:
                px.append(a)
                py.append(b)
                cs.append(v)
        return cls(np.array(px, dtype=int), np.array(py, dtype=int), np.array(cs, dtype=complex))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        xp = [np.ones(shape)]
        yp = [np.ones(shape)]
        for _ in range(self.degree):
            xp.append(xp[-1] * x)
            yp.append(yp[-1] * y)
        if self.real:
            out = np.zeros(shape)
            for a, b, c in zip(self.px, self.py, self.coef.real):
                out = out + c * xp[a] * yp[b]
            return out
        out = np.zeros(shape, dtype=complex)
        for a, b, c in zip(self.px, self.py, self.coef):
            out = out + c * xp[a] * yp[b]
        return out


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------

class RationalFunction:
    """numerator / prod(base_k ** power_k); never gcd-reduced.

    Keeping the denominator factored keeps quotient-rule derivatives of
    expressions such as P / L**k at low degree.
    """

    __slots__ = ("num", "factors")

    def __init__(self, num: ParamPoly, den: ParamPoly | None = None, power: int = 1):
        self.num = num
        if den is None:
            self.factors: tuple = ()
        else:
            if den.is_zero():
                raise ZeroDivisionError("zero denominator")
            self.factors = ((den.to_basis(num.basis), power),) if power else ()

    @classmethod
    def _make(cls, num: ParamPoly, factors) -> "RationalFunction":
        obj = object.__new__(cls)
        obj.num = num
        obj.factors = tuple((b, k) for b, k in factors if k > 0)
        return obj

    @property
    def den(self) -> ParamPoly:
        out = ParamPoly.const(1, self.num.basis)
        for b, k in self.factors:
            out = out * b**k
        return out

    @staticmethod
    def coerce(x, basis=XY) -> "RationalFunction":
        if isinstance(x, RationalFunction):
            return x
        if isinstance(x, ParamPoly):
            return RationalFunction._make(x, ())
        return RationalFunction._make(ParamPoly.const(x, basis), ())

    def _merged(self, other: "RationalFunction"):
        """Common denominator factors and the multipliers for each numerator."""
        fa = list(self.factors)
        fb = list(other.factors)
        common = []
        for b, k in fa:
            common.append([b, k])
        for b, k in fb:
            for entry in common:
                if entry[0] == b:
                    entry[1] = max(entry[1], k)
                    break
            else:
                common.append([b, k])

        def multiplier(own):
            m = ParamPoly.const(1, self.num.basis)
            for b, k in common:
                have = next((kk for bb, kk in own if bb == b), 0)
                if k > have:
                    m = m * b ** (k - have)
            return m

        return [(b, k) for b, k in common], multiplier(fa), multiplier(fb)

    def __add__(self, other):
        other = RationalFunction.coerce(other, self.num.basis)
        factors, ma, mb = self._merged(other)
        return RationalFunction._make(self.num * ma + other.num * mb, factors)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction._make(-self.num, self.factors)

    def __sub__(self, other):
        return self + (-RationalFunction.coerce(other, self.num.basis))

    def __rsub__(self, other):
        return RationalFunction.coerce(other, self.num.basis) + (-self)

    def __mul__(self, other):
        other = RationalFunction.coerce(other, self.num.basis)
        factors = [[b, k] for b, k in self.factors]
        for b, k in other.factors:
            for entry in factors:
                if entry[0] == b:
                    entry[1] += k
                    break
            else:
                factors.append([b, k])
        return RationalFunction._make(self.num * other.num, [(b, k) for b, k in factors])

    __rmul__ = __mul__

    def diff(self, var: str, order: int = 1) -> "RationalFunction":
        res = self
        for _ in range(order):
            res = res._diff1(var)
        return res

    def _diff1(self, var: str) -> "RationalFunction":
        # d(N / prod b^k) = (N' prod b - N sum k b' prod_{l != i} b_l) / prod b^(k+1)
        num = self.num.diff(var)
        bases = [b for b, _ in self.factors]
        prod_all = ParamPoly.const(1, self.num.basis)
        for b in bases:
            prod_all = prod_all * b
        total = num * prod_all
        for i, (b, k) in enumerate(self.factors):
            others = ParamPoly.const(1, self.num.basis)
            for j, bb in enumerate(bases):
                if j != i:
                    others = others * bb
            total = total - (self.num * b.diff(var) * others).scale(k)
        return RationalFunction._make(total, [(b, k + 1) for b, k in self.factors])

    def param_diff(self, name: str) -> "RationalFunction":
        num = self.num.param_diff(name)
        bases = [b for b, _ in self.factors]
        prod_all = ParamPoly.const(1, self.num.basis)
        for b in bases:
            prod_all = prod_all * b
        total = num * prod_all
        for i, (b, k) in enumerate(self.factors):
            others = ParamPoly.const(1, self.num.basis)
            for j, bb in enumerate(bases):
                if j != i:
                    others = others * bb
            total = total - (self.num * b.param_diff(name) * others).scale(k)
        return RationalFunction._make(total, [(b, k + 1) for b, k in self.factors])

    def substitute_params(self, bindings) -> "RationalFunction":
        return RationalFunction._make(
            param_substitute(self.num, bindings),
            [(param_substitute(b, bindings), k) for b, k in self.factors],
        )

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __eq__(self, other):
        if not isinstance(other, (RationalFunction, ParamPoly)):
            return NotImplemented
        return ratfn_equal(self, RationalFunction.coerce(other))

    __hash__ = None

    def to_numeric(self, values=None):
        num = self.num.to_numeric(values)
        dens = [(b.to_numeric(values), k) for b, k in self.factors]

        def f(x, y):
            out = num(x, y)
            for b, k in dens:
                out = out / b(x, y) ** k
            return out

        return f

    def __repr__(self):
        den = " * ".join(f"({b.canonical()})^{k}" for b, k in self.factors) or "1"
        return f"RationalFunction(({self.num.canonical()}) / {den})"


def ratfn_equal(r1: RationalFunction, r2: RationalFunction) -> bool:
    """num1 * den2 == num2 * den1 as polynomials."""
    r1 = RationalFunction.coerce(r1)
    r2 = RationalFunction.coerce(r2)
    return (r1 - r2).num.is_zero()


# ---------------------------------------------------------------------------
# text parsing
# ---------------------------------------------------------------------------

import ast as _ast

_FIELD_NAMES = {"i": I, "s3": None, "s3i": None}


class PolyParseError(ValueError):
    """Malformed polynomial text."""


def _field_atom(name: str) -> FieldElem:
    from .exactfield import S3, S3I

    return {"i": I, "s3": S3, "s3i": S3I}[name]


def parse_poly(text: str, basis: str | None = None) -> ParamPoly:
    """Parse text such as ``"x^2 + y^2 + 3"`` or ``"z*zb + s3*alpha"``.

    Names x, y, z, zb are coordinates; i, s3, s3i are field units; any other
    identifier is a parameter symbol.  Division is allowed only by nonzero
    field constants.  The result is in the basis of the coordinates used
    (ZZBAR if z or zb appears) unless ``basis`` is given.
    """
    src = text.replace("^", "**").strip()
    if not src:
        raise PolyParseError("empty polynomial")
    try:
        tree = _ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise PolyParseError(f"cannot parse {text!r}: {exc.msg}") from None
    uses_zz = any(isinstance(n, _ast.Name) and n.id in ("z", "zb") for n in _ast.walk(tree))
    target = basis or (ZZBAR if uses_zz else XY)

    def ev(node) -> ParamPoly:
        if isinstance(node, _ast.Expression):
            return ev(node.body)
        if isinstance(node, _ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise PolyParseError(f"only integer literals allowed, got {node.value!r}")
            return ParamPoly.const(node.value, target)
        if isinstance(node, _ast.Name):
            n = node.id
            if n == "x":
                return ParamPoly.x().to_basis(target)
            if n == "y":
                return ParamPoly.y().to_basis(target)
            if n == "z":
                return ParamPoly.z().to_basis(target)
            if n == "zb":
                return ParamPoly.zbar().to_basis(target)
            if n in _FIELD_NAMES:
                return ParamPoly.const(_field_atom(n), target)
            return ParamPoly.param(n, target)
        if isinstance(node, _ast.UnaryOp):
            v = ev(node.operand)
            if isinstance(node.op, _ast.USub):
                return -v
            if isinstance(node.op, _ast.UAdd):
                return v
        if isinstance(node, _ast.BinOp):
            a = ev(node.left)
            if isinstance(node.op, _ast.Pow):
                if not (isinstance(node.right, _ast.Constant) and isinstance(node.right.value, int)
                        and node.right.value >= 0):
                    raise PolyParseError("exponents must be nonnegative integer literals")
                return a ** node.right.value
            b = ev(node.right)
            if isinstance(node.op, _ast.Add):
                return a + b
            if isinstance(node.op, _ast.Sub):
                return a - b
            if isinstance(node.op, _ast.Mult):
                return a * b
            if isinstance(node.op, _ast.Div):
                c = b.coeff(0, 0)
                if len(b.terms) != 1 or not c.is_constant() or c.is_zero():
                    raise PolyParseError("division only by nonzero constants")
                return a.scale(c.constant_value().inv())
        raise PolyParseError(f"unsupported syntax in {text!r}: {_ast.dump(node)[:60]}")

    return ev(tree)


__all__ += ["parse_poly", "PolyParseError"]
