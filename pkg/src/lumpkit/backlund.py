"""Degree-by-degree Backlund chain solver.

Given a polynomial tau function f and a Backlund pair, ``chain_step`` writes
the transform g as a full ansatz below its leading monomial (one unknown per
monomial), computes both residuals once, and eliminates the unknowns exactly,
working from the top-degree residual coefficients downward.  Unknowns that
are never fixed become free parameters of the family.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

from .exactfield import S3, FieldElem
from .hirota import BilinearOp, apply_op, back2, boussinesq_residual, gh_system
from .polyring import ZZBAR, ParamPoly, ParamScalar, homogeneous_component

__all__ = [
    "Direction",
    "BacklundSystem",
    "ChainResult",
    "BacklundError",
    "SingularFormulaError",
    "jn_roots",
    "index_quadratic",
    "subleading_coefficient",
    "chain_step",
    "chain_step_all",
    "verify_pair",
]


class BacklundError(ValueError):
    """The chain construction failed; ``level`` is the offending degree, if known."""

    def __init__(self, msg: str, level: int | None = None):
        super().__init__(msg)
        self.level = level


class SingularFormulaError(ZeroDivisionError):
    """The closed-form sub-leading coefficient has a vanishing denominator."""


class Direction(enum.Enum):
    ZBAR_LEADING = "zbar"
    Z_LEADING = "z"


@dataclass(frozen=True)
class BacklundSystem:
    eq1: BilinearOp
    eq2: BilinearOp
    direction: Direction
    name: str = ""

    @classmethod
    def back2(cls, sign: int = 1) -> "BacklundSystem":
        """mu = +1/sqrt3 has first-order part (2/sqrt3) D_zbar; mu = -1/sqrt3 has D_z."""
        e1, e2 = back2(sign)
        direction = Direction.ZBAR_LEADING if sign == 1 else Direction.Z_LEADING
        return cls(e1, e2, direction, f"back2{'+' if sign == 1 else '-'}")

    @classmethod
    def gh(cls) -> "BacklundSystem":
        e1, e2 = gh_system()
        return cls(e1, e2, Direction.Z_LEADING, "gh")


@dataclass
class ChainResult:
    transforms: list
    free_parameters: list = field(default_factory=list)
    # (j, degree, leading exponent) for each transform, parallel to ``transforms``
    leading: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# index equation
# ---------------------------------------------------------------------------

def index_quadratic(n: int, j: int) -> int:
    return n * (n - 1) - 2 * n * j + j * (j - 1)


def jn_roots(n: int) -> set[int]:
    """Nonnegative integer roots j of n(n-1) - 2nj + j(j-1) = 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    disc = 8 * n + 1
    r = isqrt(disc)
    if r * r != disc:
        return set()
    roots = {(2 * n + 1 - r) // 2, (2 * n + 1 + r) // 2}
    return {j for j in roots if j >= 0 and index_quadratic(n, j) == 0}


def subleading_coefficient(n: int, j: int) -> FieldElem:
    """c = -(j-n)(j+n-1) / (2 sqrt3 (n-j+1))."""
    if j not in jn_roots(n):
        raise ValueError(f"j={j} is not a root of the index equation for n={n}")
    den = n - j + 1
    if den == 0:
        raise SingularFormulaError(f"n - j + 1 = 0 for (n, j) = ({n}, {j})")
    # 1/sqrt3 = sqrt3/3
    return FieldElem(Fraction(-(j - n) * (j + n - 1), 2 * den)) * S3 / 3


# ---------------------------------------------------------------------------
# chain solver
# ---------------------------------------------------------------------------

def verify_pair(f: ParamPoly, g: ParamPoly, system: BacklundSystem) -> tuple[ParamPoly, ParamPoly]:
    f = f.to_zz()
    g = g.to_zz()
    return apply_op(system.eq1, f, g), apply_op(system.eq2, f, g)


def _single_top(f: ParamPoly) -> tuple[int, int]:
    d = f.total_degree()
    top = f.homogeneous_component(int(d)).terms if d >= 0 else {}
    if len(top) != 1:
        raise BacklundError("leading graded part of f must be a single monomial")
    (p, q), c = next(iter(top.items()))
    if c != ParamScalar.const(1):
        raise BacklundError("leading coefficient of f must be normalized to 1")
    return p, q


def _leading_data(f: ParamPoly, system: BacklundSystem, j: int):
    """Leading exponent of g and the exponents where free symbols are expected."""
    p, q = _single_top(f)
    if system.direction is Direction.ZBAR_LEADING:
        n = q
        if p != q:
            raise BacklundError(f"ZBAR_LEADING needs a top term z^n zb^n, got z^{p} zb^{q}")
        if not homogeneous_component(f, 2 * n - 1).is_zero():
            raise BacklundError("f must be translated so that its degree 2n-1 part vanishes",
                                level=2 * n - 1)
        roots = jn_roots(n)
        if j not in roots:
            raise BacklundError(f"j={j} is not in jn_roots({n}) = {sorted(roots)}")
        lead = (j, n)
        predicted = {(jj, n) for jj in roots if jj != j}
    else:
        n = q
        roots = jn_roots(n)
        if j not in roots:
            raise BacklundError(f"j={j} is not in jn_roots({n}) = {sorted(roots)}")
        lead = (p, j)
        predicted = {(p, jj) for jj in roots if jj != j}
    return n, lead, predicted


def _unknown(p: int, q: int) -> str:
    return f"_t{p}_{q}"


def chain_step(
    f: ParamPoly,
    system: BacklundSystem,
    j: int,
    free_names: list[str] | None = None,
    check_input: bool = True,
) -> ChainResult:
    """Build the Backlund transform g of f with leading index j.

    ``free_names`` renames the free coefficients (in order of decreasing
    degree); missing names default to sigma, sigma2, ...
    """
    f = f.to_zz()
    if check_input and not boussinesq_residual(f).is_zero():
        raise BacklundError("input f does not solve the bilinear equation")
    n, lead, predicted = _leading_data(f, system, j)
    m = lead[0] + lead[1]

    unknowns: dict[str, tuple[int, int]] = {}
    terms = {lead: ParamScalar.const(1)}
    for deg in range(m, -1, -1):
        for a in range(deg, -1, -1):
            key = (a, deg - a)
            if key == lead:
                continue
            name = _unknown(*key)
            unknowns[name] = key
            terms[key] = ParamScalar.symbol(name)
    g = ParamPoly(terms, ZZBAR)

    r1, r2 = verify_pair(f, g, system)
    eqs = []
    for tag, r in (("eq1", r1), ("eq2", r2)):
        for (a, b), c in r.items():
            eqs.append((a + b, a, tag, c))
    eqs.sort(key=lambda e: (-e[0], -e[1], e[2]))

    solution: dict[str, ParamScalar] = {}
    names = set(unknowns)

    def rank(name: str):
        key = unknowns[name]
        # prefer unknowns not predicted free, then the lowest degree
        return (key in predicted, key[0] + key[1], key[0])

    pending = [(lvl, c) for lvl, _a, _tag, c in eqs]
    while pending:
        deferred = []
        progress = False
        for lvl, c in pending:
            c = c.substitute(solution)
            if c.is_zero():
                continue
            coeffs, rest = c.split_linear(names)
            if not coeffs:
                raise BacklundError(
                    f"inconsistent compatibility condition at residual degree {lvl}: {rest} = 0",
                    level=lvl,
                )
            usable = [s for s, k in coeffs.items() if k.is_constant()]
            if not usable:
                deferred.append((lvl, c))
                continue
            piv = min(usable, key=rank)
            pc = coeffs.pop(piv).constant_value()
            expr = rest
            for s, k in coeffs.items():
                expr = expr + k * ParamScalar.symbol(s)
            value = expr * (-pc.inv())
            for s in list(solution):
                solution[s] = solution[s].substitute({piv: value})
            solution[piv] = value
            names.discard(piv)
            progress = True
        if deferred and not progress:
            lvl = deferred[0][0]
            raise BacklundError(
                f"only parameter-dependent pivots remain at residual degree {lvl}", level=lvl
            )
        pending = deferred

    free = sorted(names, key=lambda s: (-(unknowns[s][0] + unknowns[s][1]), -unknowns[s][0]))
    free_names = list(free_names or [])
    rename: dict[str, ParamScalar] = {}
    free_parameters = []
    for idx, s in enumerate(free):
        if idx < len(free_names):
            new = free_names[idx]
        else:
            new = "sigma" if idx - len(free_names) == 0 else f"sigma{idx - len(free_names) + 1}"
        if new in f.symbols():
            raise BacklundError(f"free symbol name {new!r} already used by f")
        rename[s] = ParamScalar.symbol(new)
        p, q = unknowns[s]
        free_parameters.append((p + q, (p, q), new))

    final = {}
    for key, c in g.items():
        v = c.substitute(solution).substitute(rename)
        if not v.is_zero():
            final[key] = v
    result = ParamPoly(final, ZZBAR)

    r1, r2 = verify_pair(f, result, system)
    if not (r1.is_zero() and r2.is_zero()):
        raise BacklundError("internal error: solved transform does not satisfy the system")
    return ChainResult([result], free_parameters, [(j, m, lead)])


def chain_step_all(f: ParamPoly, system: BacklundSystem, **kw) -> ChainResult:
    """Run chain_step for every admissible leading index and merge the results."""
    f = f.to_zz()
    _p, q = _single_top(f)
    out = ChainResult([], [], [])
    for j in sorted(jn_roots(q)):
        r = chain_step(f, system, j, **kw)
        out.transforms.extend(r.transforms)
        out.free_parameters.extend(r.free_parameters)
        out.leading.extend(r.leading)
    return out
