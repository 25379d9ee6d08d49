"""Star products on polynomial symbols and the triangle-area kernel.

The oscillatory kernel attached to a midpoint triple is
exp(i * s * area / hbar) with the same orientation constant s as the
composition module.  The star product is the standard bidifferential
series

    f * g = sum_{a,b} (i hbar / 2)^{|a|+|b|} (-1)^{|b|} / (a! b!)
            (d_q^a d_p^b f)(d_q^b d_p^a g)

over multi-indices a, b on the n position/momentum pairs.  Coefficient
arithmetic stays exact (Gaussian rationals) whenever the inputs and hbar
are ints, Fractions or ExactComplex values; floats demote the whole
computation to complex floats.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product

import numpy as np

from .affine import MidpointTriple, SymplecticStructure, triangle_area, vertices_from_midpoints
from .composition import ORIENTATION
from .errors import DegeneratePhase, DimensionMismatch
from .numerics import COND_LIMIT


@dataclass(frozen=True)
class ExactComplex:
    """Complex number with Fraction real and imaginary parts."""

    re: Fraction
    im: Fraction = Fraction(0)

    @staticmethod
    def lift(z):
        if isinstance(z, ExactComplex):
            return z
        if isinstance(z, (int, Fraction)):
            return ExactComplex(Fraction(z))
        return None  # not exactly representable

    def __add__(self, other):
        o = ExactComplex.lift(other)
        if o is None:
            return complex(self) + other
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def __sub__(self, other):
        o = ExactComplex.lift(other)
        if o is None:
            return complex(self) - other
        return ExactComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = ExactComplex.lift(other)
        if o is None:
            return complex(self) * other
        return ExactComplex(self.re * o.re - self.im * o.im,
                            self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __eq__(self, other):
        o = ExactComplex.lift(other)
        if o is not None:
            return self.re == o.re and self.im == o.im
        return complex(self) == other

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"({self.re}+{self.im}j)"


EXACT_I = ExactComplex(Fraction(0), Fraction(1))


def _is_zero(c) -> bool:
    return c == 0


class PolynomialSymbol:
    """Finitely many terms exponent-tuple -> complex coefficient.

    Exponents run over the 2n phase coordinates (q_1..q_n, p_1..p_n).
    Zero coefficients are dropped on construction (canonical form).
    """

    def __init__(self, terms, dim=None):
        merged = {}
        for exp, coef in (terms.items() if isinstance(terms, dict) else terms):
            exp = tuple(int(e) for e in exp)
            if any(e < 0 for e in exp):
                raise ValueError("exponents must be nonnegative")
            if exp in merged:
                merged[exp] = merged[exp] + coef
            else:
                merged[exp] = coef
        self.terms = {e: c for e, c in merged.items() if not _is_zero(c)}
        dims = {len(e) for e in self.terms}
        if len(dims) > 1:
            raise DimensionMismatch("mixed exponent lengths")
        self.dim = dim if dim is not None else (dims.pop() if dims else 2)
        if self.dim % 2:
            raise DimensionMismatch("phase-space dimension must be even")

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, dim=2):
        return cls({}, dim=dim)

    @classmethod
    def constant(cls, value, dim=2):
        return cls({(0,) * dim: value}, dim=dim)

    @classmethod
    def coordinate(cls, axis, dim=2):
        exp = [0] * dim
        exp[axis] = 1
        return cls({tuple(exp): 1}, dim=dim)

    # -- ring operations ---------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, PolynomialSymbol):
            other = PolynomialSymbol.constant(other, dim=self.dim)
        out = dict(self.terms)
        for exp, coef in other.terms.items():
            out[exp] = out.get(exp, 0) + coef
        return PolynomialSymbol(out, dim=self.dim)

    def __sub__(self, other):
        return self + (other * -1)

    def __mul__(self, other):
        if not isinstance(other, PolynomialSymbol):
            return PolynomialSymbol({e: c * other for e, c in self.terms.items()},
                                    dim=self.dim)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return PolynomialSymbol(out, dim=self.dim)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PolynomialSymbol):
            return NotImplemented
        if set(self.terms) != set(other.terms):
            return False
        return all(self.terms[e] == other.terms[e] for e in self.terms)

    def __repr__(self):
        if not self.terms:
            return "PolynomialSymbol(0)"
        bits = [f"{c!r}*x^{e}" for e, c in sorted(self.terms.items())]
        return "PolynomialSymbol(" + " + ".join(bits) + ")"

    def derivative(self, axis, times=1):
        out = self
        for _ in range(times):
            terms = {}
            for exp, coef in out.terms.items():
                if exp[axis] == 0:
                    continue
                e = list(exp)
                e[axis] -= 1
                terms[tuple(e)] = coef * exp[axis]
            out = PolynomialSymbol(terms, dim=self.dim)
        return out

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def evaluate(self, x):
        x = np.asarray(x, dtype=complex)
        total = 0j
        for exp, coef in self.terms.items():
            m = complex(coef) if isinstance(coef, ExactComplex) else coef
            for xi, ei in zip(x, exp):
                if ei:
                    m = m * xi ** ei
            total += m
        return total

    # -- JSON --------------------------------------------------------------
    def to_dict(self) -> dict:
        out = []
        for exp, coef in sorted(self.terms.items()):
            z = complex(coef)
            out.append({"exp": list(exp), "re": z.real, "im": z.imag})
        return {"terms": out}

    @classmethod
    def from_dict(cls, d, dim=None):
        terms = {tuple(t["exp"]): complex(t.get("re", 0.0), t.get("im", 0.0))
                 for t in d["terms"]}
        return cls(terms, dim=dim)


def poisson_bracket(f: PolynomialSymbol, g: PolynomialSymbol) -> PolynomialSymbol:
    """{f, g} = sum_i (d_qi f d_pi g - d_pi f d_qi g)."""
    if f.dim != g.dim:
        raise DimensionMismatch("operands live on different phase spaces")
    n = f.dim // 2
    out = PolynomialSymbol.zero(dim=f.dim)
    for i in range(n):
        out = out + f.derivative(i) * g.derivative(n + i) \
                  - f.derivative(n + i) * g.derivative(i)
    return out


def _multi_indices(n, total):
    """All length-n tuples of nonnegative ints summing to total."""
    if n == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _multi_indices(n - 1, total - head):
            yield (head,) + rest


def star_product_poly(f: PolynomialSymbol, g: PolynomialSymbol, hbar,
                      order: int) -> PolynomialSymbol:
    """Star product truncated at hbar^order.

    The series terminates exactly once order reaches min(deg f, deg g), so
    for polynomial symbols a large enough order gives the full product.
    """
    if f.dim != g.dim:
        raise DimensionMismatch("operands live on different phase spaces")
    if order < 0:
        raise ValueError("order must be nonnegative")
    n = f.dim // 2
    exact_h = ExactComplex.lift(hbar)
    if exact_h is not None:
        half_i_hbar = exact_h * EXACT_I * ExactComplex(Fraction(1, 2))
        scalar_k = ExactComplex(Fraction(1))
    else:
        half_i_hbar = 0.5j * hbar
        scalar_k = 1.0 + 0.0j

    out = PolynomialSymbol.zero(dim=f.dim)
    max_k = min(order, f.degree(), g.degree())
    for k in range(max_k + 1):
        if k > 0:
            scalar_k = scalar_k * half_i_hbar  # (i hbar / 2)^k
        for ab in _multi_indices(2 * n, k):
            aa, bb = ab[:n], ab[n:]
            fact = 1
            for v in ab:
                fact *= math.factorial(v)
            sign = -1 if sum(bb) % 2 else 1
            if isinstance(scalar_k, ExactComplex):
                weight = scalar_k * ExactComplex(Fraction(sign, fact))
            else:
                weight = scalar_k * sign / fact
            df, dg = f, g
            for i in range(n):
                df = df.derivative(i, aa[i]).derivative(n + i, bb[i])
                dg = dg.derivative(i, bb[i]).derivative(n + i, aa[i])
            if not df.terms or not dg.terms:
                continue
            out = out + (df * dg) * weight
    return out


def moyal_kernel(space: SymplecticStructure, x1, x2, x, hbar: float) -> complex:
    """exp(i * s * area(PQR) / hbar) for the triangle with these midpoints."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    area = triangle_area(space, vertices_from_midpoints(
        MidpointTriple(x1=np.asarray(x1, float), x2=np.asarray(x2, float),
                       x=np.asarray(x, float))))
    return cmath.exp(1j * ORIENTATION * area / hbar)


def gaussian_phase_product(space: SymplecticStructure, S1, S2, x, hbar: float):
    """Exact Gaussian evaluation of the composed oscillatory product.

    Integrates exp(i (H1(x1) + H2(x2) + s*area) / hbar) over (x1, x2) by
    the complex Gaussian formula, which is exact for quadratic phase.
    Returns (phase, log_amplitude): the phase equals the critical value of
    the functional, i.e. the composed quadratic generating function at x;
    the amplitude carries the determinant and signature factors and is
    reported without further interpretation.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    x = np.asarray(x, dtype=float)
    S1 = np.asarray(S1, dtype=float)
    S2 = np.asarray(S2, dtype=float)
    omega = space.Omega
    dim = space.dim
    coupling = -2.0 * ORIENTATION * omega
    M = np.block([[S1, coupling], [coupling.T, S2]])
    if np.linalg.cond(M) > COND_LIMIT:
        raise DegeneratePhase("phase Hessian in (x1, x2) is singular")
    b = np.concatenate([2.0 * ORIENTATION * (omega @ x),
                        -2.0 * ORIENTATION * (omega @ x)])
    y_star = np.linalg.solve(M, -b)
    phase = float(0.5 * y_star @ M @ y_star + b @ y_star)

    eigs = np.linalg.eigvalsh(M)
    signature = int(np.sum(eigs > 0) - np.sum(eigs < 0))
    log_amplitude = complex(dim * math.log(2 * math.pi * hbar)
                            - 0.5 * math.log(abs(float(np.linalg.det(M)))),
                            math.pi * signature / 4.0)
    return phase, log_amplitude
