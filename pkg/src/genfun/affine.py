"""Symplectic vector-space geometry.

Phase points are plain numpy vectors of length 2n, ordered
(q_1..q_n, p_1..p_n).  The default symplectic form is the standard block
form Omega = [[0, I], [-I, 0]], so omega(u, v) = u^T Omega v and, for n=1,
omega(u, v) = u_q v_p - u_p v_q.

Sign convention: the displacement field of a Hamiltonian H is the unique u
with omega(u, v) = dH(v) for all v, i.e. u = (Omega^T)^{-1} grad H.  In the
standard basis this is Hamilton's vector field (qdot = dH/dp,
pdot = -dH/dq); DISPLACEMENT_SIGN flips it globally should the opposite
convention ever be required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch

DISPLACEMENT_SIGN = 1.0


def standard_omega(n: int) -> np.ndarray:
    """The 2n x 2n standard form matrix: omega(e_i, e_{n+i}) = 1."""
    z = np.zeros((n, n))
    eye = np.eye(n)
    return np.block([[z, eye], [-eye, z]])


@dataclass(frozen=True)
class SymplecticStructure:
    """Dimension 2n together with the constant form matrix Omega."""

    n: int
    Omega: np.ndarray = None

    def __post_init__(self):
        omega = self.Omega if self.Omega is not None else standard_omega(self.n)
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (2 * self.n, 2 * self.n):
            raise DimensionMismatch(f"Omega must be {2*self.n}x{2*self.n}, got {omega.shape}")
        if not np.allclose(omega, -omega.T, atol=1e-12):
            raise ValueError("Omega must be antisymmetric")
        if abs(np.linalg.det(omega)) < 1e-12:
            raise ValueError("Omega must be invertible")
        object.__setattr__(self, "Omega", omega)
        # W solves Omega^T u = grad, i.e. u = W grad is the displacement field
        object.__setattr__(self, "_W", np.linalg.inv(omega.T))

    @property
    def dim(self) -> int:
        return 2 * self.n

    def omega(self, u, v) -> float:
        """omega(u, v) = u^T Omega v; bilinear and antisymmetric."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != (self.dim,) or v.shape != (self.dim,):
            raise DimensionMismatch(f"expected vectors of length {self.dim}")
        return float(u @ self.Omega @ v)

    def dual_vector(self, covector) -> np.ndarray:
        """The vector u with omega(u, .) equal to the given covector."""
        covector = np.asarray(covector, dtype=float)
        if covector.shape != (self.dim,):
            raise DimensionMismatch(f"expected a covector of length {self.dim}")
        return self._W @ covector


# --------------------------------------------------------------------------
# Hamiltonian specifications: exact values, gradients and Hessians.
# Any object with value/grad/hess methods works wherever these are accepted.

@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H(x) = x'Sx/2 + b.x + c with S symmetric."""

    S: np.ndarray
    b: np.ndarray = None
    c: float = 0.0

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DimensionMismatch("S must be square")
        if not np.allclose(S, S.T, atol=1e-12 * max(1.0, float(np.abs(S).max()))):
            raise ValueError("S must be symmetric")
        b = np.zeros(S.shape[0]) if self.b is None else np.asarray(self.b, dtype=float)
        if b.shape != (S.shape[0],):
            raise DimensionMismatch("b must match the dimension of S")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "b", b)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.S @ x + self.b @ x + self.c)

    def grad(self, x) -> np.ndarray:
        return self.S @ np.asarray(x, dtype=float) + self.b

    def hess(self, x) -> np.ndarray:
        return self.S.copy()


@dataclass(frozen=True)
class PolynomialHamiltonian:
    """Real polynomial sum of c * prod x_i^{e_i}; exponents nonnegative."""

    terms: tuple

    def __post_init__(self):
        norm = []
        for exp, coef in self.terms:
            exp = tuple(int(e) for e in exp)
            if any(e < 0 for e in exp):
                raise ValueError("exponents must be nonnegative")
            norm.append((exp, float(coef)))
        object.__setattr__(self, "terms", tuple(norm))

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for exp, coef in self.terms:
            m = coef
            for xi, ei in zip(x, exp):
                if ei:
                    m *= xi ** ei
            total += m
        return total

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        for exp, coef in self.terms:
            for i, ei in enumerate(exp):
                if ei == 0:
                    continue
                m = coef * ei
                for j, ej in enumerate(exp):
                    m *= x[j] ** (ej - (1 if j == i else 0))
                g[i] += m
        return g

    def hess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x.size
        h = np.zeros((d, d))
        for exp, coef in self.terms:
            for i in range(d):
                if exp[i] == 0:
                    continue
                for j in range(d):
                    cj = exp[j] if j != i else exp[i] - 1
                    if cj == 0:
                        continue
                    m = coef * exp[i] * cj
                    for k in range(d):
                        pw = exp[k] - (1 if k == i else 0) - (1 if k == j else 0)
                        m *= x[k] ** pw
                    h[i, j] += m
        return h


class PendulumHamiltonian:
    """H(q, p) = p^2/2 - cos q on the 2-dimensional phase space."""

    name = "pendulum"

    def value(self, x) -> float:
        return float(0.5 * x[1] ** 2 - math.cos(x[0]))

    def grad(self, x) -> np.ndarray:
        return np.array([math.sin(x[0]), x[1]])

    def hess(self, x) -> np.ndarray:
        return np.array([[math.cos(x[0]), 0.0], [0.0, 1.0]])


BUILTIN_HAMILTONIANS = {"pendulum": PendulumHamiltonian}


@dataclass(frozen=True)
class ScaledHamiltonian:
    """factor * H, sharing H's analytic derivatives."""

    base: object
    factor: float

    def value(self, x) -> float:
        return self.factor * self.base.value(x)

    def grad(self, x) -> np.ndarray:
        return self.factor * self.base.grad(x)

    def hess(self, x) -> np.ndarray:
        return self.factor * self.base.hess(x)


def zero_hamiltonian(dim: int) -> QuadraticHamiltonian:
    return QuadraticHamiltonian(S=np.zeros((dim, dim)))


def hamiltonian_to_dict(h) -> dict:
    """JSON-ready encoding of the three named variants."""
    if isinstance(h, QuadraticHamiltonian):
        return {"type": "quadratic", "S": h.S.tolist(), "b": h.b.tolist(), "c": h.c}
    if isinstance(h, PolynomialHamiltonian):
        return {"type": "polynomial",
                "terms": [{"exp": list(e), "coef": c} for e, c in h.terms]}
    if isinstance(h, PendulumHamiltonian):
        return {"type": "builtin", "name": h.name}
    raise TypeError(f"no JSON encoding for {type(h).__name__}")


def hamiltonian_from_dict(d: dict):
    kind = d.get("type")
    if kind == "quadratic":
        return QuadraticHamiltonian(S=np.array(d["S"], dtype=float),
                                    b=np.array(d["b"], dtype=float) if "b" in d else None,
                                    c=float(d.get("c", 0.0)))
    if kind == "polynomial":
        return PolynomialHamiltonian(
            terms=tuple((tuple(t["exp"]), float(t["coef"])) for t in d["terms"]))
    if kind == "builtin":
        name = d.get("name")
        if name not in BUILTIN_HAMILTONIANS:
            raise ValueError(f"unknown builtin hamiltonian {name!r}")
        return BUILTIN_HAMILTONIANS[name]()
    raise ValueError(f"unknown hamiltonian type {kind!r}")


# --------------------------------------------------------------------------
# Geometry: displacement vectors, triangles, midpoints, pair <-> cotangent.

def hamiltonian_displacement(space: SymplecticStructure, h, x) -> np.ndarray:
    """The unique u with omega(u, v) = dH_x(v) for all v.

    Solves Omega^T u = grad H(x); with the standard form this is the
    Hamiltonian vector field (qdot = dH/dp, pdot = -dH/dq).
    """
    return DISPLACEMENT_SIGN * space.dual_vector(h.grad(x))


def displacement_jacobian(space: SymplecticStructure, h, x) -> np.ndarray:
    """d(u)/dx = (Omega^T)^{-1} Hess H(x); analytic whenever hess is."""
    return DISPLACEMENT_SIGN * (space._W @ h.hess(x))


@dataclass(frozen=True)
class Triangle:
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class MidpointTriple:
    """Side midpoints: x1 = mid(P,R), x2 = mid(R,Q), x = mid(P,Q)."""

    x1: np.ndarray
    x2: np.ndarray
    x: np.ndarray


def triangle_area(space: SymplecticStructure, tri: Triangle) -> float:
    """Signed symplectic area omega(Q-P, R-P)/2 of the triangle."""
    P = np.asarray(tri.P, dtype=float)
    Q = np.asarray(tri.Q, dtype=float)
    R = np.asarray(tri.R, dtype=float)
    return 0.5 * space.omega(Q - P, R - P)


def vertices_from_midpoints(m: MidpointTriple) -> Triangle:
    """Invert the side-midpoint map: P = x1-x2+x, R = x1+x2-x, Q = -x1+x2+x."""
    x1 = np.asarray(m.x1, dtype=float)
    x2 = np.asarray(m.x2, dtype=float)
    x = np.asarray(m.x, dtype=float)
    return Triangle(P=x1 - x2 + x, Q=-x1 + x2 + x, R=x1 + x2 - x)


def midpoints_of(tri: Triangle) -> MidpointTriple:
    P = np.asarray(tri.P, dtype=float)
    Q = np.asarray(tri.Q, dtype=float)
    R = np.asarray(tri.R, dtype=float)
    return MidpointTriple(x1=(P + R) / 2, x2=(R + Q) / 2, x=(P + Q) / 2)


def pair_to_cotangent(space: SymplecticStructure, P, Q):
    """Identify the pair (P, Q) with the cotangent point ((P+Q)/2, omega(Q-P, .)).

    The covector is returned componentwise: alpha_i = omega(Q-P, e_i).
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    base = (P + Q) / 2
    covector = (Q - P) @ space.Omega
    return base, covector


def cotangent_to_pair(space: SymplecticStructure, base, covector):
    """Exact inverse of :func:`pair_to_cotangent`."""
    base = np.asarray(base, dtype=float)
    w = np.linalg.solve(space.Omega.T, np.asarray(covector, dtype=float))
    return base - w / 2, base + w / 2
