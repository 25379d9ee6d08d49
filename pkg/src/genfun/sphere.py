"""The midpoint generating-function construction on the unit sphere.

The sphere carries its area 2-form omega_x(a, b) = x . (a x b) (total area
4 pi).  A non-antipodal pair (P, Q) is identified with the tangent vector
u = Q - P at the midpoint x of the shorter arc PQ; the chord is
automatically tangent there and |u| = 2 sin(d/2) < 2, so pairs fill out
the open radius-2 ball bundle.  The map of a Hamiltonian H sends P to Q
where x solves the implicit midpoint relation, exactly as in the affine
case but with chords through tangent planes.

All root-finding runs in 2-dimensional orthonormal tangent charts,
re-anchored at the current iterate, with plain normalization as the
retraction.  Points are plain unit 3-vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .affine import PolynomialHamiltonian, Triangle
from .composition import ORIENTATION
from .errors import (AntipodalPair, DegenerateConfiguration, NoConvergence,
                     NonFiniteValue, NotTangent, TangentTooLong)
from .numerics import COND_LIMIT, SolverConfig, fd_jacobian, solve_newton

ANTIPODAL_EPS = 1e-9
# FD step for gradients of the spherical area functional
AREA_GRAD_STEP = 1e-5


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm < 1e-300:
        raise ValueError("cannot normalize the zero vector")
    return v / norm


def tangent_frame(x) -> np.ndarray:
    """Right-handed orthonormal 3x2 basis of the tangent plane at x."""
    x = np.asarray(x, dtype=float)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(x)))] = 1.0
    e1 = unit_vector(helper - (helper @ x) * x)
    e2 = np.cross(x, e1)
    return np.column_stack([e1, e2])


@dataclass(frozen=True)
class TangentAt:
    """A tangent vector u anchored at a sphere point."""

    base: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        base = unit_vector(self.base)
        u = np.asarray(self.u, dtype=float)
        if abs(u @ base) > 1e-9 * max(1.0, float(np.linalg.norm(u))):
            raise NotTangent("u is not orthogonal to its base point")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "u", u)


def geodesic_midpoint(P, Q) -> np.ndarray:
    """Midpoint of the shorter arc; undefined for antipodal pairs."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    s = P + Q
    if np.linalg.norm(s) < ANTIPODAL_EPS:
        raise AntipodalPair("midpoint of an antipodal pair is undefined")
    return unit_vector(s)


def point_symmetry(x, p) -> np.ndarray:
    """Rotation by pi about the axis through x: p -> 2(p.x)x - p."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return 2.0 * (p @ x) * x - p


def _symmetry_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 2.0 * np.outer(a, a) - np.eye(3)


def pair_to_tangent(P, Q) -> TangentAt:
    """Identify (P, Q) with the chord at the shorter-arc midpoint.

    u is the orthogonal projection difference proj_x(Q) - proj_x(P), which
    equals the chord Q - P (already tangent at x); |u| = 2 sin(d/2) < 2.
    """
    P = unit_vector(P)
    Q = unit_vector(Q)
    x = geodesic_midpoint(P, Q)
    proj = lambda p: p - (p @ x) * x
    return TangentAt(base=x, u=proj(Q) - proj(P))


def tangent_to_pair(x, u):
    """Inverse identification: center the chord u on the tangent plane at x.

    P = -u/2 + sqrt(1 - |u|^2/4) x and Q = u/2 + sqrt(1 - |u|^2/4) x.
    """
    x = unit_vector(x)
    u = np.asarray(u, dtype=float)
    if abs(u @ x) > 1e-9 * max(1.0, float(np.linalg.norm(u))):
        raise NotTangent("u is not tangent at x")
    usq = float(u @ u)
    if usq >= 4.0:
        raise TangentTooLong(f"|u| = {math.sqrt(usq):.6f} >= 2")
    height = math.sqrt(1.0 - usq / 4.0)
    return -0.5 * u + height * x, 0.5 * u + height * x


# --------------------------------------------------------------------------
# Hamiltonians on the sphere: value plus ambient gradient.

@dataclass(frozen=True)
class LinearSphereHamiltonian:
    """H(p) = c . p for a fixed 3-vector c."""

    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))

    def value(self, p) -> float:
        return float(self.c @ np.asarray(p, dtype=float))

    def grad_ambient(self, p) -> np.ndarray:
        return self.c.copy()


@dataclass(frozen=True)
class AmbientPolynomialSphereHamiltonian:
    """Polynomial in the ambient coordinates, restricted to the sphere."""

    terms: tuple

    def __post_init__(self):
        poly = PolynomialHamiltonian(terms=tuple(self.terms))
        object.__setattr__(self, "terms", poly.terms)
        object.__setattr__(self, "_poly", poly)

    def value(self, p) -> float:
        return self._poly.value(np.asarray(p, dtype=float))

    def grad_ambient(self, p) -> np.ndarray:
        return self._poly.grad(np.asarray(p, dtype=float))


class CallableSphereHamiltonian:
    """Wrap a plain function on the sphere; gradient FD'd in tangent charts."""

    def __init__(self, value_fn: Callable, grad_fn: Optional[Callable] = None,
                 fd_step: float = AREA_GRAD_STEP):
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self._fd_step = fd_step

    def value(self, p) -> float:
        return float(self._value_fn(np.asarray(p, dtype=float)))

    def grad_ambient(self, p) -> np.ndarray:
        p = unit_vector(p)
        if self._grad_fn is not None:
            return np.asarray(self._grad_fn(p), dtype=float)
        frame = tangent_frame(p)
        h = self._fd_step
        g = np.zeros(3)
        for k in range(2):
            plus = self.value(unit_vector(p + h * frame[:, k]))
            minus = self.value(unit_vector(p - h * frame[:, k]))
            g += (plus - minus) / (2.0 * h) * frame[:, k]
        return g


def scale_sphere_hamiltonian(h, factor: float):
    """factor * H preserving exact gradients where available."""
    if isinstance(h, LinearSphereHamiltonian):
        return LinearSphereHamiltonian(factor * h.c)
    if isinstance(h, AmbientPolynomialSphereHamiltonian):
        return AmbientPolynomialSphereHamiltonian(
            tuple((e, factor * c) for e, c in h.terms))
    return CallableSphereHamiltonian(lambda p: factor * h.value(p),
                                     lambda p: factor * h.grad_ambient(p))


def rotate_sphere_hamiltonian(h, rotation):
    """The pullback H(R^T p), whose map is conjugate to H's by R."""
    rotation = np.asarray(rotation, dtype=float)
    return CallableSphereHamiltonian(
        lambda p: h.value(rotation.T @ p),
        lambda p: rotation @ h.grad_ambient(rotation.T @ p))


def surface_gradient(h, x) -> np.ndarray:
    """Ambient gradient projected to the tangent plane at x."""
    x = unit_vector(x)
    g = np.asarray(h.grad_ambient(x), dtype=float)
    return g - (g @ x) * x


def sphere_hamiltonian_vector(h, x) -> TangentAt:
    """The unique tangent u with omega_x(u, v) = dH(v) for tangent v.

    With omega_x(a, b) = x . (a x b) the closed form is u = grad_S H x x
    (cross product), matching the affine sign convention in flat limits.
    """
    x = unit_vector(x)
    return TangentAt(base=x, u=np.cross(surface_gradient(h, x), x))


def sphere_hamiltonian_json(h) -> dict:
    if isinstance(h, LinearSphereHamiltonian):
        return {"type": "linear", "c": h.c.tolist()}
    if isinstance(h, AmbientPolynomialSphereHamiltonian):
        return {"type": "ambient_poly",
                "terms": [{"exp": list(e), "coef": c} for e, c in h.terms]}
    raise TypeError(f"no JSON encoding for {type(h).__name__}")


def sphere_hamiltonian_from_dict(d: dict):
    kind = d.get("type")
    if kind == "linear":
        return LinearSphereHamiltonian(np.array(d["c"], dtype=float))
    if kind == "ambient_poly":
        return AmbientPolynomialSphereHamiltonian(
            tuple((tuple(t["exp"]), float(t["coef"])) for t in d["terms"]))
    raise ValueError(f"unknown sphere hamiltonian type {kind!r}")


# --------------------------------------------------------------------------
# The spherical midpoint map.

def _chart_newton(residual3, x0, cfg: SolverConfig, fd_step=None) -> tuple:
    """Newton on the sphere: 2-dim solve in a frame re-anchored each step."""
    h = fd_step if fd_step is not None else cfg.fd_step
    x = unit_vector(x0)
    r = residual3(x)
    if not np.all(np.isfinite(r)):
        raise NonFiniteValue("residual not finite at the initial point")
    rnorm = float(np.linalg.norm(r))
    for _ in range(cfg.max_iter):
        if rnorm <= cfg.tol:
            return x, True, rnorm
        frame = tangent_frame(x)

        def local(xi):
            return frame.T @ residual3(unit_vector(x + frame @ xi))

        try:
            jac = fd_jacobian(local, np.zeros(2), h)
        except NonFiniteValue:
            return x, False, rnorm
        if np.linalg.cond(jac) > COND_LIMIT:
            return x, False, rnorm
        step = np.linalg.solve(jac, -(frame.T @ r))

        t, accepted = 1.0, False
        while t >= 2.0 ** -40:
            x_try = unit_vector(x + frame @ (t * step))
            r_try = residual3(x_try)
            if np.all(np.isfinite(r_try)):
                n_try = float(np.linalg.norm(r_try))
                if n_try < rnorm:
                    x, r, rnorm = x_try, r_try, n_try
                    accepted = True
                    break
            t *= cfg.damping
        if not accepted:
            return x, False, rnorm
    return x, rnorm <= cfg.tol, rnorm


def sphere_phi_forward(h, P, cfg: SolverConfig = SolverConfig(), x0=None,
                       chart_step=None):
    """Map P forward under the spherical midpoint construction.

    Solves for the arc midpoint x with tangent_to_pair(x, u(x)) = (P, Q)
    and returns (Q, x).  Raises TangentTooLong when |u| >= 2 already at the
    start (the Hamiltonian is too large for the chord construction) and
    NoConvergence when the chart Newton stalls.
    """
    P = unit_vector(P)

    def residual3(x):
        u = sphere_hamiltonian_vector(h, x).u
        usq = float(u @ u)
        if usq >= 4.0:
            return np.full(3, np.nan)
        return (-0.5 * u + math.sqrt(1.0 - usq / 4.0) * x) - P

    u0 = sphere_hamiltonian_vector(h, P).u
    if float(u0 @ u0) >= 4.0:
        raise TangentTooLong("displacement at the start point has length >= 2")

    start = P if x0 is None else unit_vector(x0)
    x, ok, rnorm = _chart_newton(residual3, start, cfg, fd_step=chart_step)
    if not ok:
        raise NoConvergence(f"spherical midpoint solve stalled (residual {rnorm:.3e})")
    u = sphere_hamiltonian_vector(h, x).u
    _, Q = tangent_to_pair(x, u)
    return Q, x


def sphere_reference_flow(h, P, t=1.0) -> np.ndarray:
    """High-accuracy time-t flow of the spherical Hamiltonian field."""
    def rhs(_, y):
        return sphere_hamiltonian_vector(h, y / np.linalg.norm(y)).u

    sol = solve_ivp(rhs, (0.0, t), unit_vector(P), method="DOP853",
                    rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NoConvergence(f"reference flow integration failed: {sol.message}")
    return unit_vector(sol.y[:, -1])


def sphere_infinitesimal_order(h, P, cfg: SolverConfig = SolverConfig(),
                               epsilons=None):
    """Log-log slope of |Phi_{eps H}(P) - flow_eps(P)| over a decade of eps."""
    if epsilons is None:
        epsilons = np.geomspace(1e-2, 1e-3, 6)
    epsilons = np.asarray(epsilons, dtype=float)
    defects = []
    for eps in epsilons:
        scaled = scale_sphere_hamiltonian(h, float(eps))
        Q, _ = sphere_phi_forward(scaled, P, cfg)
        ref = sphere_reference_flow(scaled, P, t=1.0)
        defects.append(float(np.linalg.norm(Q - ref)))
    defects = np.array(defects)
    if np.any(defects < 1e-14):
        return float("nan"), True, epsilons, defects
    slope = float(np.polyfit(np.log(epsilons), np.log(defects), 1)[0])
    return slope, False, epsilons, defects


def area_jacobian_determinant(h, P, cfg: SolverConfig = SolverConfig(),
                              fd_step=1e-5) -> float:
    """Determinant of the map differential in orthonormal tangent frames.

    Both frames are right-handed, so an area- and orientation-preserving
    map gives exactly 1.
    """
    P = unit_vector(P)
    frame_p = tangent_frame(P)
    Q0, x_base = sphere_phi_forward(h, P, cfg)
    frame_q = tangent_frame(Q0)
    jac = np.empty((2, 2))
    for col in range(2):
        plus, _ = sphere_phi_forward(h, unit_vector(P + fd_step * frame_p[:, col]),
                                     cfg, x0=x_base)
        minus, _ = sphere_phi_forward(h, unit_vector(P - fd_step * frame_p[:, col]),
                                      cfg, x0=x_base)
        jac[:, col] = frame_q.T @ ((plus - minus) / (2.0 * fd_step))
    return float(np.linalg.det(jac))


# --------------------------------------------------------------------------
# Spherical triangles.

def spherical_triangle_area(P, Q, R) -> float:
    """Signed spherical excess; sign is the orientation det[P, Q, R]."""
    P = unit_vector(P)
    Q = unit_vector(Q)
    R = unit_vector(R)
    for a, b in ((P, Q), (Q, R), (R, P)):
        if np.linalg.norm(a + b) < ANTIPODAL_EPS:
            raise AntipodalPair("triangle has an antipodal vertex pair")
    det = float(np.linalg.det(np.column_stack([P, Q, R])))
    denom = 1.0 + float(P @ Q) + float(Q @ R) + float(R @ P)
    return 2.0 * math.atan2(det, denom)


def spherical_vertices_from_midpoints(x1, x2, x) -> Triangle:
    """Reconstruct the geodesic triangle whose side midpoints are x1, x2, x.

    P is the fixed point of sigma_x sigma_x2 sigma_x1 whose reconstructed
    sides have x1, x2, x on the *shorter* arcs; the axis comes from the
    symmetric part of the composite rotation (eigenvalue 1, isolated as
    long as the composite is not the identity).
    """
    x1 = unit_vector(x1)
    x2 = unit_vector(x2)
    x = unit_vector(x)
    composite = _symmetry_matrix(x) @ _symmetry_matrix(x2) @ _symmetry_matrix(x1)
    if np.linalg.norm(composite - np.eye(3)) < 1e-7:
        raise DegenerateConfiguration("composite symmetry is the identity")
    sym = (composite + composite.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    axis = vecs[:, int(np.argmax(vals))]

    for candidate in (axis, -axis):
        P = unit_vector(candidate)
        R = point_symmetry(x1, P)
        Q = point_symmetry(x2, R)
        if (P @ x1) > 0 and (R @ x2) > 0 and (Q @ x) > 0:
            if np.linalg.norm(point_symmetry(x, Q) - P) > 1e-8:
                raise DegenerateConfiguration("fixed-point consistency check failed")
            return Triangle(P=P, Q=Q, R=R)
    raise DegenerateConfiguration("no fixed-point candidate passes the "
                                  "shorter-arc checks")


# --------------------------------------------------------------------------
# Composition on the sphere.

@dataclass(frozen=True)
class SphereCompositionValue:
    hval: float
    x1: np.ndarray
    x2: np.ndarray


def _composition_functional(h1, h2, x):
    x = unit_vector(x)
    frame = tangent_frame(x)

    def functional(y):
        p1 = unit_vector(x + frame @ y[:2])
        p2 = unit_vector(x + frame @ y[2:])
        tri = spherical_vertices_from_midpoints(p1, p2, x)
        area = spherical_triangle_area(tri.P, tri.Q, tri.R)
        return h1.value(p1) + h2.value(p2) + ORIENTATION * area

    return functional, frame


def sphere_compose_genfun(h1, h2, x, cfg: SolverConfig = SolverConfig(tol=1e-9),
                          grad_step: float = AREA_GRAD_STEP) -> SphereCompositionValue:
    """Critical point of H1(x1) + H2(x2) + s * spherical area over (x1, x2).

    Works in a fixed 4-dimensional chart anchored at (x, x); the functional
    gradient is central-difference (step ``grad_step``) since the area of
    the reconstructed triangle has no convenient closed derivative.
    """
    x = unit_vector(x)
    functional, frame = _composition_functional(h1, h2, x)

    def gradient(y):
        g = np.zeros(4)
        for i in range(4):
            e = np.zeros(4)
            e[i] = grad_step
            g[i] = (functional(y + e) - functional(y - e)) / (2.0 * grad_step)
        return g

    rep = solve_newton(gradient, np.zeros(4), cfg)
    if not rep.converged:
        raise NoConvergence("spherical composition critical point not found "
                            f"(residual {rep.residual_norm:.3e})", rep)
    y = rep.root
    return SphereCompositionValue(
        hval=float(functional(y)),
        x1=unit_vector(x + frame @ y[:2]),
        x2=unit_vector(x + frame @ y[2:]))


def sphere_verify_composition(h1, h2, samples: Sequence[np.ndarray],
                              cfg: SolverConfig = SolverConfig(tol=1e-9),
                              grad_step: float = AREA_GRAD_STEP) -> float:
    """max_P |Phi_H(P) - Phi_{H2}(Phi_{H1}(P))| with H the composed value.

    Phi_H is driven purely by finite differences of the composed critical
    value, so the check is end to end.
    """
    composed = CallableSphereHamiltonian(
        lambda p: sphere_compose_genfun(h1, h2, p, cfg, grad_step).hval,
        fd_step=grad_step)
    outer_cfg = SolverConfig(tol=max(cfg.tol, 1e-8), max_iter=cfg.max_iter,
                             damping=cfg.damping, fd_step=1e-4)
    worst = 0.0
    for P in samples:
        mid, _ = sphere_phi_forward(h1, P, cfg)
        direct, _ = sphere_phi_forward(h2, mid, cfg)
        through_h, _ = sphere_phi_forward(composed, P, outer_cfg)
        worst = max(worst, float(np.linalg.norm(through_h - direct)))
    return worst


# --------------------------------------------------------------------------
# The covector-ball identification as a symplectomorphism (FD check).

def pullback_defect(P, Q, fd_step: float = 1e-4) -> float:
    """Compare d(theta) with -omega_P (+) omega_Q in a 4-dim chart at (P, Q).

    theta is the tautological 1-form of the tangent-vector identification,
    theta(w) = omega_x(u, dx(w)); its exterior derivative must match the
    difference of the two area forms pulled back from the factors.  All
    derivatives are central differences with the given step.
    """
    P = unit_vector(P)
    Q = unit_vector(Q)
    if np.linalg.norm(P + Q) < ANTIPODAL_EPS:
        raise AntipodalPair("chart center is an antipodal pair")
    frame_p = tangent_frame(P)
    frame_q = tangent_frame(Q)

    def pair_at(c):
        return (unit_vector(P + frame_p @ c[:2]),
                unit_vector(Q + frame_q @ c[2:]))

    def mid_and_u(c):
        a, b = pair_at(c)
        x = geodesic_midpoint(a, b)
        proj = lambda p: p - (p @ x) * x
        return x, proj(b) - proj(a)

    h = fd_step

    def theta_component(c, j):
        e = np.zeros(4)
        e[j] = h
        x_plus, _ = mid_and_u(c + e)
        x_minus, _ = mid_and_u(c - e)
        dx = (x_plus - x_minus) / (2.0 * h)
        x, u = mid_and_u(c)
        return float(x @ np.cross(u, dx))

    def point_derivative(c, j):
        e = np.zeros(4)
        e[j] = h
        a_p, b_p = pair_at(c + e)
        a_m, b_m = pair_at(c - e)
        return (a_p - a_m) / (2.0 * h), (b_p - b_m) / (2.0 * h)

    origin = np.zeros(4)
    defect = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            e_i = np.zeros(4)
            e_i[i] = h
            e_j = np.zeros(4)
            e_j[j] = h
            dtheta = ((theta_component(origin + e_i, j) - theta_component(origin - e_i, j))
                      - (theta_component(origin + e_j, i) - theta_component(origin - e_j, i))) \
                     / (2.0 * h)
            dP_i, dQ_i = point_derivative(origin, i)
            dP_j, dQ_j = point_derivative(origin, j)
            rhs = -float(P @ np.cross(dP_i, dP_j)) + float(Q @ np.cross(dQ_i, dQ_j))
            defect = max(defect, abs(dtheta - rhs))
    return defect
