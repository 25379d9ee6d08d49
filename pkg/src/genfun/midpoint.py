"""The midpoint generating-function map on a symplectic vector space.

For a Hamiltonian H the map sends P to Q = P + u(x), where u is the
displacement field of H and x solves x - u(x)/2 = P, i.e. x is the midpoint
of the segment PQ.  For quadratic H this is exactly the Cayley transform
(I + L/2)(I - L/2)^{-1} of the linear Hamiltonian matrix L.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .affine import (ScaledHamiltonian, SymplecticStructure,
                     displacement_jacobian, hamiltonian_displacement)
from .errors import CayleySingular, NoConvergence, SingularJacobian
from .numerics import (COND_LIMIT, ERR_SINGULAR, SolveReport, SolverConfig,
                       polish, solve_newton)

VERIFY_TOL_LIMIT = 1e-10  # verification operators insist on at most this solver tol


@dataclass(frozen=True)
class MidpointMap:
    """A Hamiltonian together with the space and solver settings."""

    space: SymplecticStructure
    h: object
    cfg: SolverConfig = SolverConfig()


def _residual_and_jacobian(space, h, target, sign):
    """Residual x + sign*u(x)/2 - target and its Jacobian (if H has a Hessian)."""
    def residual(x):
        return x + sign * 0.5 * hamiltonian_displacement(space, h, x) - target

    jacobian = None
    if hasattr(h, "hess"):
        eye = np.eye(space.dim)

        def jacobian(x):
            return eye + sign * 0.5 * displacement_jacobian(space, h, x)

    return residual, jacobian


def _solve_midpoint(space, h, target, cfg, sign, x0=None) -> SolveReport:
    """Solve the implicit midpoint equation, with rescue attempts.

    Primary attempt is damped Newton from the target point itself.  On
    failure, continuation in the Hamiltonian strength tracks the branch
    connected to the identity map; as a last resort a ring of deterministic
    starts around the target is tried.
    """
    residual, jacobian = _residual_and_jacobian(space, h, target, sign)
    start = target if x0 is None else np.asarray(x0, dtype=float)
    report = solve_newton(residual, start, cfg, jacobian)
    if report.converged or x0 is not None:
        return report
    first = report

    # continuation: theta=0 is the identity map with root at the target
    theta, dtheta = 0.0, 0.25
    x = np.asarray(target, dtype=float).copy()
    sub = SolverConfig(tol=cfg.tol, max_iter=25, damping=cfg.damping, fd_step=cfg.fd_step)
    while theta < 1.0 and dtheta >= 1e-3:
        theta_next = min(1.0, theta + dtheta)
        res_t, jac_t = _residual_and_jacobian(space, ScaledHamiltonian(h, theta_next),
                                              target, sign)
        rep = solve_newton(res_t, x, sub, jac_t)
        if rep.converged:
            theta, x = theta_next, rep.root
            dtheta *= 1.6
        else:
            dtheta *= 0.5
    if theta >= 1.0:
        final = solve_newton(residual, x, cfg, jacobian)
        if final.converged:
            return final

    dim = space.dim
    directions = [e for i in range(dim) for e in (np.eye(dim)[i], -np.eye(dim)[i])]
    directions += [np.ones(dim) / np.sqrt(dim), -np.ones(dim) / np.sqrt(dim)]
    wide = SolverConfig(tol=cfg.tol, max_iter=max(cfg.max_iter, 60),
                        damping=cfg.damping, fd_step=cfg.fd_step)
    for radius in (0.5, 1.0, 2.0):
        for d in directions:
            rep = solve_newton(residual, np.asarray(target, float) + radius * d, wide, jacobian)
            if rep.converged:
                return rep
    return first


def _raise_on_failure(report: SolveReport, what: str):
    if report.error == ERR_SINGULAR:
        raise SingularJacobian(f"{what}: Jacobian rank-deficient "
                               f"(residual {report.residual_norm:.3e})", report)
    raise NoConvergence(f"{what}: no convergence in {report.iterations} iterations "
                        f"(residual {report.residual_norm:.3e})", report)


def phi_forward(m: MidpointMap, P, x0=None):
    """Map P forward: returns (Q, x) with x - u(x)/2 = P and Q = 2x - P.

    ``x0`` optionally warm-starts the solve (used when differentiating the
    map so that perturbed solves stay on one branch).
    """
    P = np.asarray(P, dtype=float)
    report = _solve_midpoint(m.space, m.h, P, m.cfg, sign=-1.0, x0=x0)
    if not report.converged:
        _raise_on_failure(report, "phi_forward")
    x = report.root
    return 2.0 * x - P, x


def phi_inverse(m: MidpointMap, Q, x0=None):
    """Map Q backward: returns (P, x) with x + u(x)/2 = Q and P = 2x - Q."""
    Q = np.asarray(Q, dtype=float)
    report = _solve_midpoint(m.space, m.h, Q, m.cfg, sign=+1.0, x0=x0)
    if not report.converged:
        _raise_on_failure(report, "phi_inverse")
    x = report.root
    return 2.0 * x - Q, x


# --------------------------------------------------------------------------
# Exact linear theory for quadratic Hamiltonians.

def linear_hamiltonian_matrix(space: SymplecticStructure, S) -> np.ndarray:
    """L with omega(Lx, v) = x'Sv for all x, v; i.e. L = (Omega^T)^{-1} S."""
    return space._W @ np.asarray(S, dtype=float)


def cayley_map_quadratic(space: SymplecticStructure, S) -> np.ndarray:
    """Phi = (I + L/2)(I - L/2)^{-1}; symplectic whenever defined."""
    L = linear_hamiltonian_matrix(space, S)
    eye = np.eye(space.dim)
    A = eye - L / 2
    if np.linalg.cond(A) > COND_LIMIT:
        raise CayleySingular("I - L/2 is numerically singular")
    return (eye + L / 2) @ np.linalg.inv(A)


def genfun_of_linear_map(space: SymplecticStructure, Phi) -> np.ndarray:
    """Recover S with cayley_map_quadratic(space, S) = Phi.

    Fails with CayleySingular when Phi + I is singular (eigenvalue -1:
    the map has no generating function of this type).
    """
    Phi = np.asarray(Phi, dtype=float)
    eye = np.eye(space.dim)
    A = Phi + eye
    if np.linalg.cond(A) > COND_LIMIT:
        raise CayleySingular("Phi + I is numerically singular")
    L = 2.0 * (Phi - eye) @ np.linalg.inv(A)
    M = space.Omega.T @ L
    return (M + M.T) / 2


# --------------------------------------------------------------------------
# Verification operators.

def _phi_branch_derivative(m: MidpointMap, P, h_step) -> np.ndarray:
    """Central-difference derivative of phi_forward along one branch.

    The base solve may use rescue starts; perturbed solves are polished
    Newton runs warm-started at the base midpoint, which keeps them on the
    base branch and far below the FD step in error.
    """
    P = np.asarray(P, dtype=float)
    _, x_base = phi_forward(m, P)
    dim = m.space.dim
    dphi = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h_step
        cols = []
        for target in (P + e, P - e):
            residual, jacobian = _residual_and_jacobian(m.space, m.h, target, sign=-1.0)
            rep = polish(residual, x_base, m.cfg, jacobian)
            if not rep.converged:
                _raise_on_failure(rep, "phi_forward (FD perturbation)")
            cols.append(2.0 * rep.root - target)
        dphi[:, j] = (cols[0] - cols[1]) / (2.0 * h_step)
    return dphi


def symplecticity_defect(m: MidpointMap, P) -> float:
    """max |(DPhi)' Omega DPhi - Omega| with DPhi by central differences."""
    if m.cfg.tol > VERIFY_TOL_LIMIT:
        raise ValueError(f"verification runs need cfg.tol <= {VERIFY_TOL_LIMIT}")
    dphi = _phi_branch_derivative(m, P, m.cfg.fd_step)
    omega = m.space.Omega
    return float(np.max(np.abs(dphi.T @ omega @ dphi - omega)))


def reference_flow(space: SymplecticStructure, h, P, t=1.0) -> np.ndarray:
    """High-accuracy time-t flow of the displacement field of H."""
    sol = solve_ivp(lambda _, y: hamiltonian_displacement(space, h, y),
                    (0.0, t), np.asarray(P, dtype=float),
                    method="DOP853", rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NoConvergence(f"reference flow integration failed: {sol.message}")
    return sol.y[:, -1]


@dataclass(frozen=True)
class OrderFit:
    """Log-log slope of map defects against epsilon."""

    slope: float
    degenerate: bool
    epsilons: np.ndarray
    defects: np.ndarray


def infinitesimal_order(map_family: Callable[[float], MidpointMap], P,
                        epsilons=None) -> OrderFit:
    """Measured accuracy order of eps -> Phi_{eps H} against the exact flow.

    Fits the log-log slope of |Phi_{eps H}(P) - flow_eps(P)| over a decade
    of eps.  A defect at the noise floor marks the fit degenerate (e.g.
    H = 0, where the map is exactly the identity for every eps).
    """
    if epsilons is None:
        epsilons = np.geomspace(1e-2, 1e-3, 8)
    epsilons = np.asarray(epsilons, dtype=float)
    P = np.asarray(P, dtype=float)
    defects = []
    for eps in epsilons:
        m = map_family(float(eps))
        Q, _ = phi_forward(m, P)
        ref = reference_flow(m.space, m.h, P, t=1.0)
        defects.append(float(np.linalg.norm(Q - ref)))
    defects = np.array(defects)
    if np.any(defects < 1e-14):
        return OrderFit(float("nan"), True, epsilons, defects)
    slope = float(np.polyfit(np.log(epsilons), np.log(defects), 1)[0])
    return OrderFit(slope, False, epsilons, defects)


def midpoint_family(space: SymplecticStructure, h, cfg=SolverConfig()):
    """The family eps -> midpoint map of eps*H, for order measurements."""
    def family(eps: float) -> MidpointMap:
        return MidpointMap(space, ScaledHamiltonian(h, eps), cfg)
    return family
