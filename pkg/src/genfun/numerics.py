"""Small dense damped-Newton solver and central-difference derivatives.

Every implicit construction in the package (midpoint maps, critical-point
solves) funnels through :func:`solve_newton`; symplecticity and form checks
use :func:`fd_jacobian` as the independent derivative route.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteValue

# condition number past which a Jacobian counts as rank-deficient
COND_LIMIT = 1e12

# error tags carried by SolveReport
ERR_SINGULAR = "singular_jacobian"
ERR_NO_CONVERGENCE = "no_convergence"


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets for damped Newton iterations.

    tol        residual norm threshold
    max_iter   maximum number of Newton steps
    damping    backtracking factor in (0, 1)
    fd_step    step for central finite differences
    """

    tol: float = 1e-12
    max_iter: int = 50
    damping: float = 0.5
    fd_step: float = 1e-6

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie strictly between 0 and 1")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


@dataclass
class SolveReport:
    """Outcome of a Newton solve; ``error`` is None or an error tag."""

    root: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    error: Optional[str] = None


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x`` with step ``h``.

    Entrywise error is O(h^2) for smooth maps; exact (to roundoff) on
    affine maps.  Raises NonFiniteValue if any sampled value is not finite.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    m, d = f0.size, x.size
    jac = np.empty((m, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        fp = np.asarray(f(x + e), dtype=float)
        fm = np.asarray(f(x - e), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteValue(f"map returned a non-finite value near column {j}")
        jac[:, j] = (fp - fm) / (2.0 * h)
    return jac


def solve_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    cfg: SolverConfig = SolverConfig(),
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SolveReport:
    """Damped (backtracking) Newton for ``residual(x) = 0``.

    The Jacobian is ``jacobian`` when given, otherwise central differences
    with ``cfg.fd_step``.  Never raises on failure: exhausting the budget
    or hitting a rank-deficient Jacobian returns the best iterate with
    ``converged=False`` and an error tag.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise NonFiniteValue("residual not finite at the initial guess")
    rnorm = float(np.linalg.norm(r))
    best_x, best_norm = x.copy(), rnorm

    for it in range(cfg.max_iter):
        if rnorm <= cfg.tol:
            return SolveReport(x, rnorm, it, True)
        jac = jacobian(x) if jacobian is not None else fd_jacobian(residual, x, cfg.fd_step)
        jac = np.atleast_2d(np.asarray(jac, dtype=float))
        if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > COND_LIMIT:
            return SolveReport(best_x, best_norm, it, False, ERR_SINGULAR)
        step = np.linalg.solve(jac, -r)

        # backtracking line search: demand plain decrease of the residual norm
        t = 1.0
        accepted = False
        while t >= 2.0 ** -40:
            x_try = x + t * step
            r_try = np.asarray(residual(x_try), dtype=float)
            n_try = float(np.linalg.norm(r_try))
            if np.all(np.isfinite(r_try)) and n_try < rnorm:
                x, r, rnorm = x_try, r_try, n_try
                accepted = True
                break
            t *= cfg.damping
        if not accepted:
            return SolveReport(best_x, best_norm, it + 1, False, ERR_NO_CONVERGENCE)
        if rnorm < best_norm:
            best_x, best_norm = x.copy(), rnorm

    converged = rnorm <= cfg.tol
    if converged:
        return SolveReport(x, rnorm, cfg.max_iter, True)
    return SolveReport(best_x, best_norm, cfg.max_iter, False, ERR_NO_CONVERGENCE)


def polish(
    residual: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    cfg: SolverConfig,
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SolveReport:
    """Newton from a warm start, pushed to the numerical noise floor.

    Used when differentiating implicit maps: perturbed solves must sit on
    the same branch as ``x0`` and be far more accurate than the FD step.
    """
    tight = SolverConfig(tol=max(1e-15, cfg.tol * 1e-3), max_iter=cfg.max_iter,
                         damping=cfg.damping, fd_step=cfg.fd_step)
    rep = solve_newton(residual, x0, tight, jacobian)
    if not rep.converged and rep.residual_norm <= cfg.tol:
        # hit the noise floor above the tightened tol: still a valid root
        return SolveReport(rep.root, rep.residual_norm, rep.iterations, True)
    return rep
