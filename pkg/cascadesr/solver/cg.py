"""
Preconditioned conjugate gradient for symmetric positive definite operators on arrays.
"""
import logging
from dataclasses import dataclass, field
from typing import List
import numpy as np

from cascadesr.errors import SolverError, ParameterError
from cascadesr.utils import assert_finite

logger = logging.getLogger()


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    converged: bool
    # smallest relative residual ||b - A x|| / ||b|| seen up to each iteration, non-increasing
    residuals: List[float] = field(default_factory=list)
    # 0.5 x'Ax - b'x of each iterate, decreases monotonically in exact arithmetic
    energies: List[float] = field(default_factory=list)
    # iteration whose iterate is returned as x
    best_iteration: int = 0


def _dot(a, b):
    return float(np.vdot(a, b))


def conjugate_gradient(apply_A, b, x0=None, precond=None, max_iters=30, tol=1e-6):
    """Solve A x = b.
    apply_A: callable array -> array, symmetric positive definite.
    precond: callable applying M^-1 to a residual, or None.
    Stops at ||r|| <= tol ||b|| or after max_iters iterations and returns the iterate with
    the smallest residual.
    """
    if max_iters < 1:
        raise ParameterError(f'max_iters should be >= 1, got {max_iters}')
    if not tol > 0:
        raise ParameterError(f'tol should be positive, got {tol}')
    assert_finite(b, 'right-hand side')
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64, copy=True)
    assert_finite(x, 'initial guess')
    precond = precond or (lambda r: r)

    bnorm = np.sqrt(_dot(b, b))
    if bnorm == 0:
        x = np.zeros_like(b)
        return CGResult(x, 0, True, [0.0], [0.0])

    r = b - apply_A(x)
    z = precond(r)
    p = z.copy()
    rz = _dot(r, z)
    residuals = [np.sqrt(_dot(r, r)) / bnorm]
    energies = [-0.5 * _dot(x, b + r)]
    best_x, best_it = x.copy(), 0
    it = 0
    converged = residuals[-1] <= tol
    while not converged and it < max_iters:
        Ap = apply_A(p)
        pAp = _dot(p, Ap)
        if not np.isfinite(pAp):
            raise SolverError(f'non-finite curvature at iteration {it}')
        if pAp <= 0:
            raise SolverError(f'CG breakdown at iteration {it}: p\'Ap = {pAp:g}')
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        res = np.sqrt(_dot(r, r)) / bnorm
        energies.append(-0.5 * _dot(x, b + r))
        logger.debug(f'cg iteration {it}: relative residual {res:.3e}')
        if res < residuals[-1]:
            best_x, best_it = x.copy(), it
        residuals.append(min(res, residuals[-1]))
        converged = res <= tol
        if converged:
            break
        z = precond(r)
        rz_new = _dot(r, z)
        if rz == 0:
            raise SolverError(f'CG breakdown at iteration {it}: zero preconditioned residual')
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CGResult(best_x, it, converged, residuals, energies, best_it)


def jacobi(diagonal):
    """M^-1 for a positive diagonal."""
    diagonal = np.asarray(diagonal, dtype=np.float64)
    if not (diagonal > 0).all():
        raise SolverError('preconditioner diagonal should be positive')
    inv = 1.0 / diagonal
    return lambda r: inv * r
