"""
Multi-frame reconstruction with L0 priors on intensity and gradient.

Minimizes  sum_k ||g_k - W_k z||^2 + lam (||u||_0 + ||v||_0)
           + beta/2 ||z - u||^2 + mu/2 ||grad z - v||^2
by alternating hard thresholding for u, v and preconditioned CG for z,
with the penalties rescaled after every outer iteration.
"""
import csv
import math
import logging
import functools
from dataclasses import dataclass, field, asdict
from functools import cached_property
from typing import List, Optional
import numpy as np

from cascadesr.errors import ParameterError
from cascadesr.data.degradation import apply_W, apply_W_adjoint, rescale_sequence
from cascadesr.image.ops import (
    GradientPair, as_plane, resize_bicubic, gradient_forward, gradient_adjoint,
)
from cascadesr.solver.cg import conjugate_gradient, jacobi
from cascadesr.utils import assert_finite, config_from_dict, load_config

logger = logging.getLogger()

THRESHOLD_MODES = ('joint', 'per_component')
PENALTY_SCHEDULES = ('decay', 'increase')


@dataclass
class LorigConfig:
    lam: float = 1e-3
    beta0: float = 1e-3
    mu0: float = 1e-3
    penalty_decay: float = 0.9
    max_outer: int = 30
    cg_max_iters: int = 30
    cg_tolerance: float = 1e-6
    gradient_threshold_mode: str = 'joint'
    # 'increase' multiplies the penalties by penalty_growth instead of penalty_decay
    penalty_schedule: str = 'decay'
    penalty_growth: float = 2.0
    use_multipliers: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ParameterError(f'lam should be >= 0, got {self.lam}')
        if not (self.beta0 > 0 and self.mu0 > 0):
            raise ParameterError(f'beta0 and mu0 should be positive, got {self.beta0}, {self.mu0}')
        if not 0 < self.penalty_decay <= 1:
            raise ParameterError(f'penalty_decay should be in (0, 1], got {self.penalty_decay}')
        if not self.penalty_growth >= 1:
            raise ParameterError(f'penalty_growth should be >= 1, got {self.penalty_growth}')
        if self.max_outer < 1 or self.cg_max_iters < 1:
            raise ParameterError('max_outer and cg_max_iters should be >= 1')
        if not self.cg_tolerance > 0:
            raise ParameterError(f'cg_tolerance should be positive, got {self.cg_tolerance}')
        if self.gradient_threshold_mode not in THRESHOLD_MODES:
            raise ParameterError(f'gradient_threshold_mode should be one of {THRESHOLD_MODES}')
        if self.penalty_schedule not in PENALTY_SCHEDULES:
            raise ParameterError(f'penalty_schedule should be one of {PENALTY_SCHEDULES}')

    def next_penalty(self, value):
        if self.penalty_schedule == 'decay':
            return value * self.penalty_decay
        return value * self.penalty_growth

    @classmethod
    def from_dict(cls, kv, base=None):
        kv = dict(kv)
        if 'lambda' in kv:
            kv['lam'] = kv.pop('lambda')
        return config_from_dict(cls, kv, base=base)

    @staticmethod
    def add_args(parser, arglist=None):
        parser.add_argument('--config', type=str, default=None, help='Solver config file (key = value)')
        parser.add_argument('--lam', '--lambda', dest='lam', type=float, default=None)
        parser.add_argument('--max-outer', type=int, default=None)
        parser.add_argument('--cg-max-iters', type=int, default=None)
        parser.add_argument('--diagnostics', type=str, default=None, help='Per-iteration CSV')

    @classmethod
    def build(cls, args, base=None):
        """base (or the defaults), then the config file, then any flag given explicitly."""
        kv = load_config(args.config) if getattr(args, 'config', None) else {}
        cfg = cls.from_dict(kv, base=base)
        overrides = {k: getattr(args, k) for k in ('lam', 'max_outer', 'cg_max_iters')
                     if getattr(args, k, None) is not None}
        return cls(**{**asdict(cfg), **overrides})


@dataclass
class LorigState:
    z: np.ndarray
    u: np.ndarray
    v: GradientPair
    beta: float
    mu: float
    iteration: int = 0
    # scaled multipliers, used only with use_multipliers
    a: Optional[np.ndarray] = None
    b: Optional[GradientPair] = None
    history: List[dict] = field(default_factory=list)


def solve_u(z, lam, beta):
    """argmin_u beta/2 (z - u)^2 + lam [u != 0], per pixel; ties go to 0."""
    if not beta > 0:
        raise ParameterError(f'beta should be positive, got {beta}')
    z = np.asarray(z, dtype=np.float64)
    return np.where(z * z > 2.0 * lam / beta, z, 0.0)


def solve_v(g, lam, mu, mode='joint'):
    """Hard threshold of the gradient auxiliary with 2 lam / mu, jointly on the
    magnitude or on each component."""
    if not mu > 0:
        raise ParameterError(f'mu should be positive, got {mu}')
    gx, gy = np.asarray(g.gx, dtype=np.float64), np.asarray(g.gy, dtype=np.float64)
    thr = 2.0 * lam / mu
    if mode == 'joint':
        keep = gx * gx + gy * gy > thr
        return GradientPair(np.where(keep, gx, 0.0), np.where(keep, gy, 0.0))
    if mode == 'per_component':
        return GradientPair(np.where(gx * gx > thr, gx, 0.0), np.where(gy * gy > thr, gy, 0.0))
    raise ParameterError(f'unknown threshold mode {mode}, expected one of {THRESHOLD_MODES}')


class DataTerm:
    """sum_k ||g_k - W_k z||^2 of a registered sequence, its normal operator,
    right-hand side and exact diagonal. Frame sums run in frame order."""

    def __init__(self, seq, executor=None):
        self.seq = seq
        self.spec = seq.spec
        self.executor = executor
        self.hr_shape = seq.hr_shape

    def _map(self, fn, items):
        mapper = self.executor.map if self.executor is not None else map
        return list(mapper(fn, items))

    def _sum(self, terms):
        return functools.reduce(np.add, terms)

    def normal(self, z):
        """sum_k W_k' W_k z"""
        return self._sum(self._map(
            lambda m: apply_W_adjoint(apply_W(z, m, self.spec), m, self.spec), self.seq.motions))

    @cached_property
    def rhs(self):
        """sum_k W_k' g_k"""
        return self._sum(self._map(
            lambda k: apply_W_adjoint(self.seq.frames[k], self.seq.motions[k], self.spec),
            range(len(self.seq))))

    @cached_property
    def diagonal(self):
        """diag(sum_k W_k' W_k). The operator commutes with shifts by multiples of the
        scale, so s^2 unit impulses give the whole diagonal."""
        s = self.spec.scale
        h, w = self.hr_shape
        cell = np.zeros((s, s))
        for a in range(s):
            for b in range(s):
                e = np.zeros(self.hr_shape)
                e[a, b] = 1.0
                cell[a, b] = sum(float(np.sum(apply_W(e, m, self.spec) ** 2)) for m in self.seq.motions)
        return np.tile(cell, (h // s, w // s))

    def fidelity(self, z):
        return float(sum(np.sum((g - apply_W(z, m, self.spec)) ** 2)
                         for g, m in zip(self.seq.frames, self.seq.motions)))


def _laplacian_diagonal(shape):
    e = np.zeros(shape)
    e[0, 0] = 1.0
    return gradient_adjoint(gradient_forward(e))[0, 0]


def solve_z_cg(seq, u, v, beta, mu, max_iters=30, tol=1e-6, z0=None, data=None, return_info=False):
    """CG with Jacobi preconditioning on
        (2 sum_k W_k'W_k + beta I + mu grad'grad) z = 2 sum_k W_k'g_k + beta u + mu grad'v
    """
    if beta < 0 or mu < 0:
        raise ParameterError(f'beta and mu should be >= 0, got {beta}, {mu}')
    data = data or DataTerm(seq)
    u = as_plane(u, 'u')
    assert_finite([v.gx, v.gy], 'v')
    if u.shape != tuple(data.hr_shape) or v.gx.shape != u.shape or v.gy.shape != u.shape:
        raise ParameterError(f'u, v should have shape {data.hr_shape}')
    z0 = as_plane(z0, 'z0') if z0 is not None else np.zeros(data.hr_shape)

    def apply_A(z):
        out = 2.0 * data.normal(z) + beta * z
        if mu:
            out = out + mu * gradient_adjoint(gradient_forward(z))
        return out

    b = 2.0 * data.rhs + beta * u
    if mu:
        b = b + mu * gradient_adjoint(v)
    diag = 2.0 * data.diagonal + beta + mu * _laplacian_diagonal(data.hr_shape)
    result = conjugate_gradient(apply_A, b, x0=z0, precond=jacobi(diag), max_iters=max_iters, tol=tol)
    if not result.converged:
        logger.warning(f'CG stopped at {result.iterations} iterations, '
                       f'relative residual {result.residuals[-1]:.3e} > {tol:g}')
    return (result.x, result) if return_info else result.x


DIAGNOSTIC_FIELDS = ['iteration', 'beta', 'mu', 'fidelity', 'cg_iterations', 'cg_residual',
                     'u_nonzero', 'v_nonzero']


def write_diagnostics(history, file):
    with open(file, 'w', newline='') as wt:
        writer = csv.DictWriter(wt, fieldnames=DIAGNOSTIC_FIELDS, lineterminator='\n')
        writer.writeheader()
        for row in history:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def lorig_reconstruct(seq, cfg=None, scale=None, diagnostics=None, executor=None, return_state=False):
    """Reconstruct the HR image of a registered sequence at `scale` x LR.
    Starts from the bicubic upscale of the reference frame; returns z clipped to [0, 1].
    """
    cfg = cfg or LorigConfig()
    if seq is None or len(seq) == 0:
        raise ParameterError('empty sequence')
    scale = seq.spec.scale if scale is None else scale
    seq = rescale_sequence(seq, scale)
    data = DataTerm(seq, executor=executor)

    z = resize_bicubic(seq.reference, scale)
    state = LorigState(z=z, u=np.zeros_like(z), v=GradientPair(np.zeros_like(z), np.zeros_like(z)),
                       beta=cfg.beta0, mu=cfg.mu0)
    if cfg.use_multipliers:
        state.a = np.zeros_like(z)
        state.b = GradientPair(np.zeros_like(z), np.zeros_like(z))
    logger.info(f'LORIG: {len(seq)} frames {seq.lr_shape} -> {z.shape}, lam {cfg.lam:g}, '
                f'beta0 {cfg.beta0:g}, mu0 {cfg.mu0:g}, {cfg.max_outer} outer iterations')

    prev_fidelity = None
    for t in range(1, cfg.max_outer + 1):
        gz = gradient_forward(state.z)
        if cfg.use_multipliers:
            state.u = solve_u(state.z + state.a, cfg.lam, state.beta)
            state.v = solve_v(GradientPair(gz.gx + state.b.gx, gz.gy + state.b.gy),
                              cfg.lam, state.mu, cfg.gradient_threshold_mode)
            u_target = state.u - state.a
            v_target = GradientPair(state.v.gx - state.b.gx, state.v.gy - state.b.gy)
        else:
            state.u = solve_u(state.z, cfg.lam, state.beta)
            state.v = solve_v(gz, cfg.lam, state.mu, cfg.gradient_threshold_mode)
            u_target, v_target = state.u, state.v
        state.z, info = solve_z_cg(seq, u_target, v_target, state.beta, state.mu,
                                   max_iters=cfg.cg_max_iters, tol=cfg.cg_tolerance,
                                   z0=state.z, data=data, return_info=True)
        if cfg.use_multipliers:
            gz = gradient_forward(state.z)
            state.a = state.a + state.z - state.u
            state.b = GradientPair(state.b.gx + gz.gx - state.v.gx, state.b.gy + gz.gy - state.v.gy)
        state.iteration = t
        fidelity = data.fidelity(state.z)
        row = {
            'iteration': t,
            'beta': state.beta,
            'mu': state.mu,
            'fidelity': fidelity,
            'cg_iterations': info.iterations,
            'cg_residual': info.residuals[-1],
            'u_nonzero': int(np.count_nonzero(state.u)),
            'v_nonzero': int(np.count_nonzero(state.v.gx) + np.count_nonzero(state.v.gy)),
        }
        state.history.append(row)
        logger.info(f'LORIG iteration {t}/{cfg.max_outer} - beta {state.beta:.3e}, mu {state.mu:.3e}, '
                    f'fidelity {fidelity:.6e}, cg {info.iterations} its, residual {info.residuals[-1]:.2e}')
        if prev_fidelity is not None and fidelity > prev_fidelity * (1 + 1e-9):
            logger.warning(f'LORIG fidelity increased at iteration {t}: {prev_fidelity:.6e} -> {fidelity:.6e}')
        prev_fidelity = fidelity

        beta, mu = cfg.next_penalty(state.beta), cfg.next_penalty(state.mu)
        if cfg.use_multipliers:
            # scaled multipliers follow the penalty change
            state.a = state.a * (state.beta / beta)
            state.b = GradientPair(state.b.gx * (state.mu / mu), state.b.gy * (state.mu / mu))
        state.beta, state.mu = beta, mu

    if diagnostics:
        write_diagnostics(state.history, diagnostics)
        logger.info(f'LORIG diagnostics written to {diagnostics}')
    out = np.clip(state.z, 0.0, 1.0)
    return (out, state) if return_state else out


def lambda_grid(low=1e-5, high=1e-1):
    """Powers of two inside [low, high]."""
    return [2.0 ** k for k in range(math.ceil(math.log2(low)), math.floor(math.log2(high)) + 1)]


def gridsearch_lambda(seq, hr, cfg=None, scale=None, grid=None, executor=None):
    """Pick lam maximizing PSNR against hr. Returns (best_lam, [(lam, psnr), ...])."""
    from cascadesr.metrics.quality import psnr
    cfg = cfg or LorigConfig()
    hr = as_plane(hr, 'hr')
    rows = []
    for lam in grid or lambda_grid():
        z = lorig_reconstruct(seq, LorigConfig(**{**asdict(cfg), 'lam': lam}), scale=scale, executor=executor)
        if z.shape != hr.shape:
            raise ParameterError(f'reconstruction shape {z.shape} differs from reference {hr.shape}')
        value = psnr(hr, z)
        logger.info(f'lambda {lam:.3e}: psnr {value:.4f} dB')
        rows.append((lam, value))
    best = max(rows, key=lambda r: r[1])[0]
    logger.info(f'Best lambda {best:.3e}')
    return best, rows
