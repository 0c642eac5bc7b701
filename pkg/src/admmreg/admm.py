"""ADMM as an iterative regularization method for ``min f(Wx) s.t. Ax = b``.

One iteration performs, in order::

    x+  = argmin (rho1/2)||Ax - b + lam/rho1||^2 + (rho2/2)||Wx - y + mu/rho2||^2
    y+  = prox_{f/rho2}(W x+ + mu/rho2)
    lam+ = lam + rho1 (A x+ - b)
    mu+  = mu + rho2 (W x+ - y+)

With noisy data (``delta > 0``) the loop stops at the first ``k >= 1`` with
``rho1^2 ||A x_k - b||^2 + rho2^2 ||W x_k - y_k||^2 <= max(rho1, rho2)^2 tau^2 delta^2``.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ParameterError, SolverFailure, StateError, UnsupportedCombinationError
from .metrics import psnr as _psnr
from .operators import build_spectral_diagonal

__all__ = [
    "AdmmConfig",
    "AdmmState",
    "TraceRecord",
    "AdmmResult",
    "make_x_solver",
    "normal_rhs",
    "solve_x",
    "initial_state",
    "admm_step",
    "lyapunov",
    "discrepancy",
    "run",
]

log = logging.getLogger(__name__)

X_SOLVERS = ("auto", "spectral", "dense", "cg")
DENSE_MAX_DIM = 2000


@dataclass(frozen=True)
class AdmmConfig:
    """Parameters of one ADMM run.

    ``delta = 0`` means exact data: the discrepancy rule is disabled and the
    run ends at ``max_iter`` (or at the optional plateau criterion
    ``||y_{k+1} - y_k|| <= plateau_tol``).
    """

    rho1: float = 1000.0
    rho2: float = 10.0
    tau: float = 1.0001
    delta: float = 0.0
    max_iter: int = 1000
    x_solver: str = "auto"
    cg_tol: float = 1e-10
    cg_max_iter: int = 500
    plateau_tol: Optional[float] = None

    def __post_init__(self):
        if not self.rho1 > 0 or not self.rho2 > 0:
            raise ParameterError("rho1 and rho2 must be positive")
        if not self.tau > 1:
            raise ParameterError("tau must be > 1, got {}".format(self.tau))
        if not self.delta >= 0:
            raise ParameterError("delta must be nonnegative")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError("max_iter must be a positive integer")
        if self.x_solver not in X_SOLVERS:
            raise ParameterError("x_solver must be one of {}".format(X_SOLVERS))
        if not self.cg_tol > 0 or self.cg_max_iter < 1:
            raise ParameterError("invalid CG settings")

    @property
    def threshold(self):
        """Right-hand side ``max(rho1^2, rho2^2) tau^2 delta^2`` of the stopping rule."""
        return max(self.rho1 ** 2, self.rho2 ** 2) * self.tau ** 2 * self.delta ** 2


@dataclass
class AdmmState:
    k: int
    x: Optional[np.ndarray]
    y: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    r: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    y_prev: Optional[np.ndarray] = None
    E: Optional[float] = None


@dataclass
class TraceRecord:
    k: int
    r_norm: float
    s_norm: float
    E: float
    f_y: float
    err: Optional[float] = None
    psnr: Optional[float] = None
    inner_iters: int = 0

    CSV_HEADER = ("k", "r_norm", "s_norm", "E", "f_y", "err", "psnr", "inner_iters")

    def as_row(self):
        return [self.k, self.r_norm, self.s_norm, self.E, self.f_y,
                self.err, self.psnr, self.inner_iters]


@dataclass
class AdmmResult:
    state: AdmmState
    trace: list
    stop_reason: str
    config: AdmmConfig
    wall_time_ms: float = field(default=0.0, compare=False)

    @property
    def k_stop(self):
        return self.state.k

    @property
    def threshold(self):
        return self.config.threshold


def normal_rhs(A, W, b, y, lam, mu, rho1, rho2):
    """Right-hand side ``A*(rho1 b - lam) + W*(rho2 y - mu)`` of the x-subproblem."""
    return A.adjoint(rho1 * b - lam) + W.adjoint(rho2 * y - mu)


class _SpectralSolver:
    name = "spectral"

    def __init__(self, A, W, rho1, rho2):
        self.diag = build_spectral_diagonal(A, W, rho1, rho2)

    def solve(self, rhs, x0=None):
        return self.diag.solve(rhs), 0


class _DenseSolver:
    name = "dense"

    def __init__(self, A, W, rho1, rho2):
        a = A.to_matrix()
        w = W.to_matrix()
        self.shape = A.domain_shape
        self.matrix = rho1 * a.T @ a + rho2 * w.T @ w
        try:
            self.factor = scipy.linalg.cho_factor(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure("normal matrix is not positive definite") from exc

    def solve(self, rhs, x0=None):
        x = scipy.linalg.cho_solve(self.factor, rhs.ravel())
        return x.reshape(self.shape), 0


class _CGSolver:
    """Plain conjugate gradients on ``rho1 A*A + rho2 W*W``, warm-started."""

    name = "cg"

    def __init__(self, A, W, rho1, rho2, tol, max_iter):
        self.A, self.W = A, W
        self.rho1, self.rho2 = rho1, rho2
        self.tol, self.max_iter = tol, max_iter

    def normal(self, x):
        return self.rho1 * self.A.adjoint(self.A.apply(x)) + self.rho2 * self.W.adjoint(self.W.apply(x))

    def solve(self, rhs, x0=None):
        x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
        rhs_norm = np.linalg.norm(rhs)
        if rhs_norm == 0.0:
            return np.zeros_like(rhs), 0
        target = self.tol * rhs_norm
        r = rhs - self.normal(x)
        p = r.copy()
        rr = np.vdot(r, r)
        for it in range(self.max_iter + 1):
            if np.sqrt(rr) <= target:
                return x, it
            if it == self.max_iter:
                break
            q = self.normal(p)
            alpha = rr / np.vdot(p, q)
            x += alpha * p
            r -= alpha * q
            rr_new = np.vdot(r, r)
            p = r + (rr_new / rr) * p
            rr = rr_new
        res = np.sqrt(rr) / rhs_norm
        raise SolverFailure(
            "CG did not reach relative residual {:.1e} in {} iterations (final {:.3e})".format(
                self.tol, self.max_iter, res), residual=res)


def make_x_solver(A, W, cfg):
    """Pick and prepare the x-subproblem solver for ``cfg.x_solver``.

    ``auto`` prefers the FFT solve, then a Cholesky factorization when the
    domain has at most 2000 unknowns, then CG.
    """
    choice = cfg.x_solver
    if choice in ("auto", "spectral"):
        try:
            return _SpectralSolver(A, W, cfg.rho1, cfg.rho2)
        except UnsupportedCombinationError:
            if choice == "spectral":
                raise
    if choice == "dense" or (choice == "auto" and A.domain_size <= DENSE_MAX_DIM):
        return _DenseSolver(A, W, cfg.rho1, cfg.rho2)
    return _CGSolver(A, W, cfg.rho1, cfg.rho2, cfg.cg_tol, cfg.cg_max_iter)


def solve_x(A, W, b, y, lam, mu, cfg, solver=None, x0=None):
    """Minimize the augmented Lagrangian in ``x`` for fixed ``y, lam, mu``."""
    if solver is None:
        solver = make_x_solver(A, W, cfg)
    rhs = normal_rhs(A, W, b, y, lam, mu, cfg.rho1, cfg.rho2)
    x, _ = solver.solve(rhs, x0)
    return x


def initial_state(A, W, y0=None, lam0=None, mu0=None):
    """Iteration-zero state; missing initial values default to zero."""
    y0 = np.zeros(W.range_shape) if y0 is None else np.array(y0, dtype=float)
    lam0 = np.zeros(A.range_shape) if lam0 is None else np.array(lam0, dtype=float)
    mu0 = np.zeros(W.range_shape) if mu0 is None else np.array(mu0, dtype=float)
    if y0.shape != W.range_shape or mu0.shape != W.range_shape or lam0.shape != A.range_shape:
        raise ParameterError("initial values do not match the operator ranges")
    return AdmmState(k=0, x=None, y=y0, lam=lam0, mu=mu0)


def _sqnorm(a):
    return float(np.vdot(a, a))


def admm_step(state, A, W, b, f, cfg, solver=None, stats=None):
    """Advance ``state`` by one ADMM iteration and return the new state."""
    if solver is None:
        solver = make_x_solver(A, W, cfg)
    rho1, rho2 = cfg.rho1, cfg.rho2

    rhs = normal_rhs(A, W, b, state.y, state.lam, state.mu, rho1, rho2)
    x, inner = solver.solve(rhs, state.x)
    wx = W.apply(x)
    v = wx + state.mu / rho2
    y = f.prox(v, rho2)
    r = A.apply(x) - b
    s = wx - y
    lam = state.lam + rho1 * r
    mu = state.mu + rho2 * s

    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise SolverFailure("non-finite iterate at k={}".format(state.k + 1))

    new = AdmmState(k=state.k + 1, x=x, y=y, lam=lam, mu=mu, r=r, s=s, y_prev=state.y)
    new.E = lyapunov(new, cfg)
    if stats is not None:
        stats["inner_iters"] = inner
    return new


def lyapunov(state, cfg):
    """``E_k = rho1 ||r_k||^2 + rho2 ||s_k||^2 + rho2 ||y_k - y_{k-1}||^2``."""
    if state.k < 1 or state.r is None:
        raise StateError("E_k is only defined for k >= 1")
    return (cfg.rho1 * _sqnorm(state.r) + cfg.rho2 * _sqnorm(state.s)
            + cfg.rho2 * _sqnorm(state.y - state.y_prev))


def discrepancy(r_norm, s_norm, cfg):
    """Left-hand side ``rho1^2 ||r||^2 + rho2^2 ||s||^2`` of the stopping rule."""
    return cfg.rho1 ** 2 * r_norm ** 2 + cfg.rho2 ** 2 * s_norm ** 2


def run(A, W, b, f, cfg, init=None, ground_truth=None, psnr_peak=None, callback=None):
    """Iterate ADMM until the discrepancy rule or ``cfg.max_iter`` stops it.

    Parameters
    ----------
    A, W : LinearOperator
        Forward operator and sparsifying transform on a common domain.
    b : ndarray
        Observed data.
    f : Penalty
    cfg : AdmmConfig
    init : tuple, optional
        ``(y0, lam0, mu0)``; zeros by default.
    ground_truth : ndarray, optional
        When given, the trace records ``||x_k - x_true||`` and, if
        ``psnr_peak`` is set, the PSNR of ``x_k``.
    callback : callable, optional
        Called as ``callback(prev_state, state)`` after every iteration.

    Returns
    -------
    AdmmResult
        ``stop_reason`` is ``'discrepancy'``, ``'plateau'`` or ``'max_iter'``.
    """
    b = np.asarray(b, dtype=float)
    start = time.perf_counter()
    y0, lam0, mu0 = init if init is not None else (None, None, None)
    state = initial_state(A, W, y0, lam0, mu0)
    solver = make_x_solver(A, W, cfg)
    armed = cfg.delta > 0
    threshold = cfg.threshold
    trace = []
    stats = {}
    reason = "max_iter"

    while state.k < cfg.max_iter:
        prev = state
        state = admm_step(prev, A, W, b, f, cfg, solver=solver, stats=stats)
        r_norm = float(np.linalg.norm(state.r))
        s_norm = float(np.linalg.norm(state.s))
        rec = TraceRecord(k=state.k, r_norm=r_norm, s_norm=s_norm, E=state.E,
                          f_y=f.value(state.y), inner_iters=stats.get("inner_iters", 0))
        if ground_truth is not None:
            rec.err = float(np.linalg.norm(state.x - ground_truth))
            if psnr_peak is not None:
                rec.psnr = _psnr(state.x, ground_truth, psnr_peak)
        trace.append(rec)
        if callback is not None:
            callback(prev, state)

        if armed and discrepancy(r_norm, s_norm, cfg) <= threshold:
            reason = "discrepancy"
            break
        if cfg.plateau_tol is not None and np.linalg.norm(state.y - state.y_prev) <= cfg.plateau_tol:
            reason = "plateau"
            break

    wall = (time.perf_counter() - start) * 1e3
    log.info("ADMM stopped at k=%d (%s)", state.k, reason)
    return AdmmResult(state=state, trace=trace, stop_reason=reason, config=cfg, wall_time_ms=wall)
