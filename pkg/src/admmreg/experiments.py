"""Problem generators, noise, and the study drivers (semi-convergence, sweeps)."""

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .admm import AdmmConfig, admm_step, discrepancy, initial_state, make_x_solver, run
from .errors import ParameterError
from .metrics import psnr
from .operators import (Circulant2D, DenseOperator, Gradient2D, IdentityOperator,
                        LinearOperator, TightFrame, make_gaussian_kernel_1d)
from .oracle import solve_small
from .penalty import Penalty

__all__ = [
    "ProblemInstance",
    "DEFAULT_SPIKES",
    "REGULARIZERS",
    "gen_deconv1d",
    "gaussian_psf",
    "motion_psf",
    "gen_psf",
    "gen_phantom",
    "add_noise",
    "make_regularizer",
    "gen_deblur",
    "default_image_delta",
    "first_discrepancy_stop",
    "ScanResult",
    "semiconvergence_scan",
    "SweepRow",
    "sensitivity_sweep",
    "rows_monotone",
    "random_consistent_system",
    "OracleCheck",
    "certify_against_oracle",
    "RHO1_GRID",
    "RHO2_GRID",
]

DEFAULT_SPIKES = ((60, 1.0), (140, -0.8), (200, 0.6), (280, 1.2), (340, -1.0))
REGULARIZERS = ("tv", "frame-haar3", "frame-bspline1")
RHO1_GRID = (250.0, 500.0, 1000.0, 2000.0, 4000.0)
RHO2_GRID = (2.5, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0)
# per-pixel noise RMS on the unit intensity scale (0.256 on a 256x256 image)
IMAGE_NOISE_RMS = 1e-3


@dataclass
class ProblemInstance:
    A: LinearOperator
    W: LinearOperator
    x_true: np.ndarray
    b_exact: np.ndarray
    b_obs: np.ndarray
    delta: float
    penalty: Penalty
    seed: int
    meta: dict = field(default_factory=dict)


def add_noise(b_exact, delta, seed):
    """Return ``b_exact + delta * g / ||g||`` with ``g`` i.i.d. standard normal.

    The noise norm equals ``delta`` up to rounding, whatever the draw.
    """
    if not delta >= 0:
        raise ParameterError("noise level must be nonnegative")
    b_exact = np.asarray(b_exact, dtype=float)
    if delta == 0:
        return b_exact.copy()
    rng = np.random.default_rng(seed)
    while True:
        g = rng.standard_normal(b_exact.shape)
        gn = np.linalg.norm(g)
        if gn > 0:
            break
    return b_exact + (delta / gn) * g


def gen_deconv1d(n=400, gamma=0.01, spikes=DEFAULT_SPIKES, rel_noise=0.0, seed=0,
                 nu=1e-3, quadrature_weight=1.0):
    """Sparse 1D deconvolution with the Gaussian heat kernel and ``W = I``.

    ``quadrature_weight`` scales the kernel matrix; see
    :func:`~admmreg.operators.make_gaussian_kernel_1d`. The noise level is
    ``rel_noise * ||A x_true||``.
    """
    if rel_noise < 0:
        raise ParameterError("rel_noise must be nonnegative")
    A = make_gaussian_kernel_1d(gamma, n, weight=quadrature_weight)
    x_true = np.zeros(n)
    for idx, amp in spikes:
        if not 0 <= idx < n or int(idx) != idx:
            raise ParameterError("spike index {} outside [0, {})".format(idx, n))
        x_true[int(idx)] = amp
    b_exact = A.apply(x_true)
    delta = rel_noise * float(np.linalg.norm(b_exact))
    b_obs = add_noise(b_exact, delta, seed)
    return ProblemInstance(A=A, W=IdentityOperator(n), x_true=x_true, b_exact=b_exact,
                           b_obs=b_obs, delta=delta, penalty=Penalty(nu, 1.0), seed=seed,
                           meta={"problem": "deconv1d", "n": n, "gamma": gamma,
                                 "rel_noise": rel_noise})


def gaussian_psf(size, sigma):
    """Isotropic Gaussian on a ``size x size`` grid centered on the grid center, summing to 1."""
    if int(size) != size or size < 1:
        raise ParameterError("gaussian psf size must be a positive integer")
    if not sigma > 0:
        raise ParameterError("gaussian psf sigma must be positive")
    c = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(c[:, None] ** 2 + c[None, :] ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def motion_psf(length, angle_deg):
    """Anti-aliased linear motion blur of ``length`` pixels at ``angle_deg`` (counterclockwise).

    Each pixel gets weight ``max(0, 1 - d)`` with ``d`` its distance to the
    centered segment; the kernel is then normalized to sum 1.
    """
    if not length >= 1:
        raise ParameterError("motion length must be >= 1")
    half = (length - 1) / 2.0
    theta = math.radians(angle_deg)
    dx, dy = math.cos(theta), -math.sin(theta)  # rows grow downward
    rad = int(math.ceil(half)) + 1
    c = np.arange(-rad, rad + 1, dtype=float)
    yy, xx = np.meshgrid(c, c, indexing="ij")
    t = np.clip(xx * dx + yy * dy, -half, half)
    dist = np.hypot(xx - t * dx, yy - t * dy)
    k = np.maximum(1.0 - dist, 0.0)
    k[np.abs(k) < 1e-14] = 0.0
    while k.shape[0] > 1 and not k[[0, -1], :].any() and not k[:, [0, -1]].any():
        k = k[1:-1, 1:-1]
    return k / k.sum()


def gen_psf(kind, *params):
    """Dispatch to :func:`gaussian_psf` (``size, sigma``) or :func:`motion_psf` (``length, angle``)."""
    if kind == "gaussian":
        return gaussian_psf(*params)
    if kind == "motion":
        return motion_psf(*params)
    raise ParameterError("unknown psf kind {!r}".format(kind))


# modified Shepp-Logan: intensity, semi-axes (a, b), center (x0, y0), rotation in degrees
_SHEPP_LOGAN = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def gen_phantom(n=128):
    """Piecewise-constant ``n x n`` Shepp-Logan-style phantom with values in [0, 1]."""
    if int(n) != n or n < 32:
        raise ParameterError("phantom size must be an integer >= 32")
    n = int(n)
    c = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    xx, yy = np.meshgrid(c, c[::-1])
    img = np.zeros((n, n))
    for val, a, b, x0, y0, phi in _SHEPP_LOGAN:
        th = math.radians(phi)
        xr = (xx - x0) * math.cos(th) + (yy - y0) * math.sin(th)
        yr = -(xx - x0) * math.sin(th) + (yy - y0) * math.cos(th)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += val
    return np.clip(img, 0.0, 1.0)


def make_regularizer(name, shape):
    """Return ``(W, weights)`` for ``'tv'``, ``'frame-haar3'`` or ``'frame-bspline1'``.

    Framelet weights are zero on the coarsest lowpass band and one elsewhere.
    """
    if name == "tv":
        return Gradient2D(shape), 1.0
    if name == "frame-haar3":
        W = TightFrame("haar", 3, shape)
    elif name == "frame-bspline1":
        W = TightFrame("linear_bspline", 1, shape)
    else:
        raise ParameterError("unknown regularizer {!r}; expected one of {}".format(
            name, REGULARIZERS))
    return W, np.where(W.lowpass_mask(), 0.0, 1.0)


def default_image_delta(shape):
    return IMAGE_NOISE_RMS * math.sqrt(float(np.prod(shape)))


def gen_deblur(image=None, n=128, psf=None, regularizer="tv", delta=None, seed=0, nu=1e-3):
    """Periodic deblurring instance ``b = k * x_true + noise``.

    Parameters
    ----------
    image : ndarray, optional
        Ground truth on the unit intensity scale; a phantom of size ``n``
        is generated when omitted.
    psf : ndarray, optional
        Centered blur kernel; defaults to ``motion_psf(15, 50)``.
    regularizer : str
        One of :data:`REGULARIZERS`.
    delta : float, optional
        Noise norm; defaults to a per-pixel RMS of ``1e-3``.
    """
    x_true = gen_phantom(n) if image is None else np.asarray(image, dtype=float)
    if x_true.ndim != 2:
        raise ParameterError("image must be 2D")
    if psf is None:
        psf = motion_psf(15, 50)
    A = Circulant2D.from_psf(psf, x_true.shape)
    W, weights = make_regularizer(regularizer, x_true.shape)
    b_exact = A.apply(x_true)
    if delta is None:
        delta = default_image_delta(x_true.shape)
    b_obs = add_noise(b_exact, delta, seed)
    return ProblemInstance(A=A, W=W, x_true=x_true, b_exact=b_exact, b_obs=b_obs,
                           delta=float(delta), penalty=Penalty(nu, weights), seed=seed,
                           meta={"problem": "deblur", "regularizer": regularizer,
                                 "shape": list(x_true.shape)})


def first_discrepancy_stop(trace, cfg, delta):
    """First iteration whose residuals satisfy the stopping rule at noise level ``delta``, else None."""
    thr = dataclasses.replace(cfg, delta=delta).threshold
    for rec in trace:
        if discrepancy(rec.r_norm, rec.s_norm, cfg) <= thr:
            return rec.k
    return None


@dataclass
class ScanResult:
    trace: list
    k_peak_psnr: Optional[int]
    k_min_err: int
    k_delta: Optional[int]
    result: object = None


def _argbest(values, ks, larger):
    best_k, best = None, None
    for k, v in zip(ks, values):
        if v is None:
            continue
        if best is None or (v > best if larger else v < best):
            best, best_k = v, k
    return best_k


def semiconvergence_scan(instance, cfg=None, max_iter=500, psnr_peak=1.0):
    """Run without the stopping rule and locate the best iterate.

    Returns the iteration of maximal PSNR and of minimal error (ties go to
    the smallest ``k``), plus the iteration the discrepancy rule would
    have picked for ``instance.delta``.
    """
    cfg = cfg or AdmmConfig()
    cfg = dataclasses.replace(cfg, delta=0.0, max_iter=max_iter)
    res = run(instance.A, instance.W, instance.b_obs, instance.penalty, cfg,
              ground_truth=instance.x_true, psnr_peak=psnr_peak)
    ks = [rec.k for rec in res.trace]
    k_peak = _argbest([rec.psnr for rec in res.trace], ks, larger=True)
    k_err = _argbest([rec.err for rec in res.trace], ks, larger=False)
    k_delta = first_discrepancy_stop(res.trace, cfg, instance.delta) if instance.delta > 0 else None
    return ScanResult(trace=res.trace, k_peak_psnr=k_peak, k_min_err=k_err,
                      k_delta=k_delta, result=res)


@dataclass
class SweepRow:
    rho1: float
    rho2: float
    psnr: Optional[float]
    k_stop: int
    stop_reason: str
    wall_ms: float

    CSV_HEADER = ("rho1", "rho2", "psnr", "k_stop", "stop_reason", "wall_ms")


def sensitivity_sweep(instance, rho1_list=RHO1_GRID, rho2_list=RHO2_GRID, cfg=None,
                      psnr_peak=1.0):
    """One stopped run per ``(rho1, rho2)``, all on the same observed data.

    Rows come out grouped by ``rho2`` (outer loop) and ``rho1`` (inner
    loop), each in the order given.
    """
    if not rho1_list or not rho2_list:
        raise ParameterError("parameter lists must be nonempty")
    cfg = cfg or AdmmConfig()
    cfg = dataclasses.replace(cfg, delta=instance.delta)
    rows = []
    for rho2 in rho2_list:
        for rho1 in rho1_list:
            c = dataclasses.replace(cfg, rho1=float(rho1), rho2=float(rho2))
            t0 = time.perf_counter()
            res = run(instance.A, instance.W, instance.b_obs, instance.penalty, c)
            wall = (time.perf_counter() - t0) * 1e3
            x = res.state.x
            value = psnr(x, instance.x_true, psnr_peak) if instance.x_true.ndim == 2 else None
            rows.append(SweepRow(rho1=float(rho1), rho2=float(rho2), psnr=value,
                                 k_stop=res.k_stop, stop_reason=res.stop_reason, wall_ms=wall))
    return rows


def rows_monotone(rows):
    """Map each ``rho2`` to whether ``k_stop`` is nonincreasing as ``rho1`` grows."""
    by_rho2 = {}
    for row in rows:
        by_rho2.setdefault(row.rho2, []).append(row)
    out = {}
    for rho2, group in by_rho2.items():
        ks = [r.k_stop for r in sorted(group, key=lambda r: r.rho1)]
        out[rho2] = all(b <= a for a, b in zip(ks, ks[1:]))
    return out


def random_consistent_system(m, n, rng):
    """Gaussian ``m x n`` matrix and ``b = A x0`` for a random, partly sparse ``x0``."""
    A = rng.standard_normal((m, n))
    x0 = rng.standard_normal(n) * (rng.random(n) < 0.6)
    return A, A @ x0


@dataclass
class OracleCheck:
    k: int
    err: float
    passed: bool
    x_oracle: np.ndarray
    x_admm: np.ndarray


def certify_against_oracle(A, b, f, cfg=None, tol=1e-4):
    """Run exact-data ADMM with ``W = I`` until it is within ``tol`` of the oracle solution.

    Gives up after ``cfg.max_iter`` iterations; ``passed`` reports success.
    """
    cfg = cfg or AdmmConfig(max_iter=100000)
    cfg = dataclasses.replace(cfg, delta=0.0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sol = solve_small(A, b, f)
    if not sol.optimal:
        raise ParameterError("inconsistent system; oracle reports {}".format(sol.status))
    Aop = DenseOperator(A)
    W = IdentityOperator(A.shape[1])
    solver = make_x_solver(Aop, W, cfg)
    state = initial_state(Aop, W)
    err = math.inf
    while state.k < cfg.max_iter:
        state = admm_step(state, Aop, W, b, f, cfg, solver=solver)
        err = float(np.linalg.norm(state.x - sol.x))
        if err <= tol:
            break
    return OracleCheck(k=state.k, err=err, passed=err <= tol, x_oracle=sol.x, x_admm=state.x)
