"""Brute-force reference solver for tiny instances of ``min f(x) s.t. Ax = b``.

For ``f(x) = sum_i w_i |x_i| + (nu/2)||x||^2`` the solution is characterized by
its sign pattern. Every pattern in ``{-1, 0, +1}^n`` is tried: the KKT system
restricted to the pattern's support is linear, and the pattern is accepted when
the resulting ``x`` has the assumed signs and the multiplier is dual feasible
off the support. Strong convexity makes the accepted ``x`` unique.
"""

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import AdmmRegError, ParameterError
from .penalty import Penalty

__all__ = ["OracleSolution", "solve_small", "MAX_DIM"]

MAX_DIM = 8
CONSISTENCY_TOL = 1e-10
KKT_TOL = 1e-10


@dataclass
class OracleSolution:
    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    lam: Optional[np.ndarray] = None
    signs: Optional[np.ndarray] = None

    @property
    def optimal(self):
        return self.status == "optimal"


def _dual_for_pattern(A, b, w, nu, sigma):
    m, n = A.shape
    supp = np.flatnonzero(sigma)
    off = np.flatnonzero(sigma == 0)
    k = supp.size
    As = A[:, supp]
    # [nu I   As^T] [x_S]   [-w_S sigma_S]
    # [As     0   ] [lam] = [b           ]
    kkt = np.zeros((k + m, k + m))
    kkt[:k, :k] = nu * np.eye(k)
    kkt[:k, k:] = As.T
    kkt[k:, :k] = As
    rhs = np.concatenate([-w[supp] * sigma[supp], b])
    sol, _, rank, _ = np.linalg.lstsq(kkt, rhs, rcond=None)
    if np.linalg.norm(kkt @ sol - rhs) > KKT_TOL * max(1.0, np.linalg.norm(rhs)):
        return None
    xs, lam = sol[:k], sol[k:]
    if np.any(xs * sigma[supp] <= 0):
        return None
    if rank < k + m and off.size:
        # lam is only determined up to ker(As^T); search it for dual feasibility
        lam = _feasible_multiplier(A, supp, off, w, sigma, nu, xs)
        if lam is None:
            return None
    elif off.size and np.any(np.abs(A[:, off].T @ lam) > w[off] + KKT_TOL):
        return None
    x = np.zeros(n)
    x[supp] = xs
    return x, lam


def _feasible_multiplier(A, supp, off, w, sigma, nu, xs):
    m = A.shape[0]
    Aoff = A[:, off].T
    res = linprog(
        np.zeros(m),
        A_ub=np.vstack([Aoff, -Aoff]),
        b_ub=np.concatenate([w[off], w[off]]) + KKT_TOL,
        A_eq=A[:, supp].T if supp.size else None,
        b_eq=(-w[supp] * sigma[supp] - nu * xs) if supp.size else None,
        bounds=[(None, None)] * m,
        method="highs",
    )
    return res.x if res.status == 0 else None


def solve_small(A, b, f):
    """Exact solution of ``min f(x) s.t. Ax = b`` with ``W = I`` by sign enumeration.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Constraint matrix with ``n <= 8``.
    b : array_like, shape (m,)
    f : Penalty

    Returns
    -------
    OracleSolution
        ``status`` is ``'infeasible'`` when ``b`` is not in the range of ``A``.
        For an optimal solution, ``lam`` satisfies ``-A^T lam`` in the
        subdifferential of ``f`` at ``x``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m, n = A.shape
    if n > MAX_DIM:
        raise ParameterError("oracle supports n <= {}, got {}".format(MAX_DIM, n))
    if b.shape != (m,):
        raise ParameterError("b has shape {}, expected ({},)".format(b.shape, m))
    w = np.broadcast_to(np.asarray(f.weights, dtype=float), (n,)).copy()

    x_ls = np.linalg.lstsq(A, b, rcond=None)[0]
    if np.linalg.norm(A @ x_ls - b) > CONSISTENCY_TOL * max(1.0, np.linalg.norm(b)):
        return OracleSolution(status="infeasible")

    best = None
    for pattern in itertools.product((0, 1, -1), repeat=n):
        sigma = np.array(pattern, dtype=float)
        found = _dual_for_pattern(A, b, w, f.nu, sigma)
        if found is None:
            continue
        x, lam = found
        val = f.value(x)
        # with tolerances, near-degenerate patterns may both pass; keep the best
        if best is None or val < best[0]:
            best = (val, x, lam, sigma)
    if best is None:
        raise AdmmRegError("no sign pattern satisfied the KKT conditions")
    val, x, lam, sigma = best
    return OracleSolution(status="optimal", x=x, value=val, lam=lam, signs=sigma.astype(int))
