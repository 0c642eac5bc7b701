"""Weighted l1 plus quadratic penalty ``f(y) = sum_i w_i |y_i| + (nu/2) ||y||^2``."""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = ["Penalty", "SUBGRADIENT_TOL"]

SUBGRADIENT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Penalty:
    """Strongly convex sparsity penalty.

    Parameters
    ----------
    nu : float
        Weight of the quadratic term; the strong convexity modulus is
        ``nu / 2``.
    weights : float or ndarray
        Nonnegative l1 weights, either a scalar applied to every entry or
        an array with the shape of ``y``.
    """

    nu: float = 1e-3
    weights: Union[float, np.ndarray] = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ParameterError("nu must be positive, got {}".format(self.nu))
        w = self.weights
        if np.ndim(w) == 0:
            w = float(w)
        else:
            w = np.array(w, dtype=float)
            w.setflags(write=False)
        if np.any(np.asarray(w) < 0) or not np.all(np.isfinite(w)):
            raise ParameterError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def modulus(self):
        """Strong convexity constant ``c0``."""
        return self.nu / 2

    def _check(self, *arrays):
        out = []
        ref = None
        for a in arrays:
            a = np.asarray(a, dtype=float)
            if ref is None:
                ref = a.shape
            elif a.shape != ref:
                raise DimensionError("shape mismatch: {} vs {}".format(ref, a.shape))
            out.append(a)
        if np.ndim(self.weights) and self.weights.shape != ref:
            raise DimensionError("weights have shape {}, input has {}".format(
                self.weights.shape, ref))
        return out if len(out) > 1 else out[0]

    def value(self, y):
        y = self._check(y)
        return float(np.sum(self.weights * np.abs(y)) + 0.5 * self.nu * np.vdot(y, y))

    __call__ = value

    def prox(self, v, rho):
        """Minimizer of ``f(y) + (rho/2) ||y - v||^2``, by componentwise shrinkage."""
        if not rho > 0:
            raise ParameterError("rho must be positive, got {}".format(rho))
        v = self._check(v)
        return np.sign(v) * np.maximum(rho * np.abs(v) - self.weights, 0.0) / (self.nu + rho)

    def subgradient_from_prox(self, v, y, rho):
        """Subgradient ``rho (v - y)`` certified by the prox optimality condition."""
        v, y = self._check(v, y)
        return rho * (v - y)

    def subgradient_violation(self, y, mu):
        """Componentwise distance of ``mu`` from the subdifferential at ``y``."""
        y, mu = self._check(y, mu)
        w = np.broadcast_to(self.weights, y.shape)
        on = y != 0
        viol = np.where(on,
                        np.abs(mu - self.nu * y - w * np.sign(y)),
                        np.maximum(np.abs(mu) - w, 0.0))
        return viol

    def check_subgradient(self, y, mu, tol=SUBGRADIENT_TOL):
        return bool(np.all(self.subgradient_violation(y, mu) <= tol))

    def bregman(self, ybar, y, mu):
        """Bregman distance ``f(ybar) - f(y) - <mu, ybar - y>`` for ``mu`` in the subdifferential at ``y``."""
        ybar, y, mu = self._check(ybar, y, mu)
        return self.value(ybar) - self.value(y) - float(np.vdot(mu, ybar - y))
