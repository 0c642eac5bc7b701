"""Image quality metrics."""

import numpy as np

from .errors import DimensionError, IdenticalImagesError

__all__ = ["mse", "psnr"]


def mse(u, ref):
    u = np.asarray(u, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if u.shape != ref.shape:
        raise DimensionError("shape mismatch: {} vs {}".format(u.shape, ref.shape))
    return float(np.mean((u - ref) ** 2))


def psnr(u, ref, peak=1.0):
    """Peak signal-to-noise ratio ``10 log10(peak**2 / MSE)`` in dB.

    Images on the unit scale with ``peak=1`` give the same value as their
    8-bit rescalings with ``peak=255``.
    """
    err = mse(u, ref)
    if err == 0.0:
        raise IdenticalImagesError("images are identical; PSNR is infinite")
    return float(10.0 * np.log10(peak ** 2 / err))
