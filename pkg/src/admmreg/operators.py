"""Finite-dimensional linear operators with exact adjoints.

All operators act on numpy arrays of a fixed ``domain_shape`` and return
arrays of ``range_shape``. Convolution-type operators use periodic
boundary conditions and are applied through the FFT, which also lets
:func:`build_spectral_diagonal` diagonalize ``rho1 A*A + rho2 W*W``.
"""

import numpy as np

from .errors import DimensionError, ParameterError, UnsupportedCombinationError

__all__ = [
    "LinearOperator",
    "DenseOperator",
    "IdentityOperator",
    "Circulant1D",
    "Circulant2D",
    "Gradient2D",
    "TightFrame",
    "SpectralDiagonal",
    "make_gaussian_kernel_1d",
    "make_tight_frame",
    "psf_to_kernel",
    "build_spectral_diagonal",
    "SPECTRAL_FLOOR",
]

SPECTRAL_FLOOR = 1e-12


def _as_shape(shape):
    if np.isscalar(shape):
        return (int(shape),)
    return tuple(int(s) for s in shape)


class LinearOperator:
    """Base class for a linear map between two grids.

    Subclasses implement ``_apply`` and ``_adjoint``; the public methods
    validate shapes. Operators that are diagonalized by the DFT on their
    domain also implement ``gram_multipliers``.
    """

    kind = "abstract"

    def __init__(self, domain_shape, range_shape):
        self.domain_shape = _as_shape(domain_shape)
        self.range_shape = _as_shape(range_shape)

    def __repr__(self):
        return "{}(domain={}, range={})".format(
            type(self).__name__, self.domain_shape, self.range_shape)

    @property
    def domain_size(self):
        return int(np.prod(self.domain_shape))

    @property
    def range_size(self):
        return int(np.prod(self.range_shape))

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != self.domain_shape:
            raise DimensionError("{}: expected input of shape {}, got {}".format(
                type(self).__name__, self.domain_shape, u.shape))
        return self._apply(u)

    def adjoint(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != self.range_shape:
            raise DimensionError("{}: expected adjoint input of shape {}, got {}".format(
                type(self).__name__, self.range_shape, v.shape))
        return self._adjoint(v)

    __call__ = apply

    def _apply(self, u):
        raise NotImplementedError

    def _adjoint(self, v):
        raise NotImplementedError

    def gram_multipliers(self):
        """DFT eigenvalues of ``op* op`` on the domain grid.

        Raises :class:`UnsupportedCombinationError` for operators that are
        not diagonalized by the DFT.
        """
        raise UnsupportedCombinationError(
            "{} is not diagonalized by the DFT".format(type(self).__name__))

    def to_matrix(self):
        """Assemble the operator as a dense ``(range_size, domain_size)`` matrix."""
        n = self.domain_size
        cols = np.empty((self.range_size, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            cols[:, j] = self._apply(e.reshape(self.domain_shape)).ravel()
            e[j] = 0.0
        return cols


class DenseOperator(LinearOperator):
    """Explicit matrix acting on 1D vectors."""

    kind = "dense"

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ParameterError("dense operator needs a 2D matrix")
        if not np.all(np.isfinite(matrix)):
            raise ParameterError("matrix entries must be finite")
        super().__init__(matrix.shape[1], matrix.shape[0])
        self.matrix = matrix
        self.matrix.setflags(write=False)

    def _apply(self, u):
        return self.matrix @ u

    def _adjoint(self, v):
        return self.matrix.T @ v

    def to_matrix(self):
        return self.matrix.copy()


class IdentityOperator(LinearOperator):
    kind = "identity"

    def __init__(self, shape):
        super().__init__(shape, shape)

    def _apply(self, u):
        return u.copy()

    def _adjoint(self, v):
        return v.copy()

    def gram_multipliers(self):
        return np.ones(self.domain_shape)

    def to_matrix(self):
        return np.eye(self.domain_size)


class _Circulant(LinearOperator):
    # kernel has the domain shape with its origin at index 0 along each axis
    def __init__(self, kernel):
        kernel = np.array(kernel, dtype=float)
        if not np.all(np.isfinite(kernel)):
            raise ParameterError("kernel entries must be finite")
        super().__init__(kernel.shape, kernel.shape)
        self.kernel = kernel
        self.kernel.setflags(write=False)
        self.multipliers = np.fft.fftn(kernel)
        self.multipliers.setflags(write=False)

    def _apply(self, u):
        return np.fft.ifftn(self.multipliers * np.fft.fftn(u)).real

    def _adjoint(self, v):
        return np.fft.ifftn(np.conj(self.multipliers) * np.fft.fftn(v)).real

    def gram_multipliers(self):
        return np.abs(self.multipliers) ** 2


class Circulant1D(_Circulant):
    """Cyclic convolution ``(k * u)[i] = sum_j k[(i - j) mod n] u[j]``."""

    kind = "circulant1d"

    def __init__(self, kernel):
        kernel = np.asarray(kernel, dtype=float)
        if kernel.ndim != 1:
            raise ParameterError("circulant1d kernel must be 1D")
        super().__init__(kernel)


class Circulant2D(_Circulant):
    """Periodic 2D convolution with a full-size kernel whose origin is ``[0, 0]``.

    Use :meth:`from_psf` to build one from a small centered point spread
    function.
    """

    kind = "circulant2d"

    def __init__(self, kernel):
        kernel = np.asarray(kernel, dtype=float)
        if kernel.ndim != 2:
            raise ParameterError("circulant2d kernel must be 2D")
        super().__init__(kernel)

    @classmethod
    def from_psf(cls, psf, image_shape):
        return cls(psf_to_kernel(psf, image_shape))


def psf_to_kernel(psf, image_shape):
    """Zero-pad a centered PSF to ``image_shape`` and move its center to the origin.

    The center of a ``p x q`` PSF is taken at ``(p // 2, q // 2)``, as in
    MATLAB's ``psf2otf``.
    """
    psf = np.asarray(psf, dtype=float)
    image_shape = _as_shape(image_shape)
    if psf.ndim != len(image_shape):
        raise DimensionError("psf and image must have the same number of axes")
    if any(p > s for p, s in zip(psf.shape, image_shape)):
        raise DimensionError("psf {} larger than image {}".format(psf.shape, image_shape))
    kernel = np.zeros(image_shape)
    kernel[tuple(slice(0, p) for p in psf.shape)] = psf
    return np.roll(kernel, [-(p // 2) for p in psf.shape], axis=tuple(range(psf.ndim)))


class Gradient2D(LinearOperator):
    """Forward differences with wraparound; output channels are (down, right)."""

    kind = "gradient2d"

    def __init__(self, shape):
        shape = _as_shape(shape)
        if len(shape) != 2:
            raise ParameterError("gradient2d acts on 2D images")
        super().__init__(shape, shape + (2,))

    def _apply(self, u):
        out = np.empty(self.range_shape)
        out[..., 0] = np.roll(u, -1, axis=0) - u
        out[..., 1] = np.roll(u, -1, axis=1) - u
        return out

    def _adjoint(self, v):
        v0, v1 = v[..., 0], v[..., 1]
        return (np.roll(v0, 1, axis=0) - v0) + (np.roll(v1, 1, axis=1) - v1)

    def gram_multipliers(self):
        rows, cols = self.domain_shape
        wr = 2.0 - 2.0 * np.cos(2 * np.pi * np.arange(rows) / rows)
        wc = 2.0 - 2.0 * np.cos(2 * np.pi * np.arange(cols) / cols)
        return wr[:, None] + wc[None, :]


_FRAMELET_FILTERS = {
    # (taps, offset of tap 0); filter 0 is the lowpass
    "haar": [
        (np.array([0.5, 0.5]), 0),
        (np.array([0.5, -0.5]), 0),
    ],
    "linear_bspline": [
        (np.array([0.25, 0.5, 0.25]), -1),
        (np.array([np.sqrt(2) / 4, 0.0, -np.sqrt(2) / 4]), -1),
        (np.array([-0.25, 0.5, -0.25]), -1),
    ],
}


def _filter_response(taps, offset, n, dilation):
    h = np.zeros(n)
    for i, t in enumerate(taps):
        h[((offset + i) * dilation) % n] += t
    return np.fft.fft(h)


class TightFrame(LinearOperator):
    """Undecimated tensor-product framelet analysis with periodic boundary.

    Coefficients are stacked along a trailing channel axis: for every
    level the non-lowpass tensor-product bands in row-major filter order,
    then the coarsest lowpass band last. Filters at level ``l`` are
    dilated by ``2**(l-1)`` (a trous), which keeps ``W*W = I`` exact.

    Parameters
    ----------
    family : {'haar', 'linear_bspline'}
        Univariate filter bank.
    levels : int
        Number of decomposition levels.
    image_shape : tuple of int
        Shape ``(rows, cols)`` of the analysed images.
    """

    kind = "tight_frame"

    def __init__(self, family, levels, image_shape):
        if family not in _FRAMELET_FILTERS:
            raise ParameterError("unknown framelet family {!r}; expected one of {}".format(
                family, sorted(_FRAMELET_FILTERS)))
        levels = int(levels)
        if levels < 1:
            raise ParameterError("levels must be >= 1")
        image_shape = _as_shape(image_shape)
        if len(image_shape) != 2:
            raise ParameterError("tight frame acts on 2D images")
        rows, cols = image_shape
        bank = _FRAMELET_FILTERS[family]
        nf = len(bank)

        channels = []
        bands = []
        lowpass = np.ones(image_shape, dtype=complex)
        for level in range(1, levels + 1):
            dil = 2 ** (level - 1)
            fr = [_filter_response(t, o, rows, dil) for t, o in bank]
            fc = [_filter_response(t, o, cols, dil) for t, o in bank]
            for i in range(nf):
                for j in range(nf):
                    if i == 0 and j == 0:
                        continue
                    channels.append(lowpass * np.outer(fr[i], fc[j]))
                    bands.append((level, i, j))
            lowpass = lowpass * np.outer(fr[0], fc[0])
        channels.append(lowpass)
        bands.append((levels, 0, 0))

        super().__init__(image_shape, image_shape + (len(channels),))
        self.family = family
        self.levels = levels
        self.bands = tuple(bands)
        self.multipliers = np.stack(channels)
        self.multipliers.setflags(write=False)

    @property
    def n_channels(self):
        return self.range_shape[-1]

    def lowpass_mask(self):
        """Boolean array of ``range_shape``, True on the coarsest lowpass band."""
        mask = np.zeros(self.range_shape, dtype=bool)
        mask[..., -1] = True
        return mask

    def _apply(self, u):
        coeffs = np.fft.ifft2(self.multipliers * np.fft.fft2(u)[None]).real
        return np.moveaxis(coeffs, 0, -1)

    def _adjoint(self, v):
        vhat = np.fft.fft2(np.moveaxis(v, -1, 0))
        return np.fft.ifft2((np.conj(self.multipliers) * vhat).sum(axis=0)).real

    def gram_multipliers(self):
        return (np.abs(self.multipliers) ** 2).sum(axis=0)


def make_tight_frame(family, levels, image_shape):
    """Build a :class:`TightFrame` analysis operator."""
    return TightFrame(family, levels, image_shape)


def make_gaussian_kernel_1d(gamma, n, weight=None):
    """Midpoint-rule discretization of the Gaussian heat kernel on [0, 1].

    Returns the dense ``n x n`` operator with entries
    ``weight * gamma / sqrt(pi) * exp(-(s_i - t_j)**2 / (2 gamma**2))`` at the
    cell midpoints ``s_i = (i + 0.5) / n``.

    Parameters
    ----------
    gamma : float
        Kernel width, positive.
    n : int
        Number of subintervals, at least 2.
    weight : float, optional
        Quadrature weight multiplying every entry. Defaults to the
        midpoint-rule cell width ``1 / n``.
    """
    if not gamma > 0:
        raise ParameterError("gamma must be positive, got {}".format(gamma))
    if int(n) != n or n < 2:
        raise ParameterError("n must be an integer >= 2, got {}".format(n))
    n = int(n)
    if weight is None:
        weight = 1.0 / n
    s = (np.arange(n) + 0.5) / n
    diff = s[:, None] - s[None, :]
    k = gamma / np.sqrt(np.pi) * np.exp(-diff ** 2 / (2 * gamma ** 2))
    return DenseOperator(weight * k)


class SpectralDiagonal:
    """DFT eigenvalues of ``rho1 A*A + rho2 W*W`` and the matching solve."""

    def __init__(self, multipliers, floor=SPECTRAL_FLOOR):
        multipliers = np.asarray(multipliers, dtype=float)
        if np.any(multipliers < -1e-12 * max(1.0, np.abs(multipliers).max())):
            raise ParameterError("spectral multipliers must be nonnegative")
        self.multipliers = np.maximum(multipliers, 0.0)
        self.floor = floor
        self._divisor = np.maximum(self.multipliers, floor)

    @property
    def shape(self):
        return self.multipliers.shape

    def apply(self, u):
        return np.fft.ifftn(self.multipliers * np.fft.fftn(u)).real

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != self.shape:
            raise DimensionError("rhs shape {} does not match {}".format(rhs.shape, self.shape))
        return np.fft.ifftn(np.fft.fftn(rhs) / self._divisor).real


_SPECTRAL_A = (Circulant1D, Circulant2D, IdentityOperator)
_SPECTRAL_W = (Circulant1D, Circulant2D, IdentityOperator, Gradient2D, TightFrame)


def build_spectral_diagonal(A, W, rho1, rho2, floor=SPECTRAL_FLOOR):
    """Diagonalize ``rho1 A*A + rho2 W*W`` with the DFT on the common domain.

    Raises :class:`UnsupportedCombinationError` unless ``A`` is circulant (or
    the identity) and ``W`` is circulant, identity, gradient or tight frame.
    """
    if not isinstance(A, _SPECTRAL_A) or not isinstance(W, _SPECTRAL_W):
        raise UnsupportedCombinationError(
            "no DFT diagonalization for A={}, W={}".format(A.kind, W.kind))
    if A.domain_shape != W.domain_shape:
        raise DimensionError("A and W domains differ: {} vs {}".format(
            A.domain_shape, W.domain_shape))
    return SpectralDiagonal(rho1 * A.gram_multipliers() + rho2 * W.gram_multipliers(), floor)
