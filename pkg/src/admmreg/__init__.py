"""ADMM as an iterative regularization method for linear inverse problems."""

from .admm import (AdmmConfig, AdmmResult, AdmmState, TraceRecord, admm_step, lyapunov,
                   run, solve_x)
from .errors import (AdmmRegError, DimensionError, IdenticalImagesError, ParameterError,
                     SolverFailure, StateError, UnsupportedCombinationError)
from .metrics import psnr
from .operators import (Circulant1D, Circulant2D, DenseOperator, Gradient2D, IdentityOperator,
                        LinearOperator, TightFrame, build_spectral_diagonal,
                        make_gaussian_kernel_1d, make_tight_frame)
from .oracle import solve_small
from .penalty import Penalty

__version__ = "0.1.0"
