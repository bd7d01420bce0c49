"""Space-time Petrov-Galerkin spectral solver for linear fractional PDEs.

The solved equation carries two-sided Riemann-Liouville derivatives with
constant coefficients on a (1+d)-dimensional hypercube with homogeneous
Dirichlet initial/boundary data.  Subpackages:

- ``specfun``      Jacobi/Legendre polynomials and the gamma function
- ``quadrature``   Gauss-Jacobi rules (Golub-Welsch) with caching
- ``fraccalc``     analytic fractional derivatives + brute-force oracle
- ``pg_assembly``  bases, 1-D operator matrices, load vectors
- ``solver``       Kronecker global system, direct and Sylvester solves
- ``manufactured`` exact solutions and analytically derived forcings
- ``analysis``     error norms, convergence sweeps, discrete inf-sup
- ``cli``          config-driven command line front end
"""

from .fraccalc import BasisKind, FracOrder, Side
from .manufactured import CaseKind, ManufacturedCase, case_i, case_ii
from .pg_assembly import ProblemSpec, Resolution
from .solver import SpectralSolution

__all__ = [
    "BasisKind",
    "FracOrder",
    "Side",
    "CaseKind",
    "ManufacturedCase",
    "case_i",
    "case_ii",
    "ProblemSpec",
    "Resolution",
    "SpectralSolution",
]

__version__ = "0.1.0"
