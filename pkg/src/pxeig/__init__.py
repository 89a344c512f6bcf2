"""First eigenpair of the variable-exponent p(x)-Laplacian with Luxemburg norms."""

from .mesh import DomainSpec, Mesh, generate_mesh, refine, eval_basis
from .luxemburg import (ExponentField, SampledField, modular, luxemburg_norm,
                        norm_first_variation)
from .assembly import (FESpace, ScalarField, DualVector, sample, sample_gradient,
                       evaluate_R, evaluate_S, evaluate_J, grad_S, grad_J, el_residual)
from .eigensolver import (SolverConfig, EigenpairResult, SolverError,
                          helmholtz_first_eigenpair, inner_minimize, inverse_power,
                          continuation_solve)
from .comparison import quotient_mu, quotient_mubar, collapse_scan

__version__ = "0.1.0"
