"""Numerical free probability on the real line.

Cauchy transforms, semicircular free convolution and the free
Ornstein-Uhlenbeck flow, free entropy and Fisher information, quantile
Wasserstein distances, a random-matrix oracle and a verification harness.
"""

from .cauchy import (BoundaryTransform, InversionError, boundary_transform, cauchy_smooth,
                     cauchy_transform, hilbert_density, stieltjes_invert)
from .freeconv import (ConvergenceError, FlowState, burgers_characteristics, burgers_residual,
                       flow_transform, free_convolution, free_convolve_semicircle, ou_flow,
                       solve_subordination, support_edges)
from .functionals import (FunctionalReport, QuadratureWarning, chi, i_ou, log_energy, phi,
                          report, sigma_tilde)
from .measure import (AtomicMeasure, GridMeasure, MeasureError, QuantileTable, atoms, cdf,
                      dilate, grid_measure, measure_from_spec, mix, moment, quantile,
                      quantile_table, semicircle, shift, uniform, variance)
from .records import VerificationRecord
from .transport import (brute_force_w, metric_axiom_suite, monotone_map, optimal_coupling,
                        transport_equation_residual, wasserstein)
from .verify import CHECKS, run_check

__version__ = "0.1.0"
