"""Transport exponents of random polymer chains.

Jacobi operators with random polymer disorder: transfer matrices and critical
energies, Lyapunov exponents, Green's functions and resolvent bounds,
time-averaged position moments with their diffusion exponents, and the
integrated density of states.
"""
from ._backend import BACKEND
from .model import (JacobiWindow, PolymerSpec, Realization, SpecError, anderson_spec,
                    build_spec, dimer_spec, materialize, sample_realization)
from .transfer import (check_degeneracy, cocycle, commutator_growth, find_critical_energies,
                       polymer_matrix, rotation_angles)
from .lyapunov import corollary_expectation, event_probability, fit_D, lyapunov
from .green import (check_combes_thomas, check_cramer, check_transfer_green_bounds,
                    green_column, halfline_green)
from .moments import (decomposition_scan, fit_exponents, moments_green, moments_spectral,
                      partial_moments, predicted_beta)
from .ids import (MeasureApprox, borel_transform, check_borel_bounds, ids_curve,
                  ids_slope_at_critical)

__version__ = "0.1.0"
