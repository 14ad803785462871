"""Desk-scale laboratory for Ornstein-Uhlenbeck measure diffusions on
Wasserstein space: Gaussian mode spectra, discrete optimal transport, the
intrinsic-derivative calculus of cylindrical functions, Dirichlet-form
energies, and exact simulation of the induced measure-valued process."""

from .calculus import (CylindricalFunction, FUNCTION_CATALOG, c1_clamp,
                       c1_clamp_slope, chain_rule_residual, clamped_tail_mass,
                       directional_derivative_fd, gradient_dual_norms,
                       intrinsic_pairing, make_cylindrical, named_function,
                       tail_penalty)
from .forms import (CoefficientField, MCEstimate, diagonal_coefficients,
                    energy_bound_check, form_energy_mc, form_energy_pair_mc,
                    galerkin_eig_compare, identity_coefficients,
                    rank_one_coefficients, square_field)
from .lifted import (CoefficientFunctional, ConstantFunctional,
                     HermiteModeFunctional, LiftedCylindrical, lift,
                     pushed_measure, sample_coefficients)
from .measures import (BaseMeasure, DiscreteMeasure, EigenBasis, TangentVector,
                       eigenbasis_cosine, load_measure_csv, make_base_measure,
                       pushforward, sample_gaussian_tangent, save_measure_csv,
                       tangent_norm)
from .process import (OUPathSample, generator_residual, ibp_check,
                      ibp_check_many,
                      reference_invariance_check, sample_invariant,
                      semigroup_eigen_check, simulate_path)
from .spectral import (Spectrum, heat_kernel_sq_bound, hermite_eigenfunction,
                       lowest_generator_eigenvalues, make_spectrum,
                       mode_trace_bound, mode_trace_exact, ou_transition)
from .wasserstein import Coupling, SinkhornResult, w1d, w_exact, w_sinkhorn

__version__ = "0.1.0"
