"""Locally constant SL(2,R) cocycles over the Bernoulli shift.

Exact cylinder arithmetic, log-scaled matrix products, weighted modulus
norms, induced (first-return) cocycles, and Lyapunov exponent estimators.
"""

from .errors import (AmbiguousBranch, CapExceeded, ClassSearchTimeout, CocycleLabError,
                     ConfigError, InvariantViolation, NonDiagonal, Unsupported)
from .shift_space import (AtLeast, Cylinder, LazyPoint, MetricParams, cylinder_measure,
                          first_disagreement, make_wk, make_zk, return_times, rho_distance,
                          shifted_disjointness, symbol_count)
from .mat2 import (Mat2, RowScaledProduct, ScaledProduct, diagonal, op_norm, rotation,
                   scaled_mul, scaled_product, shear_lower)
from .cocycles import (LocallyConstantCocycle, build_a_sigma_1, build_a_sigma_eta, build_bk,
                       build_lk, exchange_check, fiber_bunching_margin, iterate, lk_params)
from .norms import (ModulusSpec, NormDistance, analytic_bk_bound, analytic_lk_cases,
                    diff_map, norm_distance, seminorm_bruteforce, seminorm_exact,
                    seminorm_sampled, weight, weight_chain_check)
from .induction import (abramov_check, cj_decay, even_return_diagonal, excursions,
                        induced_products, kac_birkhoff)
from .exponents import (ExponentEstimate, lyap_bottom_mc, lyap_diag_closed_form,
                        lyap_induced, lyap_top_mc)

__version__ = "0.1.0"
