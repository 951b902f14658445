"""hyperdecay: a numerical laboratory for two hyperbolic relaxation models
with regularity-loss decay.

The package builds the model coefficient matrices, verifies their structural
conditions, measures spectral abscissae and dissipativity types, constructs
and certifies the explicit compensating matrices, assembles the frequency-
weighted Lyapunov certificates, reproduces the pointwise and Sobolev decay
estimates by exact Fourier-mode evolution, and evaluates the weight-exponent
ledgers of the alternative approach.
"""

from .sysmodel import (
    ModelParamsI,
    ModelParamsII,
    RelaxationSystem,
    build_model_one,
    build_model_two,
    check_condition_a,
    check_condition_a0,
    decompose_sym_asym,
    kernel_projections,
)
from .spectral import (
    FrequencyGrid,
    default_grid,
    eigenvalues_at,
    fit_decay_type,
    mode_matrix,
    spectral_abscissa_curve,
    verify_type_bound,
)
from .compensator import (
    check_condition_k,
    check_condition_s,
    model1_compensators,
    model2_compensators,
    tune_deltas,
    verify_coercivity,
)
from .lyapunov import lyapunov_matrix, pointwise_certificate
from .evolve import (
    InitialDataSpec,
    decay_report,
    pointwise_envelope_check,
    propagate_mode,
    sobolev_norm,
)
from .exponents import (
    alt_dissipation_check,
    lambda_from_exponents,
    model1_best_exponents,
    model2_best_exponents,
    reconcile_rates,
)

__version__ = "0.1.0"
