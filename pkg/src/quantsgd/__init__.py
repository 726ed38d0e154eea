"""Quantized one-pass averaged SGD on high-dimensional least squares.

Simulation engine, exact risk decomposition, and closed-form excess-risk
bounds for SGD whose data, labels, parameters, activations and output
gradients pass through unbiased quantizers.
"""

from .bounds import (
    BoundInputs,
    BoundReport,
    Eps,
    baseline_r0,
    bound_additive,
    bound_general,
    bound_multiplicative,
    check_matching_conditions,
    d_eff_additive,
    d_eff_multiplicative,
    default_noise_bound,
    effective_dimension,
    eps_tilde,
    fp_int_preference,
    powerlaw_bound,
    sigma_a_sq,
    sigma_m_sq,
)
from .engine import (
    DivergenceError,
    MeanRisk,
    RunConfig,
    SiteQuantizers,
    SiteStreams,
    Trajectory,
    data_noise_diagonal,
    mean_risk,
    resolve_stepsize,
    run_trajectory,
    sgd_step,
)
from .harness import (
    emit_csv,
    expand_cells,
    load_config,
    read_csv,
    run_sweep,
    summarize,
)
from .quantizers import (
    QuantizerSpec,
    apply,
    apply_elementwise,
    apply_rows,
    error_second_moment,
    rounding_eps_equivalent,
)
from .risk import (
    QuantizedGeometry,
    RiskBreakdown,
    decomposition_terms,
    label_error_second_moment,
    quantized_geometry,
    r1_r2_monte_carlo,
    r3_closed_form,
    r4_closed_form,
)
from .spectrum import (
    ProblemSpec,
    constant_target,
    excess_risk,
    make_power_law_problem,
    power_law_eigenvalues,
    sample_batch,
)

__version__ = "0.1.0"
