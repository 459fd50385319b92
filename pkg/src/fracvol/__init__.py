"""Constrained fractional stochastic volatility simulation and pricing."""

from .coefficients import (
    CallableCoefficients,
    ConstantXi,
    ModelCoefficients,
    SingularXi,
    eval_mu,
    eval_sigma,
    xi_inverse_cdf,
    xi_normalizer,
    xi_sample,
)
from .fbm import (
    CirculantEmbeddingError,
    FbmConfig,
    cholesky_sample,
    fbm_cov,
    fgn_autocov,
    p_variation,
    sample_paths,
    wood_chan_sample,
)
from .grids import SamplePath, TimeGrid
from .market import (
    MarketParams,
    ViabilityBreachError,
    discount_factor,
    riskfree_price,
    simulate_prices,
    stochastic_exponential,
    theta,
    vol_from_state,
)
from .pricing import (
    Basket,
    BreachRateError,
    Call,
    MCConfig,
    MCResult,
    Put,
    agreement_zscore,
    bs_reference_price,
    payoff_values,
    physical_terminal_sample,
    price_physical_weighted,
    price_riskneutral,
    simulate_scenario_paths,
)
from .rde import SolveConfig, convergence_probe, euler_solve, project_polyhedron
from .rng import NormalStream, RandomSource, stream_key
from .scenario import (
    Scenario,
    ScenarioError,
    constant_vol_scenario,
    load_scenario,
    parse_scenario,
    scenario_to_dict,
    section4_scenario,
)
from .viability import (
    ConditionReport,
    HalfSpace,
    Polyhedron,
    chebyshev_center,
    check_viability_conditions,
    contains,
    default_box,
    normal_cone_generators,
    path_viability_margin,
    shifted_polyhedron,
    slack,
)
from .volterra import (
    HypergeometricError,
    KernelMatrix,
    build_kernel_matrix,
    du_transform,
    hyp2f1,
    kernel_K,
    transform_increments,
)

__version__ = "0.1.0"
