"""BLEND: black-box logarithmic-expansion numerical differentiation.

Derivatives of functions available only through point evaluations, via the
truncated logarithmic series of the shift operator: collapsed finite-difference
stencils of any order, certified truncation bounds with step-size planning, a
stabilization-driven adaptive driver, directional derivatives at
dimension-independent cost, and a finite tandem-queue model as the flagship
black-box application.
"""

from .blend_driver import (
    BlendConfig,
    BlendReport,
    DirectionSpec,
    agreed_significant_digits,
    directional_oracle,
    round_to_digits,
    run_blend,
)
from .bounds_planner import (
    BOUND_FORMULAS,
    GrowthEnvelope,
    RemainderEstimate,
    StepPlan,
    h_domain,
    operator_power_bound,
    remainder_bound,
    solve_k_exact_h,
)
from .models import (
    CATALOG,
    AnalyticTestFunction,
    SingularGeneratorError,
    StationaryDistribution,
    TandemQueueModel,
    blocking_probability,
    build_generator,
    exp_density,
    exp_density_operator_power_closed_form,
    quadratic_form,
    queue_sensitivity_oracle,
    solve_stationary,
)
from .oracle import FunctionOracle, OracleEvaluationError
from .series_core import (
    ORDER_CAP,
    OperatorPowerResult,
    OrderCapError,
    PartialSumTrace,
    StencilWeights,
    binomial,
    blend_partial_sums,
    compensated_dot,
    delta_from_cache,
    operator_power,
    stencil_weights,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticTestFunction",
    "BlendConfig",
    "BlendReport",
    "BOUND_FORMULAS",
    "CATALOG",
    "DirectionSpec",
    "FunctionOracle",
    "GrowthEnvelope",
    "OperatorPowerResult",
    "OracleEvaluationError",
    "OrderCapError",
    "ORDER_CAP",
    "PartialSumTrace",
    "RemainderEstimate",
    "SingularGeneratorError",
    "StationaryDistribution",
    "StencilWeights",
    "StepPlan",
    "TandemQueueModel",
    "agreed_significant_digits",
    "binomial",
    "blend_partial_sums",
    "blocking_probability",
    "build_generator",
    "compensated_dot",
    "delta_from_cache",
    "directional_oracle",
    "exp_density",
    "exp_density_operator_power_closed_form",
    "h_domain",
    "operator_power",
    "operator_power_bound",
    "quadratic_form",
    "queue_sensitivity_oracle",
    "remainder_bound",
    "round_to_digits",
    "run_blend",
    "solve_k_exact_h",
    "solve_stationary",
    "stencil_weights",
]
