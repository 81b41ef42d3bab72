"""Counterfactual regimes for spatial autoregressive models under network interdependence."""

from interdep.counterfact import (
    CounterfactualReport,
    SpilloverEntry,
    effect_li_own,
    effect_li_spillover,
    effect_nc,
    effect_pe,
    li_outcomes,
    report,
    spillovers,
)
from interdep.dgp import (
    AssignmentSpec,
    Population,
    StructuralParams,
    assign_confounded,
    assign_exogenous,
    draw_shocks,
    make_characteristics,
    simulate_population,
    solve_equilibrium,
)
from interdep.errors import (
    DomainError,
    ExperimentError,
    InputError,
    InterdepError,
    ModelError,
    NumericError,
    ParameterError,
)
from interdep.netgen import (
    InteractionMatrix,
    NetworkParams,
    UnitCharacteristics,
    build_weights,
    row_normalize,
    spectral_radius,
    stability_margin,
)
from interdep.sarfit import (
    EstimationResult,
    ImpliedEffects,
    concentrated_loglik,
    fit_ols,
    fit_sar_ml,
    implied_effects,
)

__version__ = "0.1.0"
