"""The three counterfactual regimes and what identifying each one requires."""

REGIMES = [
    {
        "regime": "partial_equilibrium",
        "abbreviation": "PE",
        "what_varies": "outcome of unit i only",
        "held_fixed": "outcomes of all other units",
        "causal_object": "direct (own) effect",
        "required_exogeneity": "individual",
        "exogeneity_condition": "D_i independent of eps_i given X_i",
        "typical_interpretation": "standard regression coefficient",
        "estimand": "beta",
    },
    {
        "regime": "local_interaction",
        "abbreviation": "LI",
        "what_varies": "unit i and its direct neighbors",
        "held_fixed": "higher-order feedback",
        "causal_object": "first-order spillovers",
        "required_exogeneity": "local",
        "exogeneity_condition": "D_i independent of eps_j given X for all j with W_ji > 0",
        "typical_interpretation": "local spatial spillovers",
        "estimand": "beta * rho * W_ji",
    },
    {
        "regime": "network_consistent",
        "abbreviation": "NC",
        "what_varies": "all units through equilibrium",
        "held_fixed": "nothing",
        "causal_object": "total equilibrium effect",
        "required_exogeneity": "global",
        "exogeneity_condition": "D independent of eps given X",
        "typical_interpretation": "SAR impacts / spatial multipliers",
        "estimand": "beta * [(I - rho W)^-1]_ii",
    },
]


def regimes_document() -> dict:
    return {"schema": 1, "regimes": [dict(r) for r in REGIMES]}
