from app.fuzzy.hierarchy import (
    CandidateFeatures,
    Hierarchy,
    HierarchySpec,
    ParameterVector,
    apply_parameters,
    build_hierarchy,
    default_hierarchy,
    degenerate_to_t1,
    evaluate_preference,
    flatten_parameters,
)
from app.fuzzy.inference import (
    FuzzyLogicUnit,
    defuzzify,
    evaluate_unit,
    fire_rule,
    infer,
    km_type_reduce,
)
from app.fuzzy.sets import FiringInterval, IT2FuzzySet, LinguisticVariable, Trapezoid, membership_interval

__all__ = [
    "CandidateFeatures",
    "FiringInterval",
    "FuzzyLogicUnit",
    "Hierarchy",
    "HierarchySpec",
    "IT2FuzzySet",
    "LinguisticVariable",
    "ParameterVector",
    "Trapezoid",
    "apply_parameters",
    "build_hierarchy",
    "default_hierarchy",
    "defuzzify",
    "degenerate_to_t1",
    "evaluate_preference",
    "evaluate_unit",
    "fire_rule",
    "flatten_parameters",
    "infer",
    "km_type_reduce",
    "membership_interval",
]
