"""Default linguistic variables and rule bases of the five-unit preference controller."""

from typing import Dict, Iterable, List, Sequence, Tuple

from app.fuzzy.inference import FuzzyLogicUnit
from app.fuzzy.sets import IT2FuzzySet, LinguisticVariable

LEAF_FEATURES: Tuple[str, ...] = (
    "density",
    "max_speed_norm",
    "familiarity",
    "usual_speed",
    "departure_time",
    "weather",
)

DEFAULT_H_LMF = 0.9
DEFAULT_INSET = 0.1

# UMF breakpoints of three sets at the thirds of [0, 1], scaled to each universe.
THIRDS_TEMPLATE = (
    (0.0, 0.0, 0.25, 0.45),
    (0.25, 0.45, 0.55, 0.75),
    (0.55, 0.75, 1.0, 1.0),
)

PREFERENCE_LABELS = ("Weak", "Medium", "Strong")

# Table of the Path unit, keyed (density label, max speed label).
PATH_RULES: Dict[Tuple[str, str], str] = {
    ("Synchronized", "Free"): "Medium",
    ("Synchronized", "Synchronized"): "Weak",
    ("Synchronized", "Jam"): "Weak",
    ("Free", "Synchronized"): "Strong",
    ("Free", "Jam"): "Medium",
    ("Jam", "Synchronized"): "Weak",
    ("Jam", "Free"): "Weak",
    ("Jam", "Jam"): "Weak",
    ("Free", "Free"): "Strong",
}

# unit -> (input slot 1 source, input slot 2 source)
DEFAULT_WIRING: Dict[str, Tuple[str, str]] = {
    "Path": ("density", "max_speed_norm"),
    "Driver": ("familiarity", "usual_speed"),
    "Environment": ("departure_time", "weather"),
    "PD": ("Path", "Driver"),
    "PDE": ("PD", "Environment"),
}


def thirds_sets(labels: Sequence[str], lo: float, hi: float,
                h_lmf: float = DEFAULT_H_LMF, inset: float = DEFAULT_INSET) -> Tuple[IT2FuzzySet, ...]:
    """Three IT2 sets laid out on the thirds template of [lo, hi], listed low to high."""
    span = hi - lo
    return tuple(
        IT2FuzzySet.from_encoding(label, tuple(lo + span * p for p in points), h_lmf, inset)
        for label, points in zip(labels, THIRDS_TEMPLATE)
    )


def preference_variable(name: str) -> LinguisticVariable:
    return LinguisticVariable(name, 0.0, 1.0, thirds_sets(PREFERENCE_LABELS, 0.0, 1.0))


def leaf_variables() -> Dict[str, LinguisticVariable]:
    """The six crisp input variables with their default partitions."""
    departure_sets = (
        IT2FuzzySet.from_encoding("Night", (0.0, 0.0, 5.0, 7.0), DEFAULT_H_LMF, DEFAULT_INSET),
        IT2FuzzySet.from_encoding("Peak", (6.0, 8.0, 17.0, 19.0), DEFAULT_H_LMF, DEFAULT_INSET),
        IT2FuzzySet.from_encoding("Evening", (17.0, 19.0, 24.0, 24.0), DEFAULT_H_LMF, DEFAULT_INSET),
    )
    return {
        "density": LinguisticVariable(
            "density", 0.0, 0.15, thirds_sets(("Free", "Synchronized", "Jam"), 0.0, 0.15), "veh/m"
        ),
        "max_speed_norm": LinguisticVariable(
            "max_speed_norm", 0.0, 1.0, thirds_sets(("Jam", "Synchronized", "Free"), 0.0, 1.0)
        ),
        "familiarity": LinguisticVariable(
            "familiarity", 0.0, 1.0, thirds_sets(("Low", "Medium", "High"), 0.0, 1.0)
        ),
        "usual_speed": LinguisticVariable(
            "usual_speed", 0.0, 40.0, thirds_sets(("Slow", "Normal", "Fast"), 0.0, 40.0), "m/s"
        ),
        "departure_time": LinguisticVariable("departure_time", 0.0, 24.0, departure_sets, "h"),
        "weather": LinguisticVariable(
            "weather", 0.0, 1.0, thirds_sets(("Clear", "Moderate", "Severe"), 0.0, 1.0)
        ),
    }


# How favorable each label is for choosing a road (0 worst, 2 best).
FAVORABILITY: Dict[str, Dict[str, int]] = {
    "familiarity": {"Low": 0, "Medium": 1, "High": 2},
    "usual_speed": {"Slow": 0, "Normal": 1, "Fast": 2},
    "departure_time": {"Peak": 0, "Evening": 1, "Night": 2},
    "weather": {"Severe": 0, "Moderate": 1, "Clear": 2},
    "preference": {"Weak": 0, "Medium": 1, "Strong": 2},
}


def monotone_rules(labels1: Iterable[str], ranks1: Dict[str, int],
                   labels2: Iterable[str], ranks2: Dict[str, int]) -> Dict[Tuple[str, str], str]:
    """
    Rule table driven by the summed favorability of both antecedents.

    Rank sums 0-1 give Weak, 2 gives Medium and 3-4 give Strong, so both
    inputs high fire Strong, both low fire Weak and a high/low mix fires Medium.
    """
    labels2 = list(labels2)
    rules = {}
    for l1 in labels1:
        for l2 in labels2:
            total = ranks1[l1] + ranks2[l2]
            rules[(l1, l2)] = "Weak" if total <= 1 else ("Medium" if total == 2 else "Strong")
    return rules


def leading_rules(labels1: Iterable[str], ranks1: Dict[str, int],
                  labels2: Iterable[str], ranks2: Dict[str, int], weight: int = 2) -> Dict[Tuple[str, str], str]:
    """
    Rule table led by the first antecedent: the consequent is the rounded
    weighted mean rank, with the first input counting `weight` times.

    Both inputs high still fire Strong, both low Weak and a Weak/Strong pair
    Medium, but a Medium first input is not lifted by a Strong second one.
    """
    labels2 = list(labels2)
    rules = {}
    for l1 in labels1:
        for l2 in labels2:
            rank = round((weight * ranks1[l1] + ranks2[l2]) / (weight + 1))
            rules[(l1, l2)] = PREFERENCE_LABELS[rank]
    return rules


def default_units(resolution: int = 201) -> List[FuzzyLogicUnit]:
    """Path, Driver, Environment, PD and PDE units in declaration order."""
    leaves = leaf_variables()
    pref = FAVORABILITY["preference"]

    def unit(name, v1, ranks1, v2, ranks2, rules=None):
        table = rules or monotone_rules(v1.labels, ranks1, v2.labels, ranks2)
        return FuzzyLogicUnit(name, v1, v2, preference_variable(f"{name.lower()}_preference"), table, resolution)

    return [
        unit("Path", leaves["density"], {}, leaves["max_speed_norm"], {}, rules=dict(PATH_RULES)),
        unit("Driver", leaves["familiarity"], FAVORABILITY["familiarity"],
             leaves["usual_speed"], FAVORABILITY["usual_speed"]),
        unit("Environment", leaves["departure_time"], FAVORABILITY["departure_time"],
             leaves["weather"], FAVORABILITY["weather"]),
        unit("PD", preference_variable("path_preference"), pref, preference_variable("driver_preference"), pref,
             rules=leading_rules(PREFERENCE_LABELS, pref, PREFERENCE_LABELS, pref)),
        unit("PDE", preference_variable("pd_preference"), pref, preference_variable("environment_preference"), pref,
             rules=leading_rules(PREFERENCE_LABELS, pref, PREFERENCE_LABELS, pref)),
    ]
