"""Custom exceptions for the fuzzy route assignment system."""

from typing import List, Optional, Tuple


class FuzzyRoutingException(Exception):
    """Base exception for every error raised by this package."""
    pass


class FuzzyDomainException(FuzzyRoutingException, ValueError):
    """A crisp input lies outside the universe of its linguistic variable."""

    def __init__(self, variable: str, value: float, universe: Tuple[float, float]):
        self.variable = variable
        self.value = value
        self.universe = universe
        super().__init__(
            f"Value {value!r} is outside the universe [{universe[0]}, {universe[1]}] "
            f"of variable '{variable}'"
        )


class InvalidMembershipFunctionException(FuzzyRoutingException, ValueError):
    """A trapezoid, fuzzy set, variable or unit violates its construction invariants."""
    pass


class NoRuleFiredException(FuzzyRoutingException):
    """Every rule fired with strength zero, so no output set can be type-reduced."""
    pass


class HierarchyConstructionException(FuzzyRoutingException, ValueError):
    """The hierarchy wiring is not a single-rooted DAG over the six leaf features."""
    pass


class ParameterVectorException(FuzzyRoutingException, ValueError):
    """A parameter vector could not be flattened, bounded or decoded."""

    def __init__(self, message: str, report: Optional[List[str]] = None):
        self.report = list(report or [])
        if self.report:
            message = f"{message}: " + "; ".join(self.report)
        super().__init__(message)


class NetworkValidationException(FuzzyRoutingException, ValueError):
    """A road network violates its structural invariants."""
    pass


class ScenarioParseException(FuzzyRoutingException, ValueError):
    """Syntax error in a native scenario or SUMO file."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 path: Optional[str] = None):
        self.line = line
        self.column = column
        self.path = path
        location = ""
        if line is not None:
            location = f" (line {line}, column {column})"
        elif path:
            location = f" (at {path})"
        super().__init__(f"{message}{location}")


class ScenarioSemanticException(FuzzyRoutingException, ValueError):
    """A scenario references a node, edge or vehicle that does not exist or is duplicated."""

    def __init__(self, message: str, reference: Optional[str] = None):
        self.reference = reference
        super().__init__(message)
