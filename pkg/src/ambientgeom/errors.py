"""Exception hierarchy."""


class GeometryError(Exception):
    """Base class for all errors raised by the package."""


class ExpressionError(GeometryError):
    """Malformed expression source; carries a 1-based line and column."""

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name, line=None, column=None, source=None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", line, column, source)


class DomainError(GeometryError):
    """A field could not be evaluated (pole, log of a non-positive value, ...)."""

    def __init__(self, message, where=None, subexpression=None):
        self.where = where
        self.subexpression = subexpression
        text = message
        if subexpression is not None:
            text += f" in {subexpression!r}"
        if where is not None:
            text += f" (sample index {where})"
        super().__init__(text)


class SingularMatrixError(GeometryError):
    def __init__(self, message, where=None):
        self.where = where
        text = message if where is None else f"{message} (sample index {where})"
        super().__init__(text)


class SingularMetricError(SingularMatrixError):
    pass


class ChartError(GeometryError):
    """Point outside a chart, inconsistent dimensions, bad chart data."""


class DimensionError(GeometryError):
    pass


class DegeneratePlaneError(GeometryError):
    pass


class SignatureError(GeometryError):
    pass


class HypothesisViolation(GeometryError):
    """A theorem hypothesis failed at sampled points."""

    def __init__(self, message, defect, witness):
        self.defect = float(defect)
        self.witness = None if witness is None else tuple(float(c) for c in witness)
        super().__init__(f"{message}: worst defect {self.defect:.3e} at {self.witness}")


class PositivityBandError(HypothesisViolation):
    pass


class ScenarioError(GeometryError):
    """Invalid scenario file; ``key_path`` locates the offending entry."""

    def __init__(self, message, key_path=""):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)
