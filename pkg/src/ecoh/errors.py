"""Exception types raised across the package.

Each carries a short machine-readable ``code`` that the CLI maps to an exit status.
"""


class EcohError(ValueError):
    code = "error"


class DimensionLimitError(EcohError):
    code = "dimension limit"


class ShapeMismatchError(EcohError):
    code = "shape mismatch"


class DomainError(EcohError):
    code = "domain"


class BasisRequiredError(EcohError):
    code = "basis required"


class BlockShapeError(EcohError):
    code = "block shape"


class ResonanceError(EcohError):
    code = "resonance required"


class SupportRangeError(EcohError):
    code = "support exceeds battery"


class SupportExplosionError(EcohError):
    code = "support explosion"


class InvalidPrepartitionError(EcohError):
    code = "invalid prepartition"


class SchemaError(EcohError):
    code = "schema"
