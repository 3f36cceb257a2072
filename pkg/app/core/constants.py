from enum import Enum


class ShapeKind(str, Enum):
    BALL = "ball"
    CUBE = "cube"
    ANNULUS = "annulus"
    BALL0 = "ball0"


class CoveringFamily(str, Enum):
    LATTICE_BALL = "lattice_ball"
    LATTICE_CUBE = "lattice_cube"
    DYADIC = "dyadic"
    METRIC = "metric"


class WindowForm(str, Enum):
    NORMALIZED_BUMP = "normalized_bump"
    PLATEAU = "plateau"
    DYADIC_DILATE = "dyadic_dilate"


class SignalKind(str, Enum):
    GAUSSIAN = "gaussian"
    BUMP_TRAIN = "bump_train"
    RANDOM_BANDLIMITED = "random_bandlimited"


class BumpMode(str, Enum):
    SCALED = "scaled"
    FIXED = "fixed"


class EmbeddingDirection(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class XiMode(str, Enum):
    CENTER = "center"
    RANDOM = "random"


class NormKind(str, Enum):
    ALPHA = "alpha"
    BESOV = "besov"
    SOBOLEV = "sobolev"


VALID_COVERING_FAMILIES = [family.value for family in CoveringFamily]
VALID_SIGNAL_KINDS = [kind.value for kind in SignalKind]

# Lebesgue exponents exercised by the index-algebra checks
EXPONENT_GRID = ["1", "4/3", "3/2", "2", "3", "4", "6", "8", "12", "24", "48", "96", "inf"]

# Exponent pairs at which the embedding proof states its endpoint estimates
ENDPOINT_PAIRS = [("2", "inf"), ("1", "1"), ("1", "inf"), ("inf", "1"), ("inf", "inf")]
