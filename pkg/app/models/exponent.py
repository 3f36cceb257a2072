import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, order=True)
class Exponent:
    """A Lebesgue exponent p in [1, inf], stored exactly as 1/p."""

    recip: Fraction

    def __post_init__(self):
        recip = Fraction(self.recip)
        if recip < 0 or recip > 1:
            raise ValueError(f"Exponent reciprocal must lie in [0, 1], got {recip}")
        object.__setattr__(self, "recip", recip)

    @classmethod
    def parse(cls, value: "Exponent | str | int | float | Fraction") -> "Exponent":
        if isinstance(value, Exponent):
            return value
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinity", "∞"):
                return cls(Fraction(0))
            p = Fraction(text)
        elif isinstance(value, float):
            if math.isinf(value):
                return cls(Fraction(0))
            p = Fraction(value).limit_denominator(10**6)
        else:
            p = Fraction(value)
        if p < 1:
            raise ValueError(f"Exponent must be >= 1, got {value}")
        return cls(1 / p)

    @property
    def conjugate(self) -> "Exponent":
        return Exponent(1 - self.recip)

    @property
    def is_infinite(self) -> bool:
        return self.recip == 0

    @property
    def value(self) -> float:
        return math.inf if self.is_infinite else float(1 / self.recip)

    def __str__(self) -> str:
        if self.is_infinite:
            return "inf"
        p = 1 / self.recip
        return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


@dataclass(frozen=True)
class SpaceParams:
    """Parameters (alpha, p, q, s) of a weighted alpha-modulation space."""

    alpha: float
    p: Exponent
    q: Exponent
    s: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "p", Exponent.parse(self.p))
        object.__setattr__(self, "q", Exponent.parse(self.q))

    def with_weight(self, s: float) -> "SpaceParams":
        return SpaceParams(self.alpha, self.p, self.q, s)
