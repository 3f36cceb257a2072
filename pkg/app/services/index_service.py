"""
Exact index algebra for embeddings between alpha-modulation scales.

All functions take `Exponent` values (or anything `Exponent.parse` accepts)
and return exact rationals.
"""
from fractions import Fraction

from app.models.exponent import Exponent


def _pair(p, q) -> tuple[Exponent, Exponent]:
    return Exponent.parse(p), Exponent.parse(q)


def theta1(p, q) -> Fraction:
    p, q = _pair(p, q)
    return max(Fraction(0), q.recip - min(p.recip, p.conjugate.recip))


def theta2(p, q) -> Fraction:
    p, q = _pair(p, q)
    return min(Fraction(0), q.recip - max(p.recip, p.conjugate.recip))


def nu1(p, q) -> Fraction:
    p, q = _pair(p, q)
    return theta1(p, q) + max(Fraction(0), q.recip - max(p.recip, p.conjugate.recip))


def nu2(p, q) -> Fraction:
    p, q = _pair(p, q)
    return theta2(p, q) + min(Fraction(0), q.recip - min(p.recip, p.conjugate.recip))


def grobner_gap(p, q) -> tuple[Fraction, Fraction]:
    """How much the older indices overshoot: (nu1 - theta1, theta2 - nu2), both >= 0."""
    return nu1(p, q) - theta1(p, q), theta2(p, q) - nu2(p, q)


def sharp_lower_threshold(p, q) -> Fraction:
    """min(0, 1/q - 1/p'): the index in the best weight t for M_{alpha1,s} into M_{alpha2,t}."""
    p, q = _pair(p, q)
    return min(Fraction(0), q.recip - p.conjugate.recip)


def weight_shift(d: int, alpha1: float, alpha2: float, theta: Fraction | float) -> float:
    """d (alpha2 - alpha1) theta."""
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")
    if not 0.0 <= alpha1 <= 1.0 or not 0.0 <= alpha2 <= 1.0:
        raise ValueError(f"alpha values must lie in [0, 1], got ({alpha1}, {alpha2})")
    if alpha1 > alpha2:
        raise ValueError(f"weight_shift needs alpha1 <= alpha2, got ({alpha1}, {alpha2})")
    return d * (alpha2 - alpha1) * float(theta)
