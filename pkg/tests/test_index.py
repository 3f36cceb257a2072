from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.constants import ENDPOINT_PAIRS, EXPONENT_GRID
from app.models.exponent import Exponent, SpaceParams
from app.services.experiment_service import ENDPOINT_SHIFTS, corollary_region_check
from app.services.index_service import (
    grobner_gap,
    nu1,
    nu2,
    sharp_lower_threshold,
    theta1,
    theta2,
    weight_shift,
)

exponents = st.sampled_from(EXPONENT_GRID)


def test_exponent_parsing():
    assert Exponent.parse("inf").is_infinite
    assert Exponent.parse(float("inf")).is_infinite
    assert Exponent.parse("4/3").conjugate == Exponent.parse(4)
    assert Exponent.parse(2).conjugate == Exponent.parse("2")
    assert str(Exponent.parse("3/2")) == "3/2"
    assert str(Exponent.parse("inf")) == "inf"
    assert Exponent.parse(1.5) == Exponent.parse("3/2")


@pytest.mark.parametrize("value", ["1/2", 0, 0.5, "-3"])
def test_exponent_below_one_is_rejected(value):
    with pytest.raises(ValueError):
        Exponent.parse(value)


def test_space_params_validate_alpha():
    with pytest.raises(ValueError):
        SpaceParams(1.5, "2", "2")
    params = SpaceParams(0.5, "2", "inf", 1.0)
    assert params.q.is_infinite
    assert params.with_weight(2.0).s == 2.0


@given(p=exponents, q=exponents)
def test_theta_signs(p, q):
    assert theta1(p, q) >= 0
    assert theta2(p, q) <= 0


@given(p=exponents, q=exponents)
def test_theta_duality(p, q):
    p_, q_ = Exponent.parse(p), Exponent.parse(q)
    assert theta1(p_, q_) == -theta2(p_.conjugate, q_.conjugate)


@given(p=exponents, q=exponents)
def test_nu_indices_are_never_better(p, q):
    upper, lower = grobner_gap(p, q)
    assert upper >= 0 and lower >= 0
    assert nu1(p, q) >= theta1(p, q)
    assert nu2(p, q) <= theta2(p, q)


@given(p=exponents, q=exponents)
def test_indices_are_exact(p, q):
    for value in (theta1(p, q), theta2(p, q), nu1(p, q), nu2(p, q), sharp_lower_threshold(p, q)):
        assert isinstance(value, Fraction)


def test_known_values():
    assert theta1("2", "2") == 0
    assert theta2("2", "2") == 0
    assert theta1("1", "1") == 1
    assert theta2("2", "inf") == Fraction(-1, 2)
    assert sharp_lower_threshold("2", "inf") == Fraction(-1, 2)
    assert sharp_lower_threshold("1", "1") == 0
    assert nu2("2", "inf") == Fraction(-1)


@pytest.mark.parametrize("p,q", ENDPOINT_PAIRS)
def test_endpoint_shifts_match_theta2(p, q):
    assert ENDPOINT_SHIFTS[(p, q)] == theta2(p, q)


def test_weight_shift():
    assert weight_shift(2, 0.0, 0.5, Fraction(-1, 2)) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        weight_shift(1, 0.5, 0.0, Fraction(1))
    with pytest.raises(ValueError):
        weight_shift(0, 0.0, 0.5, Fraction(1))


@pytest.mark.parametrize("p,q,upper,lower", [
    ("2", "2", True, True),
    ("1", "inf", False, True),
    ("inf", "1", True, False),
    ("1", "1", True, True),
])
def test_corollary_regions(p, q, upper, lower):
    region = corollary_region_check(p, q)
    assert region.sharp_upper_applies is upper
    assert region.sharp_lower_applies is lower
