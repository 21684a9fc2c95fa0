import math

import pytest

from rotor_annulus.core import (
    Integrals,
    Mode,
    PhysicalParams,
    RescaledVelocity,
    require_valid,
    rescale,
    unrescale,
    validate_params,
)
from rotor_annulus.errors import ConfigError


def test_valid_double_rotor():
    p = PhysicalParams(0.5, 1.0, 1.0)
    assert validate_params(p, Integrals(0.0, 1.0, 8.0)) == []


def test_empty_circle_reported():
    p = PhysicalParams(0.5, 1.0, 1.0)
    report = validate_params(p, Integrals(3.0, 1.0, 8.0))
    assert len(report) == 1 and "empty velocity circle" in report[0]


def test_radius_out_of_range():
    report = validate_params(PhysicalParams(1.2, 1.0, 1.0))
    assert any("R must lie in (0, 1)" in r for r in report)


def test_missing_fields():
    assert any("eta2" in r for r in validate_params(PhysicalParams(0.5, 1.0)))
    p = PhysicalParams(0.5, 1.0, 1.0)
    assert any(r.startswith("F") for r in validate_params(p, Integrals(0.0, 1.0)))
    with pytest.raises(ConfigError):
        require_valid(p, Integrals(0.0, 1.0, 0.5))


def test_normal_speeds_required():
    p = PhysicalParams(0.5, 1.0, mode=Mode.TWO_PARTICLE)
    report = validate_params(p, Integrals(0.0, 1.0, vn_fixed=1.0))
    assert any("un_fixed" in r for r in report)


def test_rescale_examples():
    p = PhysicalParams(0.5, 4.0, 1.0)
    assert rescale(0.0, 2.0, 0.0, 0.0, p).x == pytest.approx(1.0)
    assert rescale(0.0, 0.0, -3.0, 0.0, p).y == pytest.approx(-3.0)
    assert rescale(0.0, 0.0, 0.0, 0.0, p) == RescaledVelocity(0.0, 0.0, 0.0, 0.0)


def test_rescale_roundtrip_and_integrals():
    p = PhysicalParams(0.5, 1.3, 2.7)
    v = rescale(0.4, -1.1, 0.6, 0.9, p)
    assert unrescale(v, p) == pytest.approx((0.4, -1.1, 0.6, 0.9))
    N, E, F = v.integrals(p)
    assert N == pytest.approx(math.sqrt(1.3) * v.x + math.sqrt(2.7) * v.y + v.z)
    assert F - E == pytest.approx(v.x**2 * (1 / 0.25 - 1) + 0.81)
