"""Dilogarithm and trilogarithm against a frozen high-precision table.

Reference values were produced with mpmath at 40 digits (polylog(s, x) and
zeta(3)) and are frozen here so the suite needs no oracle at run time.  The
points bracket both regime boundaries (-0.5 and -2) from each side.
"""

import math

import pytest

from statsurf.errors import PolylogDomainError
from statsurf.polylog import ZETA3, li2, li3

TABLE = [
    (-1e-8, -9.999999975000000111e-9, -9.999999987500000037e-9),
    (-0.1, -0.09760523522932158384, -0.09878555018070006561),
    (-0.3, -0.2800743337595829042, -0.2896400341418309794),
    (-0.49999999, -0.4484141988143440259, -0.4725978356906127276),
    (-0.5, -0.4484142069236462024, -0.4725978446588968746),
    (-0.50000001, -0.4484142150329483502, -0.4725978536271810045),
    (-0.7, -0.605158402337705284, -0.6486663212852354935),
    (-1.0, -0.8224670334241132182, -0.901542677369695714),
    (-1.5, -1.147380660375570754, -1.297837450156250148),
    (-1.99999999, -1.436746361390619498, -1.668283356782839373),
    (-2.0, -1.436746366883680946, -1.668283363966571212),
    (-2.00000001, -1.436746372376742384, -1.668283371150303042),
    (-3.0, -1.939375420766708953, -2.348790554584076558),
    (-10.0, -4.198277886858103858, -5.921064803756973491),
    (-1000.0, -25.50247581388996883, -66.30012385080927042),
    (-1e8, -171.3056735921569628, -1072.056244554522191),
]


@pytest.mark.parametrize("x,ref2,ref3", TABLE)
def test_against_reference_table(x, ref2, ref3):
    assert li2(x) == pytest.approx(ref2, rel=2e-15, abs=1e-300)
    assert li3(x) == pytest.approx(ref3, rel=2e-15, abs=1e-300)


def test_special_values():
    assert li2(0.0) == 0.0
    assert li3(0.0) == 0.0
    assert li2(-1.0) == pytest.approx(-math.pi**2 / 12.0, rel=1e-15)
    assert li3(-1.0) == pytest.approx(-0.75 * ZETA3, rel=1e-15)
    assert ZETA3 == pytest.approx(1.202056903159594285, rel=1e-15)


def test_regime_boundaries_are_continuous():
    for edge in (-0.5, -2.0):
        lo = li2(edge * (1.0 + 1e-12))
        hi = li2(edge * (1.0 - 1e-12))
        assert lo == pytest.approx(hi, rel=1e-10)
        lo = li3(edge * (1.0 + 1e-12))
        hi = li3(edge * (1.0 - 1e-12))
        assert lo == pytest.approx(hi, rel=1e-10)


def test_derivative_relations():
    # x li2'(x) = -ln(1 - x) and x li3'(x) = li2(x)
    eps = 1e-6
    for x in (-0.2, -0.8, -1.4, -3.5, -20.0):
        h = eps * abs(x)
        d2 = (li2(x + h) - li2(x - h)) / (2 * h)
        assert x * d2 == pytest.approx(-math.log1p(-x), rel=1e-8)
        d3 = (li3(x + h) - li3(x - h)) / (2 * h)
        assert x * d3 == pytest.approx(li2(x), rel=1e-8)


def test_monotone_decreasing_on_half_line():
    xs = [-1e-6, -0.01, -0.3, -0.6, -1.0, -1.9, -2.1, -8.0, -1e4]
    for fn in (li2, li3):
        vals = [fn(x) for x in xs]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_domain_errors():
    for fn in (li2, li3):
        with pytest.raises(PolylogDomainError):
            fn(0.5)
        with pytest.raises(PolylogDomainError):
            fn(float("nan"))
        with pytest.raises(PolylogDomainError):
            fn(float("-inf"))
