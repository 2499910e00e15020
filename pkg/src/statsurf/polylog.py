"""Dilogarithm and trilogarithm on the half-line x <= 0.

Three regimes: the defining power series for |x| <= 1/2, the inversion
identities for x < -2, and a Taylor expansion of Li_s(-e^t) about t = 0 in
between (radius pi, worst argument |t| = ln 2).  The band coefficients are
built once from exact Bernoulli numbers through the tanh expansion of the
logistic function, then integrated termwise twice.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import PolylogDomainError


def _bernoulli(count: int) -> list[Fraction]:
    """B_0 .. B_{count-1}, exact."""
    B: list[Fraction] = []
    for k in range(count):
        if k == 0:
            B.append(Fraction(1))
            continue
        acc = Fraction(0)
        for j in range(k):
            acc += math.comb(k + 1, j) * B[j]
        B.append(-acc / (k + 1))
    return B


def _zeta3() -> float:
    """Apery-style alternating series, terms shrink like 4^-k."""
    acc = Fraction(0)
    for k in range(1, 40):
        term = Fraction((-1) ** (k - 1), k**3 * math.comb(2 * k, k))
        acc += term
    return float(Fraction(5, 2) * acc)


ZETA3 = _zeta3()

_PI2_6 = math.pi**2 / 6.0
_LI2_M1 = -math.pi**2 / 12.0
_LI3_M1 = -0.75 * ZETA3

_BAND_TERMS = 24


def _band_coefficients() -> tuple[list[float], list[float]]:
    """Taylor coefficients of Li_2(-e^t) and Li_3(-e^t) about t = 0.

    d/dt Li_s(-e^t) = Li_{s-1}(-e^t) and Li_1(-e^t) = -ln(1 + e^t), whose
    derivative is the negative logistic 1/2 + (1/2) tanh(t/2).
    """
    B = _bernoulli(2 * _BAND_TERMS + 2)
    # logistic sigma(t) = 1/2 + sum_k c_{2k-1} t^(2k-1),
    # c_{2k-1} = (2^(2k) - 1) B_{2k} / (2k)!
    sigma = [Fraction(0)] * (2 * _BAND_TERMS + 1)
    sigma[0] = Fraction(1, 2)
    for k in range(1, _BAND_TERMS + 1):
        sigma[2 * k - 1] = (2 ** (2 * k) - 1) * B[2 * k] / math.factorial(2 * k)

    def integrate(coefs: list[Fraction], constant: Fraction) -> list[Fraction]:
        out = [constant] + [c / (i + 1) for i, c in enumerate(coefs)]
        return out

    # Li_1(-e^t) = -ln 2 - integral of sigma; the constant -ln 2 is attached
    # numerically below because it is irrational.
    li1_tail = integrate([-c for c in sigma], Fraction(0))
    li2_tail = integrate(li1_tail, Fraction(0))
    li3_tail = integrate(li2_tail, Fraction(0))

    ln2 = math.log(2.0)
    li2 = [float(c) for c in li2_tail]
    li3 = [float(c) for c in li3_tail]
    # add the integrated -ln 2 contributions: -ln2 * t in Li_2,
    # -ln2 * t^2/2 in Li_3, plus the constants Li_s(-1)
    li2[0] = _LI2_M1
    li2[1] += -ln2
    li3[0] = _LI3_M1
    li3[1] += _LI2_M1
    li3[2] += -ln2 / 2.0
    return li2, li3


_LI2_BAND, _LI3_BAND = _band_coefficients()


def _horner(coefs: list[float], t: float) -> float:
    acc = 0.0
    for c in reversed(coefs):
        acc = acc * t + c
    return acc


def _series(x: float, s: int) -> float:
    # direct sum x^k / k^s; |x| <= 1/2 so 54 terms reach the last bit
    acc = 0.0
    term = 1.0
    for k in range(1, 55):
        term *= x
        acc += term / k**s
    return acc


def li2(x: float) -> float:
    """Dilogarithm for x <= 0."""
    if not x <= 0.0:
        raise PolylogDomainError(f"li2 requires x <= 0, got {x}")
    if not math.isfinite(x):
        raise PolylogDomainError("li2 requires a finite argument")
    if x >= -0.5:
        return _series(x, 2)
    if x >= -2.0:
        return _horner(_LI2_BAND, math.log(-x))
    y = -x
    lny = math.log(y)
    return -_PI2_6 - 0.5 * lny * lny - _series(-1.0 / y, 2)


def li3(x: float) -> float:
    """Trilogarithm for x <= 0."""
    if not x <= 0.0:
        raise PolylogDomainError(f"li3 requires x <= 0, got {x}")
    if not math.isfinite(x):
        raise PolylogDomainError("li3 requires a finite argument")
    if x >= -0.5:
        return _series(x, 3)
    if x >= -2.0:
        return _horner(_LI3_BAND, math.log(-x))
    y = -x
    lny = math.log(y)
    return _series(-1.0 / y, 3) - lny**3 / 6.0 - _PI2_6 * lny
