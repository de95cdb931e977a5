"""Gamma-function products in signed-log form.

The Morris trigonometric integral

    (1/(2pi)^n) int prod_j e^{i(a-b)theta_j/2} |1 - e^{i theta_j}|^{a+b} |Delta_n|^{2 lam}

equals a finite product of gamma functions.  The product overflows doubles
quickly, so everything here is accumulated as ``(sign, log|x|)``.
Parameters that come from an integer Dyson index are half-integers, and for
those the poles of the denominator gammas are located with integer arithmetic
on twice the argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from unicirc.errors import InvalidParams

__all__ = [
    "SignedLogValue",
    "ZERO",
    "POLE",
    "ONE",
    "signed_log_gamma",
    "is_gamma_pole",
    "MorrisParams",
    "MorrisResult",
    "morris_log",
    "morris_integral",
    "log_cbeta_norm",
    "cbeta_norm",
    "double_factorial",
]

_POLE_TOL = 1e-9

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class SignedLogValue:
    """A real number stored as ``sign * exp(log_abs)``.

    ``sign == 0`` is reserved for the two exact limits: ``ZERO``
    (``log_abs = -inf``) and ``POLE`` (``log_abs = +inf``, an unsigned
    infinity coming from a gamma pole).
    """

    sign: int
    log_abs: float

    @property
    def is_zero(self) -> bool:
        return self.sign == 0 and self.log_abs == -math.inf

    @property
    def is_pole(self) -> bool:
        return self.sign == 0 and self.log_abs == math.inf

    def __mul__(self, other: SignedLogValue) -> SignedLogValue:
        if (self.is_zero and other.is_pole) or (self.is_pole and other.is_zero):
            raise ZeroDivisionError("0 * infinity in signed-log product")
        if self.sign == 0:
            return self
        if other.sign == 0:
            return other
        return SignedLogValue(self.sign * other.sign, self.log_abs + other.log_abs)

    def reciprocal(self) -> SignedLogValue:
        if self.sign == 0:
            return SignedLogValue(0, -self.log_abs)
        return SignedLogValue(self.sign, -self.log_abs)

    def __truediv__(self, other: SignedLogValue) -> SignedLogValue:
        return self * other.reciprocal()

    def __float__(self) -> float:
        if self.is_zero:
            return 0.0
        if self.is_pole:
            return math.inf
        return self.sign * math.exp(self.log_abs)


ZERO = SignedLogValue(0, -math.inf)
POLE = SignedLogValue(0, math.inf)
ONE = SignedLogValue(1, 0.0)


def _twice_as_int(x) -> int | None:
    """Return ``2x`` as an int when it is exactly integral, else None."""
    if isinstance(x, int):
        return 2 * x
    if isinstance(x, Fraction):
        y = 2 * x
        return int(y) if y.denominator == 1 else None
    y = 2.0 * float(x)
    if math.isfinite(y) and y.is_integer():
        return int(y)
    return None


def is_gamma_pole(x) -> bool:
    """True iff ``x`` is a nonpositive integer.

    Half-integer inputs (ints, Fractions, or floats whose double is integral)
    are decided exactly.  Other floats count as poles within 1e-9 of a
    nonpositive integer.
    """
    twice = _twice_as_int(x)
    if twice is not None:
        return twice <= 0 and twice % 2 == 0
    x = float(x)
    nearest = round(x)
    return nearest <= 0 and abs(x - nearest) <= _POLE_TOL


def _sinpi(x: float) -> float:
    """sin(pi x) with exact argument reduction."""
    r = math.fmod(x, 2.0)
    if r > 1.0:
        r -= 2.0
    elif r < -1.0:
        r += 2.0
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    return math.sin(math.pi * r)


def _lanczos_log_gamma(x: float) -> float:
    # valid for x >= 0.5
    z = x - 1.0
    series = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        series += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(series)


def signed_log_gamma(x: float) -> SignedLogValue:
    """Sign and natural log of ``|Gamma(x)|``.

    Returns ``POLE`` at nonpositive integers.  Arguments below 1/2 go through
    the reflection formula ``Gamma(x) Gamma(1-x) = pi / sin(pi x)``.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"signed_log_gamma needs a finite argument, got {x!r}")
    if is_gamma_pole(x):
        return POLE
    if x >= 0.5:
        return SignedLogValue(1, _lanczos_log_gamma(x))
    s = _sinpi(x)
    log_abs = _LOG_PI - math.log(abs(s)) - _lanczos_log_gamma(1.0 - x)
    return SignedLogValue(1 if s > 0 else -1, log_abs)


@dataclass(frozen=True)
class MorrisParams:
    """Parameters ``(n_vars, a, b, lam)`` of the Morris integral."""

    n_vars: int
    a: float
    b: float
    lam: float

    @classmethod
    def from_beta(cls, beta: int, N: int, n: int) -> MorrisParams:
        """Parameters of the ``n``-th Fourier coefficient of the SU-type density.

        ``n_vars = N - 1``, ``a = beta/2 + n``, ``b = beta/2 - n``,
        ``lam = beta/2``.
        """
        half = beta / 2
        return cls(N - 1, half + n, half - n, half)

    def validate(self) -> None:
        if not isinstance(self.n_vars, int) or self.n_vars < 0:
            raise InvalidParams(f"n_vars must be a nonnegative integer, got {self.n_vars!r}")
        for name in ("a", "b", "lam"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite")
        if not self.a + self.b > -1:
            raise InvalidParams(f"need a + b > -1, got a + b = {self.a + self.b}")
        if self.lam < 0:
            raise InvalidParams(f"need lam >= 0, got {self.lam}")
        shift = (self.a - self.b) / 2
        if not float(shift).is_integer():
            raise InvalidParams(
                f"(a - b)/2 = {shift} is not an integer; the sign prefactor is undefined"
            )


class MorrisResult(NamedTuple):
    """Value of a Morris integral plus the pole that zeroed it, if any.

    ``pole`` is ``(factor, j, argument)`` where ``factor`` names the
    denominator gamma (``"lam*j+a+1"`` or ``"lam*j+b+1"``).
    """

    value: SignedLogValue
    pole: tuple[str, int, float] | None


def _denominator_pole(p: MorrisParams) -> tuple[str, int, float] | None:
    ta, tb, tl = (_twice_as_int(v) for v in (p.a, p.b, p.lam))
    exact = None not in (ta, tb, tl)
    for j in range(p.n_vars):
        for label, t_shift, shift in (("lam*j+a+1", ta, p.a), ("lam*j+b+1", tb, p.b)):
            if exact:
                twice_arg = tl * j + t_shift + 2
                if twice_arg <= 0 and twice_arg % 2 == 0:
                    return label, j, twice_arg / 2
            else:
                arg = p.lam * j + shift + 1
                if is_gamma_pole(arg):
                    return label, j, arg
    return None


def morris_log(p: MorrisParams) -> MorrisResult:
    """Evaluate the Morris product in signed-log form.

    The value is exactly ``ZERO`` when some denominator gamma sits on a pole.
    Numerator gammas never do, since ``a + b > -1`` and ``lam >= 0``.
    """
    p.validate()
    pole = _denominator_pole(p)
    if pole is not None:
        return MorrisResult(ZERO, pole)

    shift = round((p.a - p.b) / 2)
    sign = -1 if (shift * p.n_vars) % 2 else 1
    logs = []
    lam_term = signed_log_gamma(p.lam + 1)
    for j in range(p.n_vars):
        lj = p.lam * j
        num = (signed_log_gamma(lj + p.a + p.b + 1), signed_log_gamma(lj + p.lam + 1))
        den = (signed_log_gamma(lj + p.a + 1), signed_log_gamma(lj + p.b + 1), lam_term)
        for g in num:
            sign *= g.sign
            logs.append(g.log_abs)
        for g in den:
            sign *= g.sign
            logs.append(-g.log_abs)
    return MorrisResult(SignedLogValue(sign, math.fsum(logs)), None)


def morris_integral(p: MorrisParams) -> float:
    """Closed-form value of the Morris integral as a float."""
    return float(morris_log(p).value)


def log_cbeta_norm(beta: int, N: int) -> float:
    """``log C_{beta,N}`` with ``C = Gamma(beta N/2 + 1) / Gamma(beta/2 + 1)^N``."""
    if beta < 1 or N < 1:
        raise ValueError(f"need beta >= 1 and N >= 1, got beta={beta}, N={N}")
    return (
        signed_log_gamma(beta * N / 2 + 1).log_abs
        - N * signed_log_gamma(beta / 2 + 1).log_abs
    )


def cbeta_norm(beta: int, N: int) -> float:
    """Normalization constant of the circular beta ensemble of size N."""
    return math.exp(log_cbeta_norm(beta, N))


def double_factorial(k: int) -> int:
    """``k!!`` with ``0!! = (-1)!! = 1``.

    Python integers do not overflow, so the result is always exact.
    """
    if k < -1:
        raise ValueError(f"double factorial undefined for k={k}")
    return math.prod(range(k, 0, -2))
