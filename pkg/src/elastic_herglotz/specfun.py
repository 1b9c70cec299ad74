"""Scalar special functions.

Spherical Bessel functions j_l, ordinary Bessel J_nu, associated Legendre
functions P_l^m with derivatives (Condon-Shortley phase included), spherical
harmonics Y_l^m and their normalizing constants.

Conventions
-----------
* P_l^m(x) = (-1)^m (1 - x^2)^(m/2) d^m P_l / dx^m,  m >= 0.
* Omega_{lm} = 4 pi / (2l+1) * (l+|m|)! / (l-|m|)!.
* Y_l^m(theta, phi) = Omega_{lm}^(-1/2) P_l^{|m|}(cos theta) e^{i m phi}.
  No extra phase and no conjugation for m < 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, jv

from .core import FrameDegenerateError, ModeError, POLE_GUARD

__all__ = [
    "BesselEvalPolicy", "LegendreRow",
    "sph_bessel_j", "sph_bessel_table", "sph_bessel_j_prime",
    "sph_bessel_over_r", "bessel_J",
    "assoc_legendre_row", "legendre_table",
    "omega_norm", "sph_harmonic",
]

# Rough threshold below which the power series is both accurate and cheap.
_SERIES_CUTOFF = 0.5


@dataclass(frozen=True)
class BesselEvalPolicy:
    """Evaluation strategy for j_l: series near 0, upward recurrence in the
    stable region x >= l, Miller downward recurrence otherwise."""

    series_cutoff: float = _SERIES_CUTOFF

    def method(self, l: int, x: float) -> str:
        if x < self.series_cutoff:
            return "series"
        if x >= l:
            return "upward"
        return "downward-miller"


DEFAULT_BESSEL_POLICY = BesselEvalPolicy()


def _sph_series_table(l_max: int, x: np.ndarray) -> np.ndarray:
    """Power series j_l(x) = x^l/(2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)...(2l+2k+1)).

    Intended for small |x| where a handful of terms reaches machine precision.
    """
    out = np.zeros((l_max + 1, x.size))
    pref = np.ones_like(x)          # x^l / (2l+1)!!, built up iteratively
    x2h = -0.5 * x * x
    for l in range(l_max + 1):
        if l > 0:
            pref = pref * x / (2.0 * l + 1.0)
        term = np.ones_like(x)
        acc = np.ones_like(x)
        for k in range(1, 30):
            term = term * x2h / (k * (2.0 * l + 2.0 * k + 1.0))
            acc += term
            if np.all(np.abs(term) < 1e-18):
                break
        out[l] = pref * acc
    return out


def _sph_upward_table(l_max: int, x: np.ndarray) -> np.ndarray:
    """Upward recurrence, stable for orders l <= x."""
    out = np.zeros((l_max + 1, x.size))
    out[0] = np.sin(x) / x
    if l_max >= 1:
        out[1] = np.sin(x) / x**2 - np.cos(x) / x
    for l in range(1, l_max):
        out[l + 1] = (2.0 * l + 1.0) / x * out[l] - out[l - 1]
    return out


def _sph_miller_table(l_max: int, x: np.ndarray) -> np.ndarray:
    """Miller downward recurrence normalized against the closed forms j_0, j_1.

    j_0 is used where it dominates, falling back to j_1 near zeros of sin
    (the zeros of j_0 and j_1 interlace, so one of them is always usable).
    """
    start = l_max + int(math.ceil(math.sqrt(40.0 * max(l_max, 1)))) + 16
    f_hi = np.zeros(x.size)
    f = np.full(x.size, 1e-150)
    rows = np.zeros((l_max + 1, x.size))
    for n in range(start, 0, -1):
        f_lo = (2.0 * n + 1.0) / x * f - f_hi
        f_hi, f = f, f_lo
        if n - 1 <= l_max:
            rows[n - 1] = f
        big = np.abs(f) > 1e250
        if np.any(big):
            f_hi[big] *= 1e-250
            f[big] *= 1e-250
            rows[:, big] *= 1e-250
    j0 = np.sin(x) / x
    j1 = np.sin(x) / x**2 - np.cos(x) / x
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / rows[0],
                     j1 / rows[min(1, l_max)] if l_max >= 1 else j0 / rows[0])
    return rows * scale


def sph_bessel_table(l_max: int, x) -> np.ndarray:
    """All spherical Bessel values j_0..j_{l_max} on an array of points.

    Returns an array of shape (l_max + 1, len(x)).  Each point is routed to
    the series / upward / downward method per DEFAULT_BESSEL_POLICY.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ValueError("spherical Bessel argument must be >= 0")
    out = np.zeros((l_max + 1, x.size))
    tiny = x < _SERIES_CUTOFF
    up = (~tiny) & (x >= max(l_max, 1))
    down = (~tiny) & (~up)
    if np.any(tiny):
        out[:, tiny] = _sph_series_table(l_max, x[tiny])
    if np.any(up):
        out[:, up] = _sph_upward_table(l_max, x[up])
    if np.any(down):
        out[:, down] = _sph_miller_table(l_max, x[down])
    return out


def sph_bessel_j(l: int, x: float) -> float:
    """Spherical Bessel function of the first kind j_l(x), x >= 0."""
    if l < 0:
        raise ValueError("order l must be >= 0")
    if x < 0:
        raise ValueError("spherical Bessel argument must be >= 0")
    if x == 0.0:
        return 1.0 if l == 0 else 0.0
    return float(sph_bessel_table(l, np.array([x]))[l, 0])


def sph_bessel_j_prime(l: int, x: float) -> float:
    """Derivative j_l'(x) via (l j_{l-1} - (l+1) j_{l+1}) / (2l+1).

    For l = 0 this reduces to -j_1.  The x = 0 limit is analytic:
    j_1'(0) = 1/3 and j_l'(0) = 0 otherwise.
    """
    if l < 0:
        raise ValueError("order l must be >= 0")
    if x == 0.0:
        return 1.0 / 3.0 if l == 1 else 0.0
    if l == 0:
        return -sph_bessel_j(1, x)
    tab = sph_bessel_table(l + 1, np.array([x]))
    return float((l * tab[l - 1, 0] - (l + 1) * tab[l + 1, 0]) / (2.0 * l + 1.0))


def sph_bessel_over_r(l: int, x: float) -> float:
    """j_l(x) / x via (j_{l-1} + j_{l+1}) / (2l+1), finite at x = 0 (l >= 1)."""
    if l < 1:
        raise ValueError("j_l(x)/x needs l >= 1; j_0(x)/x diverges at the origin")
    if x == 0.0:
        return 1.0 / 3.0 if l == 1 else 0.0
    tab = sph_bessel_table(l + 1, np.array([x]))
    return float((tab[l - 1, 0] + tab[l + 1, 0]) / (2.0 * l + 1.0))


def bessel_J(nu: float, x: float) -> float:
    """Ordinary Bessel J_nu for integer or half-integer nu >= 0 (x > 0)."""
    if x <= 0:
        raise ValueError("bessel_J requires x > 0")
    two_nu = 2.0 * nu
    if nu < 0 or abs(two_nu - round(two_nu)) > 1e-12:
        raise ValueError(f"unsupported order nu = {nu}; need n or n + 1/2, n >= 0")
    return float(jv(nu, x))


# associated Legendre ---------------------------------------------------------

@dataclass(frozen=True)
class LegendreRow:
    """P_l^m(x) and d/dx P_l^m(x) for m = 0..l at a fixed degree and abscissa."""

    l: int
    values: np.ndarray
    derivs: np.ndarray


def legendre_table(l_max: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Tables P_l^m(x) and (P_l^m)'(x) for all 0 <= m <= l <= l_max.

    Returns arrays of shape (l_max+1, l_max+1, len(x)); entry [l, m] is valid
    for m <= l.  Requires |x| < 1 for the derivatives (the callers keep
    quadrature nodes strictly inside the interval).

    Recurrences: the m-diagonal seeds P_m^m = (-1)^m (2m-1)!! (1-x^2)^{m/2},
    then degree recursion, then (1-x^2) (P_l^m)' = -l x P_l^m + (l+m) P_{l-1}^m.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    P = np.zeros((l_max + 1, l_max + 1, n))
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    P[0, 0] = 1.0
    for m in range(1, l_max + 1):
        P[m, m] = -(2.0 * m - 1.0) * s * P[m - 1, m - 1]
    for m in range(l_max):
        P[m + 1, m] = (2.0 * m + 1.0) * x * P[m, m]
    for m in range(l_max + 1):
        for l in range(m + 2, l_max + 1):
            P[l, m] = ((2.0 * l - 1.0) * x * P[l - 1, m]
                       - (l + m - 1.0) * P[l - 2, m]) / (l - m)
    dP = np.zeros_like(P)
    one_minus = 1.0 - x * x
    for m in range(l_max + 1):
        for l in range(m, l_max + 1):
            below = P[l - 1, m] if l - 1 >= m else 0.0
            dP[l, m] = (-l * x * P[l, m] + (l + m) * below) / one_minus
    return P, dP


def assoc_legendre_row(l: int, x: float) -> LegendreRow:
    """P_l^m(x) and derivatives for m = 0..l at a single point, |x| <= 1.

    At the endpoints x = +-1 the values follow P_l^m(+-1) = 0 for m >= 1;
    derivatives are only provided for |x| < 1 (and for m = 0 at the
    endpoints, where (P_l)'(+-1) = (+-1)^{l+1} l (l+1) / 2).
    """
    if abs(x) > 1.0:
        raise ValueError("Legendre argument must satisfy |x| <= 1")
    if abs(x) == 1.0:
        sgn = 1.0 if x > 0 else -1.0
        values = np.zeros(l + 1)
        values[0] = sgn**l
        derivs = np.full(l + 1, np.nan)
        derivs[0] = sgn ** (l + 1) * l * (l + 1) / 2.0
        return LegendreRow(l, values, derivs)
    P, dP = legendre_table(l, np.array([x]))
    return LegendreRow(l, P[l, : l + 1, 0].copy(), dP[l, : l + 1, 0].copy())


def legendre_second_deriv(l: int, m: int, x, P, dP):
    """(P_l^m)'' from the Legendre ODE, avoiding a second recurrence:

    (1-x^2) P'' = 2 x P' - [l(l+1) - m^2/(1-x^2)] P.
    """
    one_minus = 1.0 - x * x
    return (2.0 * x * dP - (l * (l + 1.0) - m * m / one_minus) * P) / one_minus


# spherical harmonics ---------------------------------------------------------

def omega_norm(l: int, m: int) -> float:
    """Normalizing constant Omega_{lm} = 4 pi/(2l+1) * (l+|m|)!/(l-|m|)!.

    Computed in log space for l > 30 to avoid factorial overflow.
    """
    am = abs(m)
    if am > l:
        raise ModeError(f"|m| <= l required, got (l, m) = ({l}, {m})")
    if l <= 30:
        ratio = float(math.factorial(l + am) / math.factorial(l - am))
    else:
        ratio = math.exp(gammaln(l + am + 1) - gammaln(l - am + 1))
    return 4.0 * math.pi / (2.0 * l + 1.0) * ratio


def sph_harmonic(l: int, m: int, theta: float, phi: float) -> complex:
    """Y_l^m(theta, phi) = Omega^{-1/2} P_l^{|m|}(cos theta) e^{i m phi}."""
    if abs(m) > l:
        raise ModeError(f"|m| <= l required, got (l, m) = ({l}, {m})")
    if math.sin(theta) < POLE_GUARD:
        raise FrameDegenerateError(f"theta = {theta!r} too close to the polar axis")
    row = assoc_legendre_row(l, math.cos(theta))
    return (omega_norm(l, m) ** -0.5 * row.values[abs(m)]
            * complex(math.cos(m * phi), math.sin(m * phi)))
