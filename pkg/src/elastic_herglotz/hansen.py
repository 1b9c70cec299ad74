"""Vector building blocks on the sphere and in space.

Hansen harmonics P/B/C (radial, gradient-type tangential, curl-type
tangential), the Navier eigenvectors L/M/N in radial x spherical split form,
the spherical-gradient tensor, and closed-form gradients of P/B/C.

The local-frame index order of all tensors is (rhat, thetahat, phihat); the
first tensor slot is the differentiation direction, so spherical gradients
have an identically zero rhat row.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (FrameDegenerateError, ModeError, ModeIndex, SphPoint,
                   SphTensor, SphVec, POLE_GUARD, ElasticParams,
                   frame_to_cartesian, cartesian_to_frame)
from .specfun import (legendre_table, legendre_second_deriv, omega_norm,
                      sph_bessel_table)

HANSEN_KINDS = ("P", "B", "C")
EIG_KINDS = ("L", "M", "N")


class ConditioningWarning(UserWarning):
    """Finite-difference step likely to lose accuracy."""


def _check_angles(kind: str, l: int, theta: float):
    if kind in ("B", "C") and l < 1:
        raise ModeError(f"Hansen harmonic {kind} requires l >= 1")
    if math.sin(theta) < POLE_GUARD:
        raise FrameDegenerateError(f"theta = {theta!r} too close to the polar axis")


# vectorized angular tables ---------------------------------------------------

class HansenTables:
    """Hansen harmonic component profiles on a fixed set of colatitudes.

    Profiles exclude the e^{i m phi} azimuthal phase; callers multiply it in.
    ``vec(kind, l, m)``  -> (3, n) complex frame components,
    ``grad(kind, l, m)`` -> (3, 3, n) complex frame tensor components.
    """

    def __init__(self, l_max: int, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if np.any(np.sin(theta) < POLE_GUARD):
            raise FrameDegenerateError("colatitude grid touches the polar axis")
        self.l_max = l_max
        self.theta = theta
        self.x = np.cos(theta)
        self.s = np.sin(theta)
        self.P, self.dP = legendre_table(l_max, self.x)

    def _pieces(self, l: int, m: int):
        am = abs(m)
        if am > l:
            raise ModeError(f"|m| <= l required, got (l, m) = ({l}, {m})")
        c0 = omega_norm(l, m) ** -0.5
        return c0, self.P[l, am], self.dP[l, am]

    def vec(self, kind: str, l: int, m: int) -> np.ndarray:
        c0, P, dP = self._pieces(l, m)
        n = self.theta.size
        out = np.zeros((3, n), dtype=complex)
        if kind == "P":
            out[0] = c0 * P
            return out
        if l < 1:
            raise ModeError(f"Hansen harmonic {kind} requires l >= 1")
        nu = c0 / math.sqrt(l * (l + 1.0))
        if kind == "B":
            out[1] = -nu * self.s * dP
            out[2] = 1j * m * nu * P / self.s
        elif kind == "C":
            out[1] = 1j * m * nu * P / self.s
            out[2] = nu * self.s * dP
        else:
            raise ValueError(f"unknown Hansen kind {kind!r}")
        return out

    def grad(self, kind: str, l: int, m: int) -> np.ndarray:
        c0, P, dP = self._pieces(l, m)
        x, s = self.x, self.s
        d2P = legendre_second_deriv(l, abs(m), x, P, dP)
        n = self.theta.size
        out = np.zeros((3, 3, n), dtype=complex)
        if kind == "P":
            out[1, 0] = -s * dP
            out[1, 1] = P
            out[2, 0] = 1j * m * P / s
            out[2, 2] = P
            return c0 * out
        if l < 1:
            raise ModeError(f"Hansen harmonic {kind} requires l >= 1")
        nu = c0 / math.sqrt(l * (l + 1.0))
        mixed = dP + x * P / s**2
        if kind == "B":
            out[1, 0] = s * dP
            out[1, 1] = s**2 * d2P - x * dP
            out[1, 2] = -1j * m * mixed
            out[2, 0] = -1j * m * P / s
            out[2, 1] = -1j * m * mixed
            out[2, 2] = -(m * m * P / s**2 + x * dP)
        elif kind == "C":
            out[1, 0] = -1j * m * P / s
            out[1, 1] = -1j * m * mixed
            out[1, 2] = x * dP - s**2 * d2P
            out[2, 0] = -s * dP
            out[2, 1] = -(m * m * P / s**2 + x * dP)
            out[2, 2] = 1j * m * mixed
        else:
            raise ValueError(f"unknown Hansen kind {kind!r}")
        return nu * out


def hansen(kind: str, mode: ModeIndex, theta: float, phi: float) -> SphVec:
    """Hansen harmonic P/B/C at a single direction (theta, phi)."""
    _check_angles(kind, mode.l, theta)
    tab = HansenTables(mode.l, np.array([theta]))
    v = tab.vec(kind, mode.l, mode.m)[:, 0] * np.exp(1j * mode.m * phi)
    return SphVec(*v)


def hansen_gradient(kind: str, mode: ModeIndex, theta: float, phi: float) -> SphTensor:
    """Closed-form spherical gradient of a Hansen harmonic."""
    _check_angles(kind, mode.l, theta)
    tab = HansenTables(mode.l, np.array([theta]))
    g = tab.grad(kind, mode.l, mode.m)[:, :, 0] * np.exp(1j * mode.m * phi)
    return SphTensor(g)


# Navier eigenvectors ---------------------------------------------------------

@dataclass(frozen=True)
class RadialTerm:
    """One spherical-Bessel component c * j_order(k r) of a radial factor."""

    coeff: float
    order: int
    k: float


def radial_profile_terms(kind: str, l: int, params: ElasticParams) -> dict:
    """Radial factors of L/M/N expressed exactly in j_{l-1}, j_l, j_{l+1}.

    Returns a dict mapping Hansen part ('P'|'B'|'C') to a list of RadialTerm.
    Uses j_l' = (l j_{l-1} - (l+1) j_{l+1})/(2l+1) and
    j_l(kr)/r = k (j_{l-1} + j_{l+1})(kr)/(2l+1).
    """
    kp, ks = params.kp, params.ks
    lam_fac = math.sqrt(l * (l + 1.0))
    d = 2.0 * l + 1.0
    terms: dict[str, list[RadialTerm]] = {}
    if kind == "L":
        tP = [RadialTerm(kp * l / d, l - 1, kp), RadialTerm(-kp * (l + 1) / d, l + 1, kp)]
        tB = [RadialTerm(lam_fac * kp / d, l - 1, kp), RadialTerm(lam_fac * kp / d, l + 1, kp)]
        terms = {"P": tP, "B": tB}
    elif kind == "M":
        terms = {"C": [RadialTerm(lam_fac, l, ks)]}
    elif kind == "N":
        tP = [RadialTerm(l * (l + 1) * ks / d, l - 1, ks),
              RadialTerm(l * (l + 1) * ks / d, l + 1, ks)]
        tB = [RadialTerm(lam_fac * ks * (l + 1) / d, l - 1, ks),
              RadialTerm(-lam_fac * ks * l / d, l + 1, ks)]
        terms = {"P": tP, "B": tB}
    else:
        raise ValueError(f"unknown eigenvector kind {kind!r}")
    cleaned = {part: [t for t in tl if t.coeff != 0.0 and t.order >= 0]
               for part, tl in terms.items()}
    return {part: tl for part, tl in cleaned.items() if tl}


def eval_radial_terms(terms: list, r: float) -> float:
    """Evaluate sum_i c_i j_{order_i}(k_i r) at a single radius."""
    if not terms:
        return 0.0
    l_top = max(t.order for t in terms)
    vals = {}
    for k in {t.k for t in terms}:
        vals[k] = sph_bessel_table(l_top, np.array([k * r]))[:, 0]
    return float(sum(t.coeff * vals[t.k][t.order] for t in terms))


def radial_factors(kind: str, l: int, r: float, params: ElasticParams) -> dict:
    """Numeric radial factors {part: value} of L/M/N at radius r (origin safe)."""
    return {part: eval_radial_terms(tl, r)
            for part, tl in radial_profile_terms(kind, l, params).items()}


def navier_eig(kind: str, mode: ModeIndex, p: SphPoint, params: ElasticParams) -> SphVec:
    """Navier eigenvector L/M/N at p in local-frame components.

    M and N vanish identically for l = 0 and return the zero vector.  At the
    origin the radial factors take their analytic limits; the returned frame
    components are the limits along the ray (theta, phi).
    """
    if kind in ("M", "N") and mode.l == 0:
        return SphVec(0.0, 0.0, 0.0)
    _check_angles("P", mode.l, p.theta)
    fac = radial_factors(kind, mode.l, p.r, params)
    tab = HansenTables(mode.l, np.array([p.theta]))
    phase = np.exp(1j * mode.m * p.phi)
    acc = np.zeros(3, dtype=complex)
    for part, value in fac.items():
        acc += value * tab.vec(part, mode.l, mode.m)[:, 0]
    return SphVec(*(acc * phase))


def eig_gradient(kind: str, mode: ModeIndex, p: SphPoint, params: ElasticParams) -> SphTensor:
    """Spherical gradient of L/M/N: radial factors times Hansen gradient tensors."""
    if kind in ("M", "N") and mode.l == 0:
        return SphTensor()
    _check_angles("P", mode.l, p.theta)
    fac = radial_factors(kind, mode.l, p.r, params)
    tab = HansenTables(mode.l, np.array([p.theta]))
    phase = np.exp(1j * mode.m * p.phi)
    acc = np.zeros((3, 3), dtype=complex)
    for part, value in fac.items():
        acc += value * tab.grad(part, mode.l, mode.m)[:, :, 0]
    return SphTensor(acc * phase)


def _grad_r_linear_y1(m: int) -> np.ndarray:
    # gradient of the linear polynomial r Y_1^m in Cartesian components
    if m == 0:
        return math.sqrt(3.0 / (4.0 * math.pi)) * np.array([0.0, 0.0, 1.0], dtype=complex)
    sign = 1j if m > 0 else -1j
    return -math.sqrt(3.0 / (8.0 * math.pi)) * np.array([1.0, sign, 0.0], dtype=complex)


def navier_eig_cartesian(kind: str, mode: ModeIndex, xyz, params: ElasticParams) -> np.ndarray:
    """L/M/N as a Cartesian complex 3-vector; handles the origin by its limit.

    Only the l = 1 eigenvectors are nonzero at the origin:
    L_1^m(0) = (kp/3) grad(r Y_1^m) and N_1^m(0) = (2 ks/3) grad(r Y_1^m).
    """
    xyz = np.asarray(xyz, dtype=float)
    r = float(np.linalg.norm(xyz))
    if r == 0.0:
        if mode.l == 1 and kind == "L":
            return params.kp / 3.0 * _grad_r_linear_y1(mode.m)
        if mode.l == 1 and kind == "N":
            return 2.0 * params.ks / 3.0 * _grad_r_linear_y1(mode.m)
        return np.zeros(3, dtype=complex)
    p = SphPoint.from_cartesian(xyz)
    v = navier_eig(kind, mode, p, params)
    if v.vr == 0 and v.vtheta == 0 and v.vphi == 0:
        return np.zeros(3, dtype=complex)
    return frame_to_cartesian(v, p)


# finite-difference oracle for the spherical gradient ------------------------

def spherical_gradient(field, p: SphPoint, step: float | None = None) -> SphTensor:
    """Assemble the six-term spherical gradient from centered angular
    differences of the local-frame components of ``field``.

    ``field`` maps SphPoint -> SphVec.  This is the generic oracle path; the
    Hansen closed forms above are the production path.
    """
    st = math.sin(p.theta)
    if st < POLE_GUARD:
        raise FrameDegenerateError(f"theta = {p.theta!r} too close to the polar axis")
    if step is None:
        step = 1e-5 * min(1.0, st)
    if not 1e-9 < step < 1e-2:
        warnings.warn(f"angular step {step!r} likely ill-conditioned",
                      ConditioningWarning, stacklevel=2)
    h = step
    u0 = field(p)
    ut_p = field(SphPoint(p.r, p.theta + h, p.phi)).components
    ut_m = field(SphPoint(p.r, p.theta - h, p.phi)).components
    up_p = field(SphPoint(p.r, p.theta, p.phi + h)).components
    up_m = field(SphPoint(p.r, p.theta, p.phi - h)).components
    d_theta = (ut_p - ut_m) / (2.0 * h)
    d_phi = (up_p - up_m) / (2.0 * h)
    ur, ut, uf = u0.vr, u0.vtheta, u0.vphi
    ct = math.cos(p.theta) / st
    out = np.zeros((3, 3), dtype=complex)
    out[1, 0] = d_theta[0] - ut
    out[1, 1] = d_theta[1] + ur
    out[1, 2] = d_theta[2]
    out[2, 0] = d_phi[0] / st - uf
    out[2, 1] = d_phi[1] / st - uf * ct
    out[2, 2] = d_phi[2] / st + ur + ut * ct
    return SphTensor(out)


def eig_field(kind: str, mode: ModeIndex, params: ElasticParams):
    """Closure SphPoint -> SphVec for a single eigenvector (oracle plumbing)."""
    def f(p: SphPoint) -> SphVec:
        return navier_eig(kind, mode, p, params)
    return f
