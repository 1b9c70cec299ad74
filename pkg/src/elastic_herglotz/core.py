"""Shared domain types: material parameters, spherical geometry, frame algebra.

All vector fields in this package are expressed either in Cartesian
components or in the local spherical frame (rhat, thetahat, phihat).
The frame is orthonormal away from the polar axis; evaluation exactly on
the axis (theta in {0, pi}) is rejected because the tangential unit
vectors are not defined there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Guard band around the polar axis.  Tangential Hansen harmonics carry
# 1/sin(theta) factors, so quadrature grids and random sampling stay inside
# theta in [POLE_GUARD, pi - POLE_GUARD].
POLE_GUARD = 1e-3


class ParameterError(ValueError):
    """Material / configuration parameters violate an admissibility constraint."""


class FrameDegenerateError(ValueError):
    """Evaluation requested on the polar axis where (thetahat, phihat) degenerate."""


class ModeError(ValueError):
    """Invalid (l, m) mode request (e.g. tangential harmonic at l = 0)."""


class ResolutionError(RuntimeError):
    """Quadrature resolution insufficient for the declared integrand degree."""


@dataclass(frozen=True)
class ElasticParams:
    """Lame constants, density and frequency with derived wavenumbers.

    kp and ks are the compressional and shear wavenumbers,

        kp^2 = rho omega^2 / (2 mu + lam),   ks^2 = rho omega^2 / mu.

    ``equal_speeds`` flags the degenerate case kp == ks (lam + mu == 0),
    which is representable but rejected by the kernel machinery.
    """

    lam: float
    mu: float
    rho: float
    omega: float
    kp: float
    ks: float
    equal_speeds: bool

    def __post_init__(self):
        pass


def make_params(lam: float, mu: float, rho: float, omega: float) -> ElasticParams:
    """Validate (lam, mu, rho, omega) and derive the wavenumbers kp, ks."""
    if not mu > 0:
        raise ParameterError(f"mu > 0 required, got mu = {mu}")
    if not 2.0 * mu + lam > 0:
        raise ParameterError(f"2*mu + lam > 0 required, got 2*mu + lam = {2 * mu + lam}")
    if not rho > 0:
        raise ParameterError(f"rho > 0 required, got rho = {rho}")
    if not omega > 0:
        raise ParameterError(f"omega > 0 required, got omega = {omega}")
    kp = math.sqrt(rho * omega**2 / (2.0 * mu + lam))
    ks = math.sqrt(rho * omega**2 / mu)
    return ElasticParams(
        lam=float(lam), mu=float(mu), rho=float(rho), omega=float(omega),
        kp=kp, ks=ks, equal_speeds=(lam + mu == 0.0),
    )


def params_from_wavenumbers(kp: float, ks: float) -> ElasticParams:
    """Build admissible parameters realizing given (kp, ks) with rho = omega = 1."""
    if not (kp > 0 and ks > 0):
        raise ParameterError("kp, ks must be positive")
    mu = 1.0 / ks**2
    lam = 1.0 / kp**2 - 2.0 * mu
    return make_params(lam, mu, 1.0, 1.0)


@dataclass(frozen=True)
class ModeIndex:
    """Angular mode (l, m) with |m| <= l."""

    l: int
    m: int

    def __post_init__(self):
        if self.l < 0:
            raise ModeError(f"l >= 0 required, got l = {self.l}")
        if abs(self.m) > self.l:
            raise ModeError(f"|m| <= l required, got (l, m) = ({self.l}, {self.m})")


@dataclass(frozen=True)
class SphPoint:
    """Point in spherical coordinates r >= 0, theta in (0, pi), phi in [0, 2 pi)."""

    r: float
    theta: float
    phi: float

    @classmethod
    def from_cartesian(cls, xyz) -> "SphPoint":
        x, y, z = (float(c) for c in xyz)
        r = math.sqrt(x * x + y * y + z * z)
        if r == 0.0:
            return cls(0.0, 0.5 * math.pi, 0.0)
        theta = math.acos(max(-1.0, min(1.0, z / r)))
        phi = math.atan2(y, x) % (2.0 * math.pi)
        return cls(r, theta, phi)

    @property
    def cartesian(self) -> np.ndarray:
        st, ct = math.sin(self.theta), math.cos(self.theta)
        sp, cp = math.sin(self.phi), math.cos(self.phi)
        return np.array([self.r * st * cp, self.r * st * sp, self.r * ct])

    @property
    def at_pole(self) -> bool:
        return math.sin(self.theta) < POLE_GUARD


def frame_vectors(theta: float, phi: float):
    """Orthonormal local frame (rhat, thetahat, phihat) as real 3-vectors."""
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    rhat = np.array([st * cp, st * sp, ct])
    thetahat = np.array([ct * cp, ct * sp, -st])
    phihat = np.array([-sp, cp, 0.0])
    return rhat, thetahat, phihat


@dataclass(frozen=True)
class SphVec:
    """Complex vector in the local spherical frame (rhat, thetahat, phihat)."""

    vr: complex
    vtheta: complex
    vphi: complex

    @property
    def components(self) -> np.ndarray:
        return np.array([self.vr, self.vtheta, self.vphi], dtype=complex)

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def dot_conj(self, other: "SphVec") -> complex:
        """Hermitian pairing v . conj(w) in the shared local frame."""
        return complex(np.vdot(other.components, self.components))

    def __add__(self, other: "SphVec") -> "SphVec":
        return SphVec(self.vr + other.vr, self.vtheta + other.vtheta,
                      self.vphi + other.vphi)

    def __mul__(self, scalar: complex) -> "SphVec":
        return SphVec(self.vr * scalar, self.vtheta * scalar, self.vphi * scalar)

    __rmul__ = __mul__


ZERO_VEC = SphVec(0.0, 0.0, 0.0)


def frame_to_cartesian(v: SphVec, p: SphPoint) -> np.ndarray:
    """Rotate frame components to Cartesian. Unitary, so norm preserving."""
    if p.at_pole:
        raise FrameDegenerateError(
            f"local frame undefined at theta = {p.theta!r} (polar axis)")
    rhat, thetahat, phihat = frame_vectors(p.theta, p.phi)
    return v.vr * rhat + v.vtheta * thetahat + v.vphi * phihat


def cartesian_to_frame(vec, p: SphPoint) -> SphVec:
    """Project a Cartesian complex 3-vector onto the local frame at p."""
    if p.at_pole:
        raise FrameDegenerateError(
            f"local frame undefined at theta = {p.theta!r} (polar axis)")
    vec = np.asarray(vec, dtype=complex)
    rhat, thetahat, phihat = frame_vectors(p.theta, p.phi)
    return SphVec(complex(vec @ rhat), complex(vec @ thetahat), complex(vec @ phihat))


# second-order tensors in the local frame -----------------------------------

# Index order is (rhat, thetahat, phihat) on both slots; entry [i, j] is the
# coefficient of ehat_i (x) ehat_j.

class SphTensor:
    """Complex 3x3 second-order tensor in the local spherical frame."""

    __slots__ = ("a",)

    def __init__(self, a=None):
        if a is None:
            self.a = np.zeros((3, 3), dtype=complex)
        else:
            self.a = np.asarray(a, dtype=complex).reshape(3, 3).copy()

    def __add__(self, other: "SphTensor") -> "SphTensor":
        return SphTensor(self.a + other.a)

    def __mul__(self, scalar: complex) -> "SphTensor":
        return SphTensor(self.a * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        """|A| = sqrt(A : conj(A))."""
        return float(np.linalg.norm(self.a))

    def __repr__(self):
        return f"SphTensor({self.a!r})"


def tensor_double_dot(A: SphTensor, B: SphTensor, conjugate: bool = True) -> complex:
    """Double inner product of two frame tensors.

    With ``conjugate`` (default) this is the Hermitian pairing
    A : conj(B) = sum_ij A_ij conj(B_ij); with ``conjugate=False`` it is the
    raw bilinear A : B.
    """
    if conjugate:
        return complex(np.sum(A.a * np.conj(B.a)))
    return complex(np.sum(A.a * B.a))
