"""Planar counterpart of the spherical machinery.

Scalar building blocks F_{n,k} = J_n(k r) e^{i n phi}, the basis fields
e_n ~ grad F_{n,kp} and f_n ~ perp-grad F_{n,ks}, the angular-gradient
tensor, the weighted inner product with r dr/<r>^3, the f-tilde
orthogonalization and the 2x2 reproducing kernel.

Every radial profile in sight is an exact finite combination of ordinary
Bessel functions, kept as (coeff, order, k) term lists: closed pairings go
through the machine-precision weighted pair integrals, while the honest
quadrature route evaluates the same profiles on a radial grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import jv

from .core import ElasticParams, ParameterError
from .inner import weighted_bessel_pair_general

__all__ = [
    "PolarPoint", "CoeffField2D", "f_scalar", "basis_2d",
    "angular_gradient_2d", "h_inner_2d", "Cache2D", "build_cache_2d",
    "kernel_2d", "kernel_mode_2d", "reproduce_check_2d", "HModeQuadrature2D",
    "eval_field_2d", "kernel_section_coeffs_2d", "coeff_field_norm_2d",
    "random_coeff_field_2d",
]


@dataclass(frozen=True)
class PolarPoint:
    r: float
    varphi: float

    @classmethod
    def from_cartesian(cls, xy) -> "PolarPoint":
        x, y = (float(c) for c in xy)
        return cls(math.hypot(x, y), math.atan2(y, x) % (2.0 * math.pi))

    @property
    def cartesian(self) -> np.ndarray:
        return np.array([self.r * math.cos(self.varphi), self.r * math.sin(self.varphi)])


def f_scalar(n: int, k: float, p: PolarPoint) -> complex:
    """F_{n,k} = J_n(k r) e^{i n varphi} with J_{-n} = (-1)^n J_n."""
    return complex(jv(n, k * p.r)) * np.exp(1j * n * p.varphi)


# radial profiles as exact Bessel-term lists ----------------------------------

def _reduce(coeff: complex, order: int):
    if order < 0:
        return coeff * (-1.0) ** (-order), -order
    return coeff, order


def _combine(*term_lists):
    out = {}
    for terms in term_lists:
        for c, o, k in terms:
            c, o = _reduce(c, o)
            if c != 0.0:
                key = (o, k)
                out[key] = out.get(key, 0.0) + c
    return tuple((c, o, k) for (o, k), c in sorted(out.items()) if c != 0.0)


def _scaled(terms, factor: complex):
    return tuple((c * factor, o, k) for c, o, k in terms)


def base_profiles_2d(n: int, params: ElasticParams, which: str):
    """(alpha, beta) radial term lists of the polar components of the
    unnormalized basis fields:

    grad F_{n,kp} = kp J_n'(kp r) rhat + (i n / r) J_n(kp r) phihat,
    perp-grad F_{n,ks} = -(i n / r) J_n(ks r) rhat + ks J_n'(ks r) phihat,

    using J_n' = (J_{n-1} - J_{n+1})/2 and (n/r) J_n(kr) = k (J_{n-1}+J_{n+1})/2.
    """
    if which == "e":
        k = params.kp
        dn = _combine([(0.5 * k, n - 1, k)], [(-0.5 * k, n + 1, k)])
        overr = _combine([(0.5 * k, n - 1, k)], [(0.5 * k, n + 1, k)])
        return dn, _scaled(overr, 1j)
    if which == "f":
        k = params.ks
        dn = _combine([(0.5 * k, n - 1, k)], [(-0.5 * k, n + 1, k)])
        overr = _combine([(0.5 * k, n - 1, k)], [(0.5 * k, n + 1, k)])
        return _scaled(overr, -1j), dn
    raise ValueError(f"unknown basis tag {which!r}")


def gradient_profiles_2d(alpha, beta, n: int):
    """Angular-gradient component profiles (i n alpha - beta, alpha + i n beta)."""
    g1 = _combine(_scaled(alpha, 1j * n), _scaled(beta, -1.0))
    g2 = _combine(alpha, _scaled(beta, 1j * n))
    return g1, g2


def eval_terms_2d(terms, r) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros(r.shape, dtype=complex)
    for c, o, k in terms:
        out += c * jv(o, k * r)
    return out


def _pair_terms(tA, tB) -> complex:
    """int_0^inf A(r) conj(B(r)) r dr/<r>^3 for Bessel term lists."""
    total = 0.0 + 0.0j
    for cA, oA, kA in tA:
        for cB, oB, kB in tB:
            total += cA * np.conj(cB) * weighted_bessel_pair_general(oA, oB, kA, kB)
    return total


@lru_cache(maxsize=100000)
def _profile_bundle(n: int, which: str, params: ElasticParams):
    alpha, beta = base_profiles_2d(n, params, which)
    g1, g2 = gradient_profiles_2d(alpha, beta, n)
    return alpha, beta, g1, g2


@lru_cache(maxsize=100000)
def h_inner_basis_2d(n: int, which1: str, which2: str, params: ElasticParams) -> complex:
    """<X_n, Y_n>_H of unnormalized basis fields via exact pair integrals."""
    bu = _profile_bundle(n, which1, params)
    bv = _profile_bundle(n, which2, params)
    return 2.0 * math.pi * sum((_pair_terms(a, b) for a, b in zip(bu, bv)),
                               start=0.0 + 0.0j)


@lru_cache(maxsize=100000)
def h_norm_basis_2d(n: int, which: str, params: ElasticParams) -> float:
    val = h_inner_basis_2d(n, which, which, params)
    return math.sqrt(val.real)


# orthonormalization cache ----------------------------------------------------

@dataclass(frozen=True)
class Cache2D:
    """Norms of grad F / perp-grad F and the f/e coupling for |n| <= n_max."""

    params: ElasticParams
    n_max: int
    norm_e: dict
    norm_f: dict
    gamma: dict          # gamma_n = <f_n, e_n>_H
    ftilde_sq: dict      # 1 - |gamma_n|^2


def build_cache_2d(params: ElasticParams, n_max: int) -> Cache2D:
    if params.equal_speeds:
        raise ParameterError("2D kernel construction requires kp != ks")
    norm_e, norm_f, gamma, ftsq = {}, {}, {}, {}
    for n in range(-n_max, n_max + 1):
        norm_e[n] = h_norm_basis_2d(n, "e", params)
        norm_f[n] = h_norm_basis_2d(n, "f", params)
        g = h_inner_basis_2d(n, "f", "e", params) / (norm_f[n] * norm_e[n])
        if not abs(g) < 1.0:
            raise ParameterError(f"|gamma_{n}| = {abs(g)} >= 1; degenerate 2D basis")
        gamma[n] = complex(g)
        ftsq[n] = 1.0 - abs(g) ** 2
    return Cache2D(params, n_max, norm_e, norm_f, gamma, ftsq)


# pointwise evaluation --------------------------------------------------------

def _polar_frame(varphi: float):
    rhat = np.array([math.cos(varphi), math.sin(varphi)])
    phat = np.array([-math.sin(varphi), math.cos(varphi)])
    return rhat, phat


def basis_2d(n: int, p: PolarPoint, params: ElasticParams,
             cache: Cache2D | None = None):
    """Normalized (e_n, f_n) at p as Cartesian complex 2-vectors."""
    ne = cache.norm_e[n] if cache else h_norm_basis_2d(n, "e", params)
    nf = cache.norm_f[n] if cache else h_norm_basis_2d(n, "f", params)
    ae, be = base_profiles_2d(n, params, "e")
    af, bf = base_profiles_2d(n, params, "f")
    phase = np.exp(1j * n * p.varphi)
    rhat, phat = _polar_frame(p.varphi)
    e = (eval_terms_2d(ae, p.r)[0] * rhat + eval_terms_2d(be, p.r)[0] * phat) * phase / ne
    f = (eval_terms_2d(af, p.r)[0] * rhat + eval_terms_2d(bf, p.r)[0] * phat) * phase / nf
    return e, f


def angular_gradient_2d(u, p: PolarPoint, step: float = 1e-6) -> np.ndarray:
    """(d_phi u^r - u^phi) phihat x rhat + (d_phi u^phi + u^r) phihat x phihat
    from centered differences of the polar components of ``u``.

    ``u`` maps PolarPoint -> complex 2-vector of polar components (u^r, u^phi).
    Rows of the returned 2x2 tensor are indexed (rhat, phihat); the rhat row
    vanishes identically.
    """
    h = step
    u0 = np.asarray(u(p), dtype=complex)
    up = np.asarray(u(PolarPoint(p.r, p.varphi + h)), dtype=complex)
    um = np.asarray(u(PolarPoint(p.r, p.varphi - h)), dtype=complex)
    d = (up - um) / (2.0 * h)
    out = np.zeros((2, 2), dtype=complex)
    out[1, 0] = d[0] - u0[1]
    out[1, 1] = d[1] + u0[0]
    return out


# generic weighted inner product ----------------------------------------------

def h_inner_2d(u, v, r_max: float = 200.0, n_r_panel: float = 0.5,
               n_phi: int = 64) -> complex:
    """<u, v>_H by brute polar quadrature for callables PolarPoint -> (ur, uphi).

    The angular gradients come from the centered-difference oracle, so this
    path is slow and meant for verification at moderate accuracy.
    """
    xg, wg = np.polynomial.legendre.leggauss(12)
    n_panel = int(math.ceil(r_max / n_r_panel))
    edges = np.linspace(0.0, r_max, n_panel + 1)
    phis = np.arange(n_phi) * 2.0 * math.pi / n_phi
    wphi = 2.0 * math.pi / n_phi
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        for xk, wk in zip(xg, wg):
            r = mid + half * xk
            acc = 0.0 + 0.0j
            for ph in phis:
                p = PolarPoint(r, ph)
                uu = np.asarray(u(p), dtype=complex)
                vv = np.asarray(v(p), dtype=complex)
                gu = angular_gradient_2d(u, p)
                gv = angular_gradient_2d(v, p)
                acc += (np.vdot(vv, uu) + np.sum(gu * np.conj(gv))) * wphi
            total += half * wk * acc * r * (1.0 + r * r) ** -1.5
    return total


# coefficient fields and the kernel -------------------------------------------

@dataclass(frozen=True)
class CoeffField2D:
    """Finite expansion sum_n a_n e_n + b_n f_n over the unit basis."""

    params: ElasticParams
    modes: tuple  # ((n, (a, b)), ...)

    @classmethod
    def from_dict(cls, params: ElasticParams, d: dict) -> "CoeffField2D":
        return cls(params, tuple(sorted((int(n), (complex(a), complex(b)))
                                        for n, (a, b) in d.items())))

    def as_dict(self) -> dict:
        return {n: ab for n, ab in self.modes}

    @property
    def support_n(self) -> int:
        return max((abs(n) for n, _ in self.modes), default=0)


def random_coeff_field_2d(rng: np.random.Generator, n_max: int,
                          params: ElasticParams) -> CoeffField2D:
    d = {n: (complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal()))
         for n in range(-n_max, n_max + 1)}
    return CoeffField2D.from_dict(params, d)


def coeff_field_norm_2d(u: CoeffField2D, cache: Cache2D) -> float:
    total = 0.0
    for n, (a, b) in u.modes:
        g = cache.gamma[n]
        total += abs(a) ** 2 + abs(b) ** 2 + 2.0 * (b * np.conj(a) * g).real
    return math.sqrt(total)


def eval_field_2d(u: CoeffField2D, p: PolarPoint, cache: Cache2D) -> np.ndarray:
    out = np.zeros(2, dtype=complex)
    for n, (a, b) in u.modes:
        e, f = basis_2d(n, p, u.params, cache)
        out += a * e + b * f
    return out


def kernel_mode_2d(cache: Cache2D, n: int, x, y) -> np.ndarray:
    """Order-n kernel block, y-argument left, x-argument conjugated right."""
    px = PolarPoint.from_cartesian(x)
    py = PolarPoint.from_cartesian(y)
    ex, fx = basis_2d(n, px, cache.params, cache)
    ey, fy = basis_2d(n, py, cache.params, cache)
    g = cache.gamma[n]
    return (np.outer(ey, ex.conj()) + np.outer(fy, fx.conj())
            - g * np.outer(ey, fx.conj())
            - np.conj(g) * np.outer(fy, ex.conj())) / cache.ftilde_sq[n]


def kernel_2d(x, y, n_max: int, params: ElasticParams,
              cache: Cache2D | None = None) -> np.ndarray:
    """Truncated 2x2 kernel sum over |n| <= n_max."""
    if params.equal_speeds:
        raise ParameterError("2D kernel requires kp != ks")
    cache = cache or build_cache_2d(params, n_max)
    if n_max > cache.n_max:
        raise ValueError("cache does not cover the requested n_max")
    acc = np.zeros((2, 2), dtype=complex)
    for n in range(-n_max, n_max + 1):
        acc += kernel_mode_2d(cache, n, x, y)
    return acc


def kernel_section_coeffs_2d(cache: Cache2D, x, z, n_max: int) -> CoeffField2D:
    """Gamma(x, .) z in (e, f) coordinates: (A - gamma C) e + C f with
    A = conj(e(x)).z and C = conj(ftilde(x)).z / ||ftilde||^2."""
    z = np.asarray(z, dtype=complex)
    px = PolarPoint.from_cartesian(x)
    d = {}
    for n in range(-n_max, n_max + 1):
        ex, fx = basis_2d(n, px, cache.params, cache)
        A = complex(ex.conj() @ z)
        ft = fx - cache.gamma[n] * ex
        C = complex(ft.conj() @ z) / cache.ftilde_sq[n]
        d[n] = (A - cache.gamma[n] * C, C)
    return CoeffField2D.from_dict(cache.params, d)


class HModeQuadrature2D:
    """Quadrature H-pairings on the span |n| <= n_max (radial grid x exact
    angular 2 pi delta factors), with the leading analytic radial tail."""

    def __init__(self, params: ElasticParams, cache: Cache2D, n_max: int,
                 r_max: float = 10000.0, panel: float = 1.0, n_gl: int = 12):
        if n_max > cache.n_max:
            raise ValueError("cache does not cover the requested n_max")
        self.params, self.cache, self.n_max = params, cache, n_max
        self.r_max = r_max
        parts = []
        for n in range(-n_max, n_max + 1):
            for which in ("e", "f"):
                parts.append((n, which, _profile_bundle(n, which, params)))
        self.parts = parts
        nparts = len(parts)
        M = np.zeros((nparts, nparts), dtype=complex)
        n_panel = int(math.ceil(r_max / panel))
        edges = np.linspace(0.0, r_max, n_panel + 1)
        xg, wg = np.polynomial.legendre.leggauss(n_gl)
        block = 4000
        for i0 in range(0, n_panel, block):
            hi = min(i0 + block, n_panel)
            mid = 0.5 * (edges[i0 + 1:hi + 1] + edges[i0:hi])
            half = 0.5 * (edges[i0 + 1:hi + 1] - edges[i0:hi])
            r = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
            w = (half[:, None] * wg[None, :]).ravel() * r * (1 + r * r) ** -1.5
            prof = np.stack([np.stack([eval_terms_2d(t, r) for t in bundle])
                             for (_, _, bundle) in parts])  # (nparts, 4, nr)
            M += np.einsum("icr,jcr,r->ij", prof, prof.conj(), w)
        # analytic tail of the equal-wavenumber nonoscillatory means:
        # J_mu(kr) J_nu(kr) ~ cos((mu - nu) pi/2) / (pi k r)
        tail_w = 1.0 - r_max / math.sqrt(1.0 + r_max * r_max)
        for i, (_, _, bi) in enumerate(parts):
            for j, (_, _, bj) in enumerate(parts):
                corr = 0.0 + 0.0j
                for ti, tj in zip(bi, bj):
                    for c1, o1, k1 in ti:
                        for c2, o2, k2 in tj:
                            if k1 == k2:
                                corr += (c1 * np.conj(c2)
                                         * math.cos((o1 - o2) * math.pi / 2.0)
                                         / (math.pi * k1))
                M[i, j] += corr * tail_w
        ns = np.array([n for (n, _, _) in parts])
        self.m_radial = M * (2.0 * math.pi) * (ns[:, None] == ns[None, :])

    def _amplitudes(self, u: CoeffField2D) -> np.ndarray:
        d = u.as_dict()
        alpha = np.zeros(len(self.parts), dtype=complex)
        for i, (n, which, _) in enumerate(self.parts):
            ab = d.get(n)
            if ab is None:
                continue
            coeff = ab[0] if which == "e" else ab[1]
            if coeff != 0:
                norm = (self.cache.norm_e if which == "e" else self.cache.norm_f)[n]
                alpha[i] = coeff / norm
        return alpha

    def pair(self, u: CoeffField2D, v: CoeffField2D) -> complex:
        return complex(self._amplitudes(u) @ self.m_radial @ self._amplitudes(v).conj())

    def gram(self, fields: list) -> np.ndarray:
        A = np.stack([self._amplitudes(f) for f in fields])
        return A @ self.m_radial @ A.conj().T


def reproduce_check_2d(cache: Cache2D, u: CoeffField2D, x, z,
                       n_max: int | None = None,
                       hq: HModeQuadrature2D | None = None) -> float:
    """|u(x) . conj(z) - <u, Gamma(x, .) z>_H| with the pairing by quadrature."""
    if n_max is None:
        n_max = min(cache.n_max, u.support_n + 2)
    z = np.asarray(z, dtype=complex)
    lhs = complex(eval_field_2d(u, PolarPoint.from_cartesian(x), cache) @ z.conj())
    section = kernel_section_coeffs_2d(cache, x, z, n_max)
    if hq is None:
        hq = HModeQuadrature2D(cache.params, cache, n_max)
    rhs = hq.pair(u, section)
    return abs(lhs - rhs)
