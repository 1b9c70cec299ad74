"""Orthonormal mode basis in the weighted space, orthogonal projection, and
the reproducing kernel as a truncated tensor series.

The unit eigenvectors (script L, M, N) are almost orthonormal; only the
L/N pair couples, with the m-independent coupling c_l = <unit N, unit L>_H.
Replacing unit N by Ntilde = unit N - c_l unit L orthogonalizes the family,
and the degree-(l, m) kernel block assembles from the four L/N outer
products over ||Ntilde||^2 = 1 - |c_l|^2 plus the M outer product.

Kernel tensors are 3x3 complex matrices in Cartesian components: the two
evaluation points carry different local frames, so a frame-mixed tensor
would be ill-defined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (ElasticParams, ModeError, ModeIndex, ParameterError,
                   SphPoint)
from .hansen import (HansenTables, navier_eig, navier_eig_cartesian,
                     eig_gradient, radial_factors, radial_profile_terms)
from .inner import SphereQuadrature, h_inner_eig, h_norm_eig
from .specfun import sph_bessel_table

__all__ = [
    "OrthonormalCache", "build_cache", "CoeffField", "KernelValue",
    "eval_field", "eval_field_cartesian", "eval_field_gradient",
    "n_tilde_eval", "project", "kernel_mode", "kernel_eval",
    "kernel_section_coeffs", "reproduce_check", "HModeQuadrature",
    "random_coeff_field", "coeff_field_norm",
]


# orthonormalization cache ----------------------------------------------------

@dataclass(frozen=True)
class OrthonormalCache:
    """Norms and L/N coupling constants for all degrees l <= l_max.

    c[l] is m-independent because every closed Gram row depends on l only;
    ntilde_sq[l] = 1 - |c[l]|^2 stays strictly positive.
    """

    params: ElasticParams
    l_max: int
    norm: dict = field(repr=False)       # kind -> array over l (nan where undefined)
    c: np.ndarray = field(repr=False)
    ntilde_sq: np.ndarray = field(repr=False)

    def unit_norm(self, kind: str, l: int) -> float:
        return float(self.norm[kind][l])


def build_cache(params: ElasticParams, l_max: int) -> OrthonormalCache:
    """Compute all mode norms and couplings via the closed Gram assembly."""
    if params.equal_speeds:
        raise ParameterError(
            "kernel construction requires kp != ks: the cross radial integrals "
            "decay only for distinct wavenumbers")
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    norm = {k: np.full(l_max + 1, math.nan) for k in ("L", "M", "N")}
    c = np.zeros(l_max + 1)
    ntilde_sq = np.ones(l_max + 1)
    for l in range(l_max + 1):
        norm["L"][l] = h_norm_eig("L", l, params)
        if l >= 1:
            norm["M"][l] = h_norm_eig("M", l, params)
            norm["N"][l] = h_norm_eig("N", l, params)
            c[l] = h_inner_eig("N", "L", l, params) / (norm["N"][l] * norm["L"][l])
            if not abs(c[l]) < 1.0:
                raise ParameterError(f"|c_{l}| = {abs(c[l])} >= 1; degenerate basis")
            ntilde_sq[l] = 1.0 - c[l] ** 2
    return OrthonormalCache(params, l_max, norm, c, ntilde_sq)


# coefficient fields ----------------------------------------------------------

@dataclass(frozen=True)
class CoeffField:
    """Finite expansion sum a unit-L + b unit-M + c unit-N over (l, m) modes.

    Coefficients are taken with respect to the unit eigenvectors; l = 0
    entries must have b = c = 0 (M, N vanish identically there).
    """

    params: ElasticParams
    modes: tuple  # tuple of ((l, m), (a, b, c))

    def __post_init__(self):
        for (l, m), (a, b, cc) in self.modes:
            ModeIndex(l, m)
            if l == 0 and (b != 0 or cc != 0):
                raise ModeError("l = 0 admits only the a (L) channel")

    @classmethod
    def from_dict(cls, params: ElasticParams, d: dict) -> "CoeffField":
        items = tuple(sorted(((lm, tuple(map(complex, abc))) for lm, abc in d.items())))
        return cls(params, items)

    def as_dict(self) -> dict:
        return {lm: abc for lm, abc in self.modes}

    @property
    def support_l(self) -> int:
        return max((lm[0] for lm, _ in self.modes), default=0)


def random_coeff_field(rng: np.random.Generator, l_max: int,
                       params: ElasticParams) -> CoeffField:
    d = {}
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            a = complex(rng.normal(), rng.normal())
            b = complex(rng.normal(), rng.normal()) if l >= 1 else 0.0
            cc = complex(rng.normal(), rng.normal()) if l >= 1 else 0.0
            d[(l, m)] = (a, b, cc)
    return CoeffField.from_dict(params, d)


def coeff_field_norm(u: CoeffField, cache: OrthonormalCache) -> float:
    """||u||_H from the closed Gram structure (only L/N cross-couples)."""
    total = 0.0
    for (l, m), (a, b, cc) in u.modes:
        total += abs(a) ** 2 + abs(b) ** 2 + abs(cc) ** 2
        if l >= 1:
            total += 2.0 * cache.c[l] * (a * np.conj(cc)).real
    return math.sqrt(total)


def _unit_amp(cache: OrthonormalCache, kind: str, l: int, coeff: complex) -> complex:
    return coeff / cache.unit_norm(kind, l)


def eval_field_cartesian(u: CoeffField, xyz, cache: OrthonormalCache,
                         part: str = "all") -> np.ndarray:
    """Field value as a Cartesian vector; part selects 'all', 'p' (L terms)
    or 's' (M, N terms). Handles the origin through the eigenvector limits."""
    acc = np.zeros(3, dtype=complex)
    for (l, m), (a, b, cc) in u.modes:
        mode = ModeIndex(l, m)
        if part in ("all", "p") and a != 0:
            acc += _unit_amp(cache, "L", l, a) * navier_eig_cartesian("L", mode, xyz, u.params)
        if part in ("all", "s") and l >= 1:
            if b != 0:
                acc += _unit_amp(cache, "M", l, b) * navier_eig_cartesian("M", mode, xyz, u.params)
            if cc != 0:
                acc += _unit_amp(cache, "N", l, cc) * navier_eig_cartesian("N", mode, xyz, u.params)
    return acc


def eval_field_cartesian_many(u: CoeffField, pts, cache: OrthonormalCache,
                              part: str = "all") -> np.ndarray:
    """Vectorized field evaluation on an (n, 3) array of Cartesian points.

    Points must stay off the polar axis unless they are the exact origin
    (which goes through the eigenvector limits).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    out = np.zeros((n, 3), dtype=complex)
    r = np.linalg.norm(pts, axis=1)
    at0 = r == 0.0
    if np.any(at0):
        val0 = eval_field_cartesian(u, np.zeros(3), cache, part=part)
        out[at0] = val0
    sel = ~at0
    if not np.any(sel):
        return out
    p = pts[sel]
    rr = r[sel]
    theta = np.arccos(np.clip(p[:, 2] / rr, -1.0, 1.0))
    phi = np.arctan2(p[:, 1], p[:, 0])
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    rhat = np.stack([st * cp, st * sp, ct])
    that = np.stack([ct * cp, ct * sp, -st])
    phat = np.stack([-sp, cp, np.zeros_like(sp)])
    l_top = u.support_l
    tab = HansenTables(max(l_top, 1), theta)
    params = u.params
    jtabs = {k: sph_bessel_table(l_top + 1, k * rr)
             for k in (params.kp, params.ks)}
    acc = np.zeros((3, p.shape[0]), dtype=complex)
    for (l, m), (a, b, cc) in u.modes:
        phase = np.exp(1j * m * phi)
        for kind, coeff in (("L", a), ("M", b), ("N", cc)):
            if coeff == 0 or (kind in ("M", "N") and l == 0):
                continue
            if part == "p" and kind != "L":
                continue
            if part == "s" and kind == "L":
                continue
            amp = coeff / cache.unit_norm(kind, l)
            for hpart, terms in radial_profile_terms(kind, l, params).items():
                fac = np.zeros_like(rr)
                for t in terms:
                    fac += t.coeff * jtabs[t.k][t.order]
                acc += amp * (fac * phase) * tab.vec(hpart, l, m)
    cart = (acc[0][:, None] * rhat.T + acc[1][:, None] * that.T
            + acc[2][:, None] * phat.T)
    out[sel] = cart
    return out


def eval_field(u: CoeffField, p: SphPoint, cache: OrthonormalCache,
               part: str = "all"):
    """Field value at p as a local-frame SphVec (away from the polar axis);
    ``part`` selects 'all', the compressional 'p' or the shear 's' terms."""
    from .core import cartesian_to_frame
    vec = eval_field_cartesian(u, p.cartesian, cache, part=part)
    return cartesian_to_frame(vec, p)


def eval_field_gradient(u: CoeffField, p: SphPoint, cache: OrthonormalCache) -> np.ndarray:
    """Spherical gradient (3x3 frame tensor) of the expansion at p."""
    acc = np.zeros((3, 3), dtype=complex)
    for (l, m), (a, b, cc) in u.modes:
        mode = ModeIndex(l, m)
        for kind, coeff in (("L", a), ("M", b), ("N", cc)):
            if coeff == 0 or (kind in ("M", "N") and l == 0):
                continue
            acc += _unit_amp(cache, kind, l, coeff) * eig_gradient(kind, mode, p, u.params).a
    return acc


def n_tilde_eval(cache: OrthonormalCache, mode: ModeIndex, p: SphPoint):
    """Ntilde = unit N - c_l unit L, evaluated pointwise (frame components)."""
    if mode.l < 1:
        raise ModeError("Ntilde requires l >= 1")
    from .core import SphVec
    vN = navier_eig("N", mode, p, cache.params)
    vL = navier_eig("L", mode, p, cache.params)
    cN = 1.0 / cache.unit_norm("N", mode.l)
    cL = cache.c[mode.l] / cache.unit_norm("L", mode.l)
    comps = cN * vN.components - cL * vL.components
    return SphVec(*comps)


# quadrature H-pairings on the truncated mode span ----------------------------

class HModeQuadrature:
    """Quadrature evaluation of <u, v>_H for expansions supported on l <= l_max.

    Sphere Grams of the angular parts use the product quadrature; radial
    Grams of the spherical-Bessel factors use composite Gauss-Legendre on
    [0, r_max].  Everything is assembled once, after which each pairing is a
    small quadratic form.  The radial truncation error falls like 1/r_max^2.
    """

    def __init__(self, params: ElasticParams, cache: OrthonormalCache,
                 l_max: int, r_max: float = 10000.0, panel: float = 1.0,
                 n_gl: int = 12, n_theta: int | None = None):
        if l_max > cache.l_max:
            raise ValueError("cache does not cover the requested l_max")
        self.params, self.cache, self.l_max = params, cache, l_max
        self.r_max = r_max
        q = (SphereQuadrature.for_degree(l_max) if n_theta is None
             else SphereQuadrature.build(n_theta, 2 * l_max + 5))
        self.quad = q
        tab = HansenTables(l_max, q.theta)

        parts = []      # (eig_kind, hansen_part, l, m, radial term list)
        for kind in ("L", "M", "N"):
            for l in range(0 if kind == "L" else 1, l_max + 1):
                terms = radial_profile_terms(kind, l, params)
                for m in range(-l, l + 1):
                    for hpart, tl in terms.items():
                        parts.append((kind, hpart, l, m, tl))
        self.parts = parts
        n = len(parts)

        # angular Grams (field and gradient) with the trapezoid phi factor
        V = np.stack([tab.vec(hp, l, m) for (_, hp, l, m, _) in parts])
        G = np.stack([tab.grad(hp, l, m) for (_, hp, l, m, _) in parts])
        ms = np.array([m for (_, _, _, m, _) in parts])
        dm = ms[:, None] - ms[None, :]
        phi_fac = (np.exp(1j * np.outer(np.arange(-2 * l_max, 2 * l_max + 1), q.phi))
                   .sum(axis=1) * q.w_phi)[dm + 2 * l_max]
        wt = q.w_theta
        g0 = np.einsum("ick,jck,k->ij", V, V.conj(), wt) * phi_fac
        g1 = np.einsum("icdk,jcdk,k->ij", G, G.conj(), wt) * phi_fac
        self.g_sum = g0 + g1

        # radial quadrature Gram over [0, r_max], blocked to bound memory
        n_panel = int(math.ceil(r_max / panel))
        edges = np.linspace(0.0, r_max, n_panel + 1)
        xg, wg = np.polynomial.legendre.leggauss(n_gl)
        M = np.zeros((n, n))
        l_top = l_max + 1
        ks = sorted({t.k for p_ in parts for t in p_[4]})
        block = 4000
        for i0 in range(0, n_panel, block):
            hi = min(i0 + block, n_panel)
            mid = 0.5 * (edges[i0 + 1:hi + 1] + edges[i0:hi])
            half = 0.5 * (edges[i0 + 1:hi + 1] - edges[i0:hi])
            r = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
            w = (half[:, None] * wg[None, :]).ravel() * r * r * (1 + r * r) ** -1.5
            jtab = {k: sph_bessel_table(l_top, k * r) for k in ks}
            F = np.zeros((n, r.size))
            for i, (_, _, _, _, tl) in enumerate(parts):
                for t in tl:
                    F[i] += t.coeff * jtab[t.k][t.order]
            M += (F * w) @ F.T
        # leading analytic tail: the equal-wavenumber products have the
        # nonoscillatory mean c1 c2 cos((mu1-mu2) pi/2)/(2 k^2 r^2), whose
        # weighted integral over [r_max, inf) is (1 - R/sqrt(1+R^2))/(2 k^2)
        tail_w = 1.0 - r_max / math.sqrt(1.0 + r_max * r_max)
        for i, (_, _, _, _, ti) in enumerate(parts):
            for j, (_, _, _, _, tj) in enumerate(parts):
                corr = 0.0
                for t1 in ti:
                    for t2 in tj:
                        if t1.k == t2.k:
                            corr += (t1.coeff * t2.coeff
                                     * math.cos((t1.order - t2.order) * math.pi / 2.0)
                                     / (2.0 * t1.k**2))
                M[i, j] += corr * tail_w
        self.m_radial = M

    def _amplitudes(self, u: CoeffField) -> np.ndarray:
        d = u.as_dict()
        alpha = np.zeros(len(self.parts), dtype=complex)
        for i, (kind, _, l, m, _) in enumerate(self.parts):
            abc = d.get((l, m))
            if abc is None:
                continue
            coeff = abc[{"L": 0, "M": 1, "N": 2}[kind]]
            if coeff != 0:
                alpha[i] = _unit_amp(self.cache, kind, l, coeff)
        return alpha

    def pair(self, u: CoeffField, v: CoeffField) -> complex:
        """<u, v>_H by quadrature (sphere Grams x radial Grams)."""
        alpha = self._amplitudes(u)
        beta = self._amplitudes(v)
        return complex(alpha @ (self.m_radial * self.g_sum) @ beta.conj())

    def gram(self, fields: list) -> np.ndarray:
        A = np.stack([self._amplitudes(f) for f in fields])
        return A @ (self.m_radial * self.g_sum) @ A.conj().T

    def refined(self, factor: float = 2.0) -> "HModeQuadrature":
        return HModeQuadrature(self.params, self.cache, self.l_max,
                               r_max=self.r_max * factor)


# orthogonal projection -------------------------------------------------------

def _sample_radii(l_max: int, params: ElasticParams, n: int | None = None):
    kmin = min(params.kp, params.ks)
    n = n or max(8, 2 * (l_max + 2))
    return np.linspace(0.4 / params.ks, (l_max + 6.0) / kmin, n)


def project(cache: OrthonormalCache, u, l_max: int | None = None,
            radii=None, quad: SphereQuadrature | None = None):
    """Expansion coefficients of an in-span field from sampled angular pairings.

    ``u`` is a pointwise evaluator: either a callable accepting a Cartesian
    point and returning a complex 3-vector, or an object with that call
    signature.  For each (l, m) the angular quadrature extracts the P/B/C
    channel profiles at a set of radii; a least-squares solve against the
    known radial factors then recovers the (a, b, c) coefficients, which for
    fields in the span coincide with the orthogonal-projection pairings.

    Returns (CoeffField, raw) where raw maps (l, m) to the projection triple
    (<u, unit L>_H, <u, unit M>_H, <u, Ntilde>_H / ||Ntilde||^2).
    """
    params = cache.params
    l_max = cache.l_max if l_max is None else l_max
    if l_max > cache.l_max:
        raise ValueError("cache does not cover the requested l_max")
    q = quad or SphereQuadrature.for_degree(l_max)
    radii = _sample_radii(l_max, params) if radii is None else np.asarray(radii)
    tab = HansenTables(l_max, q.theta)
    func = u if callable(u) else u.value

    # field samples on every sphere grid (n_r, 3, n_theta, n_phi)
    T, P = np.meshgrid(q.theta, q.phi, indexing="ij")
    st, ct = np.sin(T), np.cos(T)
    sp, cp = np.sin(P), np.cos(P)
    dirs = np.stack([st * cp, st * sp, ct], axis=0)
    pts = (radii[:, None, None, None] * dirs[None]).transpose(0, 2, 3, 1)
    flat = pts.reshape(-1, 3)
    try:  # batched evaluators accept (n, 3) arrays and return (n, 3)
        vals = np.asarray(func(flat), dtype=complex)
        if vals.shape != flat.shape:
            raise TypeError
    except Exception:
        vals = np.stack([np.asarray(func(p), dtype=complex) for p in flat])
    U = vals.reshape(radii.size, q.n_theta, q.n_phi, 3).transpose(0, 3, 1, 2)
    # convert to local-frame components
    rhat = dirs
    that = np.stack([ct * cp, ct * sp, -st], axis=0)
    phat = np.stack([-sp, cp, np.zeros_like(sp)], axis=0)
    Uf = np.empty_like(U)
    Uf[:, 0] = np.einsum("rcij,cij->rij", U, rhat)
    Uf[:, 1] = np.einsum("rcij,cij->rij", U, that)
    Uf[:, 2] = np.einsum("rcij,cij->rij", U, phat)

    phase = np.exp(-1j * np.outer(np.arange(-l_max, l_max + 1), q.phi)) * q.w_phi
    coeffs = {}
    raw = {}
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            # angular pairings y_X(r) = <u(r .), X_l^m>_{S2}
            pm = phase[m + l_max]
            y = {}
            for hpart in ("P",) + (("B", "C") if l >= 1 else ()):
                prof = tab.vec(hpart, l, m)       # (3, n_theta)
                integ = np.einsum("rcij,ci,i,j->r", Uf, prof.conj(), q.w_theta, pm)
                y[hpart] = integ
            # radial design matrix: columns (a, b, c) channels
            rows, rhs = [], []
            terms = {k: radial_profile_terms(k, l, params) for k in ("L", "M", "N")}
            for ir, r in enumerate(radii):
                fPL = _terms_at(terms["L"].get("P", ()), r)
                fBL = _terms_at(terms["L"].get("B", ()), r)
                fPN = _terms_at(terms["N"].get("P", ()), r) if l >= 1 else 0.0
                fBN = _terms_at(terms["N"].get("B", ()), r) if l >= 1 else 0.0
                fCM = _terms_at(terms["M"].get("C", ()), r) if l >= 1 else 0.0
                nL = cache.unit_norm("L", l)
                rows.append([fPL / nL, 0.0,
                             fPN / cache.unit_norm("N", l) if l >= 1 else 0.0])
                rhs.append(y["P"][ir])
                if l >= 1:
                    rows.append([fBL / nL, 0.0, fBN / cache.unit_norm("N", l)])
                    rhs.append(y["B"][ir])
                    rows.append([0.0, fCM / cache.unit_norm("M", l), 0.0])
                    rhs.append(y["C"][ir])
            A = np.asarray(rows, dtype=complex)
            b = np.asarray(rhs, dtype=complex)
            sol, *_ = np.linalg.lstsq(A, b, rcond=None)
            a_c, b_c, c_c = (complex(sol[0]), complex(sol[1]), complex(sol[2]))
            if l == 0:
                b_c = c_c = 0.0
            coeffs[(l, m)] = (a_c, b_c, c_c)
            raw[(l, m)] = (a_c + cache.c[l] * c_c, b_c, c_c)
    return CoeffField.from_dict(params, coeffs), raw


def _terms_at(terms, r: float) -> float:
    from .hansen import eval_radial_terms
    return eval_radial_terms(list(terms), r)


# the reproducing kernel ------------------------------------------------------

@dataclass(frozen=True)
class KernelValue:
    """3x3 Cartesian kernel tensor with a heuristic truncation-tail estimate."""

    tensor: np.ndarray
    l_max: int
    tail_estimate: float = math.nan

    def to_json_obj(self):
        return {
            "l_max": self.l_max,
            "tail_estimate": self.tail_estimate,
            "tensor": [[[float(v.real), float(v.imag)] for v in row]
                       for row in self.tensor],
        }


def _unit_eigs_at(cache: OrthonormalCache, mode: ModeIndex, xyz):
    params = cache.params
    l = mode.l
    L = navier_eig_cartesian("L", mode, xyz, params) / cache.unit_norm("L", l)
    if l >= 1:
        M = navier_eig_cartesian("M", mode, xyz, params) / cache.unit_norm("M", l)
        N = navier_eig_cartesian("N", mode, xyz, params) / cache.unit_norm("N", l)
    else:
        M = np.zeros(3, dtype=complex)
        N = np.zeros(3, dtype=complex)
    return L, M, N


def kernel_mode(cache: OrthonormalCache, mode: ModeIndex, x, y) -> np.ndarray:
    """Degree-(l, m) kernel block: four L/N outer products over ||Ntilde||^2
    plus the M outer product, y-argument left, x-argument conjugated right."""
    l = mode.l
    Lx, Mx, Nx = _unit_eigs_at(cache, mode, x)
    Ly, My, Ny = _unit_eigs_at(cache, mode, y)
    cl = cache.c[l]
    nt2 = cache.ntilde_sq[l]
    block = (np.outer(Ly, Lx.conj()) + np.outer(Ny, Nx.conj())
             - cl * np.outer(Ly, Nx.conj())
             - np.conj(cl) * np.outer(Ny, Lx.conj())) / nt2
    return block + np.outer(My, Mx.conj())


def _mode_amplitude_envelope(cache: OrthonormalCache, l: int, r: float) -> dict:
    """sqrt((2l+1)/4 pi) times the radial two-norm of each unit eigenvector."""
    out = {}
    ang = math.sqrt((2 * l + 1) / (4 * math.pi))
    for kind in ("L", "M", "N"):
        if kind in ("M", "N") and l == 0:
            out[kind] = 0.0
            continue
        fac = radial_factors(kind, l, r, cache.params)
        amp = math.sqrt(sum(v * v for v in fac.values()))
        out[kind] = ang * amp / cache.unit_norm(kind, l)
    return out


def kernel_tail_estimate(cache: OrthonormalCache, x, y, l_max: int,
                         extra: int = 50) -> float:
    """Heuristic bound on the neglected l > l_max entries (labelled heuristic:
    the series truncation error is not quantified beyond locally uniform
    convergence, so this reports the same envelope the convergence argument
    sums, continued for ``extra`` further degrees)."""
    rx = float(np.linalg.norm(np.asarray(x, dtype=float)))
    ry = float(np.linalg.norm(np.asarray(y, dtype=float)))
    params = cache.params
    total = 0.0
    nt_min = 0.5
    for l in range(l_max + 1, l_max + extra + 1):
        # norms beyond the cache: extend on demand via the closed assembly
        normL = h_norm_eig("L", l, params)
        normM = h_norm_eig("M", l, params)
        normN = h_norm_eig("N", l, params)
        ang = math.sqrt((2 * l + 1) / (4 * math.pi))
        ampx = {k: ang * math.sqrt(sum(v * v for v in radial_factors(k, l, rx, params).values())) / n
                for k, n in (("L", normL), ("M", normM), ("N", normN))}
        ampy = {k: ang * math.sqrt(sum(v * v for v in radial_factors(k, l, ry, params).values())) / n
                for k, n in (("L", normL), ("M", normM), ("N", normN))}
        total += ((ampx["L"] + ampx["N"]) * (ampy["L"] + ampy["N"]) / nt_min
                  + ampx["M"] * ampy["M"])
    return total


def kernel_eval(cache: OrthonormalCache, x, y, l_max: int | None = None,
                with_tail: bool = True) -> KernelValue:
    """Truncated kernel sum over l <= l_max, all m."""
    l_max = cache.l_max if l_max is None else l_max
    if l_max > cache.l_max:
        raise ValueError("cache does not cover the requested l_max")
    acc = np.zeros((3, 3), dtype=complex)
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            acc += kernel_mode(cache, ModeIndex(l, m), x, y)
    tail = kernel_tail_estimate(cache, x, y, l_max) if with_tail else math.nan
    return KernelValue(acc, l_max, tail)


def kernel_section_coeffs(cache: OrthonormalCache, x, z, l_max: int) -> CoeffField:
    """Gamma(x, .) z as a coefficient field in the unit (L, M, N) basis.

    With A = conj(unit L(x)) . z etc., the section reads
    (A - c_l C / ||Ntilde||^2) unit L + B unit M + (C / ||Ntilde||^2) unit N
    where C pairs against Ntilde(x).
    """
    z = np.asarray(z, dtype=complex)
    d = {}
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            Lx, Mx, Nx = _unit_eigs_at(cache, ModeIndex(l, m), x)
            A = complex(Lx.conj() @ z)
            B = complex(Mx.conj() @ z)
            if l >= 1:
                Ntx = Nx - cache.c[l] * Lx
                C = complex(Ntx.conj() @ z) / cache.ntilde_sq[l]
                d[(l, m)] = (A - cache.c[l] * C, B, C)
            else:
                d[(l, m)] = (A, 0.0, 0.0)
    return CoeffField.from_dict(cache.params, d)


def reproduce_check(cache: OrthonormalCache, u: CoeffField, x, z,
                    l_max: int | None = None,
                    hq: HModeQuadrature | None = None) -> float:
    """|u(x) . conj(z) - <u, Gamma(x, .) z>_H| with the pairing by quadrature.

    The support of u should stay within l_max (the default leaves a margin
    of 2 above the support, matching the exact-reproduction structure).
    """
    if l_max is None:
        l_max = min(cache.l_max, u.support_l + 2)
    z = np.asarray(z, dtype=complex)
    lhs = complex(eval_field_cartesian(u, x, cache) @ z.conj())
    section = kernel_section_coeffs(cache, x, z, l_max)
    if hq is None:
        hq = HModeQuadrature(cache.params, cache, l_max)
    rhs = hq.pair(u, section)
    return abs(lhs - rhs)
