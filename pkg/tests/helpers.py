"""Shared independent oracles for the test-suite: brute sphere quadrature and
Cartesian finite-difference operators. Deliberately kept separate from the
package's own quadrature machinery."""
import math

import numpy as np

from elastic_herglotz.specfun import sph_bessel_table, sph_harmonic


def sphere_quad(n_theta=16, n_phi=33):
    """Gauss-Legendre x trapezoid product rule; returns (theta, phi, w) flat arrays."""
    xg, wg = np.polynomial.legendre.leggauss(n_theta)
    thetas = np.arccos(xg)
    phis = np.arange(n_phi) * 2.0 * math.pi / n_phi
    T, Ph = np.meshgrid(thetas, phis, indexing="ij")
    W = np.outer(wg, np.full(n_phi, 2.0 * math.pi / n_phi))
    return T.ravel(), Ph.ravel(), W.ravel()


def sphere_inner_bruteforce(u, v, n_theta=16, n_phi=33):
    """<u, v>_{L2(S2)} with u, v callables (theta, phi) -> SphVec or SphTensor."""
    T, Ph, W = sphere_quad(n_theta, n_phi)
    total = 0.0 + 0.0j
    for t, p, w in zip(T, Ph, W):
        a, b = u(t, p), v(t, p)
        if hasattr(a, "components"):
            total += w * np.vdot(b.components, a.components)
        else:
            total += w * np.sum(a.a * np.conj(b.a))
    return total


def scalar_wave(l, m, k):
    """F(x) = j_l(k r) Y_l^m(theta, phi) as a Cartesian callable."""
    def F(xyz):
        x, y, z = xyz
        r = math.sqrt(x * x + y * y + z * z)
        if r == 0.0:
            return (1.0 + 0j) * sph_bessel_table(l, np.array([0.0]))[l, 0]
        theta = math.acos(max(-1.0, min(1.0, z / r)))
        phi = math.atan2(y, x) % (2 * math.pi)
        jl = sph_bessel_table(l, np.array([k * r]))[l, 0]
        return jl * sph_harmonic(l, m, theta, phi)
    return F


def fd_gradient_scalar(F, xyz, h=1e-5):
    xyz = np.asarray(xyz, dtype=float)
    out = np.zeros(3, dtype=complex)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out[i] = (F(xyz + e) - F(xyz - e)) / (2 * h)
    return out


def fd_jacobian(V, xyz, h=1e-5):
    """J[i, j] = d V_i / d x_j of a Cartesian vector field callable."""
    xyz = np.asarray(xyz, dtype=float)
    J = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, j] = (np.asarray(V(xyz + e)) - np.asarray(V(xyz - e))) / (2 * h)
    return J


def fd_curl(V, xyz, h=1e-5):
    J = fd_jacobian(V, xyz, h)
    return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def fd_divergence(V, xyz, h=1e-5):
    return np.trace(fd_jacobian(V, xyz, h))
