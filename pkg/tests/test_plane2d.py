import math

import numpy as np
import pytest
from scipy.special import jv

from elastic_herglotz.core import ParameterError, make_params
from elastic_herglotz.plane2d import (Cache2D, CoeffField2D, HModeQuadrature2D,
                                      PolarPoint, angular_gradient_2d, basis_2d,
                                      base_profiles_2d, build_cache_2d,
                                      coeff_field_norm_2d, eval_field_2d,
                                      eval_terms_2d, f_scalar, h_inner_basis_2d,
                                      h_norm_basis_2d, h_inner_2d, kernel_2d,
                                      random_coeff_field_2d, reproduce_check_2d)


@pytest.fixture(scope="module")
def cache2(params12):
    return build_cache_2d(params12, 6)


@pytest.fixture(scope="module")
def hq2(params12, cache2):
    return HModeQuadrature2D(params12, cache2, 6)


class TestPolarPoint:
    def test_roundtrip(self, rng):
        for _ in range(20):
            xy = rng.normal(size=2) * rng.uniform(0.1, 50)
            p = PolarPoint.from_cartesian(xy)
            np.testing.assert_allclose(p.cartesian, xy, rtol=1e-12, atol=1e-12)


class TestFScalar:
    def test_j0_at_origin(self, params12):
        assert f_scalar(0, 1.0, PolarPoint(0.0, 0.3)) == pytest.approx(1.0)

    def test_n3_at_origin(self, params12):
        assert f_scalar(3, 1.0, PolarPoint(0.0, 0.3)) == pytest.approx(0.0)

    def test_negative_order_symmetry(self):
        p = PolarPoint(1.7, 0.0)
        assert f_scalar(-3, 2.0, p) == pytest.approx((-1) ** 3 * f_scalar(3, 2.0, p))

    @pytest.mark.parametrize("n,k", [(0, 1.0), (2, 2.0), (-1, 1.5)])
    def test_helmholtz_residual(self, n, k, rng):
        # lap F + k^2 F = 0 via Cartesian centered differences
        def F(xy):
            return f_scalar(n, k, PolarPoint.from_cartesian(xy))
        h = 1e-4
        for _ in range(4):
            xy = rng.normal(size=2) * rng.uniform(0.5, 2.0)
            lap = (F(xy + [h, 0]) + F(xy - [h, 0]) + F(xy + [0, h]) + F(xy - [0, h])
                   - 4 * F(xy)) / h**2
            res = abs(lap + k * k * F(xy)) / (k * k * abs(F(xy)) + 1e-30)
            assert res <= 1e-6


class TestBasisProfiles:
    def test_grad_F0_is_radial_bessel(self, params12):
        alpha, beta = base_profiles_2d(0, params12, "e")
        r = np.linspace(0.1, 5.0, 7)
        np.testing.assert_allclose(eval_terms_2d(alpha, r),
                                   -params12.kp * jv(1, params12.kp * r), rtol=1e-13)
        assert np.all(eval_terms_2d(beta, r) == 0)

    def test_profiles_match_direct_derivatives(self, params12):
        # alpha = k J_n'(kr), beta = (i n / r) J_n(kr) against direct formulas
        n, k = 3, params12.ks
        alpha, beta = base_profiles_2d(n, params12, "f")  # perp: (-i n/r J, k J')
        r = np.linspace(0.2, 6.0, 9)
        jp = 0.5 * (jv(n - 1, k * r) - jv(n + 1, k * r))
        np.testing.assert_allclose(eval_terms_2d(beta, r), k * jp, rtol=1e-13)
        np.testing.assert_allclose(eval_terms_2d(alpha, r),
                                   -1j * n / r * jv(n, k * r), rtol=1e-12)

    def test_norm_e_bounded(self, params12):
        vals = [h_norm_basis_2d(n, "e", params12) for n in range(10, 41, 3)]
        assert max(vals) / min(vals) <= 1.2

    def test_fe_coupling_decays(self, params12):
        g = [abs(h_inner_basis_2d(n, "f", "e", params12))
             / (h_norm_basis_2d(n, "f", params12) * h_norm_basis_2d(n, "e", params12))
             for n in range(10, 41, 10)]
        assert all(g2 < g1 for g1, g2 in zip(g, g[1:]))
        assert g[-1] < 1e-8


class TestBasisFields:
    def test_e_f_h_orthogonality_cross_n(self, params12, cache2, hq2):
        fields = [CoeffField2D.from_dict(params12, {n: (1.0, 0.0)}) for n in (-2, 0, 3)]
        fields += [CoeffField2D.from_dict(params12, {n: (0.0, 1.0)}) for n in (-1, 2)]
        G = hq2.gram(fields)
        off = G - np.diag(np.diag(G))
        assert np.abs(off).max() <= 1e-10

    def test_e_normalized(self, params12, cache2, hq2):
        e1 = CoeffField2D.from_dict(params12, {1: (1.0, 0.0)})
        assert hq2.pair(e1, e1).real == pytest.approx(1.0, abs=1e-10)

    def test_pointwise_value_finite_at_origin(self, params12, cache2):
        e, f = basis_2d(1, PolarPoint(0.0, 0.0), params12, cache2)
        assert np.all(np.isfinite(e)) and np.all(np.isfinite(f))
        e2, f2 = basis_2d(1, PolarPoint(0.0, 1.1), params12, cache2)
        np.testing.assert_allclose(e, e2, atol=1e-14)  # limit is direction-free


class TestAngularGradient:
    def test_constant_radial_field(self):
        u = lambda p: np.array([0.7 - 0.2j, 0.0])
        g = angular_gradient_2d(u, PolarPoint(1.0, 0.4))
        want = np.zeros((2, 2), dtype=complex)
        want[1, 1] = 0.7 - 0.2j
        np.testing.assert_allclose(g, want, atol=1e-9)

    def test_matches_cartesian_angular_derivative_norm(self, params12, cache2, rng):
        # |grad_phi u| equals |(d_phi u^1, d_phi u^2)| of Cartesian components
        u = CoeffField2D.from_dict(params12, {2: (0.8, -0.3j), 1: (0.1, 0.5)})

        def polar_comps(p):
            vec = eval_field_2d(u, p, cache2)
            rhat = np.array([math.cos(p.varphi), math.sin(p.varphi)])
            phat = np.array([-math.sin(p.varphi), math.cos(p.varphi)])
            return np.array([vec @ rhat, vec @ phat])

        h = 1e-6
        for _ in range(5):
            p = PolarPoint(rng.uniform(0.3, 2.0), rng.uniform(0, 2 * math.pi))
            g = angular_gradient_2d(polar_comps, p)
            up = eval_field_2d(u, PolarPoint(p.r, p.varphi + h), cache2)
            um = eval_field_2d(u, PolarPoint(p.r, p.varphi - h), cache2)
            dcart = (up - um) / (2 * h)
            assert np.linalg.norm(g) == pytest.approx(np.linalg.norm(dcart), abs=1e-8)

    def test_matches_profile_combination(self, params12, cache2, rng):
        # FD assembly vs the (i n alpha - beta, alpha + i n beta) structure
        n = 2
        alpha, beta = base_profiles_2d(n, params12, "e")
        r = 1.3

        def comps(p):
            ph = np.exp(1j * n * p.varphi)
            return np.array([eval_terms_2d(alpha, p.r)[0] * ph,
                             eval_terms_2d(beta, p.r)[0] * ph])

        p = PolarPoint(r, 0.7)
        g = angular_gradient_2d(comps, p)
        a0 = eval_terms_2d(alpha, r)[0] * np.exp(1j * n * p.varphi)
        b0 = eval_terms_2d(beta, r)[0] * np.exp(1j * n * p.varphi)
        assert g[1, 0] == pytest.approx(1j * n * a0 - b0, abs=1e-7)
        assert g[1, 1] == pytest.approx(a0 + 1j * n * b0, abs=1e-7)


class TestHInner2D:
    def test_hermitian_on_random_fields(self, params12, cache2, hq2, rng):
        u = random_coeff_field_2d(rng, 3, params12)
        v = random_coeff_field_2d(rng, 3, params12)
        assert hq2.pair(u, v) == pytest.approx(np.conj(hq2.pair(v, u)), rel=1e-10)

    def test_bruteforce_path_agrees(self, params12, cache2, hq2):
        # the generic FD + polar quadrature route against the structured one,
        # both truncated at the same r_max so the shared tail cancels
        u = CoeffField2D.from_dict(params12, {1: (1.0, 0.0)})
        v = CoeffField2D.from_dict(params12, {1: (0.3, -0.7j)})

        def mk(field):
            def comps(p):
                vec = eval_field_2d(field, p, cache2)
                rhat = np.array([math.cos(p.varphi), math.sin(p.varphi)])
                phat = np.array([-math.sin(p.varphi), math.cos(p.varphi)])
                return np.array([vec @ rhat, vec @ phat])
            return comps

        brute = h_inner_2d(mk(u), mk(v), r_max=60.0, n_phi=16)
        hq_trunc = HModeQuadrature2D(params12, cache2, 2, r_max=60.0, panel=0.5)
        want = hq_trunc.pair(u, v)
        # remove the analytic tail the structured path adds beyond r_max
        assert brute == pytest.approx(want, abs=2e-4)


class TestKernel2D:
    def test_equal_speeds_rejected(self):
        degenerate = make_params(-1.0, 1.0, 1.0, 1.0)
        with pytest.raises(ParameterError):
            kernel_2d([1.0, 0.0], [0.0, 1.0], 3, degenerate)

    def test_hermitian_and_psd(self, params12, cache2, rng):
        for _ in range(8):
            x = rng.normal(size=2) * rng.uniform(0.2, 2.5)
            y = rng.normal(size=2) * rng.uniform(0.2, 2.5)
            Kxy = kernel_2d(x, y, 6, params12, cache2)
            Kyx = kernel_2d(y, x, 6, params12, cache2)
            np.testing.assert_allclose(Kyx, Kxy.conj().T, atol=1e-12)
            Kxx = kernel_2d(x, x, 6, params12, cache2)
            evs = np.linalg.eigvalsh(0.5 * (Kxx + Kxx.conj().T))
            assert evs.min() >= -1e-10 * np.trace(Kxx).real

    def test_truncation_refinement(self, params12, rng):
        big = build_cache_2d(params12, 12)
        for _ in range(3):
            x = rng.normal(size=2) * rng.uniform(0.3, 2.0)
            y = rng.normal(size=2) * rng.uniform(0.3, 2.0)
            K8 = kernel_2d(x, y, 8, params12, big)
            K12 = kernel_2d(x, y, 12, params12, big)
            assert np.abs(K12 - K8).max() < 1e-8


class TestReproduce2D:
    def test_basis_element(self, params12, cache2, hq2):
        u = CoeffField2D.from_dict(params12, {1: (1.0, 0.0)})
        for x in ([0.8, -0.3], [1.5, 2.0], [0.05, 0.02]):
            res = reproduce_check_2d(cache2, u, x, [1.0, 0.0], 3, hq2)
            assert res <= 1e-6 * coeff_field_norm_2d(u, cache2)

    def test_random_fields(self, params12, cache2, hq2, rng):
        u = random_coeff_field_2d(rng, 4, params12)
        nu = coeff_field_norm_2d(u, cache2)
        worst = 0.0
        for _ in range(8):
            x = rng.normal(size=2)
            x *= rng.uniform(0.2, 3.0) / np.linalg.norm(x)
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            worst = max(worst, reproduce_check_2d(cache2, u, x, z, 6, hq2))
        assert worst <= 1e-6 * nu

    def test_gram_identity(self, params12, cache2, hq2):
        fields = []
        for n in range(-5, 6):
            fields.append(CoeffField2D.from_dict(params12, {n: (1.0, 0.0)}))
            ft = math.sqrt(cache2.ftilde_sq[n])
            fields.append(CoeffField2D.from_dict(
                params12, {n: (-cache2.gamma[n] / ft, 1.0 / ft)}))
        G = hq2.gram(fields)
        assert np.abs(G - np.eye(len(fields))).max() <= 1e-8


class TestClassicalIdentity:
    def test_sum_of_squares(self):
        # sum_n J_n(r)^2 = 1; classical sanity check for the quadrature scale,
        # independent of anything derived here
        for r in (0.7, 2.37, 9.1):
            total = sum(jv(n, r) ** 2 for n in range(-80, 81))
            assert total == pytest.approx(1.0, abs=1e-12)
