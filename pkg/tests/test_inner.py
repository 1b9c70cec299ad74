import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import jv

from elastic_herglotz.core import (ModeError, ModeIndex, ParameterError,
                                   ResolutionError, SphVec)
from elastic_herglotz.hansen import navier_eig
from elastic_herglotz.inner import (
    DecayReport, RadialQuadrature, SphereQuadrature, bessel_pair_integral,
    cross_decay_report, diag_decay_report, eig_gram_quadrature, gram_closed,
    h_inner, h_inner_eig, h_norm_eig, hansen_grad_gram, hansen_gram_quadrature,
    make_eig_evaluator, radial_integral, radial_integral_with_tail,
    sphere_inner, weighted_bessel_pair_general)
from elastic_herglotz.specfun import sph_bessel_j, sph_harmonic


class TestSphereQuadrature:
    def test_total_weight(self):
        q = SphereQuadrature.for_degree(8)
        assert q.total_weight == pytest.approx(4 * math.pi, abs=1e-12)

    def test_harmonic_orthonormality(self):
        q = SphereQuadrature.for_degree(8)
        for (l, m) in [(0, 0), (3, 2), (8, -5)]:
            for (l2, m2) in [(0, 0), (3, 2), (5, -5)]:
                u = lambda t, p: SphVec(sph_harmonic(l, m, t, p), 0, 0)
                v = lambda t, p: SphVec(sph_harmonic(l2, m2, t, p), 0, 0)
                want = 1.0 if (l, m) == (l2, m2) else 0.0
                assert sphere_inner(u, v, 1.0, q, degree=max(l, l2)) == pytest.approx(
                    want, abs=1e-12)

    def test_resolution_error(self):
        q = SphereQuadrature.for_degree(3)
        u = lambda t, p: SphVec(1.0, 0, 0)
        with pytest.raises(ResolutionError):
            sphere_inner(u, u, 1.0, q, degree=9)

    def test_y00_unit(self):
        q = SphereQuadrature.for_degree(2)
        u = lambda t, p: SphVec(sph_harmonic(0, 0, t, p), 0, 0)
        assert sphere_inner(u, u, 1.0, q) == pytest.approx(1.0, abs=1e-14)


class TestSphereInnerEig:
    def test_LM_orthogonal(self, params12):
        q = SphereQuadrature.for_degree(4)
        mode = ModeIndex(2, 1)
        u = lambda t, p: navier_eig("L", mode, _pt(0.7, t, p), params12)
        v = lambda t, p: navier_eig("M", mode, _pt(0.7, t, p), params12)
        assert abs(sphere_inner(u, v, 0.7, q)) < 1e-12

    def test_MM_closed_value(self, params12):
        q = SphereQuadrature.for_degree(3)
        mode = ModeIndex(1, 0)
        u = lambda t, p: navier_eig("M", mode, _pt(1.0, t, p), params12)
        want = 2.0 * sph_bessel_j(1, params12.ks) ** 2
        assert sphere_inner(u, u, 1.0, q) == pytest.approx(want, rel=1e-12)


def _pt(r, t, p):
    from elastic_herglotz.core import SphPoint
    return SphPoint(r, t, p)


class TestRadialIntegral:
    def test_divergent_rejected(self):
        q = RadialQuadrature.build(100.0)
        one = lambda r: np.ones_like(r)
        with pytest.raises(ValueError, match="decay"):
            radial_integral(one, one, q)

    def test_j0_self_refinement(self):
        f = lambda r: np.sin(r) / np.maximum(r, 1e-300)
        # doubled node density on the same interval: pure discretization check
        v1 = radial_integral(f, f, RadialQuadrature.build(300.0, panel=0.5))
        v3 = radial_integral(f, f, RadialQuadrature.build(300.0, panel=0.25))
        assert v1.real == pytest.approx(v3.real, abs=1e-10)
        # extending r_max shifts the value by no more than the missing tail
        v2 = radial_integral(f, f, RadialQuadrature.build(600.0, panel=0.25))
        assert abs(v1.real - v2.real) <= 1.0 / (4 * 300.0**2)

    def test_nonfinite_sample_reported(self):
        q = RadialQuadrature.build(10.0)
        f = lambda r: np.where(r > 5.0, np.nan, 1.0) / (1 + r**2)
        with pytest.raises(ValueError, match="non-finite"):
            radial_integral(f, f, q)

    def test_tail_bound_returned(self):
        q = RadialQuadrature.build(200.0)
        f = lambda r: np.sin(r) / np.maximum(r, 1e-300)
        value, bound = radial_integral_with_tail(f, f, q)
        assert bound > 0
        # true tail of int sin^2/r * r^2/<r>^3 ~ 1/(4 R^2) is inside the bound
        assert bound >= 0.8 / (4 * q.r_max**2)


class TestBesselPairIntegral:
    def test_small_order_vs_adaptive_quad(self):
        for (l, a, b) in [(0, 1.0, 2.0), (2, 1.0, 1.5), (3, 2.0, 1.0)]:
            def integrand(r):
                if r == 0.0:
                    return 0.0
                return (sph_bessel_j(l, a * r) * sph_bessel_j(l, b * r)
                        * r * r * (1 + r * r) ** -1.5)
            ref, err = quad(integrand, 0, 4000, limit=4000, epsabs=1e-13, epsrel=1e-13)
            assert bessel_pair_integral(l, a, b) == pytest.approx(ref, abs=5e-11)

    def test_contour_radius_independence(self):
        # two very different contour splits must agree; a strong internal
        # consistency check on the rotated-tail construction
        for (l, a, b) in [(20, 1.0, 2.0), (40, 1.0, 1.5), (30, 1.0, 1.1), (50, 1.0, 1.0)]:
            v1 = weighted_bessel_pair_general(l + 0.5, l + 0.5, a, b)
            v2 = weighted_bessel_pair_general(l + 0.5, l + 0.5, a, b,
                                              R=2.5 * (1.3 * (l + 0.5) / min(a, b) + 10.0))
            assert abs(v1 - v2) < 1e-17 + 1e-10 * abs(v1)

    def test_symmetry(self):
        for l in (3, 17, 33):
            assert bessel_pair_integral(l, 1.0, 2.0) == pytest.approx(
                bessel_pair_integral(l, 2.0, 1.0), rel=1e-12)

    def test_positive_diagonal(self):
        for l in range(0, 45, 7):
            assert bessel_pair_integral(l, 1.3, 1.3) > 0

    def test_against_truncated_quadrature(self):
        # brute [0, r_max] quadrature agrees within its own certified tail
        q = RadialQuadrature.build(400.0, panel=0.4)
        for (l, a, b) in [(4, 1.0, 2.0), (9, 2.0, 2.0)]:
            fa = lambda r: np.sqrt(np.pi / (2 * a * r)) * jv(l + 0.5, a * r)
            fb = lambda r: np.sqrt(np.pi / (2 * b * r)) * jv(l + 0.5, b * r)
            val, bound = radial_integral_with_tail(fa, fb, q)
            assert abs(val.real - bessel_pair_integral(l, a, b)) <= bound + 1e-12


class TestGramClosed:
    def test_LL_l0(self, params12):
        r = 1.4
        g = gram_closed(("L", "L"), ModeIndex(0, 0), ModeIndex(0, 0), r, params12)
        want = params12.kp**2 * sph_bessel_j(1, params12.kp * r) ** 2
        assert g.value == pytest.approx(want, rel=1e-13)

    def test_zero_rows(self, params12):
        g = gram_closed(("L", "M"), ModeIndex(3, 1), ModeIndex(3, 1), 0.9, params12)
        assert g.value == 0.0
        g = gram_closed(("M", "N"), ModeIndex(2, 0), ModeIndex(2, 0), 0.9, params12,
                        gradient=True)
        assert g.value == 0.0

    def test_mode_mismatch_exact_zero(self, params12):
        g = gram_closed(("L", "L"), ModeIndex(3, 1), ModeIndex(2, 1), 0.9, params12)
        assert g.value == 0.0

    def test_all_rows_vs_quadrature(self, params12):
        q = SphereQuadrature.for_degree(6)
        for r in (0.3, 1.0, 2.7):
            labels, g0, g1 = eig_gram_quadrature(params12, 6, r, q)
            diag = np.real(np.diag(g0) + np.diag(g1))
            for i, (ki, li, mi) in enumerate(labels.entries):
                for j, (kj, lj, mj) in enumerate(labels.entries):
                    c0 = gram_closed((ki, kj), ModeIndex(li, mi), ModeIndex(lj, mj),
                                     r, params12).value
                    c1 = gram_closed((ki, kj), ModeIndex(li, mi), ModeIndex(lj, mj),
                                     r, params12, gradient=True).value
                    scale = math.sqrt(diag[i] * diag[j]) + 1e-300
                    if c0 == 0.0:
                        assert abs(g0[i, j]) <= 1e-10 * scale
                    else:
                        assert abs(g0[i, j] - c0) <= 1e-10 * abs(c0)
                    if c1 == 0.0:
                        assert abs(g1[i, j]) <= 1e-10 * scale
                    else:
                        assert abs(g1[i, j] - c1) <= 1e-10 * abs(c1)


class TestHansenGradGram:
    def test_closed_values_vs_quadrature(self):
        q = SphereQuadrature.for_degree(6)
        labels, h0, h1 = hansen_gram_quadrature(6, q)
        for i, (ki, li, mi) in enumerate(labels.entries):
            for j, (kj, lj, mj) in enumerate(labels.entries):
                want = hansen_grad_gram((ki, kj), li) if (li, mi) == (lj, mj) else 0.0
                assert abs(h1[i, j] - want) < 1e-10
        # the harmonics themselves are orthonormal
        np.testing.assert_allclose(h0, np.eye(h0.shape[0]), atol=1e-12)


class TestHInnerEig:
    def test_LM_zero(self, params12):
        for l in (1, 3, 6):
            assert h_inner_eig("L", "M", l, params12) == 0.0
            assert h_inner_eig("M", "N", l, params12) == 0.0

    def test_MM_positive(self, params12):
        assert h_inner_eig("M", "M", 1, params12) > 0

    def test_h_inner_quadrature_vs_closed_assembly(self, params12):
        # both sides on the same radial rule: tests the angular reduction
        q_r = RadialQuadrature.build(60.0, panel=0.5)
        q_s = SphereQuadrature.for_degree(3)
        mode = ModeIndex(1, 0)
        u = make_eig_evaluator("L", mode, params12)
        v = make_eig_evaluator("N", mode, params12)
        got = h_inner(u, v, q_r, q_s)
        fexp = lambda r: np.array([
            gram_closed(("L", "N"), mode, mode, ri, params12).value
            + gram_closed(("L", "N"), mode, mode, ri, params12, gradient=True).value
            for ri in np.atleast_1d(r)])
        one = lambda r: np.ones_like(np.atleast_1d(r))
        want = radial_integral(fexp, one, q_r)
        assert got.real == pytest.approx(want.real, abs=1e-9)
        assert abs(got.imag) < 1e-10

    def test_h_norm_scaling_L_bounded(self, params12):
        vals = [h_norm_eig("L", l, params12) for l in range(10, 41)]
        assert max(vals) / min(vals) <= 2.0

    def test_h_norm_scaling_MN_linear(self, params12):
        for kind in ("M", "N"):
            ratios = [h_norm_eig(kind, l, params12) / l for l in range(20, 41)]
            mid = (max(ratios) + min(ratios)) / 2
            assert max(ratios) <= 1.15 * mid and min(ratios) >= 0.85 * mid

    def test_h_norm_rejects_l0_tangential(self, params12):
        with pytest.raises(ModeError):
            h_norm_eig("M", 0, params12)

    def test_m_independence_via_quadrature(self, params12):
        # quadrature H inner products agree across m (closed forms are m-free)
        q_r = RadialQuadrature.build(40.0, panel=0.5)
        q_s = SphereQuadrature.for_degree(3)
        vals = []
        for m in (-2, 0, 1):
            u = make_eig_evaluator("M", ModeIndex(3, m), params12)
            vals.append(h_inner(u, u, q_r, q_s).real)
        assert max(vals) - min(vals) <= 1e-10 * max(vals)


class TestDecayReports:
    def test_diagonal_slope_and_positivity(self):
        rep = diag_decay_report(range(2, 46), 1.0)
        assert -2.3 <= rep.slope <= -1.7
        assert np.all(rep.values > 0)

    def test_diagonal_self_refinement(self):
        v1 = bessel_pair_integral(20, 1.0, 1.0)
        v2 = weighted_bessel_pair_general(20.5, 20.5, 1.0, 1.0, R=90.0)
        v2 *= math.pi / 2.0
        assert abs(v1 - v2) <= 1e-9 * abs(v1)

    def test_cross_rates(self):
        for (a, b) in [(1.0, 2.0), (1.0, 1.5)]:
            rep = cross_decay_report(range(20, 41), a, b)
            assert rep.slope == pytest.approx(math.log(min(a / b, b / a)), rel=0.05)

    def test_cross_symmetric_and_equal_rejected(self):
        with pytest.raises(ParameterError):
            cross_decay_report(range(10, 20), 1.0, 1.0)
        r1 = cross_decay_report(range(20, 31), 1.0, 2.0)
        r2 = cross_decay_report(range(20, 31), 2.0, 1.0)
        # the two orderings integrate along different contours, so agreement
        # is limited by the absolute noise floor, not a relative one
        np.testing.assert_allclose(r1.values, r2.values, rtol=1e-9, atol=1e-20)

    def test_near_degenerate_decays_slower(self):
        slow = cross_decay_report(range(10, 31), 1.0, 1.1)
        fast = cross_decay_report(range(10, 31), 1.0, 2.0)
        assert np.all(np.abs(slow.values) >= np.abs(fast.values))

    def test_fit_failure_returns_report(self):
        rep = cross_decay_report(range(5, 8), 1.0, 2.0, window=(20, 40))
        assert not rep.fit_ok
        assert len(rep.rows()) == 3

    def test_envelope_constant_bounds_values(self):
        rep = cross_decay_report(range(10, 31), 1.0, 2.0)
        assert rep.envelope_C > 0
        delta = 0.5
        for l, v, _ in rep.rows():
            assert abs(v) <= rep.envelope_C * delta**l * l**-1.5 * (1 + 1e-12)

    def test_quadrature_route_agrees_at_low_order(self):
        # explicit radial rule instead of the exact engine; truncation
        # limits the agreement to the certified tail scale
        q = RadialQuadrature.build(400.0, panel=0.4)
        exact = diag_decay_report(range(4, 9), 1.0)
        trunc = diag_decay_report(range(4, 9), 1.0, q=q)
        np.testing.assert_allclose(trunc.values, exact.values, atol=2e-6)

    def test_csv_roundtrip_deterministic(self, tmp_path):
        rep = diag_decay_report(range(5, 12), 1.0)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        rep.write_csv(p1)
        rep.write_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()
        header = p1.read_text().splitlines()[0]
        assert header == "l,value,fit_residual"
