"""Gaussian beam and refraction kernels against independent oracles."""

import cmath
import math

import numpy as np
import pytest

from gobsim.beams import (
    ComplexQ,
    GaussianBeam,
    LensSpec,
    abcd_plano_convex,
    beam_intensity,
    divergence_half_angle,
    q_at,
    refract,
    refract_masked,
    spot_radius,
    transform_through_lens,
    wavefront_curvature,
)
from gobsim.errors import DegenerateTransform, TotalInternalReflection

SOURCE = GaussianBeam(waist_radius=5e-6, wavelength=950e-9, power=10e-3)
LENS = LensSpec(diameter=16e-3, curvature_radius=15e-3, center_thickness=3.5e-3, refractive_index=1.55)


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class TestSpotRadius:
    def test_waist_definition(self):
        assert spot_radius(SOURCE, 0.0) == pytest.approx(5e-6, rel=1e-12)

    def test_rayleigh_range_definition(self):
        zr = SOURCE.rayleigh_range
        assert spot_radius(SOURCE, zr) == pytest.approx(5e-6 * math.sqrt(2.0), rel=1e-12)

    def test_rayleigh_range_value(self):
        # pi * (5 um)^2 / 950 nm evaluated directly
        assert SOURCE.rayleigh_range == pytest.approx(8.26735e-5, rel=1e-5)

    def test_even_and_monotone_in_abs_z(self):
        z = np.linspace(0.0, 1.0, 64)
        w = spot_radius(SOURCE, z)
        assert np.all(np.diff(w) >= 0.0)
        assert np.allclose(spot_radius(SOURCE, -z), w)


class TestIntensity:
    def test_on_axis_peak(self):
        assert beam_intensity(SOURCE, 0.0, 0.0) == pytest.approx(2.546e8, rel=1e-3)

    def test_edge_of_beam_fraction(self):
        for z in (0.0, 1e-4, 3.0):
            w = spot_radius(SOURCE, z)
            ratio = beam_intensity(SOURCE, w, z) / beam_intensity(SOURCE, 0.0, z)
            assert ratio == pytest.approx(math.exp(-2.0), rel=1e-12)

    @pytest.mark.parametrize("z", [0.0, 2e-4, 0.5, 3.0])
    def test_transverse_integral_equals_power(self, z):
        # polar quadrature of I(r, z) * 2 pi r dr out to 10 spot radii
        w = float(spot_radius(SOURCE, z))
        r = np.linspace(0.0, 10.0 * w, 20001)
        integrand = beam_intensity(SOURCE, r, z) * 2.0 * math.pi * r
        total = np.trapezoid(integrand, r)
        assert total == pytest.approx(SOURCE.power, rel=1e-6)


class TestDivergence:
    def test_design_value(self):
        theta = divergence_half_angle(SOURCE)
        assert theta == pytest.approx(0.060479, rel=1e-4)
        assert math.degrees(theta) == pytest.approx(3.465, abs=2e-3)

    def test_collimated_limit(self):
        wide = GaussianBeam(waist_radius=1.0, wavelength=950e-9)
        assert divergence_half_angle(wide) < 1e-6

    def test_formula_identity(self):
        unit = GaussianBeam(waist_radius=950e-9 / math.pi, wavelength=950e-9)
        assert divergence_half_angle(unit) == pytest.approx(1.0, rel=1e-12)


class TestRefraction:
    def test_normal_incidence(self):
        n = np.array([0.0, 0.0, 1.0])
        for mu in (0.5, 1.0, 1.5):
            assert np.allclose(refract(n, n, mu), n, atol=1e-15)

    def test_index_matched(self):
        rng = np.random.default_rng(7)
        v = random_unit(rng, 20)
        n = np.array([0.0, 0.0, 1.0])
        v = v * np.sign(v[:, 2:3])  # keep n.v >= 0
        assert np.allclose(refract(v, n, 1.0), v, atol=1e-14)

    def test_scalar_snell_oracle(self):
        # 30 degrees into glass: refraction angle asin(sin(30)/1.5)
        theta1 = math.radians(30.0)
        v1 = np.array([math.sin(theta1), 0.0, math.cos(theta1)])
        n = np.array([0.0, 0.0, 1.0])
        v2 = refract(v1, n, 1.0 / 1.5)
        theta2 = math.asin(math.sin(theta1) / 1.5)
        assert math.degrees(theta2) == pytest.approx(19.47, abs=5e-3)
        assert float(v2 @ n) == pytest.approx(math.cos(theta2), rel=1e-12)

    def test_vector_law_residual_bulk(self):
        # n x v2 = mu (n x v1) componentwise over 1e5 random triples
        rng = np.random.default_rng(123)
        count = 100_000
        n = random_unit(rng, count)
        v1 = random_unit(rng, count)
        flip = np.sign(np.sum(n * v1, axis=1, keepdims=True))
        flip[flip == 0.0] = 1.0
        v1 = v1 * flip
        mu = rng.uniform(0.4, 1.0, size=count)  # entering denser medium: no TIR
        v2, ok = refract_masked(v1, n, mu)
        assert ok.all()
        residual = np.cross(n, v2) - mu[:, None] * np.cross(n, v1)
        assert np.abs(residual).max() < 1e-10
        assert np.abs(np.linalg.norm(v2, axis=1) - 1.0).max() < 1e-12

    def test_vector_decomposition_identity(self):
        # v = (n.v) n + (n x v) x n for arbitrary v and unit n
        rng = np.random.default_rng(5)
        n = random_unit(rng, 10_000)
        v = rng.normal(size=(10_000, 3)) * rng.uniform(0.1, 10, size=(10_000, 1))
        rebuilt = np.sum(n * v, axis=1, keepdims=True) * n + np.cross(np.cross(n, v), n)
        assert np.abs(rebuilt - v).max() < 1e-12 * 10

    def test_round_trip_reversibility(self):
        rng = np.random.default_rng(11)
        count = 5000
        n = random_unit(rng, count)
        v1 = random_unit(rng, count)
        flip = np.sign(np.sum(n * v1, axis=1, keepdims=True))
        flip[flip == 0.0] = 1.0
        v1 = v1 * flip
        mu = rng.uniform(0.5, 0.95, size=count)
        v2, ok = refract_masked(v1, n, mu)
        assert ok.all()
        back, ok2 = refract_masked(v2, n, 1.0 / mu)
        assert ok2.all()
        assert np.abs(back - v1).max() < 1e-10

    def test_total_internal_reflection_raises(self):
        theta1 = math.radians(70.0)
        v1 = np.array([math.sin(theta1), 0.0, math.cos(theta1)])
        n = np.array([0.0, 0.0, 1.0])
        with pytest.raises(TotalInternalReflection):
            refract(v1, n, 1.55)  # glass to air past the critical angle

    def test_span_of_incidence_plane(self):
        theta1 = math.radians(40.0)
        v1 = np.array([math.sin(theta1), 0.0, math.cos(theta1)])
        n = np.array([0.0, 0.0, 1.0])
        v2 = refract(v1, n, 1.0 / 1.55)
        assert abs(v2[1]) < 1e-15  # stays in the x-z plane spanned by {n, v1}


class TestLensTransform:
    def test_flat_slab_only_shifts_the_waist(self):
        slab = LensSpec(
            diameter=16e-3,
            curvature_radius=math.inf,
            center_thickness=3.5e-3,
            refractive_index=1.55,
        )
        out = transform_through_lens(SOURCE, slab, 5e-3, 3.5e-3)
        assert out.waist_radius == pytest.approx(SOURCE.waist_radius, rel=1e-12)
        assert out.waist_offset == pytest.approx(5e-3 + 3.5e-3 / 1.55, rel=1e-12)

    def test_design_focal_length(self):
        assert LENS.focal_length == pytest.approx(15e-3 / 0.55, rel=1e-12)
        assert LENS.focal_length == pytest.approx(27.27e-3, rel=1e-3)

    def test_closed_forms_match_complex_arithmetic(self):
        # closed-form waist offset / Rayleigh range / waist radius written
        # with the effective focal length, vs direct evaluation of
        # (A q + B) / (C q + D) inside the implementation
        rng = np.random.default_rng(42)
        for _ in range(300):
            w0 = rng.uniform(2e-6, 30e-6)
            lam = rng.uniform(400e-9, 1600e-9)
            beam = GaussianBeam(waist_radius=w0, wavelength=lam)
            rcurv = rng.uniform(8e-3, 40e-3)
            nlens = rng.uniform(1.3, 1.9)
            dia = min(2.0 * rcurv * 0.9, 20e-3)
            sag = (dia / 2) ** 2 / (rcurv + math.sqrt(rcurv**2 - (dia / 2) ** 2))
            tauc = sag + rng.uniform(0.2e-3, 4e-3)
            lens = LensSpec(dia, rcurv, tauc, nlens)
            dvl = rng.uniform(1e-3, 20e-3)
            tau = rng.uniform(0.2e-3, tauc)
            out = transform_through_lens(beam, lens, dvl, tau)
            f = lens.focal_length
            zr = beam.rayleigh_range
            u = dvl + tau / nlens
            denom = (1.0 - u / f) ** 2 + (zr / f) ** 2
            d_closed = (u * (1.0 - u / f) - zr**2 / f) / denom
            zr_closed = zr / denom
            w0_closed = w0 / math.sqrt((1.0 - u / f) ** 2 + (math.pi * w0**2 / (lam * f)) ** 2)
            assert out.waist_offset == pytest.approx(d_closed, rel=1e-10, abs=1e-18)
            assert out.rayleigh_range == pytest.approx(zr_closed, rel=1e-10)
            assert out.waist_radius == pytest.approx(w0_closed, rel=1e-9)
            # q-parameter consistency: zR' = pi w0'^2 / lambda
            assert out.rayleigh_range == pytest.approx(
                math.pi * out.waist_radius**2 / lam, rel=1e-9
            )

    def test_design_point_values(self):
        out = transform_through_lens(SOURCE, LENS, 5e-3, 3.5e-3)
        # independent complex evaluation of the ABCD map
        a, b, c, d = 1.0, 3.5e-3 / 1.55, -0.55 / 15e-3, 1.0 + (3.5e-3 / 15e-3) * (1 / 1.55 - 1)
        q = complex(5e-3, SOURCE.rayleigh_range)
        qp = (a * q + b) / (c * q + d)
        assert out.waist_offset == pytest.approx(qp.real, rel=1e-12)
        assert out.rayleigh_range == pytest.approx(qp.imag, rel=1e-12)
        # the waist image sits upstream of the exit face: virtual image
        assert out.waist_offset > 0.0

    def test_degenerate_transform(self):
        # a vanishing Rayleigh range with the source at the focal point
        # sends the image to infinity
        pencil = GaussianBeam(waist_radius=1e-14, wavelength=950e-9)
        tau = 3.5e-3
        dvl = LENS.focal_length - tau / LENS.refractive_index
        with pytest.raises(DegenerateTransform):
            transform_through_lens(pencil, LENS, dvl, tau)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            transform_through_lens(SOURCE, LENS, -1e-3, 1e-3)
        with pytest.raises(ValueError):
            transform_through_lens(SOURCE, LENS, 5e-3, 5e-3)  # tau > tau_c


class TestQParameter:
    def test_curvature_against_reciprocal_q(self):
        # Re{1/q} must equal 1/R(z) away from the waist
        rng = np.random.default_rng(3)
        for _ in range(200):
            z = rng.uniform(-2.0, 2.0)
            if abs(z) < 1e-6:
                continue
            q = q_at(SOURCE, z).value
            lhs = (1.0 / q).real
            assert lhs == pytest.approx(1.0 / wavefront_curvature(SOURCE, z), rel=1e-10)

    def test_reciprocal_imaginary_part_matches_spot(self):
        z = 0.37
        q = q_at(SOURCE, z).value
        w = float(spot_radius(SOURCE, z))
        assert (-(1.0 / q).imag) == pytest.approx(
            SOURCE.wavelength / (math.pi * w**2), rel=1e-12
        )

    def test_complexq_validation(self):
        with pytest.raises(ValueError):
            ComplexQ(0.0, -1.0)


class TestLensSpec:
    def test_sag_value(self):
        assert LENS.sag == pytest.approx(2.311e-3, rel=1e-3)

    def test_aperture_constraint(self):
        with pytest.raises(ValueError):
            LensSpec(diameter=40e-3, curvature_radius=15e-3, center_thickness=5e-3, refractive_index=1.5)

    def test_thickness_constraint(self):
        with pytest.raises(ValueError):
            LensSpec(diameter=16e-3, curvature_radius=15e-3, center_thickness=1e-3, refractive_index=1.5)

    def test_abcd_entries(self):
        a, b, c, d = abcd_plano_convex(LENS, 3.5e-3)
        assert (a, b) == (1.0, pytest.approx(3.5e-3 / 1.55))
        assert c == pytest.approx(-0.55 / 15e-3)
        assert d == pytest.approx(1.0 + (3.5e-3 / 15e-3) * (1.0 / 1.55 - 1.0))
