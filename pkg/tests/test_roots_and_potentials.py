"""Tests for roots, Jensen checks, annulus statistics and arc potentials."""

import math

import numpy as np
import pytest
from scipy import integrate

from random_series_lab.coeff_laws import Gaussian, LawSequence, Rademacher
from random_series_lab.errors import (
    DegreeZeroError,
    InsufficientRootsError,
    PreconditionError,
    RootOnCircleError,
)
from random_series_lab.roots_and_potentials import (
    RULES,
    PotentialQuery,
    RootSet,
    annulus_statistics,
    approach_points,
    arc_log_potential,
    blaschke_profile,
    blaschke_sum,
    clausen,
    jensen_residual,
    log_integral_convergence,
    polynomial_roots,
    rotation_translation_gap,
    singular_log_integral,
)
from random_series_lab.series_engine import TWO_PI, ArcSpec, SeriesSample, sample_series
from random_series_lab.utils import make_stream

CATALAN = 0.915965594177219


def _series(coeffs) -> SeriesSample:
    return SeriesSample(np.asarray(coeffs), "test", 0, 0)


class TestPolynomialRoots:
    """Tests for polynomial_roots."""

    def test_quadratic(self):
        """Test z² - 1."""
        roots = polynomial_roots(np.array([-1.0, 0.0, 1.0])).roots

        np.testing.assert_allclose(np.sort(roots.real), [-1.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(roots.imag, 0.0, atol=1e-14)

    def test_linear(self):
        """Test z - 0.5."""
        root_set = polynomial_roots(np.array([-0.5, 1.0]))

        assert len(root_set) == 1
        assert root_set.roots[0] == pytest.approx(0.5)
        assert root_set.degree == 1

    def test_zero_at_origin(self):
        """Test that low-order zeros are explicit roots at 0."""
        root_set = polynomial_roots(np.array([0.0, 0.0, 1.0, 1.0]))

        assert root_set.zero_multiplicity == 2
        assert np.count_nonzero(root_set.roots == 0) == 2
        assert np.min(np.abs(root_set.roots + 1.0)) < 1e-14

    def test_trailing_zeros_deflated(self):
        """Test that vanishing top coefficients lower the degree."""
        root_set = polynomial_roots(np.array([-0.5, 1.0, 0.0, 0.0]))

        assert root_set.degree == 1

    def test_degree_zero(self):
        """Test that constants have no roots to find."""
        with pytest.raises(DegreeZeroError):
            polynomial_roots(np.array([3.0, 0.0, 0.0]))

    def test_degree_cap(self):
        """Test the companion-matrix degree cap."""
        with pytest.raises(PreconditionError, match="capped"):
            polynomial_roots(np.ones(8194))

    def test_accepts_series_sample(self):
        """Test that a realization can be passed directly."""
        assert len(polynomial_roots(_series([-0.5, 1.0]))) == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_random_reconstruction(self, seed: int):
        """Test residuals and the monic product against the polynomial."""
        c = make_stream(seed, 11).normal(size=61)
        root_set = polynomial_roots(c)
        z = 0.7 * np.exp(1j * np.linspace(0.0, TWO_PI, 100, endpoint=False))
        product = c[-1] * np.prod(z[:, None] - root_set.roots[None, :], axis=1)
        direct = np.polynomial.polynomial.polyval(z, c)

        assert root_set.residual <= 1e-8 * np.max(np.abs(c))
        assert np.max(np.abs(product - direct)) <= 1e-6 * np.max(np.abs(direct))


class TestClausen:
    """Tests for the Clausen function."""

    def test_catalan(self):
        """Test Cl₂(π/2) = G."""
        assert float(clausen(math.pi / 2)) == pytest.approx(CATALAN, abs=1e-13)

    def test_zeros(self):
        """Test Cl₂(0) = Cl₂(π) = 0."""
        assert float(clausen(0.0)) == 0.0
        assert float(clausen(math.pi)) == pytest.approx(0.0, abs=1e-8)

    def test_odd_and_periodic(self):
        """Test oddness and 2π-periodicity."""
        assert float(clausen(-1.0)) == pytest.approx(-float(clausen(1.0)))
        assert float(clausen(1.0 + TWO_PI)) == pytest.approx(float(clausen(1.0)), abs=1e-12)

    def test_integral_definition(self):
        """Test against -∫_0^θ log|2 sin(t/2)| dt."""
        value, _ = integrate.quad(
            lambda t: -math.log(2 * math.sin(t / 2)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12
        )

        assert float(clausen(1.0)) == pytest.approx(value, abs=1e-9)


class TestArcLogPotential:
    """Tests for arc_log_potential."""

    def test_origin(self):
        """Test ∫ log|e^{iθ}| = 0 on the unit circle."""
        assert arc_log_potential(PotentialQuery(1.0, 0.0, TWO_PI, 0j)) == 0.0

    def test_outside_point(self):
        """Test the mean-value identity for |z| > r."""
        value = arc_log_potential(PotentialQuery(1.0, 0.0, TWO_PI, 2.0 + 0j))

        assert value == pytest.approx(TWO_PI * math.log(2.0), abs=1e-10)

    def test_point_on_arc(self):
        """Test ∫_0^π log|e^{iθ} - i| dθ = -2G."""
        value = arc_log_potential(PotentialQuery(1.0, 0.0, math.pi, 1j))

        assert value == pytest.approx(-2 * CATALAN, abs=1e-12)

    def test_near_point_matches_on_arc_limit(self):
        """Test continuity as z approaches the arc from inside."""
        near = arc_log_potential(PotentialQuery(1.0, 0.0, math.pi, 0.9999j))

        assert near == pytest.approx(-2 * CATALAN, abs=1e-3)

    def test_mean_value_identity(self):
        """Test 2π log max(r, |z|) over the full circle for random points."""
        gen = make_stream(0, 21)
        checked = 0
        while checked < 30:
            r = float(gen.uniform(0.2, 2.0))
            z = complex(*gen.uniform(-2.5, 2.5, 2))
            if abs(abs(z) - r) < 1e-3:
                continue
            value = arc_log_potential(PotentialQuery(r, 0.0, TWO_PI, z))

            assert value == pytest.approx(TWO_PI * math.log(max(r, abs(z))), abs=1e-8)
            checked += 1

    @pytest.mark.parametrize(("r", "b"), [(0.0, 1.0), (1.0, 0.0)])
    def test_invalid_query(self, r: float, b: float):
        """Test that r > 0 and b > a are required."""
        with pytest.raises(PreconditionError):
            PotentialQuery(r, 0.0, b, 0j)

    def test_rotation_translation_identity(self):
        """Test the change-of-variables identity on and off the unit circle."""
        assert rotation_translation_gap(1.0, 0.0, math.pi, math.pi / 2, math.pi / 2 + 0.1) < 1e-9
        assert rotation_translation_gap(0.7, 0.3, 2.0, 1.0, 1.2) < 1e-9


class TestSingularLogIntegral:
    """Tests for singular_log_integral."""

    def test_root_on_circle(self):
        """Test ∫_0^{2π} log|r e^{iθ} - r e^{iπ}| = 2π log r."""
        s = _series(np.array([0.8, 1.0], dtype=complex))
        result = singular_log_integral(s, 0.8, ArcSpec(0.0, TWO_PI))

        assert result.value == pytest.approx(TWO_PI * math.log(0.8), abs=1e-9)

    def test_factored_root_on_arc(self):
        """Test (z - i)(3 + z) on the upper half circle."""
        s = _series(np.polynomial.polynomial.polymul([-1j, 1.0], [3.0, 1.0]))
        smooth, _ = integrate.quad(
            lambda t: math.log(abs(3.0 + complex(math.cos(t), math.sin(t)))), 0.0, math.pi
        )
        result = singular_log_integral(s, 1.0, ArcSpec(0.0, math.pi))

        assert result.value == pytest.approx(-2 * CATALAN + smooth, abs=1e-8)

    def test_constant(self):
        """Test |I|·log|c| for constant polynomials."""
        result = singular_log_integral(_series([2.0]), 0.5, ArcSpec(0.0, 1.0))

        assert result.value == pytest.approx(math.log(2.0))

    def test_normalized(self):
        """Test division by the arc length."""
        s = _series([2.0, 0.0])
        result = singular_log_integral(s, 0.5, ArcSpec(0.0, 2.0), normalized=True)

        assert result.value == pytest.approx(math.log(2.0))


class TestJensenResidual:
    """Tests for jensen_residual."""

    def test_linear(self):
        """Test F = z - 0.5 at r = 1."""
        assert jensen_residual(_series([-0.5, 1.0]), 1.0) < 1e-8

    def test_constant(self):
        """Test that constants have zero residual."""
        assert jensen_residual(_series([3.0]), 0.7) == 0.0

    def test_zero_at_origin(self):
        """Test the zero-at-origin variant for z(z - 0.5)."""
        assert jensen_residual(_series([0.0, -0.5, 1.0]), 1.0) < 1e-8

    @pytest.mark.parametrize("seed", range(5))
    def test_random_polynomials(self, seed: int):
        """Test random degree-40 polynomials at several radii."""
        s = _series(make_stream(seed, 13).normal(size=41))
        moduli = polynomial_roots(s).moduli
        for r in (0.5, 0.9, 1.1):
            if np.min(np.abs(moduli - r)) < 1e-3:
                continue

            assert jensen_residual(s, r) <= 1e-6

    def test_root_on_circle(self):
        """Test that a root on |z| = r is reported."""
        with pytest.raises(RootOnCircleError):
            jensen_residual(_series([-0.9, 1.0]), 0.9)


class TestAnnulusStatistics:
    """Tests for annulus_statistics."""

    def test_monomial_has_no_annulus_roots(self):
        """Test that z^m has no roots in (1/2, 1)."""
        root_set = polynomial_roots(np.array([0.0] * 8 + [1.0]))

        with pytest.raises(InsufficientRootsError):
            annulus_statistics([root_set], [2])

    def test_order_statistics(self):
        """Test R_s as the (s+1)-th smallest modulus above 1/2."""
        moduli = np.array([0.1, 0.3, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99])
        root_set = RootSet(moduli.astype(complex), moduli.size, 0.0)
        stats = annulus_statistics([root_set], [2, 4])

        np.testing.assert_allclose(stats.radii[0], [0.8 - 1e-12, 0.95 - 1e-12])
        assert stats.median_gap[1] < stats.median_gap[0]

    def test_small_s_rejected(self):
        """Test that s >= 2 is required."""
        root_set = RootSet(np.array([0.6, 0.7, 0.8], dtype=complex), 3, 0.0)

        with pytest.raises(PreconditionError):
            annulus_statistics([root_set], [1])

    @pytest.mark.slow
    def test_gaussian_gap_scale(self):
        """Test 1 - R_s against log(s)/s for Gaussian series."""
        seq = LawSequence(Gaussian())
        roots = [
            polynomial_roots(sample_series(seq, 1024, seed=1, replicate_id=i)) for i in range(5)
        ]
        stats = annulus_statistics(roots, [10, 20, 40])

        assert np.all((stats.scaled_gap > 0.05) & (stats.scaled_gap < 5.0))
        assert np.all(np.diff(stats.median_gap) < 0)
        assert stats.slope > 0


class TestBlaschke:
    """Tests for Blaschke sums."""

    def test_single_root(self):
        """Test F = z - 0.5."""
        assert blaschke_sum(_series([-0.5, 1.0])) == pytest.approx(0.5)

    def test_no_roots_in_disk(self):
        """Test F = z - 2."""
        assert blaschke_sum(_series([-2.0, 1.0])) == 0.0

    def test_shifted_target(self):
        """Test roots of F - w with w = 0.5."""
        assert blaschke_sum(_series([0.0, 1.0]), w=0.5) == pytest.approx(0.5)

    @pytest.mark.slow
    def test_profile_grows_with_degree(self):
        """Test the median Blaschke sum trend in N for Rademacher series."""
        profile = blaschke_profile(
            LawSequence(Rademacher()), [32, 128, 512], seed=0, replicates=21, threads=2
        )

        assert profile.shape == (3,)
        assert profile[-1] > profile[0]


class TestLogIntegralConvergence:
    """Tests for approach rules and convergence of arc potentials."""

    def test_constant_rule(self):
        """Test that a constant sequence has zero deviation."""
        trace = log_integral_convergence(1j, 1.0, ArcSpec(0.0, math.pi), "constant", [8, 64])

        np.testing.assert_array_equal(trace.deviations, [0.0, 0.0])

    def test_radial_approach(self):
        """Test radial approach z_n = (1 - 1/n)·i on the upper half circle."""
        trace = log_integral_convergence(1j, 1.0, ArcSpec(0.0, math.pi), "radial", [8, 64, 512])

        assert trace.deviations[1] < trace.deviations[0]
        assert trace.deviations[1] < 0.05
        assert trace.factored_discrepancy < 1e-6

    def test_tangential_approach(self):
        """Test approach along the arc itself."""
        trace = log_integral_convergence(1j, 1.0, ArcSpec(0.0, math.pi), "tangential", [8, 64, 512])

        assert trace.deviations[2] < trace.deviations[0]
        assert trace.deviations[2] < 0.05

    def test_random_points_shrink(self):
        """Test that random points stay inside disks of radius 1/n."""
        ns = [4, 16, 64]
        points = approach_points(0.5 + 0.5j, "random", ns, seed=3)

        assert np.all(np.abs(points - (0.5 + 0.5j)) <= 1.0 / np.asarray(ns))

    def test_unknown_rule(self):
        """Test that unknown rules are rejected."""
        assert "spiral" not in RULES
        with pytest.raises(PreconditionError):
            approach_points(1j, "spiral", [2])
