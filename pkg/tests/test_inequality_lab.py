"""Tests for the inequality verifiers."""

import math

import numpy as np
import pytest
from scipy import special, stats

from random_series_lab.coeff_laws import (
    AlphaLaw,
    Deterministic,
    Gaussian,
    LawSequence,
    Rademacher,
    ScaledBernoulli,
    alpha_optimal,
)
from random_series_lab.errors import (
    DegenerateBoundError,
    NonUnitNormError,
    PreconditionError,
    UnboundedEnvelopeError,
    ZeroVarianceError,
)
from random_series_lab.inequality_lab import (
    PALEY_ZYGMUND_CONSTANT,
    BoundReport,
    Verdict,
    berry_esseen_verify,
    fitted_constant_stability,
    levy_weakL2_equiv_check,
    log_plus_triangle_report,
    mixture_lemma_check,
    mixture_lemma_suite,
    paley_zygmund_fact,
    rogozin_core,
    rogozin_verify,
    subgaussian_check,
    third_moment_ratio,
    variance_chain_check,
    variance_reversal_check,
    weak_symmetrization_check,
)
from random_series_lab.series_engine import jump_sequence


class TestBoundReport:
    """Tests for BoundReport."""

    def test_ratio(self):
        """Test lhs/rhs."""
        assert BoundReport("x", 1.0, 4.0, Verdict.HOLDS).ratio == pytest.approx(0.25)

    def test_ratio_of_zeros(self):
        """Test that 0/0 is reported as 1."""
        assert BoundReport("x", 0.0, 0.0, Verdict.HOLDS).ratio == 1.0

    def test_ratio_positive_over_zero(self):
        """Test that a positive lhs over a zero rhs is infinite."""
        assert BoundReport("x", 1.0, 0.0, Verdict.VIOLATED).ratio == math.inf

    def test_exact_string(self):
        """Test the one-line summary of an exact report."""
        text = str(BoundReport("rogozin", 0.5, 2.0, Verdict.FITTED))

        assert text.startswith("[FITTED] rogozin:")
        assert "(exact)" in text

    def test_sampled_string(self):
        """Test the summary of a Monte Carlo report."""
        text = str(BoundReport("x", 0.5, 2.0, Verdict.HOLDS, n_samples=100, wilson_ci=0.01))

        assert "n=100" in text
        assert "[HOLDS]" in text

    def test_as_dict(self):
        """Test flattening with detail keys."""
        row = BoundReport("x", 1.0, 2.0, Verdict.VIOLATED, details={"N": 3}).as_dict()

        assert row["verdict"] == "violated"
        assert row["ratio"] == pytest.approx(0.5)
        assert row["detail.N"] == 3


class TestRogozinCore:
    """Tests for rogozin_core."""

    def test_iid_rademacher(self):
        """Test √(8/100) for 100 Rademacher terms with λ = 1."""
        assert rogozin_core([1.0] * 100, [0.5] * 100, 1.0) == pytest.approx(math.sqrt(0.08))

    def test_single_variable(self):
        """Test β = 1 for λ = 2 and q = 0."""
        assert rogozin_core([2.0], [0.0], 1.0) == pytest.approx(1.0)

    def test_small_window(self):
        """Test β_k = L when L < λ_k/2."""
        assert rogozin_core([1.0] * 100, [0.5] * 100, 0.01) == pytest.approx(0.01 / math.sqrt(0.005))

    def test_all_degenerate(self):
        """Test that q_k = 1 everywhere is rejected."""
        with pytest.raises(DegenerateBoundError):
            rogozin_core([1.0, 1.0], [1.0, 1.0], 1.0)

    @pytest.mark.parametrize(
        "lambdas,qs,L",
        [
            ([1.0], [0.5, 0.5], 1.0),
            ([], [], 1.0),
            ([1.0], [0.5], 0.0),
            ([-1.0], [0.5], 1.0),
            ([1.0], [1.5], 1.0),
        ],
    )
    def test_invalid_inputs(self, lambdas, qs, L):
        """Test mismatched, empty or out-of-range inputs."""
        with pytest.raises(PreconditionError):
            rogozin_core(lambdas, qs, L)


class TestRogozinVerify:
    """Tests for rogozin_verify."""

    def test_exact_binomial(self):
        """Test the central binomial atom against the core bound."""
        reports = rogozin_verify(LawSequence(Rademacher()), 1.0, 1.0, [1, 100])

        single, hundred = reports
        assert single.lhs == pytest.approx(0.5)
        assert single.rhs == pytest.approx(2 * math.sqrt(2))
        assert single.ratio == pytest.approx(0.17678, rel=1e-4)
        assert hundred.lhs == pytest.approx(math.comb(100, 50) / 2**100)
        assert hundred.ratio == pytest.approx(0.2814, rel=1e-3)
        assert all(r.is_exact and r.verdict is Verdict.FITTED for r in reports)

    def test_ratio_spread(self):
        """Test that ratios for N in {10, 100, 1000} stay within a factor 2."""
        reports = rogozin_verify(LawSequence(Rademacher()), 1.0, 1.0, [10, 100, 1000])
        ratios = [r.ratio for r in reports]

        assert max(ratios) / min(ratios) <= 2.0
        assert fitted_constant_stability(reports[:1], reports[1:]) <= 2.0

    def test_simulated_gaussian(self):
        """Test the Monte Carlo path for non-Rademacher sums."""
        reports = rogozin_verify(
            LawSequence(Gaussian()), lambda k: 1.0, 1.0, [10], R=20_000, seed=3
        )

        (report,) = reports
        assert report.n_samples == 20_000
        assert report.wilson_ci > 0
        assert report.lhs == pytest.approx(special.erf(1.0 / (2.0 * math.sqrt(20.0))), abs=0.02)
        assert report.details["N"] == 10


class TestBerryEsseen:
    """Tests for berry_esseen_verify."""

    def test_single_sign(self):
        """Test Φ(1) - 1/2 for one Rademacher variable."""
        report = berry_esseen_verify([1.0], Rademacher())

        assert report.lhs == pytest.approx(stats.norm.cdf(1.0) - 0.5)
        assert report.rhs == pytest.approx(1.0)
        assert report.is_exact

    def test_hundred_equal_weights(self):
        """Test the central atom distance and the cubic core."""
        report = berry_esseen_verify(np.full(100, 0.1), Rademacher())

        assert report.rhs == pytest.approx(0.1)
        assert report.lhs == pytest.approx(0.0398, rel=0.02)

    def test_ratio_scales_with_n(self):
        """Test that N = 400 and N = 100 give comparable implied constants."""
        small = berry_esseen_verify(np.full(100, 0.1), Rademacher())
        large = berry_esseen_verify(np.full(400, 0.05), Rademacher())

        assert 1 / 1.5 <= large.ratio / small.ratio <= 1.5

    @pytest.mark.parametrize("N", [100, 400, 1600])
    def test_exact_scaling(self, N: int):
        """Test lhs·√N in [0.3, 0.5] and rhs·√N = 1 on the exact binomial path."""
        report = berry_esseen_verify(np.full(N, 1 / math.sqrt(N)), Rademacher())

        assert report.is_exact
        assert 0.3 <= report.lhs * math.sqrt(N) <= 0.5
        assert report.rhs * math.sqrt(N) == pytest.approx(1.0, rel=1e-9)

    def test_large_n_stays_exact(self):
        """Test that N = 1600 uses the binomial law, where the central atom dominates."""
        report = berry_esseen_verify(np.full(1600, 1 / 40), Rademacher(), R=2000)

        assert report.n_samples == 0
        assert report.wilson_ci == 0.0
        assert report.lhs * 40 == pytest.approx(1 / math.sqrt(2 * math.pi), abs=5e-3)

    def test_non_unit_norm(self):
        """Test that weights off the unit sphere are rejected."""
        with pytest.raises(NonUnitNormError):
            berry_esseen_verify([0.5, 0.5], Rademacher())

    def test_non_standardized_law(self):
        """Test that laws with variance other than 1 are rejected."""
        with pytest.raises(PreconditionError):
            berry_esseen_verify([1.0], Rademacher(2.0))

    def test_law_count_mismatch(self):
        """Test one law per weight."""
        with pytest.raises(PreconditionError):
            berry_esseen_verify([0.6, 0.8], [Rademacher()])

    def test_simulated_gaussian(self):
        """Test the Kolmogorov statistic of a Gaussian combination."""
        report = berry_esseen_verify([0.6, 0.8], [Gaussian(), Gaussian()], R=20_000, seed=1)

        assert report.n_samples == 20_000
        assert report.lhs < 0.03
        assert report.wilson_ci == pytest.approx(math.sqrt(math.log(200.0) / 40_000))
        assert report.rhs == pytest.approx((0.6**3 + 0.8**3) * 2 * math.sqrt(2 / math.pi))


class TestMixtureLemma:
    """Tests for mixture_lemma_check and mixture_lemma_suite."""

    def test_constant_kernel(self):
        """Test h ≡ 1 at t = 1."""
        report = mixture_lemma_check(np.ones((3, 4)), np.full(3, 1 / 3), np.full(4, 0.25), 1.0)

        assert report.lhs == pytest.approx(1.0)
        assert report.rhs == pytest.approx(2.0)
        assert report.verdict is Verdict.HOLDS

    def test_product_kernel(self):
        """Test h(x, y) = x·y on a uniform 10x10 grid against enumeration."""
        grid = np.arange(1, 11) / 10
        h = np.outer(grid, grid)
        weights = np.full(10, 0.1)
        report = mixture_lemma_check(h, weights, weights, 0.25)

        lhs = sum(0.1 for x in grid if np.mean(x * grid) <= 0.25)
        rhs = 2 * sum(0.01 for x in grid for y in grid if x * y <= 0.5)
        assert report.lhs == pytest.approx(lhs)
        assert report.rhs == pytest.approx(rhs)
        assert report.verdict is Verdict.HOLDS

    def test_random_suite(self):
        """Test zero violations over 1000 random cases."""
        reports = mixture_lemma_suite(1000, seed=5)

        assert len(reports) == 1000
        assert all(r.verdict is Verdict.HOLDS for r in reports)
        assert reports[10].details["case"] == 10

    @pytest.mark.parametrize(
        "h,mu,nu,t",
        [
            (np.ones((2, 3)), [0.5, 0.5], [0.5, 0.5], 1.0),
            (-np.ones((2, 2)), [0.5, 0.5], [0.5, 0.5], 1.0),
            (np.ones((2, 2)), [0.5, 0.4], [0.5, 0.5], 1.0),
            (np.ones((2, 2)), [0.5, 0.5], [0.5, 0.5], 0.0),
        ],
    )
    def test_invalid_inputs(self, h, mu, nu, t):
        """Test shape, sign, normalization and t checks."""
        with pytest.raises(PreconditionError):
            mixture_lemma_check(h, mu, nu, t)


class TestPaleyZygmund:
    """Tests for paley_zygmund_fact."""

    def test_rademacher(self):
        """Test 1 - Q(ε, √2) = 1/2 against 2⁻⁶."""
        report = paley_zygmund_fact(Rademacher(), 1.0)

        assert report.lhs == pytest.approx(0.5)
        assert report.rhs == pytest.approx(PALEY_ZYGMUND_CONSTANT)
        assert report.verdict is Verdict.HOLDS

    def test_gaussian(self):
        """Test 2Φ(-√2/2) against 2⁻⁶/3."""
        report = paley_zygmund_fact(Gaussian(), 1.0)

        assert report.lhs == pytest.approx(2 * stats.norm.cdf(-math.sqrt(2) / 2))
        assert report.rhs == pytest.approx(2.0**-6 / 3)
        assert report.verdict is Verdict.HOLDS

    def test_default_level_is_variance(self):
        """Test θ = Var when omitted."""
        assert paley_zygmund_fact(Rademacher(3.0)).details["theta"] == pytest.approx(9.0)

    def test_deterministic_rejected(self):
        """Test the zero-variance precondition."""
        with pytest.raises(ZeroVarianceError):
            paley_zygmund_fact(Deterministic(1.0))

    def test_level_above_variance(self):
        """Test θ > Var."""
        with pytest.raises(PreconditionError):
            paley_zygmund_fact(Rademacher(), 2.0)


class TestVarianceReversal:
    """Tests for variance_reversal_check."""

    def test_rademacher(self):
        """Test Var = 1 against log 3 · 2."""
        report = variance_reversal_check(Rademacher())

        assert report.lhs == pytest.approx(1.0)
        assert report.details["levy_sup"] == pytest.approx(2.0, rel=1e-6)
        assert report.rhs == pytest.approx(2 * math.log(3.0), rel=1e-6)
        assert report.ratio == pytest.approx(0.455, abs=1e-3)
        assert report.verdict is Verdict.FITTED

    def test_alpha_family_ratio_grows(self):
        """Test that Var/sup δ²(1 - Q) increases along α_k like log(ek)."""
        ks = (4, 16, 64, 256)
        ratios = []
        for k in ks:
            report = variance_reversal_check(AlphaLaw(float(alpha_optimal(k))))
            ratios.append(report.lhs / report.details["levy_sup"])
        scaled = np.array(ratios) / np.log(math.e * np.array(ks))

        assert all(np.isfinite(ratios))
        assert np.all(np.diff(ratios) > 0)
        assert np.all((scaled >= 0.25) & (scaled <= 4.0))

    def test_deterministic_rejected(self):
        """Test the zero-variance precondition."""
        with pytest.raises(ZeroVarianceError):
            variance_reversal_check(Deterministic(2.0))

    def test_unbounded_rejected(self):
        """Test that unbounded laws are rejected."""
        with pytest.raises(UnboundedEnvelopeError):
            variance_reversal_check(Gaussian())


class TestWeakSymmetrization:
    """Tests for weak_symmetrization_check."""

    def test_rademacher(self):
        """Test the chain 1/4 <= 1/2 <= 1 at t = 1."""
        report = weak_symmetrization_check(Rademacher(), 1.0)

        assert report.details["left"] == pytest.approx(0.25)
        assert report.lhs == pytest.approx(0.5)
        assert report.rhs == pytest.approx(1.0)
        assert report.verdict is Verdict.HOLDS

    def test_deterministic(self):
        """Test the all-zero chain."""
        report = weak_symmetrization_check(Deterministic(3.0), 0.5)

        assert report.details["left"] == 0.0
        assert report.lhs == 0.0
        assert report.rhs == pytest.approx(0.0)
        assert report.verdict is Verdict.HOLDS

    def test_gaussian(self):
        """Test the normal closed forms at t = 1."""
        report = weak_symmetrization_check(Gaussian(), 1.0)

        assert report.details["left"] == pytest.approx(stats.norm.sf(1.0))
        assert report.lhs == pytest.approx(2 * stats.norm.cdf(-1 / math.sqrt(2)))
        assert report.is_exact
        assert report.verdict is Verdict.HOLDS

    def test_nonpositive_t(self):
        """Test t <= 0."""
        with pytest.raises(PreconditionError):
            weak_symmetrization_check(Rademacher(), 0.0)


class TestLevyWeakL2:
    """Tests for levy_weakL2_equiv_check."""

    def test_rademacher(self):
        """Test the ratio 1 for a fair sign."""
        report = levy_weakL2_equiv_check(Rademacher())

        assert report.lhs == pytest.approx(2.0, rel=1e-6)
        assert report.rhs == pytest.approx(2.0)
        assert report.verdict is Verdict.FITTED

    def test_alpha_law_in_band(self):
        """Test AlphaLaw(1/8) within [1/8, 8]."""
        report = levy_weakL2_equiv_check(AlphaLaw(0.125))

        assert 0.125 <= report.ratio <= 8.0
        assert report.verdict is Verdict.FITTED

    def test_deterministic(self):
        """Test 0 against 0."""
        report = levy_weakL2_equiv_check(Deterministic(1.0))

        assert report.ratio == 1.0
        assert report.verdict is Verdict.FITTED


class TestMomentChecks:
    """Tests for third_moment_ratio, variance_chain_check and subgaussian_check."""

    def test_third_moment_rademacher(self):
        """Test ratio 1 for i.i.d. signs."""
        assert third_moment_ratio(LawSequence(Rademacher())) == pytest.approx(1.0)

    def test_third_moment_bounded_law(self):
        """Test E|X - EX|³ <= 2M·Var for |X| <= M."""
        seq = LawSequence(ScaledBernoulli(3.0, 0.3))

        assert third_moment_ratio(seq, horizon=5) <= 2 * 3.0

    def test_third_moment_jump_sequence_grows(self):
        """Test that the jump sequence has a finite ratio growing with the horizon."""
        seq = jump_sequence()
        short = third_moment_ratio(seq, horizon=10, start=1)
        long = third_moment_ratio(seq, horizon=100, start=1)

        assert math.isfinite(long)
        assert long > 5 * short

    def test_third_moment_zero_variance(self):
        """Test that a point mass is rejected."""
        with pytest.raises(ZeroVarianceError):
            third_moment_ratio(LawSequence(Deterministic(1.0)), horizon=3)

    def test_variance_chain(self):
        """Test Var >= ε²P(|X| > ε) >= ε²(1 - Q(X, 2ε)) for signs."""
        report = variance_chain_check(Rademacher(), 0.5)

        assert report.lhs == pytest.approx(0.25)
        assert report.rhs == pytest.approx(1.0)
        assert report.details["lower"] == pytest.approx(0.125)
        assert report.verdict is Verdict.HOLDS

    def test_variance_chain_rejects_nonpositive_eps(self):
        """Test ε <= 0."""
        with pytest.raises(PreconditionError):
            variance_chain_check(Rademacher(), 0.0)

    def test_subgaussian_rademacher(self):
        """Test ‖ε‖_{ψ₂} = 1/√(log 2), which meets the bound."""
        report = subgaussian_check(Rademacher())

        assert report.lhs == pytest.approx(1 / math.sqrt(math.log(2.0)), rel=1e-8)
        assert report.verdict is Verdict.HOLDS

    def test_subgaussian_unbounded(self):
        """Test that Gaussian laws are rejected."""
        with pytest.raises(UnboundedEnvelopeError):
            subgaussian_check(Gaussian())


class TestLogPlusTriangleReport:
    """Tests for log_plus_triangle_report."""

    def test_holds(self):
        """Test that no random tuple violates the inequality."""
        report = log_plus_triangle_report(2000, seed=1)

        assert report.verdict is Verdict.HOLDS
        assert report.lhs <= 0.0
        assert report.details["tuples"] == 2000


class TestFittedConstantStability:
    """Tests for fitted_constant_stability."""

    def test_factor(self):
        """Test the factor between the largest implied constants."""
        a = [BoundReport("x", 1.0, 2.0, Verdict.FITTED)]
        b = [BoundReport("x", 1.0, 4.0, Verdict.FITTED), BoundReport("x", 1.0, 8.0, Verdict.FITTED)]

        assert fitted_constant_stability(a, b) == pytest.approx(2.0)

    def test_empty(self):
        """Test that an empty set is rejected."""
        with pytest.raises(PreconditionError):
            fitted_constant_stability([], [BoundReport("x", 1.0, 1.0, Verdict.FITTED)])
