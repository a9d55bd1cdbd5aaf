"""Closed-form and Monte Carlo verifiers for the standalone inequalities, as BoundReports."""

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from enum import Enum

import numpy as np
import numpy.typing as npt
from scipy import special, stats

from .boundary_functionals import log_plus_triangle_check
from .coeff_laws import (
    CoeffLaw,
    DiscreteLaw,
    FiniteDiscrete,
    Gaussian,
    LawSequence,
    Rademacher,
    exact_concentration,
    sample,
)
from .concentration import (
    empirical_concentration,
    levy_weak_sup,
    orlicz_psi2_norm,
    weak_L2_norm,
)
from .errors import (
    DegenerateBoundError,
    NonUnitNormError,
    PreconditionError,
    UnboundedEnvelopeError,
    UnsupportedLawError,
    ZeroVarianceError,
)
from .utils import dkw_half_width, make_stream, wilson_half_width

logger = logging.getLogger(__name__)

CI_LEVEL = 0.99
EXACT_BINOMIAL_LIMIT = 1000
CONCENTRATION_SAMPLES = 100_000
TAIL_SAMPLES = 1_000_000
EQUIVALENCE_BAND = (1.0 / 8.0, 8.0)
PALEY_ZYGMUND_CONSTANT = 2.0**-6
_RTOL = 1e-12


class Verdict(str, Enum):
    HOLDS = "holds"
    FITTED = "holds-with-fitted-constant"
    VIOLATED = "violated"


class BoundReport:
    """
    Outcome of checking one inequality lhs <= rhs.

    For inequalities with an unspecified universal constant, ``rhs`` is the core
    bound without it and ``ratio`` is the implied constant.
    """

    __slots__ = ("name", "lhs", "rhs", "n_samples", "wilson_ci", "verdict", "details")

    def __init__(
        self,
        name: str,
        lhs: float,
        rhs: float,
        verdict: Verdict,
        n_samples: int = 0,
        wilson_ci: float = 0.0,
        details: Mapping[str, float] | None = None,
    ) -> None:
        self.name = name
        self.lhs = float(lhs)
        self.rhs = float(rhs)
        self.verdict = verdict
        self.n_samples = n_samples
        self.wilson_ci = wilson_ci
        self.details: dict[str, float] = dict(details or {})

    @property
    def ratio(self) -> float:
        if self.rhs != 0:
            return self.lhs / self.rhs
        if self.lhs == 0:
            return 1.0
        return 0.0 if self.lhs < 0 else math.inf

    @property
    def is_exact(self) -> bool:
        return self.n_samples == 0

    def as_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "n_samples": self.n_samples,
            "wilson_ci": self.wilson_ci,
            "verdict": self.verdict.value,
            **{f"detail.{key}": value for key, value in sorted(self.details.items())},
        }

    def __str__(self) -> str:
        verdict = self.verdict.name.replace("_", "-")
        source = "exact" if self.is_exact else f"n={self.n_samples}, ci=±{self.wilson_ci:.2e}"
        return (
            f"[{verdict}] {self.name}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} "
            f"ratio={self.ratio:.4g} ({source})"
        )

    def __repr__(self) -> str:
        return f"BoundReport({self.name!r}, {self.verdict.value})"


def _explicit(lhs: float, rhs: float, ci: float = 0.0) -> Verdict:
    """Verdict for an inequality whose constant is explicit."""
    slack = ci + _RTOL * max(1.0, abs(rhs))
    return Verdict.HOLDS if lhs <= rhs + slack else Verdict.VIOLATED


def rogozin_core(lambdas: npt.ArrayLike, qs: npt.ArrayLike, L: float) -> float:
    """
    L·(Σ β_k²(1 - q_k))^{-1/2} with β_k = min(L, λ_k/2).

    Raises:
        DegenerateBoundError: If every q_k equals 1.
    """
    lam = np.asarray(lambdas, dtype=float)
    q = np.asarray(qs, dtype=float)
    if lam.shape != q.shape or lam.size == 0:
        raise PreconditionError("λ_k and q_k must be nonempty lists of equal length")
    if not L > 0 or np.any(lam <= 0):
        raise PreconditionError("Rogozin's bound needs L > 0 and λ_k > 0")
    if np.any((q < 0) | (q > 1)):
        raise PreconditionError("concentration values q_k must lie in [0, 1]")
    if np.all(q >= 1.0):
        raise DegenerateBoundError("every q_k = 1: the variables are all degenerate at scale λ_k")
    beta = np.minimum(L, lam / 2.0)
    return L / math.sqrt(math.fsum(beta**2 * (1.0 - q)))


def _binomial_pmf(N: int) -> np.ndarray:
    j = np.arange(N + 1)
    log_pmf = special.gammaln(N + 1) - special.gammaln(j + 1) - special.gammaln(N - j + 1)
    return np.asarray(np.exp(log_pmf - N * math.log(2.0)))


def _rademacher_scale(seq: LawSequence, ks: range) -> float | None:
    """Common scale when every X_k is Rademacher(scale), else None."""
    scales = set()
    for k in ks:
        law = seq.law(k)
        if not isinstance(law, Rademacher):
            return None
        scales.add(law.scale)
        if len(scales) > 1:
            return None
    return scales.pop() if scales else None


def _law_concentration(law: CoeffLaw, lam: float, seed: int, k: int) -> float:
    try:
        return exact_concentration(law, lam)
    except UnsupportedLawError:
        data = sample(law, make_stream(seed, k, 11), CONCENTRATION_SAMPLES)
        return empirical_concentration(data, lam)


def _simulate_sum(
    laws: Sequence[CoeffLaw], weights: np.ndarray, R: int, seed: int, tag: int
) -> np.ndarray:
    total = np.zeros(R)
    for k, (law, weight) in enumerate(zip(laws, weights, strict=True)):
        total += weight * sample(law, make_stream(seed, tag, k), R)
    return total


def rogozin_verify(
    seq: LawSequence,
    lam: float | Callable[[int], float],
    L: float,
    Ns: Sequence[int],
    R: int = CONCENTRATION_SAMPLES,
    seed: int = 0,
) -> list[BoundReport]:
    """
    Q(S_N, L) against the Rogozin core bound for each N, with S_N = X_1 + ... + X_N.

    Equal-scale Rademacher sums with N <= EXACT_BINOMIAL_LIMIT are computed exactly
    from the binomial law; other sums are simulated with R replicates.
    """
    reports = []
    for N in Ns:
        ks = range(1, N + 1)
        lambdas = np.array([lam(k) if callable(lam) else lam for k in ks], dtype=float)
        qs = np.array(
            [
                _law_concentration(seq.law(k), float(lk), seed, k)
                for k, lk in zip(ks, lambdas, strict=True)
            ]
        )
        core = rogozin_core(lambdas, qs, L)
        scale = _rademacher_scale(seq, ks)
        if scale is not None and N <= EXACT_BINOMIAL_LIMIT:
            atoms = scale * (2.0 * np.arange(N + 1) - N)
            lhs = exact_concentration(FiniteDiscrete(tuple(atoms), tuple(_binomial_pmf(N))), L)
            n_samples, ci = 0, 0.0
        else:
            laws = [seq.law(k) for k in ks]
            total = _simulate_sum(laws, np.ones(N), R, seed, N)
            lhs = empirical_concentration(total, L)
            n_samples, ci = R, wilson_half_width(round(lhs * R), R, CI_LEVEL)
        report = BoundReport(
            "rogozin", lhs, core, Verdict.FITTED, n_samples, ci, {"N": N, "L": L}
        )
        logger.debug("%s", report)
        reports.append(report)
    return reports


def berry_esseen_verify(
    theta: npt.ArrayLike,
    laws: CoeffLaw | Sequence[CoeffLaw],
    R: int = TAIL_SAMPLES,
    seed: int = 0,
) -> BoundReport:
    """
    Kolmogorov distance of Σ θ_k Y_k from N(0, 1) against Σ |θ_k|³ E|Y_k|³.

    Equal positive weights on standard Rademacher signs are computed exactly from the
    binomial law at any N. Other combinations are simulated with R replicates and
    carry the DKW band as their confidence half-width.

    Raises:
        NonUnitNormError: If ‖θ‖₂ differs from 1 by more than 1e-12.
    """
    weights = np.asarray(theta, dtype=float)
    norm = math.sqrt(math.fsum(weights**2))
    if abs(norm - 1.0) > 1e-12:
        raise NonUnitNormError(f"weights must have unit norm, got {norm!r}")
    law_list = [laws] * weights.size if isinstance(laws, CoeffLaw) else list(laws)
    if len(law_list) != weights.size:
        raise PreconditionError("need one law per weight")
    third = []
    for law in law_list:
        moments = law.moments()
        if abs(moments.mean) > 1e-9 or abs(moments.variance - 1.0) > 1e-9:
            raise PreconditionError(f"{law.label} is not standardized")
        third.append(moments.third_abs_central)
    core = math.fsum(np.abs(weights) ** 3 * np.asarray(third))

    equal = bool(np.all(weights == weights[0]))
    rademacher = all(isinstance(law, Rademacher) and law.scale == 1.0 for law in law_list)
    if equal and rademacher and weights[0] > 0:
        N = weights.size
        atoms = (2.0 * np.arange(N + 1) - N) * weights[0]
        cdf = np.cumsum(_binomial_pmf(N))
        left = np.concatenate([[0.0], cdf[:-1]])
        phi = stats.norm.cdf(atoms)
        lhs = float(max(np.max(np.abs(cdf - phi)), np.max(np.abs(left - phi))))
        return BoundReport("berry-esseen", lhs, core, Verdict.FITTED, details={"N": N})
    total = _simulate_sum(law_list, weights, R, seed, 17)
    lhs = float(stats.kstest(total, "norm").statistic)
    ci = dkw_half_width(R, CI_LEVEL)
    return BoundReport(
        "berry-esseen", lhs, core, Verdict.FITTED, R, ci, {"N": float(weights.size)}
    )


def mixture_lemma_check(
    h: npt.ArrayLike, mu: npt.ArrayLike, nu: npt.ArrayLike, t: float
) -> BoundReport:
    """
    μ(x : ∫ h(x, y) dν(y) <= t) <= 2 ∫ μ(x : h(x, y) <= 2t) dν(y), by enumeration.

    ``h`` is indexed [x, y].
    """
    table = np.asarray(h, dtype=float)
    mu_arr = np.asarray(mu, dtype=float)
    nu_arr = np.asarray(nu, dtype=float)
    if table.shape != (mu_arr.size, nu_arr.size):
        raise PreconditionError(f"h has shape {table.shape}, weights {mu_arr.size}x{nu_arr.size}")
    if np.any(table < 0) or np.any(mu_arr < 0) or np.any(nu_arr < 0):
        raise PreconditionError("h and the weights must be nonnegative")
    for weights in (mu_arr, nu_arr):
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise PreconditionError("weights must sum to 1")
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    averages = table @ nu_arr
    lhs = math.fsum(mu_arr[averages <= t])
    rhs = 2.0 * math.fsum(nu_arr * (mu_arr @ (table <= 2.0 * t)))
    return BoundReport("mixture-lemma", lhs, rhs, _explicit(lhs, rhs), details={"t": t})


def mixture_lemma_suite(n_cases: int = 1000, seed: int = 0) -> list[BoundReport]:
    """One report per random finite case of the mixture lemma."""
    gen = make_stream(seed, 23)
    reports = []
    for case in range(n_cases):
        nx, ny = gen.integers(2, 13, size=2)
        table = gen.exponential(size=(nx, ny)) ** gen.uniform(0.5, 3.0)
        mu = gen.dirichlet(np.ones(nx))
        nu = gen.dirichlet(np.ones(ny))
        t = float(np.quantile(table @ nu, gen.uniform(0.05, 0.95)))
        report = mixture_lemma_check(table, mu, nu, t)
        report.details["case"] = case
        reports.append(report)
    violations = sum(r.verdict is Verdict.VIOLATED for r in reports)
    logger.info("mixture lemma: %d cases, %d violations", n_cases, violations)
    return reports


def paley_zygmund_fact(law: CoeffLaw, theta: float | None = None) -> BoundReport:
    """
    1 - Q(X, √(2θ)) >= 2⁻⁶·Var²/E|X - EX|⁴ for θ in (0, Var].

    lhs is 1 - Q(X, √(2θ)) and rhs the lower bound, so the report holds when lhs >= rhs.
    """
    moments = law.moments()
    if moments.variance <= 0:
        raise ZeroVarianceError(f"{law.label} has zero variance")
    level = moments.variance if theta is None else theta
    if not 0 < level <= moments.variance * (1 + 1e-12):
        raise PreconditionError(f"θ must lie in (0, Var] = (0, {moments.variance}], got {level}")
    bound = PALEY_ZYGMUND_CONSTANT * moments.variance**2 / moments.fourth_central
    spread = 1.0 - exact_concentration(law, math.sqrt(2.0 * level))
    return BoundReport(
        "paley-zygmund", spread, bound, _explicit(bound, spread), details={"theta": level}
    )


def variance_reversal_check(law: CoeffLaw) -> BoundReport:
    """
    Var[X] against log(3‖X‖_∞/√Var)·sup_δ δ²(1 - Q(X, δ)).

    Raises:
        UnboundedEnvelopeError: If X is unbounded.
        ZeroVarianceError: If Var[X] = 0.
    """
    moments = law.moments()
    if not math.isfinite(moments.sup_norm):
        raise UnboundedEnvelopeError(f"{law.label} is unbounded")
    if moments.variance <= 0:
        raise ZeroVarianceError(f"{law.label} has zero variance")
    sup = levy_weak_sup(law)
    core = math.log(3.0 * moments.sup_norm / math.sqrt(moments.variance)) * sup
    return BoundReport(
        "variance-reversal", moments.variance, core, Verdict.FITTED,
        details={"levy_sup": sup},
    )


def _difference_tail(law: CoeffLaw, t: float, seed: int) -> tuple[float, int]:
    """P(|X - X'| > t) for an independent copy X'; second value is the sample count."""
    if isinstance(law, DiscreteLaw):
        atoms, probs = law.support()
        gaps = np.abs(atoms[:, None] - atoms[None, :])
        return float(np.sum(np.outer(probs, probs)[gaps > t])), 0
    if isinstance(law, Gaussian):
        return float(2.0 * stats.norm.sf(t / (law.sigma * math.sqrt(2.0)))), 0
    first = sample(law, make_stream(seed, 31), TAIL_SAMPLES)
    second = sample(law, make_stream(seed, 32), TAIL_SAMPLES)
    return float(np.mean(np.abs(first - second) > t)), TAIL_SAMPLES


def weak_symmetrization_check(law: CoeffLaw, t: float, seed: int = 0) -> BoundReport:
    """
    ½P(|X - med X| > t) <= P(|X - X'| > t) <= 2·inf_v P(|X - v| > t/2).

    The infimum equals 1 - Q(X, t). Reported with lhs = the middle term and
    rhs = the right term; the left term sits in ``details``.
    """
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    left = 0.5 * float(law.tail_about(law.median(), t))
    middle, n = _difference_tail(law, t, seed)
    right = 2.0 * (1.0 - exact_concentration(law, t))
    ci = wilson_half_width(round(middle * n), n, CI_LEVEL) if n else 0.0
    holds = (
        _explicit(left, middle, ci) is Verdict.HOLDS
        and _explicit(middle, right, ci) is Verdict.HOLDS
    )
    return BoundReport(
        "weak-symmetrization", middle, right,
        Verdict.HOLDS if holds else Verdict.VIOLATED, n, ci, {"left": left, "t": t},
    )


def levy_weakL2_equiv_check(law: CoeffLaw) -> BoundReport:
    """sup_δ δ²(1 - Q(X, δ)) against ‖X - med X‖²_{2,∞}; holds when the ratio lies in [1/8, 8]."""
    sup = levy_weak_sup(law)
    center = weak_L2_norm(law, center=law.median()) ** 2
    report = BoundReport("levy-weakL2", sup, center, Verdict.FITTED)
    low, high = EQUIVALENCE_BAND
    if not low <= report.ratio <= high:
        report.verdict = Verdict.VIOLATED
    return report


def third_moment_ratio(seq: LawSequence, horizon: int = 100, start: int = 0) -> float:
    """
    sup_{start<=k<=horizon} E|X_k - EX_k|³ / Var[X_k].

    Raises:
        ZeroVarianceError: If some X_k in the range has zero variance.
    """
    worst = 0.0
    for k in range(start, horizon + 1):
        moments = seq.law(k).moments()
        if moments.variance <= 0:
            raise ZeroVarianceError(f"X_{k} ({seq.law(k).label}) has zero variance")
        worst = max(worst, moments.third_abs_central / moments.variance)
    return worst


def variance_chain_check(law: CoeffLaw, eps: float) -> BoundReport:
    """
    Var ≥ ε²·P(|X - EX| > ε) ≥ ε²·(1 - Q(X, 2ε)).

    lhs is the middle term, rhs the variance; the lower term sits in ``details``.
    """
    if not eps > 0:
        raise PreconditionError(f"ε must be positive, got {eps}")
    moments = law.moments()
    middle = eps**2 * float(law.tail_about(moments.mean, eps))
    lower = eps**2 * (1.0 - exact_concentration(law, 2.0 * eps))
    holds = (
        _explicit(lower, middle) is Verdict.HOLDS
        and _explicit(middle, moments.variance) is Verdict.HOLDS
    )
    return BoundReport(
        "variance-chain", middle, moments.variance,
        Verdict.HOLDS if holds else Verdict.VIOLATED, details={"lower": lower, "eps": eps},
    )


def subgaussian_check(law: CoeffLaw) -> BoundReport:
    """‖X‖_{ψ₂} <= ‖X‖_∞/√(log 2) for bounded X."""
    sup_norm = law.moments().sup_norm
    if not math.isfinite(sup_norm):
        raise UnboundedEnvelopeError(f"{law.label} is unbounded")
    norm = orlicz_psi2_norm(law)
    bound = sup_norm / math.sqrt(math.log(2.0))
    return BoundReport(
        "subgaussian", norm, bound, _explicit(norm, bound, 1e-9 * bound)
    )


def log_plus_triangle_report(n_tuples: int = 10_000, seed: int = 0) -> BoundReport:
    """log⁺|Σ w_i| <= log m + Σ log⁺|w_i| on random complex m-tuples, m <= 6."""
    gen = make_stream(seed, 29)
    tuples = []
    for _ in range(n_tuples):
        size = int(gen.integers(1, 7))
        modulus = np.exp(gen.normal(0.0, 2.0, size))
        tuples.append(modulus * np.exp(2j * math.pi * gen.random(size)))
    excess = log_plus_triangle_check(tuples)
    return BoundReport(
        "log-plus-triangle", excess, 0.0, _explicit(excess, 0.0), details={"tuples": n_tuples}
    )


def fitted_constant_stability(
    reports_a: Sequence[BoundReport], reports_b: Sequence[BoundReport]
) -> float:
    """Factor between the largest implied constants of two report sets (>= 1)."""
    if not reports_a or not reports_b:
        raise PreconditionError("both report sets must be nonempty")
    a = max(r.ratio for r in reports_a)
    b = max(r.ratio for r in reports_b)
    if a <= 0 or b <= 0:
        return math.inf
    return max(a / b, b / a)

