"""Empirical and exact concentration analytics and the auxiliary series A, V, rho."""

import logging
import math
import threading
from collections.abc import Callable
from enum import Enum

import numpy as np
import numpy.typing as npt
from scipy import integrate, optimize, special

from .coeff_laws import (
    AlphaLaw,
    CoeffLaw,
    DiscreteLaw,
    Gaussian,
    LawSequence,
    exact_concentration,
    sample,
)
from .errors import (
    EmptySampleError,
    PreconditionError,
    RadiusOutOfRangeError,
    ScheduleUnreachableError,
    UnboundedEnvelopeError,
    UnsupportedLawError,
)
from .utils import compensated_sum, make_stream
from .visitor import Formula

logger = logging.getLogger(__name__)

EVAL_ABS_TOL = 1e-10
EMPIRICAL_FALLBACK_SIZE = 100_000
SUP_GRID_SIZE = 10_000
_SAMPLE_SUP_GRID_SIZE = 512
_FALLBACK_STREAM_TAG = 7
# r = e^-50, far enough from 1 that the series equals its leading term.
_FAR_LOG_RADIUS = 50.0


def empirical_concentration(samples: npt.ArrayLike, lam: float) -> float:
    """
    Q̂(λ) = max_i #{j : x_(i) <= x_(j) <= x_(i) + λ} / n over closed windows.

    Args:
        samples: Sample values (sorted ascending; unsorted input is sorted first).
        lam: Window length, nonnegative.

    Returns:
        The empirical concentration.

    Raises:
        EmptySampleError: If there are no samples.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise EmptySampleError("empirical concentration needs at least one sample")
    if lam < 0:
        raise PreconditionError(f"window length must be >= 0, got {lam}")
    if np.any(np.diff(x) < 0):
        x = np.sort(x)
    ends = np.searchsorted(x, x + lam, side="right")
    return float(np.max(ends - np.arange(x.size))) / x.size


def _concentration_or_fallback(law: CoeffLaw, lam: float, seed: int, k: int) -> float:
    try:
        return exact_concentration(law, lam)
    except UnsupportedLawError:
        logger.warning("no closed-form Q for %s; using %d samples", law.label, EMPIRICAL_FALLBACK_SIZE)
        stream = make_stream(seed, _FALLBACK_STREAM_TAG, k)
        return empirical_concentration(np.sort(sample(law, stream, EMPIRICAL_FALLBACK_SIZE)), lam)


def anticoncentration_series(seq: LawSequence, eps: float, K: int, seed: int = 0) -> float:
    """
    Partial sum Σ_{k<=K} (1 - Q(X_k, ε)) of the anti-concentration series.

    Args:
        seq: Law sequence.
        eps: Anti-concentration level, positive.
        K: Truncation index.
        seed: Seed for the empirical fallback.

    Returns:
        The partial sum.
    """
    if eps <= 0:
        raise PreconditionError(f"epsilon must be positive, got {eps}")
    if seq.is_stationary:
        return (K + 1) * (1.0 - _concentration_or_fallback(seq.law(0), eps, seed, 0))
    return compensated_sum(
        1.0 - _concentration_or_fallback(seq.law(k), eps, seed, k) for k in range(K + 1)
    )


def weighted_terms(seq: LawSequence, ks: np.ndarray, seed: int = 0) -> np.ndarray:
    """Terms t_k² (1 - Q(X_k, t_k)) at the given indices."""
    t = seq.weight_array(ks)
    if seq.is_stationary and np.all(t == t[0]):
        q = _concentration_or_fallback(seq.law(0), float(t[0]), seed, 0) if t[0] > 0 else 1.0
        return t * t * (1.0 - q)
    out = np.empty(ks.shape)
    for j, k in enumerate(ks):
        tk = float(t[j])
        q = _concentration_or_fallback(seq.law(int(k)), tk, seed, int(k)) if tk > 0 else 1.0
        out[j] = tk * tk * (1.0 - q)
    return out


def weighted_series(seq: LawSequence, K: int, seed: int = 0) -> float:
    """
    Partial sum Σ_{k<=K} t_k² (1 - Q(X_k, t_k)) of the weighted condition.

    Raises:
        WeightMissingError: If the sequence has no weights.
    """
    return compensated_sum(weighted_terms(seq, np.arange(K + 1), seed))


class SeriesKind(str, Enum):
    A = "A"
    V = "V"
    RHO = "rho"


class AuxSeries:
    """
    A power series Σ term_k r^{2k} with nonnegative terms.

    Stationary sequences use the geometric closed form c / (1 - r²). Otherwise terms
    are computed lazily in doubling chunks and cached; evaluation sums enough terms
    that the tail bound term_bound·r^{2(N+1)}/(1 - r²) drops below 1e-10.
    """

    __slots__ = ("kind", "_term_fn", "constant", "term_bound", "max_terms", "_terms", "_lock")

    def __init__(
        self,
        kind: SeriesKind,
        term_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        constant: float | None = None,
        term_bound: float | None = None,
        max_terms: int = 2**20,
    ) -> None:
        """
        Initialize the series.

        Args:
            kind: Which auxiliary series this is.
            term_fn: Maps an index array to term values (ignored when constant is set).
            constant: Constant term value for the closed-form geometric case.
            term_bound: Upper bound on every term, for the truncation estimate.
            max_terms: Largest number of terms ever materialized.
        """
        if constant is None and term_fn is None:
            raise PreconditionError("AuxSeries needs a term rule or a constant term")
        self.kind = kind
        self._term_fn = term_fn
        self.constant = constant
        self.term_bound = term_bound
        self.max_terms = max_terms
        self._terms = np.empty(0)
        self._lock = threading.Lock()

    @classmethod
    def anticoncentration(cls, seq: LawSequence, **kwargs: int) -> "AuxSeries":
        """A(r) = Σ t_k² (1 - q_k) r^{2k} with q_k = Q(X_k, t_k)."""
        bound = seq.weight_sup**2
        if seq.is_stationary and _is_constant_weight(seq):
            term = float(weighted_terms(seq, np.array([0]))[0])
            return cls(SeriesKind.A, constant=term, term_bound=bound)
        return cls(
            SeriesKind.A, term_fn=lambda ks: weighted_terms(seq, ks), term_bound=bound, **kwargs
        )

    @classmethod
    def variance(cls, seq: LawSequence, **kwargs: int) -> "AuxSeries":
        """V(r) = Σ Var[X_k] r^{2k}."""
        return cls._moment_series(SeriesKind.V, seq, lambda law: law.moments().variance, **kwargs)

    @classmethod
    def second_moment(cls, seq: LawSequence, **kwargs: int) -> "AuxSeries":
        """rho(r) = Σ E|X_k|² r^{2k}."""

        def second(law: CoeffLaw) -> float:
            m = law.moments()
            return m.variance + m.mean * m.mean

        return cls._moment_series(SeriesKind.RHO, seq, second, **kwargs)

    @classmethod
    def _moment_series(
        cls, kind: SeriesKind, seq: LawSequence, moment: Callable[[CoeffLaw], float], **kwargs: int
    ) -> "AuxSeries":
        if seq.is_stationary:
            value = moment(seq.law(0))
            return cls(kind, constant=value, term_bound=value)

        def terms(ks: np.ndarray) -> np.ndarray:
            return np.array([moment(seq.law(int(k))) for k in ks])

        # No a priori bound: the truncation estimate uses the largest materialized term.
        return cls(kind, term_fn=terms, term_bound=None, **kwargs)

    def terms(self, n: int) -> np.ndarray:
        """The first n terms (capped at max_terms)."""
        n = min(n, self.max_terms)
        if self.constant is not None:
            return np.full(n, self.constant)
        with self._lock:
            have = self._terms.size
            if have < n:
                size = max(256, have)
                while size < n:
                    size *= 2
                size = min(size, self.max_terms)
                assert self._term_fn is not None
                new = np.asarray(self._term_fn(np.arange(have, size)), dtype=float)
                self._terms = np.concatenate([self._terms, new])
                logger.debug("%s series: materialized %d terms", self.kind.value, size)
            return self._terms[:n]

    def partial_sum(self, K: int) -> float:
        """Σ_{k<=K} term_k."""
        if self.constant is not None:
            return (K + 1) * self.constant
        return float(np.sum(self.terms(K + 1)))

    def _sup_term(self, computed: np.ndarray) -> float:
        if self.term_bound is not None:
            return self.term_bound
        return float(np.max(computed)) if computed.size else 0.0

    def evaluate(self, r: float) -> float:
        """
        Evaluate at radius r in (0, 1).

        Raises:
            RadiusOutOfRangeError: If r is outside (0, 1).
        """
        if not 0.0 < r < 1.0:
            raise RadiusOutOfRangeError(f"radius must lie in (0, 1), got {r}")
        return self.evaluate_log(-math.log(r))

    def evaluate_log(self, u: float) -> float:
        """Evaluate at r = e^{-u}, u > 0; resolves radii whose 1 - r is below double spacing."""
        if not u > 0 or not math.isfinite(u):
            raise RadiusOutOfRangeError(f"log-radius must be positive and finite, got {u}")
        one_minus_r2 = -math.expm1(-2.0 * u)
        if self.constant is not None:
            return self.constant / one_minus_r2
        bound = self._sup_term(self.terms(256))
        if bound <= 0:
            needed = 256
        else:
            # tail after N terms: bound * e^{-2uN} / (1 - r^2) <= EVAL_ABS_TOL
            needed = int(math.ceil(math.log(bound / (EVAL_ABS_TOL * one_minus_r2)) / (2.0 * u))) + 1
            needed = max(needed, 1)
        if needed > self.max_terms:
            logger.warning(
                "%s series at u=%.3g needs %d terms; truncating at %d",
                self.kind.value,
                u,
                needed,
                self.max_terms,
            )
        terms = self.terms(needed)
        weights = np.exp(-2.0 * u * np.arange(terms.size))
        return float(np.sum(terms * weights))

    def certify(self, target: float) -> bool:
        """True when partial sums show the series exceeds ``target`` as r -> 1."""
        if self.constant is not None:
            return self.constant > 0
        size = 256
        while True:
            size = min(size, self.max_terms)
            if self.partial_sum(size - 1) > target:
                return True
            if size == self.max_terms:
                return False
            size *= 2

    def solve_log(self, target: float, rtol: float = 1e-12) -> float:
        """
        Log-radius u with series(e^{-u}) = target.

        Brackets start at r = 1 - 2^{-j}, incrementing j until the series exceeds the
        target, then the root is bracketed in log u.

        Raises:
            ScheduleUnreachableError: If partial sums cannot certify the target.
            PreconditionError: If the series already exceeds the target as r -> 0.
        """
        if not self.certify(target):
            raise ScheduleUnreachableError(
                f"{self.kind.value}(r) cannot be certified to reach {target:.6g}: the divergence "
                "condition sum t_k^2 (1 - Q(X_k, t_k)) = inf fails numerically"
            )
        if self.constant is not None:
            if self.constant >= target:
                raise PreconditionError(f"target {target:.6g} lies below the series at r -> 0")
            return -0.5 * math.log1p(-self.constant / target)
        j = 1
        u_near = -math.log1p(-(2.0**-j))
        u_far = _FAR_LOG_RADIUS
        while self.evaluate_log(u_near) < target:
            u_far = u_near
            j += 1
            if j > 1070:
                raise ScheduleUnreachableError(f"no radius reaches {target:.6g}")
            u_near = -math.log1p(-(2.0**-j))
        if j == 1 and self.evaluate_log(u_far) >= target:
            raise PreconditionError(f"target {target:.6g} lies below the series at r -> 0")

        def gap(w: float) -> float:
            return math.log(max(self.evaluate_log(math.exp(w)), 1e-300)) - math.log(target)

        w = optimize.brentq(gap, math.log(u_near), math.log(u_far), xtol=1e-15, rtol=rtol)
        return math.exp(float(w))


def _is_constant_weight(seq: LawSequence) -> bool:
    w = seq.weights
    if isinstance(w, Formula):
        return w.is_constant
    return isinstance(w, int | float)


def aux_series_eval(series: AuxSeries, r: float) -> float:
    return series.evaluate(r)


def weak_L2_norm(data: CoeffLaw | npt.ArrayLike, center: float = 0.0) -> float:
    """
    ‖X - center‖_{2,∞} = sup_t t·P(|X - center| > t)^{1/2}.

    Args:
        data: A catalog law (analytic) or samples (order statistics).
        center: Centering point, usually the median.

    Returns:
        The weak-L² quasi-norm.

    Raises:
        EmptySampleError: If samples are empty.
    """
    if isinstance(data, DiscreteLaw):
        atoms, probs = data.support()
        dist = np.abs(atoms - center)
        order = np.argsort(dist)
        dist, probs = dist[order], probs[order]
        mass_ge = np.cumsum(probs[::-1])[::-1]
        return float(np.max(dist * np.sqrt(np.clip(mass_ge, 0.0, 1.0))))
    if isinstance(data, AlphaLaw) and center == 0.0:
        a = data.alpha
        return math.sqrt(2.0 * a * (1.0 - 2.0 * a))
    if isinstance(data, CoeffLaw):
        law = data
        scale = law.sup_norm if math.isfinite(law.sup_norm) else 40.0 * math.sqrt(law.moments().variance)
        upper = abs(center) + scale

        def neg(t: float) -> float:
            return -t * math.sqrt(float(law.tail_about(center, t)))

        grid = np.linspace(0.0, upper, 4001)[1:]
        vals = grid * np.sqrt(law.tail_about(center, grid))
        best = int(np.argmax(vals))
        lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]
        res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        return float(max(vals[best], -res.fun))
    x = np.abs(np.asarray(data, dtype=float).reshape(-1) - center)
    if x.size == 0:
        raise EmptySampleError("weak-L2 norm needs at least one sample")
    x.sort()
    count_ge = x.size - np.searchsorted(x, x, side="left")
    return float(np.max(x * np.sqrt(count_ge / x.size)))


def subgaussian_norm_bound(law: CoeffLaw) -> float:
    """
    Certified upper bound (log 2)^{-1/2} ‖X‖_∞ on the ψ₂ Orlicz norm.

    Raises:
        UnboundedEnvelopeError: If the law is unbounded.
    """
    sup = law.sup_norm
    if not math.isfinite(sup):
        raise UnboundedEnvelopeError(f"{law.label} has no finite sup norm")
    return sup / math.sqrt(math.log(2.0))


def orlicz_psi2_norm(law: CoeffLaw) -> float:
    """
    ψ₂ Orlicz norm inf{t > 0 : E exp(X²/t²) <= 2}.

    Closed form √(8/3)·σ for Gaussian laws; otherwise the root of log E exp(X²/t²) = log 2.

    Raises:
        UnsupportedLawError: If no moment generating expression is available.
    """
    if isinstance(law, Gaussian):
        return math.sqrt(8.0 / 3.0) * law.sigma
    m = law.moments()
    second = m.variance + m.mean * m.mean
    if second == 0.0:
        return 0.0
    if isinstance(law, DiscreteLaw):
        atoms, probs = law.support()
        keep = probs > 0
        log_p = np.log(probs[keep])
        sq = atoms[keep] ** 2

        def log_mgf(t: float) -> float:
            return float(special.logsumexp(sq / (t * t) + log_p))

    elif isinstance(law, AlphaLaw):
        a, s = law.alpha, law.gap

        def log_mgf(t: float) -> float:
            peak = 1.0 / (t * t)
            val, _ = integrate.quad(
                lambda x: 4.0 * a * x**-3 * math.exp(x * x / (t * t) - peak), s, 1.0,
                epsabs=0.0, epsrel=1e-12, limit=200,
            )
            return float(np.logaddexp(math.log(2.0 * a), peak + math.log(val)))

    else:
        raise UnsupportedLawError(f"no Orlicz norm expression for {law.label}")

    lo = math.sqrt(second)
    hi = subgaussian_norm_bound(law)
    target = math.log(2.0)
    if log_mgf(hi) >= target:
        return hi
    return float(optimize.brentq(lambda t: log_mgf(t) - target, lo, hi, xtol=1e-14, rtol=1e-13))


def levy_weak_sup(data: CoeffLaw | npt.ArrayLike, grid_size: int | None = None) -> float:
    """
    Certified lower bound on sup_δ δ²(1 - Q(X, δ)).

    A logarithmic grid over [1e-6·diam, diam] is combined with left limits at the
    distances where Q jumps (atom gaps and distribution breakpoints).

    Args:
        data: A catalog law or samples.
        grid_size: Number of grid points (10⁴ for laws, 512 for samples by default).

    Returns:
        The grid supremum.
    """
    if isinstance(data, CoeffLaw):
        law = data
        diam = law.diameter
        if not math.isfinite(diam):
            diam = 40.0 * math.sqrt(law.moments().variance)
        if diam == 0.0:
            return 0.0
        n = grid_size or SUP_GRID_SIZE
        grid = np.geomspace(1e-6 * diam, diam, n)
        candidates = _jump_distances(law)
        deltas = np.concatenate([grid, candidates * (1.0 - 1e-9)])
        deltas = deltas[deltas > 0]
        values = deltas**2 * (1.0 - law.concentration(deltas))
        return float(np.max(values))
    x = np.sort(np.asarray(data, dtype=float).reshape(-1))
    if x.size == 0:
        raise EmptySampleError("weak sup needs at least one sample")
    diam = float(x[-1] - x[0])
    if diam == 0.0:
        return 0.0
    n = grid_size or _SAMPLE_SUP_GRID_SIZE
    deltas = np.geomspace(1e-6 * diam, diam, n)
    q = np.array([empirical_concentration(x, float(d)) for d in deltas])
    return float(np.max(deltas**2 * (1.0 - q)))


def _jump_distances(law: CoeffLaw) -> np.ndarray:
    if isinstance(law, DiscreteLaw):
        atoms, _ = law.support()
        diffs = np.abs(atoms[:, None] - atoms[None, :]).reshape(-1)
        return np.unique(diffs[diffs > 0])
    if isinstance(law, AlphaLaw):
        s = law.gap
        return np.array([s, 2 * s, 1.0 - s, 1.0, 1.0 + s, 2.0])
    return np.empty(0)
