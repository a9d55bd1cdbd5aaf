"""Test functions ψ, arc integrals of ψ(|F|), growth profiles and boundary partial sums."""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy import optimize, special, stats

from .coeff_laws import LawSequence
from .concentration import AuxSeries
from .errors import (
    ConfigError,
    MissingDensityBoundError,
    PreconditionError,
    ScheduleUnreachableError,
)
from .roots_and_potentials import LOG_FLOOR, singular_log_integral
from .series_engine import (
    TWO_PI,
    ArcIntegralResult,
    ArcSpec,
    RadiusSchedule,
    SeriesSample,
    evaluate_on_arc,
    evaluate_on_circle,
    radius_schedule,
    sample_series,
    truncation_order,
)
from .utils import wilson_interval

logger = logging.getLogger(__name__)

MIN_PROFILE_REPLICATES = 200
DEFAULT_MAX_DEGREE = 2**20
PROFILE_TOLERANCE = 1e-6
MAX_PROFILE_GRID = 2**16


class Psi(ABC):
    """A test function ψ: [0, ∞) -> R, nondecreasing and unbounded."""

    is_test_function: bool = True

    @property
    @abstractmethod
    def name(self) -> str:
        """Label used in reports and manifests."""

    @abstractmethod
    def __call__(self, t: npt.ArrayLike) -> np.ndarray:
        """Evaluate ψ elementwise."""

    @property
    def subadditivity_constant(self) -> float | None:
        """C with ψ(t+s) <= C[1 + ψ(t) + ψ(s)], or None if not known in closed form."""
        return None


@dataclass(frozen=True)
class PowerPsi(Psi):
    p: float = 1.0

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise PreconditionError(f"power test function needs p > 0, got {self.p}")

    @property
    def name(self) -> str:
        return f"power({self.p:g})"

    def __call__(self, t: npt.ArrayLike) -> np.ndarray:
        return np.asarray(np.power(np.asarray(t, dtype=float), self.p))

    @property
    def subadditivity_constant(self) -> float:
        return max(1.0, 2.0 ** (self.p - 1.0))


@dataclass(frozen=True)
class LogPlusPsi(Psi):
    @property
    def name(self) -> str:
        return "log_plus"

    def __call__(self, t: npt.ArrayLike) -> np.ndarray:
        return np.log(np.maximum(np.asarray(t, dtype=float), 1.0))

    @property
    def subadditivity_constant(self) -> float:
        # log⁺(t+s) <= log 2 + log⁺t + log⁺s
        return 1.0


@dataclass(frozen=True)
class SignedLogPsi(Psi):
    """log t itself: monotone but unbounded below, so not a test function."""

    is_test_function = False

    @property
    def name(self) -> str:
        return "signed_log"

    def __call__(self, t: npt.ArrayLike) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class CustomPsi(Psi):
    """
    Piecewise-linear ψ through tabulated knots, extended past the last knot with the last slope.

    Attributes:
        knots: Strictly increasing abscissae starting at 0.
        values: Nondecreasing ordinates; the last slope must be positive.
    """

    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        x = np.asarray(self.knots, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.size < 2 or x.size != y.size:
            raise PreconditionError("custom ψ needs at least two knots with matching values")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise PreconditionError("custom ψ knots must start at 0 and increase strictly")
        if np.any(np.diff(y) < 0):
            raise PreconditionError("custom ψ values must be nondecreasing")
        if not y[-1] > y[-2]:
            raise PreconditionError("custom ψ must be strictly increasing on its last piece")

    @property
    def name(self) -> str:
        return "custom"

    def __call__(self, t: npt.ArrayLike) -> np.ndarray:
        x = np.asarray(self.knots)
        y = np.asarray(self.values)
        tt = np.asarray(t, dtype=float)
        slope = (y[-1] - y[-2]) / (x[-1] - x[-2])
        inner = np.interp(tt, x, y)
        return np.asarray(np.where(tt > x[-1], y[-1] + slope * (tt - x[-1]), inner))


def psi_from_config(spec: Mapping[str, Any]) -> Psi:
    """
    Build ψ from a ``[psi]`` table.

    Raises:
        ConfigError: For unknown variants or invalid fields.
    """
    kind = spec.get("type", "power")
    try:
        if kind == "power":
            return PowerPsi(float(spec.get("p", 1.0)))
        if kind == "log_plus":
            return LogPlusPsi()
        if kind == "signed_log":
            return SignedLogPsi()
        if kind == "custom":
            return CustomPsi(
                tuple(float(v) for v in spec["knots"]), tuple(float(v) for v in spec["values"])
            )
    except (KeyError, TypeError, ValueError, PreconditionError) as err:
        raise ConfigError(f"invalid [psi] table: {err}") from err
    raise ConfigError(f"unknown psi type {kind!r}; known: power, log_plus, signed_log, custom")


@dataclass(frozen=True)
class SubadditivityCertificate:
    constant: float | None
    worst_ratio: float

    @property
    def holds(self) -> bool:
        return self.constant is not None and self.worst_ratio <= self.constant * (1 + 1e-12)


def subadditivity_certificate(
    psi: Psi, grid: npt.ArrayLike | None = None
) -> SubadditivityCertificate:
    """Largest ψ(t+s)/(1 + ψ(t) + ψ(s)) over a 2-D grid, with the known constant."""
    if not psi.is_test_function:
        raise PreconditionError(f"{psi.name} is not a test function")
    points = np.geomspace(1e-6, 1e6, 121) if grid is None else np.asarray(grid, dtype=float)
    t, s = np.meshgrid(points, points)
    ratio = psi(t + s) / (1.0 + psi(t) + psi(s))
    return SubadditivityCertificate(psi.subadditivity_constant, float(ratio.max()))


def log_plus_triangle_check(tuples: Sequence[npt.ArrayLike]) -> float:
    """
    Largest excess of log⁺|Σ w_i| over log m + Σ log⁺|w_i| across complex m-tuples.

    A value <= 0 means the triangle inequality held on every tuple.
    """
    log_plus = LogPlusPsi()
    worst = -math.inf
    for w in tuples:
        arr = np.asarray(w, dtype=complex)
        lhs = float(log_plus(abs(arr.sum())))
        rhs = math.log(arr.size) + math.fsum(log_plus(np.abs(arr)))
        worst = max(worst, lhs - rhs)
    return worst


def arc_integral(
    s: SeriesSample,
    r: float,
    arc: ArcSpec,
    psi: Psi,
    m: int | None = None,
    normalized: bool = False,
) -> ArcIntegralResult:
    """
    ∫_I ψ(|F_N(r·e^{iθ})|) dθ by the midpoint rule on m and 2m panels with Richardson.

    Args:
        s: Realization.
        r: Radius in [0, 1).
        arc: Arc I.
        psi: Test function.
        m: Grid override (defaults to the arc's grid).
        normalized: Divide by |I|.

    Returns:
        The integral; non-finite values (overflow) are flagged, never clipped.
    """
    if not 0.0 <= r < 1.0:
        raise PreconditionError(f"radius must lie in [0, 1), got {r}")
    count = m or arc.m
    if isinstance(psi, SignedLogPsi):
        moduli = np.abs(evaluate_on_arc(s, r, arc, count))
        if r > 0 and moduli.min() < LOG_FLOOR:
            return singular_log_integral(s, r, arc, count, normalized=normalized)

    def midpoint(points: int) -> float:
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            values = psi(np.abs(evaluate_on_arc(s, r, arc, points)))
            return float(values.sum() * arc.length / points)

    coarse = midpoint(count)
    fine = midpoint(2 * count)
    result = ArcIntegralResult.from_midpoints(coarse, fine, count, arc.length, normalized)
    if result.flagged:
        logger.warning("arc integral of %s overflowed at r=%.6f", psi.name, r)
    return result


def log_arc_integral(s: SeriesSample, r: float, arc: ArcSpec) -> ArcIntegralResult:
    """∫_I log|F_N(r·e^{iθ})| dθ with near-root corrections."""
    if not 0.0 < r < 1.0:
        raise PreconditionError(f"radius must lie in (0, 1), got {r}")
    return singular_log_integral(s, r, arc)


def rho_partial(seq: LawSequence, N: int, r: float) -> float:
    """ρ_N(r) = Σ_{k<=N} r^{2k} E|X_k|²."""
    return float(np.dot(_second_moments(seq, N), float(r) ** (2.0 * np.arange(N + 1))))


def _second_moments(seq: LawSequence, N: int) -> np.ndarray:
    out = np.empty(N + 1)
    for k in range(N + 1):
        moments = seq.law(k).moments()
        out[k] = moments.variance + moments.mean**2
    return out


def radius_for_rho(seq: LawSequence, N: int, target: float) -> float:
    """
    Radius r in (0, 1) with ρ_N(r) = target.

    Raises:
        ScheduleUnreachableError: If ρ_N(1) <= target.
    """
    second = _second_moments(seq, N)
    powers = 2.0 * np.arange(N + 1)

    def gap(r: float) -> float:
        return float(np.dot(second, r**powers)) - target

    if gap(1.0) <= 0:
        raise ScheduleUnreachableError(f"ρ_{N}(1) = {gap(1.0) + target:.4g} does not exceed {target}")
    if gap(0.0) >= 0:
        raise PreconditionError(f"ρ_{N}(0) already reaches {target}")
    return float(optimize.brentq(gap, 0.0, 1.0, xtol=1e-15, rtol=1e-14))


def log_integral_deviation(s: SeriesSample, r: float, arc: ArcSpec, rho: float) -> float:
    """∫_I log|F_N| - (|I|/2)·log ρ_N(r)."""
    return log_arc_integral(s, r, arc).value - 0.5 * arc.length * math.log(rho)


@dataclass(frozen=True)
class GrowthProfile:
    """
    Replicate statistics of Y_{I,r_k} along a radius schedule.

    ``values`` has one row per replicate and one column per schedule index.
    """

    schedule: RadiusSchedule
    psi_name: str
    degrees: tuple[int, ...]
    clamped: tuple[bool, ...]
    values: np.ndarray
    thresholds: np.ndarray
    medians: np.ndarray
    lower_quartiles: np.ndarray
    upper_quartiles: np.ndarray
    frequencies: np.ndarray
    frequency_bounds: tuple[tuple[float, float], ...]
    ratios: np.ndarray
    flagged: int = 0

    @property
    def ks(self) -> tuple[int, ...]:
        return self.schedule.ks

    @property
    def replicates(self) -> int:
        return int(self.values.shape[0])

    @property
    def fitted_constant(self) -> float:
        """max_k f_k·√A(r_k)/k over k >= 2."""
        mask = np.asarray(self.ks) >= 2
        ratios = self.ratios[mask]
        ratios = ratios[np.isfinite(ratios)]
        return float(ratios.max()) if ratios.size else math.nan

    @property
    def small_ball_constant(self) -> float:
        """Smallest C with f_k <= C·k⁻² at the upper Wilson limit of f_k, over k >= 2."""
        ks = np.asarray(self.ks, dtype=float)
        upper = np.array([high for _, high in self.frequency_bounds], dtype=float)
        mask = ks >= 2
        return float((upper[mask] * ks[mask] ** 2).max()) if mask.any() else math.nan

    @property
    def median_steps_down(self) -> int:
        """Adjacent decreases of the median over k >= 2."""
        tail = self.medians[np.asarray(self.ks) >= 2]
        return int(np.count_nonzero(np.diff(tail) < 0))


def _profile_grid(degree: int, arc: ArcSpec) -> int:
    needed = 4.0 * degree * arc.length / TWO_PI
    grid = arc.m
    while grid < needed and grid < MAX_PROFILE_GRID:
        grid *= 2
    return grid


def snb_growth_profile(
    seq: LawSequence,
    arc: ArcSpec,
    psi: Psi,
    K: int,
    R: int,
    seed: int = 0,
    radii: Sequence[float] | None = None,
    threads: int = 1,
    max_degree: int = DEFAULT_MAX_DEGREE,
    tol: float = PROFILE_TOLERANCE,
) -> GrowthProfile:
    """
    Distribution of Y_{I,r_k} = ⨍_I ψ(|F_N(r_k e^{iθ})|) dθ over R replicates.

    Radii come from the schedule A(r_k) = k⁶ unless given explicitly. The profile
    starts at the first k >= sup_k t_k. Each replicate is sampled once at the largest
    degree and truncated per radius; degrees above ``max_degree`` are clamped and flagged.

    Args:
        seq: Law sequence (weighted unless radii are explicit).
        arc: Arc I.
        psi: Test function.
        K: Schedule length.
        R: Replicates.
        seed: Master seed.
        radii: Optional explicit increasing radii replacing the schedule.
        threads: Worker threads.
        max_degree: Degree clamp.
        tol: Truncation tolerance.

    Returns:
        The growth profile.

    Raises:
        ScheduleUnreachableError: If the schedule cannot be certified.
    """
    if R < 1:
        raise PreconditionError(f"profile needs at least one replicate, got {R}")
    if R < MIN_PROFILE_REPLICATES:
        logger.warning("profile with R=%d < %d replicates", R, MIN_PROFILE_REPLICATES)
    A = AuxSeries.anticoncentration(seq) if seq.has_weights else None
    if radii is None:
        if A is None:
            A = AuxSeries.anticoncentration(seq)
        schedule = radius_schedule(A, K)
    else:
        u = tuple(-math.log(float(r)) for r in radii)
        targets = tuple(A.evaluate_log(v) if A is not None else math.nan for v in u)
        schedule = RadiusSchedule(u, targets, tuple(range(1, len(u) + 1)))
    start = max(1, math.ceil(seq.weight_sup)) if seq.has_weights else 1
    keep = [i for i, k in enumerate(schedule.ks) if k >= start]
    if len(keep) < len(schedule):
        logger.info("profile starts at k=%d (k >= sup t_k)", start)
        schedule = RadiusSchedule(
            tuple(schedule.log_radii[i] for i in keep),
            tuple(schedule.targets[i] for i in keep),
            tuple(schedule.ks[i] for i in keep),
        )
    radii_arr = schedule.radii
    natural = [truncation_order(seq, float(r), tol) for r in radii_arr]
    degrees = tuple(min(n, max_degree) for n in natural)
    clamped = tuple(n > max_degree for n in natural)
    for k, n, flag in zip(schedule.ks, natural, clamped, strict=True):
        if flag:
            logger.warning("k=%d: degree %d clamped to %d", k, n, max_degree)
    grids = [_profile_grid(n, arc) for n in degrees]
    top = max(degrees) if degrees else 0

    def replicate(replicate_id: int) -> tuple[list[float], int]:
        full = sample_series(seq, top, seed, replicate_id)
        row = []
        flags = 0
        for r, n, grid in zip(radii_arr, degrees, grids, strict=True):
            result = arc_integral(full.truncated(n), float(r), arc, psi, grid, normalized=True)
            row.append(result.value)
            flags += result.flagged
        return row, flags

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(replicate, range(R)))
    values = np.array([row for row, _ in results], dtype=float).reshape(R, len(schedule))
    flagged = sum(f for _, f in results)

    ordered = np.sort(values, axis=0)
    ks = np.asarray(schedule.ks, dtype=float)
    thresholds = psi(ks)
    hits = (values <= thresholds).sum(axis=0)
    frequencies = hits / R
    bounds = tuple(wilson_interval(int(h), R) for h in hits)
    if A is not None:
        a_values = np.array([A.evaluate_log(u) for u in schedule.log_radii])
        ratios = frequencies * np.sqrt(a_values) / ks
    else:
        ratios = np.full(ks.shape, math.nan)
    return GrowthProfile(
        schedule=schedule,
        psi_name=psi.name,
        degrees=degrees,
        clamped=clamped,
        values=values,
        thresholds=thresholds,
        medians=np.quantile(ordered, 0.5, axis=0),
        lower_quartiles=np.quantile(ordered, 0.25, axis=0),
        upper_quartiles=np.quantile(ordered, 0.75, axis=0),
        frequencies=frequencies,
        frequency_bounds=bounds,
        ratios=ratios,
        flagged=int(flagged),
    )


def circle_means(
    s: SeriesSample, p: float, radii: npt.ArrayLike, m: int | None = None
) -> np.ndarray:
    """(1/2π)∫_0^{2π} |F_N(r·e^{iθ})|^p dθ at each radius (exact for even integer p)."""
    if not p > 0:
        raise PreconditionError(f"exponent must be positive, got {p}")
    if m is None:
        needed = max(2.0, math.ceil(p)) * (s.degree + 1) + 1
        m = 256
        while m < needed:
            m *= 2
    grid = np.atleast_1d(np.asarray(radii, dtype=float))
    return np.array([np.mean(np.abs(evaluate_on_circle(s, float(r), m)) ** p) for r in grid])


def hardy_norm_estimate(s: SeriesSample, p: float, radii: npt.ArrayLike) -> float:
    """Max over the radius grid of the normalized circle integral of |F_N|^p."""
    return float(circle_means(s, p, radii).max())


def khintchine_constant(p: float) -> float:
    """Sharp B_p in (E|Σ c_k ε_k|^p)^{1/p} <= B_p ‖c‖₂ for real c."""
    if not p > 0:
        raise PreconditionError(f"exponent must be positive, got {p}")
    if p <= 2:
        return 1.0
    log_moment = special.gammaln((p + 1) / 2) - 0.5 * math.log(math.pi)
    return math.sqrt(2.0) * math.exp(log_moment / p)


@dataclass(frozen=True)
class PartialSupResult:
    """Running maxima M_N of boundary partial sums and the Abel domination slack."""

    theta: float
    running_max: np.ndarray
    t_grid: np.ndarray
    abel_slack: float

    @property
    def abel_holds(self) -> bool:
        scale = max(1.0, float(self.running_max[-1]))
        return self.abel_slack >= -1e-9 * scale


def boundary_partial_sup(
    s: SeriesSample, theta: float, N_max: int, t_grid: npt.ArrayLike | None = None
) -> PartialSupResult:
    """
    M_N = max_{m<=N} |Σ_{k<=m} X_k e^{ikθ}| for N = 0..N_max.

    Also checks |F_{N_max}(t e^{iθ})| <= M_{N_max} on a grid of t in [0, 1).
    """
    if N_max < 1:
        raise PreconditionError(f"N_max must be >= 1, got {N_max}")
    if N_max > s.degree:
        raise PreconditionError(f"N_max={N_max} exceeds the realization degree {s.degree}")
    coeffs = s.coeffs[: N_max + 1]
    k = np.arange(N_max + 1)
    partial = np.cumsum(coeffs * np.exp(1j * k * theta))
    running = np.maximum.accumulate(np.abs(partial))
    ts = np.linspace(0.0, 1.0, 65, endpoint=False) if t_grid is None else np.asarray(t_grid)
    values = np.abs(np.polynomial.polynomial.polyval(ts * np.exp(1j * theta), coeffs))
    slack = float(np.min(running[-1] - values))
    return PartialSupResult(float(theta), running, ts, slack)


@dataclass(frozen=True)
class FluctuationTail:
    """Empirical tail of |log W_z - log E W_z| with W_z = |F_N(z)|²."""

    t_grid: np.ndarray
    tail: np.ndarray
    expected_w: float
    decay_rate: float
    intercept: float
    replicates: int


def expected_modulus_squared(seq: LawSequence, z: complex, N: int) -> float:
    """E|F_N(z)|² = Σ|z|^{2k} Var X_k + |Σ E X_k z^k|² (= Σ|z|^{2k} E X_k² for centred laws)."""
    ks = np.arange(N + 1)
    moments = [seq.law(int(k)).moments() for k in ks]
    variance = np.array([m.variance for m in moments])
    mean = np.array([m.mean for m in moments])
    powers = np.abs(z) ** (2.0 * ks)
    return float(np.dot(variance, powers) + abs(np.polynomial.polynomial.polyval(z, mean)) ** 2)


def log_fluctuation_tail(
    seq: LawSequence,
    z: complex,
    N: int,
    R: int,
    t_grid: npt.ArrayLike,
    seed: int = 0,
    threads: int = 1,
) -> FluctuationTail:
    """
    P̂(|log W_z - log E W_z| > t) on a grid of t, with a log-linear decay fit.

    Raises:
        MissingDensityBoundError: If some X_k has no density bound.
    """
    for k in range(N + 1):
        if seq.law(k).density_bound is None:
            raise MissingDensityBoundError(
                f"law {seq.law(k).label} at k={k} has no density bound; the fluctuation tail "
                "needs sup_k Q(X_k, λ) <= bλ"
            )
    expected = expected_modulus_squared(seq, z, N)
    powers = np.asarray(z, dtype=complex) ** np.arange(N + 1)

    def modulus(replicate_id: int) -> float:
        return float(abs(np.dot(sample_series(seq, N, seed, replicate_id).coeffs, powers)) ** 2)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        w = np.fromiter(pool.map(modulus, range(R)), dtype=float, count=R)
    with np.errstate(divide="ignore"):
        deviation = np.abs(np.log(w) - math.log(expected))
    ts = np.asarray(t_grid, dtype=float)
    tail = (deviation[None, :] > ts[:, None]).mean(axis=1)
    positive = tail > 0
    rate, intercept = math.nan, math.nan
    if np.count_nonzero(positive) >= 2:
        fit = stats.linregress(ts[positive], np.log(tail[positive]))
        rate, intercept = float(-fit.slope), float(fit.intercept)
    logger.debug("fluctuation tail at z=%s: E W=%.6g, rate %.4f", z, expected, rate)
    return FluctuationTail(ts, tail, expected, rate, intercept, R)
