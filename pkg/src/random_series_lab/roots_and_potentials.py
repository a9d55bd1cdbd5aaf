"""Roots of truncated series, Jensen checks, annulus statistics and arc potentials."""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, special, stats

from .coeff_laws import LawSequence
from .errors import (
    DegreeZeroError,
    InsufficientRootsError,
    PreconditionError,
    RootOnCircleError,
)
from .series_engine import (
    TWO_PI,
    ArcIntegralResult,
    ArcSpec,
    SeriesSample,
    evaluate_on_arc,
    sample_series,
)
from .utils import make_stream

logger = logging.getLogger(__name__)

MAX_ROOT_DEGREE = 8192
ON_CIRCLE_TOL = 1e-9
NEAR_ROOT_PANELS = 10.0
LOG_FLOOR = 1e-12
ANNULUS_CUTOFF = 0.5
_POLISH_STEPS = 3
_CLAUSEN_TERMS = 12
# |B_2n| / (2n (2n+1) (2n)!) for n = 1..12
_BERNOULLI = special.bernoulli(2 * _CLAUSEN_TERMS)
_CLAUSEN_COEFFS = np.array(
    [
        abs(_BERNOULLI[2 * n]) / (2 * n * (2 * n + 1) * special.factorial(2 * n, exact=False))
        for n in range(1, _CLAUSEN_TERMS + 1)
    ]
)
_CLAUSEN_POWERS = np.array([2 * n + 1 for n in range(1, _CLAUSEN_TERMS + 1)])


@dataclass(frozen=True)
class RootSet:
    """
    Zeros of a polynomial F_N (multiplicity-repeated) with the scaled residual.

    Attributes:
        roots: Complex roots, zeros at the origin included.
        degree: Degree after removing vanishing top coefficients.
        residual: max_j |F(z_j)| / max(1, |z_j|)^degree.
        zero_multiplicity: Order of the zero at the origin.
    """

    roots: np.ndarray
    degree: int
    residual: float
    zero_multiplicity: int = 0

    def __len__(self) -> int:
        return int(self.roots.size)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.roots)


def _trim(coeffs: np.ndarray) -> np.ndarray:
    nonzero = np.flatnonzero(coeffs)
    if nonzero.size == 0:
        return coeffs[:1]
    return coeffs[: nonzero[-1] + 1]


def polynomial_roots(coeffs: np.ndarray | SeriesSample) -> RootSet:
    """
    Roots of Σ c_k z^k by companion-matrix eigenvalues with Newton polishing.

    Args:
        coeffs: Coefficients c_0..c_N in increasing degree, or a realization.

    Returns:
        The root set.

    Raises:
        DegreeZeroError: If the polynomial is constant after deflation.
        PreconditionError: If the degree exceeds MAX_ROOT_DEGREE.
    """
    c = np.asarray(coeffs.coeffs if isinstance(coeffs, SeriesSample) else coeffs)
    c = _trim(c.astype(complex if np.iscomplexobj(c) else float))
    degree = c.size - 1
    if degree < 1:
        raise DegreeZeroError("polynomial has degree 0 after removing zero top coefficients")
    if degree > MAX_ROOT_DEGREE:
        raise PreconditionError(f"root finding is capped at degree {MAX_ROOT_DEGREE}, got {degree}")
    low = int(np.flatnonzero(c)[0])
    core = c[low:]
    if core.size > 1:
        found = np.linalg.eigvals(linalg.companion(core[::-1]))
        found = _polish(core, found.astype(complex))
    else:
        found = np.empty(0, dtype=complex)
    roots = np.concatenate([np.zeros(low, dtype=complex), found])
    residual = _scaled_residual(c, roots, degree)
    logger.debug("degree %d roots: residual %.3e", degree, residual)
    return RootSet(roots, degree, residual, low)


def _polish(core: np.ndarray, roots: np.ndarray) -> np.ndarray:
    deriv = np.polynomial.polynomial.polyder(core)
    polyval = np.polynomial.polynomial.polyval
    z = roots.copy()
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        f = polyval(z, core)
        for _ in range(_POLISH_STEPS):
            step = f / polyval(z, deriv)
            ok = np.isfinite(step)
            for _halving in range(4):
                candidate = np.where(ok, z - step, z)
                f_new = polyval(candidate, core)
                better = ok & np.isfinite(f_new) & (np.abs(f_new) < np.abs(f))
                z = np.where(better, candidate, z)
                f = np.where(better, f_new, f)
                ok = ok & ~better
                if not ok.any():
                    break
                step = step / 2
    return z


def _scaled_residual(coeffs: np.ndarray, roots: np.ndarray, degree: int) -> float:
    if roots.size == 0:
        return 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.abs(np.polynomial.polynomial.polyval(roots, coeffs))
        scale = np.maximum(1.0, np.abs(roots)) ** degree
        ratios = values / scale
    ratios = np.where(np.isfinite(ratios), ratios, 0.0)
    return float(ratios.max())


def clausen(theta: float | np.ndarray) -> np.ndarray:
    """
    Clausen function Cl₂(θ) = -∫_0^θ log|2 sin(t/2)| dt.

    Uses θ - θ log|θ| + Σ |B_2n| θ^{2n+1} / (2n (2n+1) (2n)!) on [-π, π] and oddness.
    """
    x = np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi
    ax = np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.where(ax > 0, ax - ax * np.log(ax), 0.0)
    series = (ax[..., None] ** _CLAUSEN_POWERS * _CLAUSEN_COEFFS).sum(axis=-1)
    return np.asarray(np.sign(x) * (head + series))


@dataclass(frozen=True)
class PotentialQuery:
    """The integral U(z) = ∫_a^b log|r·e^{iθ} - z| dθ."""

    r: float
    a: float
    b: float
    z: complex

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise PreconditionError(f"radius must be positive, got {self.r}")
        if not 0 < self.b - self.a <= TWO_PI * (1 + 1e-15):
            raise PreconditionError(f"need 0 < b - a <= 2π, got ({self.a}, {self.b})")


def arc_log_potential(query: PotentialQuery) -> float:
    """
    ∫_a^b log|r·e^{iθ} - z| dθ.

    Points on the circle |z| = r use the Clausen closed form; other points are
    integrated adaptively with a breakpoint at the nearest angle of the arc.
    """
    r, a, b = query.r, query.a, query.b
    z = complex(query.z)
    rho = abs(z)
    if rho == 0.0:
        return (b - a) * math.log(r)
    phi = math.atan2(z.imag, z.real)
    if abs(rho - r) <= 1e-14 * r:
        return float((b - a) * math.log(r) + clausen(a - phi) - clausen(b - phi))

    gap2 = (r - rho) ** 2
    scale = 4.0 * r * rho

    def integrand(theta: float) -> float:
        return 0.5 * math.log(gap2 + scale * math.sin(0.5 * (theta - phi)) ** 2)

    nearest = a + math.fmod(phi - a, TWO_PI) % TWO_PI
    points = [nearest] if a < nearest < b else None
    value, _err = integrate.quad(
        integrand, a, b, points=points, epsabs=1e-13, epsrel=1e-12, limit=1000
    )
    return float(value)


def _arc_distance(z: np.ndarray, r: float, arc: ArcSpec) -> np.ndarray:
    """Euclidean distance from each z to the arc {r·e^{iθ}: θ in I}."""
    angles = np.mod(np.angle(z) - arc.a, TWO_PI)
    inside = angles <= arc.length
    radial = np.abs(np.abs(z) - r)
    ends = np.minimum(
        np.abs(z - r * np.exp(1j * arc.a)), np.abs(z - r * np.exp(1j * arc.b))
    )
    return np.where(inside | arc.is_full_circle, radial, ends)


def singular_log_integral(
    s: SeriesSample, r: float, arc: ArcSpec, m: int | None = None, normalized: bool = False
) -> ArcIntegralResult:
    """
    ∫_I log|F_N(r·e^{iθ})| dθ with analytic treatment of roots near the arc.

    Roots within NEAR_ROOT_PANELS grid steps of the arc are divided out; their
    monomial potentials are added exactly and the smooth remainder goes through
    the Richardson midpoint rule. Without roots (degree above MAX_ROOT_DEGREE)
    |F_N| is floored at LOG_FLOOR and the result flagged when the floor binds.

    Args:
        s: Realization.
        r: Radius, positive.
        arc: Arc of integration.
        m: Grid size override.
        normalized: Divide by |I|.

    Returns:
        The integral with its error estimate.
    """
    if not r > 0:
        raise PreconditionError(f"radius must be positive, got {r}")
    count = m or arc.m
    h = arc.length / count
    near = np.empty(0, dtype=complex)
    flagged = False
    c = _trim(np.asarray(s.coeffs))
    if c.size == 1:
        if c[0] == 0:
            return ArcIntegralResult(-math.inf, normalized, count, math.inf, True)
        total = arc.length * math.log(abs(c[0]))
        return ArcIntegralResult(total / arc.length if normalized else total, normalized, count, 0.0)
    if c.size - 1 <= MAX_ROOT_DEGREE:
        roots = polynomial_roots(c).roots
        near = roots[_arc_distance(roots, r, arc) < NEAR_ROOT_PANELS * h]
    else:
        logger.warning(
            "degree %d exceeds root cap %d; log|F| floored at %g",
            c.size - 1, MAX_ROOT_DEGREE, LOG_FLOOR,
        )

    def smooth_sum(points: int) -> tuple[float, bool]:
        values = np.abs(evaluate_on_arc(s, r, arc, points))
        theta = arc.nodes(points)
        z = r * np.exp(1j * theta)
        if near.size:
            tiny = values < 1e-300
            logs = np.log(np.maximum(values, 1e-300))
            logs -= np.log(np.abs(z[:, None] - near[None, :])).sum(axis=1)
            return float(logs.sum() * arc.length / points), bool(tiny.any())
        floored = values < LOG_FLOOR
        logs = np.log(np.maximum(values, LOG_FLOOR))
        return float(logs.sum() * arc.length / points), bool(floored.any())

    coarse, flag_coarse = smooth_sum(count)
    fine, flag_fine = smooth_sum(2 * count)
    flagged = flag_coarse or flag_fine
    if flagged:
        logger.warning("log|F| hit the floor on arc (%.4f, %.4f) at r=%.6f", arc.a, arc.b, r)
    correction = math.fsum(
        arc_log_potential(PotentialQuery(r, arc.a, arc.b, complex(z))) for z in near
    )
    return ArcIntegralResult.from_midpoints(
        coarse, fine, count, arc.length, normalized, flagged=flagged, correction=correction
    )


def jensen_residual(s: SeriesSample, r: float, m: int | None = None) -> float:
    """
    |(1/2π)∫ log|F_N(r·e^{iθ})| dθ - (log|c_ν| + ν·log r + Σ_{0<|z_j|<r} log(r/|z_j|))|.

    ν is the order of the zero at the origin and c_ν the first nonzero coefficient.

    Raises:
        RootOnCircleError: If a root lies within ON_CIRCLE_TOL of |z| = r.
    """
    c = _trim(np.asarray(s.coeffs))
    if c.size == 1:
        return 0.0
    root_set = polynomial_roots(c)
    moduli = root_set.moduli
    on_circle = np.abs(moduli - r) < ON_CIRCLE_TOL
    if on_circle.any():
        raise RootOnCircleError(r, complex(root_set.roots[np.argmax(on_circle)]))
    nu = root_set.zero_multiplicity
    inside = moduli[(moduli > 0) & (moduli < r)]
    rhs = math.log(abs(c[nu])) + nu * math.log(r) + math.fsum(np.log(r / inside))
    arc = ArcSpec(0.0, TWO_PI, m or max(1024, 4 * c.size))
    lhs = singular_log_integral(s, r, arc).value / TWO_PI
    return abs(lhs - rhs)


@dataclass(frozen=True)
class AnnulusStatistics:
    """Per-replicate radii R_s and the fitted decay of the gap 1 - R_s."""

    s_grid: tuple[int, ...]
    radii: np.ndarray
    median_gap: np.ndarray
    scaled_gap: np.ndarray
    slope: float
    intercept: float


def annulus_statistics(roots: Sequence[RootSet], s_grid: Sequence[int]) -> AnnulusStatistics:
    """
    R_s = (s+1)-th smallest root modulus above 1/2, minus 1e-12, per replicate.

    The gap 1 - R_s is compared with log(s)/s: ``scaled_gap`` holds the median of
    (1 - R_s)·s/log s and ``slope`` the log-log fit of the median gap against log(s)/s.

    Raises:
        InsufficientRootsError: If a replicate has at most s roots above 1/2.
    """
    if not roots:
        raise PreconditionError("annulus statistics need at least one root set")
    grid = tuple(int(v) for v in s_grid)
    if any(v < 2 for v in grid):
        raise PreconditionError("annulus statistics need s >= 2")
    radii = np.empty((len(roots), len(grid)))
    for i, root_set in enumerate(roots):
        mods = np.sort(root_set.moduli[root_set.moduli > ANNULUS_CUTOFF])
        for j, count in enumerate(grid):
            if mods.size <= count:
                raise InsufficientRootsError(
                    f"replicate {i} has {mods.size} roots above {ANNULUS_CUTOFF}, need {count + 1}"
                )
            radii[i, j] = mods[count] - 1e-12
    gaps = 1.0 - radii
    median_gap = np.median(gaps, axis=0)
    s_arr = np.asarray(grid, dtype=float)
    reference = np.log(s_arr) / s_arr
    scaled_gap = np.median(gaps / reference, axis=0)
    slope, intercept = math.nan, math.nan
    positive = median_gap > 0
    if np.count_nonzero(positive) >= 2:
        fit = stats.linregress(np.log(reference[positive]), np.log(median_gap[positive]))
        slope, intercept = float(fit.slope), float(fit.intercept)
    return AnnulusStatistics(grid, radii, median_gap, scaled_gap, slope, intercept)


def blaschke_sum(s: SeriesSample, w: complex = 0.0) -> float:
    """Σ (1 - |z_j|) over roots of F_N - w inside the unit disk."""
    coeffs = np.asarray(s.coeffs, dtype=complex).copy()
    coeffs[0] -= w
    moduli = polynomial_roots(coeffs).moduli
    return math.fsum(1.0 - moduli[moduli < 1.0])


def blaschke_profile(
    seq: LawSequence,
    degrees: Sequence[int],
    seed: int,
    replicates: int,
    w: complex = 0.0,
    threads: int = 1,
) -> np.ndarray:
    """
    Median Blaschke sums over replicates, one per degree.

    Every replicate is sampled once at the largest degree; smaller degrees use prefixes.
    """
    top = max(degrees)

    def one(replicate_id: int) -> list[float]:
        full = sample_series(seq, top, seed, replicate_id)
        return [blaschke_sum(full.truncated(n), w) for n in degrees]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        table = np.array(list(pool.map(one, range(replicates))))
    return np.asarray(np.median(table, axis=0))


RULES = ("constant", "radial", "tangential", "random")
_CASE_TWO_FACTOR = np.array([3.0, 1.0])


@dataclass(frozen=True)
class ConvergenceTrace:
    """Deviations of U(z_n) from U(z_0) along an approach rule."""

    rule: str
    ns: tuple[int, ...]
    points: np.ndarray
    deviations: np.ndarray
    factored_discrepancy: float


def approach_points(z0: complex, rule: str, ns: Sequence[int], seed: int = 0) -> np.ndarray:
    """
    Points z_n -> z0 along a rule.

    ``radial`` moves inward by 1/n, ``tangential`` moves along the circle |z| = |z0|
    by angle 1/n, ``random`` draws uniformly from the disk of radius 1/n.
    """
    n = np.asarray(ns, dtype=float)
    if rule == "constant":
        return np.full(n.shape, z0, dtype=complex)
    if rule == "radial":
        direction = z0 / abs(z0) if z0 != 0 else 1.0
        return z0 - direction / n
    if rule == "tangential":
        return abs(z0) * np.exp(1j * (np.angle(z0) + 1.0 / n))
    if rule == "random":
        out = np.empty(n.shape, dtype=complex)
        for i, step in enumerate(ns):
            u, v = make_stream(seed, int(step)).random(2)
            out[i] = z0 + math.sqrt(u) * np.exp(TWO_PI * 1j * v) / step
        return out
    raise PreconditionError(f"unknown approach rule {rule!r}; known: {RULES}")


def log_integral_convergence(
    z0: complex,
    r: float,
    arc: ArcSpec,
    rule: str,
    ns: Sequence[int],
    seed: int = 0,
) -> ConvergenceTrace:
    """
    Track |U(z_n) - U(z_0)| for U(z) = ∫_I log|r·e^{iθ} - z| dθ.

    Also checks the factored case f_n = (z - z_n)·g with g(z) = 3 + z zero-free near
    the arc: the change of ∫_I log|f_n| must equal the monomial change.
    """
    base = arc_log_potential(PotentialQuery(r, arc.a, arc.b, z0))
    points = approach_points(z0, rule, ns, seed)
    changes = np.array(
        [arc_log_potential(PotentialQuery(r, arc.a, arc.b, zn)) - base for zn in points]
    )
    deviations = np.abs(changes)

    def factored(root: complex) -> float:
        poly = np.polynomial.polynomial.polymul([-root, 1.0], _CASE_TWO_FACTOR)
        sample = SeriesSample(np.asarray(poly), "factored", 0, 0)
        return singular_log_integral(sample, r, arc).value

    reference = factored(z0)
    discrepancy = max(
        (abs(factored(zn) - reference - change) for zn, change in zip(points, changes, strict=True)),
        default=0.0,
    )
    logger.debug("rule %s: max deviation %.3e, factored %.3e", rule, deviations.max(), discrepancy)
    return ConvergenceTrace(rule, tuple(int(v) for v in ns), points, deviations, discrepancy)


def rotation_translation_gap(r: float, a: float, b: float, t0: float, tn: float) -> float:
    """
    |∫_a^b log|r e^{iθ} - r e^{it_n}| dθ - ∫_{a+t0-tn}^{b+t0-tn} log|r e^{iφ} - r e^{it0}| dφ|.
    """
    shift = t0 - tn
    first = arc_log_potential(PotentialQuery(r, a, b, r * np.exp(1j * tn)))
    second = arc_log_potential(PotentialQuery(r, a + shift, b + shift, r * np.exp(1j * t0)))
    return abs(first - second)
