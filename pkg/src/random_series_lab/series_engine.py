"""Sampling of series realizations, evaluation on circles and arcs, and radius schedules."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .coeff_laws import JumpLaw, LawFamily, LawSequence
from .concentration import AuxSeries
from .errors import PreconditionError, ScheduleUnreachableError, UnboundedEnvelopeError
from .utils import coefficient_uniforms
from .visitor import Formula

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MIN_ARC_GRID = 16
SCHEDULE_RTOL = 1e-9
_ENVELOPE_CHUNK = 1024
_MAX_TRUNCATION = 2**26


@dataclass(frozen=True)
class SeriesSample:
    """One seeded realization X_0..X_N of a random power series."""

    coeffs: np.ndarray
    seq_id: str
    seed: int
    replicate_id: int

    @property
    def degree(self) -> int:
        return int(self.coeffs.size) - 1

    def truncated(self, degree: int) -> "SeriesSample":
        """The partial sum F_degree of the same realization."""
        return SeriesSample(self.coeffs[: degree + 1], self.seq_id, self.seed, self.replicate_id)

    def __call__(self, z: complex | np.ndarray) -> np.ndarray:
        return np.asarray(np.polynomial.polynomial.polyval(z, self.coeffs))


@dataclass(frozen=True)
class RadiusSchedule:
    """
    Increasing radii r_k with A(r_k) = k⁶.

    Radii are stored through their log-radii u_k = -log r_k; for large k, 1 - r_k falls
    below the spacing of doubles near 1 while u_k remains exact.
    """

    log_radii: tuple[float, ...]
    targets: tuple[float, ...]
    ks: tuple[int, ...]
    tolerance: float = SCHEDULE_RTOL

    def __post_init__(self) -> None:
        u = np.asarray(self.log_radii)
        if np.any(u <= 0) or np.any(np.diff(u) >= 0):
            raise PreconditionError("schedule radii must be strictly increasing inside (0, 1)")

    @property
    def radii(self) -> np.ndarray:
        return np.exp(-np.asarray(self.log_radii))

    def __len__(self) -> int:
        return len(self.log_radii)


@dataclass(frozen=True)
class ArcSpec:
    """
    An arc I = (a, a + length) of the unit circle with a midpoint grid of m nodes.

    ``a`` is normalized into [0, 2π); arcs may wrap through angle 0.
    """

    a: float
    b: float
    m: int = 1024
    length: float = field(init=False)

    def __post_init__(self) -> None:
        length = self.b - self.a
        if not length > 0 or length > TWO_PI * (1 + 1e-15):
            raise PreconditionError(f"arc needs 0 < b - a <= 2π, got ({self.a}, {self.b})")
        if self.m < MIN_ARC_GRID:
            raise PreconditionError(f"arc grid needs m >= {MIN_ARC_GRID}, got {self.m}")
        start = math.fmod(self.a, TWO_PI)
        if start < 0:
            start += TWO_PI
        object.__setattr__(self, "length", min(length, TWO_PI))
        object.__setattr__(self, "a", start)
        object.__setattr__(self, "b", start + min(length, TWO_PI))

    @property
    def is_full_circle(self) -> bool:
        return self.length >= TWO_PI

    @property
    def step(self) -> float:
        return self.length / self.m

    def nodes(self, m: int | None = None) -> np.ndarray:
        """Midpoint nodes θ_j = a + (j + 1/2)(b - a)/m."""
        count = m or self.m
        return self.a + (np.arange(count) + 0.5) * (self.length / count)

    def with_grid(self, m: int) -> "ArcSpec":
        return ArcSpec(self.a, self.a + self.length, m)


def sample_series(seq: LawSequence, N: int, seed: int, replicate_id: int) -> SeriesSample:
    """
    Draw X_0..X_N from ``seq`` on the counter-based stream (seed, replicate_id, k).

    Args:
        seq: Law sequence.
        N: Degree, at least 0.
        seed: Master seed.
        replicate_id: Replicate index.

    Returns:
        The realization; prefixes agree across degrees.
    """
    if N < 0:
        raise PreconditionError(f"degree must be >= 0, got {N}")
    uniforms = coefficient_uniforms(seed, replicate_id, N + 1)
    coeffs = seq.sample_block(uniforms, start=0)
    return SeriesSample(np.ascontiguousarray(coeffs, dtype=float), seq.name, seed, replicate_id)


def evaluate_on_circle(s: SeriesSample, r: float, m: int, method: str = "fft") -> np.ndarray:
    """
    F_N(r·e^{2πij/m}) for j = 0..m-1.

    The FFT path folds the radius-scaled coefficients modulo m, so any m works.

    Args:
        s: Series realization.
        r: Radius in [0, 1).
        m: Grid size.
        method: ``"fft"`` or ``"horner"``.

    Returns:
        Complex values on the grid.
    """
    if m < 1:
        raise PreconditionError(f"grid size must be >= 1, got {m}")
    scaled = s.coeffs * r ** np.arange(s.coeffs.size)
    if method == "horner":
        z = r * np.exp(1j * TWO_PI * np.arange(m) / m)
        return np.asarray(np.polynomial.polynomial.polyval(z, s.coeffs))
    if method != "fft":
        raise PreconditionError(f"unknown evaluation method {method!r}")
    pad = (-scaled.size) % m
    folded = np.concatenate([scaled, np.zeros(pad)]).reshape(-1, m).sum(axis=0)
    return np.asarray(m * np.fft.ifft(folded))


def evaluate_on_arc(s: SeriesSample, r: float, arc: ArcSpec, m: int | None = None) -> np.ndarray:
    """F_N at the arc's midpoint nodes, via the chirp z-transform."""
    count = m or arc.m
    h = arc.length / count
    theta0 = arc.a + 0.5 * h
    if r == 0.0:
        return np.full(count, s.coeffs[0], dtype=complex)
    # czt evaluates Σ x_k z_j^{-k} at z_j = a·w^{-j}; z_j^{-1} = r·e^{i(θ0 + jh)}
    values = signal.czt(
        s.coeffs.astype(complex), m=count, w=np.exp(1j * h), a=np.exp(-1j * theta0) / r
    )
    return np.asarray(values)


def radius_schedule(A: AuxSeries, K: int) -> RadiusSchedule:
    """
    Radii r_1 < ... < r_K with A(r_k) = k⁶.

    Args:
        A: Auxiliary series, divergent as r -> 1.
        K: Schedule length.

    Returns:
        The schedule.

    Raises:
        ScheduleUnreachableError: If partial sums cannot certify A(r) -> K⁶.
    """
    if K < 1:
        raise PreconditionError(f"schedule length must be >= 1, got {K}")
    if not A.certify(float(K) ** 6):
        raise ScheduleUnreachableError(
            f"A(r) is not certified to reach {K}^6: the weighted anti-concentration "
            "series sum t_k^2 (1 - Q(X_k, t_k)) does not diverge numerically"
        )
    ks = tuple(range(1, K + 1))
    targets = tuple(float(k) ** 6 for k in ks)
    log_radii = tuple(A.solve_log(t, rtol=SCHEDULE_RTOL * 1e-3) for t in targets)
    for k, u in zip(ks, log_radii, strict=True):
        logger.debug("schedule k=%d: u=%.6e (1 - r = %.6e)", k, u, -math.expm1(-u))
    return RadiusSchedule(log_radii, targets, ks)


def truncation_order(seq: LawSequence, r: float, tol: float) -> int:
    """
    Smallest N with Σ_{k>N} M_k r^k <= tol for the sup-norm envelope M_k.

    Gaussian laws use the heuristic envelope 6σ (logged).

    Args:
        seq: Law sequence.
        r: Radius in [0, 1).
        tol: Tail tolerance.

    Returns:
        The truncation degree.

    Raises:
        UnboundedEnvelopeError: If no finite envelope with geometric decay exists.
    """
    if not 0.0 <= r < 1.0:
        raise PreconditionError(f"radius must lie in [0, 1), got {r}")
    if r == 0.0:
        return 0
    if seq.envelope_is_heuristic:
        logger.warning("truncation for %s uses a heuristic 6-sigma envelope", seq.name)
    log_r = math.log(r)
    size = _ENVELOPE_CHUNK
    while True:
        ks = np.arange(size)
        env = seq.envelope(ks)
        if not np.all(np.isfinite(env)):
            raise UnboundedEnvelopeError(f"{seq.name} has no finite envelope")
        terms = env * np.exp(ks * log_r)
        last = terms[-1]
        quarter = terms[3 * size // 4 :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = quarter[1:] / quarter[:-1]
        ratio = float(np.nanmax(ratios)) if np.any(np.isfinite(ratios)) else r
        if ratio < 1.0 and last * ratio / (1.0 - ratio) <= tol * 1e-6:
            break
        size *= 2
        if size > _MAX_TRUNCATION:
            raise UnboundedEnvelopeError(
                f"envelope of {seq.name} does not decay geometrically at r={r}"
            )
    remainder = last * ratio / (1.0 - ratio) if ratio < 1.0 else 0.0
    # tails[n] = Σ_{k>n} terms_k
    tails = np.concatenate([np.cumsum(terms[::-1])[::-1][1:], [0.0]]) + remainder
    return int(np.argmax(tails <= tol))


@dataclass(frozen=True)
class RotationComponent:
    """H_k(z) = Σ_j X_{jℓ+k} z^{jℓ}: the offset-k part of F under rotation by 2π/ℓ."""

    offset: int
    step: int
    coeffs: np.ndarray

    def dense(self) -> np.ndarray:
        """Coefficients of H_k on every power of z."""
        out = np.zeros(self.step * max(self.coeffs.size - 1, 0) + 1)
        out[:: self.step] = self.coeffs
        return out

    def evaluate(self, z: complex | np.ndarray) -> np.ndarray:
        zz = np.asarray(z, dtype=complex)
        return np.asarray(np.polynomial.polynomial.polyval(zz**self.step, self.coeffs))


def rotation_decompose(s: SeriesSample, ell: int) -> list[RotationComponent]:
    """
    Split F_N = Σ_{k<ℓ} z^k H_k(z) with each H_k invariant under z -> z·e^{2πi/ℓ}.

    Args:
        s: Series realization.
        ell: Rotation order, at least 1.

    Returns:
        The ℓ components H_0..H_{ℓ-1}.
    """
    if ell < 1:
        raise PreconditionError(f"rotation order must be >= 1, got {ell}")
    return [RotationComponent(k, ell, s.coeffs[k::ell].copy()) for k in range(ell)]


def reconstruct(components: list[RotationComponent], z: complex | np.ndarray) -> np.ndarray:
    """Σ_k z^k H_k(z)."""
    zz = np.asarray(z, dtype=complex)
    total = np.zeros_like(zz)
    for comp in components:
        total = total + zz**comp.offset * comp.evaluate(zz)
    return total


@dataclass(frozen=True)
class PoleProbe:
    """Residual X_k - (k+1) against the double pole 1/(1-z)²."""

    last_exception: int
    residual: np.ndarray

    @property
    def exceptions(self) -> int:
        return int(np.count_nonzero(self.residual))


def pole_subtraction_probe(s: SeriesSample) -> PoleProbe:
    """
    Compare a jump-law realization with the coefficients k+1 of 1/(1-z)².

    Returns:
        The last index where the realization differs (-1 if none) and the residuals.
    """
    residual = s.coeffs - (np.arange(s.coeffs.size) + 1.0)
    nonzero = np.flatnonzero(residual)
    last = int(nonzero[-1]) if nonzero.size else -1
    return PoleProbe(last, residual)


def jump_sequence() -> LawSequence:
    """The sequence X_k ~ JumpLaw(k) whose series differs from 1/(1-z)² by a polynomial."""
    return LawSequence(LawFamily(JumpLaw, {"k": Formula("k")}), name="jump")


@dataclass(frozen=True)
class ArcIntegralResult:
    """Composite midpoint integral over an arc with its Richardson error estimate."""

    value: float
    normalized: bool
    m: int
    error: float
    flagged: bool = False

    @classmethod
    def from_midpoints(
        cls, coarse: float, fine: float, m: int, arc_length: float, normalized: bool,
        flagged: bool = False, correction: float = 0.0,
    ) -> "ArcIntegralResult":
        """
        Combine midpoint sums on m and 2m panels as (4·M_2m - M_m)/3.

        ``correction`` is added exactly (analytic parts such as near-root potentials).
        """
        if math.isfinite(coarse) and math.isfinite(fine):
            value = (4.0 * fine - coarse) / 3.0 + correction
            error = abs(fine - coarse) / 3.0
        else:
            value, error, flagged = fine + correction, math.inf, True
        if normalized:
            value /= arc_length
            error /= arc_length
        return cls(value, normalized, m, error, flagged)
