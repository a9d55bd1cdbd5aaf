"""Catalog of coefficient laws with exact concentration, moments, tails and sampling."""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any, ClassVar, NamedTuple

import numpy as np
import numpy.typing as npt
from scipy import special, stats

from .errors import (
    ConfigError,
    PreconditionError,
    UnsupportedLawError,
    WeightMissingError,
)
from .visitor import Formula

logger = logging.getLogger(__name__)

PROB_SUM_TOL = 1e-12
# Window edges within this relative distance of an atom count as touching it.
_EDGE_RTOL = 1e-12
# Keeps the Gaussian inverse CDF away from 0.
_UNIFORM_NUDGE = 2.0**-54
# Probe indices used to certify that a weight formula stays bounded.
_WEIGHT_PROBES = np.concatenate([np.arange(0, 1001, dtype=float), 10.0 ** np.arange(3, 16)])


class Moments(NamedTuple):
    mean: float
    variance: float
    third_abs_central: float
    fourth_central: float
    sup_norm: float


class CoeffLaw(ABC):
    """
    A coefficient distribution with whatever closed forms it admits.

    Subclasses are frozen dataclasses and therefore safe to share across threads.
    """

    tag: ClassVar[str] = "law"

    @abstractmethod
    def moments(self) -> Moments:
        """Closed-form (mean, variance, E|X-EX|^3, E(X-EX)^4, ||X||_inf)."""

    @abstractmethod
    def cdf(self, x: npt.ArrayLike) -> np.ndarray:
        """P(X <= x)."""

    @abstractmethod
    def cdf_left(self, x: npt.ArrayLike) -> np.ndarray:
        """P(X < x)."""

    @abstractmethod
    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map uniform pairs of shape (n, 2) to n draws."""

    @property
    @abstractmethod
    def diameter(self) -> float:
        """Diameter of the support (inf for unbounded laws)."""

    @property
    def density_bound(self) -> float | None:
        """Slope b with Q(X, λ) <= bλ, when the law has a bounded density."""
        return None

    def concentration(self, lam: npt.ArrayLike) -> np.ndarray:
        raise UnsupportedLawError(f"{self.tag} has no closed-form concentration function")

    def tail(self, delta: npt.ArrayLike) -> np.ndarray:
        """P(|X| > δ)."""
        return self.tail_about(0.0, delta)

    def tail_about(self, center: float, delta: npt.ArrayLike) -> np.ndarray:
        """P(|X - center| > δ) through the two one-sided distribution functions."""
        d = np.asarray(delta, dtype=float)
        inside = self.cdf(center + d) - self.cdf_left(center - d)
        return np.clip(1.0 - inside, 0.0, 1.0)

    def median(self) -> float:
        """Lower median inf{m : P(X <= m) >= 1/2}."""
        raise UnsupportedLawError(f"{self.tag} has no closed-form median")

    @property
    def sup_norm(self) -> float:
        return self.moments().sup_norm

    @property
    def label(self) -> str:
        return self.tag


class DiscreteLaw(CoeffLaw):
    """A law with finitely many atoms; all analytics derive from ``support``."""

    @abstractmethod
    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted atoms and their probabilities."""

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        atoms, probs = self.support()
        cum = np.concatenate([[0.0], np.cumsum(probs)])
        return atoms, probs, cum

    def concentration(self, lam: npt.ArrayLike) -> np.ndarray:
        """
        Exact Q(X, λ) by sliding a closed window whose left edge sits on each atom.

        Args:
            lam: Window length(s), nonnegative.

        Returns:
            Array of Q values shaped like ``lam``.
        """
        atoms, _, cum = self._table
        lam_arr = np.asarray(lam, dtype=float)
        flat = lam_arr.reshape(-1)
        scale = max(1.0, float(np.max(np.abs(atoms))))
        right = atoms[:, None] + flat[None, :] + _EDGE_RTOL * scale
        ends = np.searchsorted(atoms, right, side="right")
        mass = cum[ends] - cum[:-1, None]
        return np.minimum(mass.max(axis=0), 1.0).reshape(lam_arr.shape)

    def moments(self) -> Moments:
        atoms, probs, _ = self._table
        mean = math.fsum(probs * atoms)
        dev = atoms - mean
        return Moments(
            mean=mean,
            variance=math.fsum(probs * dev**2),
            third_abs_central=math.fsum(probs * np.abs(dev) ** 3),
            fourth_central=math.fsum(probs * dev**4),
            sup_norm=float(np.max(np.abs(atoms))),
        )

    def cdf(self, x: npt.ArrayLike) -> np.ndarray:
        atoms, _, cum = self._table
        return np.minimum(cum[np.searchsorted(atoms, np.asarray(x, dtype=float), "right")], 1.0)

    def cdf_left(self, x: npt.ArrayLike) -> np.ndarray:
        atoms, _, cum = self._table
        return np.minimum(cum[np.searchsorted(atoms, np.asarray(x, dtype=float), "left")], 1.0)

    def median(self) -> float:
        atoms, _, cum = self._table
        idx = int(np.searchsorted(cum[1:], 0.5 - PROB_SUM_TOL, side="left"))
        return float(atoms[min(idx, len(atoms) - 1)])

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        atoms, _, cum = self._table
        idx = np.searchsorted(cum[1:-1], u[:, 0], side="right")
        return atoms[idx]

    @property
    def diameter(self) -> float:
        atoms, _, _ = self._table
        return float(atoms[-1] - atoms[0])


@dataclass(frozen=True)
class Rademacher(DiscreteLaw):
    """Symmetric sign ±scale."""

    scale: float = 1.0
    tag: ClassVar[str] = "rademacher"

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        if self.scale == 0.0:
            return np.array([0.0]), np.array([1.0])
        c = abs(self.scale)
        return np.array([-c, c]), np.array([0.5, 0.5])

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.transform(u, scale=self.scale)

    @staticmethod
    def transform(u: np.ndarray, scale: npt.ArrayLike) -> np.ndarray:
        return np.where(u[:, 0] < 0.5, -1.0, 1.0) * np.abs(np.asarray(scale, dtype=float))

    @staticmethod
    def envelope(scale: npt.ArrayLike) -> np.ndarray:
        return np.abs(np.asarray(scale, dtype=float))


@dataclass(frozen=True)
class ScaledBernoulli(DiscreteLaw):
    """X = c·δ with δ Bernoulli(p)."""

    c: float
    p: float
    tag: ClassVar[str] = "scaled_bernoulli"

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise PreconditionError(f"ScaledBernoulli needs 0 < p < 1, got {self.p}")

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        if self.c == 0.0:
            return np.array([0.0]), np.array([1.0])
        if self.c > 0:
            return np.array([0.0, self.c]), np.array([1.0 - self.p, self.p])
        return np.array([self.c, 0.0]), np.array([self.p, 1.0 - self.p])

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.transform(u, c=self.c, p=self.p)

    @staticmethod
    def transform(u: np.ndarray, c: npt.ArrayLike, p: npt.ArrayLike) -> np.ndarray:
        return np.where(u[:, 0] < np.asarray(p, dtype=float), np.asarray(c, dtype=float), 0.0)

    @staticmethod
    def envelope(c: npt.ArrayLike, p: npt.ArrayLike) -> np.ndarray:
        return np.abs(np.asarray(c, dtype=float)) * np.ones_like(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class JumpLaw(DiscreteLaw):
    """P(X = 0) = (k+1)^-2 and X = k+1 otherwise."""

    k: int
    tag: ClassVar[str] = "jump"

    def __post_init__(self) -> None:
        if self.k < 0:
            raise PreconditionError(f"JumpLaw index must be >= 0, got {self.k}")

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        q = (self.k + 1.0) ** -2
        return np.array([0.0, self.k + 1.0]), np.array([q, 1.0 - q])

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.transform(u, k=self.k)

    @staticmethod
    def transform(u: np.ndarray, k: npt.ArrayLike) -> np.ndarray:
        top = np.asarray(k, dtype=float) + 1.0
        return np.where(u[:, 0] < top**-2, 0.0, top)

    @staticmethod
    def envelope(k: npt.ArrayLike) -> np.ndarray:
        return np.asarray(k, dtype=float) + 1.0


@dataclass(frozen=True)
class Deterministic(DiscreteLaw):
    """Point mass at c."""

    c: float = 0.0
    tag: ClassVar[str] = "deterministic"

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([float(self.c)]), np.array([1.0])

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.transform(u, c=self.c)

    @staticmethod
    def transform(u: np.ndarray, c: npt.ArrayLike) -> np.ndarray:
        return np.broadcast_to(np.asarray(c, dtype=float), (u.shape[0],)).copy()

    @staticmethod
    def envelope(c: npt.ArrayLike) -> np.ndarray:
        return np.abs(np.asarray(c, dtype=float))


@dataclass(frozen=True)
class FiniteDiscrete(DiscreteLaw):
    """Arbitrary finite law; atoms are sorted and duplicates merged."""

    atoms: tuple[float, ...]
    probs: tuple[float, ...]
    tag: ClassVar[str] = "finite_discrete"

    def __post_init__(self) -> None:
        if len(self.atoms) != len(self.probs) or not self.atoms:
            raise PreconditionError("atoms and probs must be nonempty and of equal length")
        probs = np.asarray(self.probs, dtype=float)
        if np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > PROB_SUM_TOL:
            raise PreconditionError(f"probs must be nonnegative and sum to 1, got {probs.sum()!r}")
        merged: dict[float, float] = {}
        for atom, prob in zip(self.atoms, probs, strict=True):
            if prob > 0:
                merged[float(atom)] = merged.get(float(atom), 0.0) + float(prob)
        keys = sorted(merged)
        object.__setattr__(self, "atoms", tuple(keys))
        object.__setattr__(self, "probs", tuple(merged[a] for a in keys))

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.atoms, dtype=float), np.asarray(self.probs, dtype=float)

    @staticmethod
    def envelope(atoms: Sequence[float]) -> float:
        return max(abs(a) for a in atoms)


@dataclass(frozen=True)
class AlphaLaw(CoeffLaw):
    """
    Symmetric law on [-1, 1] with an atom 2α at 0, empty gap (0, √(2α)) and tail
    P(|X| > δ) = 2α(δ^-2 - 1) on [√(2α), 1).
    """

    alpha: float
    tag: ClassVar[str] = "alpha"

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 0.5:
            raise PreconditionError(f"AlphaLaw needs 0 < alpha < 1/2, got {self.alpha}")

    @property
    def gap(self) -> float:
        return math.sqrt(2.0 * self.alpha)

    def cdf(self, x: npt.ArrayLike) -> np.ndarray:
        a, s = self.alpha, self.gap
        xs = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            inv_sq = 1.0 / np.square(xs)
        conds = [
            xs < -1.0,
            xs <= -s,
            xs < 0.0,
            xs < s,
            xs < 1.0,
        ]
        vals = [
            np.zeros_like(xs),
            a * (inv_sq - 1.0),
            np.full_like(xs, 0.5 - a),
            np.full_like(xs, 0.5 + a),
            1.0 - a * (inv_sq - 1.0),
        ]
        return np.select(conds, vals, default=1.0)

    def cdf_left(self, x: npt.ArrayLike) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        return self.cdf(xs) - np.where(xs == 0.0, 2.0 * self.alpha, 0.0)

    def concentration(self, lam: npt.ArrayLike) -> np.ndarray:
        """
        Exact Q(X_α, λ) by case analysis on the window position.

        The density 2α|x|^-3 decreases away from the gap, so an optimal closed window
        either has an edge on a breakpoint of the distribution function or sits
        symmetrically around the atom at 0.
        """
        lam_arr = np.asarray(lam, dtype=float)
        lv = lam_arr.reshape(-1)
        s = self.gap
        starts = np.stack(
            [
                -lv / 2.0,
                np.full_like(lv, -1.0),
                np.full_like(lv, -s),
                np.zeros_like(lv),
                np.full_like(lv, s),
                np.full_like(lv, 1.0),
                -1.0 - lv,
                -s - lv,
                -lv,
                s - lv,
                1.0 - lv,
            ]
        )
        mass = self.cdf(starts + lv[None, :]) - self.cdf_left(starts)
        return np.clip(mass.max(axis=0), 0.0, 1.0).reshape(lam_arr.shape)

    def tail(self, delta: npt.ArrayLike) -> np.ndarray:
        a, s = self.alpha, self.gap
        d = np.asarray(delta, dtype=float)
        with np.errstate(divide="ignore"):
            inner = 2.0 * a * (1.0 / np.square(d) - 1.0)
        return np.select([d < s, d < 1.0], [np.full_like(d, 1.0 - 2.0 * a), inner], default=0.0)

    def moments(self) -> Moments:
        a, s = self.alpha, self.gap
        return Moments(
            mean=0.0,
            variance=-2.0 * a * math.log(2.0 * a),
            third_abs_central=4.0 * a * (1.0 - s),
            fourth_central=2.0 * a * (1.0 - 2.0 * a),
            sup_norm=1.0,
        )

    def median(self) -> float:
        return 0.0

    @property
    def diameter(self) -> float:
        return 2.0

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.transform(u, alpha=self.alpha)

    @staticmethod
    def transform(u: np.ndarray, alpha: npt.ArrayLike) -> np.ndarray:
        """Inverse CDF of |X|: zero with probability 2α, else √(α/ω) with ω ~ U(α, 1/2)."""
        a = np.asarray(alpha, dtype=float)
        atom = 2.0 * a
        omega = a + (u[:, 0] - atom) / (1.0 - atom) * (0.5 - a)
        with np.errstate(divide="ignore", invalid="ignore"):
            magnitude = np.sqrt(a / omega)
        sign = np.where(u[:, 1] < 0.5, -1.0, 1.0)
        return np.where(u[:, 0] < atom, 0.0, sign * np.minimum(magnitude, 1.0))

    @staticmethod
    def envelope(alpha: npt.ArrayLike) -> np.ndarray:
        return np.ones_like(np.asarray(alpha, dtype=float))


@dataclass(frozen=True)
class Gaussian(CoeffLaw):
    sigma: float = 1.0
    tag: ClassVar[str] = "gaussian"

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise PreconditionError(f"Gaussian needs sigma > 0, got {self.sigma}")

    def concentration(self, lam: npt.ArrayLike) -> np.ndarray:
        return np.asarray(special.erf(np.asarray(lam, dtype=float) / (2.0 * math.sqrt(2.0) * self.sigma)))

    def cdf(self, x: npt.ArrayLike) -> np.ndarray:
        return np.asarray(stats.norm.cdf(np.asarray(x, dtype=float) / self.sigma))

    def cdf_left(self, x: npt.ArrayLike) -> np.ndarray:
        return self.cdf(x)

    def tail(self, delta: npt.ArrayLike) -> np.ndarray:
        return np.asarray(2.0 * stats.norm.sf(np.asarray(delta, dtype=float) / self.sigma))

    def moments(self) -> Moments:
        s = self.sigma
        return Moments(0.0, s * s, 2.0 * s**3 * math.sqrt(2.0 / math.pi), 3.0 * s**4, math.inf)

    def median(self) -> float:
        return 0.0

    @property
    def density_bound(self) -> float:
        return 1.0 / (self.sigma * math.sqrt(2.0 * math.pi))

    @property
    def diameter(self) -> float:
        return math.inf

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.transform(u, sigma=self.sigma)

    @staticmethod
    def transform(u: np.ndarray, sigma: npt.ArrayLike) -> np.ndarray:
        return np.asarray(sigma, dtype=float) * special.ndtri(u[:, 0] + _UNIFORM_NUDGE)

    @staticmethod
    def envelope(sigma: npt.ArrayLike) -> np.ndarray:
        # Heuristic: six standard deviations.
        return 6.0 * np.asarray(sigma, dtype=float)


LAW_TYPES: dict[str, type[CoeffLaw]] = {
    cls.tag: cls
    for cls in (Rademacher, ScaledBernoulli, JumpLaw, Deterministic, FiniteDiscrete, AlphaLaw, Gaussian)
}
_INTEGER_FIELDS = {"k"}


def alpha_optimal(k: npt.ArrayLike) -> np.ndarray:
    """α_k with α_k^-1 = 3k·log²(ek); index 0 reuses k = 1."""
    kk = np.maximum(np.asarray(k, dtype=float), 1.0)
    return 1.0 / (3.0 * kk * np.log(math.e * kk) ** 2)


def exact_concentration(law: CoeffLaw, lam: float) -> float:
    """
    Exact Lévy concentration function Q(X, λ) = sup_v P(v <= X <= v + λ).

    Args:
        law: A catalog law.
        lam: Window length, nonnegative.

    Returns:
        The exact value.

    Raises:
        PreconditionError: If λ is negative.
        UnsupportedLawError: If the law has no closed form.
    """
    if lam < 0:
        raise PreconditionError(f"window length must be >= 0, got {lam}")
    return float(law.concentration(lam))


def exact_moments(law: CoeffLaw) -> Moments:
    return law.moments()


def exact_tail(law: CoeffLaw, delta: float) -> float:
    """P(|X| > δ)."""
    if delta <= 0:
        raise PreconditionError(f"tail level must be positive, got {delta}")
    return float(law.tail(delta))


def sample(law: CoeffLaw, stream: np.random.Generator, n: int) -> np.ndarray:
    """
    Draw n i.i.d. values from ``law`` using two uniforms per draw.

    Args:
        law: The law to sample.
        stream: A deterministic sub-stream.
        n: Number of draws, at least 1.

    Returns:
        Array of n draws.
    """
    if n < 1:
        raise PreconditionError(f"sample size must be >= 1, got {n}")
    return law.from_uniforms(stream.random((n, 2)))


@dataclass(frozen=True)
class LawFamily:
    """A law class with formulaic parameters k ↦ params(k)."""

    law_type: type[CoeffLaw]
    params: Mapping[str, Formula]

    def law(self, k: int) -> CoeffLaw:
        kwargs: dict[str, Any] = {}
        for name, formula in self.params.items():
            value = formula(k)
            kwargs[name] = int(round(value)) if name in _INTEGER_FIELDS else value
        return self.law_type(**kwargs)

    def param_arrays(self, ks: np.ndarray) -> dict[str, np.ndarray]:
        return {name: np.asarray(f(ks), dtype=float) for name, f in self.params.items()}


class LawSequence:
    """
    An indexed family k ↦ X_k with optional weights t_k and anti-concentration level ε.

    The rule is a single law (stationary), a list of laws (tabulated, repeating the last
    entry beyond its end) or a ``LawFamily`` (formulaic).
    """

    __slots__ = ("rule", "weights", "epsilon", "name", "_cache", "_weight_sup")

    def __init__(
        self,
        rule: CoeffLaw | Sequence[CoeffLaw] | LawFamily,
        weights: Formula | float | Sequence[float] | None = None,
        epsilon: float | None = None,
        name: str = "",
    ) -> None:
        """
        Initialize the sequence.

        Args:
            rule: Stationary law, tabulated laws, or a formulaic family.
            weights: Weight schedule t_k (constant, table, or formula in k).
            epsilon: Uniform anti-concentration level, if known.
            name: Identifier recorded in samples and manifests.

        Raises:
            PreconditionError: If the weights are negative, non-finite or unbounded.
        """
        if isinstance(rule, Sequence) and not rule:
            raise PreconditionError("tabulated law sequence is empty")
        self.rule = rule
        self.epsilon = epsilon
        self.name = name or self._default_name()
        self._cache: dict[int, CoeffLaw] = {}
        self.weights = weights
        self._weight_sup = self._check_weights(weights)

    def _default_name(self) -> str:
        if isinstance(self.rule, CoeffLaw):
            return f"iid-{self.rule.tag}"
        if isinstance(self.rule, LawFamily):
            return f"family-{self.rule.law_type.tag}"
        return "tabulated"

    @staticmethod
    def _check_weights(weights: Formula | float | Sequence[float] | None) -> float | None:
        if weights is None:
            return None
        if isinstance(weights, Formula):
            values = np.asarray(weights(_WEIGHT_PROBES), dtype=float)
        else:
            values = np.atleast_1d(np.asarray(weights, dtype=float))
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise PreconditionError("weights t_k must be finite and nonnegative")
        if isinstance(weights, Formula) and not weights.is_constant:
            head = float(np.max(values[_WEIGHT_PROBES <= 1e5]))
            if values[-1] > 1.5 * max(head, 1e-300):
                raise PreconditionError(
                    f"weights t_k = {weights.source} are unbounded; the divergence theorem "
                    "requires sup_k t_k < inf"
                )
        return float(np.max(values))

    @property
    def is_stationary(self) -> bool:
        return isinstance(self.rule, CoeffLaw)

    @property
    def has_weights(self) -> bool:
        return self.weights is not None

    @property
    def weight_sup(self) -> float:
        if self._weight_sup is None:
            raise WeightMissingError(f"law sequence {self.name} carries no weights")
        return self._weight_sup

    def law(self, k: int) -> CoeffLaw:
        if isinstance(self.rule, CoeffLaw):
            return self.rule
        cached = self._cache.get(k)
        if cached is not None:
            return cached
        if isinstance(self.rule, LawFamily):
            law = self.rule.law(k)
        else:
            law = self.rule[min(k, len(self.rule) - 1)]
        self._cache[k] = law
        return law

    def weight(self, k: int) -> float:
        return float(self.weight_array(np.array([k]))[0])

    def weight_array(self, ks: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise WeightMissingError(f"law sequence {self.name} carries no weights")
        if isinstance(self.weights, Formula):
            return np.broadcast_to(np.asarray(self.weights(ks), dtype=float), ks.shape).copy()
        if isinstance(self.weights, int | float):
            return np.full(ks.shape, float(self.weights))
        table = np.asarray(self.weights, dtype=float)
        return table[np.minimum(ks, len(table) - 1)]

    def sample_block(self, uniforms: np.ndarray, start: int = 0) -> np.ndarray:
        """
        Map uniform rows to coefficients ``start .. start+len(uniforms)-1``.

        Args:
            uniforms: Array of shape (n, 2), row j drives coefficient start + j.
            start: Index of the first coefficient.

        Returns:
            Coefficient values.
        """
        if isinstance(self.rule, CoeffLaw):
            return self.rule.from_uniforms(uniforms)
        ks = np.arange(start, start + uniforms.shape[0])
        if isinstance(self.rule, LawFamily):
            transform: Callable[..., np.ndarray] | None = getattr(
                self.rule.law_type, "transform", None
            )
            if transform is not None:
                params = self.rule.param_arrays(ks)
                if "k" in params:
                    params["k"] = np.round(params["k"])
                return np.asarray(transform(uniforms, **params), dtype=float)
        out = np.empty(uniforms.shape[0])
        for j, k in enumerate(ks):
            out[j] = self.law(int(k)).from_uniforms(uniforms[j : j + 1])[0]
        return out

    def envelope(self, ks: np.ndarray) -> np.ndarray:
        """Sup-norm envelope M_k (six standard deviations for Gaussian laws)."""
        if isinstance(self.rule, LawFamily):
            env: Callable[..., np.ndarray] | None = getattr(self.rule.law_type, "envelope", None)
            if env is not None:
                values = np.asarray(env(**self.rule.param_arrays(ks)), dtype=float)
                return np.broadcast_to(values, ks.shape).copy()
        if isinstance(self.rule, CoeffLaw):
            return np.full(ks.shape, _law_envelope(self.rule))
        return np.array([_law_envelope(self.law(int(k))) for k in ks])

    @property
    def envelope_is_heuristic(self) -> bool:
        if isinstance(self.rule, CoeffLaw):
            return isinstance(self.rule, Gaussian)
        if isinstance(self.rule, LawFamily):
            return self.rule.law_type is Gaussian
        return any(isinstance(law, Gaussian) for law in self.rule)

    def __repr__(self) -> str:
        return f"LawSequence({self.name!r})"


def _law_envelope(law: CoeffLaw) -> float:
    if isinstance(law, Gaussian):
        return 6.0 * law.sigma
    return law.sup_norm


def law_sequence_from_config(
    law: Mapping[str, Any],
    weights: Mapping[str, Any] | None = None,
    name: str = "",
) -> LawSequence:
    """
    Build a LawSequence from config tables.

    Args:
        law: Mapping with ``type`` and the law's fields; numeric fields may be formulas.
        weights: Optional mapping with ``t`` (formula or number) and ``epsilon``.
        name: Sequence identifier.

    Returns:
        The law sequence.

    Raises:
        ConfigError: If the type or a field is invalid.
    """
    spec = dict(law)
    law_type = spec.pop("type", None)
    if law_type is None:
        raise ConfigError("[law] needs a 'type'")
    try:
        rule = _build_rule(str(law_type), spec)
        t = None
        epsilon = None
        if weights:
            if "t" in weights:
                t = Formula(weights["t"])
            if "epsilon" in weights:
                epsilon = float(weights["epsilon"])
        return LawSequence(rule, weights=t, epsilon=epsilon, name=name or str(law_type))
    except PreconditionError as err:
        raise ConfigError(f"invalid law {law_type!r}: {err}") from err
    except (TypeError, KeyError) as err:
        raise ConfigError(f"invalid fields for law {law_type!r}: {err}") from err


def _build_rule(law_type: str, fields: dict[str, Any]) -> CoeffLaw | LawFamily:
    if law_type == "alpha_optimal":
        if fields:
            raise ConfigError("alpha_optimal takes no fields")
        return LawFamily(AlphaLaw, {"alpha": Formula("1/(3*max(k,1)*log(e*max(k,1))^2)")})
    if law_type == "jump":
        return LawFamily(JumpLaw, {"k": Formula(fields.pop("k", "k"))})
    cls = LAW_TYPES.get(law_type)
    if cls is None:
        raise ConfigError(f"unknown law type {law_type!r}; known: {sorted(LAW_TYPES)}")
    if cls is FiniteDiscrete:
        return FiniteDiscrete(
            tuple(float(a) for a in fields.pop("atoms")), tuple(float(p) for p in fields.pop("probs"))
        )
    formulas = {key: Formula(value) for key, value in fields.items()}
    if all(f.is_constant for f in formulas.values()):
        return cls(**{key: f() for key, f in formulas.items()})
    return LawFamily(cls, formulas)
