"""Utility functions for seeded streams, reductions and run bookkeeping."""

import hashlib
import json
import logging
import math
from collections.abc import Iterable, Mapping
from typing import Any

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy import stats

logger = logging.getLogger(__name__)

UNIFORMS_PER_COEFFICIENT = 2
# Philox4x64 emits four 64-bit words per counter increment.
_WORDS_PER_BLOCK = 4


def stream_key(seed: int, *ids: int) -> np.ndarray:
    """
    Derive a Philox key from a master seed and a path of stream ids.

    Args:
        seed: Nonnegative master seed.
        *ids: Nonnegative integers naming the sub-stream (replicate, tag, ...).

    Returns:
        Two 64-bit words usable as a Philox key.
    """
    return SeedSequence(entropy=seed, spawn_key=tuple(int(i) for i in ids)).generate_state(
        2, dtype=np.uint64
    )


def make_stream(seed: int, *ids: int, counter: int = 0) -> Generator:
    """
    Build a counter-based generator for the sub-stream (seed, *ids).

    Args:
        seed: Master seed.
        *ids: Sub-stream path.
        counter: Starting Philox block counter.

    Returns:
        A numpy Generator backed by Philox.
    """
    return Generator(Philox(key=stream_key(seed, *ids), counter=counter))


def coefficient_uniforms(seed: int, replicate_id: int, count: int, start: int = 0) -> np.ndarray:
    """
    Uniform pairs driving coefficients ``start .. start+count-1`` of one replicate.

    Row k of the result depends only on (seed, replicate_id, start + k), so any
    coefficient is addressable without generating its predecessors.

    Args:
        seed: Master seed.
        replicate_id: Replicate index.
        count: Number of coefficients.
        start: Index of the first coefficient.

    Returns:
        Array of shape (count, 2) with entries in [0, 1).
    """
    if count <= 0:
        return np.empty((0, UNIFORMS_PER_COEFFICIENT))
    block, offset = divmod(UNIFORMS_PER_COEFFICIENT * start, _WORDS_PER_BLOCK)
    gen = make_stream(seed, replicate_id, counter=block)
    words = gen.random(offset + UNIFORMS_PER_COEFFICIENT * count)
    return words[offset:].reshape(count, UNIFORMS_PER_COEFFICIENT)


def wilson_interval(successes: int, n: int, level: float = 0.99) -> tuple[float, float]:
    """
    Two-sided Wilson score interval for a binomial proportion.

    Args:
        successes: Number of successes.
        n: Number of trials.
        level: Confidence level.

    Returns:
        (low, high) bounds; (0, 1) when n is zero.
    """
    if n <= 0:
        return 0.0, 1.0
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2.0 * n)) / denom
    margin = z * math.sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - margin), min(1.0, center + margin)


def wilson_half_width(successes: int, n: int, level: float = 0.99) -> float:
    """Half-width of the Wilson interval."""
    low, high = wilson_interval(successes, n, level)
    return 0.5 * (high - low)


def dkw_half_width(n: int, level: float = 0.99) -> float:
    """
    Dvoretzky-Kiefer-Wolfowitz band for an empirical CDF on n samples.

    sup_x |F_n(x) - F(x)| exceeds the band with probability at most 1 - level.
    """
    if n <= 0:
        return 1.0
    return math.sqrt(math.log(2.0 / (1.0 - level)) / (2.0 * n))


def compensated_sum(values: Iterable[float]) -> float:
    """Order-independent (exactly rounded) sum."""
    return math.fsum(float(v) for v in values)


def canonical_json(payload: Mapping[str, Any]) -> str:
    """Serialize a mapping with sorted keys and no insignificant whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(payload: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a configuration."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def format_float(value: float) -> str:
    """Shortest repr that round-trips the double exactly."""
    return repr(float(value))
