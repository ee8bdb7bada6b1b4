"""1-D k-means quantization of discrete signals.

Lloyd iteration runs on the sorted distinct sample values weighted by their
multiplicity, so an 8-bit image of any size costs at most 256 rows per step.
Labels are 1-based: cluster j of a Quantization is `labels == j`.
"""

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Any, Optional, Sequence, Union

import numpy as np

from .config import QuantizeOptions
from .errors import (
    ConvergenceError,
    DegenerateK,
    EmptySignal,
    InvalidSymbols,
    LengthMismatch,
    NonFiniteValue,
)

logger = logging.getLogger("fuzzquant.quantizer")

# above this many distinct values the optimal seed falls back to quantiles
OPTIMAL_INIT_LIMIT = 1024

SignalLike = Union["Signal", Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Signal:
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.size == 0:
            raise EmptySignal("signal has no samples")
        finite = np.isfinite(values)
        if not finite.all():
            index = int(np.argmin(finite))
            raise NonFiniteValue(f"sample {index} is not finite: {values[index]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def of(cls, data: SignalLike) -> "Signal":
        return data if isinstance(data, Signal) else cls(np.asarray(data))

    @property
    def length(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class Quantization:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    sse: float
    symbols: Optional[tuple[Any, ...]] = None
    history: tuple[float, ...] = ()
    iterations: int = 0

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k + 1)[1:]

    def encode(self, symbols: Sequence[Any]) -> "Quantization":
        """Return a copy whose crisp indicator is written with `symbols`."""
        symbols = tuple(symbols)
        if len(symbols) != self.k:
            raise InvalidSymbols(f"expected {self.k} symbols, got {len(symbols)}")
        if len(set(symbols)) != self.k:
            raise InvalidSymbols(f"symbols must be distinct: {symbols}")
        return replace(self, symbols=symbols)


def chromatic_symbols(q: Quantization) -> tuple[float, ...]:
    """The centroids themselves, used as the symbol sequence."""
    return tuple(float(c) for c in q.centroids)


def _assign(values: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # argmin keeps the first minimum, so exact ties go to the lower cluster
    return np.argmin(np.abs(values[:, None] - centroids[None, :]), axis=1)


def _weighted_sse(values: np.ndarray, weights: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    return float(np.sum(weights * (values - centroids[labels]) ** 2))


def _quantile_centroids(values: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    cumulative = np.cumsum(weights)
    total = cumulative[-1]
    positions = np.floor((np.arange(1, k + 1) - 0.5) / k * total)
    index = np.searchsorted(cumulative, positions, side="right")
    return values[np.minimum(index, values.size - 1)].astype(np.float64)


def _optimal_centroids(values: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """Exact weighted 1-D k-means by dynamic programming over contiguous blocks."""
    m = values.size
    p0 = np.concatenate(([0.0], np.cumsum(weights)))
    p1 = np.concatenate(([0.0], np.cumsum(weights * values)))
    p2 = np.concatenate(([0.0], np.cumsum(weights * values * values)))

    # block[start, end] = SSE of values[start:end] around its mean
    w = p0[None, :] - p0[:, None]
    s = p1[None, :] - p1[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        block = np.maximum((p2[None, :] - p2[:, None]) - s * s / w, 0.0)
    block[w <= 0] = np.inf

    columns = np.arange(m + 1)
    cost = np.full(m + 1, np.inf)
    cost[0] = 0.0
    splits = []
    for _ in range(k):
        total = cost[:, None] + block
        split = np.argmin(total, axis=0)
        cost = total[split, columns]
        splits.append(split)

    centroids = np.empty(k)
    end = m
    for c in range(k - 1, -1, -1):
        start = int(splits[c][end])
        centroids[c] = (p1[end] - p1[start]) / (p0[end] - p0[start])
        end = start
    return centroids


def _update(
    values: np.ndarray, weights: np.ndarray, labels: np.ndarray, centroids: np.ndarray, k: int
) -> tuple[np.ndarray, bool]:
    counts = np.bincount(labels, weights=weights, minlength=k)
    sums = np.bincount(labels, weights=weights * values, minlength=k)
    updated = centroids.copy()
    filled = counts > 0
    updated[filled] = sums[filled] / counts[filled]

    empty = np.flatnonzero(~filled)
    if empty.size == 0:
        return updated, False

    distance = np.abs(values - updated[labels])
    for j in empty:
        far = int(np.argmax(distance))
        logger.debug(f"cluster {j + 1} emptied, reseeding at {values[far]}")
        updated[j] = values[far]
        distance[far] = -1.0
    return np.sort(updated), True


def _lloyd(
    values: np.ndarray, weights: np.ndarray, k: int, options: QuantizeOptions
) -> tuple[np.ndarray, np.ndarray, list[float], int]:
    if options.init == "optimal" and values.size <= OPTIMAL_INIT_LIMIT:
        centroids = _optimal_centroids(values, weights, k)
    else:
        centroids = _quantile_centroids(values, weights, k)

    labels = _assign(values, centroids)
    history: list[float] = []
    for iteration in range(1, options.max_iter + 1):
        centroids, repaired = _update(values, weights, labels, centroids, k)
        new_labels = _assign(values, centroids)
        history.append(_weighted_sse(values, weights, new_labels, centroids))
        if not repaired and np.array_equal(new_labels, labels):
            _check_partition(new_labels, centroids, k)
            return centroids, new_labels, history, iteration
        labels = new_labels

    raise ConvergenceError(f"Lloyd iteration did not converge in {options.max_iter} iterations")


def _check_partition(labels: np.ndarray, centroids: np.ndarray, k: int) -> None:
    if np.bincount(labels, minlength=k).min() == 0:
        raise DegenerateK(f"a cluster is empty at the fixed point (k={k})")
    if np.any(np.diff(centroids) <= 0):
        raise DegenerateK(f"centroids coincide at the fixed point: {centroids.tolist()}")


def kmeans_quantize(signal: SignalLike, k: int, options: Optional[QuantizeOptions] = None) -> Quantization:
    """Quantize a 1-D signal into k clusters with sorted, strictly increasing centroids."""
    signal = Signal.of(signal)
    options = options or QuantizeOptions()
    if k < 1:
        raise DegenerateK(f"k must be at least 1, got {k}")

    distinct, inverse, counts = np.unique(signal.values, return_inverse=True, return_counts=True)
    if distinct.size < k:
        raise DegenerateK(f"signal has {distinct.size} distinct values, fewer than k={k}")

    centroids, distinct_labels, history, iterations = _lloyd(distinct, counts.astype(np.float64), k, options)
    labels = distinct_labels[inverse.ravel()] + 1
    centroids.setflags(write=False)
    labels.setflags(write=False)
    total = float(np.sum((signal.values - centroids[labels - 1]) ** 2))
    logger.debug(f"k={k} converged in {iterations} iterations, sse={total:.6g}")
    return Quantization(
        k=k,
        centroids=centroids,
        labels=labels,
        sse=total,
        history=tuple(history),
        iterations=iterations,
    )


def quantize_histogram(
    counts: np.ndarray, k: int, options: Optional[QuantizeOptions] = None
) -> tuple[Quantization, np.ndarray]:
    """k-means over histogram bins weighted by their counts.

    Returns the quantization of the occupied bins and a lookup table mapping
    every bin index to its label (0 for empty bins).
    """
    options = options or QuantizeOptions()
    counts = np.asarray(counts)
    levels = np.flatnonzero(counts > 0)
    if levels.size == 0:
        raise EmptySignal("histogram is empty")
    if levels.size < k:
        raise DegenerateK(f"histogram has {levels.size} occupied bins, fewer than k={k}")

    values = levels.astype(np.float64)
    weights = counts[levels].astype(np.float64)
    centroids, level_labels, history, iterations = _lloyd(values, weights, k, options)
    lookup = np.zeros(counts.size, dtype=np.int64)
    lookup[levels] = level_labels + 1
    q = Quantization(
        k=k,
        centroids=centroids,
        labels=level_labels + 1,
        sse=_weighted_sse(values, weights, level_labels, centroids),
        history=tuple(history),
        iterations=iterations,
    )
    return q, lookup


def sse(signal: SignalLike, q: Quantization) -> float:
    signal = Signal.of(signal)
    if len(q) != signal.length:
        raise LengthMismatch(f"{len(q)} labels for a signal of length {signal.length}")
    return float(np.sum((signal.values - q.centroids[q.labels - 1]) ** 2))


def lloyd_step(values: SignalLike, centroids: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """One assignment + mean update. Empty clusters keep their centroid."""
    samples = Signal.of(values).values
    centroids = np.asarray(centroids, dtype=np.float64)
    labels = _assign(samples, centroids)
    counts = np.bincount(labels, minlength=centroids.size)
    sums = np.bincount(labels, weights=samples, minlength=centroids.size)
    updated = centroids.copy()
    filled = counts > 0
    updated[filled] = sums[filled] / counts[filled]
    return labels + 1, updated


def brute_force_quantize(values: SignalLike, k: int) -> Quantization:
    """Exhaustive search over contiguous partitions of the sorted samples.

    Exponential in k; meant for short signals only.
    """
    samples = Signal.of(values).values
    n = samples.size
    if n < k:
        raise DegenerateK(f"signal has {n} samples, fewer than k={k}")
    order = np.argsort(samples, kind="stable")
    ordered = samples[order]

    best_cost = np.inf
    best_cuts: tuple[int, ...] = ()
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = (0, *cuts, n)
        cost = sum(
            float(np.sum((ordered[a:b] - ordered[a:b].mean()) ** 2))
            for a, b in zip(bounds[:-1], bounds[1:])
        )
        if cost < best_cost:
            best_cost, best_cuts = cost, cuts

    bounds = (0, *best_cuts, n)
    sorted_labels = np.empty(n, dtype=np.int64)
    centroids = np.empty(k)
    for j, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        sorted_labels[a:b] = j + 1
        centroids[j] = ordered[a:b].mean()
    labels = np.empty(n, dtype=np.int64)
    labels[order] = sorted_labels
    return Quantization(k=k, centroids=centroids, labels=labels, sse=float(best_cost))
