"""Combined crisp indicator, combined fuzzy indicator and fuzzy boundary indicator.

The crisp indicator of a partition A_1..A_n of the sample indices is
sum_j j * I_{A_j}, i.e. the label vector of a quantization. The fuzzy
indicator is a monotone real function of the sample value that rounds back
to the crisp one, and the boundary indicator is 2 * |cfi - cci|. The three
are built together and checked together.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DegenerateCentroids, LengthMismatch
from .quantizer import Quantization, Signal, SignalLike

logger = logging.getLogger("fuzzquant.indicators")

TRIPLET_RULES = ("length", "cci_range", "round_back", "boundary", "fib_range", "monotone")


@dataclass(frozen=True)
class CombinedIndicators:
    cci: np.ndarray
    cfi: np.ndarray
    fib: np.ndarray
    n: int
    # sample values the indicators were built from; needed for the monotonicity rule
    values: Optional[np.ndarray] = None
    symbols: Optional[tuple[Any, ...]] = None

    def __len__(self) -> int:
        return int(self.cci.size)

    def encoded(self) -> np.ndarray:
        """The crisp indicator written with the symbol sequence, if any."""
        if self.symbols is None:
            return self.cci.copy()
        return _encode(self.cci, self.symbols)


@dataclass
class TripletReport:
    violations: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "triplet consistent"
        return ", ".join(f"{rule} violated at index {index}" for rule, index in self.violations.items())


def _encode(labels: np.ndarray, symbols: Sequence[Any]) -> np.ndarray:
    table = np.empty(len(symbols) + 1, dtype=object)
    table[1:] = list(symbols)
    encoded = table[labels]
    try:
        return encoded.astype(np.result_type(*[np.asarray(s) for s in symbols]))
    except (TypeError, ValueError):
        return encoded


def crisp_indicator(q: Quantization) -> np.ndarray:
    if q.symbols is None:
        return np.array(q.labels, dtype=np.int64)
    return _encode(np.asarray(q.labels), q.symbols)


def _check_centroids(centroids: np.ndarray) -> None:
    if centroids.size > 1 and np.any(np.diff(centroids) <= 0):
        raise DegenerateCentroids(f"centroids must be strictly increasing: {centroids.tolist()}")


def _cfi(values: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    n = centroids.size
    idx = labels - 1
    own = centroids[idx]
    cfi = labels.astype(np.float64)

    # padded neighbours so edge clusters never divide by a missing gap
    upper = np.concatenate((centroids[1:], [np.inf]))[idx]
    lower = np.concatenate(([-np.inf], centroids[:-1]))[idx]

    above = (values > own) & (labels < n)
    if above.any():
        gap = upper[above] - own[above]
        step = np.minimum((values[above] - own[above]) / gap, 0.5)
        step[values[above] >= (own[above] + upper[above]) / 2] = 0.5
        cfi[above] += step

    below = (values < own) & (labels > 1)
    if below.any():
        gap = own[below] - lower[below]
        step = np.minimum((own[below] - values[below]) / gap, 0.5)
        step[values[below] <= (lower[below] + own[below]) / 2] = 0.5
        cfi[below] -= step
    return cfi


def fuzzy_indicator(signal: SignalLike, q: Quantization) -> np.ndarray:
    """Piecewise-linear, centroid-anchored CFI.

    A sample at its centroid gets exactly its label; a sample on the decision
    midpoint between two centroids gets label +/- 0.5. Beyond the outermost
    centroids the indicator stays at 1 and n.
    """
    signal = Signal.of(signal)
    if len(q) != signal.length:
        raise LengthMismatch(f"{len(q)} labels for a signal of length {signal.length}")
    centroids = np.asarray(q.centroids, dtype=np.float64)
    _check_centroids(centroids)
    return _cfi(signal.values, np.asarray(q.labels, dtype=np.int64), centroids)


def fuzzy_indicator_at(values: SignalLike, centroids: Sequence[float]) -> np.ndarray:
    """CFI of arbitrary values against fixed centroids, labelling each by its nearest centroid."""
    samples = Signal.of(values).values
    centroids = np.asarray(centroids, dtype=np.float64)
    _check_centroids(centroids)
    labels = np.argmin(np.abs(samples[:, None] - centroids[None, :]), axis=1) + 1
    return _cfi(samples, labels, centroids)


def boundary_indicator(ind: CombinedIndicators) -> np.ndarray:
    if ind.cci.size != ind.cfi.size:
        raise LengthMismatch(f"cci has {ind.cci.size} samples, cfi has {ind.cfi.size}")
    return 2.0 * np.abs(ind.cfi - ind.cci)


def combined_indicators(signal: SignalLike, q: Quantization) -> CombinedIndicators:
    signal = Signal.of(signal)
    cci = np.array(q.labels, dtype=np.int64)
    cfi = fuzzy_indicator(signal, q)
    ind = CombinedIndicators(cci=cci, cfi=cfi, fib=np.empty(0), n=q.k, values=signal.values, symbols=q.symbols)
    return replace(ind, fib=boundary_indicator(ind))


def cluster_memberships(cfi: np.ndarray, n: int) -> np.ndarray:
    """n x L matrix of per-cluster memberships max(0, 1 - |cfi - j|); columns sum to 1."""
    cfi = np.asarray(cfi, dtype=np.float64)
    j = np.arange(1, n + 1, dtype=np.float64)[:, None]
    return np.clip(1.0 - np.abs(cfi[None, :] - j), 0.0, 1.0)


def _first(mask: np.ndarray) -> Optional[int]:
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size else None


def verify_triplet(ind: CombinedIndicators) -> TripletReport:
    report = TripletReport()
    cci = np.asarray(ind.cci)
    cfi = np.asarray(ind.cfi, dtype=np.float64)
    fib = np.asarray(ind.fib, dtype=np.float64)

    size = min(cci.size, cfi.size, fib.size)
    if not (cci.size == cfi.size == fib.size):
        report.violations["length"] = size
    cci, cfi, fib = cci[:size], cfi[:size], fib[:size]
    residual = np.abs(cfi - cci)

    checks = {
        "cci_range": (cci < 1) | (cci > ind.n),
        "round_back": ~(residual <= 0.5),
        "boundary": fib != 2.0 * residual,
        "fib_range": ~((fib >= 0.0) & (fib <= 1.0)),
    }
    for rule, bad in checks.items():
        index = _first(bad)
        if index is not None:
            report.violations[rule] = index

    if ind.values is not None and np.asarray(ind.values).size == size:
        order = np.argsort(np.asarray(ind.values), kind="stable")
        drops = np.flatnonzero(np.diff(cfi[order]) < 0)
        if drops.size:
            report.violations["monotone"] = int(order[drops[0] + 1])

    if not report.ok:
        logger.debug(f"triplet check failed: {report.describe()}")
    return report
