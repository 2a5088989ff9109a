"""First stage for i.i.d. data: order statistics, evenly spaced sample
quantiles, and the feature expansions feeding the linear second stage.

The n-dimensional compressed vector holds the sample quantiles at
p = k/n for k = 1..n (p = 1 is the sample maximum).  Two feature maps read
it out: the scale map appends quantile ratios to the raw quantiles, and the
shape map takes all monomials up to order 2 (including the constant) of the
quantiles plus their ratios against the top quantile.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class DegenerateInputError(ValueError):
    """A pivot quantile is zero, so ratio features are undefined.

    Weibull-like positive data makes this all but impossible; hitting it
    signals corrupted input (e.g. an all-zero lower tail).
    """


class FeatureKind(str, Enum):
    SCALE = "scale"
    SHAPE = "shape"


def scale_feature_len(n: int) -> int:
    return 2 * n - 1


def shape_feature_len(n: int) -> int:
    k = 2 * n - 1
    return 1 + k + k * (k + 1) // 2


@dataclass(frozen=True)
class CompressedVector:
    """Sample quantiles at p = k/n, k = 1..n; values are non-decreasing."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("values must be a non-empty 1-D vector")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if np.any(np.diff(vals) < 0):
            raise ValueError("quantile values must be non-decreasing")

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    kind: FeatureKind

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        if vals.ndim != 1:
            raise ValueError("values must be a 1-D vector")
        m = vals.size
        if self.kind is FeatureKind.SCALE:
            if m % 2 == 0 or m < 1:
                raise ValueError(f"scale feature length must be 2n-1, got {m}")
        else:
            n = _shape_len_to_n(m)
            if n is None:
                raise ValueError(f"invalid shape feature length {m}")

    @property
    def m(self) -> int:
        return self.values.size


def _shape_len_to_n(m: int) -> int | None:
    # invert m = 1 + k + k(k+1)/2 with k = 2n-1
    disc = 9 + 8 * (m - 1)
    root = int(np.sqrt(disc))
    while root * root > disc:
        root -= 1
    while (root + 1) * (root + 1) <= disc:
        root += 1
    if root * root != disc:
        return None
    k, rem = divmod(root - 3, 2)
    if rem or k < 1 or k % 2 == 0:
        return None
    return (k + 1) // 2


def order_statistics(y) -> np.ndarray:
    """The sample sorted ascending."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("y must be a non-empty 1-D vector")
    return np.sort(arr)


def sample_quantile(y_sorted, p: float) -> float:
    """Linear interpolation between adjacent order statistics.

    With zero-based position pos = p*(N-1), returns
    y[floor(pos)] + frac * (y[ceil(pos)] - y[floor(pos)]); p = 1 is the
    maximum.  The input must already be sorted ascending with N >= 2.
    """
    arr = np.asarray(y_sorted, dtype=float)
    if arr.size < 2:
        raise ValueError("y_sorted must have at least 2 entries")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    pos = p * (arr.size - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, arr.size - 1)
    frac = pos - lo
    # two-sided lerp keeps accuracy at extreme fractions
    if frac <= 0.5:
        raw = arr[lo] + frac * (arr[hi] - arr[lo])
    else:
        raw = arr[hi] - (1.0 - frac) * (arr[hi] - arr[lo])
    # the true quantile lies in [y[lo], y[hi]]; clamp away rounding overshoot
    return float(min(max(raw, arr[lo]), arr[hi]))


def compress(y, n: int) -> CompressedVector:
    """Quantiles of y at p = k/n for k = 1..n.

    Requires len(y) > n so the compression actually discards information.
    """
    arr = np.asarray(y, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if arr.size <= n:
        raise ValueError(f"need more than n={n} observations, got {arr.size}")
    ys = order_statistics(arr)
    vals = np.array([sample_quantile(ys, k / n) for k in range(1, n + 1)])
    return CompressedVector(vals)


def feature_scale(alpha: CompressedVector) -> FeatureVector:
    """Quantiles followed by the ratios a_2/a_1, ..., a_n/a_1 (length 2n-1)."""
    a = alpha.values
    if a[0] == 0.0:
        raise DegenerateInputError("first quantile is zero; ratio features undefined")
    return FeatureVector(np.concatenate([a, a[1:] / a[0]]), FeatureKind.SCALE)


def feature_shape(alpha: CompressedVector) -> FeatureVector:
    """All monomials up to order 2 of (a_1..a_n, a_1/a_n, ..., a_{n-1}/a_n).

    The output is [1] + [psi_j] + [psi_j * psi_k for j <= k, row-major];
    for n quantiles that is 1 + (2n-1) + (2n-1)(2n)/2 entries.
    """
    a = alpha.values
    n = alpha.n
    if a[n - 1] == 0.0:
        raise DegenerateInputError("top quantile is zero; ratio features undefined")
    psi = np.concatenate([a, a[: n - 1] / a[n - 1]])
    jj, kk = np.triu_indices(psi.size)
    quad = psi[jj] * psi[kk]
    return FeatureVector(np.concatenate([[1.0], psi, quad]), FeatureKind.SHAPE)
