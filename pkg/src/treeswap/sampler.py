"""Coalescent urn sampler for labeled shapes, with closed-form moments.

Start with n named leaf balls.  At step k draw two balls uniformly without
replacement, record them as pair k, and put in a new ball labeled k.  The
resulting matching is uniform over labeled shapes.  R_k counts the
interior (positive) balls in the urn after step k; the internal tree
length of the sample equals R_1 + ... + R_{n-2}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .matchings import LABELED, Matching, named_leaf


@dataclass(frozen=True)
class UrnTrace:
    n: int
    matching: Matching
    red_counts: tuple[int, ...]  # R_1 .. R_{n-1}

    @property
    def phi(self) -> int:
        return sum(self.red_counts[: self.n - 2])


def urn_sample(n: int, rng: np.random.Generator) -> UrnTrace:
    """One draw from the uniform law on labeled shapes."""
    if n < 2:
        raise ValueError("need n >= 2")
    urn = [named_leaf(i) for i in range(1, n + 1)]
    reds = 0
    pairs = []
    red_counts = []
    for k in range(1, n):
        m = len(urn)
        i = int(rng.integers(m))
        j = int(rng.integers(m - 1))
        if j >= i:
            j += 1
        a, b = urn[i], urn[j]
        pairs.append((a, b))
        reds -= (a > 0) + (b > 0)
        lo, hi = (i, j) if i < j else (j, i)
        urn[hi] = urn[m - 1]      # no-op when hi is already last
        urn[lo] = k               # the new interior ball
        urn.pop()
        reds += 1
        red_counts.append(reds)
    return UrnTrace(n, Matching.from_pairs(n, LABELED, pairs),
                    tuple(red_counts))


def urn_sample_batch(n: int, size: int, rng: np.random.Generator,
                     return_pairs: bool = False):
    """Vectorized urn draws.

    Returns (phi, reds[, pairs]): phi has shape (size,), reds has shape
    (size, n-1) holding R_1..R_{n-1}, and pairs (if requested) has shape
    (size, n-1, 2) holding the drawn labels in draw order.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    urn = np.tile(-np.arange(1, n + 1), (size, 1))
    reds = np.zeros(size, dtype=np.int64)
    red_counts = np.empty((size, n - 1), dtype=np.int64)
    if return_pairs:
        drawn = np.empty((size, n - 1, 2), dtype=np.int64)
    rows = np.arange(size)
    for k in range(1, n):
        m = n - k + 1
        i = rng.integers(0, m, size)
        j = rng.integers(0, m - 1, size)
        j = j + (j >= i)
        a = urn[rows, i]
        b = urn[rows, j]
        if return_pairs:
            drawn[:, k - 1, 0] = a
            drawn[:, k - 1, 1] = b
        reds = reds - (a > 0) - (b > 0) + 1
        red_counts[:, k - 1] = reds
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        urn[rows, hi] = urn[:, m - 1]
        urn[rows, lo] = k
    phi = red_counts[:, : n - 2].sum(axis=1)
    if return_pairs:
        return phi, red_counts, drawn
    return phi, red_counts


def red_ball_mean(n: int, k: int) -> Fraction:
    """E[R_k] = k(n-k)/(n-1)."""
    _check_kl(n, k, k)
    return Fraction(k * (n - k), n - 1)


def red_ball_cov(n: int, k: int, l: int) -> Fraction:
    """Cov(R_k, R_l) = k(k-1)(n-l)(n-l-1) / ((n-1)^2 (n-2)) for k <= l."""
    _check_kl(n, k, l)
    num = k * (k - 1) * (n - l) * (n - l - 1)
    return Fraction(num, (n - 1) ** 2 * (n - 2))


def red_ball_moments(n: int, k: int, l: int) -> tuple[Fraction, Fraction]:
    """(E[R_k], Cov(R_k, R_l)) for 1 <= k <= l <= n-2."""
    return red_ball_mean(n, k), red_ball_cov(n, k, l)


def _check_kl(n: int, k: int, l: int) -> None:
    if n < 3:
        raise ValueError("need n >= 3")
    if not 1 <= k <= l <= n - 2:
        raise ValueError(f"need 1 <= k <= l <= n-2, got k={k} l={l} n={n}")


def phi_moments(n: int) -> tuple[Fraction, Fraction]:
    """Stationary mean and variance of the internal tree length:
    E = (n^2 + n - 6)/6,  Var = n(n+1)(n-3)/90."""
    if n < 3:
        raise ValueError("need n >= 3")
    mean = Fraction(n * n + n - 6, 6)
    var = Fraction(n * (n + 1) * (n - 3), 90)
    return mean, var


def red_square_sum(n: int) -> Fraction:
    """sum_k E[R_k^2] over k = 1..n-2, closed form."""
    if n < 3:
        raise ValueError("need n >= 3")
    return Fraction(n ** 3 + 3 * n ** 2 + 2 * n - 30, 30)


def red_cross_sum(n: int) -> Fraction:
    """2 sum_{k<l} E[R_k R_l] over 1 <= k < l <= n-2, closed form."""
    if n < 3:
        raise ValueError("need n >= 3")
    return Fraction((n - 3) * (5 * n ** 3 + 21 * n ** 2 - 14 * n - 120), 180)


def state_red_counts(m: Matching) -> tuple[int, ...]:
    """R_k read off a matching: interior j is red during pairs j..I(j)-1."""
    pos = m.interior_positions()
    counts = []
    for k in range(1, m.n):
        counts.append(sum(1 for j, kj in pos.items() if j <= k < kj)
                      + (1 if k == m.n - 1 else 0))
    return tuple(counts)
