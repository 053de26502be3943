"""Adjacent-swap transition kernels and stationary laws.

A single move: pick an index k uniformly from 1..n-2, pick one occupant of
pair k and one of pair k+1 (each of the four slot combinations with
probability 1/4), and swap them unless that would place an interior label
j into pair k with j >= k, in which case the state is unchanged.

Every transition probability is therefore an integer multiple of
1/(4(n-2)) (1/(8(n-2)) for the lazy kernel), so kernels are stored as
integer counts over a common denominator and all verification can run in
exact rational arithmetic regardless of n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np
from scipy import sparse

from .enumeration import StateSpace
from .errors import DegenerateSizeError
from .matchings import LABELED, UNLABELED, Matching, cherry_count, label_key

__all__ = [
    "Kernel", "Distribution", "propose_step", "transition_matrix",
    "stationary_law", "uniform_law", "verify_detailed_balance",
    "verify_lumping", "LumpingReport", "is_irreducible", "is_aperiodic",
]


def _swap_once(m: Matching, k: int, si: int, ti: int) -> Matching:
    """Swap slot si of pair k with slot ti of pair k+1; m if rejected."""
    p = m.pairs[k - 1]
    q = m.pairs[k]
    u, v = p[si], q[ti]
    if v > 0 and v >= k:
        return m  # interior label v may not move into pair k
    keep_p, keep_q = p[1 - si], q[1 - ti]
    new_p = (keep_p, v) if label_key(keep_p) <= label_key(v) else (v, keep_p)
    new_q = (keep_q, u) if label_key(keep_q) <= label_key(u) else (u, keep_q)
    pairs = m.pairs[:k - 1] + (new_p, new_q) + m.pairs[k + 1:]
    return Matching(m.n, m.mode, pairs)


def propose_step(m: Matching, rng: np.random.Generator) -> Matching:
    """One draw of the (non-lazy) adjacent-swap chain."""
    if m.n < 3:
        raise DegenerateSizeError("the chain needs n >= 3 (no index to pick)")
    k = int(rng.integers(1, m.n - 1))
    si = int(rng.integers(0, 2))
    ti = int(rng.integers(0, 2))
    return _swap_once(m, k, si, ti)


@dataclass(frozen=True)
class Kernel:
    """Row-stochastic matrix with entries rows[x][y]/denom."""

    space: StateSpace
    lazy: bool
    denom: int
    rows: tuple[dict[int, int], ...]

    def entry(self, x: int, y: int) -> Fraction:
        return Fraction(self.rows[x].get(y, 0), self.denom)

    def to_csr(self) -> sparse.csr_matrix:
        size = len(self.space)
        data, ri, ci = [], [], []
        for x, row in enumerate(self.rows):
            for y, c in row.items():
                ri.append(x)
                ci.append(y)
                data.append(c / self.denom)
        mat = sparse.csr_matrix(
            (data, (ri, ci)), shape=(size, size), dtype=np.float64)
        return mat

    def to_dense(self) -> np.ndarray:
        size = len(self.space)
        out = np.zeros((size, size))
        for x, row in enumerate(self.rows):
            for y, c in row.items():
                out[x, y] = c / self.denom
        return out


def transition_matrix(space: StateSpace, lazy: bool = False) -> Kernel:
    """Exact kernel over an enumerated space."""
    n = space.n
    if n == 2:
        return Kernel(space, lazy, 1, ({0: 1},))
    base = 4 * (n - 2)
    rows = []
    for x, state in enumerate(space.states):
        row: dict[int, int] = {}
        for k in range(1, n - 1):
            for si in (0, 1):
                for ti in (0, 1):
                    y = _swap_once(state, k, si, ti)
                    j = x if y is state else space.index[y]
                    row[j] = row.get(j, 0) + 1
        if sum(row.values()) != base:
            raise AssertionError("kernel row mass mismatch")
        if lazy:
            row = {j: c for j, c in row.items()}
            row[x] = row.get(x, 0) + base
        rows.append(row)
    return Kernel(space, lazy, 2 * base if lazy else base, tuple(rows))


@dataclass(frozen=True)
class Distribution:
    """Probability law over an enumerated space, exact and float views."""

    space: StateSpace
    exact: tuple[Fraction, ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(p) for p in self.exact])

    def __getitem__(self, i: int) -> Fraction:
        return self.exact[i]


def uniform_law(space: StateSpace) -> Distribution:
    size = len(space)
    return Distribution(space, tuple([Fraction(1, size)] * size))


def stationary_law(space: StateSpace) -> Distribution:
    """Uniform on labeled shapes; on unlabeled shapes the cherry-weighted
    law pi(T) = 2^(n - c(T) - 1) / (n-1)!."""
    if space.mode == LABELED:
        return uniform_law(space)
    n = space.n
    denom = factorial(n - 1)
    exact = tuple(Fraction(2 ** (n - cherry_count(t) - 1), denom)
                  for t in space.states)
    if sum(exact) != 1:
        raise AssertionError("stationary weights do not sum to 1")
    return Distribution(space, exact)


def verify_detailed_balance(kernel: Kernel, law: Distribution) -> float:
    """max |pi(x)P(x,y) - pi(y)P(y,x)|, computed in exact arithmetic."""
    worst = Fraction(0)
    for x, row in enumerate(kernel.rows):
        for y, c in row.items():
            if y < x:
                continue
            lhs = law.exact[x] * c
            rhs = law.exact[y] * kernel.rows[y].get(x, 0)
            gap = abs(lhs - rhs)
            if gap > worst:
                worst = gap
    return float(worst / kernel.denom)


@dataclass(frozen=True)
class LumpingReport:
    """Exact comparison of the labeled chain against its shape projection."""

    n: int
    class_row_discrepancy: float   # max over classes of within-fiber spread
    induced_vs_unlabeled: float    # max |induced entry - unlabeled entry|
    fiber_fractions_match: bool    # |fiber|/|labeled| equals the shape law

    @property
    def max_discrepancy(self) -> float:
        return max(self.class_row_discrepancy, self.induced_vs_unlabeled)


def verify_lumping(n: int) -> LumpingReport:
    """Check that erasing leaf labels lumps the labeled chain exactly.

    All comparisons are on integer transition counts (shared denominator),
    so reported discrepancies are exact.
    """
    from .enumeration import enumerate_space, fibers

    lab = enumerate_space(n, LABELED)
    unl = enumerate_space(n, UNLABELED)
    kl = transition_matrix(lab)
    ku = transition_matrix(unl)
    class_of, classes = fibers(lab, unl)

    worst_spread = 0
    worst_induced = 0
    for u, members in enumerate(classes):
        ref = None
        for x in members:
            # mass from labeled state x into each fiber, in counts
            mass = [0] * len(unl)
            for y, c in kl.rows[x].items():
                mass[class_of[y]] += c
            for v, got in enumerate(mass):
                want = ku.rows[u].get(v, 0)
                worst_induced = max(worst_induced, abs(got - want))
            # every row of the fiber must give identical class masses
            if ref is None:
                ref = mass
            else:
                worst_spread = max(
                    worst_spread, max(abs(a - b) for a, b in zip(ref, mass)))

    law = stationary_law(unl)
    fractions_ok = all(
        Fraction(len(classes[u]), len(lab)) == law.exact[u]
        for u in range(len(unl)))
    return LumpingReport(
        n,
        worst_spread / kl.denom,
        worst_induced / kl.denom,
        fractions_ok,
    )


def is_irreducible(kernel: Kernel) -> bool:
    from scipy.sparse import csgraph

    adj = kernel.to_csr()
    ncomp, _ = csgraph.connected_components(adj, connection="strong")
    return ncomp == 1


def is_aperiodic(kernel: Kernel) -> bool:
    return all(row.get(x, 0) > 0 for x, row in enumerate(kernel.rows))


def write_kernel(kernel: Kernel, path: str, header_lines=()) -> None:
    """JSON Lines dump: a header record then (row, col, prob) triples."""
    import json

    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        head = {"n": kernel.space.n, "mode": kernel.space.mode,
                "lazy": kernel.lazy, "states": len(kernel.space),
                "denom": kernel.denom}
        fh.write(json.dumps(head, separators=(",", ":")) + "\n")
        for x, row in enumerate(kernel.rows):
            for y in sorted(row):
                rec = [x, y, row[y] / kernel.denom]
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
