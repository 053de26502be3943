"""Ranked tree shapes encoded as constrained ordered matchings.

A ranked tree shape with n leaves is stored as an ordered sequence of n-1
unordered label pairs.  Pair k (1-based) records the k-th merge event, and
the label k names the internal node that merge creates.  Labels are ints:

    0    anonymous leaf (repeats; unlabeled shapes only)
    -i   named leaf i, 1 <= i <= n (labeled shapes only; each appears once)
    +j   interior label j, 1 <= j <= n-2 (each appears once)

The one structural constraint: interior label j can only sit in a pair
whose index is strictly greater than j (the j-th merge must happen before
anything can merge with its outcome).  Leaves are unconstrained.  The root
label n-1 never appears inside a pair.

Pairs are kept in a canonical order (anonymous leaf, then named leaves by
id, then interior labels by value) so that equal shapes compare equal and
serialize identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InvalidMatchingError

LABELED = "labeled"
UNLABELED = "unlabeled"
MODES = (LABELED, UNLABELED)

ANON = 0


def named_leaf(i: int) -> int:
    if i < 1:
        raise ValueError(f"named leaf id must be >= 1, got {i}")
    return -i


def interior(j: int) -> int:
    if j < 1:
        raise ValueError(f"interior label must be >= 1, got {j}")
    return j


def is_leaf(label: int) -> bool:
    return label <= 0


def is_interior(label: int) -> bool:
    return label > 0


def label_key(label: int) -> tuple[int, int]:
    """Sort key realizing anonymous < named(i) by i < interior(j) by j."""
    if label == 0:
        return (0, 0)
    if label < 0:
        return (1, -label)
    return (2, label)


def label_to_str(label: int) -> str:
    if label == 0:
        return "0"
    if label < 0:
        return f"L{-label}"
    return f"I{label}"


def label_from_str(text: str) -> int:
    if text == "0":
        return 0
    kind, digits = text[:1], text[1:]
    if kind in ("L", "I") and digits.isdigit() and int(digits) >= 1:
        value = int(digits)
        return -value if kind == "L" else value
    raise ValueError(f"unrecognized label {text!r}")


def _ordered(a: int, b: int) -> tuple[int, int]:
    return (a, b) if label_key(a) <= label_key(b) else (b, a)


@dataclass(frozen=True)
class Matching:
    """An ordered matching: n, mode, and n-1 canonically ordered pairs."""

    n: int
    mode: str
    pairs: tuple[tuple[int, int], ...]

    @classmethod
    def from_pairs(cls, n: int, mode: str, pairs) -> "Matching":
        canon = tuple(_ordered(a, b) for a, b in pairs)
        return cls(n, mode, canon)

    @classmethod
    def caterpillar(cls, n: int, mode: str) -> "Matching":
        """The comb shape: every merge attaches one leaf to the spine."""
        if n < 2:
            raise ValueError("need n >= 2")
        if mode == UNLABELED:
            pairs = [(ANON, ANON)] + [(ANON, j) for j in range(1, n - 1)]
        elif mode == LABELED:
            pairs = [(named_leaf(1), named_leaf(2))]
            pairs += [(named_leaf(j + 2), j) for j in range(1, n - 1)]
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return cls.from_pairs(n, mode, pairs)

    def serialize(self) -> str:
        data = [[label_to_str(a), label_to_str(b)] for a, b in self.pairs]
        return json.dumps(data, separators=(",", ":"))

    @classmethod
    def deserialize(cls, text: str, n: int | None = None,
                    mode: str | None = None) -> "Matching":
        raw = json.loads(text)
        pairs = [(label_from_str(a), label_from_str(b)) for a, b in raw]
        if n is None:
            n = len(pairs) + 1
        if mode is None:
            mode = LABELED if any(a < 0 or b < 0 for a, b in pairs) else UNLABELED
        return cls.from_pairs(n, mode, pairs)

    def interior_positions(self) -> dict[int, int]:
        """Map interior label j -> 1-based index of the pair holding it."""
        pos = {}
        for k, (a, b) in enumerate(self.pairs, start=1):
            if a > 0:
                pos[a] = k
            if b > 0:
                pos[b] = k
        return pos


def validate(m: Matching) -> bool:
    """Check every structural invariant; True iff m is a legal matching."""
    if m.n < 2 or m.mode not in MODES:
        return False
    if len(m.pairs) != m.n - 1:
        return False
    leaves: list[int] = []
    interiors: list[int] = []
    for k, pair in enumerate(m.pairs, start=1):
        if len(pair) != 2:
            return False
        for label in pair:
            if label > 0:
                if label >= k:
                    return False  # merge used before it happened
                interiors.append(label)
            else:
                leaves.append(label)
    if len(leaves) != m.n:
        return False
    if sorted(interiors) != list(range(1, m.n - 1)):
        return False
    if m.mode == UNLABELED:
        return all(v == 0 for v in leaves)
    return sorted(-v for v in leaves) == list(range(1, m.n + 1))


def erase_leaf_labels(m: Matching) -> Matching:
    """Forget leaf names, projecting a labeled shape to its unlabeled one."""
    if not validate(m):
        raise InvalidMatchingError("cannot erase labels of an invalid matching")
    pairs = tuple((max(a, 0), max(b, 0)) for a, b in m.pairs)
    return Matching.from_pairs(m.n, UNLABELED, pairs)


def cherry_count(m: Matching) -> int:
    """Number of pairs merging two leaves."""
    return sum(1 for a, b in m.pairs if a <= 0 and b <= 0)


def internal_tree_length(m: Matching) -> int:
    """Total internal branch length: sum over interior labels of the gap
    between creation (pair j) and reuse (the pair containing j)."""
    total = 0
    for k, (a, b) in enumerate(m.pairs, start=1):
        if a > 0:
            total += k - a
        if b > 0:
            total += k - b
    return total
