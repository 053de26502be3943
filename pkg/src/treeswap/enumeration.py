"""Exhaustive state spaces of ranked tree shapes.

Matchings are generated by replaying the merge process: at step k a pair
is drawn from the currently available labels (unused leaves plus interior
labels j < k not yet consumed), then label k becomes available.  Every
legal matching is produced exactly once; the resulting states are sorted
by their serialized form so indices are reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

from .errors import CapExceeded
from .matchings import LABELED, UNLABELED, MODES, Matching, named_leaf

# Library-level defaults; the CLI applies its own (stricter) labeled cap.
DEFAULT_MAX_N = {UNLABELED: 9, LABELED: 7}
DEFAULT_MAX_STATES = 4_000_000


def euler_zigzag(m: int) -> int:
    """m-th zigzag number via the Entringer (boustrophedon) recurrence,
    T(n,k) = T(n,k-1) + T(n-1,n-k); independent of the enumerator."""
    if m < 0:
        raise ValueError("need m >= 0")
    row = [1]
    for n in range(1, m + 1):
        prev = row
        row = [0] * (n + 1)
        for k in range(1, n + 1):
            row[k] = row[k - 1] + prev[n - k]
    return row[-1]


def labeled_count(n: int) -> int:
    """Closed form n!(n-1)!/2^(n-1)."""
    return factorial(n) * factorial(n - 1) // 2 ** (n - 1)


def unlabeled_count(n: int) -> int:
    return euler_zigzag(n - 1)


def predicted_count(n: int, mode: str) -> int:
    return labeled_count(n) if mode == LABELED else unlabeled_count(n)


@dataclass(frozen=True)
class StateSpace:
    n: int
    mode: str
    states: tuple[Matching, ...]
    index: dict[Matching, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)


def _pair_choices(avail: tuple[int, ...]):
    """Distinct unordered pairs of a label multiset (only 0 may repeat)."""
    zeros = avail.count(0)
    others = [v for v in avail if v != 0]
    if zeros >= 2:
        yield (0, 0)
    if zeros >= 1:
        for v in others:
            yield (0, v)
    for i in range(len(others)):
        for j in range(i + 1, len(others)):
            yield (others[i], others[j])


def enumerate_space(n: int, mode: str, max_n: int | None = None,
                    max_states: int = DEFAULT_MAX_STATES) -> StateSpace:
    """All matchings for (n, mode), sorted by serialized form."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if n < 2:
        raise ValueError("need n >= 2")
    cap = DEFAULT_MAX_N[mode] if max_n is None else max_n
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the {mode} cap {cap}")
    if predicted_count(n, mode) > max_states:
        raise CapExceeded(
            f"{mode} n={n} has {predicted_count(n, mode)} states, "
            f"budget is {max_states}")

    if mode == UNLABELED:
        start = tuple([0] * n)
    else:
        start = tuple(named_leaf(i) for i in range(1, n + 1))

    out: list[tuple[tuple[int, int], ...]] = []

    def extend(prefix, avail, k):
        if k == n:
            out.append(prefix)
            return
        for a, b in _pair_choices(avail):
            rest = list(avail)
            rest.remove(a)
            rest.remove(b)
            if k <= n - 2:
                rest.append(k)
            extend(prefix + ((a, b),), tuple(rest), k + 1)

    extend((), start, 1)
    states = [Matching.from_pairs(n, mode, pairs) for pairs in out]
    states.sort(key=Matching.serialize)
    index = {m: i for i, m in enumerate(states)}
    if len(index) != len(states):
        raise AssertionError("enumeration produced duplicate states")
    return StateSpace(n, mode, tuple(states), index)


def fibers(labeled_space: StateSpace, unlabeled_space: StateSpace):
    """Group labeled states by their erased shape.

    Returns (class_of, classes): class_of[i] is the unlabeled index of
    labeled state i, classes[u] lists labeled indices mapping to u.
    """
    from .matchings import erase_leaf_labels

    if labeled_space.mode != LABELED or unlabeled_space.mode != UNLABELED:
        raise ValueError("expected a labeled and an unlabeled space")
    if labeled_space.n != unlabeled_space.n:
        raise ValueError("spaces must share n")
    class_of = []
    classes: list[list[int]] = [[] for _ in unlabeled_space.states]
    for i, state in enumerate(labeled_space.states):
        u = unlabeled_space.index[erase_leaf_labels(state)]
        class_of.append(u)
        classes[u].append(i)
    return class_of, classes


def write_states(space: StateSpace, path: str, header_lines=()) -> None:
    """JSON Lines dump; data line k (comments excluded) is state k."""
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for state in space.states:
            fh.write(state.serialize() + "\n")


def read_states(path: str, n: int, mode: str) -> list[Matching]:
    states = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            states.append(Matching.deserialize(line, n=n, mode=mode))
    return states
