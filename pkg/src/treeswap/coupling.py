"""Coupling of two lazy adjacent-swap chains on ordered matchings.

Two chains X and Y evolve together, one shared interface index per step,
so that each chain in isolation performs exactly the lazy adjacent-swap
walk while matched labels are never torn apart.  Interior labels are
matched from the largest down; once every interior label occupies the
same pair index in both chains, a labeled pair of chains keeps going
until every named leaf is matched as well, at which point X == Y.

The joint move at an interface depends only on the four pairs flanking
it, the matching frontier, and the phase.  Interfaces with no matched
label and no straddling label move independently (case 1).  Interfaces
holding a matched label share their random choices so the matched label
moves in both chains or in neither (case 2).  A label sitting at pair i
in one chain and pair i + 1 in the other is a straddler; an unanchored
straddle is resolved by letting exactly one chain attempt a move each
step (case 3), and a straddle next to a matched label needs a bespoke
joint table (case 4).  Every table is validated at construction time:
rows sum to one, each chain's marginal equals the lazy single-chain move
law exactly, matched labels move jointly, and straddling labels never
swap their relative order.

Moves are value pairs (u, v): u leaves pair i, v leaves pair i + 1, and
the two values trade places.  None means the chain stays put.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import lgmres, spsolve
from scipy.stats import chisquare

from .enumeration import StateSpace
from .errors import (
    CapExceeded,
    DegenerateSizeError,
    InvalidMatchingError,
    InvalidParamError,
    InvalidStateError,
    PhaseError,
)
from .matchings import LABELED, MODES, UNLABELED, Matching, _ordered, label_key, validate

Move = "tuple[int, int] | None"

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
SIXTEENTH = Fraction(1, 16)


def coupling_time_bound(n: int) -> int:
    """Upper bound (n-1)(n-2)(n-3)(2n-5)/3 on the mean interior coupling time."""
    return (n - 1) * (n - 2) * (n - 3) * (2 * n - 5) // 3


def label_time_bound(n: int, a: int) -> int:
    """Upper bound 2(n-2)(n-2-a)^2 on the mean time to match interior label a."""
    return 2 * (n - 2) * (n - 2 - a) ** 2


def _legal(v: int, i: int) -> bool:
    """May value v enter pair i: leaves always, interior v only when v < i."""
    return v <= 0 or v < i


def _other(pair: tuple[int, int], t: int) -> int:
    if pair[0] == t:
        return pair[1]
    if pair[1] == t:
        return pair[0]
    raise InvalidStateError(f"label {t} not in pair {pair}")


def _attempt_law(pa, pb, i) -> dict:
    """Non-lazy proposal law at interface i: 4 slot picks, illegal ones stay."""
    law: dict = {}
    for u in pa:
        for v in pb:
            key = (u, v) if _legal(v, i) else None
            law[key] = law.get(key, Fraction(0)) + QUARTER
    return law


def _lazy_local(pa, pb, i) -> dict:
    """Lazy single-chain move law at interface i, exact probabilities."""
    law = {None: HALF}
    for mv, p in _attempt_law(pa, pb, i).items():
        law[mv] = law.get(mv, Fraction(0)) + p * HALF
    return law


def lazy_move_law(m: Matching, i: int) -> dict:
    """Move law of the lazy chain at interface i, conditioned on drawing i."""
    if not 1 <= i <= m.n - 2:
        raise InvalidParamError(f"interface {i} out of range for n={m.n}")
    return _lazy_local(m.pairs[i - 1], m.pairs[i], i)


def _apply_to_matching(m: Matching, i: int, mv) -> Matching:
    if mv is None:
        return m
    u, v = mv
    pa, pb = m.pairs[i - 1], m.pairs[i]
    if u not in pa or v not in pb:
        raise InvalidStateError(f"move {mv} does not fit pairs {pa},{pb}")
    pairs = list(m.pairs)
    pairs[i - 1] = _ordered(_other(pa, u), v)
    pairs[i] = _ordered(_other(pb, v), u)
    return Matching(m.n, m.mode, tuple(pairs))


def _leaf_positions(m: Matching) -> dict:
    pos = {}
    for k, pair in enumerate(m.pairs, start=1):
        for lbl in pair:
            if lbl < 0:
                pos[lbl] = k
    return pos


# ---------------------------------------------------------------------------
# Coupled state bookkeeping


@dataclass(frozen=True)
class CoupledState:
    """Snapshot of the coupled pair with its derived bookkeeping.

    frontier is the smallest f such that every interior label >= f sits
    at the same pair index in both chains (1 once all are matched).
    matched_indices collects the pair indices of matched tracked labels,
    split_indices the interfaces straddled by an unmatched tracked label.
    """

    x: Matching
    y: Matching
    frontier: int
    matched_indices: frozenset
    split_indices: frozenset

    @property
    def phase(self) -> str:
        if self.x == self.y:
            return "coupled"
        return "leaf" if self.frontier == 1 else "interior"


def analyze(x: Matching, y: Matching) -> CoupledState:
    """Recompute frontier, matched indices and splits for a chain pair."""
    if x.n != y.n or x.mode != y.mode:
        raise InvalidStateError("coupled chains must share n and mode")
    n = x.n
    if n < 3:
        raise DegenerateSizeError("coupling needs n >= 3")
    ipx, ipy = x.interior_positions(), y.interior_positions()
    unmatched = [a for a in range(1, n - 1) if ipx[a] != ipy[a]]
    if unmatched:
        frontier = max(unmatched) + 1
        matched = frozenset(ipx[a] for a in range(frontier, n - 1))
        c = frontier - 1
        if abs(ipx[c] - ipy[c]) == 1:
            splits = frozenset({min(ipx[c], ipy[c])})
        else:
            splits = frozenset()
        return CoupledState(x, y, frontier, matched, splits)
    if x.mode == UNLABELED and x != y:
        raise InvalidStateError("unlabeled chains with matched interiors differ")
    matched = set(ipx.values())
    splits = set()
    lpx, lpy = _leaf_positions(x), _leaf_positions(y)
    for lbl, dx in lpx.items():
        dy = lpy[lbl]
        if dx == dy:
            matched.add(dx)
        elif abs(dx - dy) == 1:
            splits.add(min(dx, dy))
    return CoupledState(x, y, 1, frozenset(matched), frozenset(splits))


# ---------------------------------------------------------------------------
# Joint move tables for anchored straddles (case 4)
#
# Letters name values, probabilities are multiples of 1/16.  For a single
# straddler c the rows are written as (move of L, move of E) where E holds
# c at pair i and L holds it at pair i + 1.  For a double straddle the rows
# are (move of X, move of Y) with s straddling X-early and sp X-late.


def _t_near(a, b, c, d, f, g):
    # L: (a,b) (c,d)   E: (a,c) (f,g)   anchor a at pair i
    S = SIXTEENTH
    return [
        (None, None, 6 * S),
        (None, (c, f), S),
        (None, (c, g), S),
        ((b, c), None, 2 * S),
        ((b, d), (c, f), S),
        ((b, d), (c, g), S),
        ((a, c), (a, f), S),
        ((a, c), (a, g), S),
        ((a, d), (a, f), S),
        ((a, d), (a, g), S),
    ]


def _t_both(a, b, c, h, m, mobile):
    # L: (a,b) (c,m)   E: (a,c) (h,m)   anchors a at i and m at i + 1
    S = SIXTEENTH
    rows = [
        (None, None, (6 if mobile else 10) * S),
        (None, (c, h), 2 * S),
        ((b, c), None, 2 * S),
        ((a, c), (a, h), 2 * S),
    ]
    if mobile:
        rows += [((b, m), (c, m), 2 * S), ((a, m), (a, m), 2 * S)]
    return rows


def _t_far(d, e, c, a2, b2, m, mobile):
    # L: (d,e) (c,m)   E: (a2,c) (b2,m)   anchor m at pair i + 1
    S = SIXTEENTH
    if not mobile:
        return [
            (None, None, 10 * S),
            ((e, c), None, 2 * S),
            (None, (c, b2), 2 * S),
            ((d, c), (a2, b2), 2 * S),
        ]
    return [
        (None, None, 4 * S),
        (None, (c, b2), 2 * S),
        (None, (a2, b2), 2 * S),
        ((d, c), None, 2 * S),
        ((e, c), None, 2 * S),
        ((d, m), (a2, m), S),
        ((d, m), (c, m), S),
        ((e, m), (a2, m), S),
        ((e, m), (c, m), S),
    ]


def _t_pinned(a, s, sp, m, mobile):
    # X: (a,s) (m,sp)   Y: (a,sp) (m,s)   anchors a and m, straddlers s, sp
    S = SIXTEENTH
    rows = [
        (None, None, (6 if mobile else 10) * S),
        ((s, sp), None, 2 * S),
        (None, (sp, s), 2 * S),
        ((a, sp), (a, s), 2 * S),
    ]
    if mobile:
        rows += [((a, m), (a, m), 2 * S), ((s, m), (sp, m), 2 * S)]
    return rows


def _t_near_pair(a, s, sp, v, z):
    # X: (a,s) (sp,v)   Y: (a,sp) (s,z)   anchor a, straddlers s, sp
    S = SIXTEENTH
    return [
        (None, None, 6 * S),
        (None, (sp, s), 2 * S),
        ((s, sp), None, 2 * S),
        ((s, v), (sp, z), 2 * S),
        ((a, sp), (a, s), S),
        ((a, sp), (a, z), S),
        ((a, v), (a, s), S),
        ((a, v), (a, z), S),
    ]


def _t_far_pair(e, u, l, w, m, mobile):
    # X: (e,u) (m,l)   Y: (l,w) (m,e)   anchor m, straddlers e (X-early), l
    S = SIXTEENTH
    rows = [
        (None, None, (6 if mobile else 10) * S),
        ((e, l), None, 2 * S),
        (None, (l, e), 2 * S),
        ((u, l), (w, e), 2 * S),
    ]
    if mobile:
        rows += [
            ((e, m), (l, m), S),
            ((e, m), (w, m), S),
            ((u, m), (l, m), S),
            ((u, m), (w, m), S),
        ]
    return rows


# ---------------------------------------------------------------------------
# Joint law construction


@dataclass(frozen=True, eq=False)
class JointLaw:
    """Exact joint move law of the coupled pair at one interface."""

    i: int
    case: int
    table: "str | None"
    anchors: tuple
    early: tuple
    late: tuple
    rows: tuple
    cum: tuple

    def x_marginal(self) -> dict:
        out: dict = {}
        for mx, _, p in self.rows:
            out[mx] = out.get(mx, Fraction(0)) + p
        return out

    def y_marginal(self) -> dict:
        out: dict = {}
        for _, my, p in self.rows:
            out[my] = out.get(my, Fraction(0)) + p
        return out


def _shared_tracked(pa, qa, track):
    return sorted({v for v in pa if track(v) and v in qa}, key=label_key)


def _selector(pa, qa, anchors):
    """Joint slot pick at one pair: anchored picks are shared, free ones free."""
    if len(anchors) == 2:
        t1, t2 = anchors
        return [((t1, t1), HALF), ((t2, t2), HALF)]
    if len(anchors) == 1:
        t = anchors[0]
        return [((t, t), HALF), ((_other(pa, t), _other(qa, t)), HALF)]
    return [((ux, uy), QUARTER) for ux in pa for uy in qa]


def _case1(px, px1, qy, qy1, i):
    lx = _lazy_local(px, px1, i)
    ly = _lazy_local(qy, qy1, i)
    return [(mx, my, p * q) for mx, p in lx.items() for my, q in ly.items()]


def _case2(px, px1, qy, qy1, i, anchors_i, anchors_i1):
    rows = [(None, None, HALF)]
    for (ux, uy), p1 in _selector(px, qy, anchors_i):
        for (vx, vy), p2 in _selector(px1, qy1, anchors_i1):
            mx = (ux, vx) if _legal(vx, i) else None
            my = (uy, vy) if _legal(vy, i) else None
            rows.append((mx, my, HALF * p1 * p2))
    return rows


def _case3(px, px1, qy, qy1, i):
    rows = [(mv, None, p * HALF) for mv, p in _attempt_law(px, px1, i).items()]
    rows += [(None, mv, p * HALF) for mv, p in _attempt_law(qy, qy1, i).items()]
    return rows


def _expect_pair(pair, u, v):
    if pair != _ordered(u, v):
        raise InvalidStateError(f"pair {pair} does not hold {{{u},{v}}}")


def _case4(px, px1, qy, qy1, i, anchors_i, anchors_i1, early, late):
    if len(anchors_i) > 1 or len(anchors_i1) > 1:
        raise InvalidStateError("two anchors at one index cannot meet a straddle")
    a = anchors_i[0] if anchors_i else None
    m = anchors_i1[0] if anchors_i1 else None
    if a is None and m is None:
        raise InvalidStateError("unanchored interface dispatched to case 4")

    if len(early) + len(late) == 1:
        c = (early + late)[0]
        x_early = bool(early)
        ep, ep1 = (px, px1) if x_early else (qy, qy1)
        lp, lp1 = (qy, qy1) if x_early else (px, px1)
        if a is not None and m is not None:
            _expect_pair(ep, a, c)
            _expect_pair(lp1, c, m)
            mob = _legal(m, i)
            table = "both-mobile" if mob else "both"
            raw = _t_both(a, _other(lp, a), c, _other(ep1, m), m, mob)
        elif a is not None:
            _expect_pair(ep, a, c)
            table = "near"
            f, g = ep1
            raw = _t_near(a, _other(lp, a), c, _other(lp1, c), f, g)
        else:
            _expect_pair(lp1, c, m)
            mob = _legal(m, i)
            table = "far-mobile" if mob else "far"
            d, e = lp
            raw = _t_far(d, e, c, _other(ep, c), _other(ep1, m), m, mob)
        if x_early:
            rows = [(emv, lmv, p) for lmv, emv, p in raw]
        else:
            rows = [(lmv, emv, p) for lmv, emv, p in raw]
        return table, rows

    if len(early) == 1 and len(late) == 1:
        s, sp = early[0], late[0]
        if a is not None and m is not None:
            _expect_pair(px, a, s)
            _expect_pair(px1, m, sp)
            _expect_pair(qy, a, sp)
            _expect_pair(qy1, m, s)
            mob = _legal(m, i)
            table = "pinned-mobile" if mob else "pinned"
            rows = _t_pinned(a, s, sp, m, mob)
        elif a is not None:
            _expect_pair(px, a, s)
            _expect_pair(qy, a, sp)
            table = "near-pair"
            rows = _t_near_pair(a, s, sp, _other(px1, sp), _other(qy1, s))
        else:
            _expect_pair(px1, m, sp)
            _expect_pair(qy1, m, s)
            mob = _legal(m, i)
            table = "far-pair-mobile" if mob else "far-pair"
            rows = _t_far_pair(s, _other(px, s), sp, _other(qy, sp), m, mob)
        return table, rows

    raise InvalidStateError("anchored interface with a one-sided double straddle")


def _merge(raw):
    acc: dict = {}
    for mx, my, p in raw:
        key = (mx, my)
        acc[key] = acc.get(key, Fraction(0)) + p
    return tuple((mx, my, p) for (mx, my), p in acc.items())


def _check_law(law: JointLaw, px, px1, qy, qy1, i):
    """Exact verification of a joint law against the single-chain oracle."""
    total = sum(p for _, _, p in law.rows)
    if total != 1:
        raise InvalidStateError(f"joint law mass {total} != 1")
    for mx, my, p in law.rows:
        if p <= 0:
            raise InvalidStateError("nonpositive row probability")
        for mv, p0, p1 in ((mx, px, px1), (my, qy, qy1)):
            if mv is None:
                continue
            u, v = mv
            if u not in p0 or v not in p1:
                raise InvalidStateError(f"move {mv} not supported by {p0},{p1}")
            if not _legal(v, i) or not (u <= 0 or u < i + 1):
                raise InvalidStateError(f"illegal move {mv} at interface {i}")
    if law.x_marginal() != _lazy_local(px, px1, i):
        raise InvalidStateError("X marginal differs from the lazy move law")
    if law.y_marginal() != _lazy_local(qy, qy1, i):
        raise InvalidStateError("Y marginal differs from the lazy move law")
    for t in law.anchors[0] + law.anchors[1]:
        for mx, my, _ in law.rows:
            if (mx is not None and t in mx) != (my is not None and t in my):
                raise InvalidStateError(f"anchor {t} moves in one chain only")
    for s in law.early:
        for mx, my, _ in law.rows:
            if mx is not None and mx[0] == s and my is not None and my[1] == s:
                raise InvalidStateError(f"straddler {s} crosses itself")
    for s in law.late:
        for mx, my, _ in law.rows:
            if mx is not None and mx[1] == s and my is not None and my[0] == s:
                raise InvalidStateError(f"straddler {s} crosses itself")


# ---------------------------------------------------------------------------
# The coupling driver


@dataclass(frozen=True)
class CouplingResult:
    """Outcome of one coupled run; -1 marks times never reached."""

    n: int
    mode: str
    tau: int
    steps: int
    interior_time: int
    label_times: tuple
    records: "tuple | None" = None

    @property
    def coupled(self) -> bool:
        return self.tau >= 0


class Coupling:
    """Joint law cache and step/run driver for one chain size and mode."""

    def __init__(self, n: int, mode: str, validate_tables: bool = True):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if n < 3:
            raise DegenerateSizeError("coupling needs n >= 3")
        self.n = n
        self.mode = mode
        self.validate_tables = validate_tables
        self._laws: dict = {}

    # -- law construction ---------------------------------------------------

    def law(self, state: CoupledState, i: int) -> JointLaw:
        """The exact joint move law at interface i for this coupled state."""
        if not 1 <= i <= self.n - 2:
            raise InvalidParamError(f"interface {i} out of range for n={self.n}")
        key = (
            i,
            state.x.pairs[i - 1],
            state.x.pairs[i],
            state.y.pairs[i - 1],
            state.y.pairs[i],
            state.frontier,
        )
        law = self._laws.get(key)
        if law is None:
            law = self._build(*key)
            self._laws[key] = law
        return law

    def _build(self, i, px, px1, qy, qy1, frontier) -> JointLaw:
        if frontier == 1:
            def track(v):
                return v != 0

            early = [v for v in px if v < 0 and v in qy1]
            late = [v for v in px1 if v < 0 and v in qy]
        else:
            def track(v):
                return v >= frontier

            c = frontier - 1
            early = [c] if (c in px and c in qy1) else []
            late = [c] if (c in px1 and c in qy) else []
        anchors_i = _shared_tracked(px, qy, track)
        anchors_i1 = _shared_tracked(px1, qy1, track)
        anchored = bool(anchors_i or anchors_i1)
        straddled = bool(early or late)

        table = None
        if not anchored and not straddled:
            case, raw = 1, _case1(px, px1, qy, qy1, i)
        elif anchored and not straddled:
            case, raw = 2, _case2(px, px1, qy, qy1, i, anchors_i, anchors_i1)
        elif not anchored:
            case, raw = 3, _case3(px, px1, qy, qy1, i)
        else:
            case = 4
            table, raw = _case4(
                px, px1, qy, qy1, i, anchors_i, anchors_i1, early, late
            )

        rows = _merge(raw)
        cum = []
        acc = 0.0
        for _, _, p in rows:
            acc += float(p)
            cum.append(acc)
        cum[-1] = 1.0
        law = JointLaw(
            i=i,
            case=case,
            table=table,
            anchors=(tuple(anchors_i), tuple(anchors_i1)),
            early=tuple(early),
            late=tuple(late),
            rows=rows,
            cum=tuple(cum),
        )
        if self.validate_tables:
            _check_law(law, px, px1, qy, qy1, i)
        return law

    # -- single validated step ----------------------------------------------

    def _check_state(self, state: CoupledState):
        if state.x.n != self.n or state.x.mode != self.mode:
            raise InvalidStateError("state does not belong to this coupling")
        if not validate(state.x) or not validate(state.y):
            raise InvalidMatchingError("coupled state holds an invalid matching")
        fresh = analyze(state.x, state.y)
        stored = (state.frontier, state.matched_indices, state.split_indices)
        if stored != (fresh.frontier, fresh.matched_indices, fresh.split_indices):
            raise InvalidStateError("stored bookkeeping disagrees with recomputation")

    def step(self, state: CoupledState, rng=None, *, record=None) -> CoupledState:
        """Advance the coupled pair one step; record=(i, row) replays exactly."""
        self._check_state(state)
        if record is not None:
            i, ridx = record
            law = self.law(state, int(i))
            if not 0 <= ridx < len(law.rows):
                raise InvalidParamError(f"row {ridx} out of range")
            mx, my, _ = law.rows[ridx]
            i = int(i)
        else:
            if rng is None:
                raise InvalidParamError("need an rng or a replay record")
            i = int(rng.integers(1, self.n - 1))
            law = self.law(state, i)
            mx, my, _ = law.rows[bisect_right(law.cum, float(rng.random()))]
        nx = _apply_to_matching(state.x, i, mx)
        ny = _apply_to_matching(state.y, i, my)
        return analyze(nx, ny)

    # -- fast replicate runner ----------------------------------------------

    def run(
        self,
        x0: Matching,
        y0: Matching,
        rng,
        *,
        t_max: "int | None" = None,
        check_properties: bool = False,
        trace: bool = False,
    ) -> CouplingResult:
        """Run the coupling until X == Y or t_max steps have elapsed."""
        if x0.n != self.n or x0.mode != self.mode:
            raise InvalidStateError("start states do not belong to this coupling")
        if x0.n != y0.n or x0.mode != y0.mode:
            raise InvalidStateError("coupled chains must share n and mode")
        if not validate(x0) or not validate(y0):
            raise InvalidMatchingError("start state is not a valid matching")
        n, labeled = self.n, self.mode == LABELED
        if t_max is None:
            t_max = max(10_000, 1000 * coupling_time_bound(n))

        pairs_x, pairs_y = list(x0.pairs), list(y0.pairs)
        ipx, ipy = [0] * (n - 1), [0] * (n - 1)
        lpx: dict = {}
        lpy: dict = {}
        for pairs, ip, lp in ((pairs_x, ipx, lpx), (pairs_y, ipy, lpy)):
            for k, (u, v) in enumerate(pairs, start=1):
                for lbl in (u, v):
                    if lbl > 0:
                        ip[lbl] = k
                    elif lbl < 0:
                        lp[lbl] = k
        unmatched = [a for a in range(1, n - 1) if ipx[a] != ipy[a]]
        frontier = max(unmatched) + 1 if unmatched else 1
        bad_leaves = sum(1 for lbl in lpx if lpx[lbl] != lpy[lbl])
        if not labeled and frontier == 1 and pairs_x != pairs_y:
            raise InvalidStateError("unlabeled chains with matched interiors differ")

        first_time = [None] * (n - 1)  # first t with frontier <= a
        for a in range(frontier, n - 1):
            first_time[a] = 0
        leaf_checks = check_properties and labeled and frontier == 1
        records: "list | None" = [] if trace else None
        laws = self._laws
        t = 0
        buf = 4096
        bpos = buf
        ibuf = ubuf = None
        while (frontier > 1 or bad_leaves) and t < t_max:
            if bpos == buf:
                ibuf = rng.integers(1, n - 1, size=buf)
                ubuf = rng.random(buf)
                bpos = 0
            i = int(ibuf[bpos])
            u = ubuf[bpos]
            bpos += 1
            key = (i, pairs_x[i - 1], pairs_x[i], pairs_y[i - 1], pairs_y[i], frontier)
            law = laws.get(key)
            if law is None:
                law = self._build(*key)
                laws[key] = law
            ridx = bisect_right(law.cum, u)
            mx, my, _ = law.rows[ridx]
            if records is not None:
                records.append((i, ridx))
            t += 1

            moved = set()
            if mx is not None:
                moved.update(mx)
            if my is not None:
                moved.update(my)
            moved.discard(0)
            leaf_moved = [lbl for lbl in moved if lbl < 0]
            front_before = frontier
            if labeled and leaf_moved:
                match_before = {lbl: lpx[lbl] == lpy[lbl] for lbl in leaf_moved}
            if leaf_checks and leaf_moved:
                sign_before = {
                    lbl: (lpx[lbl] > lpy[lbl]) - (lpx[lbl] < lpy[lbl])
                    for lbl in leaf_moved
                }
            if check_properties and front_before > 1:
                c = front_before - 1
                csign = (ipx[c] > ipy[c]) - (ipx[c] < ipy[c])

            if mx is not None:
                _apply_fast(pairs_x, ipx, lpx, i, mx)
            if my is not None:
                _apply_fast(pairs_y, ipy, lpy, i, my)

            if labeled and leaf_moved:
                for lbl in leaf_moved:
                    now = lpx[lbl] == lpy[lbl]
                    bad_leaves += (not now) - (not match_before[lbl])
            if check_properties:
                if front_before > 1:
                    for lbl in moved:
                        if lbl > 0 and lbl >= front_before and ipx[lbl] != ipy[lbl]:
                            raise InvalidStateError(
                                f"matched interior {lbl} was torn apart"
                            )
                    after = (ipx[c] > ipy[c]) - (ipx[c] < ipy[c])
                    if after == -csign:
                        raise InvalidStateError(
                            f"target {c} swapped sides at interface {i}"
                        )
                else:
                    for lbl in moved:
                        if lbl > 0 and ipx[lbl] != ipy[lbl]:
                            raise InvalidStateError(
                                f"matched interior {lbl} was torn apart"
                            )
                if leaf_checks and leaf_moved:
                    for lbl in leaf_moved:
                        now = (lpx[lbl] > lpy[lbl]) - (lpx[lbl] < lpy[lbl])
                        was = sign_before[lbl]
                        if was == 0 and now != 0:
                            raise InvalidStateError(f"matched leaf {lbl} unmatched")
                        if was != 0 and now == -was:
                            raise InvalidStateError(f"leaf {lbl} swapped sides")
            while frontier > 1 and ipx[frontier - 1] == ipy[frontier - 1]:
                frontier -= 1
                first_time[frontier] = t
                if frontier == 1 and check_properties and labeled:
                    leaf_checks = True

        coupled = frontier == 1 and bad_leaves == 0
        if coupled and pairs_x != pairs_y:
            raise InvalidStateError("bookkeeping reports coupled but chains differ")
        label_times = []
        for a in range(n - 3, 0, -1):
            ta, tb = first_time[a], first_time[a + 1]
            label_times.append(ta - tb if ta is not None and tb is not None else -1)
        return CouplingResult(
            n=n,
            mode=self.mode,
            tau=t if coupled else -1,
            steps=t,
            interior_time=first_time[1] if first_time[1] is not None else -1,
            label_times=tuple(label_times),
            records=tuple(records) if records is not None else None,
        )


def _apply_fast(pairs, ip, lp, i, mv):
    u, v = mv
    pa, pb = pairs[i - 1], pairs[i]
    oa = pa[1] if pa[0] == u else pa[0]
    ob = pb[1] if pb[0] == v else pb[0]
    pairs[i - 1] = _ordered(oa, v)
    pairs[i] = _ordered(ob, u)
    if u > 0:
        ip[u] = i + 1
    elif u:
        lp[u] = i + 1
    if v > 0:
        ip[v] = i
    elif v:
        lp[v] = i


_SHARED: dict = {}


def _shared_coupling(n: int, mode: str) -> Coupling:
    key = (n, mode)
    cpl = _SHARED.get(key)
    if cpl is None:
        cpl = _SHARED[key] = Coupling(n, mode)
    return cpl


def coupled_step(state: CoupledState, rng=None, *, record=None) -> CoupledState:
    """One validated step of the coupled pair (module-level convenience)."""
    return _shared_coupling(state.x.n, state.x.mode).step(state, rng, record=record)


def leaf_phase_step(state: CoupledState, rng=None, *, record=None) -> CoupledState:
    """Step the leaf phase; raises PhaseError until interiors are matched."""
    if state.x.mode != LABELED:
        raise PhaseError("only labeled chains have a leaf phase")
    if state.frontier > 1:
        raise PhaseError("interior labels are not all matched yet")
    return coupled_step(state, rng, record=record)


def run_coupling(
    x0: Matching,
    y0: Matching,
    rng,
    *,
    t_max: "int | None" = None,
    check_properties: bool = False,
    trace: bool = False,
) -> CouplingResult:
    """Run one coupling replicate from (x0, y0) with the shared law cache."""
    return _shared_coupling(x0.n, x0.mode).run(
        x0, y0, rng, t_max=t_max, check_properties=check_properties, trace=trace
    )


def joint_move_law(x: Matching, y: Matching, i: int) -> JointLaw:
    """The joint move law at interface i for the pair (x, y)."""
    return _shared_coupling(x.n, x.mode).law(analyze(x, y), i)


# ---------------------------------------------------------------------------
# Marginal fidelity check


@dataclass(frozen=True)
class MarginalReport:
    """Chi-square comparison of sampled joint rows against each lazy law."""

    n: int
    mode: str
    i: int
    samples: int
    statistic_x: float
    pvalue_x: float
    statistic_y: float
    pvalue_y: float


def _move_sort_key(mv):
    return (0, 0, 0) if mv is None else (1, mv[0], mv[1])


def marginal_check(
    x: Matching, y: Matching, i: int, samples: int, rng
) -> MarginalReport:
    """Sample the joint law and test each chain's move marginal exactly."""
    if samples < 1:
        raise InvalidParamError("need at least one sample")
    law = joint_move_law(x, y, i)
    probs = np.array([float(p) for _, _, p in law.rows])
    counts = rng.multinomial(samples, probs / probs.sum())
    stats = []
    for side, m in ((0, x), (1, y)):
        exact = lazy_move_law(m, i)
        obs: dict = {}
        for row, cnt in zip(law.rows, counts):
            mv = row[side]
            obs[mv] = obs.get(mv, 0) + int(cnt)
        keys = sorted(exact, key=_move_sort_key)
        f_obs = np.array([obs.get(k, 0) for k in keys], dtype=float)
        f_exp = np.array([float(exact[k]) for k in keys]) * samples
        f_exp *= f_obs.sum() / f_exp.sum()
        stat, pval = chisquare(f_obs, f_exp)
        stats.append((float(stat), float(pval)))
    return MarginalReport(
        n=x.n,
        mode=x.mode,
        i=i,
        samples=samples,
        statistic_x=stats[0][0],
        pvalue_x=stats[0][1],
        statistic_y=stats[1][0],
        pvalue_y=stats[1][1],
    )


# ---------------------------------------------------------------------------
# Exact mean coupling times via the joint kernel


@dataclass(frozen=True, eq=False)
class CouplingTimes:
    """Exact mean coupling time from every ordered start pair."""

    n: int
    mode: str
    means: np.ndarray
    max_mean: float
    argmax: tuple


def coupling_hitting_times(
    space: StateSpace,
    *,
    max_pairs: int = 2_000_000,
    direct_limit: int = 20_000,
) -> CouplingTimes:
    """Solve (I - Q) h = 1 over ordered state pairs of the coupled kernel.

    Q is the joint transition kernel restricted to uncoupled pairs, so h
    is the exact expected coupling time from every ordered start pair.
    """
    states = space.states
    S = len(states)
    n = space.n
    if S * (S - 1) > max_pairs:
        raise CapExceeded(
            f"{S * (S - 1)} ordered pairs exceed the budget of {max_pairs}"
        )
    cpl = _shared_coupling(n, space.mode)
    index = space.index
    tmemo: dict = {}

    def target(ix, i, mv):
        if mv is None:
            return ix
        key = (ix, i, mv)
        j = tmemo.get(key)
        if j is None:
            j = index[_apply_to_matching(states[ix], i, mv)]
            tmemo[key] = j
        return j

    rows: list = []
    cols: list = []
    data: list = []
    w = 1.0 / (n - 2)
    for ix, x in enumerate(states):
        base = ix * S
        for iy, y in enumerate(states):
            if ix == iy:
                continue
            st = analyze(x, y)
            p = base + iy
            for i in range(1, n - 1):
                for mx, my, pr in cpl.law(st, i).rows:
                    jx = target(ix, i, mx)
                    jy = target(iy, i, my)
                    if jx != jy:
                        rows.append(p)
                        cols.append(jx * S + jy)
                        data.append(w * float(pr))
    size = S * S
    Q = sparse.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()
    b = np.ones(size)
    b[np.arange(S) * (S + 1)] = 0.0
    A = sparse.identity(size, format="csr") - Q
    if size <= direct_limit:
        h = spsolve(A.tocsc(), b)
    else:
        h, info = lgmres(A, b, rtol=1e-13, atol=0.0, maxiter=1000)
        if info != 0 or np.abs(A @ h - b).max() > 1e-9:
            # Q is substochastic, so the Neumann series always converges
            h = b.copy()
            for _ in range(500_000):
                nh = b + Q @ h
                if np.abs(nh - h).max() < 1e-13 * max(np.abs(nh).max(), 1.0):
                    h = nh
                    break
                h = nh
    resid = np.abs(A @ h - b).max()
    if resid > 1e-8:
        raise RuntimeError(f"hitting time solve residual {resid:.3e}")
    means = h.reshape(S, S)
    flat = int(np.argmax(means))
    return CouplingTimes(
        n=n,
        mode=space.mode,
        means=means,
        max_mean=float(means.max()),
        argmax=(flat // S, flat % S),
    )


# ---------------------------------------------------------------------------
# Line walk reference model
#
# The walk lives on {1, ..., m}: from an interior site it steps down with
# probability p, up with probability p, and stays otherwise; from m the up
# step is rejected; site 1 absorbs.  Matching one interior label is
# dominated by this walk with p = 1/8 and m the number of legal sites.


def line_walk_expectations(m: int, p) -> tuple:
    """Exact expected absorption times from starts 1..m, via x(2m-x+1)-2m."""
    if m < 1:
        raise InvalidParamError("need m >= 1")
    p = Fraction(p)
    if not 0 < p <= HALF:
        raise InvalidParamError("need 0 < p <= 1/2")
    return tuple(
        Fraction(x * (2 * m - x + 1) - 2 * m, 1) / (2 * p) for x in range(1, m + 1)
    )


def line_walk_expectation(m: int, p) -> Fraction:
    """Exact expected absorption time m(m-1)/(2p) from the reflecting end."""
    return line_walk_expectations(m, p)[-1]


def simulate_line_walks(m: int, p: float, walks: int, rng, t_max=None) -> np.ndarray:
    """Absorption times of independent line walks started at m (-1 on timeout)."""
    if m < 1:
        raise InvalidParamError("need m >= 1")
    if not 0 < p <= 0.5:
        raise InvalidParamError("need 0 < p <= 1/2")
    if walks < 1:
        raise InvalidParamError("need at least one walk")
    if t_max is None:
        t_max = max(10_000, int(200 * float(line_walk_expectation(m, p))))
    times = np.full(walks, -1, dtype=np.int64)
    if m == 1:
        times[:] = 0
        return times
    ids = np.arange(walks)
    pos = np.full(walks, m, dtype=np.int64)
    t = 0
    while ids.size and t < t_max:
        t += 1
        u = rng.random(ids.size)
        down = u < p
        up = (u >= p) & (u < 2 * p) & (pos < m)
        pos = pos - down + up
        done = pos == 1
        if done.any():
            times[ids[done]] = t
            keep = ~done
            ids = ids[keep]
            pos = pos[keep]
    return times


# ---------------------------------------------------------------------------
# Replicate output


def write_replicates_csv(path, results, *, seed, header_lines=()):
    """Write coupling replicates as CSV: n,mode,seed,replicate,tau,T_a columns."""
    if not results:
        raise InvalidParamError("no replicates to write")
    n, mode = results[0].n, results[0].mode
    if any(r.n != n or r.mode != mode for r in results):
        raise InvalidParamError("replicates mix sizes or modes")
    cols = ["n", "mode", "seed", "replicate", "tau"]
    cols += [f"T_{a}" for a in range(n - 3, 0, -1)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(cols) + "\n")
        for r, res in enumerate(results):
            row = [str(n), mode, str(seed), str(r), str(res.tau)]
            row += [str(v) for v in res.label_times]
            fh.write(",".join(row) + "\n")
