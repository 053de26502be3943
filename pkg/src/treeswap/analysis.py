"""Mixing diagnostics: total-variation curves, spectra, Dirichlet forms.

Total-variation iteration always uses distribution-times-sparse-matrix
products (never dense matrix powers); the worst-case curve evolves every
point start at once as columns of a dense array.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .errors import NotReversibleError
from .kernel import Distribution, Kernel, stationary_law, verify_detailed_balance
from .matchings import Matching, internal_tree_length

DENSE_EIG_LIMIT = 20000
MIX_THRESHOLD = 0.25


@dataclass(frozen=True)
class TVCurve:
    n: int
    mode: str
    lazy: bool
    start: str
    ts: tuple[int, ...]
    values: tuple[float, ...]

    @property
    def mixing_time(self) -> int | None:
        """First t with worst-start distance below 1/4."""
        for t, v in zip(self.ts, self.values):
            if v < MIX_THRESHOLD:
                return t
        return None


def _start_index(kernel: Kernel, start) -> int:
    space = kernel.space
    if isinstance(start, int):
        if not 0 <= start < len(space):
            raise ValueError(f"start index {start} out of range")
        return start
    if start == "caterpillar":
        return space.index[Matching.caterpillar(space.n, space.mode)]
    raise ValueError(f"unknown start {start!r}")


def tv_curve(kernel: Kernel, law: Distribution | None = None,
             start="worst", t_max: int = 2000,
             stop_below: float = 1e-6) -> TVCurve:
    """Distance to stationarity over time from a chosen start.

    start: "worst" (max over every point start), "caterpillar", or an
    explicit state index.
    """
    if law is None:
        law = stationary_law(kernel.space)
    pi = law.weights
    size = len(kernel.space)
    pt = kernel.to_csr().T.tocsr()

    def tv_cols(cols: np.ndarray) -> float | np.ndarray:
        return 0.5 * np.abs(cols - pi[:, None]).sum(axis=0)

    ts = [0]
    if start == "worst":
        cols = np.eye(size)
        vals = [float(tv_cols(cols).max())]
        for t in range(1, t_max + 1):
            cols = pt @ cols
            vals.append(float(tv_cols(cols).max()))
            ts.append(t)
            if vals[-1] < stop_below:
                break
    else:
        x0 = _start_index(kernel, start)
        mu = np.zeros(size)
        mu[x0] = 1.0
        vals = [float(0.5 * np.abs(mu - pi).sum())]
        for t in range(1, t_max + 1):
            mu = pt @ mu
            vals.append(float(0.5 * np.abs(mu - pi).sum()))
            ts.append(t)
            if vals[-1] < stop_below:
                break
    label = start if isinstance(start, str) else f"index:{start}"
    return TVCurve(kernel.space.n, kernel.space.mode, kernel.lazy, label,
                   tuple(ts), tuple(vals))


@dataclass(frozen=True)
class SpectralReport:
    n: int
    mode: str
    lazy: bool
    state_count: int
    eigenvalues: tuple[float, ...]  # descending; iterative mode keeps extremes
    gap: float                       # 1 - max |eigenvalue| below the top
    db_residual: float
    full_spectrum: bool

    @property
    def relaxation_time(self) -> float:
        return 1.0 / self.gap


def _symmetrized(kernel: Kernel, law: Distribution) -> np.ndarray:
    s = np.sqrt(law.weights)
    mat = kernel.to_dense()
    mat = (s[:, None] * mat) / s[None, :]
    return 0.5 * (mat + mat.T)


def spectral_report(kernel: Kernel, law: Distribution | None = None,
                    reversibility_tol: float = 1e-8) -> SpectralReport:
    """Spectrum and gap of a reversible kernel.

    Raises NotReversibleError when detailed balance fails for the law, as
    the similarity transform below would silently produce garbage.
    """
    if law is None:
        law = stationary_law(kernel.space)
    residual = verify_detailed_balance(kernel, law)
    if residual > reversibility_tol:
        raise NotReversibleError(
            f"detailed-balance residual {residual:.3e} exceeds "
            f"{reversibility_tol:.1e}")
    size = len(kernel.space)
    if size == 1:
        return SpectralReport(kernel.space.n, kernel.space.mode, kernel.lazy,
                              1, (1.0,), 1.0, residual, True)
    if size <= DENSE_EIG_LIMIT:
        sym = _symmetrized(kernel, law)
        eig = np.linalg.eigvalsh(sym)[::-1]
        second = max(abs(eig[1]), abs(eig[-1]))
        return SpectralReport(kernel.space.n, kernel.space.mode, kernel.lazy,
                              size, tuple(eig), 1.0 - second, residual, True)
    # large spaces: extreme eigenvalues only, via Lanczos on the sparse
    # symmetrization
    s = np.sqrt(law.weights)
    pmat = kernel.to_csr()
    sym = sparse.diags(s) @ pmat @ sparse.diags(1.0 / s)
    sym = (sym + sym.T) * 0.5
    top = eigsh(sym, k=2, which="LA", return_eigenvectors=False, tol=1e-10)
    bot = eigsh(sym, k=1, which="SA", return_eigenvectors=False, tol=1e-10)
    eig = tuple(sorted([*top, *bot], reverse=True))
    second = max(abs(eig[1]), abs(eig[-1]))
    return SpectralReport(kernel.space.n, kernel.space.mode, kernel.lazy,
                          size, eig, 1.0 - second, residual, False)


def iterative_gap(kernel: Kernel, law: Distribution | None = None,
                  tol: float = 1e-9, max_iter: int = 2_000_000) -> float:
    """Gap via power iteration on the symmetrized kernel, top eigenvector
    deflated (it is sqrt(pi) exactly)."""
    if law is None:
        law = stationary_law(kernel.space)
    size = len(kernel.space)
    if size == 1:
        return 1.0
    s = np.sqrt(law.weights)
    top = s / np.linalg.norm(s)
    pmat = kernel.to_csr()
    sym = sparse.diags(s) @ pmat @ sparse.diags(1.0 / s)
    sym = ((sym + sym.T) * 0.5).tocsr()

    rng = np.random.default_rng(7)
    v = rng.standard_normal(size)
    v -= top * (top @ v)
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_iter):
        w = sym @ v
        w -= top * (top @ w)
        theta = float(v @ w)
        res = np.linalg.norm(w - theta * v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break
        v = w / norm
        if res < tol:
            break
    return 1.0 - abs(theta)


def dirichlet_form(kernel: Kernel, law: Distribution, values) -> Fraction:
    """E(f) = (1/2) sum_xy pi(x) P(x,y) (f(x)-f(y))^2, exact for exact f."""
    vals = [Fraction(v) for v in values]
    total = Fraction(0)
    for x, row in enumerate(kernel.rows):
        fx = vals[x]
        for y, c in row.items():
            if y == x:
                continue
            total += law.exact[x] * Fraction(c, kernel.denom) * (fx - vals[y]) ** 2
    return total / 2


def phi_values(space) -> list[int]:
    return [internal_tree_length(m) for m in space.states]


def phi_mean_exact(space, law: Distribution | None = None) -> Fraction:
    if law is None:
        law = stationary_law(space)
    return sum((law.exact[i] * v for i, v in enumerate(phi_values(space))),
               Fraction(0))


def phi_variance_exact(space, law: Distribution | None = None) -> Fraction:
    if law is None:
        law = stationary_law(space)
    vals = phi_values(space)
    mean = sum((law.exact[i] * v for i, v in enumerate(vals)), Fraction(0))
    second = sum((law.exact[i] * v * v for i, v in enumerate(vals)),
                 Fraction(0))
    return second - mean * mean


def relaxation_lower_bound(n: int) -> Fraction:
    """Variational bound on the relaxation time from the internal tree
    length: Var(phi) / E(phi) with E(phi) <= 1/2 gives (2/90) n(n+1)(n-3)."""
    return Fraction(2 * n * (n + 1) * (n - 3), 90)


def write_curve_csv(curves, path: str, header_lines=()) -> None:
    """CSV schema: n,mode,lazy,start,t,tv (one row per time step)."""
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("n,mode,lazy,start,t,tv\n")
        for curve in curves:
            lazy = "1" if curve.lazy else "0"
            for t, v in zip(curve.ts, curve.values):
                fh.write(f"{curve.n},{curve.mode},{lazy},{curve.start},"
                         f"{t},{v:.12g}\n")
