import math
from fractions import Fraction

import numpy as np
import pytest

from treeswap import (
    LABELED,
    UNLABELED,
    Matching,
    NotReversibleError,
    dirichlet_form,
    internal_tree_length,
    iterative_gap,
    phi_mean_exact,
    phi_moments,
    phi_values,
    phi_variance_exact,
    relaxation_lower_bound,
    spectral_report,
    tv_curve,
    uniform_law,
    write_curve_csv,
)


def test_tv_curve_initial_point(space, kernel, law):
    sp = space(5, UNLABELED)
    pi = law(5, UNLABELED)
    cat = sp.index[Matching.caterpillar(5, UNLABELED)]
    curve = tv_curve(kernel(5, UNLABELED), pi, start=cat, t_max=50)
    assert curve.ts[0] == 0
    assert curve.values[0] == pytest.approx(1.0 - float(pi[cat]))
    worst = tv_curve(kernel(5, UNLABELED), pi, start="worst", t_max=50)
    assert worst.values[0] == pytest.approx(1.0 - min(pi.weights))


@pytest.mark.parametrize("n,mode", [(5, UNLABELED), (6, UNLABELED),
                                    (4, LABELED)])
@pytest.mark.parametrize("lazy", [False, True])
def test_tv_curve_monotone_and_converges(kernel, law, n, mode, lazy):
    curve = tv_curve(kernel(n, mode, lazy), law(n, mode), t_max=3000)
    vals = np.array(curve.values)
    assert (vals >= -1e-15).all()
    assert (np.diff(vals) <= 1e-12).all()
    assert vals[-1] < 1e-6
    assert curve.mixing_time is not None
    below = [t for t, v in zip(curve.ts, curve.values) if v < 0.25]
    assert curve.mixing_time == below[0]


def test_tv_curve_start_forms(space, kernel, law):
    sp = space(5, UNLABELED)
    kern = kernel(5, UNLABELED)
    pi = law(5, UNLABELED)
    cat = sp.index[Matching.caterpillar(5, UNLABELED)]
    by_name = tv_curve(kern, pi, start="caterpillar", t_max=60)
    by_index = tv_curve(kern, pi, start=cat, t_max=60)
    assert by_name.values == by_index.values
    assert by_name.start == "caterpillar"
    assert by_index.start == f"index:{cat}"
    worst = tv_curve(kern, pi, start="worst", t_max=60)
    for w, v in zip(worst.values, by_name.values):
        assert w >= v - 1e-12


def test_tv_curve_rejects_bad_start(kernel, law):
    kern = kernel(4, UNLABELED)
    with pytest.raises(ValueError):
        tv_curve(kern, law(4, UNLABELED), start="balanced")
    with pytest.raises(ValueError):
        tv_curve(kern, law(4, UNLABELED), start=99)


def test_mixing_time_none_when_unreached(kernel, law):
    curve = tv_curve(kernel(6, UNLABELED), law(6, UNLABELED), t_max=0)
    assert curve.mixing_time is None


def test_spectral_gap_n4_exact(kernel, law):
    rep = spectral_report(kernel(4, UNLABELED), law(4, UNLABELED))
    assert rep.state_count == 2
    assert rep.full_spectrum
    assert rep.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    assert rep.eigenvalues[1] == pytest.approx(5 / 8, abs=1e-12)
    assert rep.gap == pytest.approx(3 / 8, abs=1e-12)
    lazy = spectral_report(kernel(4, UNLABELED, True), law(4, UNLABELED))
    assert lazy.gap == pytest.approx(3 / 16, abs=1e-12)
    assert lazy.relaxation_time == pytest.approx(16 / 3, abs=1e-9)


@pytest.mark.parametrize("n,mode", [(5, UNLABELED), (6, UNLABELED),
                                    (7, UNLABELED), (4, LABELED),
                                    (5, LABELED)])
def test_lazy_spectrum_nonnegative_and_half_gap(kernel, law, n, mode):
    plain = spectral_report(kernel(n, mode), law(n, mode))
    lazy = spectral_report(kernel(n, mode, True), law(n, mode))
    assert min(lazy.eigenvalues) >= -1e-10
    assert plain.eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
    # the lazy spectrum is the plain one shrunk toward 1 by a half
    if plain.eigenvalues[1] >= abs(plain.eigenvalues[-1]):
        assert lazy.gap == pytest.approx(plain.gap / 2, abs=1e-10)
    want = sorted((1 + e) / 2 for e in plain.eigenvalues)
    got = sorted(lazy.eigenvalues)
    assert np.allclose(got, want, atol=1e-10)


def test_spectral_report_rejects_wrong_law(kernel, space):
    wrong = uniform_law(space(5, UNLABELED))
    with pytest.raises(NotReversibleError):
        spectral_report(kernel(5, UNLABELED), wrong)


@pytest.mark.parametrize("n,mode,lazy", [
    (5, UNLABELED, False), (6, UNLABELED, False), (6, UNLABELED, True),
    (4, LABELED, False), (5, LABELED, True),
])
def test_iterative_gap_matches_dense(kernel, law, n, mode, lazy):
    kern = kernel(n, mode, lazy)
    pi = law(n, mode)
    dense = spectral_report(kern, pi).gap
    power = iterative_gap(kern, pi)
    assert power == pytest.approx(dense, abs=1e-6)


def test_dirichlet_form_two_state(space, kernel, law):
    sp = space(4, UNLABELED)
    f = [internal_tree_length(m) for m in sp.states]
    e = dirichlet_form(kernel(4, UNLABELED), law(4, UNLABELED), f)
    assert e == Fraction(1, 12)


@pytest.mark.parametrize("n,mode", [(4, UNLABELED), (5, UNLABELED),
                                    (6, UNLABELED), (7, UNLABELED),
                                    (8, UNLABELED), (4, LABELED),
                                    (5, LABELED)])
def test_phi_dirichlet_form_at_most_half(kernel, law, n, mode):
    kern = kernel(n, mode)
    pi = law(n, mode)
    f = phi_values(kern.space)
    assert dirichlet_form(kern, pi, f) <= Fraction(1, 2)


@pytest.mark.parametrize("n,mode", [(4, UNLABELED), (6, UNLABELED),
                                    (9, UNLABELED), (5, LABELED),
                                    (6, LABELED)])
def test_phi_closed_forms_match_enumeration(space, law, n, mode):
    sp = space(n, mode)
    pi = law(n, mode)
    want_mean, want_var = phi_moments(n)
    assert phi_mean_exact(sp, pi) == want_mean
    assert phi_variance_exact(sp, pi) == want_var


def test_phi_values_read_matchings(space):
    sp = space(5, UNLABELED)
    assert phi_values(sp) == [internal_tree_length(m) for m in sp.states]


@pytest.mark.parametrize("n", [5, 6, 7, 8, 9])
def test_relaxation_variational_bound(kernel, law, n):
    bound = relaxation_lower_bound(n)
    _, var = phi_moments(n)
    assert bound == 2 * var
    rep = spectral_report(kernel(n, UNLABELED), law(n, UNLABELED))
    assert rep.relaxation_time >= float(bound) - 1e-9
    # the sharper form: relaxation time at least Var(phi)/E(phi)
    kern = kernel(n, UNLABELED)
    pi = law(n, UNLABELED)
    ratio = phi_variance_exact(kern.space, pi) / dirichlet_form(
        kern, pi, phi_values(kern.space))
    assert rep.relaxation_time >= float(ratio) - 1e-9


@pytest.mark.parametrize("n", [5, 6])
def test_mixing_time_vs_relaxation(kernel, law, n):
    kern = kernel(n, UNLABELED, True)
    pi = law(n, UNLABELED)
    rep = spectral_report(kern, pi)
    curve = tv_curve(kern, pi, t_max=4000)
    t_mix = curve.mixing_time
    assert t_mix is not None
    assert t_mix >= (rep.relaxation_time - 1) * math.log(2) - 1


def test_write_curve_csv(tmp_path, kernel, law):
    kern = kernel(4, UNLABELED, True)
    pi = law(4, UNLABELED)
    c1 = tv_curve(kern, pi, start="worst", t_max=5)
    c2 = tv_curve(kern, pi, start="caterpillar", t_max=5)
    path = tmp_path / "curves.csv"
    write_curve_csv([c1, c2], str(path), header_lines=["origin"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# origin"
    assert lines[1] == "n,mode,lazy,start,t,tv"
    body = [l.split(",") for l in lines[2:]]
    assert len(body) == len(c1.ts) + len(c2.ts)
    assert body[0][:5] == ["4", "unlabeled", "1", "worst", "0"]
    assert float(body[0][5]) == pytest.approx(c1.values[0])
    starts = {row[3] for row in body}
    assert starts == {"worst", "caterpillar"}
