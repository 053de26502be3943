"""Command line interface.

Subcommands: enumerate, sample, tvdist, gap, couple, stats, verify.
File outputs carry '#' provenance headers (version, command, flags, seed)
and are byte-identical for a fixed seed and flag set; summaries go to
stdout.  Exit codes: 0 success, 1 verification failure, 2 usage error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .analysis import (
    phi_mean_exact,
    phi_variance_exact,
    spectral_report,
    tv_curve,
    write_curve_csv,
)
from .coupling import (
    analyze,
    coupling_hitting_times,
    coupling_time_bound,
    line_walk_expectation,
    marginal_check,
    run_coupling,
    write_replicates_csv,
)
from .enumeration import (
    DEFAULT_MAX_STATES,
    enumerate_space,
    predicted_count,
    write_states,
)
from .errors import CapExceeded, TreeswapError
from .kernel import (
    is_aperiodic,
    is_irreducible,
    stationary_law,
    transition_matrix,
    verify_detailed_balance,
    verify_lumping,
)
from .matchings import (
    LABELED,
    MODES,
    UNLABELED,
    Matching,
    cherry_count,
    erase_leaf_labels,
)
from .sampler import phi_moments, red_ball_mean, urn_sample, urn_sample_batch

CLI_MAX_N = {UNLABELED: 9, LABELED: 6}
UNSAFE_MAX_STATES = 100_000_000
UNSAFE_MAX_PAIRS = 200_000_000


class UsageError(Exception):
    """Bad flag combination or value; maps to exit code 2."""


def _check_budget(ns, min_n: int = 2) -> None:
    if ns.n < min_n:
        raise UsageError(f"need --n >= {min_n}")
    cap = CLI_MAX_N[ns.mode]
    if ns.n > cap and not ns.unsafe_budget:
        raise CapExceeded(
            f"n={ns.n} exceeds the {ns.mode} command budget of {cap}; "
            "pass --unsafe-budget to override"
        )


def _space(ns):
    _check_budget(ns)
    return enumerate_space(
        ns.n,
        ns.mode,
        max_n=ns.n if ns.unsafe_budget else None,
        max_states=UNSAFE_MAX_STATES if ns.unsafe_budget else DEFAULT_MAX_STATES,
    )


def _flag_text(ns) -> str:
    parts = []
    for key in sorted(vars(ns)):
        if key == "func":
            continue
        parts.append(f"--{key.replace('_', '-')}={getattr(ns, key)}")
    return " ".join(parts)


def _header_lines(ns, command: str) -> list:
    lines = [f"treeswap {__version__}", f"command: {command}",
             f"flags: {_flag_text(ns)}"]
    if hasattr(ns, "seed"):
        lines.append(f"seed: {ns.seed}")
    return lines


def _meta(ns, command: str) -> dict:
    flags = {k: getattr(ns, k) for k in sorted(vars(ns)) if k != "func"}
    return {"version": __version__, "command": command, "flags": flags}


def _parse_start(text: str):
    if text in ("worst", "caterpillar"):
        return text
    if text.startswith("index:"):
        try:
            return int(text[len("index:"):])
        except ValueError:
            raise UsageError(f"bad start index in {text!r}") from None
    raise UsageError(f"unknown start {text!r}")


def _require_out(ns) -> str:
    if not ns.out:
        raise UsageError("this subcommand writes a file; pass --out <path>")
    return ns.out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_enumerate(ns) -> int:
    if ns.count_only:
        if ns.n < 2:
            raise UsageError("need --n >= 2")
        print(predicted_count(ns.n, ns.mode))
        return 0
    space = _space(ns)
    out = _require_out(ns)
    write_states(space, out, header_lines=_header_lines(ns, "enumerate"))
    print(f"wrote {len(space)} {ns.mode} states for n={ns.n} to {out}")
    return 0


def cmd_sample(ns) -> int:
    _check_budget(ns, min_n=3)
    out = _require_out(ns)
    rng = np.random.default_rng(ns.seed)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        for line in _header_lines(ns, "sample"):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "mode", "seed", "replicate", "phi", "cherries",
                         "state"])
        total_phi = 0
        for r in range(ns.replicates):
            trace = urn_sample(ns.n, rng)
            m = trace.matching
            if ns.mode == UNLABELED:
                m = erase_leaf_labels(m)
            total_phi += trace.phi
            writer.writerow([ns.n, ns.mode, ns.seed, r, trace.phi,
                             cherry_count(m), m.serialize()])
    mean_exact, _ = phi_moments(ns.n)
    print(f"wrote {ns.replicates} stationary samples to {out}; "
          f"mean phi {total_phi / ns.replicates:.4f} "
          f"(exact {float(mean_exact):.4f})")
    return 0


def cmd_tvdist(ns) -> int:
    start = _parse_start(ns.start)
    space = _space(ns)
    if isinstance(start, int) and not 0 <= start < len(space):
        raise UsageError(f"start index {start} out of range for {len(space)} states")
    out = _require_out(ns)
    kernel = transition_matrix(space, lazy=ns.lazy)
    law = stationary_law(space)
    curve = tv_curve(kernel, law, start=start, t_max=ns.t_max)
    write_curve_csv([curve], out, header_lines=_header_lines(ns, "tvdist"))
    mix = curve.mixing_time
    mix_text = str(mix) if mix is not None else f"not reached by t={ns.t_max}"
    print(f"n={ns.n} mode={ns.mode} lazy={int(ns.lazy)} start={curve.start}: "
          f"{len(curve.ts)} points, mixing time (1/4) {mix_text}")
    return 0


def cmd_gap(ns) -> int:
    space = _space(ns)
    kernel = transition_matrix(space, lazy=ns.lazy)
    law = stationary_law(space)
    report = spectral_report(kernel, law)
    t_probe = max(1000, int(30 * report.relaxation_time))
    curve = tv_curve(kernel, law, start="worst", t_max=t_probe)
    payload = {
        "_meta": _meta(ns, "gap"),
        "n": ns.n,
        "mode": ns.mode,
        "lazy": ns.lazy,
        "states": report.state_count,
        "gap": report.gap,
        "relaxation_time": report.relaxation_time,
        "db_residual": report.db_residual,
        "mixing_time": curve.mixing_time,
        "full_spectrum": report.full_spectrum,
        "eigenvalues_head": list(report.eigenvalues[:8]),
    }
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(f"n={ns.n} mode={ns.mode} lazy={int(ns.lazy)}: "
          f"{report.state_count} states, gap {report.gap:.8f}, "
          f"relaxation {report.relaxation_time:.3f}, "
          f"mixing time {curve.mixing_time}")
    return 0


def _couple_starts(ns, rng):
    start = _parse_start(ns.start)
    if start == "caterpillar":
        x0 = Matching.caterpillar(ns.n, ns.mode)
        trace = urn_sample(ns.n, rng)
        y0 = trace.matching
        if ns.mode == UNLABELED:
            y0 = erase_leaf_labels(y0)
        return x0, y0, "caterpillar vs stationary draw"
    space = _space(ns)
    if start == "worst":
        times = coupling_hitting_times(
            space,
            max_pairs=UNSAFE_MAX_PAIRS if ns.unsafe_budget else 2_000_000,
        )
        ix, iy = times.argmax
        note = f"exact worst pair ({ix},{iy}), mean {times.max_mean:.4f}"
        return space.states[ix], space.states[iy], note
    size = len(space)
    if not 0 <= start < size * size:
        raise UsageError(f"pair index {start} out of range for {size} states")
    ix, iy = divmod(start, size)
    if ix == iy:
        raise UsageError("start pair must contain two distinct states")
    return space.states[ix], space.states[iy], f"pair index {start} = ({ix},{iy})"


def cmd_couple(ns) -> int:
    _check_budget(ns, min_n=3)
    out = _require_out(ns)
    rng = np.random.default_rng(ns.seed)
    x0, y0, note = _couple_starts(ns, rng)
    results = [
        run_coupling(x0, y0, rng, t_max=ns.t_max)
        for _ in range(ns.replicates)
    ]
    write_replicates_csv(out, results, seed=ns.seed,
                         header_lines=_header_lines(ns, "couple"))
    taus = [r.tau for r in results if r.tau >= 0]
    timeouts = sum(1 for r in results if r.tau < 0)
    bound = 4 * coupling_time_bound(ns.n)
    mean_text = f"{sum(taus) / len(taus):.3f}" if taus else "n/a"
    print(f"start: {note}")
    print(f"wrote {ns.replicates} replicates to {out}; mean tau {mean_text}, "
          f"timeouts {timeouts}, mean bound {bound}")
    return 0


def cmd_stats(ns) -> int:
    _check_budget(ns, min_n=3)
    rng = np.random.default_rng(ns.seed)
    mean_exact, var_exact = phi_moments(ns.n)
    phi, reds = urn_sample_batch(ns.n, ns.replicates, rng)
    mc_mean = float(phi.mean())
    mc_var = float(phi.var(ddof=1))
    se_mean = float(phi.std(ddof=1) / np.sqrt(ns.replicates))
    worst_z = 0.0
    for k in range(1, ns.n - 1):
        exact = float(red_ball_mean(ns.n, k))
        col = reds[:, k - 1]
        se = float(col.std(ddof=1) / np.sqrt(ns.replicates)) or 1e-12
        worst_z = max(worst_z, abs(float(col.mean()) - exact) / se)
    payload = {
        "_meta": _meta(ns, "stats"),
        "n": ns.n,
        "mode": ns.mode,
        "replicates": ns.replicates,
        "phi_mean_exact": str(mean_exact),
        "phi_var_exact": str(var_exact),
        "phi_mean_mc": mc_mean,
        "phi_mean_se": se_mean,
        "phi_var_mc": mc_var,
        "red_mean_worst_z": worst_z,
    }
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(f"n={ns.n}: phi mean {mc_mean:.4f} (exact {float(mean_exact):.4f}, "
          f"se {se_mean:.4f}), var {mc_var:.4f} (exact {float(var_exact):.4f}), "
          f"worst red-mean z {worst_z:.2f}")
    return 0


def _spectrum_included(lab_eigs, unl_eigs, tol: float = 1e-8) -> bool:
    """Greedy multiset inclusion of sorted-descending eigenvalue lists."""
    i = 0
    for e in sorted(unl_eigs, reverse=True):
        while i < len(lab_eigs) and lab_eigs[i] > e + tol:
            i += 1
        if i == len(lab_eigs) or abs(lab_eigs[i] - e) > tol:
            return False
        i += 1
    return True


def cmd_verify(ns) -> int:
    _check_budget(ns, min_n=3)
    failures = 0

    def report(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        if not ok:
            failures += 1
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")

    space = _space(ns)
    report("count", len(space) == predicted_count(ns.n, ns.mode),
           f"{len(space)} states, closed form {predicted_count(ns.n, ns.mode)}")

    kernel = transition_matrix(space, lazy=False)
    law = stationary_law(space)
    pmat = kernel.to_csr()
    resid = float(np.abs(law.weights @ pmat - law.weights).sum())
    report("stationarity", resid < 1e-12, f"l1 residual {resid:.3e}")

    db = verify_detailed_balance(kernel, law)
    report("detailed-balance", db == 0.0, f"exact max residual {db:.3e}")

    report("connectivity", is_irreducible(kernel) and is_aperiodic(kernel),
           "irreducible and aperiodic")

    mean = phi_mean_exact(space, law)
    var = phi_variance_exact(space, law)
    want_mean, want_var = phi_moments(ns.n)
    report("phi-moments", mean == want_mean and var == want_var,
           f"mean {mean}, variance {var}")

    if ns.n <= 5:
        lump = verify_lumping(ns.n)
        report("lumping", lump.max_discrepancy == 0.0 and
               lump.fiber_fractions_match,
               f"max discrepancy {lump.max_discrepancy:.3e}")
        lab = enumerate_space(ns.n, LABELED)
        unl = enumerate_space(ns.n, UNLABELED)
        lab_rep = spectral_report(transition_matrix(lab, lazy=True))
        unl_rep = spectral_report(transition_matrix(unl, lazy=True))
        report("spectrum-inclusion",
               _spectrum_included(list(lab_rep.eigenvalues),
                                  list(unl_rep.eigenvalues)),
               "unlabeled spectrum inside labeled spectrum")

    rng = np.random.default_rng(ns.seed)
    phi, _ = urn_sample_batch(ns.n, ns.replicates, rng)
    se = float(phi.std(ddof=1) / np.sqrt(ns.replicates))
    diff = abs(float(phi.mean()) - float(want_mean))
    # phi is deterministic for n = 3, where the spread collapses
    z = diff / se if se > 0 else (0.0 if diff == 0 else float("inf"))
    report("urn-sampler", z < 5.0, f"phi mean z-score {z:.2f}")

    x0 = Matching.caterpillar(ns.n, ns.mode)
    trace = urn_sample(ns.n, rng)
    y0 = trace.matching if ns.mode == LABELED else erase_leaf_labels(
        trace.matching)
    try:
        runs = [run_coupling(x0, y0, rng, check_properties=True)
                for _ in range(ns.coupling_replicates)]
        timeouts = sum(1 for r in runs if not r.coupled)
        report("coupling", timeouts == 0,
               f"{len(runs)} replicates, {timeouts} timeouts, "
               "properties hold")
    except TreeswapError as exc:
        report("coupling", False, str(exc))
    st = analyze(x0, y0)
    if st.x != st.y:
        check = marginal_check(x0, y0, 1, 200_000, rng)
        report("coupling-marginals",
               check.pvalue_x > 1e-3 and check.pvalue_y > 1e-3,
               f"p-values {check.pvalue_x:.4f}, {check.pvalue_y:.4f}")

    walks = ((3, 0.5, 6), (4, 0.125, 48), (10, 0.25, 180))
    ok = all(line_walk_expectation(m, p) == want for m, p, want in walks)
    report("line-walk", ok, "closed form matches pinned values")

    print("verification " + ("failed" if failures else "passed"))
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeswap",
        description="Ranked tree shapes as ordered matchings: enumeration, "
                    "adjacent-swap chains, mixing diagnostics, couplings.",
    )
    parser.add_argument("--version", action="version",
                        version=f"treeswap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--n", type=int, required=True,
                       help="number of leaves")
        p.add_argument("--mode", choices=MODES, default=UNLABELED)
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--unsafe-budget", action="store_true",
                       help="lift the size caps (may be slow or exhaust memory)")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("enumerate", help="write the state space as JSON lines")
    common(p, seed=False)
    p.add_argument("--count-only", action="store_true",
                   help="print the closed-form state count and exit")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("sample", help="draw stationary samples via the urn")
    common(p)
    p.add_argument("--replicates", type=int, default=100)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("tvdist", help="total-variation distance curve")
    common(p, seed=False)
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--t-max", type=int, default=2000)
    p.add_argument("--start", default="worst",
                   help="worst | caterpillar | index:<k>")
    p.set_defaults(func=cmd_tvdist)

    p = sub.add_parser("gap", help="spectral gap and relaxation time")
    common(p, seed=False)
    p.add_argument("--lazy", action="store_true")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("couple", help="run coupled chain replicates")
    common(p)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--start", default="caterpillar",
                   help="worst | caterpillar | index:<k> (pair id ix*S+iy)")
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("stats", help="internal tree length moments")
    common(p)
    p.add_argument("--replicates", type=int, default=200_000)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify", help="run the verification battery")
    common(p)
    p.add_argument("--replicates", type=int, default=100_000,
                   help="urn draws for the sampler check")
    p.add_argument("--coupling-replicates", type=int, default=50)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CapExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except TreeswapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
