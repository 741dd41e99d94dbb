"""Command-line entry point.

Exit codes: 0 success, 2 usage or input error, 3 a mathematical contract was
breached (a residual over tolerance, or a violation where none is possible).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bellcheck, bounds, dilation, states, tpcert
from . import io as bio

EXIT_OK, EXIT_USAGE, EXIT_BREACH = 0, 2, 3

IDENTITY_TOL = 1e-12
DOMINATION_TOL = 1e-10
DILATION_TOL = 1e-9


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """"3", "2..5", "2-5" or "2,3,7" -> list of ints (possibly empty)."""
    text = text.strip()
    for sep in ("..", "-", ":"):
        if sep in text:
            a, b = text.split(sep, 1)
            return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def parse_beta(text: str) -> Fraction:
    try:
        b = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse beta {text!r}") from None
    if not 0 <= b <= 1:
        raise UsageError(f"beta must lie in [0, 1], got {text}")
    return b


def _single(values: list[int], name: str) -> int:
    if len(values) != 1:
        raise UsageError(f"--{name} must be a single value here")
    return values[0]


def _profile(args, n: int) -> dilation.SettingProfile:
    if args.profile is None:
        return dilation.SettingProfile((1,) + (2,) * (n - 1))
    try:
        prof = dilation.SettingProfile.parse(args.profile)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if prof.n_sites != n:
        raise UsageError(f"profile {prof} has {prof.n_sites} sites but --n is {n}")
    return prof


def _emit(text: str, args):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    return f"{float(x):.12g}"


# --- bounds-table / gap-scan -------------------------------------------------


def cmd_bounds_table(args) -> int:
    ds, ns = parse_range(args.d), parse_range(args.n)
    if not ds or not ns or min(ds) < 2 or min(ns) < 2:
        raise UsageError("need non-empty ranges with d >= 2 and N >= 2")
    gamma = bounds.to_fraction(args.gamma) if args.gamma else None
    try:
        reports = bounds.bound_grid(ds, ns, gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    for rep in reports:
        for name, val in rep.values().items():
            if val is not None:
                rows.append({"d": rep.d, "N": rep.n_sites, "bound": name, "exact": str(val), "float": _fmt(val)})
    _emit(_render(rows, ["d", "N", "bound", "exact", "float"], args.format), args)
    return EXIT_OK


def cmd_gap_scan(args) -> int:
    ds, ns = parse_range(args.d), parse_range(args.n)
    if not ds or not ns or min(ds) < 2 or min(ns) < 3:
        raise UsageError("need non-empty ranges with d >= 2 and N >= 3")
    rows = []
    for d in ds:
        for n in ns:
            gap, ratio = bounds.gap_max(d, n)
            rows.append(
                {
                    "d": d,
                    "N": n,
                    "gap_exact": str(gap),
                    "gap": _fmt(gap),
                    "ratio_to_sep": _fmt(ratio),
                    "loc_ghz_beats_sep": bool(bounds.beta_loc_ghz(d, n) > bounds.beta_sep(d, n, "general")),
                    "ghz_window": bounds.classify_ghz(bounds.beta_loc_ghz(d, n), d, n),
                }
            )
    cols = ["d", "N", "gap_exact", "gap", "ratio_to_sep", "loc_ghz_beats_sep", "ghz_window"]
    _emit(_render(rows, cols, args.format), args)
    return EXIT_OK


def _render(rows, cols, fmt, header: dict | None = None) -> str:
    if fmt == "json":
        payload = {"rows": rows}
        if header:
            payload.update(header)
        return bio.dumps(payload)
    buf = _io.StringIO()
    if header:
        for k, v in header.items():
            buf.write(f"# {k}={v}\n")
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# --- verify-dilation ---------------------------------------------------------


def _pure_state(args, d: int, n: int) -> states.PureStateCoeffs:
    if getattr(args, "state", None):
        try:
            psi = bio.load_state(args.state)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load state file: {exc}") from None
        if (psi.d, psi.n_sites) != (d, n):
            raise UsageError(f"state file has d={psi.d}, N={psi.n_sites}; expected d={d}, N={n}")
        return psi
    return states.PureStateCoeffs.random(d, n, np.random.SeedSequence([args.seed, 0x57A7E]))


def cmd_verify(args) -> int:
    d = _single(parse_range(args.d), "d")
    n = _single(parse_range(args.n), "n")
    prof = _profile(args, n)
    if prof.settings[0] != 1:
        raise UsageError("profile must start with 1")
    if prof.total_dim(d) > dilation.MAX_TOTAL_DIM:
        raise UsageError(f"profile {prof} gives dimension {prof.total_dim(d)} > {dilation.MAX_TOTAL_DIM}")
    betas = [parse_beta(args.beta)] if args.beta else [Fraction(0), bounds.beta_loc_ghz(d, n), Fraction(1)]

    identities = {}
    for s in sorted(set(prof.settings[1:]) | {1}):
        for key, val in dilation.identity_residuals(d, s).items():
            identities[f"s={s}:{key}"] = val
    domination = {
        f"s={s}": dilation.domination_violation(d, s, args.trials * 10, args.seed)
        for s in sorted(set(prof.settings[1:]))
    }

    psi = _pure_state(args, d, n)
    dec = states.decompose_pure(psi)
    fam = {
        "ghz": dilation.ghz_source(d, prof),
        "noise_ghz": dilation.noise_source_ghz(d, n, prof),
        "pure": dilation.pure_source(dec, prof),
        "noise_general": dilation.noise_source_general(d, n, prof),
    }
    for b in betas:
        fam[f"ghz_mix@{b}"] = dilation.mixture_source(float(b), fam["ghz"], fam["noise_ghz"])
        fam[f"pure_mix@{b}"] = dilation.mixture_source(float(b), fam["pure"], fam["noise_general"])
    residuals, traces = {}, {}
    for name, src in fam.items():
        residuals[name] = dilation.verify_dilation(src, args.trials, args.seed).max_residual
        traces[name] = abs(src.op.trace() - 1)

    failures = [f"identity {k}: {v:.3e}" for k, v in identities.items() if v > IDENTITY_TOL]
    failures += [f"domination {k}: {v:.3e}" for k, v in domination.items() if v > DOMINATION_TOL]
    failures += [f"dilation {k}: {v:.3e}" for k, v in residuals.items() if v > DILATION_TOL]
    failures += [f"trace {k}: {v:.3e}" for k, v in traces.items() if v > 1e-10]
    max_res = max([*identities.values(), *residuals.values(), *traces.values(), 0.0])
    report = {
        "command": "verify-dilation",
        "seed": args.seed,
        "d": d,
        "n_sites": n,
        "profile": list(prof.settings),
        "trials": args.trials,
        "betas": [str(b) for b in betas],
        "identities": identities,
        "domination_excess": domination,
        "dilation_residuals": residuals,
        "trace_defects": traces,
        "max_residual": max_res,
        "passed": not failures,
        "failures": failures,
    }
    _emit(bio.dumps(report), args)
    for f in failures:
        print(f"FAILED {f}", file=sys.stderr)
    return EXIT_OK if not failures else EXIT_BREACH


# --- certify -----------------------------------------------------------------


def cmd_certify(args) -> int:
    d = _single(parse_range(args.d), "d")
    n = _single(parse_range(args.n), "n")
    prof = _profile(args, n)
    if prof.total_dim(d) > dilation.MAX_TOTAL_DIM:
        raise UsageError(f"profile {prof} too large for d={d}")
    beta = parse_beta(args.beta)
    if args.family == "ghz":
        dec = None
        gamma = None
        signal = dilation.ghz_source(d, prof)
        noise = dilation.noise_source_ghz(d, n, prof)
        beta_loc = bounds.beta_loc_ghz(d, n)
        coef = tpcert.threshold_coefficient("ghz", d, n, beta)
    else:
        if not args.state:
            raise UsageError("--family pure needs --state FILE")
        psi = _pure_state(args, d, n)
        dec = states.decompose_pure(psi)
        gamma = bounds.rationalize(states.gamma_max(dec))
        signal = dilation.pure_source(dec, prof)
        noise = dilation.noise_source_general(d, n, prof)
        beta_loc = bounds.beta_loc_pure(d, n, gamma)
        coef = tpcert.threshold_coefficient("pure", d, n, beta, gamma)
    src = dilation.mixture_source(float(beta), signal, noise)
    op = dilation.group_sites(src.op, prof) if args.blocks == "site" else src.op
    cert = tpcert.certify_tensor_positivity(op, restarts=args.restarts, seed=args.seed)
    delta = tpcert.appendix_delta_check(
        args.family, d, n, prof, beta, trials=args.trials, seed=args.seed, decomposition=dec
    )
    lower, upper = tpcert.covering_norm_bounds(src.op)
    below = beta <= beta_loc
    breaches = []
    if below and cert.violated:
        breaches.append("violation found at or below the locality threshold")
    if not delta.passed():
        breaches.append("lower-bound chain slack below tolerance")
    report = {
        "command": "certify",
        "seed": args.seed,
        "family": args.family,
        "d": d,
        "n_sites": n,
        "profile": list(prof.settings),
        "blocks": args.blocks,
        "beta": str(beta),
        "beta_loc": str(beta_loc),
        "gamma_max": None if gamma is None else str(gamma),
        "threshold_coefficient": str(coef),
        "threshold_coefficient_nonnegative": coef >= 0,
        "certificate": bio.certificate_to_json(cert),
        "delta_check": {
            "trials": delta.trials,
            "min_slack": delta.min_slack,
            "min_delta": delta.min_delta,
            "max_expansion_residual": delta.max_expansion_residual,
        },
        "covering_norm_bounds": [lower, upper],
        "breaches": breaches,
    }
    _emit(bio.dumps(report), args)
    for b in breaches:
        print(f"BREACH {b}", file=sys.stderr)
    return EXIT_BREACH if breaches else EXIT_OK


# --- bell-check --------------------------------------------------------------


def cmd_bell_check(args) -> int:
    name = args.functional
    try:
        if name in bellcheck.BUILTIN:
            phi = bellcheck.BUILTIN[name]()
        else:
            phi = bio.functional_from_json(json.loads(Path(name).read_text()))
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load functional: {exc}") from None
    n = phi.scenario.n_sites
    try:
        if args.povms:
            povms = bio.povms_from_json(json.loads(Path(args.povms).read_text()))
        elif name == "chsh":
            povms = bellcheck.chsh_assemblage()
        elif name == "mermin":
            povms = bellcheck.mermin_assemblage(n)
        else:
            raise UsageError("a functional file needs --povms")
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load POVMs: {exc}") from None
    d = povms.local_dims()[0]
    if any(x != d for x in povms.local_dims()):
        raise UsageError("noisy GHZ states need equal local dimensions")
    beta = parse_beta(args.beta or "1")
    state = states.noisy_mixture(states.NoisyMixtureSpec(float(beta), states.ghz_state(d, n)))
    try:
        sup, inf = bellcheck.lhv_constants(phi)
        avg = bellcheck.quantum_average(phi, state, povms)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    bound = max(abs(sup), abs(inf))
    ratio = abs(avg) / bound if bound else None
    violation = ratio is not None and ratio > 1 + 1e-10
    beta_loc = bounds.beta_loc_ghz(d, n)
    breach = violation and beta <= beta_loc
    report = {
        "command": "bell-check",
        "functional": name,
        "d": d,
        "n_sites": n,
        "beta": str(beta),
        "lhv_sup": sup,
        "lhv_inf": inf,
        "lhv_bound": bound,
        "quantum_average": avg,
        "violation_ratio": ratio,
        "verdict": "VIOLATION" if violation else "no violation",
        "beta_loc_ghz": str(beta_loc),
    }
    if args.format == "csv":
        _emit(_render([report], list(report), "csv"), args)
    else:
        _emit(bio.dumps(report), args)
    if breach:
        print("BREACH violation ratio above 1 at or below the GHZ locality threshold", file=sys.stderr)
        return EXIT_BREACH
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellloc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, d="2", n="3", fmt="json"):
        sp.add_argument("--d", default=d, help="local dimension (or range like 2..5)")
        sp.add_argument("--n", default=n, help="number of sites (or range)")
        sp.add_argument("--format", choices=["json", "csv"], default=fmt)
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("bounds-table", help="closed-form thresholds on a (d, N) grid")
    common(sp, fmt="csv")
    sp.add_argument("--gamma", help="largest branch weight for the pure-state bound, e.g. 1/2")
    sp.set_defaults(func=cmd_bounds_table)

    sp = sub.add_parser("gap-scan", help="maximal locality/separability gap on a grid")
    common(sp, fmt="csv")
    sp.set_defaults(func=cmd_gap_scan)

    sp = sub.add_parser("verify-dilation", help="check source-operator identities numerically")
    common(sp)
    sp.add_argument("--profile", help="settings per site, e.g. 1,2,2")
    sp.add_argument("--beta", help="mixture weight (default: 0, GHZ threshold, 1)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--state", help="pure-state JSON for the pure family (default: random)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("certify", help="tensor-positivity certificate for a noisy source operator")
    common(sp)
    sp.add_argument("--family", choices=["ghz", "pure"], default="ghz")
    sp.add_argument("--state", help="pure-state JSON (required for --family pure)")
    sp.add_argument("--profile")
    sp.add_argument("--beta", default="0")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=int, default=64)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--blocks", choices=["site", "copy"], default="site",
                    help="product structure: one factor per site block or per copy")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("bell-check", help="LHV bound and quantum value of a fixed functional")
    common(sp)
    sp.add_argument("--functional", default="mermin", help="chsh, mermin, or a JSON file")
    sp.add_argument("--povms", help="POVM JSON (builtins bring their own)")
    sp.add_argument("--beta", help="white-noise mixing weight of the GHZ state (default 1)")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_bell_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for attr in ("trials", "restarts"):
        if getattr(args, attr, 1) is not None and getattr(args, attr, 1) < 1:
            print(f"error: --{attr} must be >= 1", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
