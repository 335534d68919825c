"""Command-line entry point: ``lpmhd <subcommand> ...``.

Exit codes: 0 success, 2 invariant failure, 3 input error.
"""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path

from . import checks
from .field_gen import SpectrumSpec, named_flow, random_divfree, random_pair, single_mode
from .grid import Grid, SpectralVectorField, make_grid, read_lpf, write_lpf
from .identity_lab import (
    DivergenceError,
    compute_I_terms,
    compute_J_bounds,
    energy_identity,
    liouville_conditions,
    mhd_residual,
    TermEvaluator,
    transport_identities,
)
from .littlewood_paley import build_lp_profile, decompose
from .norms import bernstein_check, besov_norm, gradient_l2, lebesgue_norm, sobolev_norm
from .report import ARTIFACT_VERSION, RunManifest, dumps, make_report, write_report

log = logging.getLogger("lpmhd")

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT = 0, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_box(text: str) -> float:
    """``'4pi'``, ``'4*pi'``, ``'pi'`` or a plain number."""
    t = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([0-9]*\.?[0-9]*)\*?pi", t)
    try:
        if m:
            return (float(m.group(1)) if m.group(1) else 1.0) * math.pi
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse box length {text!r}") from None


def parse_seeds(text: str) -> list[int]:
    """``'7'``, ``'0,3,5'`` or an inclusive range ``'0-49'``."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if re.fullmatch(r"\d+-\d+", part):
                a, b = (int(x) for x in part.split("-"))
                out.extend(range(a, b + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse seeds {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def parse_tolerance(text: str) -> tuple[str, float]:
    name, _, val = text.partition("=")
    try:
        return name.strip(), float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance must be name=value, got {text!r}") from None


def _grid(args) -> Grid:
    try:
        return make_grid(args.grid, args.box)
    except ValueError as e:
        raise InputError(str(e)) from None


def _read(path) -> SpectralVectorField:
    try:
        f = read_lpf(path)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read field file {path}: {e}") from None
    if not isinstance(f, SpectralVectorField):
        raise InputError(f"{path} holds a scalar field; a vector field is required")
    return f


def _spec(args, seed) -> SpectrumSpec:
    band = None
    if args.kmin is not None or args.kmax is not None:
        if args.kmin is None or args.kmax is None:
            raise InputError("--kmin and --kmax must be given together")
        band = (args.kmin, args.kmax)
    return SpectrumSpec(kind=args.spectrum, alpha=args.alpha, band=band, seed=seed)


def _field(args, which: str = "u") -> SpectralVectorField:
    """Field from ``--u/--B``, ``--input``, a named flow, or the generator."""
    path = getattr(args, which, None) or (getattr(args, "input", None) if which == "u" else None)
    if path:
        return _read(path)
    g = _grid(args)
    named = getattr(args, "named", None)
    if named == "zero":
        return SpectralVectorField.zeros(g)
    if named == "cos":
        return single_mode(g, axis=1, direction=0)
    if named in ("abc", "taylor_green"):
        try:
            return named_flow(g, named)
        except ValueError as e:
            raise InputError(str(e)) from None
    seed = args.seeds[0] if args.seeds else 0
    try:
        return random_divfree(g, _spec(args, seed), stream=0 if which == "u" else 1)
    except ValueError as e:
        raise InputError(str(e)) from None


def _pair(args):
    u = _field(args, "u")
    if getattr(args, "B", None):
        B = _read(args.B)
    elif getattr(args, "named", None) or getattr(args, "input", None) or getattr(args, "u", None):
        B = SpectralVectorField.zeros(u.grid)
    else:
        B = _field(args, "B")
    if B.grid != u.grid:
        raise InputError("u and B live on different grids")
    return u, B


def _manifest(args, grid: Grid, profile, tolerances=None) -> RunManifest:
    return RunManifest(
        command=args.command,
        grid=grid.summary(),
        profile=profile.summary(),
        seeds=list(args.seeds or []),
        tolerances=dict(sorted((tolerances or {}).items())),
        artifact_version=ARTIFACT_VERSION,
    )


def _emit(args, report: dict, name: str):
    if args.out:
        for p in write_report(report, args.out, name, args.format):
            log.info("wrote %s", p)
    else:
        sys.stdout.write(dumps(report))


def _ks(args, profile):
    if getattr(args, "sweep", False) or getattr(args, "k", None) is None:
        return list(profile.k_range)
    if not (profile.k_min <= args.k <= profile.k_max):
        raise InputError(f"k={args.k} outside [{profile.k_min}, {profile.k_max}]")
    return [args.k]


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    g = _grid(args)
    profile = build_lp_profile(g)
    seed = args.seeds[0] if args.seeds else 0
    if args.named:
        u = _field(args, "u")
        B = SpectralVectorField.zeros(g)
    else:
        try:
            u, B = random_pair(g, _spec(args, seed))
        except ValueError as e:
            raise InputError(str(e)) from None
    results = {"u": {"dirichlet": gradient_l2(u), "divergence_defect": u.divergence_defect()},
               "B": {"dirichlet": gradient_l2(B), "divergence_defect": B.divergence_defect()}}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_lpf(out / "u.lpf", u)
        write_lpf(out / "B.lpf", B)
        results["files"] = ["u.lpf", "B.lpf"]
    _emit(args, make_report(_manifest(args, g, profile), results), "gen")
    return EXIT_OK


def cmd_decompose(args) -> int:
    f = _field(args)
    g = f.grid
    profile = build_lp_profile(g)
    dec = decompose(f, profile)
    shells = []
    for k in profile.k_range:
        blk = dec.blocks[k]
        sup = dec.support(k)
        shells.append({"k": k, "l2": lebesgue_norm(blk, 2.0), "support": sup})
    nonzero = [s["k"] for s in shells if s["support"] is not None]
    err = dec.reconstruct() - f
    results = {"shells": shells, "nonzero_shells": nonzero,
               "reconstruction_error": lebesgue_norm(err, 2.0)}
    _emit(args, make_report(_manifest(args, g, profile), results), "decompose")
    return EXIT_OK


def cmd_norms(args) -> int:
    f = _field(args)
    g = f.grid
    profile = build_lp_profile(g)
    results = {
        "L2": lebesgue_norm(f, 2.0),
        "L3": lebesgue_norm(f, 3.0),
        "L6": lebesgue_norm(f, 6.0),
        "Linf": lebesgue_norm(f, math.inf),
        "grad_L2": gradient_l2(f),
        "H1_homogeneous": sobolev_norm(f, 1.0),
        "B_minus1_inf_inf": besov_norm(f, -1.0, math.inf, math.inf, profile),
    }
    _emit(args, make_report(_manifest(args, g, profile), results), "norms")
    return EXIT_OK


def cmd_bernstein(args) -> int:
    f = _field(args)
    g = f.grid
    profile = build_lp_profile(g)
    try:
        rep = bernstein_check(f, profile)
    except ValueError as e:
        raise InputError(str(e)) from None
    records = [{"k": r.k, "ratio_low": r.ratio_low,
                "lp_lq": {f"{p:g}->{q:g}": v for (p, q), v in r.lp_lq.items()}} for r in rep.records]
    ok = all(0.5 <= r.ratio_low <= 2.0 and all(math.isfinite(v) for v in r.lp_lq.values())
             for r in rep.records)
    report = make_report(_manifest(args, g, profile), {"records": records},
                         "ok" if ok else "invariant_failure")
    _emit(args, report, "bernstein")
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_verify_identity(args) -> int:
    u, B = _pair(args)
    g = u.grid
    profile = build_lp_profile(g)
    tol = {"imbalance": 1e-8, "transport": 1e-10, "vanishing": 1e-12}
    tol.update(dict(args.tolerance or []))
    try:
        residual = mhd_residual(u, B)
    except DivergenceError as e:
        raise InputError(str(e)) from None
    ev = TermEvaluator(u, B, profile)
    rows = []
    ok = True
    for k in _ks(args, profile):
        ev.clear()
        idr = energy_identity(u, B, k, evaluator=ev, residual=residual)
        it = compute_I_terms(u, B, k, evaluator=ev)
        tr = transport_identities(u, B, k, evaluator=ev)
        row = {
            "k": k,
            "lhs": idr.lhs,
            "rhs_terms": idr.rhs_terms,
            "residual_corrections": idr.residual_corrections,
            "imbalance": idr.imbalance,
            "equation_imbalance": idr.equation_imbalance,
            "transport_error": tr.max_error(),
            "vanishing": it.vanishing(),
            "consistency": it.consistency(),
        }
        ok &= idr.imbalance <= tol["imbalance"]
        ok &= tr.max_error() <= tol["transport"]
        ok &= max(it.vanishing().values()) <= tol["vanishing"]
        rows.append(row)
    report = make_report(_manifest(args, g, profile, tol), {"shells": rows},
                         "ok" if ok else "invariant_failure")
    _emit(args, report, "verify-identity")
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_verify_bounds(args) -> int:
    u, B = _pair(args)
    g = u.grid
    profile = build_lp_profile(g)
    ev = TermEvaluator(u, B, profile)
    rows = []
    ok = True
    for k in _ks(args, profile):
        ev.clear()
        br = compute_J_bounds(u, B, k, args.flavor, evaluator=ev)
        terms = [{"name": t.name, "lhs": t.lhs, "envelope": t.envelope, "ratio": t.ratio} for t in br.terms]
        ok &= all(t.ratio is None or math.isfinite(t.ratio) for t in br.terms)
        rows.append({"k": k, "terms": terms, "master": br.master})
    report = make_report(_manifest(args, g, profile), {"flavor": args.flavor, "shells": rows},
                         "ok" if ok else "invariant_failure")
    _emit(args, report, f"verify-bounds-{args.flavor}")
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_conditions(args) -> int:
    u, B = _pair(args)
    g = u.grid
    profile = build_lp_profile(g)
    lo = profile.k_min if args.kmin is None else args.kmin
    hi = profile.k_max if args.kmax is None else args.kmax
    if lo > hi:
        raise InputError(f"empty k range [{lo}, {hi}]")
    series = liouville_conditions(u, B, range(lo, hi + 1), profile)
    records = [vars(r) for r in series.records]
    ok = all(r["cond_14"] <= 2.0 * r["cond_15"] * (1 + 1e-12) for r in records)
    report = make_report(_manifest(args, g, profile), {"records": records},
                         "ok" if ok else "invariant_failure")
    _emit(args, report, "conditions")
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_all_checks(args) -> int:
    g = _grid(args)
    profile = build_lp_profile(g)
    seeds = args.seeds or [0]
    res = checks.all_checks(g, seeds, args.fields, dict(args.tolerance or []))
    manifest = _manifest(args, g, profile, res["tolerances"])
    results = {k: res[k] for k in ("measurements", "verdicts", "per_seed")}
    results["fields"] = args.fields
    report = make_report(manifest, results, "ok" if res["passed"] else "invariant_failure")
    _emit(args, report, "all-checks")
    return EXIT_OK if res["passed"] else EXIT_INVARIANT


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=32, help="points per dimension (even)")
    common.add_argument("--box", type=parse_box, default=2 * math.pi, help="box length, e.g. 4pi")
    common.add_argument("--seed", "--seeds", dest="seeds", type=parse_seeds, default=None,
                        help="seed, list '0,3' or range '0-49'")
    common.add_argument("--kmin", type=int, default=None)
    common.add_argument("--kmax", type=int, default=None)
    common.add_argument("--out", default=None, help="directory for report files (stdout if absent)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tolerance", type=parse_tolerance, action="append",
                        help="override a tolerance, name=value")
    common.add_argument("-v", "--verbose", action="store_true")

    fields = argparse.ArgumentParser(add_help=False)
    fields.add_argument("--input", help="LPF1 field file")
    fields.add_argument("--u", help="LPF1 velocity file")
    fields.add_argument("--B", help="LPF1 magnetic file")
    fields.add_argument("--named", choices=("zero", "cos", "abc", "taylor_green"))
    fields.add_argument("--spectrum", choices=("power_law", "band"), default="power_law")
    fields.add_argument("--alpha", type=float, default=11.0 / 6.0)

    p = _Parser(prog="lpmhd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("gen", parents=[common, fields], help="generate a (u, B) pair").set_defaults(fn=cmd_gen)
    sub.add_parser("decompose", parents=[common, fields], help="dyadic block energies").set_defaults(fn=cmd_decompose)
    sub.add_parser("norms", parents=[common, fields], help="Lebesgue/Sobolev/Besov norms").set_defaults(fn=cmd_norms)
    sub.add_parser("bernstein", parents=[common, fields], help="per-shell Bernstein ratios").set_defaults(fn=cmd_bernstein)
    vi = sub.add_parser("verify-identity", parents=[common, fields], help="energy identity per shell")
    vi.add_argument("--k", type=int, default=None)
    vi.add_argument("--sweep", action="store_true", help="all shells in range (default)")
    vi.set_defaults(fn=cmd_verify_identity)
    vb = sub.add_parser("verify-bounds", parents=[common, fields], help="J-term envelope ratios")
    vb.add_argument("--flavor", choices=("linf", "l3"), default="linf")
    vb.add_argument("--k", type=int, default=None)
    vb.set_defaults(fn=cmd_verify_bounds)
    sub.add_parser("conditions", parents=[common, fields], help="condition sequences").set_defaults(fn=cmd_conditions)
    ac = sub.add_parser("all-checks", parents=[common], help="run every invariant")
    ac.add_argument("--fields", choices=("zero", "powerlaw"), default="powerlaw")
    ac.set_defaults(fn=cmd_all_checks)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except InputError as e:
        print(f"lpmhd: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
