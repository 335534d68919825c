"""Property checks over seeded field ensembles.

Each function returns plain dictionaries of measured quantities; deciding
pass/fail against a tolerance is left to the caller (CLI or tests).
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft

from .field_gen import SpectrumSpec, random_divfree, random_pair
from .grid import Grid, SpectralVectorField, bandwidth, exact_size, to_physical
from .identity_lab import (
    K_,
    TermEvaluator,
    _Quantities,
    compute_I_terms,
    compute_J_bounds,
    energy_identity,
    liouville_conditions,
    mhd_residual,
    tolerance_scale,
    transport_identities,
)
from .littlewood_paley import LPProfile, build_lp_profile, decompose, telescoping_error
from .norms import BERNSTEIN_PAIRS, bernstein_check

DEFAULT_TOLERANCES = {
    "reconstruction": 1e-12,
    "telescoping": 0.0,
    "support": 1e-14,
    "vanishing": 1e-12,
    "transport": 1e-10,
    "imbalance": 1e-8,
    "consistency": 1e-10,
}


def l2_defect(a, b) -> float:
    """``||a - b||_2 / ||b||_2`` computed on coefficients (0 when both vanish)."""
    den = np.sqrt((np.abs(b.coeffs) ** 2).sum())
    num = np.sqrt((np.abs(a.coeffs - b.coeffs) ** 2).sum())
    return float(num / den) if den > 0 else float(num)


def acceptance_band(profile: LPProfile) -> tuple[int, int]:
    """Dyadic band used for generated test pairs: all shells up to 2 (or k_max)."""
    return (profile.k_min, min(2, profile.k_max))


def partition_check(grid: Grid, seeds, alpha: float = 11.0 / 6.0) -> dict:
    """Worst reconstruction error and telescoping defect over seeded power-law fields."""
    profile = build_lp_profile(grid)
    worst = 0.0
    for s in seeds:
        f = random_divfree(grid, SpectrumSpec(alpha=alpha, seed=int(s)))
        rec = decompose(f, profile).reconstruct()
        worst = max(worst, l2_defect(rec, f))
    tele = 0.0
    for k in profile.k_range:
        tele = max(tele, telescoping_error(profile, k, profile.k_max + 1))
    return {"reconstruction": worst, "telescoping": tele}


def bernstein_suite(grid: Grid, seeds, alpha: float = 11.0 / 6.0) -> dict:
    profile = build_lp_profile(grid)
    lo, hi = math.inf, -math.inf
    maxima = {pair: 0.0 for pair in BERNSTEIN_PAIRS}
    for s in seeds:
        rep = bernstein_check(random_divfree(grid, SpectrumSpec(alpha=alpha, seed=int(s))), profile)
        for r in rep.records:
            lo, hi = min(lo, r.ratio_low), max(hi, r.ratio_low)
            for pair, v in r.lp_lq.items():
                maxima[pair] = max(maxima[pair], v)
    return {"ratio_low_min": lo, "ratio_low_max": hi, "maxima": maxima}


def product_support(u: SpectralVectorField, k: int, l: int, profile: LPProfile) -> dict | None:
    """Fourier support of the componentwise products ``D_l u^k_i * S_{l-2} S_k u_j``.

    The products are sampled on a grid large enough to hold their full
    spectrum without aliasing.  Returns None when either factor vanishes.
    """
    g = u.grid
    n = g.n_per_dim
    a = u.coeffs * (profile.phi_mult(l) * profile.high_mult(k))
    b = u.coeffs * (profile.psi_mult(l - 2) * profile.psi_mult(k))
    if not (np.any(a) and np.any(b)):
        return None
    K = max(bandwidth(a), bandwidth(b))
    M = exact_size(2 * K, 2 * K)
    pa = to_physical(a, n, M, K)
    pb = to_physical(b, n, M, K)
    prod = pa[:, None] * pb[None, :]
    spec = np.abs(sfft.rfftn(prod, axes=(-3, -2, -1))).max(axis=(0, 1)) / float(M) ** 3
    m = np.fft.fftfreq(M, d=1.0 / M)
    mr = np.fft.rfftfreq(M, d=1.0 / M)
    r = g.freq_spacing * np.sqrt(m[:, None, None] ** 2 + m[None, :, None] ** 2 + mr[None, None, :] ** 2)
    lo, hi = 2.0 ** (l - 2), (9.0 / 8.0) * 2.0 ** (l + 1)
    outside = (r < lo) | (r >= hi)
    top = float(spec.max())
    if top == 0.0:
        return None
    live = spec > 1e-14 * top
    return {
        "k": k,
        "l": l,
        "max": top,
        "outside_ratio": float(spec[outside].max(initial=0.0) / top),
        "r_min": float(r[live].min()),
        "r_max": float(r[live].max()),
        "annulus": (lo, hi),
    }


def support_check(u: SpectralVectorField, profile: LPProfile) -> dict:
    worst, count = 0.0, 0
    for k in profile.k_range:
        for l in range(k - 1, profile.k_max + 2):
            rec = product_support(u, k, l, profile)
            if rec is None:
                continue
            count += 1
            worst = max(worst, rec["outside_ratio"])
    return {"outside_ratio": worst, "pairs": count}


def pair_suite(u: SpectralVectorField, B: SpectralVectorField, profile: LPProfile | None = None,
               ks=None, flavors=("linf", "l3")) -> list[dict]:
    """Identity, transport, Bony and bound measurements for one (u, B) pair, per shell."""
    ev = TermEvaluator(u, B, profile)
    profile = ev.profile
    residual = mhd_residual(u, B)
    scale = tolerance_scale(u, B)
    out = []
    for k in (profile.k_range if ks is None else ks):
        ev.clear()
        q = _Quantities(ev)
        it = compute_I_terms(u, B, k, evaluator=ev)
        idr = energy_identity(u, B, k, evaluator=ev, residual=residual)
        tr = transport_identities(u, B, k, evaluator=ev)
        rec = {
            "k": k,
            "scale": scale,
            "vanishing": max(it.vanishing().values()),
            "transport": tr.max_error(),
            "imbalance": idr.imbalance,
            "equation_imbalance": max(idr.equation_imbalance.values()),
            "consistency": max(it.consistency().values()),
            "I232": it.I["I232"],
            "I232_envelope": it.I232_envelope,
            "grad_low": math.sqrt(q.g2("u", k)),
            "high_dirichlet": idr.lhs,
        }
        for flavor in flavors:
            br = compute_J_bounds(u, B, k, flavor, evaluator=ev, splits=it.splits, quantities=q)
            rec[flavor] = {
                "ratios": br.ratios(),
                "product": br.master["product"],
                "sum_J": br.master["sum_J"],
            }
        out.append(rec)
    return out


def condition_check(u, B, profile: LPProfile | None = None) -> dict:
    """Worst ``cond_14 / cond_15`` over shells; the geometric sum bounds it by 2."""
    profile = profile or build_lp_profile(u.grid)
    series = liouville_conditions(u, B, profile.k_range, profile)
    worst = 0.0
    for r in series.records:
        if r.cond_15 > 0:
            worst = max(worst, r.cond_14 / r.cond_15)
        elif r.cond_14 > 0:
            worst = math.inf
    return {"cond14_over_cond15": worst, "records": [vars(r) for r in series.records]}


def generated_pair(grid: Grid, seed: int, fields: str = "powerlaw"):
    if fields == "zero":
        z = SpectralVectorField.zeros(grid)
        return z, z
    profile = build_lp_profile(grid)
    return random_pair(grid, SpectrumSpec(seed=int(seed), band=acceptance_band(profile)))


def all_checks(grid: Grid, seeds, fields: str = "powerlaw", tolerances: dict | None = None) -> dict:
    """Run every invariant on the given grid and seeds; returns measurements and verdicts."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    profile = build_lp_profile(grid)
    seeds = [int(s) for s in seeds]
    results = {}
    verdicts = {}

    tele = max(telescoping_error(profile, k, profile.k_max + 1) for k in profile.k_range)
    results["telescoping"] = tele
    verdicts["telescoping"] = tele <= tol["telescoping"]

    rec_worst = sup_worst = 0.0
    per_seed = []
    for s in seeds:
        u, B = generated_pair(grid, s, fields)
        if fields != "zero":
            rec_worst = max(rec_worst, l2_defect(decompose(u, profile).reconstruct(), u))
            sup_worst = max(sup_worst, support_check(u, profile)["outside_ratio"])
        rows = pair_suite(u, B, profile)
        cond = condition_check(u, B, profile)
        per_seed.append({"seed": s, "shells": rows, "cond14_over_cond15": cond["cond14_over_cond15"]})
    results["reconstruction"] = rec_worst
    results["support"] = sup_worst
    verdicts["reconstruction"] = rec_worst <= tol["reconstruction"]
    verdicts["support"] = sup_worst <= tol["support"]
    for name in ("vanishing", "transport", "imbalance", "consistency"):
        worst = max((r[name] for p in per_seed for r in p["shells"]), default=0.0)
        results[name] = worst
        verdicts[name] = worst <= tol[name]
    finite = all(
        v is None or math.isfinite(v)
        for p in per_seed for r in p["shells"] for fl in ("linf", "l3") for v in r[fl]["ratios"].values()
    )
    verdicts["bounds_finite"] = finite
    c = max((p["cond14_over_cond15"] for p in per_seed), default=0.0)
    results["cond14_over_cond15"] = c
    verdicts["condition_comparison"] = c <= 2.0
    return {
        "measurements": results,
        "verdicts": verdicts,
        "passed": all(verdicts.values()),
        "per_seed": per_seed,
        "tolerances": tol,
    }
