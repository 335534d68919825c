"""Lebesgue, Sobolev, Besov and Dirichlet norms plus Bernstein ratio checks.

L^p norms are quadratures on the physical sample grid (optionally refined by
exact trigonometric interpolation); the L^infinity norm is the sample maximum
and therefore a lower bound for the true supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    GridMismatchError,
    SpectralField,
    SpectralVectorField,
    bandwidth,
    to_physical,
)
from .littlewood_paley import LPProfile, build_lp_profile, dyadic_block

# Sharp Sobolev constant of R^3 for ||f||_6 <= C ||grad f||_2 (Aubin-Talenti).
SOBOLEV_R3 = (1.0 / math.sqrt(3.0 * math.pi)) * (4.0 / math.sqrt(math.pi)) ** (1.0 / 3.0)

BERNSTEIN_PAIRS = ((2.0, math.inf), (2.0, 3.0), (3.0, 6.0), (2.0, 6.0))


@dataclass(frozen=True)
class NormReport:
    norm_kind: str
    parameters: dict
    value: float
    method: str

    def as_dict(self) -> dict:
        return {
            "norm_kind": self.norm_kind,
            "parameters": dict(self.parameters),
            "value": self.value,
            "method": self.method,
        }


@dataclass(frozen=True)
class BernsteinRecord:
    k: int
    ratio_low: float
    lp_lq: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BernsteinReport:
    records: tuple

    def max_ratio(self, pair) -> float:
        vals = [r.lp_lq[pair] for r in self.records]
        return max(vals) if vals else 0.0


def magnitude(f, refine: int = 1) -> np.ndarray:
    """Pointwise |f| on the (refined) sample grid."""
    n = f.grid.n_per_dim
    M = n * int(refine)
    if refine == 1:
        vals = f.physical()
    else:
        vals = to_physical(f.coeffs, n, M, bandwidth(f.coeffs))
    if isinstance(f, SpectralVectorField):
        return np.sqrt((vals ** 2).sum(axis=0))
    return np.abs(vals)


def lebesgue_norm(f, p: float, refine: int = 1) -> float:
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    mag = magnitude(f, refine)
    if math.isinf(p):
        return float(mag.max())
    M = mag.shape[-1]
    dv = (f.grid.box_length / M) ** 3
    if p == 2:
        return float(math.sqrt((mag ** 2).sum() * dv))
    top = mag.max()
    if top == 0:
        return 0.0
    # scale out the maximum so large p does not overflow
    return float(top * ((mag / top) ** p).sum() ** (1.0 / p) * dv ** (1.0 / p))


def l2_norm(f) -> float:
    """Spectral L^2 norm (Parseval)."""
    return float(math.sqrt(f.grid.volume * (np.abs(f.coeffs) ** 2).sum()))


def gradient_l2(f) -> float:
    """||grad f||_2, spectrally."""
    w = f.grid.grad_norm_sq
    return float(math.sqrt(f.grid.volume * (w * np.abs(f.coeffs) ** 2).sum()))


def _require_mean_zero(f, what: str):
    if np.any(f.coeffs[..., 0, 0, 0] != 0):
        raise ValueError(f"{what} needs a mean-zero field")


def sobolev_norm(f, s: float, method: str = "integral", profile: LPProfile | None = None) -> float:
    if s <= 0:
        _require_mean_zero(f, "homogeneous Sobolev norm with s <= 0")
    if method == "integral":
        r = f.grid.xi_norm
        w = np.zeros_like(r)
        nz = r > 0
        w[nz] = r[nz] ** (2.0 * s)
        return float(math.sqrt(f.grid.volume * (w * np.abs(f.coeffs) ** 2).sum()))
    if method == "lp_sum":
        profile = profile or build_lp_profile(f.grid)
        total = 0.0
        for k in profile.k_range:
            total += 2.0 ** (2 * k * s) * l2_norm(dyadic_block(f, k, profile)) ** 2
        return float(math.sqrt(total))
    raise ValueError(f"method must be 'integral' or 'lp_sum', got {method!r}")


def besov_norm(f, s: float, p: float, q: float, profile: LPProfile | None = None,
               refine: int = 1) -> float:
    """l^q over shells of ``2^(sk) ||Delta_k f||_p``, over the profile's range."""
    if not (p >= 1 and q >= 1):
        raise ValueError(f"need p, q >= 1, got p={p!r}, q={q!r}")
    _require_mean_zero(f, "Besov norm")
    profile = profile or build_lp_profile(f.grid)
    terms = [2.0 ** (s * k) * lebesgue_norm(dyadic_block(f, k, profile), p, refine)
             for k in profile.k_range]
    terms = np.asarray(terms)
    if math.isinf(q):
        return float(terms.max(initial=0.0))
    return float((terms ** q).sum() ** (1.0 / q))


def dirichlet_energy(u: SpectralVectorField, B: SpectralVectorField) -> float:
    """``int |grad u|^2 + |grad B|^2 dx``."""
    if u.grid != B.grid:
        raise GridMismatchError("u and B live on different grids")
    w = u.grid.grad_norm_sq
    e = (np.abs(u.coeffs) ** 2).sum(0) + (np.abs(B.coeffs) ** 2).sum(0)
    return float(u.grid.volume * (w * e).sum())


def bernstein_check(f, profile: LPProfile | None = None, refine: int = 1) -> BernsteinReport:
    """Per-shell Bernstein ratios for every nonempty block of ``f``."""
    profile = profile or build_lp_profile(f.grid)
    records = []
    for k in profile.k_range:
        blk = dyadic_block(f, k, profile)
        l2 = l2_norm(blk)
        if l2 == 0.0:
            continue
        ratio_low = gradient_l2(blk) / (2.0 ** k * l2)
        lp_lq = {}
        for p, q in BERNSTEIN_PAIRS:
            expo = 3.0 / p - (0.0 if math.isinf(q) else 3.0 / q)
            lp_lq[(p, q)] = lebesgue_norm(blk, q, refine) / (2.0 ** (k * expo) * lebesgue_norm(blk, p, refine))
        records.append(BernsteinRecord(k, ratio_low, lp_lq))
    if not records:
        raise ValueError("bernstein_check needs a field with at least one nonzero block")
    return BernsteinReport(tuple(records))


def sobolev_embedding_ratio(f) -> float:
    """``||f||_6 / ||grad f||_2`` for a mean-zero field."""
    g = gradient_l2(f)
    return lebesgue_norm(f, 6.0) / g if g > 0 else 0.0
