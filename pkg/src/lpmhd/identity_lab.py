"""Energy identity, Bony splittings and bound ladders for stationary MHD.

Notation follows the usual Littlewood-Paley conventions: ``S_k`` is the low
pass, ``f^k = f - S_k f`` the high pass, ``D_l`` a dyadic block and ``T_l`` the
widened block ``sum_{|l'-l|<=2} D_l'``.  A trilinear term
``a.grad b.c`` always means ``int a_j d_j b_i c_i dx``.

All trilinear integrals go through :class:`TermEvaluator`, which samples every
multiplier-filtered copy of ``u`` and ``B`` once on a grid where quadrature of
triple products is exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import (
    SpectralField,
    SpectralVectorField,
    _leray,
    bandwidth,
    exact_size,
    from_physical,
    gradient_inner,
    inner_product,
    to_physical,
)
from .littlewood_paley import LPProfile, build_lp_profile, floor_theta
from .norms import besov_norm, dirichlet_energy, gradient_l2, lebesgue_norm

log = logging.getLogger(__name__)

THETA = 0.75
I_NAMES = ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8",
           "I11", "I12", "I13", "I21", "I22", "I23", "I231", "I232")


class DivergenceError(ValueError):
    """Input field is not divergence-free within tolerance."""


def tolerance_scale(u: SpectralVectorField, B: SpectralVectorField) -> float:
    """``(1 + ||grad u||_2 + ||grad B||_2)^3``, the normalisation for trilinear terms."""
    return (1.0 + gradient_l2(u) + gradient_l2(B)) ** 3


def _check_pair(u, B, tol=1e-10):
    if u.grid != B.grid:
        raise ValueError("u and B live on different grids")
    for name, v in (("u", u), ("B", B)):
        if not isinstance(v, SpectralVectorField):
            raise TypeError(f"{name} must be a vector field")
        d = v.divergence_defect()
        if d > tol:
            raise DivergenceError(f"{name} has divergence defect {d:.3e} > {tol:g}")
        if np.any(v.coeffs[:, 0, 0, 0] != 0):
            log.warning("%s has a nonzero mean; it is ignored by the homogeneous operators", name)


class TermEvaluator:
    """Cache of padded physical samples for filtered copies of ``u`` and ``B``.

    A field is named by ``(base, ops)`` with ``base`` in ``{'u', 'B'}`` and
    ``ops`` a tuple of multipliers: ``('S', k)`` low pass, ``('H', k)`` high
    pass, ``('D', l)`` block, ``('T', l)`` widened block.  Multipliers commute,
    so the op order is irrelevant.

    Coefficients are held on the band box ``|m_i| <= K`` only (K the joint
    bandwidth of u and B), which keeps masking and padding cheap.  Fields with
    Nyquist content fall back to full n-grid arrays.
    """

    def __init__(self, u: SpectralVectorField, B: SpectralVectorField,
                 profile: LPProfile | None = None):
        if u.grid != B.grid:
            raise ValueError("u and B live on different grids")
        self.grid = u.grid
        self.profile = profile or build_lp_profile(self.grid)
        if self.profile.grid != self.grid:
            raise ValueError("profile belongs to another grid")
        self.u, self.B = u, B
        n = self.grid.n_per_dim
        K = max(bandwidth(u.coeffs), bandwidth(B.coeffs))
        self.bandwidth = K
        self.M = exact_size(K, K, K)
        self.dv = (self.grid.box_length / self.M) ** 3
        self.compact = K < n // 2
        if self.compact:
            self._idx = np.r_[0 : K + 1, n - K : n]
            self._sel = np.ix_(self._idx, self._idx, self._idx)
            self._dst = np.r_[0 : K + 1, self.M - K : self.M]
            self._base = {"u": u.coeffs[(slice(None), *self._sel)],
                          "B": B.coeffs[(slice(None), *self._sel)]}
            kw = self.grid.freq_spacing * np.r_[0 : K + 1, -K:0].astype(float)
            self._kw = (kw[:, None, None], kw[None, :, None], kw[None, None, :])
        else:
            self._base = {"u": u.coeffs, "B": B.coeffs}
            self._kw = self.grid.derivative_wavevector
        self._mults = {}
        self.clear()

    def clear(self):
        """Drop per-shell caches; multipliers are kept."""
        self._coeffs = {}
        self._vals = {}
        self._grads = {}
        self._adv = {}

    # -- field construction ------------------------------------------------

    @staticmethod
    def key(base: str, *ops) -> tuple:
        return (base, tuple(sorted((o[0], int(o[1])) for o in ops)))

    def _mult(self, op) -> np.ndarray:
        m = self._mults.get(op)
        if m is not None:
            return m
        kind, k = op
        p = self.profile
        if kind == "S":
            m = p.psi_mult(k)
        elif kind == "H":
            m = p.high_mult(k)
        elif kind == "D":
            m = p.phi_mult(k)
        elif kind == "T":
            m = p.tilde_mult(k)
        else:
            raise ValueError(f"unknown multiplier {op!r}")
        if self.compact:
            m = m[self._sel]
        self._mults[op] = m
        return m

    def coeffs(self, key) -> np.ndarray | None:
        """Stored coefficients of the named field, or None if it is identically zero."""
        if key in self._coeffs:
            return self._coeffs[key]
        base, ops = key
        c = self._base[base]
        if ops:
            m = self._mult(ops[0])
            for op in ops[1:]:
                m = m * self._mult(op)
            c = c * m
        c = c if np.any(c) else None
        self._coeffs[key] = c
        return c

    def spectral(self, key) -> SpectralVectorField:
        """The named field as an n-grid spectral field."""
        c = self.coeffs(key)
        if c is None:
            return SpectralVectorField.zeros(self.grid)
        if not self.compact:
            return SpectralVectorField(self.grid, c)
        n = self.grid.n_per_dim
        full = np.zeros((3, n, n, n), complex)
        full[(slice(None), *self._sel)] = c
        return SpectralVectorField(self.grid, full)

    def _physical(self, c: np.ndarray) -> np.ndarray:
        if not self.compact:
            return to_physical(c, self.grid.n_per_dim, self.M, self.bandwidth)
        K, M = self.bandwidth, self.M
        half = np.zeros(c.shape[:-3] + (M, M, M // 2 + 1), complex)
        d = self._dst
        half[(Ellipsis, *np.ix_(d, d, np.arange(K + 1)))] = c[..., : K + 1]
        return sfft.irfftn(half, s=(M, M, M), axes=(-3, -2, -1)) * float(M) ** 3

    def _values(self, key):
        v = self._vals.get(key)
        if v is None:
            v = self._physical(self.coeffs(key))
            self._vals[key] = v
        return v

    def _grad(self, key):
        g = self._grads.get(key)
        if g is None:
            c = self.coeffs(key)
            gc = np.stack([np.stack([1j * kj * ci for kj in self._kw]) for ci in c])
            g = self._physical(gc)
            self._grads[key] = g
        return g

    def _advect(self, akey, bkey):
        w = self._adv.get((akey, bkey))
        if w is None:
            a = self._values(akey)
            db = self._grad(bkey)
            w = np.einsum("jxyz,ijxyz->ixyz", a, db, optimize=True)
            self._adv[(akey, bkey)] = w
        return w

    def tri(self, akey, bkey, ckey) -> float:
        """``int a.grad b.c dx`` for named fields; exact zeros short-circuit."""
        if self.coeffs(akey) is None or self.coeffs(bkey) is None or self.coeffs(ckey) is None:
            return 0.0
        w = self._advect(akey, bkey)
        c = self._values(ckey)
        return float(np.vdot(w.ravel(), c.ravel()) * self.dv)

    @property
    def window(self) -> range:
        """Block indices carrying any lattice mode."""
        return range(self.profile.k_min, self.profile.k_max + 2)


K_ = TermEvaluator.key


# ---------------------------------------------------------------------------
# residual


def mhd_residual(u: SpectralVectorField, B: SpectralVectorField, tol: float = 1e-10):
    """Stationary MHD residuals ``(r_u, r_B, P)`` of an arbitrary field pair.

    ``r_u = -Lap u + Leray(u.grad u - B.grad B)`` and
    ``r_B = -Lap B + u.grad B - B.grad u``; ``P`` solves
    ``-Lap P = div(u.grad u - B.grad B)`` with zero mean.  Products are formed
    without aliasing and truncated to modes ``|m_i| < n/2``.
    """
    _check_pair(u, B, tol)
    g = u.grid
    n = g.n_per_dim
    K = max(bandwidth(u.coeffs), bandwidth(B.coeffs))
    K_out = min(2 * K, n // 2 - 1)
    M = exact_size(2 * K, K_out)
    kw = g.derivative_wavevector

    def grad(c):
        return np.stack([np.stack([1j * kj * ci for kj in kw]) for ci in c])

    up = to_physical(u.coeffs, n, M)
    Bp = to_physical(B.coeffs, n, M)
    dup = to_physical(grad(u.coeffs), n, M)
    dBp = to_physical(grad(B.coeffs), n, M)
    adv_u = np.einsum("jxyz,ijxyz->ixyz", up, dup) - np.einsum("jxyz,ijxyz->ixyz", Bp, dBp)
    adv_B = np.einsum("jxyz,ijxyz->ixyz", up, dBp) - np.einsum("jxyz,ijxyz->ixyz", Bp, dup)
    Nu = from_physical(adv_u, M, n, K_out)
    NB = from_physical(adv_B, M, n, K_out)
    k2 = g.xi_norm_sq
    r_u = k2 * u.coeffs + _leray(g, Nu)
    r_B = k2 * B.coeffs + NB
    div = 1j * (kw[0] * Nu[0] + kw[1] * Nu[1] + kw[2] * Nu[2])
    safe = k2.copy()
    safe[0, 0, 0] = 1.0
    P = div / safe
    P[0, 0, 0] = 0.0
    return (SpectralVectorField(g, r_u), SpectralVectorField(g, r_B), SpectralField(g, P))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class TransportReport:
    k: int
    sides: dict
    differences: dict
    scale: float

    def max_error(self) -> float:
        return max(abs(v) for v in self.differences.values()) / self.scale


@dataclass(frozen=True)
class ITermReport:
    k: int
    I: dict
    lhs_transport: dict
    theta: float = THETA
    reconstructions: dict = field(default_factory=dict)
    splits: dict = field(default_factory=dict)
    I232_envelope: float = 0.0
    scale: float = 1.0

    def consistency(self) -> dict:
        """Scaled defects of the Bony and localisation identities.

        The Bony pieces carry the sign of the integrals they split:
        ``-I1 = I11 + I12 + I13`` and ``-I2 = I21 + I22 + I23``.
        """
        I, R, s = self.I, self.reconstructions, self.scale
        return {
            "I1_bony": abs(-I["I1"] - (I["I11"] + I["I12"] + I["I13"])) / s,
            "I2_bony": abs(-I["I2"] - (I["I21"] + I["I22"] + I["I23"])) / s,
            "I23_split": abs(I["I23"] - (I["I231"] + I["I232"])) / s,
            "I1_localized": abs(I["I1"] - R["I1_localized"]) / s,
            "I2_localized": abs(I["I2"] - R["I2_localized"]) / s,
        }

    def vanishing(self) -> dict:
        return {name: abs(self.I[name]) / self.scale for name in ("I11", "I21", "I22")}


@dataclass(frozen=True)
class IdentityReport:
    k: int
    lhs: float
    rhs_terms: dict
    residual_corrections: dict
    imbalance: float
    equation_imbalance: dict
    scale: float

    @property
    def rhs_total(self) -> float:
        t = self.rhs_terms
        return (sum(t[f"I{i}"] for i in range(1, 9)) - t["cross_u"] - t["cross_B"]
                + self.residual_corrections["res_u"] + self.residual_corrections["res_B"])


@dataclass(frozen=True)
class BoundRecord:
    name: str
    lhs: float
    envelope: float
    ratio: float | None


@dataclass(frozen=True)
class BoundReport:
    k: int
    flavor: str
    terms: tuple
    master: dict

    def ratios(self) -> dict:
        return {t.name: t.ratio for t in self.terms}


@dataclass(frozen=True)
class ConditionRecord:
    k: int
    cond_14: float
    cond_15: float
    cond_16: float
    bdi_product: float
    nbdi_product: float


@dataclass(frozen=True)
class ConditionSeries:
    records: tuple

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


# ---------------------------------------------------------------------------
# term ladders


def _evaluator(u, B, profile, evaluator):
    if evaluator is not None:
        return evaluator
    return TermEvaluator(u, B, profile)


def transport_identities(u, B, k: int, profile: LPProfile | None = None,
                         evaluator: TermEvaluator | None = None) -> TransportReport:
    """Both sides of the three integration-by-parts identities at shell ``k``."""
    ev = _evaluator(u, B, profile, evaluator)
    t = ev.tri
    U, Bf = K_("u"), K_("B")
    Su, SB = K_("u", ("S", k)), K_("B", ("S", k))
    uk, Bk = K_("u", ("H", k)), K_("B", ("H", k))
    sides = {
        "eq4_lhs": -t(U, U, uk),
        "eq4_rhs": -t(Su, Su, uk) - t(uk, Su, uk),
        "eq4_expanded": -t(Su, Su, uk) - t(uk, Su, uk) - t(U, uk, uk),
        "eq5_lhs": -t(U, Bf, Bk),
        "eq5_rhs": -t(Su, SB, Bk) - t(uk, SB, Bk),
        "eq5_expanded": -t(Su, SB, Bk) - t(uk, SB, Bk) - t(U, Bk, Bk),
        "eq6_lhs": t(Bf, Bf, uk) + t(Bf, U, Bk),
        "eq6_rhs": t(SB, SB, uk) + t(Bk, SB, uk) + t(SB, Su, Bk) + t(Bk, Su, Bk),
    }
    diffs = {
        "eq4": sides["eq4_lhs"] - sides["eq4_rhs"],
        "eq4_expanded": sides["eq4_lhs"] - sides["eq4_expanded"],
        "eq5": sides["eq5_lhs"] - sides["eq5_rhs"],
        "eq5_expanded": sides["eq5_lhs"] - sides["eq5_expanded"],
        "eq6": sides["eq6_lhs"] - sides["eq6_rhs"],
    }
    return TransportReport(k, sides, diffs, tolerance_scale(ev.u, ev.B))


def low_split(ev: TermEvaluator, f: str, g: str, h: str, k: int) -> dict:
    """Bony pieces of ``int S_k f . grad S_k g . h^k``."""
    t = ev.tri
    Sg = K_(g, ("S", k))
    win = ev.window
    out = {"direct": t(K_(f, ("S", k)), Sg, K_(h, ("H", k)))}
    out["P1"] = sum(t(K_(f, ("S", k), ("D", l)), Sg, K_(h, ("H", k), ("S", l - 2))) for l in win)
    out["P2"] = sum(t(K_(f, ("S", k), ("S", l - 2)), Sg, K_(h, ("H", k), ("D", l))) for l in win)
    out["P3"] = sum(t(K_(f, ("S", k), ("D", l)), Sg, K_(h, ("H", k), ("T", l))) for l in win)
    out["P2_localized"] = sum(
        t(K_(f, ("S", k), ("S", l - 2)), K_(g, ("D", lp)), K_(h, ("H", k), ("D", l)))
        for l in range(k - 1, k + 2)
        for lp in range(l - 2, k)
    )
    out["P3_localized"] = sum(
        t(K_(f, ("S", k), ("D", l)), Sg, K_(h, ("H", k), ("T", l))) for l in range(k - 3, k + 1)
    )
    return out


def high_split(ev: TermEvaluator, f: str, g: str, h: str, k: int, theta: float = THETA) -> dict:
    """Bony pieces of ``int f^k . grad S_k g . h^k`` with the resonant tail split at ``[theta k]``."""
    t = ev.tri
    Sg = K_(g, ("S", k))
    win = ev.window
    split = floor_theta(k, theta)

    def res(l):
        return t(K_(f, ("H", k), ("T", l)), Sg, K_(h, ("H", k), ("D", l)))

    out = {"direct": t(K_(f, ("H", k)), Sg, K_(h, ("H", k)))}
    out["Q1"] = sum(t(K_(f, ("H", k), ("D", l)), Sg, K_(h, ("H", k), ("S", l - 2))) for l in win)
    out["Q2"] = sum(t(K_(f, ("H", k), ("S", l - 2)), Sg, K_(h, ("H", k), ("D", l))) for l in win)
    top = max(win.stop, k + 2)
    out["Q3_below"] = sum(res(l) for l in range(win.start, k - 1))
    out["Q31"] = sum(res(l) for l in range(k - 1, split + 1))
    out["Q32"] = sum(res(l) for l in range(max(k - 1, split + 1), top))
    out["Q3"] = out["Q3_below"] + out["Q31"] + out["Q32"]
    return out


# sign and (f, g, h) of each I term: I = sign * int f . grad S_k g . h^k (low or high f)
_LOW = {"I1": (-1.0, "u", "u", "u"), "I3": (-1.0, "u", "B", "B"),
        "I5": (1.0, "B", "B", "u"), "I7": (1.0, "B", "u", "B")}
_HIGH = {"I2": (-1.0, "u", "u", "u"), "I4": (-1.0, "u", "B", "B"),
         "I6": (1.0, "B", "B", "u"), "I8": (1.0, "B", "u", "B")}


def compute_I_terms(u, B, k: int, profile: LPProfile | None = None,
                    evaluator: TermEvaluator | None = None) -> ITermReport:
    ev = _evaluator(u, B, profile, evaluator)
    p = ev.profile
    if not (p.k_min <= k <= p.k_max):
        raise ValueError(f"k={k} outside profile range [{p.k_min}, {p.k_max}]")
    splits = {}
    I = {}
    for name, (sign, f, g, h) in _LOW.items():
        s = low_split(ev, f, g, h, k)
        splits[name] = s
        I[name] = sign * s["direct"]
    for name, (sign, f, g, h) in _HIGH.items():
        s = high_split(ev, f, g, h, k)
        splits[name] = s
        I[name] = sign * s["direct"]
    s1, s2 = splits["I1"], splits["I2"]
    I.update(I11=s1["P1"], I12=s1["P2"], I13=s1["P3"],
             I21=s2["Q1"], I22=s2["Q2"], I23=s2["Q3"], I231=s2["Q31"], I232=s2["Q32"])
    recon = {
        "I1_localized": -(s1["P2_localized"] + s1["P3_localized"]),
        "I2_localized": -(s2["Q31"] + s2["Q32"]),
    }
    tr = transport_identities(u, B, k, evaluator=ev)
    env = 2.0 ** ((1.5 - 2 * THETA) * k) * gradient_l2(ev.spectral(K_("u", ("S", k)))) * gradient_l2(ev.u) ** 2
    return ITermReport(k=k, I=I, lhs_transport=tr.sides, reconstructions=recon, splits=splits,
                       I232_envelope=env, scale=tolerance_scale(ev.u, ev.B))


def energy_identity(u, B, k: int, profile: LPProfile | None = None,
                    evaluator: TermEvaluator | None = None, residual=None) -> IdentityReport:
    """Residual-corrected high-pass energy identity at shell ``k``.

    ``int |grad u^k|^2 + |grad B^k|^2`` is compared with the eight trilinear
    terms, the cross-gradient terms and the pairings of the MHD residuals with
    ``u^k`` and ``B^k``.  For an exact solution the residual pairings vanish.
    """
    ev = _evaluator(u, B, profile, evaluator)
    u, B = ev.u, ev.B
    r_u, r_B, _ = residual if residual is not None else mhd_residual(u, B)
    t = ev.tri
    U, Bf = K_("u"), K_("B")
    uk_key, Bk_key = K_("u", ("H", k)), K_("B", ("H", k))
    uk, Bk = ev.spectral(uk_key), ev.spectral(Bk_key)
    Su, SB = ev.spectral(K_("u", ("S", k))), ev.spectral(K_("B", ("S", k)))
    lhs = gradient_inner(uk, uk) + gradient_inner(Bk, Bk)
    terms = {}
    for name, (sign, f, g, h) in _LOW.items():
        terms[name] = sign * t(K_(f, ("S", k)), K_(g, ("S", k)), K_(h, ("H", k)))
    for name, (sign, f, g, h) in _HIGH.items():
        terms[name] = sign * t(K_(f, ("H", k)), K_(g, ("S", k)), K_(h, ("H", k)))
    terms["cross_u"] = gradient_inner(Su, uk)
    terms["cross_B"] = gradient_inner(SB, Bk)
    corr = {"res_u": inner_product(r_u, uk), "res_B": inner_product(r_B, Bk)}
    scale = tolerance_scale(u, B)
    eq1 = gradient_inner(u, uk) - (corr["res_u"] - t(U, U, uk_key) + t(Bf, Bf, uk_key))
    eq2 = gradient_inner(B, Bk) - (corr["res_B"] - t(U, Bf, Bk_key) + t(Bf, U, Bk_key))
    rhs = (sum(terms[f"I{i}"] for i in range(1, 9)) - terms["cross_u"] - terms["cross_B"]
           + corr["res_u"] + corr["res_B"])
    return IdentityReport(k=k, lhs=lhs, rhs_terms=terms, residual_corrections=corr,
                          imbalance=abs(lhs - rhs) / scale,
                          equation_imbalance={"eq1": abs(eq1) / scale, "eq2": abs(eq2) / scale},
                          scale=scale)


# ---------------------------------------------------------------------------
# bound ladders


class _Quantities:
    """Memoised norms of low-passed fields used by the envelopes."""

    def __init__(self, ev: TermEvaluator):
        self.ev = ev
        self._c = {}

    def _get(self, kind, base, j):
        key = (kind, base, j)
        if key not in self._c:
            f = self.ev.spectral(K_(base, ("S", j)))
            if kind == "inf":
                self._c[key] = lebesgue_norm(f, math.inf)
            elif kind == "l3":
                self._c[key] = lebesgue_norm(f, 3.0)
            else:
                self._c[key] = gradient_l2(f) ** 2
        return self._c[key]

    def inf(self, base, j):
        return self._get("inf", base, j)

    def l3(self, base, j):
        return self._get("l3", base, j)

    def g2(self, base, j):
        """``||grad S_j base||_2^2``."""
        return self._get("g2", base, j)


def j_terms(ev: TermEvaluator, k: int, splits: dict | None = None) -> dict:
    """The eight localised sums J1..J8 at shell ``k``."""
    if splits is None:
        splits = {}
        for name, (_, f, g, h) in _LOW.items():
            splits[name] = low_split(ev, f, g, h, k)
        for name, (_, f, g, h) in _HIGH.items():
            splits[name] = high_split(ev, f, g, h, k)
    J = {}
    for i, name in zip((1, 2, 3, 4), ("I1", "I3", "I5", "I7")):
        sign = _LOW[name][0]
        s = splits[name]
        J[f"J{i}"] = sign * (s["P2_localized"] + s["P3_localized"])
    for i, name in zip((5, 6, 7, 8), ("I2", "I4", "I6", "I8")):
        J[f"J{i}"] = _HIGH[name][0] * splits[name]["Q31"]
    return J


def envelopes(q: _Quantities, k: int, flavor: str) -> tuple[dict, float]:
    m = floor_theta(k)
    if flavor == "linf":
        w = 2.0 ** (-k)
        iu, iB = q.inf("u", k), q.inf("B", k)
        hi = q.g2("u", k + 3) + q.g2("B", k + 3)
        mid = q.g2("u", m + 3) + q.g2("B", m + 3)
        env = {
            "J1": w * iu * q.g2("u", k + 3),
            "J2": w * (iu + iB) * hi,
            "J3": w * iB * hi,
            "J4": w * (iu + iB) * hi,
            "J5": w * iu * q.g2("u", m + 3),
            "J6": w * iB * mid,
            "J7": w * iB * mid,
            "J8": w * iu * q.g2("B", m + 3),
        }
        product = w * (iu + iB) * mid
        return env, product
    if flavor == "l3":
        a0, a1, a3 = q.l3("u", k), q.l3("u", m + 1), q.l3("u", m + 3)
        env = {
            "J1": a0 * (q.g2("u", k) + q.g2("u", k + 3)),
            "J2": a0 * (q.g2("B", k) + q.g2("B", k + 3)),
            "J3": q.l3("u", k + 3) * (q.g2("B", k) + q.g2("B", k + 3)),
            "J4": a0 * (q.g2("B", k) + q.g2("B", k + 3)),
            "J5": a0 * q.g2("u", m + 3),
            "J6": a3 * (q.g2("B", k) + q.g2("B", m + 1)),
            "J7": a1 * (q.g2("B", k) + q.g2("B", m + 3)),
            "J8": a0 * (q.g2("B", m + 1) + q.g2("B", m + 3)),
        }
        energy = (q.g2("u", k) + q.g2("u", k + 3) + q.g2("B", k) + q.g2("B", k + 3)
                  + q.g2("u", m + 1) + q.g2("B", m + 1) + q.g2("B", m + 3))
        return env, (a0 + a1 + a3) * energy
    raise ValueError(f"flavor must be 'linf' or 'l3', got {flavor!r}")


def compute_J_bounds(u, B, k: int, flavor: str = "linf", profile: LPProfile | None = None,
                     evaluator: TermEvaluator | None = None, splits: dict | None = None,
                     quantities: _Quantities | None = None) -> BoundReport:
    ev = _evaluator(u, B, profile, evaluator)
    p = ev.profile
    if not (p.k_min <= k <= p.k_max):
        raise ValueError(f"k={k} outside profile range [{p.k_min}, {p.k_max}]")
    J = j_terms(ev, k, splits)
    q = quantities or _Quantities(ev)
    env, product = envelopes(q, k, flavor)
    scale = tolerance_scale(ev.u, ev.B)
    terms = []
    for name in sorted(J):
        lhs = abs(J[name])
        e = env[name]
        if e > 0:
            ratio = lhs / e
        elif lhs <= 1e-12 * scale:
            ratio = None
        else:
            ratio = math.inf
        terms.append(BoundRecord(name, lhs, e, ratio))
    master = {
        "D": dirichlet_energy(ev.u, ev.B),
        "product": product,
        "sum_J": sum(J.values()),
    }
    return BoundReport(k, flavor, tuple(terms), master)


def liouville_conditions(u, B, ks, profile: LPProfile | None = None) -> ConditionSeries:
    """Condition quantities per shell, reported in decreasing ``k``."""
    ks = sorted({int(k) for k in ks}, reverse=True)
    if not ks:
        raise ValueError("empty k range")
    ev = TermEvaluator(u, B, profile)
    p = ev.profile
    q = _Quantities(ev)
    records = []
    for k in ks:
        Su = ev.spectral(K_("u", ("S", k)))
        SB = ev.spectral(K_("B", ("S", k)))
        c14 = 2.0 ** (-k) * (q.inf("u", k) + q.inf("B", k))
        c15 = besov_norm(Su, -1.0, math.inf, math.inf, p) + besov_norm(SB, -1.0, math.inf, math.inf, p)
        _, bdi = envelopes(q, k, "linf")
        _, nbdi = envelopes(q, k, "l3")
        records.append(ConditionRecord(k, c14, c15, q.l3("u", k), bdi, nbdi))
    return ConditionSeries(tuple(records))
