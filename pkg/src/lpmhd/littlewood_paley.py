"""Homogeneous Littlewood-Paley blocks on the periodic lattice.

The cutoff ``psi`` is the exp(-1/t) smooth step: 1 on ``|xi| <= 1/2``, 0 on
``|xi| >= 1``.  ``phi(xi) = psi(xi/2) - psi(xi)`` is supported in the open
annulus ``1/2 < |xi| < 2``.  Block multipliers are stored per dyadic index as
``psi(2^-k xi_m)`` and ``phi(2^-k xi_m)``; the latter is the literal difference
of the stored cutoffs, so telescoping sums are exact in floating point.

The mean mode is excluded from every homogeneous multiplier (``psi`` is taken
as 0 at ``xi = 0``), so ``S_k f -> 0`` as ``k`` decreases even for fields with a
nonzero mean.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .grid import Grid, GridMismatchError, SpectralField, SpectralVectorField

log = logging.getLogger(__name__)

PSI_TAG = "exp-smoothstep/v1"


def _h(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t: np.ndarray) -> np.ndarray:
    """0 for t <= 0, 1 for t >= 1, C-infinity in between."""
    t = np.asarray(t, dtype=float)
    a = _h(t)
    b = _h(1.0 - t)
    return a / (a + b)


def psi(r) -> np.ndarray:
    """Radial cutoff evaluated at ``|xi| = r``."""
    r = np.asarray(r, dtype=float)
    out = np.where(r <= 0.5, 1.0, 0.0)
    mid = (r > 0.5) & (r < 1.0)
    if np.any(mid):
        out = out.copy()
        out[mid] = smooth_step(2.0 * (1.0 - r[mid]))
    return out


def phi(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return psi(0.5 * r) - psi(r)


def floor_theta(k: int, theta: float = 0.75) -> int:
    """``[theta k]`` rounded toward minus infinity (matters for negative k)."""
    if theta == 0.75:
        return (3 * int(k)) // 4
    return math.floor(theta * k)


@dataclass(frozen=True, eq=False)
class LPProfile:
    """Per-mode cutoff and block multipliers for one grid.

    ``k_min`` is the lowest shell that meets a nonzero lattice point and
    ``k_max`` the highest with ``2^(k-1) < nyquist``.  Multipliers outside that
    range are still available (computed on demand) so sums over all of Z can be
    written over any finite window.
    """

    grid: Grid
    k_min: int
    k_max: int
    _psi: dict = field(default_factory=dict, repr=False)
    _phi: dict = field(default_factory=dict, repr=False)
    _tilde: dict = field(default_factory=dict, repr=False)

    @property
    def k_range(self) -> range:
        return range(self.k_min, self.k_max + 1)

    @property
    def psi_multipliers(self) -> dict:
        return {k: self.psi_mult(k) for k in self.k_range}

    @property
    def phi_multipliers(self) -> dict:
        return {k: self.phi_mult(k) for k in self.k_range}

    def psi_mult(self, k: int) -> np.ndarray:
        k = int(k)
        m = self._psi.get(k)
        if m is None:
            m = psi(self.grid.xi_norm * 2.0 ** (-k))
            m[0, 0, 0] = 0.0
            m.flags.writeable = False
            self._psi[k] = m
        return m

    def phi_mult(self, k: int) -> np.ndarray:
        k = int(k)
        m = self._phi.get(k)
        if m is None:
            m = self.psi_mult(k + 1) - self.psi_mult(k)
            m.flags.writeable = False
            self._phi[k] = m
        return m

    def tilde_mult(self, k: int) -> np.ndarray:
        """``sum_{|l-k| <= 2} phi(2^-l xi)``."""
        k = int(k)
        m = self._tilde.get(k)
        if m is None:
            m = self.phi_mult(k - 2).copy()
            for l in range(k - 1, k + 3):
                m = m + self.phi_mult(l)
            m.flags.writeable = False
            self._tilde[k] = m
        return m

    def high_mult(self, k: int) -> np.ndarray:
        return 1.0 - self.psi_mult(k)

    def block_support(self, k: int) -> tuple[float, float]:
        return (2.0 ** (k - 1), 2.0 ** (k + 1))

    def summary(self) -> dict:
        return {"psi": PSI_TAG, "k_min": self.k_min, "k_max": self.k_max}


def build_lp_profile(grid: Grid) -> LPProfile:
    spacing = grid.freq_spacing
    # smallest k whose open annulus (2^(k-1), 2^(k+1)) holds the shortest lattice vector
    k_min = math.floor(math.log2(spacing))
    while 2.0 ** (k_min + 1) <= spacing:
        k_min += 1
    while 2.0 ** k_min > spacing:
        k_min -= 1
    k_max = math.ceil(math.log2(grid.nyquist))
    while 2.0 ** (k_max - 1) >= grid.nyquist:
        k_max -= 1
    while 2.0 ** k_max < grid.nyquist:
        k_max += 1
    if k_max < k_min:
        raise ValueError(f"grid {grid} is too small to host any dyadic annulus")
    prof = LPProfile(grid, k_min, k_max)
    log.debug("LP profile on %s: k in [%d, %d]", grid, k_min, k_max)
    return prof


def _check_profile(f, profile: LPProfile):
    if f.grid != profile.grid:
        raise GridMismatchError("field and profile live on different grids")


def _warn_mean(f):
    if np.any(f.coeffs[..., 0, 0, 0] != 0):
        log.warning("field has a nonzero mean; homogeneous operators ignore it")


def apply_multiplier(f, mult: np.ndarray):
    return f.with_coeffs(f.coeffs * mult)


def dyadic_block(f, k: int, profile: LPProfile, width: str = "standard"):
    """``Delta_k f`` (``width='standard'``) or the widened block (``'tilde'``)."""
    _check_profile(f, profile)
    if width == "standard":
        return apply_multiplier(f, profile.phi_mult(k))
    if width == "tilde":
        return apply_multiplier(f, profile.tilde_mult(k))
    raise ValueError(f"width must be 'standard' or 'tilde', got {width!r}")


def low_pass(f, k: int, profile: LPProfile):
    """``S_k f``: multiply by ``psi(2^-k xi)``."""
    _check_profile(f, profile)
    return apply_multiplier(f, profile.psi_mult(k))


def high_pass(f, k: int, profile: LPProfile):
    """``f^k = f - S_k f``."""
    _check_profile(f, profile)
    _warn_mean(f)
    return f.with_coeffs(f.coeffs - f.coeffs * profile.psi_mult(k))


@dataclass(frozen=True, eq=False)
class DyadicDecomposition:
    profile: LPProfile
    blocks: dict
    source_mean_zero: bool

    def reconstruct(self):
        ks = sorted(self.blocks)
        total = self.blocks[ks[0]].coeffs.copy()
        for k in ks[1:]:
            total = total + self.blocks[k].coeffs
        return self.blocks[ks[0]].with_coeffs(total)

    def support(self, k: int) -> tuple[float, float] | None:
        """Smallest and largest |xi| carrying a nonzero coefficient of block k."""
        c = self.blocks[k].coeffs
        nz = np.abs(c) > 0
        while nz.ndim > 3:
            nz = nz.any(axis=0)
        if not nz.any():
            return None
        r = self.profile.grid.xi_norm[nz]
        return float(r.min()), float(r.max())


def decompose(f, profile: LPProfile, ks: Iterable[int] | None = None) -> DyadicDecomposition:
    _check_profile(f, profile)
    ks = profile.k_range if ks is None else ks
    blocks = {int(k): dyadic_block(f, k, profile) for k in ks}
    mean_zero = not np.any(f.coeffs[..., 0, 0, 0] != 0)
    return DyadicDecomposition(profile, blocks, mean_zero)


def telescoping_error(profile: LPProfile, k: int, K: int) -> float:
    """max over modes of |psi_k + sum_{l=k}^K phi_l - psi_{K+1}|."""
    acc = profile.psi_mult(k).copy()
    for l in range(k, K + 1):
        acc = acc + profile.phi_mult(l)
    return float(np.abs(acc - profile.psi_mult(K + 1)).max())
