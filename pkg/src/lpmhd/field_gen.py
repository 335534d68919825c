"""Deterministic synthetic fields.

Random draws come from a Philox counter stream keyed by ``(seed, stream)``.
Each lattice mode consumes a fixed block of raw 64-bit words at an offset given
by its flat index, so the value at a mode depends only on the key and the mode
and not on generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, SpectralVectorField, _leray, symmetrize, transform
from .norms import gradient_l2

# two normals (re, im) per component, three components, two raw words per normal
_WORDS_PER_MODE = 12


@dataclass(frozen=True)
class SpectrumSpec:
    """Envelope for :func:`random_divfree`.

    ``band`` is a dyadic range ``(kmin, kmax)``: modes with
    ``2^(kmin-1) <= |xi| <= 2^(kmax+1)`` are excited (always below the grid
    Nyquist frequency).  ``kind='shell_list'`` excites the union of the listed
    shells instead.  ``dirichlet`` rescales the result to that value of
    ``||grad u||_2``; ``None`` keeps the raw amplitude.
    """

    kind: str = "power_law"
    alpha: float = 11.0 / 6.0
    band: tuple | None = None
    seed: int = 0
    shells: tuple = ()
    dirichlet: float | None = 1.0

    def __post_init__(self):
        if self.kind not in ("power_law", "band", "shell_list"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.kind == "shell_list" and not self.shells:
            raise ValueError("shell_list spectrum needs at least one shell")
        if self.band is not None and self.band[0] > self.band[1]:
            raise ValueError(f"empty band {self.band}")


def mode_normals(seed: int, n: int, stream: int = 0) -> np.ndarray:
    """Complex standard normals of shape ``(3,n,n,n)``, one per (component, mode)."""
    bg = np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, stream], dtype=np.uint64))
    raw = bg.random_raw(_WORDS_PER_MODE * n ** 3).reshape(n ** 3, 3, 2, 2)
    # 53-bit uniforms in (0, 1]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)
    u1, u2 = u[..., 0], u[..., 1]
    r = np.sqrt(-2.0 * np.log(u1))
    z = r * np.cos(2.0 * math.pi * u2)
    z = (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)
    return np.moveaxis(z, 1, 0).reshape(3, n, n, n)


def spectrum_envelope(grid: Grid, spec: SpectrumSpec) -> np.ndarray:
    r = grid.xi_norm
    inside = (r > 0) & (r < grid.nyquist)
    if spec.kind == "shell_list":
        mask = np.zeros_like(inside)
        for k in spec.shells:
            mask |= (r >= 2.0 ** (k - 1)) & (r <= 2.0 ** (k + 1))
        inside &= mask
    elif spec.band is not None:
        lo, hi = spec.band
        inside &= (r >= 2.0 ** (lo - 1)) & (r <= 2.0 ** (hi + 1))
    env = np.zeros_like(r)
    alpha = 0.0 if spec.kind == "band" else spec.alpha
    env[inside] = r[inside] ** (-alpha)
    return env


def random_divfree(grid: Grid, spec: SpectrumSpec, stream: int = 0) -> SpectralVectorField:
    env = spectrum_envelope(grid, spec)
    if not env.any():
        raise ValueError(f"spectrum {spec} excites no lattice mode on {grid}")
    c = mode_normals(spec.seed, grid.n_per_dim, stream) * env
    c = symmetrize(_leray(grid, c))
    c[:, env == 0] = 0.0
    v = SpectralVectorField(grid, c)
    if spec.dirichlet is not None:
        g = gradient_l2(v)
        if g > 0:
            v = v * (spec.dirichlet / g)
    return v


def random_pair(grid: Grid, spec: SpectrumSpec) -> tuple[SpectralVectorField, SpectralVectorField]:
    """Independent (u, B) drawn from streams 0 and 1 of the same seed."""
    return random_divfree(grid, spec, stream=0), random_divfree(grid, spec, stream=1)


def _chop(v: SpectralVectorField, rel: float = 1e-13) -> SpectralVectorField:
    c = np.array(v.coeffs)
    top = np.abs(c).max()
    c[np.abs(c) <= rel * top] = 0.0
    return v.with_coeffs(c)


def named_flow(grid: Grid, kind: str, **params) -> SpectralVectorField:
    """ABC (``A``, ``B``, ``C``) or Taylor-Green (``amplitude``) flow with unit wavenumber."""
    ratio = grid.box_length / (2.0 * math.pi)
    if abs(ratio - round(ratio)) > 1e-12 or round(ratio) < 1:
        raise ValueError(f"box length {grid.box_length} is not a multiple of 2*pi")
    x, y, z = grid.points()
    if kind == "abc":
        A, B, C = (float(params.get(name, 1.0)) for name in ("A", "B", "C"))
        samples = np.stack([
            A * np.sin(z) + C * np.cos(y),
            B * np.sin(x) + A * np.cos(z),
            C * np.sin(y) + B * np.cos(x),
        ])
    elif kind == "taylor_green":
        a = float(params.get("amplitude", 1.0))
        samples = np.stack([
            a * np.sin(x) * np.cos(y) * np.cos(z),
            -a * np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros_like(x),
        ])
    else:
        raise ValueError(f"unknown flow kind {kind!r}")
    return _chop(transform(samples, "forward", grid))


def single_mode(grid: Grid, axis: int = 0, direction: int = 1, m: int = 1) -> SpectralVectorField:
    """Unit-amplitude ``cos(m * spacing * x_direction)`` in component ``axis``.

    With ``axis != direction`` the field is divergence-free.
    """
    n = grid.n_per_dim
    c = np.zeros((3, n, n, n), complex)
    idx = [0, 0, 0]
    idx[direction] = m % n
    c[(axis, *idx)] = 0.5
    idx[direction] = (-m) % n
    c[(axis, *idx)] = 0.5
    return SpectralVectorField(grid, c)
