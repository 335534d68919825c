"""Periodic-box spectral substrate.

Fields are stored as Fourier series coefficients on the lattice
``xi_m = freq_spacing * m`` with ``-n/2 <= m_i < n/2``, in numpy FFT index
order.  The convention is

    f(x) = sum_m  fhat_m exp(i xi_m . x),   fhat_m = L^-3 int f exp(-i xi_m . x) dx

so Parseval reads ``L^-3 int |f|^2 = sum |fhat|^2``.

Derivatives use the multiplier ``i xi``, except along an axis whose mode index
is the Nyquist index ``-n/2``: there the multiplier is set to zero, which keeps
derivatives of real fields real.  The Laplacian keeps the full ``-|xi|^2``.

Nonlinear integrals are evaluated by quadrature on a padded grid large enough
that the quadrature is exact for the band-limited integrand.
"""

from __future__ import annotations

import logging
import math
import struct
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
import scipy.fft as sfft

log = logging.getLogger(__name__)

__all__ = [
    "Grid",
    "SpectralField",
    "SpectralVectorField",
    "GridMismatchError",
    "PaddingOverflowError",
    "make_grid",
    "transform",
    "apply_differential",
    "leray_project",
    "inner_product",
    "trilinear",
    "bandwidth",
    "exact_size",
    "to_physical",
    "symmetrize",
    "read_lpf",
    "write_lpf",
]


class GridMismatchError(ValueError):
    """Operands live on different grids or have the wrong shape."""


class PaddingOverflowError(ValueError):
    """Requested padded grid cannot integrate the product exactly."""


@dataclass(frozen=True)
class Grid:
    n_per_dim: int
    box_length: float

    def __post_init__(self):
        n = self.n_per_dim
        if not isinstance(n, (int, np.integer)) or n < 4 or n % 2:
            raise ValueError(f"n_per_dim must be an even integer >= 4, got {n!r}")
        if not (self.box_length > 0 and math.isfinite(self.box_length)):
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")
        object.__setattr__(self, "n_per_dim", int(n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def freq_spacing(self) -> float:
        return 2.0 * math.pi / self.box_length

    @property
    def nyquist(self) -> float:
        return math.pi * self.n_per_dim / self.box_length

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_per_dim
        return (n, n, n)

    @property
    def volume(self) -> float:
        return self.box_length ** 3

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers along one axis, FFT order."""
        n = self.n_per_dim
        m = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        m.flags.writeable = False
        return m

    @cached_property
    def wavevector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable xi components (n,1,1), (1,n,1), (1,1,n)."""
        k = self.freq_spacing * self.mode_index.astype(float)
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def derivative_wavevector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.freq_spacing * self.mode_index.astype(float)
        k = k.copy()
        k[self.n_per_dim // 2] = 0.0
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def xi_norm(self) -> np.ndarray:
        kx, ky, kz = self.wavevector
        r = np.sqrt(kx ** 2 + ky ** 2 + kz ** 2)
        r.flags.writeable = False
        return r

    @cached_property
    def xi_norm_sq(self) -> np.ndarray:
        kx, ky, kz = self.wavevector
        r = kx ** 2 + ky ** 2 + kz ** 2
        r.flags.writeable = False
        return r

    @cached_property
    def grad_norm_sq(self) -> np.ndarray:
        """|i xi|^2 with the Nyquist rows removed, matching the gradient."""
        kx, ky, kz = self.derivative_wavevector
        r = kx ** 2 + ky ** 2 + kz ** 2
        r.flags.writeable = False
        return r

    def points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.arange(self.n_per_dim) * (self.box_length / self.n_per_dim)
        return np.meshgrid(x, x, x, indexing="ij")

    def summary(self) -> dict:
        return {
            "n_per_dim": self.n_per_dim,
            "box_length": self.box_length,
            "freq_spacing": self.freq_spacing,
            "nyquist": self.nyquist,
        }


def make_grid(n_per_dim: int, box_length: float) -> Grid:
    return Grid(n_per_dim, box_length)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar field held by its Fourier coefficients (shape ``(n,n,n)``)."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise GridMismatchError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", _freeze(self.coeffs))

    arity = 1

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, complex))

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0, 0].real)

    def physical(self) -> np.ndarray:
        return transform(self, "inverse")

    def __add__(self, other):
        _check_same(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Real 3-vector field; ``coeffs`` has shape ``(3,n,n,n)``."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != (3,) + self.grid.shape:
            raise GridMismatchError(
                f"coefficient shape {self.coeffs.shape} does not match (3,)+{self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", _freeze(self.coeffs))

    arity = 3

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralVectorField":
        return cls(grid, np.zeros((3,) + grid.shape, complex))

    @classmethod
    def from_components(cls, components) -> "SpectralVectorField":
        components = tuple(components)
        if len(components) != 3:
            raise ValueError("a vector field needs exactly three components")
        g = components[0].grid
        for c in components[1:]:
            if c.grid != g:
                raise GridMismatchError("components live on different grids")
        return cls(g, np.stack([c.coeffs for c in components]))

    @property
    def components(self) -> tuple[SpectralField, SpectralField, SpectralField]:
        return tuple(SpectralField(self.grid, c) for c in self.coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, coeffs)

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].real.copy()

    def physical(self) -> np.ndarray:
        return transform(self, "inverse")

    def divergence_defect(self) -> float:
        """max|xi.f| / max(|xi||f|); zero for a divergence-free field."""
        kx, ky, kz = self.grid.derivative_wavevector
        c = self.coeffs
        d = np.abs(kx * c[0] + ky * c[1] + kz * c[2]).max()
        s = (self.grid.xi_norm * np.sqrt((np.abs(c) ** 2).sum(0))).max()
        return float(d / s) if s > 0 else 0.0

    def is_divergence_free(self, tol: float = 1e-12) -> bool:
        return self.divergence_defect() <= tol

    def __add__(self, other):
        _check_same(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__


Field = Union[SpectralField, SpectralVectorField]


def _check_same(a, b):
    if type(a) is not type(b):
        raise GridMismatchError(f"arity mismatch: {type(a).__name__} vs {type(b).__name__}")
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Project coefficients onto Hermitian-symmetric arrays (last three axes)."""
    axes = (-3, -2, -1)
    mirrored = np.roll(np.flip(coeffs, axis=axes), shift=1, axis=axes)
    return 0.5 * (coeffs + np.conj(mirrored))


def hermitian_defect(coeffs: np.ndarray) -> float:
    axes = (-3, -2, -1)
    mirrored = np.roll(np.flip(coeffs, axis=axes), shift=1, axis=axes)
    return float(np.abs(coeffs - np.conj(mirrored)).max(initial=0.0))


def transform(field, direction: str, grid: Grid | None = None):
    """Convert between physical samples and spectral fields.

    ``forward`` takes real samples of shape ``(n,n,n)`` or ``(3,n,n,n)`` plus the
    grid and returns a spectral field; ``inverse`` takes a spectral field and
    returns real samples.
    """
    if direction == "forward":
        if grid is None:
            raise ValueError("forward transform needs the target grid")
        a = np.asarray(field, dtype=float)
        if a.shape == grid.shape:
            cls = SpectralField
        elif a.shape == (3,) + grid.shape:
            cls = SpectralVectorField
        else:
            raise GridMismatchError(f"samples of shape {a.shape} do not fit grid {grid.shape}")
        c = sfft.fftn(a, axes=(-3, -2, -1)) / grid.n_per_dim ** 3
        return cls(grid, symmetrize(c))
    if direction == "inverse":
        if not isinstance(field, (SpectralField, SpectralVectorField)):
            raise TypeError("inverse transform expects a spectral field")
        if grid is not None and grid != field.grid:
            raise GridMismatchError("field grid differs from the requested grid")
        n = field.grid.n_per_dim
        return sfft.ifftn(field.coeffs * n ** 3, axes=(-3, -2, -1)).real
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def apply_differential(field, op: str):
    """Spectral gradient, divergence, curl or Laplacian.

    The gradient of a vector field returns the ``(3,3,n,n,n)`` coefficient array
    of ``d_j f_i`` (index order ``[i, j]``); every other combination returns a
    spectral field.
    """
    g = field.grid
    k = g.derivative_wavevector
    c = field.coeffs
    if op == "laplacian":
        return field.with_coeffs(-g.xi_norm_sq * c)
    if op == "gradient":
        if isinstance(field, SpectralField):
            return SpectralVectorField(g, np.stack([1j * kj * c for kj in k]))
        return np.stack([np.stack([1j * kj * ci for kj in k]) for ci in c])
    if op == "divergence":
        if not isinstance(field, SpectralVectorField):
            raise TypeError("divergence needs a vector field")
        return SpectralField(g, 1j * (k[0] * c[0] + k[1] * c[1] + k[2] * c[2]))
    if op == "curl":
        if not isinstance(field, SpectralVectorField):
            raise TypeError("curl needs a vector field")
        out = np.stack([
            1j * (k[1] * c[2] - k[2] * c[1]),
            1j * (k[2] * c[0] - k[0] * c[2]),
            1j * (k[0] * c[1] - k[1] * c[0]),
        ])
        return SpectralVectorField(g, out)
    raise ValueError(f"unknown differential operator {op!r}")


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    """Per mode ``v - xi (xi.v)/|xi|^2``; the mean mode passes through.

    ``xi`` is the derivative wavevector (Nyquist components zeroed), matching
    the discrete divergence.
    """
    if not isinstance(v, SpectralVectorField):
        raise TypeError("leray_project needs a vector field")
    return v.with_coeffs(_leray(v.grid, v.coeffs))


def _leray(grid: Grid, c: np.ndarray) -> np.ndarray:
    # projects against the derivative wavevector so the result is annihilated
    # by the discrete divergence; modes where it vanishes pass through
    kx, ky, kz = grid.derivative_wavevector
    k2 = grid.grad_norm_sq.copy()
    k2[k2 == 0] = np.inf
    dot = (kx * c[0] + ky * c[1] + kz * c[2]) / k2
    return np.stack([c[0] - kx * dot, c[1] - ky * dot, c[2] - kz * dot])


def inner_product(f, g) -> float:
    """``int f.g dx`` over the box; Frobenius pairing for gradient arrays."""
    if isinstance(f, np.ndarray) or isinstance(g, np.ndarray):
        raise TypeError("pass spectral fields; use gradient_inner for gradient arrays")
    _check_same(f, g)
    return float(f.grid.volume * np.vdot(g.coeffs, f.coeffs).real)


def gradient_inner(f: SpectralVectorField, g: SpectralVectorField) -> float:
    """``int grad f : grad g dx``."""
    _check_same(f, g)
    w = f.grid.grad_norm_sq
    return float(f.grid.volume * (w * (f.coeffs * np.conj(g.coeffs)).real).sum())


# ---------------------------------------------------------------------------
# padded evaluation


def bandwidth(coeffs: np.ndarray) -> int:
    """Largest |m_i| over nonzero coefficients (exact zeros are support-free)."""
    n = coeffs.shape[-1]
    nz = np.abs(coeffs) > 0
    while nz.ndim > 3:
        nz = nz.any(axis=0)
    if not nz.any():
        return 0
    m = np.abs(np.fft.fftfreq(n, d=1.0 / n).astype(int))
    best = 0
    for ax in range(3):
        other = tuple(a for a in range(3) if a != ax)
        present = nz.any(axis=other)
        best = max(best, int(m[present].max()))
    return best


def exact_size(*bands: int) -> int:
    """Smallest FFT-friendly even size M integrating a product exactly.

    Exactness requires ``sum(bands) < M`` (no aliasing onto the zero mode) and
    ``2*max(bands) < M`` so each factor is representable.
    """
    need = max(sum(bands), 2 * max(bands)) + 1
    m = sfft.next_fast_len(need, real=True)
    while m % 2:
        m = sfft.next_fast_len(m + 1, real=True)
    return max(m, 4)


def _embed_axis(a: np.ndarray, axis: int, n: int, M: int, K: int) -> np.ndarray:
    shape = list(a.shape)
    shape[axis] = M
    out = np.zeros(shape, complex)
    half = n // 2
    top = min(K, half - 1)
    src = np.r_[0 : top + 1, n - top : n] if top > 0 else np.array([0])
    dst = np.r_[0 : top + 1, M - top : M] if top > 0 else np.array([0])
    idx_src = [slice(None)] * a.ndim
    idx_dst = [slice(None)] * a.ndim
    idx_src[axis] = src
    idx_dst[axis] = dst
    out[tuple(idx_dst)] = a[tuple(idx_src)]
    if K >= half:
        # Nyquist plane: split between +n/2 and -n/2 so the embedding stays real
        idx_src[axis] = half
        nyq = a[tuple(idx_src)]
        if M > n:
            idx_dst[axis] = half
            out[tuple(idx_dst)] += 0.5 * nyq
            idx_dst[axis] = M - half
            out[tuple(idx_dst)] += 0.5 * nyq
        elif M == n:
            idx_dst[axis] = half
            out[tuple(idx_dst)] += nyq
        else:
            raise PaddingOverflowError("cannot truncate a field with Nyquist content")
    return out


def embed(coeffs: np.ndarray, n: int, M: int, K: int | None = None) -> np.ndarray:
    """Move coefficients from an n-grid to an M-grid (pad or exact truncation)."""
    if K is None:
        K = bandwidth(coeffs)
    if M == n:
        return np.array(coeffs, dtype=complex)
    if 2 * K >= M and K < n // 2:
        raise PaddingOverflowError(f"bandwidth {K} does not fit a grid of size {M}")
    nd = coeffs.ndim
    out = coeffs
    for ax in (nd - 3, nd - 2, nd - 1):
        out = _embed_axis(out, ax, n, M, K)
    return out


def to_physical(coeffs: np.ndarray, n: int, M: int, K: int | None = None) -> np.ndarray:
    """Real samples on an M^3 grid of the field given by n-grid coefficients."""
    e = embed(coeffs, n, M, K)
    return sfft.ifftn(e * float(M) ** 3, axes=(-3, -2, -1)).real


def from_physical(samples: np.ndarray, M: int, n: int, K_out: int) -> np.ndarray:
    """Forward transform on an M-grid, keeping modes |m_i| <= K_out < n/2 on an n-grid."""
    if K_out >= n // 2:
        raise PaddingOverflowError("output bandwidth must stay below the n-grid Nyquist index")
    c = sfft.fftn(samples, axes=(-3, -2, -1)) / float(M) ** 3
    out = embed_down(c, M, n, K_out)
    return symmetrize(out)


def embed_down(c: np.ndarray, M: int, n: int, K: int) -> np.ndarray:
    nd = c.ndim
    out = c
    for ax in (nd - 3, nd - 2, nd - 1):
        shape = list(out.shape)
        shape[ax] = n
        new = np.zeros(shape, complex)
        src = np.r_[0 : K + 1, M - K : M] if K > 0 else np.array([0])
        dst = np.r_[0 : K + 1, n - K : n] if K > 0 else np.array([0])
        i_s = [slice(None)] * nd
        i_d = [slice(None)] * nd
        i_s[ax] = src
        i_d[ax] = dst
        new[tuple(i_d)] = out[tuple(i_s)]
        out = new
    return out


def gradient_coeffs(v: SpectralVectorField) -> np.ndarray:
    return apply_differential(v, "gradient")


def trilinear(a: SpectralVectorField, b: SpectralVectorField, c: SpectralVectorField,
              padded_size: int | None = None) -> float:
    """``int (a.grad) b . c dx = int a_j d_j b_i c_i dx``, exact for band-limited input.

    The integrand is sampled on a grid of size ``padded_size`` (default: the
    smallest size exceeding the summed bandwidths).  A size that is too small
    raises :class:`PaddingOverflowError` instead of returning an aliased value.
    """
    for f in (b, c):
        _check_same(a, f)
    if not isinstance(a, SpectralVectorField):
        raise TypeError("trilinear needs vector fields")
    g = a.grid
    n = g.n_per_dim
    Ka, Kb, Kc = (bandwidth(f.coeffs) for f in (a, b, c))
    need = max(Ka + Kb + Kc, 2 * max(Ka, Kb, Kc)) + 1
    if padded_size is None:
        M = exact_size(Ka, Kb, Kc)
    else:
        M = int(padded_size)
        if M < need:
            raise PaddingOverflowError(
                f"padded size {M} too small for bandwidths {(Ka, Kb, Kc)} (need >= {need})"
            )
    av = to_physical(a.coeffs, n, M, Ka)
    db = to_physical(gradient_coeffs(b), n, M, Kb)
    cv = to_physical(c.coeffs, n, M, Kc)
    dv = (g.box_length / M) ** 3
    return float(np.einsum("jxyz,ijxyz,ixyz->", av, db, cv, optimize=True) * dv)


# ---------------------------------------------------------------------------
# LPF1 binary field format

LPF_MAGIC = b"LPFIELD1"


def write_lpf(path, field) -> None:
    """Write a field as LPF1: magic, uint64-LE header length, JSON header, f64 payload."""
    kind = "scalar" if isinstance(field, SpectralField) else "vector3"
    header = {
        "n_per_dim": field.grid.n_per_dim,
        "box_length": field.grid.box_length,
        "kind": kind,
        "layout": "complex-interleaved-f64",
        "order": "row-major-modes",
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(field.coeffs).view(np.float64).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(LPF_MAGIC)
        fh.write(struct.pack("<Q", len(hb)))
        fh.write(hb)
        fh.write(payload.tobytes())


def read_lpf(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != LPF_MAGIC:
        raise ValueError(f"{path}: not an LPF1 file")
    (hlen,) = struct.unpack("<Q", data[8:16])
    try:
        header = json.loads(data[16 : 16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: corrupt LPF1 header") from exc
    if header.get("layout") != "complex-interleaved-f64" or header.get("order") != "row-major-modes":
        raise ValueError(f"{path}: unsupported layout {header.get('layout')!r}")
    try:
        grid = Grid(int(header["n_per_dim"]), float(header["box_length"]))
        kind = header["kind"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: incomplete LPF1 header") from exc
    raw = np.frombuffer(data[16 + hlen :], dtype="<f8")
    if kind not in ("scalar", "vector3"):
        raise ValueError(f"{path}: unknown kind {kind!r}")
    shape = grid.shape if kind == "scalar" else (3,) + grid.shape
    if raw.size != 2 * int(np.prod(shape)):
        raise ValueError(f"{path}: payload size {raw.size} does not match header")
    coeffs = raw.astype(np.float64).view(np.complex128).reshape(shape)
    if kind == "scalar":
        return SpectralField(grid, coeffs)
    return SpectralVectorField(grid, coeffs)
