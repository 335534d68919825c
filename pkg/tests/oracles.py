"""Reference implementations used only by the tests.

Everything here is written from scratch with explicit exponential sums or
plain numpy.fft, so agreement with the library is a real cross-check rather
than a comparison of the code with itself.
"""

from __future__ import annotations

import math

import numpy as np


def modes(n: int) -> np.ndarray:
    """Signed mode numbers in FFT storage order."""
    return np.array([j if j < n // 2 else j - n for j in range(n)])


def synth_matrix(n: int, L: float, M: int) -> np.ndarray:
    """``E[x, m] = exp(i xi_m x_j)`` on M equispaced points of [0, L)."""
    x = L * np.arange(M) / M
    xi = 2 * math.pi / L * modes(n)
    return np.exp(1j * np.outer(x, xi))


def synthesize(coeffs: np.ndarray, L: float, M: int) -> np.ndarray:
    """Evaluate ``sum_m c_m exp(i xi_m . x)`` on an M^3 grid (last three axes)."""
    n = coeffs.shape[-1]
    E = synth_matrix(n, L, M)
    out = np.einsum("xa,...abc->...xbc", E, coeffs)
    out = np.einsum("yb,...xbc->...xyc", E, out)
    out = np.einsum("zc,...xyc->...xyz", E, out)
    return out.real


def analyse(samples: np.ndarray, L: float) -> np.ndarray:
    """Explicit DFT: ``c_m = n^-3 sum_x f(x) exp(-i xi_m . x)``."""
    n = samples.shape[-1]
    E = np.conj(synth_matrix(n, L, n)).T
    out = np.einsum("ax,...xyz->...ayz", E, samples)
    out = np.einsum("by,...ayz->...abz", E, out)
    out = np.einsum("cz,...abz->...abc", E, out)
    return out / n ** 3


def wavevectors(n: int, L: float):
    k = 2 * math.pi / L * modes(n).astype(float)
    return k[:, None, None], k[None, :, None], k[None, None, :]


def derivative(coeffs: np.ndarray, L: float, axis: int) -> np.ndarray:
    """Spectral d/dx_axis for coefficients without Nyquist content."""
    k = wavevectors(coeffs.shape[-1], L)[axis]
    return 1j * k * coeffs


def random_band_limited(rng: np.random.Generator, n: int, K: int, vector: bool = True,
                        divfree: bool = True) -> np.ndarray:
    """Real, mean-zero trigonometric polynomial with ``|m_i| <= K`` (coefficients).

    Divergence-free vector fields are built as the curl of a random potential.
    """
    shape = (3, n, n, n) if vector else (n, n, n)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    m = modes(n)
    keep = (np.abs(m)[:, None, None] <= K) & (np.abs(m)[None, :, None] <= K) & (np.abs(m)[None, None, :] <= K)
    c = c * keep
    # Hermitian projection by explicit index mirroring
    idx = (-np.arange(n)) % n
    mirror = c[..., idx, :, :][..., :, idx, :][..., :, :, idx]
    c = 0.5 * (c + np.conj(mirror))
    c[..., 0, 0, 0] = 0.0
    if vector and divfree:
        L = 2 * math.pi  # only the direction of xi matters for the curl
        kx, ky, kz = wavevectors(n, L)
        c = np.stack([
            1j * (ky * c[2] - kz * c[1]),
            1j * (kz * c[0] - kx * c[2]),
            1j * (kx * c[1] - ky * c[0]),
        ])
    return c


def trilinear_quadrature(a: np.ndarray, b: np.ndarray, c: np.ndarray, L: float) -> float:
    """``int a_j d_j b_i c_i`` by 2x-padded physical quadrature (exact for |m| < n/2)."""
    n = a.shape[-1]
    M = 2 * n
    av = synthesize(a, L, M)
    cv = synthesize(c, L, M)
    total = 0.0
    for j in range(3):
        for i in range(3):
            dbij = synthesize(derivative(b[i], L, j), L, M)
            total += float((av[j] * dbij * cv[i]).sum())
    return total * (L / M) ** 3


def inner_quadrature(f: np.ndarray, g: np.ndarray, L: float) -> float:
    n = f.shape[-1]
    M = 2 * n
    return float((synthesize(f, L, M) * synthesize(g, L, M)).sum() * (L / M) ** 3)


def lattice_norms(n: int, L: float) -> np.ndarray:
    """All lattice |xi| values, by brute-force enumeration."""
    s = 2 * math.pi / L
    m = np.arange(-n // 2, n // 2)
    X, Y, Z = np.meshgrid(m, m, m, indexing="ij")
    return s * np.sqrt(X ** 2 + Y ** 2 + Z ** 2)


def psi_reference(r: float) -> float:
    """Scalar reimplementation of the cutoff from its defining formula."""
    if r <= 0.5:
        return 1.0
    if r >= 1.0:
        return 0.0
    t = 2.0 * (1.0 - r)
    h1 = math.exp(-1.0 / t)
    h2 = math.exp(-1.0 / (1.0 - t))
    return h1 / (h1 + h2)
