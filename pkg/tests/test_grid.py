import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from lpmhd.field_gen import named_flow
from lpmhd.grid import (
    Grid,
    GridMismatchError,
    PaddingOverflowError,
    SpectralField,
    SpectralVectorField,
    apply_differential,
    bandwidth,
    exact_size,
    gradient_inner,
    hermitian_defect,
    inner_product,
    leray_project,
    make_grid,
    read_lpf,
    transform,
    trilinear,
    write_lpf,
)


def vec(grid, c):
    return SpectralVectorField(grid, c)


# -- grid geometry ---------------------------------------------------------


def test_spacing_and_nyquist():
    g = make_grid(64, 2 * math.pi)
    assert g.freq_spacing == 1.0
    assert g.nyquist == 32.0


def test_lattice_indices_small_grid():
    g = make_grid(8, 2 * math.pi)
    assert sorted(g.mode_index.tolist()) == list(range(-4, 4))
    assert np.allclose(g.wavevector[0].ravel(), g.mode_index)


def test_shell_minus_one_has_lattice_points():
    g = make_grid(16, 4 * math.pi)
    assert g.freq_spacing == 0.5
    r = oracles.lattice_norms(16, 4 * math.pi)
    inside = r[(r >= 0.25) & (r <= 1.0)]
    assert inside.size > 0 and np.any(np.isclose(inside, 0.5))


@pytest.mark.parametrize("n,L", [(7, 1.0), (2, 1.0), (16, 0.0), (16, -1.0)])
def test_invalid_grid(n, L):
    with pytest.raises(ValueError):
        Grid(n, L)


def test_grid_summary_is_plain():
    s = make_grid(16, 4 * math.pi).summary()
    assert s["n_per_dim"] == 16 and math.isclose(s["box_length"], 4 * math.pi)


# -- transforms ------------------------------------------------------------


def test_cosine_coefficients(grid16):
    x, _, _ = grid16.points()
    f = transform(np.cos(x), "forward", grid16)
    nz = np.argwhere(np.abs(f.coeffs) > 1e-14)
    assert sorted(map(tuple, nz)) == [(1, 0, 0), (15, 0, 0)]
    assert np.allclose(f.coeffs[1, 0, 0], 0.5, atol=1e-15)
    assert np.allclose(f.coeffs[15, 0, 0], 0.5, atol=1e-15)


def test_constant_coefficients(grid16):
    f = transform(np.full(grid16.shape, 3.0), "forward", grid16)
    assert f.coeffs[0, 0, 0] == pytest.approx(3.0, abs=1e-15)
    c = np.array(f.coeffs)
    c[0, 0, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_forward_matches_explicit_dft(rng):
    g = make_grid(8, 3.0)
    s = rng.standard_normal((3, 8, 8, 8))
    f = transform(s, "forward", g)
    assert np.abs(f.coeffs - oracles.analyse(s, 3.0)).max() < 1e-14


def test_forward_output_is_hermitian(rng, grid16):
    f = transform(rng.standard_normal((3,) + grid16.shape), "forward", grid16)
    assert hermitian_defect(f.coeffs) == 0.0


@given(st.integers(0, 2 ** 32 - 1))
def test_round_trip(seed):
    g = make_grid(16, 2.5)
    s = np.random.default_rng(seed).standard_normal((3,) + g.shape)
    back = transform(transform(s, "forward", g), "inverse")
    assert np.abs(back - s).max() / np.abs(s).max() < 1e-13


def test_parseval_hundred_fields():
    g = make_grid(16, 4 * math.pi)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        s = rng.standard_normal(g.shape)
        f = transform(s, "forward", g)
        phys = (s ** 2).sum() * (g.box_length / 16) ** 3
        spec = g.volume * (np.abs(f.coeffs) ** 2).sum()
        worst = max(worst, abs(phys - spec) / phys)
    assert worst < 1e-13


def test_shape_mismatch_raises(grid16):
    with pytest.raises(GridMismatchError):
        transform(np.zeros((8, 8, 8)), "forward", grid16)
    with pytest.raises(ValueError):
        transform(np.zeros(grid16.shape), "sideways", grid16)


# -- differential operators -----------------------------------------------


def test_gradient_and_laplacian_of_cosine(grid16):
    x, _, _ = grid16.points()
    f = transform(np.cos(x), "forward", grid16)
    grad = apply_differential(f, "gradient").physical()
    assert np.abs(grad[0] + np.sin(x)).max() < 1e-14
    assert np.abs(grad[1:]).max() < 1e-14
    lap = apply_differential(f, "laplacian").physical()
    assert np.abs(lap + np.cos(x)).max() < 1e-14


def test_abc_flow_is_divergence_free_beltrami(grid16):
    v = named_flow(grid16, "abc", A=1.0, B=0.7, C=0.3)
    div = apply_differential(v, "divergence")
    assert np.abs(div.coeffs).max() < 1e-15
    curl = apply_differential(v, "curl")
    assert np.abs(curl.coeffs - v.coeffs).max() < 1e-15


def test_vector_gradient_layout(grid16):
    # u = (0, sin x_3, 0): only d_3 u_2 is nonzero
    x, y, z = grid16.points()
    v = transform(np.stack([0 * x, np.sin(z), 0 * x]), "forward", grid16)
    G = apply_differential(v, "gradient")
    assert G.shape == (3, 3) + grid16.shape
    nz = {(i, j) for i in range(3) for j in range(3) if np.abs(G[i, j]).max() > 1e-14}
    assert nz == {(1, 2)}


def test_divergence_needs_vector(grid16):
    with pytest.raises(TypeError):
        apply_differential(SpectralField.zeros(grid16), "divergence")


# -- Leray projection -------------------------------------------------------


def test_leray_fixes_divergence_free(rng, grid16):
    c = oracles.random_band_limited(rng, 16, 5)
    v = vec(grid16, c)
    p = leray_project(v)
    assert np.abs(p.coeffs - v.coeffs).max() <= 1e-13 * np.abs(v.coeffs).max()


def test_leray_kills_gradient(grid16):
    _, y, _ = grid16.points()
    s = transform(np.sin(y), "forward", grid16)
    g = apply_differential(s, "gradient")
    assert np.abs(leray_project(g).coeffs).max() < 1e-15


@given(st.integers(0, 2 ** 32 - 1))
def test_leray_idempotent_and_solenoidal(seed):
    g = make_grid(16, 3.0)
    s = np.random.default_rng(seed).standard_normal((3,) + g.shape)
    v = transform(s, "forward", g)
    p = leray_project(v)
    pp = leray_project(p)
    assert np.abs(pp.coeffs - p.coeffs).max() <= 1e-13 * np.abs(p.coeffs).max()
    div = apply_differential(p, "divergence")
    scale = (g.xi_norm * np.abs(p.coeffs).max(0)).max()
    assert np.abs(div.coeffs).max() <= 1e-12 * scale


# -- pairings ----------------------------------------------------------------


def test_inner_product_cosines(grid16):
    x, _, _ = grid16.points()
    c = transform(np.cos(x), "forward", grid16)
    s = transform(np.sin(x), "forward", grid16)
    assert inner_product(c, c) == pytest.approx((2 * math.pi) ** 3 / 2, rel=1e-14)
    assert abs(inner_product(c, s)) < 1e-13


def test_inner_product_matches_quadrature(rng, grid16):
    for _ in range(5):
        f = oracles.random_band_limited(rng, 16, 7, divfree=False)
        h = oracles.random_band_limited(rng, 16, 7, divfree=False)
        want = oracles.inner_quadrature(f, h, grid16.box_length)
        got = inner_product(vec(grid16, f), vec(grid16, h))
        assert got == pytest.approx(want, rel=1e-12)


def test_gradient_inner_matches_quadrature(rng):
    g = make_grid(16, 5.0)
    f = oracles.random_band_limited(rng, 16, 6)
    h = oracles.random_band_limited(rng, 16, 6)
    want = sum(
        oracles.inner_quadrature(oracles.derivative(f[i], 5.0, j), oracles.derivative(h[i], 5.0, j), 5.0)
        for i in range(3) for j in range(3)
    )
    assert gradient_inner(vec(g, f), vec(g, h)) == pytest.approx(want, rel=1e-12)


def test_pairing_rejects_mixed_grids(grid16):
    other = make_grid(16, 3.0)
    with pytest.raises(GridMismatchError):
        inner_product(SpectralField.zeros(grid16), SpectralField.zeros(other))


# -- trilinear ----------------------------------------------------------------


def test_trilinear_matches_padded_quadrature(rng):
    L = 4 * math.pi
    g = make_grid(16, L)
    for _ in range(3):
        a, b, c = (oracles.random_band_limited(rng, 16, 7) for _ in range(3))
        want = oracles.trilinear_quadrature(a, b, c, L)
        got = trilinear(vec(g, a), vec(g, b), vec(g, c))
        assert got == pytest.approx(want, rel=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 7))
def test_trilinear_antisymmetry(seed, K):
    g = make_grid(16, 2 * math.pi)
    rng = np.random.default_rng(seed)
    a = vec(g, oracles.random_band_limited(rng, 16, K))
    b = vec(g, oracles.random_band_limited(rng, 16, K))
    from lpmhd.norms import gradient_l2

    scale = (1 + gradient_l2(a) + gradient_l2(b)) ** 3
    assert abs(trilinear(a, b, b)) <= 1e-12 * scale
    # swapping the last two slots flips the sign
    c = vec(g, oracles.random_band_limited(rng, 16, K))
    assert trilinear(a, b, c) == pytest.approx(-trilinear(a, c, b), abs=1e-12 * scale)


def test_trilinear_constant_advection(rng, grid16):
    a = np.zeros((3, 16, 16, 16), complex)
    a[0, 0, 0, 0] = 1.0
    b = oracles.random_band_limited(rng, 16, 6, divfree=False)
    from lpmhd.norms import gradient_l2, l2_norm

    A, Bv = vec(grid16, a), vec(grid16, b)
    scale = l2_norm(A) * gradient_l2(Bv) * l2_norm(Bv)
    assert abs(trilinear(A, Bv, Bv)) <= 1e-12 * scale


def test_trilinear_padding_guard(rng, grid16):
    a, b, c = (vec(grid16, oracles.random_band_limited(rng, 16, 6)) for _ in range(3))
    with pytest.raises(PaddingOverflowError):
        trilinear(a, b, c, padded_size=16)
    exact = trilinear(a, b, c)
    assert trilinear(a, b, c, padded_size=40) == pytest.approx(exact, rel=1e-12)


def test_bandwidth_and_exact_size():
    c = np.zeros((16, 16, 16), complex)
    assert bandwidth(c) == 0
    c[3, 0, 13] = 1.0
    assert bandwidth(c) == 3
    M = exact_size(3, 3, 3)
    assert M > 9 and M % 2 == 0


# -- LPF1 ----------------------------------------------------------------------


def test_lpf_round_trip(tmp_path, rng, grid16):
    v = vec(grid16, oracles.random_band_limited(rng, 16, 5))
    p = tmp_path / "v.lpf"
    write_lpf(p, v)
    back = read_lpf(p)
    assert back.grid == grid16
    assert np.array_equal(back.coeffs, v.coeffs)
    s = SpectralField(grid16, v.coeffs[0])
    write_lpf(p, s)
    assert isinstance(read_lpf(p), SpectralField)


def test_lpf_layout(tmp_path, grid16):
    import json
    import struct

    v = SpectralField.zeros(grid16)
    p = tmp_path / "s.lpf"
    write_lpf(p, v)
    raw = p.read_bytes()
    assert raw[:8] == b"LPFIELD1"
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16 : 16 + hlen])
    assert header["kind"] == "scalar" and header["layout"] == "complex-interleaved-f64"
    assert len(raw) == 16 + hlen + 16 * 16 ** 3


@pytest.mark.parametrize("mutate", ["magic", "truncate", "header"])
def test_lpf_rejects_corruption(tmp_path, grid16, mutate):
    p = tmp_path / "bad.lpf"
    write_lpf(p, SpectralField.zeros(grid16))
    raw = bytearray(p.read_bytes())
    if mutate == "magic":
        raw[:8] = b"NOTAFILE"
    elif mutate == "truncate":
        raw = raw[:-8]
    else:
        raw[20] = 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        read_lpf(p)
