import math

import numpy as np
import pytest
from scipy.integrate import quad

from bo2d import analysis as an
from bo2d.model import EquationSpec
from bo2d.errors import (BOutOfRange, EdgeMassError, InvalidOrders, LatticeTooLarge,
                         ThetaOutOfRange, ValidationError)

WINDOW_SMALL = 24.0


@pytest.fixture(scope="module")
def grid():
    return an.LineGrid(1024, 40.0, 4)


@pytest.fixture(scope="module")
def family():
    return an.TestFamily(seed=11, count=6)


def test_line_grid_validation():
    for n in (128, 1000):
        with pytest.raises(ValidationError):
            an.LineGrid(n, 1.0)
    with pytest.raises(ValidationError):
        an.LineGrid(256, -1.0)
    g = an.LineGrid(256, 8.0, 2)
    assert g.h == pytest.approx(1 / 16) and g.x[0] == -8.0 and g.m == 512
    assert np.array_equal(g.unpad(g.pad(g.x)), g.x)


def test_poisson_pair():
    g = an.LineGrid(2 ** 17, 10240.0, 16)
    x = g.x
    hf = an.hilbert_line(1 / (1 + x ** 2), g)
    inner = np.abs(x) <= 50
    assert np.max(np.abs(hf[inner] - x[inner] / (1 + x[inner] ** 2))) < 1e-6


def test_hilbert_parity_and_square(grid):
    f = np.exp(-grid.x ** 2)
    hf = an.hilbert_line(f, grid)
    # x[0] = -W has no mirror; compare the symmetric part
    np.testing.assert_allclose(hf[1:], -hf[1:][::-1], atol=1e-12)
    from scipy.special import dawsn

    ref = 2 / math.sqrt(math.pi) * dawsn(grid.x)
    inner = grid.inner_half()
    assert np.max(np.abs(hf[inner] - ref[inner])) < 1e-3


def test_hilbert_squared_is_minus_identity():
    # spectrum sits near +-10, so H f = sin(10x) exp(-x^2/2) decays and H can act twice
    g = an.LineGrid(2048, 32.0, 4)
    x = g.x
    f = np.cos(10 * x) * np.exp(-x ** 2 / 2)
    h1 = an.hilbert_line(f, g)
    assert np.max(np.abs(h1 - np.sin(10 * x) * np.exp(-x ** 2 / 2))) < 1e-12
    h2 = an.hilbert_line(h1, g)
    inner = g.inner_half()
    assert np.max(np.abs(h2[inner] + f[inner])) < 1e-6


def test_edge_check(grid):
    with pytest.raises(EdgeMassError):
        an.hilbert_line(np.ones(grid.n), grid)
    with pytest.raises(EdgeMassError):
        an.commutator_ratio(np.exp(-grid.x ** 2), np.ones(grid.n), 0.5, 0.5, 2, grid)
    assert np.all(an.hilbert_line(np.zeros(grid.n), grid) == 0)


@pytest.mark.parametrize("f_kind,expected", [("zero_int", 0.0), ("gauss", -1 / math.sqrt(math.pi))])
def test_hx_identity(f_kind, expected):
    g = an.LineGrid(2048, 32 * math.pi, 512)
    x = g.x
    f = x * np.exp(-x ** 2) if f_kind == "zero_int" else np.exp(-x ** 2)
    # int exp(-x^2) = sqrt(pi), so [H, x] f = -1/sqrt(pi)
    out = an.commutator_x(f, g)
    inner = np.abs(x) <= 10
    assert np.max(np.abs(out[inner] - expected)) < 1e-6


def test_hx_of_zero_is_zero(grid):
    assert np.all(an.commutator_x(np.zeros(grid.n), grid) == 0)


@pytest.mark.parametrize("alpha,beta,p,classical", [
    (0.3, 0.3, 2, False), (1.2, -0.2, 2, False), (0.5, 0.5, 1.0, False), (0.5, 0.5, np.inf, False),
    (0.5, 1, 2, True), (0, 0, 2, True), (-1, 2, 2, True),
])
def test_invalid_orders(grid, alpha, beta, p, classical):
    f = np.exp(-grid.x ** 2)
    with pytest.raises(InvalidOrders):
        an.commutator_ratio(f, f, alpha, beta, p, grid, classical)


def test_constant_g_gives_zero(grid, family):
    f = family.sample(1, grid)
    assert an.commutator_ratio(np.full(grid.n, 3.0), f, 0.5, 0.5, 2, grid) == 0.0


def test_dense_oracle_agrees():
    g = an.LineGrid(256, 24.0, 2)
    fam = an.TestFamily(seed=3, count=2)
    G, F = fam.sample(0, g), fam.sample(1, g)
    for alpha, beta, classical in ((0.25, 0.75, False), (0.0, 1.0, False), (1, 1, True)):
        fast = g.unpad(an._commutator_padded(G, F, alpha, beta, g, classical))
        dense = an.commutator_dense(G, F, alpha, beta, g, classical)
        assert np.max(np.abs(fast - dense)) <= 1e-8 * max(1.0, np.max(np.abs(dense)))


def test_homogeneity(grid, family):
    g, f = family.sample(0, grid), family.sample(1, grid)
    r = an.commutator_ratio(g, f, 0.5, 0.5, 3, grid)
    assert an.commutator_ratio(3 * g, f, 0.5, 0.5, 3, grid) == pytest.approx(r, rel=1e-12)
    assert an.commutator_ratio(g, 3 * f, 0.5, 0.5, 3, grid) == pytest.approx(r, rel=1e-12)


@pytest.mark.parametrize("p", [1.5, 2, 3, 4])
def test_ratio_finite_for_each_p(grid, family, p):
    r = an.commutator_ratio(family.sample(2, grid), family.sample(3, grid), 0.4, 0.6, p, grid)
    assert np.isfinite(r) and r > 0


def test_joint_dilation_keeps_ratio_stable(family):
    grid = an.LineGrid(4096, 160.0, 4)
    vals = []
    for lam in (0.5, 1.0, 2.0):
        g, f = family.sample(0, grid, lam), family.sample(1, grid, lam)
        vals.append(an.commutator_ratio(g, f, 0.5, 0.5, 2, grid))
    assert max(vals) / min(vals) < 1.5


def test_family_is_deterministic_and_normalized(grid):
    a = an.TestFamily(seed=5)
    b = an.TestFamily(seed=5)
    assert np.array_equal(a.sample(7, grid), b.sample(7, grid))
    assert grid.lp_norm(a.sample(7, grid), 2) == pytest.approx(1.0)
    assert not np.array_equal(a.sample(7, grid), an.TestFamily(seed=6).sample(7, grid))


def test_sweep_is_thread_independent(family):
    a = an.commutator_sweep(0.5, 0.5, 2, family, 40.0, (512, 1024), threads=1)
    b = an.commutator_sweep(0.5, 0.5, 2, family, 40.0, (512, 1024), threads=4)
    assert a.ratios == b.ratios and a.to_text() == b.to_text()
    assert 0.9 < float(a.extra["resolution_ratio"]) < 1.1


def test_report_csv(tmp_path, family):
    rep = an.commutator_sweep(0.5, 0.5, 2, family, 40.0, (512,))
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "trial,n=512" and len(lines) == family.count + 1
    assert float(lines[1].split(",")[1]) == rep.ratios["n=512"][0]


def test_weighted_hilbert(grid, family):
    assert an.weighted_hilbert_norm(0.0, 4, family, grid) <= 1 + 1e-6
    for theta in (-0.5, 0.5):
        v = an.weighted_hilbert_norm(theta, 4, family, grid)
        assert np.isfinite(v) and v > 0
    for theta in (-1.0, 1.0, 1.5):
        with pytest.raises(ThetaOutOfRange):
            an.weighted_hilbert_norm(theta, 4, family, grid)
    one = an.weighted_hilbert_norm(0.5, 4, family, grid, threads=3, return_all=True)
    assert one == an.weighted_hilbert_norm(0.5, 4, family, grid, return_all=True)


def test_stein_constant_and_bounds(grid):
    assert np.all(an.stein_derivative(np.full(grid.n, 2.0), 0.5, grid) == 0)
    for b in (0.0, 1.0, -0.2):
        with pytest.raises(BOutOfRange):
            an.stein_derivative(np.zeros(grid.n), b, grid)
    with pytest.raises(ValidationError):
        an.stein_derivative(np.full(grid.n, np.inf), 0.5, grid)


def test_stein_matches_quadrature():
    g = an.LineGrid(4096, 20.0)
    b = 0.4
    f = lambda x: np.exp(-x ** 2)
    d = an.stein_derivative(f(g.x), b, g)
    for i in (1000, 2048, 2500):
        x0 = g.x[i]
        kern = lambda y: (f(x0) - f(y)) ** 2 / abs(x0 - y) ** (1 + 2 * b)
        ref = sum(quad(kern, a, c, limit=200)[0] for a, c in ((-np.inf, x0 - 1), (x0 - 1, x0), (x0, x0 + 1), (x0 + 1, np.inf)))
        assert d[i] == pytest.approx(math.sqrt(ref), rel=2e-3)


def test_stein_domination(grid, family):
    f = family.sample(0, grid)
    assert np.all(an.stein_derivative(np.abs(f), 0.5, grid) <= an.stein_derivative(f, 0.5, grid) + 1e-12)


def test_stein_envelope_decades(grid):
    vals = np.ones(grid.n)
    c, dec = an.stein_envelope(vals, 0.5, grid, lo=0.5, hi=10.0)
    assert c == pytest.approx(math.sqrt(np.max(np.abs(grid.x)[np.abs(grid.x) <= 10])))
    assert list(dec) == ["[0.5,5]", "[5,10]"]


def test_bilinear_guards(family):
    with pytest.raises(LatticeTooLarge):
        an.bilinear_box((128, 1, 1), (1, 1, 1))
    with pytest.raises(LatticeTooLarge):
        an.bilinear_box((1, 1, 1), (64, 1, 1))
    with pytest.raises(ValidationError):
        an.bilinear_bruteforce((3, 1, 1), (1, 1, 1), family)


def test_bilinear_zero_and_single_cell():
    box = an.bilinear_box((1, 1, 1), (1, 1, 1))
    z = np.zeros(box.shape)
    assert an.bilinear_ratio([z, z, z], (1, 1, 1), (1, 1, 1)) == 0.0
    # delta at the origin: (d*d)(0) d(0) = 1 with unit norms
    d = np.zeros(box.shape)
    d[box.R, box.R, box.C] = 1.0
    assert an.bilinear_integral(d, d, d) == 1.0
    assert an.bilinear_ratio([d, d, d], (1, 1, 1), (1, 1, 1)) == 1.0


def test_bilinear_ascent_does_not_decrease(family):
    fam = an.TestFamily(seed=2, count=4)
    plain = an.bilinear_bruteforce((2, 2, 2), (1, 1, 1), fam)
    up = an.bilinear_bruteforce((2, 2, 2), (1, 1, 1), fam, ascent_steps=5)
    assert all(u >= p - 1e-12 for u, p in zip(up, plain))


def test_bilinear_paths_and_threads_agree():
    fam = an.TestFamily(seed=4, count=4)
    a = an.bilinear_bruteforce((2, 2, 4), (1, 2, 1), fam, use_numba=False)
    b = an.bilinear_bruteforce((2, 2, 4), (1, 2, 1), fam, threads=4)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_odd_input_gives_even_hilbert(grid):
    f = -2 * grid.x * np.exp(-grid.x ** 2)
    hf = an.hilbert_line(f, grid)
    np.testing.assert_allclose(hf[1:], hf[1:][::-1], atol=1e-12)


def test_gaussian_pair_against_dense_oracle():
    g = an.LineGrid(512, WINDOW_SMALL, 2)
    G = np.exp(-g.x ** 2 / 2)
    G /= g.lp_norm(G, 2)
    r = an.commutator_ratio(G, G, 0.0, 1.0, 2, g)
    dense = an.commutator_dense(G, G, 0.0, 1.0, g)
    ref = g.lp_norm(dense, 2) / (g.lp_norm(an.deriv_line(G, 1, g), np.inf) * g.lp_norm(G, 2))
    assert np.isfinite(r) and r > 0
    assert r == pytest.approx(ref, rel=1e-8)


def test_zero_g_gives_zero(grid, family):
    assert an.commutator_ratio(np.zeros(grid.n), family.sample(0, grid), 0.5, 0.5, 2, grid) == 0.0


def test_other_ratios_are_homogeneous(grid, family):
    f = family.sample(4, grid)
    r = an.weighted_hilbert_ratio(f, 0.5, 16, grid)
    assert an.weighted_hilbert_ratio(3 * f, 0.5, 16, grid) == pytest.approx(r, rel=1e-12)
    box = an.bilinear_box((2, 2, 2), (1, 1, 1))
    masks = [an.support_mask(2, 1, box, EquationSpec()) for _ in range(3)]
    rng = np.random.default_rng(0)
    fs = [rng.random(box.shape) * m for m in masks]
    b = an.bilinear_ratio(fs, (2, 2, 2), (1, 1, 1))
    assert an.bilinear_ratio([3 * fs[0], fs[1], fs[2]], (2, 2, 2), (1, 1, 1)) == pytest.approx(b, rel=1e-12)


def test_stein_monotone_for_shared_jump(grid):
    # tanh is 1-Lipschitz, so every difference of tanh(g) is dominated by that of g
    g = np.sign(grid.x) * (1 + np.exp(-grid.x ** 2))
    dg_ = an.stein_derivative(g, 0.5, grid)
    df = an.stein_derivative(np.tanh(g), 0.5, grid)
    assert np.all(df <= dg_ + 1e-12)
    assert np.any(df < 0.9 * dg_)
