"""Numerical probes of operator estimates on the real line.

The line is modelled by a window ``[-W, W)`` sampled at ``n`` points.
Nonlocal operators (Hilbert transform, |D|^a) act on the window zero-padded to
``pad_factor`` times its length, with symbols applied by FFT.  Probes report
empirical ratios (lower bounds for operator norms); what the tests check is
the stability of those ratios, never a particular constant.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.signal import fftconvolve

from . import kernels
from .diagnostics import truncated_weight
from .errors import (BOutOfRange, EdgeMassError, InvalidOrders, LatticeTooLarge,
                     ThetaOutOfRange, ValidationError)
from .model import EquationSpec, dispersion

EDGE_RTOL = 1e-8


@dataclass(frozen=True)
class LineGrid:
    n: int
    W: float
    pad_factor: int = 4

    def __post_init__(self):
        n = int(self.n)
        if n < 256 or n & (n - 1):
            raise ValidationError(f"n must be a power of two >= 256, got {self.n!r}")
        if not self.W > 0:
            raise ValidationError("W must be positive")
        if int(self.pad_factor) < 2:
            raise ValidationError("pad_factor must be >= 2")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "W", float(self.W))
        object.__setattr__(self, "pad_factor", int(self.pad_factor))

    @property
    def h(self):
        return 2 * self.W / self.n

    @cached_property
    def x(self):
        return -self.W + self.h * np.arange(self.n)

    @property
    def m(self):
        return self.n * self.pad_factor

    @property
    def offset(self):
        return (self.pad_factor - 1) * self.n // 2

    @cached_property
    def xi(self):
        """Angular frequencies of the padded window, FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.m, self.h)

    @cached_property
    def nyquist(self):
        return self.m // 2

    def pad(self, f):
        out = np.zeros(self.m, dtype=np.result_type(f, np.float64))
        out[self.offset:self.offset + self.n] = f
        return out

    def unpad(self, F):
        return F[self.offset:self.offset + self.n]

    def lp_norm(self, f, p):
        f = np.abs(np.asarray(f))
        if p == np.inf:
            return float(np.max(f))
        return float((np.sum(f ** p) * self.h) ** (1.0 / p))

    def inner_half(self):
        return np.abs(self.x) <= self.W / 2


# ---------------------------------------------------------------------------
# symbols on the padded window
# ---------------------------------------------------------------------------

def _hilbert_sym(grid):
    s = -1j * np.sign(grid.xi)
    s[grid.nyquist] = 0.0
    return s


def _frac_sym(grid, a):
    if a == 0:
        return np.ones(grid.m)
    s = np.zeros(grid.m)
    nz = grid.xi != 0
    s[nz] = np.abs(grid.xi[nz]) ** a
    return s


def _deriv_sym(grid, order):
    s = (1j * grid.xi) ** order
    if order % 2:
        s[grid.nyquist] = 0.0
    return s


def _apply(sym, F):
    """Apply a symbol to a padded array (real in, real out for real symbols pairs)."""
    return np.fft.ifft(np.fft.fft(F) * sym).real


def check_decay(f, grid, what="f"):
    f = np.asarray(f)
    peak = np.max(np.abs(f))
    edge = max(abs(f[0]), abs(f[-1]))
    if peak > 0 and edge > EDGE_RTOL * peak:
        raise EdgeMassError(f"{what} does not decay at the window edges ({edge / peak:.2e} of its peak)")


def hilbert_line(f, grid):
    """H f with symbol -i sign(xi), i.e. (1/pi) p.v. int f(y)/(x-y) dy."""
    check_decay(f, grid)
    return grid.unpad(_apply(_hilbert_sym(grid), grid.pad(f)))


def frac_deriv_line(f, a, grid):
    check_decay(f, grid)
    return grid.unpad(_apply(_frac_sym(grid, a), grid.pad(f)))


def deriv_line(f, order, grid):
    return grid.unpad(_apply(_deriv_sym(grid, order), grid.pad(f)))


def commutator_x(f, grid):
    """[H, x] f = H(x f) - x H f; equals -(1/pi) int f for this convention."""
    check_decay(f, grid)
    x = grid.x
    return hilbert_line(x * f, grid) - x * hilbert_line(f, grid)


# ---------------------------------------------------------------------------
# commutator estimates
# ---------------------------------------------------------------------------

def _check_orders(alpha, beta, classical):
    if classical:
        if int(alpha) != alpha or int(beta) != beta or alpha < 0 or beta < 0 or alpha + beta < 1:
            raise InvalidOrders("classical commutator needs integers l, m >= 0 with l + m >= 1")
        return int(alpha), int(beta)
    if not (0 <= alpha <= 1 and 0 < beta <= 1 and abs(alpha + beta - 1) < 1e-12):
        raise InvalidOrders("need 0 <= alpha, 0 < beta <= 1 and alpha + beta = 1")
    return float(alpha), float(beta)


def _commutator_padded(g, f, alpha, beta, grid, classical):
    """D^a [H, g] D^b f on the padded window (classical: d^l [H, g] d^m f)."""
    G, F = grid.pad(g), grid.pad(f)
    if classical:
        left, right = _deriv_sym(grid, alpha), _deriv_sym(grid, beta)
    else:
        left, right = _frac_sym(grid, alpha), _frac_sym(grid, beta)
    H = _hilbert_sym(grid)
    v = _apply(right, F)
    c = _apply(H, G * v) - G * _apply(H, v)
    return _apply(left, c)


def _is_constant(g):
    g = np.asarray(g)
    return np.all(g == g.flat[0])


def commutator_ratio(g, f, alpha, beta, p, grid, classical=False):
    """||D^a [H,g] D^b f||_p / (||g'||_inf ||f||_p).

    With ``classical=True`` the orders are integers (l, m), derivatives are
    d/dx, and the normalization uses ||d^{l+m} g||_inf.
    """
    alpha, beta = _check_orders(alpha, beta, classical)
    if not 1 < p < np.inf:
        raise InvalidOrders("p must lie in (1, inf)")
    check_decay(f, grid)
    if _is_constant(g):
        return 0.0
    check_decay(g, grid, "g")
    num = grid.lp_norm(grid.unpad(_commutator_padded(g, f, alpha, beta, grid, classical)), p)
    order = alpha + beta if classical else 1
    dg = grid.lp_norm(deriv_line(g, order, grid), np.inf)
    den = dg * grid.lp_norm(f, p)
    if den == 0:
        return 0.0
    return num / den


def dense_symbol_matrix(sym):
    """Circulant matrix of a symbol built from an explicit DFT sum (no FFT)."""
    m = len(sym)
    j = np.arange(m)
    col = (np.exp(2j * np.pi * np.outer(j, j) / m) @ sym) / m
    idx = (j[:, None] - j[None, :]) % m
    return col[idx]


def commutator_dense(g, f, alpha, beta, grid, classical=False):
    """Same commutator as commutator_ratio's numerator, via dense matrices."""
    alpha, beta = _check_orders(alpha, beta, classical)
    G, F = grid.pad(g), grid.pad(f)
    if classical:
        A, B = dense_symbol_matrix(_deriv_sym(grid, alpha)), dense_symbol_matrix(_deriv_sym(grid, beta))
    else:
        A, B = dense_symbol_matrix(_frac_sym(grid, alpha)), dense_symbol_matrix(_frac_sym(grid, beta))
    H = dense_symbol_matrix(_hilbert_sym(grid))
    C = H * G[None, :] - G[:, None] * H
    K = A @ C @ B
    return grid.unpad((K @ F).real)


# ---------------------------------------------------------------------------
# random test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFamily:
    """Deterministic smooth, decaying random functions.

    Member ``i`` is ``exp(-(x-c)^2/(2 sigma^2)) * sum_k (a_k cos w_k x + b_k sin w_k x)``
    with standard-normal a_k, b_k under a Gaussian frequency envelope of width
    ``kappa``, frequencies ``w_k`` evenly spaced in [0, band_limit], centre ``c``
    uniform in [-center_spread, center_spread].  Members are normalized to unit
    discrete L2 norm on whatever grid they are sampled on.
    """

    __test__ = False  # not a pytest class

    seed: int = 0
    count: int = 100
    band_limit: float = 3.0
    kappa: float = 1.5
    sigma: float = 4.0
    n_modes: int = 16
    center_spread: float = 8.0

    def params(self, i):
        rng = np.random.default_rng([int(self.seed), int(i)])
        w = np.linspace(0.0, self.band_limit, self.n_modes)
        env = np.exp(-(w ** 2) / (2 * self.kappa ** 2))
        a = rng.standard_normal(self.n_modes) * env
        b = rng.standard_normal(self.n_modes) * env
        c = rng.uniform(-self.center_spread, self.center_spread)
        return w, a, b, c

    def evaluate(self, i, x):
        w, a, b, c = self.params(i)
        x = np.asarray(x, dtype=np.float64)
        wx = np.outer(x, w)
        osc = np.cos(wx) @ a + np.sin(wx) @ b
        return np.exp(-((x - c) ** 2) / (2 * self.sigma ** 2)) * osc

    def sample(self, i, grid, scale=1.0):
        """Member i at scale (f(scale*x)), unit-normalized on the grid."""
        f = self.evaluate(i, scale * grid.x)
        return f / grid.lp_norm(f, 2)


def _map_trials(fn, count, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, range(count)))
    return [fn(i) for i in range(count)]


@dataclass
class PropertyReport:
    name: str
    seed: int
    trials: int
    ratios: dict = field(default_factory=dict)  # label -> per-trial ratios
    extra: dict = field(default_factory=dict)

    def summary(self):
        rows = []
        for label, r in self.ratios.items():
            r = np.asarray(r, dtype=float)
            rows.append((label, float(np.max(r)), float(np.median(r))))
        return rows

    def max_ratio(self, label):
        return float(np.max(self.ratios[label]))

    def to_text(self):
        lines = [f"estimate={self.name}", f"family_seed={self.seed}", f"trials={self.trials}"]
        lines.append(f"{'case':<28}{'max':>24}{'median':>24}")
        for label, mx, med in self.summary():
            lines.append(f"{label:<28}{mx:>24.17g}{med:>24.17g}")
        for k, v in self.extra.items():
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        labels = list(self.ratios)
        with open(path, "w") as fh:
            fh.write("trial," + ",".join(labels) + "\n")
            for t in range(self.trials):
                fh.write(str(t) + "," + ",".join(format(float(self.ratios[l][t]), ".17g") for l in labels) + "\n")


def commutator_sweep(alpha, beta, p, family, W, resolutions, pad_factor=4, classical=False,
                     threads=1, name=None):
    """Per-trial commutator ratios at each resolution; g and f are distinct family members."""
    rep = PropertyReport(name or ("classical-commutator" if classical else "commutator"),
                         family.seed, family.count)
    for n in resolutions:
        grid = LineGrid(n, W, pad_factor)

        def trial(i, grid=grid):
            g = family.sample(2 * i, grid)
            f = family.sample(2 * i + 1, grid)
            return commutator_ratio(g, f, alpha, beta, p, grid, classical)

        rep.ratios[f"n={n}"] = _map_trials(trial, family.count, threads)
    mx = [rep.max_ratio(f"n={n}") for n in resolutions]
    rep.extra["resolution_ratio"] = format(mx[-1] / mx[0], ".17g")
    return rep


# ---------------------------------------------------------------------------
# weighted Hilbert bound
# ---------------------------------------------------------------------------

def weighted_hilbert_ratio(f, theta, trunc_n, grid):
    w = truncated_weight(grid.x, trunc_n) ** (theta / 2)
    hf = hilbert_line(f, grid)
    return grid.lp_norm(w * hf, 2) / grid.lp_norm(w * f, 2)


def weighted_hilbert_norm(theta, trunc_n, family, grid, threads=1, return_all=False):
    """max over the family of ||w_n^{theta/2} H f|| / ||w_n^{theta/2} f||."""
    if not -1 < theta < 1:
        raise ThetaOutOfRange(f"theta must lie in (-1, 1), got {theta!r}")
    ratios = _map_trials(lambda i: weighted_hilbert_ratio(family.sample(i, grid), theta, trunc_n, grid),
                         family.count, threads)
    return ratios if return_all else float(np.max(ratios))


# ---------------------------------------------------------------------------
# Stein square function
# ---------------------------------------------------------------------------

def stein_derivative(f, b, grid, use_numba=None):
    """(int |f(x)-f(y)|^2 / |x-y|^{1+2b} dy)^{1/2} at every grid point.

    f is treated as piecewise constant on grid cells and extended beyond the
    window by its edge values; the kernel is integrated exactly over each cell
    and over both tails.  The singular cell |y-x| < h/2 uses f'(x)^2 |y-x|^2
    with a centered-difference f'.
    """
    if not 0 < b < 1:
        raise BOutOfRange(f"b must lie in (0, 1), got {b!r}")
    f = np.asarray(f)
    if not np.all(np.isfinite(f)):
        raise ValidationError("f must be bounded")
    n, h = grid.n, grid.h
    kcell = kernels.stein_cell_kernel(n, h, b)
    acc = kernels.stein_sum(f, kcell, use_numba)
    fp = np.gradient(f, h)
    acc += np.abs(fp) ** 2 * 2 * (h / 2) ** (2 - 2 * b) / (2 - 2 * b)
    x = grid.x
    dl = x - (x[0] - h / 2)
    dr = (x[-1] + h / 2) - x
    acc += np.abs(f - f[0]) ** 2 * dl ** (-2 * b) / (2 * b)
    acc += np.abs(f - f[-1]) ** 2 * dr ** (-2 * b) / (2 * b)
    return np.sqrt(acc)


def stein_envelope(values, b, grid, lo=0.5, hi=None):
    """sup of D^b f(x) |x|^b over lo <= |x| <= hi (default hi = W/4), per decade and overall."""
    hi = grid.W / 4 if hi is None else hi
    ax = np.abs(grid.x)
    sel = (ax >= lo) & (ax <= hi)
    a = ax[sel]
    c = np.asarray(values)[sel] * a ** b
    decades = {}
    start = lo
    while start < hi:
        stop = min(10 * start, hi)
        s = (a >= start) & ((a < stop) if stop < hi else (a <= hi))
        if np.any(s):
            decades[f"[{start:g},{stop:g}]"] = float(np.max(c[s]))
        start = stop
    return float(np.max(c)), decades


# ---------------------------------------------------------------------------
# brute-force bilinear estimate on the lattice
# ---------------------------------------------------------------------------

MAX_LATTICE = 64
MAX_TAU_CELLS = 64


def _dyadic(v):
    v = int(v)
    if v < 1 or v & (v - 1):
        raise ValidationError(f"{v} is not a dyadic number >= 1")
    return v


def annulus_mask(N, R):
    """Lattice points (m, n), |m|,|n| <= R, with |(m,n)| in I_N."""
    m = np.arange(-R, R + 1)
    r = np.sqrt(m[:, None] ** 2 + m[None, :] ** 2)
    if N == 1:
        return r == 0
    return (r >= N / 2) & (r < N)


@dataclass(frozen=True)
class BilinearBox:
    R: int
    C: int

    @property
    def shape(self):
        return (2 * self.R + 1, 2 * self.R + 1, 2 * self.C + 1)


def bilinear_box(Ns, Ls):
    R = max(Ns) - 1
    C = max(Ns) ** 2 + max(Ls) + 1
    if R > MAX_LATTICE or 2 * max(Ls) + 1 > MAX_TAU_CELLS:
        raise LatticeTooLarge(f"lattice half-width {R} or tau support {2 * max(Ls) + 1} too large")
    return BilinearBox(R, C)


def support_mask(N, L, box, spec):
    """Cells (m, n, c) with |(m,n)| in I_N and |c - omega(m,n)| <= L (unit tau cells)."""
    m = np.arange(-box.R, box.R + 1)
    w = dispersion(spec, m[:, None] * np.ones((1, m.size)), m[None, :] * np.ones((m.size, 1)))
    c = np.arange(-box.C, box.C + 1)
    near = np.abs(c[None, None, :] - w[:, :, None]) <= L
    return annulus_mask(N, box.R)[:, :, None] & near


def bilinear_integral(f1, f2, f3, use_numba=None):
    return kernels.triple_convolution(f1, f2, f3, use_numba)


def bilinear_ratio(fs, Ns, Ls, use_numba=None):
    integral = bilinear_integral(*fs, use_numba=use_numba)
    norms = [math.sqrt(float(np.sum(f * f))) for f in fs]
    den = min(Ns) * math.sqrt(min(Ls)) * norms[0] * norms[1] * norms[2]
    if den == 0:
        return 0.0
    return integral / den


def _ascend(fs, masks, steps):
    """Alternating maximization of the trilinear form at fixed L2 norms.

    Each update replaces one f_j by the maximizer of the form given the other
    two (a restricted convolution or correlation), so the ratio never decreases.
    """
    f1, f2, f3 = fs
    m1, m2, m3 = masks

    def unit(v):
        v = np.clip(v, 0.0, None)
        s = np.linalg.norm(v)
        return v / s if s > 0 else v

    for _ in range(steps):
        f3 = unit(fftconvolve(f1, f2, "same") * m3)
        f1 = unit(fftconvolve(f3, f2[::-1, ::-1, ::-1], "same") * m1)
        f2 = unit(fftconvolve(f3, f1[::-1, ::-1, ::-1], "same") * m2)
    return [f1, f2, f3]


def bilinear_bruteforce(Ns, Ls, family, spec=None, threads=1, use_numba=None, ascent_steps=0):
    """Per-trial ratios int (f1*f2) f3 / (N_min L_min^1/2 prod ||f_j||) for
    random nonnegative f_j supported in D_{N_j, L_j} (torus, Lx = Ly = 2 pi).

    With ``ascent_steps > 0`` each random draw is first pushed towards a local
    maximizer of the ratio, which probes the best constant rather than its
    typical size.
    """
    spec = spec or EquationSpec()
    Ns = tuple(_dyadic(v) for v in Ns)
    Ls = tuple(_dyadic(v) for v in Ls)
    box = bilinear_box(Ns, Ls)
    masks = [support_mask(N, L, box, spec) for N, L in zip(Ns, Ls)]

    def trial(i):
        rng = np.random.default_rng([int(family.seed), int(i)])
        fs = [np.abs(rng.standard_normal(box.shape)) * mk for mk in masks]
        if ascent_steps:
            fs = _ascend(fs, masks, ascent_steps)
        return bilinear_ratio(fs, Ns, Ls, use_numba)

    return _map_trials(trial, family.count, threads)


def bilinear_sweep(family, Nset=(1, 2, 4), Lset=(1, 4, 16), spec=None, threads=1, ascent_steps=0):
    rep = PropertyReport("bilinear", family.seed, family.count)
    for N in Nset:
        for L in Lset:
            rep.ratios[f"N={N},L={L}"] = bilinear_bruteforce((N, N, N), (L, L, L), family, spec, threads,
                                                             ascent_steps=ascent_steps)
    mx = [np.max(r) for r in rep.ratios.values()]
    rep.extra["max_over_min"] = format(max(mx) / min(mx), ".17g")
    return rep
