"""Conserved quantities, norms, weights, moments and the decay-obstruction
functional, plus the time-series container filled during a run."""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .errors import NonUniformSeries, OffLatticeFrequency, TimesNotOnGrid, ValidationError
from .model import transverse_rate

# Cubic coefficient of the Hamiltonian for u_t + ... + u u_x = 0.
CUBIC_COEFF = 1.0 / 6.0


def _as_spectral(u):
    return sp.forward_transform(u)


def _sq_norm(F):
    g = F.grid
    return float(np.sum(np.abs(F.coeffs) ** 2) / (g.Lx * g.Ly))


def mass(u):
    """Discrete int u^2 dx dy."""
    return float(np.sum(u.values ** 2) * u.grid.cell_area)


def energy(u, spec):
    """Hamiltonian of the flow; needs zero x-mean data.

    BO2D:   1/2 (|D^1/2 u|^2 + |D^-1/2 u|^2 -/+ |D^-1/2 d_y u|^2) - 1/6 int u^3
    Shrira: 1/2 (|D^1/2 u|^2 + |D^-1/2 d_y u|^2) - 1/6 int u^3
    """
    from .model import Model

    F = _as_spectral(u)
    dm = sp.frac_deriv_x(F, -0.5)
    half = _sq_norm(sp.frac_deriv_x(F, 0.5))
    transverse = _sq_norm(sp.deriv(dm, 1))
    cubic = float(np.sum(u.values ** 3) * u.grid.cell_area)
    if spec.model == Model.SHRIRA:
        quad = half + transverse
    else:
        quad = half + _sq_norm(dm) + spec.sigma * transverse
    return 0.5 * quad - CUBIC_COEFF * cubic


def norms(u, s):
    """H^s norm and the energy-space norms X^s, X~^s (discrete L2 throughout)."""
    F = _as_spectral(u)
    hs = math.sqrt(_sq_norm(sp.bessel_potential(F, s, "full")))
    jx = math.sqrt(_sq_norm(sp.bessel_potential(F, s, "x")))
    dm = sp.frac_deriv_x(F, -0.5)
    dmy = math.sqrt(_sq_norm(sp.deriv(dm, 1)))
    return {"hs": hs, "xs": jx + math.sqrt(_sq_norm(dm)) + dmy, "xs_tilde": jx + dmy}


def japanese(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=np.float64) ** 2)


def truncated_weight(x, n):
    """Capped weight w_n: <x> for |x| <= n, 2n for |x| >= 3n.

    The bridge on n < |x| < 3n is the quintic Hermite interpolant matching value,
    slope and curvature of <x> at |x| = n and of the constant 2n at |x| = 3n.
    It is monotone with 0 <= w' <= 1 for n >= 2, the admissible range.
    """
    n = float(n)
    if not n >= 2:
        raise ValidationError(f"truncation n must be >= 2, got {n!r}")
    a = np.abs(np.asarray(x, dtype=np.float64))
    out = np.where(a <= n, japanese(a), 2 * n)
    mid = (a > n) & (a < 3 * n)
    if np.any(mid):
        h = 2 * n
        t = (a[mid] - n) / h
        p0, p1 = math.sqrt(1 + n * n), 2 * n
        d0, d1 = n / p0 * h, 0.0
        c0, c1 = (1 / p0 ** 3) * h * h, 0.0
        h00 = 1 - 10 * t**3 + 15 * t**4 - 6 * t**5
        h10 = t - 6 * t**3 + 8 * t**4 - 3 * t**5
        h20 = 0.5 * t**2 - 1.5 * t**3 + 1.5 * t**4 - 0.5 * t**5
        h01 = 10 * t**3 - 15 * t**4 + 6 * t**5
        h11 = -4 * t**3 + 7 * t**4 - 3 * t**5
        h21 = 0.5 * t**3 - t**4 + 0.5 * t**5
        out = out.copy()
        out[mid] = p0 * h00 + d0 * h10 + c0 * h20 + p1 * h01 + d1 * h11 + c1 * h21
    return out if out.ndim else float(out)


def weighted_norm(u, r1, r2, truncation_n=None):
    """(||w(x)^r1 u||, ||w(y)^r2 u||) with w = <.> or the capped w_n."""
    if r1 < 0 or r2 < 0:
        raise ValidationError("weight exponents must be nonnegative")
    g = u.grid
    if truncation_n is None:
        wx, wy = japanese(g.x), japanese(g.y)
    else:
        wx, wy = truncated_weight(g.x, truncation_n), truncated_weight(g.y, truncation_n)
    u2 = u.values ** 2
    nx_ = math.sqrt(np.sum(u2 * (wx ** (2 * r1))[:, None]) * g.cell_area)
    ny_ = math.sqrt(np.sum(u2 * (wy ** (2 * r2))[None, :]) * g.cell_area)
    return nx_, ny_


def eta_index(grid, eta, tol=1e-9):
    """Lattice index j with eta = 2*pi*j/Ly, or OffLatticeFrequency."""
    j = eta * grid.Ly / (2 * math.pi)
    jr = round(j)
    if abs(j - jr) > tol * max(1.0, abs(j)):
        raise OffLatticeFrequency(f"eta={eta!r} is not a multiple of 2*pi/Ly")
    if not -grid.ny // 2 <= jr < grid.ny // 2:
        raise OffLatticeFrequency(f"eta={eta!r} is beyond the y Nyquist frequency")
    return int(jr)


def moment_transform(u, eta):
    """int int x u(x,y) exp(-i y eta) dx dy on the centered box."""
    g = u.grid
    eta_index(g, eta)
    xm = g.x @ u.values  # sum_i x_i u(x_i, y_j)
    return complex(np.sum(xm * np.exp(-1j * eta * g.y)) * g.cell_area)


def boundary_fraction(u, outer=0.1):
    """||u|| on the outer annulus of the box relative to ||u||."""
    g = u.grid
    X, Y = g.meshgrid()
    rim = np.maximum(np.abs(X) / (g.Lx / 2), np.abs(Y) / (g.Ly / 2)) > 1 - outer
    tot = np.sum(u.values ** 2)
    if tot == 0:
        return 0.0
    return float(math.sqrt(np.sum(u.values[rim] ** 2) / tot))


def check_boundary_mass(u, threshold=1e-6):
    frac = boundary_fraction(u)
    if frac > threshold:
        warnings.warn(
            f"field mass near the box boundary ({frac:.2e} of the norm) spoils moment diagnostics",
            RuntimeWarning,
            stacklevel=2,
        )
    return frac


# ---------------------------------------------------------------------------
# time series
# ---------------------------------------------------------------------------

def quadratic_spectrum(F, dealias="two_thirds"):
    """Spectrum of u^2, with 2/3 truncation before and after the product."""
    return _quadratic(F.grid, F.coeffs, dealias)


def _quadratic(g, c, dealias):
    if dealias == "two_thirds":
        mask = g.dealias_mask()
        c = c * mask
    u = np.fft.ifft2(c * g._phase).real / g.cell_area
    sq = np.fft.fft2(u * u) * g._phase * g.cell_area
    if dealias == "two_thirds":
        sq *= mask
    elif dealias != "none":
        raise ValidationError(f"dealias must be 'two_thirds' or 'none', got {dealias!r}")
    return sq


@dataclass
class DiagnosticSeries:
    """Time-stamped record of invariants, norms, probes and moment data.

    ``energy`` and ``xs`` are None when the run's data has a nonzero x-mean
    (the quantities are undefined outside the energy space).
    """

    grid: sp.SpectralGrid
    probes: list = field(default_factory=list)
    eta_indices: list = field(default_factory=list)
    norm_s: float = 2.0
    weight_r: tuple = (1.0, 1.0)
    weight_trunc: float = None
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = None
    hs: list = field(default_factory=list)
    xs: list = None
    wx: list = field(default_factory=list)
    wy: list = field(default_factory=list)
    probe_uhat: list = field(default_factory=list)
    probe_u2hat: list = field(default_factory=list)
    moments: list = field(default_factory=list)
    u2hat0: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    @property
    def etas(self):
        return [2 * math.pi * j / self.grid.Ly for j in self.eta_indices]

    def array(self, name):
        return np.asarray(getattr(self, name))

    def probe_series(self, mode):
        k = self.probes.index(tuple(mode))
        return (
            np.array([r[k] for r in self.probe_uhat]),
            np.array([r[k] for r in self.probe_u2hat]),
        )

    def moment_series(self, j):
        k = self.eta_indices.index(j)
        return np.array([r[k] for r in self.moments])

    def u2hat0_series(self, n):
        return np.array([row[n % self.grid.ny] for row in self.u2hat0])

    def time_index(self, t, rtol=1e-9):
        times = self.array("times")
        k = int(np.argmin(np.abs(times - t)))
        scale = max(1.0, abs(t))
        if abs(times[k] - t) > rtol * scale:
            raise TimesNotOnGrid(f"t={t!r} is not a record time")
        return k

    def check_uniform(self, rtol=1e-9):
        times = self.array("times")
        if len(times) < 2:
            return
        d = np.diff(times)
        if np.any(d <= 0) or np.max(np.abs(d - d[0])) > rtol * max(abs(d[0]), 1e-300) + 1e-12:
            raise NonUniformSeries("record times are not uniformly spaced")

    def columns(self, u2hat_indices=None):
        """CSV header; depends only on the configuration."""
        cols = ["t", "mass", "energy", "hs", "xs", "wx", "wy"]
        for j in self.eta_indices:
            eta = repr(2 * math.pi * j / self.grid.Ly)
            cols += [f"moment_re(eta={eta})", f"moment_im(eta={eta})"]
        for n in self._u2_cols(u2hat_indices):
            cols += [f"u2hat0_re({n})", f"u2hat0_im({n})"]
        for m, n in self.probes:
            cols += [f"uhat_re({m};{n})", f"uhat_im({m};{n})", f"u2hat_re({m};{n})", f"u2hat_im({m};{n})"]
        return cols

    def _u2_cols(self, u2hat_indices):
        return list(self.eta_indices if u2hat_indices is None else u2hat_indices)

    def rows(self, u2hat_indices=None):
        nan = float("nan")
        for k, t in enumerate(self.times):
            row = [t, self.mass[k], self.energy[k] if self.energy is not None else nan, self.hs[k],
                   self.xs[k] if self.xs is not None else nan, self.wx[k], self.wy[k]]
            for v in self.moments[k]:
                row += [v.real, v.imag]
            for n in self._u2_cols(u2hat_indices):
                v = self.u2hat0[k][n % self.grid.ny]
                row += [v.real, v.imag]
            for a, b in zip(self.probe_uhat[k], self.probe_u2hat[k]):
                row += [a.real, a.imag, b.real, b.imag]
            yield row

    def write_csv(self, path, u2hat_indices=None):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns(u2hat_indices))
            for row in self.rows(u2hat_indices):
                w.writerow([format(float(v), ".17g") for v in row])


def read_csv(path):
    """Header list and float array of a series CSV."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    return header, data


class Recorder:
    """Evaluates every per-record diagnostic for a state and appends it."""

    def __init__(self, grid, spec, probes=(), eta_indices=(), norm_s=2.0,
                 weight_r=(1.0, 1.0), weight_trunc=None, dealias="two_thirds"):
        self.spec = spec
        self.dealias = dealias
        self.series = DiagnosticSeries(
            grid=grid,
            probes=[tuple(int(v) for v in p) for p in probes],
            eta_indices=[int(j) for j in eta_indices],
            norm_s=float(norm_s),
            weight_r=tuple(weight_r),
            weight_trunc=weight_trunc,
        )
        self._in_energy_space = None

    def __call__(self, state):
        self.record(state)

    def record(self, state):
        s = self.series
        g = s.grid
        F = state.field
        u = sp.RealField(g, sp.to_physical(F))
        if self._in_energy_space is None:
            self._in_energy_space = sp.zero_mean_defect(F) <= 1e-12
            if self._in_energy_space:
                s.energy, s.xs = [], []
            if s.eta_indices:
                check_boundary_mass(u)
        s.times.append(float(state.time))
        s.mass.append(mass(u))
        if self._in_energy_space:
            s.energy.append(energy(u, self.spec))
            nm = norms(u, s.norm_s)
            s.xs.append(nm["xs"])
        else:
            nm = {"hs": math.sqrt(_sq_norm(sp.bessel_potential(F, s.norm_s, "full")))}
        s.hs.append(nm["hs"])
        wx, wy = weighted_norm(u, *s.weight_r, truncation_n=s.weight_trunc)
        s.wx.append(wx)
        s.wy.append(wy)
        sq = quadratic_spectrum(F, self.dealias)
        s.probe_uhat.append(np.array([F.coeffs[g.index(m, n)] for m, n in s.probes], dtype=complex))
        s.probe_u2hat.append(np.array([sq[g.index(m, n)] for m, n in s.probes], dtype=complex))
        s.moments.append(np.array(
            [moment_transform(u, 2 * math.pi * j / g.Ly) for j in s.eta_indices], dtype=complex))
        s.u2hat0.append(sq[0, :].copy())


# ---------------------------------------------------------------------------
# obstruction functional
# ---------------------------------------------------------------------------

def _trapezoid(y, t):
    if len(t) < 2:
        return 0.0 * y[0] if len(y) else 0.0
    dt = np.diff(t)
    return np.sum(0.5 * (y[1:] + y[:-1]) * dt)


def obstruction_functional(series, eta, t1, t2, spec):
    """D(eta) = 2i sin(theta (t2-t1)) d_xi u_hat(0,eta,t1)
                + int_t1^t2 sin(theta (t2-t')) u2_hat(0,eta,t') dt'.

    Vanishes for solutions with enough x-decay at both times; the size of D
    measures the obstruction.
    """
    g = series.grid
    j = eta_index(g, eta)
    if j not in series.eta_indices:
        raise OffLatticeFrequency(f"eta index {j} was not recorded by this series")
    if not t1 < t2:
        raise TimesNotOnGrid("need t1 < t2")
    k1, k2 = series.time_index(t1), series.time_index(t2)
    times = series.array("times")[k1:k2 + 1]
    theta = transverse_rate(spec, eta)
    t1r, t2r = times[0], times[-1]
    dxi = -1j * series.moment_series(j)[k1]
    u2 = series.u2hat0_series(j)[k1:k2 + 1]
    integral = _trapezoid(np.sin(theta * (t2r - times)) * u2, times)
    return complex(2j * math.sin(theta * (t2r - t1r)) * dxi + integral)


def mass_identity_residual(series, t1, t2):
    """|int sin(t2-t') u2_hat(0,0,t') dt' - M(t1) (1 - cos(t2-t1))| / M(t1)."""
    k1, k2 = series.time_index(t1), series.time_index(t2)
    times = series.array("times")[k1:k2 + 1]
    u2 = series.u2hat0_series(0)[k1:k2 + 1]
    m = series.mass[k1]
    integral = _trapezoid(np.sin(times[-1] - times) * u2, times)
    if m == 0:
        return abs(integral)
    return float(abs(integral - m * (1 - math.cos(times[-1] - times[0]))) / m)
