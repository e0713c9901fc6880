"""Periodic box, field representations, transforms and Fourier multipliers.

Conventions
-----------
* Arrays are indexed ``[i, j]`` with ``i`` along x and ``j`` along y.
* Physical samples sit at ``x_i = -Lx/2 + i*Lx/nx`` (same for y).
* Spectral coefficients are stored in numpy FFT order; ``grid.mx[i]`` is the
  signed integer mode number of row ``i`` and ``kx = 2*pi*mx/Lx``.
* The forward transform approximates the continuum integral
  ``u_hat(k) = int u(x) exp(-i k.x) dx``, i.e. it carries the cell area
  ``Lx*Ly/(nx*ny)``.  Parseval then reads
  ``sum |u_hat|^2 / (Lx*Ly) == dA * sum u^2``.
* ``sign(0) = 0`` everywhere.  Odd symbols (d/dx, H_x) zero the Nyquist row.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NegativePowerOnNonzeroMean, NonHermitianInput, ValidationError

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic box ``[-Lx/2, Lx/2) x [-Ly/2, Ly/2)``."""

    nx: int
    ny: int
    Lx: float = 2 * np.pi
    Ly: float = 2 * np.pi

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 4 or v % 2:
                raise ValidationError(f"{name} must be an even integer >= 4, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("Lx", "Ly"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ValidationError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def cell_area(self):
        return self.Lx * self.Ly / (self.nx * self.ny)

    @cached_property
    def mx(self):
        return np.fft.fftfreq(self.nx, 1.0 / self.nx).astype(np.int64)

    @cached_property
    def my(self):
        return np.fft.fftfreq(self.ny, 1.0 / self.ny).astype(np.int64)

    @cached_property
    def kx(self):
        return 2 * np.pi * self.mx / self.Lx

    @cached_property
    def ky(self):
        return 2 * np.pi * self.my / self.Ly

    @cached_property
    def KX(self):
        return self.kx[:, None]

    @cached_property
    def KY(self):
        return self.ky[None, :]

    @cached_property
    def x(self):
        return -self.Lx / 2 + np.arange(self.nx) * (self.Lx / self.nx)

    @cached_property
    def y(self):
        return -self.Ly / 2 + np.arange(self.ny) * (self.Ly / self.ny)

    @cached_property
    def _phase(self):
        # exp(-i k x_0) with x_0 = -L/2 gives (-1)^m per axis
        px = np.where(self.mx % 2 == 0, 1.0, -1.0)
        py = np.where(self.my % 2 == 0, 1.0, -1.0)
        return px[:, None] * py[None, :]

    def meshgrid(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def index(self, m, n):
        """Array index of lattice mode (m, n)."""
        return (int(m) % self.nx, int(n) % self.ny)

    def wavenumber(self, m, n):
        return (2 * np.pi * m / self.Lx, 2 * np.pi * n / self.Ly)

    def nyquist_mask(self, axis):
        """True on the unpaired Nyquist row (axis 0) or column (axis 1)."""
        mask = np.zeros(self.shape, dtype=bool)
        if axis == 0:
            mask[self.nx // 2, :] = True
        else:
            mask[:, self.ny // 2] = True
        return mask

    @cached_property
    def _dealias(self):
        kmx = (self.nx - 1) // 3
        kmy = (self.ny - 1) // 3
        mask = (np.abs(self.mx)[:, None] <= kmx) & (np.abs(self.my)[None, :] <= kmy)
        mask.setflags(write=False)
        return mask

    def dealias_mask(self):
        """2/3-rule keep-mask: |m| <= (nx-1)//3 and |n| <= (ny-1)//3."""
        return self._dealias


@dataclass(frozen=True, eq=False)
class RealField:
    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValidationError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("RealField values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: SpectralGrid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValidationError(f"coeff shape {c.shape} does not match grid {self.grid.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def mode(self, m, n):
        return self.coeffs[self.grid.index(m, n)]

    def with_coeffs(self, coeffs, real=None):
        return SpectralField(self.grid, coeffs, self.real if real is None else real)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs, self.real and other.real)

    def __mul__(self, c):
        c = complex(c)
        return self.with_coeffs(self.coeffs * c, self.real and c.imag == 0)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class MultiplierSymbol:
    """One complex symbol value per lattice mode.

    ``unitary`` and ``real_preserving`` are claims checked on construction.
    """

    grid: SpectralGrid
    values: np.ndarray
    unitary: bool = False
    real_preserving: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise ValidationError("symbol shape does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValidationError("symbol entries must be finite")
        if self.unitary and np.max(np.abs(np.abs(v) - 1.0)) > 1e-14:
            raise ValidationError("symbol flagged unitary but |value| != 1")
        if self.real_preserving and hermitian_defect(v) > 1e-14:
            raise ValidationError("symbol flagged real-preserving but not conjugate-symmetric")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def apply(self, F):
        return F.with_coeffs(F.coeffs * self.values, F.real and self.real_preserving)

    def __matmul__(self, other):
        return MultiplierSymbol(
            self.grid,
            self.values * other.values,
            unitary=self.unitary and other.unitary,
            real_preserving=self.real_preserving and other.real_preserving,
        )


def conj_reflect(a):
    """Array of a(-m, -n) in FFT order."""
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))


def hermitian_defect(coeffs):
    """max |c(-m,-n) - conj(c(m,n))| relative to max |c| (0 for the zero array)."""
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(conj_reflect(coeffs) - np.conj(coeffs))) / scale)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def forward_transform(f):
    g = f.grid
    coeffs = np.fft.fft2(f.values) * g._phase * g.cell_area
    return SpectralField(g, coeffs, real=True)


def inverse_transform(F, tol=HERMITIAN_RTOL):
    g = F.grid
    if hermitian_defect(F.coeffs) > tol:
        raise NonHermitianInput(
            f"coefficients violate Hermitian symmetry (defect {hermitian_defect(F.coeffs):.3e})"
        )
    vals = np.fft.ifft2(F.coeffs * g._phase).real / g.cell_area
    return RealField(g, vals)


def to_physical(F):
    """Inverse transform without the symmetry check (internal hot path)."""
    g = F.grid
    return np.fft.ifft2(F.coeffs * g._phase).real / g.cell_area


def to_spectral(grid, values):
    return np.fft.fft2(values) * grid._phase * grid.cell_area


def l2_norm(F):
    """Continuum L2 norm of the field represented by F (Parseval)."""
    g = F.grid
    return float(np.sqrt(np.sum(np.abs(F.coeffs) ** 2) / (g.Lx * g.Ly)))


def inner(F, G):
    """Continuum inner product <f, g> = int f conj(g)."""
    g = F.grid
    return complex(np.sum(F.coeffs * np.conj(G.coeffs)) / (g.Lx * g.Ly))


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

def _broadcast(grid, arr):
    return np.broadcast_to(arr, grid.shape)


def hilbert_symbol(grid):
    v = -1j * np.sign(grid.KX) * np.ones(grid.shape)
    v[grid.nyquist_mask(0)] = 0.0
    return MultiplierSymbol(grid, v, real_preserving=True)


def deriv_symbol(grid, axis=0):
    if axis in (0, "x"):
        v = _broadcast(grid, 1j * grid.KX).copy()
        v[grid.nyquist_mask(0)] = 0.0
    elif axis in (1, "y"):
        v = _broadcast(grid, 1j * grid.KY).copy()
        v[grid.nyquist_mask(1)] = 0.0
    else:
        raise ValidationError(f"axis must be 0/'x' or 1/'y', got {axis!r}")
    return MultiplierSymbol(grid, v, real_preserving=True)


def frac_deriv_symbol(grid, s):
    akx = np.abs(grid.KX) * np.ones(grid.shape)
    if s == 0:
        v = np.ones(grid.shape)
    else:
        v = np.zeros(grid.shape)
        nz = akx > 0
        v[nz] = akx[nz] ** s
    return MultiplierSymbol(grid, v, real_preserving=True)


def bessel_symbol(grid, s, axis="full"):
    if axis in ("x", 0):
        k2 = grid.KX ** 2 * np.ones(grid.shape)
    elif axis in ("y", 1):
        k2 = grid.KY ** 2 * np.ones(grid.shape)
    elif axis == "full":
        k2 = grid.KX ** 2 + grid.KY ** 2
    else:
        raise ValidationError(f"axis must be 'x', 'y' or 'full', got {axis!r}")
    return MultiplierSymbol(grid, (1.0 + k2) ** (s / 2), real_preserving=True)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def hilbert_x(F):
    return hilbert_symbol(F.grid).apply(F)


def zero_mean_defect(F):
    """max |u_hat(0, n)| relative to max |u_hat| (0 for the zero field)."""
    scale = np.max(np.abs(F.coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(F.coeffs[0, :])) / scale)


def frac_deriv_x(F, s, project=False):
    """Multiply by |kx|^s.

    For ``s < 0`` the kx = 0 row must already vanish (to 1e-12 of the largest
    coefficient); pass ``project=True`` to drop it instead of raising.
    """
    s = float(s)
    if s < 0 and not project and zero_mean_defect(F) > 1e-12:
        raise NegativePowerOnNonzeroMean(
            f"D_x^{s:g} needs zero x-mean data; kx=0 row has relative size {zero_mean_defect(F):.3e}"
        )
    return frac_deriv_symbol(F.grid, s).apply(F)


def deriv(F, axis=0):
    return deriv_symbol(F.grid, axis).apply(F)


def bessel_potential(F, s, axis="full"):
    return bessel_symbol(F.grid, s, axis).apply(F)


# ---------------------------------------------------------------------------
# Littlewood-Paley pieces
# ---------------------------------------------------------------------------

def _q(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def lp_bump(xi):
    """Smooth even bump: 1 on [-1, 1], 0 outside (-2, 2)."""
    a = np.abs(np.asarray(xi, dtype=np.float64))
    num = _q(2.0 - a)
    den = num + _q(a - 1.0)
    out = np.where(a <= 1.0, 1.0, 0.0)
    mid = (a > 1.0) & (a < 2.0)
    out = np.where(mid, num / np.where(mid, den, 1.0), out)
    return out if out.ndim else float(out)


def _check_dyadic(N):
    if N < 1 or int(N) != N or (int(N) & (int(N) - 1)):
        raise ValidationError(f"N must be a power of two >= 1, got {N!r}")
    return int(N)


def lp_piece(xi, N):
    """psi_N(xi); psi_1 is the low-frequency bump itself."""
    N = _check_dyadic(N)
    xi = np.asarray(xi, dtype=np.float64)
    if N == 1:
        return lp_bump(xi)
    return lp_bump(xi / N) - lp_bump(2 * xi / N)


def lp_symbol(grid, N, mode="radial", cumulative=False):
    N = _check_dyadic(N)
    if mode == "radial":
        k = np.sqrt(grid.KX ** 2 + grid.KY ** 2)
    elif mode in ("x", "x-only"):
        k = np.abs(grid.KX) * np.ones(grid.shape)
    else:
        raise ValidationError(f"mode must be 'radial' or 'x-only', got {mode!r}")
    v = lp_bump(k / N) if cumulative else lp_piece(k, N)
    return MultiplierSymbol(grid, v, real_preserving=True)


def lp_project(F, N, mode="radial", cumulative=False):
    return lp_symbol(F.grid, N, mode, cumulative).apply(F)
