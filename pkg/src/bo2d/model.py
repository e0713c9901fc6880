"""Equation descriptors, dispersion symbols and the exact linear propagator."""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spectral import MultiplierSymbol


class Model(enum.IntEnum):
    BO2D = 0
    SHRIRA = 1


class TransverseSign(enum.IntEnum):
    """Sign in front of eta^2 in the BO2D dispersion relation."""

    MINUS = 0
    PLUS = 1


@dataclass(frozen=True)
class EquationSpec:
    model: Model = Model.BO2D
    transverse_sign: TransverseSign = TransverseSign.MINUS

    def __post_init__(self):
        object.__setattr__(self, "model", _coerce(Model, self.model))
        object.__setattr__(self, "transverse_sign", _coerce(TransverseSign, self.transverse_sign))

    @property
    def sigma(self):
        """+1 or -1: the factor multiplying eta^2 inside omega for BO2D."""
        return -1.0 if self.transverse_sign == TransverseSign.MINUS else 1.0

    def label(self):
        if self.model == Model.SHRIRA:
            return "shrira"
        return "bo2d-" + self.transverse_sign.name.lower()


def _coerce(enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    if isinstance(value, str):
        try:
            return enum_cls[value.strip().upper().replace("-", "_")]
        except KeyError:
            pass
    else:
        try:
            return enum_cls(int(value))
        except ValueError:
            pass
    raise ValidationError(f"{value!r} is not a valid {enum_cls.__name__}")


def dispersion(spec, xi, eta):
    """omega(xi, eta); works elementwise on arrays.

    BO2D:   sign(xi) * (1 + xi^2 -/+ eta^2)
    Shrira: sign(xi) * (xi^2 + eta^2)
    """
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if spec.model == Model.SHRIRA:
        w = np.sign(xi) * (xi * xi + eta * eta)
    else:
        w = np.sign(xi) * (1.0 + xi * xi + spec.sigma * eta * eta)
    return w if w.ndim else float(w)


def resonance(spec, k1, k2):
    """Omega(k1, k2) = omega(k1 + k2) - omega(k1) - omega(k2)."""
    (x1, y1), (x2, y2) = k1, k2
    return (
        dispersion(spec, np.add(x1, x2), np.add(y1, y2))
        - dispersion(spec, x1, y1)
        - dispersion(spec, x2, y2)
    )


def transverse_rate(spec, eta):
    """theta(eta) = omega(0+, eta): 1 -/+ eta^2 for BO2D, eta^2 for Shrira."""
    eta = np.asarray(eta, dtype=np.float64)
    if spec.model == Model.SHRIRA:
        r = eta * eta
    else:
        r = 1.0 + spec.sigma * eta * eta
    return r if r.ndim else float(r)


def omega_grid(spec, grid):
    """omega on the lattice; zero on the unpaired x-Nyquist row (odd symbol)."""
    w = dispersion(spec, grid.KX, grid.KY) * np.ones(grid.shape)
    w[grid.nyquist_mask(0)] = 0.0
    return w


def propagator(spec, grid, t):
    """Symbol exp(i t omega) of the linear group S(t)."""
    t = float(t)
    if not np.isfinite(t):
        raise ValidationError("propagator time must be finite")
    v = np.exp(1j * t * omega_grid(spec, grid))
    return MultiplierSymbol(grid, v, unitary=True, real_preserving=True)
