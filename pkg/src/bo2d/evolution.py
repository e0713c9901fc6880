"""Nonlinear term, integrating-factor RK4 stepping, the run loop and the
Duhamel check."""

import enum
import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import spectral as sp
from .diagnostics import _quadratic, quadratic_spectrum
from .errors import NonFiniteState, NonUniformSeries, ValidationError
from .model import EquationSpec, dispersion, omega_grid


class Dealias(str, enum.Enum):
    TWO_THIRDS = "two_thirds"
    NONE = "none"


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    dealias: Dealias = Dealias.TWO_THIRDS
    record_every: int = 1
    checkpoint_every: int = 0
    nonlinear: bool = True

    def __post_init__(self):
        dt = float(self.dt)
        if not (dt > 0 and math.isfinite(dt)):
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "dealias", Dealias(self.dealias))
        if int(self.record_every) < 1:
            raise ValidationError("record_every must be >= 1")
        if int(self.checkpoint_every) < 0:
            raise ValidationError("checkpoint_every must be >= 0")
        object.__setattr__(self, "record_every", int(self.record_every))
        object.__setattr__(self, "checkpoint_every", int(self.checkpoint_every))


@dataclass(frozen=True, eq=False)
class SimState:
    spec: EquationSpec
    grid: sp.SpectralGrid
    time: float
    field: sp.SpectralField
    step_count: int = 0

    @classmethod
    def from_real(cls, spec, u, time=0.0, step_count=0):
        return cls(spec, u.grid, float(time), sp.forward_transform(u), int(step_count))

    def physical(self):
        return sp.RealField(self.grid, sp.to_physical(self.field))


def nonlinear_term(F, dealias=Dealias.TWO_THIRDS):
    """Spectrum of -1/2 d_x(u^2); the kx = 0 row is exactly zero."""
    sq = quadratic_spectrum(F, Dealias(dealias).value)
    return F.with_coeffs(sq * _half_ikx(F.grid), real=True)


@lru_cache(maxsize=32)
def _half_ikx_cached(grid):
    v = -0.5j * grid.KX * np.ones(grid.shape)
    v[grid.nyquist_mask(0)] = 0.0
    v.setflags(write=False)
    return v


def _half_ikx(grid):
    return _half_ikx_cached(grid)


@lru_cache(maxsize=32)
def _factors(spec, grid, dt):
    """Cached exp(i omega dt/2) and exp(i omega dt) for the fixed step."""
    w = omega_grid(spec, grid)
    half = np.exp(0.5j * dt * w)
    full = np.exp(1j * dt * w)
    half.setflags(write=False)
    full.setflags(write=False)
    return half, full


def _rhs(c, grid, dealias):
    return _quadratic(grid, c, dealias) * _half_ikx(grid)


def _rk4_v(v, E0, Eh, E1, grid, cfg):
    """Classical RK4 for v' = e^{-i w s} N(e^{i w s} v) over one step.

    E0, Eh, E1 are the phases e^{i w s} at the start, middle and end of the
    step (E0 = None means identity).
    """
    dt = cfg.dt
    dl = cfg.dealias.value
    k1 = _rhs(v if E0 is None else E0 * v, grid, dl)
    if E0 is not None:
        k1 *= E0.conj()
    cEh = Eh.conj()
    k2 = cEh * _rhs(Eh * (v + 0.5 * dt * k1), grid, dl)
    k3 = cEh * _rhs(Eh * (v + 0.5 * dt * k2), grid, dl)
    k4 = E1.conj() * _rhs(E1 * (v + dt * k3), grid, dl)
    return v + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _ifrk4(c, spec, grid, cfg):
    E, E2 = _factors(spec, grid, cfg.dt)
    if not cfg.nonlinear:
        return c * E2
    return E2 * _rk4_v(c, None, E, E2, grid, cfg)


def step_ifrk4(state, cfg):
    """One classical RK4 step on v = exp(-i omega t) u_hat."""
    c = _ifrk4(state.field.coeffs, state.spec, state.grid, cfg)
    if not np.all(np.isfinite(c)):
        raise NonFiniteState(f"non-finite coefficients at step {state.step_count + 1}")
    return replace(
        state,
        field=sp.SpectralField(state.grid, c),
        time=state.time + cfg.dt,
        step_count=state.step_count + 1,
    )


def canonicalize(state, return_values=False):
    """Rebuild the field from its physical samples, exactly as a checkpoint load does.

    The round trip is not idempotent at roundoff level, so the samples are
    what a checkpoint must store; ``return_values`` hands them back.
    """
    vals = sp.to_physical(state.field)
    out = replace(state, field=sp.SpectralField(state.grid, sp.to_spectral(state.grid, vals)))
    return (out, vals) if return_values else out


def advective_number(state, dt):
    u = sp.to_physical(state.field)
    return dt * float(np.max(np.abs(state.grid.kx))) * float(np.max(np.abs(u)))


def run(state, T, cfg, recorder=None, hooks=(), checkpoint_dir=None):
    """Advance ``state`` until its time reaches ``T``.

    ``recorder`` (a :class:`~bo2d.diagnostics.Recorder`, created with default
    settings if omitted) and every callable in ``hooks`` are invoked with the
    state at the start, every ``cfg.record_every`` steps and at the end.
    Checkpoints are written to ``checkpoint_dir`` every ``cfg.checkpoint_every``
    steps; the run then continues from the round-tripped field so that a
    restart from the file is bit-identical.

    Returns ``(final_state, recorder.series)``.
    """
    from .diagnostics import Recorder
    from .io import checkpoint_name, write_checkpoint

    T = float(T)
    if T < state.time - 1e-12 * max(1.0, abs(T)):
        raise ValidationError(f"T={T} is before the current time {state.time}")
    if recorder is None:
        recorder = Recorder(state.grid, state.spec, dealias=cfg.dealias.value)
    callbacks = [recorder, *hooks]

    if cfg.nonlinear:
        adv = advective_number(state, cfg.dt)
        if adv > 1:
            warnings.warn(f"dt*max|kx|*max|u| = {adv:.3g} > 1; the step is likely unstable",
                          RuntimeWarning, stacklevel=2)

    dt = cfg.dt
    n_steps = max(0, math.ceil((T - state.time) / dt - 1e-9))
    origin = state.time - state.step_count * dt
    grid, spec = state.grid, state.spec
    w = omega_grid(spec, grid)
    # The loop carries the integrating-factor variable v relative to the step
    # ref_step; phases are recomputed from the elapsed time rather than
    # multiplied up, so their rounding does not accumulate.
    ref_step = state.step_count
    v = state.field.coeffs
    E0 = None
    for cb in callbacks:
        cb(state)
    for k in range(n_steps):
        j = state.step_count - ref_step
        Eh = np.exp((0.5j * (2 * j + 1) * dt) * w)
        E1 = np.exp((1j * (j + 1) * dt) * w)
        if cfg.nonlinear:
            v = _rk4_v(v, E0, Eh, E1, grid, cfg)
            if not np.all(np.isfinite(v)):
                raise NonFiniteState(f"non-finite coefficients at step {state.step_count + 1}")
        count = state.step_count + 1
        state = replace(state, field=sp.SpectralField(grid, E1 * v), step_count=count,
                        time=origin + count * dt)
        E0 = E1
        if cfg.checkpoint_every and count % cfg.checkpoint_every == 0:
            state, vals = canonicalize(state, return_values=True)
            ref_step, v, E0 = count, state.field.coeffs, None
            if checkpoint_dir is not None:
                Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
                write_checkpoint(Path(checkpoint_dir) / checkpoint_name(count), state, vals)
        if count % cfg.record_every == 0 or k == n_steps - 1:
            for cb in callbacks:
                cb(state)
    return state, recorder.series


def duhamel_residual(series, mode, spec):
    """max_t |u_hat(t) - e^{i w t} u_hat(0) + (i xi/2) int_0^t e^{i w (t-t')} u2_hat(t') dt'|
    normalized by |u_hat(0)| + max_t |u2_hat(t)|; trapezoid in time."""
    series.check_uniform()
    m, n = mode
    xi, eta = series.grid.wavenumber(m, n)
    w = dispersion(spec, xi, eta)
    uh, u2 = series.probe_series((m, n))
    t = series.array("times")
    if len(t) == 0:
        raise NonUniformSeries("empty series")
    t = t - t[0]
    g = np.exp(-1j * w * t) * u2
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(t))])
    resid = uh - np.exp(1j * w * t) * uh[0] + 0.5j * xi * np.exp(1j * w * t) * cum
    scale = abs(uh[0]) + float(np.max(np.abs(u2)))
    num = float(np.max(np.abs(resid)))
    if scale == 0:
        return num
    return num / scale
