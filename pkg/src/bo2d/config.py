"""Run configuration files and the initial-condition library.

Format: one ``key = value`` per line, ``#`` starts a comment.  Floats accept an
optional ``*pi`` suffix (``Lx = 16*pi``).  Mode lists are written
``m,n; m,n; ...`` and index lists ``j, j, ...``.
"""

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import spectral as sp
from .errors import BadICParams, MissingKey, ParseError, RangeError, UnknownKey
from .evolution import Dealias, StepperConfig
from .model import EquationSpec, Model, TransverseSign

IC_NAMES = ("gaussian", "dx_gaussian", "cos_product", "random_band", "checkpoint")


@dataclass(frozen=True)
class InitialCondition:
    name: str
    amplitude: float = 1.0
    sigma_x: float = 1.0
    sigma_y: float = 1.0
    center: tuple = (0.0, 0.0)
    modes: tuple = ((1, 1),)
    seed: int = 0
    band: int = 4
    path: str = ""


@dataclass(frozen=True)
class RunConfig:
    model: Model
    transverse_sign: TransverseSign
    nx: int
    ny: int
    Lx: float
    Ly: float
    dt: float
    T: float
    ic: InitialCondition
    output_dir: str
    dealias: Dealias = Dealias.TWO_THIRDS
    record_every: int = 1
    checkpoint_every: int = 0
    probes: tuple = ()
    moment_etas: tuple = ()
    norm_s: float = 2.0
    weight_r1: float = 1.0
    weight_r2: float = 1.0
    weight_trunc: float = None

    @property
    def spec(self):
        return EquationSpec(self.model, self.transverse_sign)

    @property
    def grid(self):
        return sp.SpectralGrid(self.nx, self.ny, self.Lx, self.Ly)

    def stepper(self):
        return StepperConfig(self.dt, self.dealias, self.record_every, self.checkpoint_every)

    def with_extra(self, probes=(), moment_etas=()):
        """Copy with additional probe modes / eta indices (duplicates dropped)."""
        p = tuple(dict.fromkeys(self.probes + tuple(probes)))
        e = tuple(dict.fromkeys(self.moment_etas + tuple(moment_etas)))
        return replace(self, probes=p, moment_etas=e)


REQUIRED = ("model", "nx", "ny", "Lx", "Ly", "dt", "T", "ic", "output_dir")
OPTIONAL = {
    "transverse_sign": "minus",
    "dealias": "two_thirds",
    "record_every": "1",
    "checkpoint_every": "0",
    "probes": "",
    "moment_etas": "",
    "norm_s": "2",
    "weight_r1": "1",
    "weight_r2": "1",
    "weight_trunc": "none",
    "ic_amplitude": "1",
    "ic_sigma_x": "1",
    "ic_sigma_y": "1",
    "ic_center_x": "0",
    "ic_center_y": "0",
    "ic_modes": "1,1",
    "ic_seed": "0",
    "ic_band": "4",
    "ic_path": "",
}
KEY_ORDER = REQUIRED + tuple(OPTIONAL)


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------

def _float(key, text):
    t = text.strip().replace(" ", "")
    scale = 1.0
    if t.endswith("*pi"):
        t, scale = t[:-3], math.pi
    elif t == "pi":
        t = "1"
        scale = math.pi
    try:
        v = float(t) * scale
    except ValueError:
        raise ParseError(f"{key}: {text!r} is not a number", key=key) from None
    if not math.isfinite(v):
        raise RangeError(f"{key} must be finite", key=key)
    return v


def _int(key, text):
    try:
        return int(text.strip())
    except ValueError:
        raise ParseError(f"{key}: {text!r} is not an integer", key=key) from None


def _modes(key, text):
    out = []
    for part in text.split(";"):
        if not part.strip():
            continue
        bits = part.split(",")
        if len(bits) != 2:
            raise ParseError(f"{key}: {part.strip()!r} is not an 'm,n' pair", key=key)
        out.append((_int(key, bits[0]), _int(key, bits[1])))
    return tuple(out)


def _indices(key, text):
    return tuple(_int(key, v) for v in text.split(",") if v.strip())


def _choice(key, text, options):
    v = text.strip().lower()
    if v not in options:
        raise RangeError(f"{key} must be one of {', '.join(options)}, got {text.strip()!r}", key=key)
    return v


def _check(cond, key, message):
    if not cond:
        raise RangeError(f"{key} {message}", key=key)


# ---------------------------------------------------------------------------
# parse / serialize
# ---------------------------------------------------------------------------

def _split(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"line {lineno}: expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ParseError(f"line {lineno}: empty key", line=lineno)
        if key not in KEY_ORDER:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}", key=key, line=lineno)
        if key in raw:
            raise ParseError(f"line {lineno}: duplicate key {key!r}", key=key, line=lineno)
        raw[key] = value
    return raw


def parse_config(text):
    raw = _split(text)
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise MissingKey(missing)
    v = {**OPTIONAL, **raw}

    model = Model[_choice("model", v["model"], ("bo2d", "shrira")).upper()]
    sign = TransverseSign[_choice("transverse_sign", v["transverse_sign"], ("minus", "plus")).upper()]
    nx, ny = _int("nx", v["nx"]), _int("ny", v["ny"])
    for k, n in (("nx", nx), ("ny", ny)):
        _check(n >= 4 and n % 2 == 0, k, "must be an even integer >= 4")
    Lx, Ly = _float("Lx", v["Lx"]), _float("Ly", v["Ly"])
    _check(Lx > 0, "Lx", "must be positive")
    _check(Ly > 0, "Ly", "must be positive")
    dt, T = _float("dt", v["dt"]), _float("T", v["T"])
    _check(dt > 0, "dt", "must be positive")
    _check(T >= 0, "T", "must be non-negative")
    dealias = Dealias(_choice("dealias", v["dealias"], ("two_thirds", "none")))
    rec = _int("record_every", v["record_every"])
    _check(rec >= 1, "record_every", "must be >= 1")
    ck = _int("checkpoint_every", v["checkpoint_every"])
    _check(ck >= 0, "checkpoint_every", "must be >= 0")
    probes = _modes("probes", v["probes"])
    for m, n in probes:
        _check(abs(m) < nx // 2 and abs(n) < ny // 2, "probes", f"mode ({m},{n}) is outside the grid")
    etas = _indices("moment_etas", v["moment_etas"])
    for j in etas:
        _check(abs(j) < ny // 2, "moment_etas", f"index {j} is outside the grid")
    norm_s = _float("norm_s", v["norm_s"])
    r1, r2 = _float("weight_r1", v["weight_r1"]), _float("weight_r2", v["weight_r2"])
    _check(r1 >= 0, "weight_r1", "must be non-negative")
    _check(r2 >= 0, "weight_r2", "must be non-negative")
    wt = None
    if v["weight_trunc"].strip().lower() != "none":
        wt = _float("weight_trunc", v["weight_trunc"])
        _check(wt >= 2, "weight_trunc", "must be >= 2 or 'none'")

    name = _choice("ic", v["ic"], IC_NAMES)
    ic = InitialCondition(
        name=name,
        amplitude=_float("ic_amplitude", v["ic_amplitude"]),
        sigma_x=_float("ic_sigma_x", v["ic_sigma_x"]),
        sigma_y=_float("ic_sigma_y", v["ic_sigma_y"]),
        center=(_float("ic_center_x", v["ic_center_x"]), _float("ic_center_y", v["ic_center_y"])),
        modes=_modes("ic_modes", v["ic_modes"]),
        seed=_int("ic_seed", v["ic_seed"]),
        band=_int("ic_band", v["ic_band"]),
        path=v["ic_path"].strip(),
    )
    _check(ic.sigma_x > 0, "ic_sigma_x", "must be positive")
    _check(ic.sigma_y > 0, "ic_sigma_y", "must be positive")
    _check(ic.seed >= 0, "ic_seed", "must be non-negative")
    _check(ic.band >= 0, "ic_band", "must be non-negative")
    if name == "cos_product":
        _check(len(ic.modes) > 0, "ic_modes", "needs at least one mode")
    if name == "checkpoint":
        _check(bool(ic.path), "ic_path", "is required for ic = checkpoint")
    out = v["output_dir"].strip()
    _check(bool(out), "output_dir", "must not be empty")

    return RunConfig(model, sign, nx, ny, Lx, Ly, dt, T, ic, out, dealias, rec, ck, probes, etas,
                     norm_s, r1, r2, wt)


def _fmt_modes(modes):
    return "; ".join(f"{m},{n}" for m, n in modes)


def serialize(cfg):
    """Canonical text form: every key, fixed order, shortest round-trip floats."""
    ic = cfg.ic
    vals = {
        "model": cfg.model.name.lower(),
        "nx": cfg.nx,
        "ny": cfg.ny,
        "Lx": repr(cfg.Lx),
        "Ly": repr(cfg.Ly),
        "dt": repr(cfg.dt),
        "T": repr(cfg.T),
        "ic": ic.name,
        "output_dir": cfg.output_dir,
        "transverse_sign": cfg.transverse_sign.name.lower(),
        "dealias": cfg.dealias.value,
        "record_every": cfg.record_every,
        "checkpoint_every": cfg.checkpoint_every,
        "probes": _fmt_modes(cfg.probes),
        "moment_etas": ", ".join(str(j) for j in cfg.moment_etas),
        "norm_s": repr(cfg.norm_s),
        "weight_r1": repr(cfg.weight_r1),
        "weight_r2": repr(cfg.weight_r2),
        "weight_trunc": "none" if cfg.weight_trunc is None else repr(cfg.weight_trunc),
        "ic_amplitude": repr(ic.amplitude),
        "ic_sigma_x": repr(ic.sigma_x),
        "ic_sigma_y": repr(ic.sigma_y),
        "ic_center_x": repr(ic.center[0]),
        "ic_center_y": repr(ic.center[1]),
        "ic_modes": _fmt_modes(ic.modes),
        "ic_seed": ic.seed,
        "ic_band": ic.band,
        "ic_path": ic.path,
    }
    return "".join(f"{k} = {vals[k]}\n" for k in KEY_ORDER)


def load_config(path):
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------

def _gaussian(grid, ic):
    X, Y = grid.meshgrid()
    cx, cy = ic.center
    return ic.amplitude * np.exp(-((X - cx) ** 2 / (2 * ic.sigma_x ** 2) + (Y - cy) ** 2 / (2 * ic.sigma_y ** 2)))


def _dx_gaussian(grid, ic):
    F = sp.to_spectral(grid, _gaussian(grid, ic))
    F = F * sp.deriv_symbol(grid, 0).values
    F[0, :] = 0.0
    return sp.to_physical(sp.SpectralField(grid, F))


def _cos_product(grid, ic):
    X, Y = grid.meshgrid()
    u = np.zeros(grid.shape)
    for m, n in ic.modes:
        if abs(m) >= grid.nx // 2 or abs(n) >= grid.ny // 2:
            raise BadICParams(f"cos_product mode ({m},{n}) is outside the grid")
        kx, ky = grid.wavenumber(m, n)
        u += np.cos(kx * X) * np.cos(ky * Y)
    return ic.amplitude * u


def _random_band(grid, ic):
    b = ic.band
    if b >= min(grid.nx, grid.ny) // 2:
        raise BadICParams(f"ic_band {b} does not fit the grid")
    rng = np.random.default_rng(ic.seed)
    k = np.arange(-b, b + 1)
    a = rng.standard_normal((k.size, k.size))
    c = rng.standard_normal((k.size, k.size))
    ex = np.exp(1j * np.outer(grid.x, 2 * np.pi * k / grid.Lx))  # (nx, K)
    ey = np.exp(1j * np.outer(grid.y, 2 * np.pi * k / grid.Ly))  # (ny, K)
    u = (ex @ (a + 1j * c) @ ey.T).real
    peak = np.max(np.abs(u))
    return ic.amplitude * u / peak if peak > 0 else u


def build_ic(spec, grid, ic):
    """Physical initial field for ``ic`` on ``grid`` (RealField)."""
    if ic.name == "checkpoint":
        from .io import read_checkpoint

        try:
            st = read_checkpoint(ic.path)
        except OSError as exc:
            raise BadICParams(f"cannot read checkpoint {ic.path!r}: {exc}") from None
        if st.grid != grid:
            raise BadICParams("checkpoint grid does not match the configured grid")
        return st.physical()
    if ic.name in ("gaussian", "dx_gaussian") and not (ic.sigma_x > 0 and ic.sigma_y > 0):
        raise BadICParams("Gaussian widths must be positive")
    builders = {
        "gaussian": _gaussian,
        "dx_gaussian": _dx_gaussian,
        "cos_product": _cos_product,
        "random_band": _random_band,
    }
    if ic.name not in builders:
        raise BadICParams(f"unknown initial condition {ic.name!r}")
    return sp.RealField(grid, builders[ic.name](grid, ic))
