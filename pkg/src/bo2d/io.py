"""Binary checkpoint files.

Layout (all little-endian)::

    8s   magic  b"BO2DCKPT"
    u32  format version (1)
    u32  nx, u32 ny
    f64  Lx, f64 Ly, f64 time
    u8   model (0 = BO2D, 1 = Shrira)
    u8   transverse sign (0 = minus, 1 = plus)
    u64  step_count
    f64  nx*ny physical samples, row-major (x index slowest)
"""

import struct

import numpy as np

from . import spectral as sp
from .errors import CheckpointFormatError
from .model import EquationSpec

MAGIC = b"BO2DCKPT"
VERSION = 1
_HEADER = struct.Struct("<8sIIIdddBBQ")


def checkpoint_name(step):
    return f"ckpt_{step:08d}.bin"


def encode_checkpoint(state, values=None):
    """Serialize a state; ``values`` are the physical samples to store (by
    default recomputed from the field)."""
    g = state.grid
    if values is None:
        values = sp.to_physical(state.field)
    vals = np.ascontiguousarray(values, dtype="<f8")
    if vals.shape != g.shape:
        raise CheckpointFormatError("sample array does not match the grid")
    head = _HEADER.pack(
        MAGIC, VERSION, g.nx, g.ny, g.Lx, g.Ly, float(state.time),
        int(state.spec.model), int(state.spec.transverse_sign), int(state.step_count),
    )
    return head + vals.tobytes(order="C")


def decode_checkpoint(blob):
    from .evolution import SimState

    if len(blob) < _HEADER.size:
        raise CheckpointFormatError("file too short for a checkpoint header")
    magic, version, nx, ny, Lx, Ly, t, model, sign, steps = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    expected = _HEADER.size + 8 * nx * ny
    if len(blob) != expected:
        raise CheckpointFormatError(f"checkpoint size {len(blob)} != expected {expected}")
    grid = sp.SpectralGrid(nx, ny, Lx, Ly)
    vals = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(nx, ny).astype(np.float64)
    spec = EquationSpec(model, sign)
    field = sp.SpectralField(grid, sp.to_spectral(grid, vals))
    return SimState(spec, grid, t, field, steps)


def write_checkpoint(path, state, values=None):
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(state, values))


def read_checkpoint(path):
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
