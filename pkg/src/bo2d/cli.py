"""Command-line entry point (``bo2d``).

Every command prints ``key=value`` result lines on stdout.  Exit status is 0
on success, 1 for invalid input and 2 when the evolution blows up.
"""

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import diagnostics as dg
from . import spectral as sp
from .config import build_ic, load_config, serialize
from .errors import NumericalFailure, ValidationError
from .evolution import SimState, duhamel_residual, run
from .io import read_checkpoint, write_checkpoint

CONFIG_COPY = "config.cfg"
SERIES_CSV = "series.csv"
PLOT_SCRIPT = "plot_series.py"

PLOT_TEMPLATE = '''"""Plot the diagnostics written by `bo2d run`.  Usage: python {script} [csv]"""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
with open(path, newline="") as fh:
    rows = list(csv.reader(fh))
data = dict(zip(rows[0], np.array(rows[1:], dtype=float).T))
t = data["t"]
fig, axes = plt.subplots(2, 2, figsize=(10, 7))
for ax, name in zip(axes.flat, ("mass", "energy", "hs", "wx")):
    y = data[name]
    if np.all(np.isnan(y)):
        ax.set_title(name + " (not defined for this data)")
        continue
    ref = y[0] if y[0] != 0 else 1.0
    ax.plot(t, (y - y[0]) / abs(ref))
    ax.set_title("relative change of " + name)
    ax.set_xlabel("t")
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
'''


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error={message}", file=sys.stderr)
        sys.exit(1)


def emit(key, value):
    if isinstance(value, float):
        value = format(value, ".17g")
    print(f"{key}={value}")


def state_digest(state):
    vals = np.ascontiguousarray(sp.to_physical(state.field), dtype="<f8")
    return hashlib.sha256(vals.tobytes()).hexdigest()


def _modes_arg(text):
    try:
        m, n = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected m,n, got {text!r}") from None
    return m, n


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}") from None


# ---------------------------------------------------------------------------
# simulation commands
# ---------------------------------------------------------------------------

def simulate(cfg, output_dir=None, write=True):
    """Run a configuration; returns (initial_state, final_state, series)."""
    out = Path(output_dir or cfg.output_dir)
    spec, grid = cfg.spec, cfg.grid
    u0 = build_ic(spec, grid, cfg.ic)
    state0 = SimState.from_real(spec, u0)
    rec = dg.Recorder(grid, spec, cfg.probes, cfg.moment_etas, cfg.norm_s,
                      (cfg.weight_r1, cfg.weight_r2), cfg.weight_trunc, cfg.dealias.value)
    ckdir = out / "checkpoints" if (write and cfg.checkpoint_every) else None
    final, series = run(state0, cfg.T, cfg.stepper(), rec, checkpoint_dir=ckdir)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / CONFIG_COPY).write_text(serialize(cfg))
        series.write_csv(out / SERIES_CSV)
        (out / PLOT_SCRIPT).write_text(PLOT_TEMPLATE.format(script=PLOT_SCRIPT, csv=SERIES_CSV))
        write_checkpoint(out / "final.bin", final)
    return state0, final, series


def _drift(values):
    if values is None or not values or values[0] == 0:
        return float("nan")
    return max(abs(v - values[0]) for v in values) / abs(values[0])


def cmd_run(args):
    cfg = load_config(args.config)
    out = Path(args.output_dir or cfg.output_dir)
    _, final, series = simulate(cfg, out)
    emit("csv", str(out / SERIES_CSV))
    emit("plot_script", str(out / PLOT_SCRIPT))
    emit("steps", final.step_count)
    emit("final_time", final.time)
    emit("records", len(series))
    emit("mass0", series.mass[0])
    emit("mass_drift", _drift(series.mass))
    emit("energy_drift", _drift(series.energy))
    emit("state_sha256", state_digest(final))
    return 0


def cmd_verify(args):
    cfg = load_config(args.config).with_extra(probes=[args.mode])
    _, _, series = simulate(cfg, write=False)
    emit("mode", f"{args.mode[0]},{args.mode[1]}")
    emit("duhamel_residual", duhamel_residual(series, args.mode, cfg.spec))
    return 0


def cmd_obstruction(args):
    cfg = load_config(args.config).with_extra(moment_etas=[args.eta_index])
    _, _, series = simulate(cfg, write=False)
    eta = 2 * math.pi * args.eta_index / cfg.Ly
    D = dg.obstruction_functional(series, eta, args.t1, args.t2, cfg.spec)
    emit("eta", eta)
    emit("D_re", D.real)
    emit("D_im", D.imag)
    emit("D_abs", abs(D))
    emit("mass_identity_residual", dg.mass_identity_residual(series, args.t1, args.t2))
    return 0


def cmd_resume(args):
    ck = Path(args.checkpoint)
    cfg_path = Path(args.config) if args.config else ck.parent.parent / CONFIG_COPY
    if not cfg_path.exists():
        raise ValidationError(f"no configuration found at {cfg_path}; pass --config")
    cfg = load_config(cfg_path)
    state = read_checkpoint(ck)
    if state.grid != cfg.grid or state.spec != cfg.spec:
        raise ValidationError("checkpoint does not match the configuration")
    out = Path(args.output_dir) if args.output_dir else ck.parent.parent
    rec = dg.Recorder(cfg.grid, cfg.spec, cfg.probes, cfg.moment_etas, cfg.norm_s,
                      (cfg.weight_r1, cfg.weight_r2), cfg.weight_trunc, cfg.dealias.value)
    ckdir = out / "checkpoints" if cfg.checkpoint_every else None
    final, series = run(state, args.until, cfg.stepper(), rec, checkpoint_dir=ckdir)
    out.mkdir(parents=True, exist_ok=True)
    csv = out / f"resume_{state.step_count:08d}.csv"
    series.write_csv(csv)
    write_checkpoint(out / "final.bin", final)
    emit("csv", str(csv))
    emit("start_step", state.step_count)
    emit("steps", final.step_count)
    emit("final_time", final.time)
    emit("state_sha256", state_digest(final))
    return 0


# ---------------------------------------------------------------------------
# property probes
# ---------------------------------------------------------------------------

def _family(args):
    return an.TestFamily(seed=args.seed, count=args.trials, band_limit=args.band_limit)


def _emit_report(rep, args):
    emit("estimate", rep.name)
    emit("family_seed", rep.seed)
    emit("trials", rep.trials)
    for label, mx, med in rep.summary():
        emit(f"max_ratio[{label}]", mx)
        emit(f"median_ratio[{label}]", med)
    for k, v in rep.extra.items():
        emit(k, v)
    if args.report:
        Path(args.report).write_text(rep.to_text())
    if args.csv:
        rep.write_csv(args.csv)


def cmd_commutator(args):
    rep = an.commutator_sweep(args.alpha, args.beta, args.p, _family(args), args.W, args.n,
                              args.pad, classical=args.classical, threads=args.threads)
    _emit_report(rep, args)
    return 0


def cmd_weighted(args):
    fam = _family(args)
    grid = an.LineGrid(args.n[0], args.W, args.pad)
    rep = an.PropertyReport("weighted-hilbert", fam.seed, fam.count)
    for n in args.trunc_n:
        rep.ratios[f"trunc_n={n}"] = an.weighted_hilbert_norm(args.theta, n, fam, grid, args.threads,
                                                              return_all=True)
    mx = [rep.max_ratio(k) for k in rep.ratios]
    rep.extra["max_over_min"] = format(max(mx) / min(mx), ".17g")
    _emit_report(rep, args)
    return 0


def cmd_bilinear(args):
    rep = an.bilinear_sweep(_family(args), args.N, args.L, threads=args.threads,
                            ascent_steps=args.ascent_steps)
    _emit_report(rep, args)
    return 0


def cmd_stein(args):
    grid = an.LineGrid(args.n[0], args.W, args.pad)
    x = grid.x
    if args.t is None:
        f = np.sign(x)
    else:
        f = np.exp(1j * np.sign(x) * args.t)
    d = an.stein_derivative(f, args.b, grid)
    C, decades = an.stein_envelope(d, args.b, grid)
    emit("b", args.b)
    emit("input", "sign" if args.t is None else f"exp(i*sign(x)*{args.t})")
    if args.t is None:
        ax = np.abs(x)
        sel = (ax >= 0.5) & (ax <= grid.W / 4)
        exact = math.sqrt(2 / args.b) * ax[sel] ** (-args.b)
        emit("max_rel_error", float(np.max(np.abs(d[sel] / exact - 1))))
    emit("C", C)
    for k, v in decades.items():
        emit(f"C{k}", v)
    return 0


def cmd_hx(args):
    grid = an.LineGrid(args.n[0], args.W, args.pad)
    x = grid.x
    if args.input == "zero-integral":
        f = -x * np.exp(-x * x / 2)
    else:
        f = np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    r = an.commutator_x(f, grid)
    inner = r[grid.inner_half()]
    emit("input", args.input)
    emit("integral", float(np.sum(f) * grid.h))
    emit("max_abs", float(np.max(np.abs(r)) / np.max(np.abs(f))))
    emit("inner_min", float(inner.min()))
    emit("inner_max", float(inner.max()))
    emit("expected_constant", float(-np.sum(f) * grid.h / math.pi))
    return 0


def _props_common(p, n_default, W_default, pad_default, trials=True):
    p.add_argument("--n", type=_int_list, default=n_default, help="grid sizes, comma separated")
    p.add_argument("--W", type=float, default=W_default, help="half-window")
    p.add_argument("--pad", type=int, default=pad_default, help="zero-padding factor")
    if trials:
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--band-limit", type=float, default=3.0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--report", help="write a plain-text report here")
        p.add_argument("--csv", help="write per-trial ratios here")


def build_parser():
    ap = _Parser(prog="bo2d", description="Pseudo-spectral BO2D / Shrira solver and operator probes.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate a configuration")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check a run against the Duhamel formula")
    p.add_argument("what", choices=["duhamel"])
    p.add_argument("config")
    p.add_argument("--mode", type=_modes_arg, required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("obstruction", help="evaluate D(eta) between two record times")
    p.add_argument("config")
    p.add_argument("--eta-index", type=int, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.set_defaults(func=cmd_obstruction)

    p = sub.add_parser("resume", help="continue from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--until", type=float, required=True)
    p.add_argument("--config", help="defaults to config.cfg next to the checkpoints directory")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_resume)

    props = sub.add_parser("props", help="operator-estimate probes on the line")
    ps = props.add_subparsers(dest="prop", required=True, parser_class=_Parser)

    p = ps.add_parser("commutator")
    _props_common(p, [1024, 16384], 32 * math.pi, 4)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--classical", action="store_true", help="integer orders l=alpha, m=beta")
    p.set_defaults(func=cmd_commutator)

    p = ps.add_parser("weighted-hilbert")
    _props_common(p, [16384], 1024.0, 4)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--trunc-n", type=_int_list, default=[4, 16, 64, 256])
    p.set_defaults(func=cmd_weighted)

    p = ps.add_parser("stein")
    _props_common(p, [16384], 16.0, 2, trials=False)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--t", type=float, default=None, help="use exp(i sign(x) t) instead of sign(x)")
    p.set_defaults(func=cmd_stein)

    p = ps.add_parser("bilinear")
    p.add_argument("--N", type=_int_list, default=[1, 2, 4])
    p.add_argument("--L", type=_int_list, default=[1, 4, 16])
    p.add_argument("--ascent-steps", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--band-limit", type=float, default=3.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bilinear)

    p = ps.add_parser("hx-identity")
    _props_common(p, [2048], 32 * math.pi, 512, trials=False)
    p.add_argument("--input", choices=["zero-integral", "unit-mass"], default="zero-integral")
    p.set_defaults(func=cmd_hx)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error={exc}", file=sys.stderr)
        return 2
    except (ValidationError, OSError) as exc:
        print(f"error={exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
