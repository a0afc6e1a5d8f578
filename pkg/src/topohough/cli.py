"""Command line interface: ``topohough <command> [options]``.

Every command accepts ``--seed``, ``--out`` and ``--config FILE`` (flat
``key = value`` lines, keys named like the long options). Command-line flags
override the file. Configuration errors exit with status 2.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from . import experiments as exps
from .cubical_ph import Topology, superlevel_pd, write_pd_csv
from .detect import detect_baseline, detect_ph
from .geometry import LineSpec, PointSet, perturb, quantize, read_pgm, read_points_csv, sample_line, write_pgm, write_points_csv
from .hough import Accumulator, HoughGrid, accumulate, line_params_of, read_accumulator_csv, write_accumulator_csv

log = logging.getLogger("topohough")


class ConfigError(Exception):
    pass


def read_config(path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _bool(s: str) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int_list(s: str) -> list[int]:
    s = s.strip()
    if ".." in s:
        lo, hi = s.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in s.split(",") if t.strip()]


# --- input helpers ----------------------------------------------------------------

def _load_points(path, width, height, continuous=False):
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    ps = read_points_csv(path, (width, height))
    return ps if continuous else quantize(ps)


def _load_accumulator(args) -> Accumulator:
    path = Path(args.input)
    if path.suffix.lower() == ".csv" and path.read_text()[:1] == "#":
        return read_accumulator_csv(path)
    pts = _load_points(path, args.width, args.height, getattr(args, "continuous", False))
    return accumulate(pts, HoughGrid.for_image(args.width, args.height, args.n_rho, args.n_theta))


# --- commands ---------------------------------------------------------------------

def cmd_synth(args) -> None:
    import numpy as np

    rng = np.random.default_rng(args.seed)
    bounds = (args.width, args.height)
    specs = [LineSpec(*(float(t) for t in s.split(",")[:2]), int(s.split(",")[2])) for s in args.line]
    parts = [perturb(sample_line(s, bounds, rng), s, args.eps, rng) for s in specs]
    pts = PointSet(np.vstack([p.points for p in parts]), *bounds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_points_csv(pts, out / "points.csv")
    write_pgm(quantize(pts), out / "image.pgm", binary=not args.plain)
    with open(out / "truth.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rho", "theta", "slope", "intercept", "n"])
        for s in specs:
            lp = line_params_of(s)
            w.writerow([repr(float(lp.rho)), repr(lp.theta), s.slope, s.intercept, s.n])
    (out / "meta.txt").write_text(f"seed={args.seed}\neps={args.eps}\nwidth={args.width}\nheight={args.height}\n")


def cmd_accumulate(args) -> None:
    acc = _load_accumulator(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_accumulator_csv(acc, out / "accumulator.csv")


def cmd_pd(args) -> None:
    acc = _load_accumulator(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_pd_csv(superlevel_pd(acc.votes, Topology(args.topology)), out / "pd.csv")


def cmd_detect(args) -> None:
    acc = _load_accumulator(args)
    if args.method == "ph":
        dets = detect_ph(acc, args.param)
    else:
        dets = detect_baseline(acc, args.param, relative=args.relative)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "detections.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rho", "theta", "score", "i_rho", "i_theta", "method"])
        for d in dets:
            w.writerow([repr(d.line.rho), repr(d.line.theta), d.score, *d.source_cell, args.method])


def cmd_experiment(args) -> None:
    cls = exps.CONFIGS[args.command]
    kwargs = {name: getattr(args, name) for name in exps.config_fields(cls) if getattr(args, name, None) is not None}
    try:
        cfg = cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    res = exps.RUNNERS[args.command](cfg)
    out = Path(args.out) if args.out else Path("results") / args.command.removeprefix("exp-")
    res.write(out)
    for row in res.aggregate:
        print(",".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))


# --- parser -----------------------------------------------------------------------

def _add_common(p, out_default=None):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=out_default)
    p.add_argument("--config", help="flat key = value file")


def _add_image_opts(p):
    p.add_argument("--input", required=True, help="PGM image, x,y points CSV, or accumulator CSV")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--n-rho", type=int, default=724)
    p.add_argument("--n-theta", type=int, default=180)
    p.add_argument("--continuous", action="store_true", help="vote with unrounded CSV points")


def _field_type(f: dataclasses.Field):
    default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
    if isinstance(default, bool):
        return _bool
    if isinstance(default, list):
        return _int_list
    return type(default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topohough", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic line scene")
    _add_common(p, "synth_out")
    p.add_argument("--line", action="append", default=None, metavar="M,B,N",
                   help="slope,intercept,count (repeatable); default two parallel lines")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--plain", action="store_true", help="write plain P2 instead of binary P5")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("accumulate", help="Hough accumulator of an image")
    _add_common(p, ".")
    _add_image_opts(p)
    p.set_defaults(func=cmd_accumulate)

    p = sub.add_parser("pd", help="superlevel persistence diagram of the accumulator")
    _add_common(p, ".")
    _add_image_opts(p)
    p.add_argument("--topology", choices=[t.value for t in Topology], default=Topology.MOEBIUS.value)
    p.set_defaults(func=cmd_pd)

    p = sub.add_parser("detect", help="detect lines")
    _add_common(p, ".")
    _add_image_opts(p)
    p.add_argument("--method", choices=["ph", "baseline"], default="ph")
    p.add_argument("--param", type=float, required=True, help="nu (ph) or tau (baseline)")
    p.add_argument("--relative", action="store_true", help="tau is a fraction of the highest peak")
    p.set_defaults(func=cmd_detect)

    for name, cls in exps.CONFIGS.items():
        p = sub.add_parser(name, help=f"run the {name.removeprefix('exp-')} experiment")
        _add_common(p)
        for fname, f in exps.config_fields(cls).items():
            if fname == "seed":
                continue
            p.add_argument("--" + fname.replace("_", "-"), dest=fname, type=_field_type(f), default=None)
        p.set_defaults(func=cmd_experiment)
    return parser


def _peek(argv):
    """Subcommand name and ``--config`` path from raw ``argv``."""
    command, config = None, None
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            config = argv[k + 1]
        elif tok.startswith("--config="):
            config = tok.split("=", 1)[1]
        elif command is None and not tok.startswith("-") and (k == 0 or argv[k - 1] != "--config"):
            command = tok
    return command, config


def _apply_config(parser, argv) -> argparse.Namespace:
    command, config = _peek(argv)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if not config or command not in subparsers.choices:
        return parser.parse_args(argv)
    sub = subparsers.choices[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in read_config(config).items():
        if k not in actions or k in ("config", "help"):
            raise ConfigError(f"unknown config key {k!r} for {command}")
        a = actions[k]
        try:
            if a.nargs == 0:
                defaults[k] = _bool(v)
            elif isinstance(a, argparse._AppendAction):
                defaults[k] = [s.strip() for s in v.split(";")]
            else:
                defaults[k] = a.type(v) if a.type else v
        except ValueError as e:
            raise ConfigError(f"bad value for {k}: {e}") from e
        if a.choices and defaults[k] not in a.choices:
            raise ConfigError(f"{k} must be one of {sorted(a.choices)}")
        a.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "synth" and not args.line:
            args.line = ["1,75,150", "1,-75,120"]
        args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
