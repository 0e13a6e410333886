"""Command-line front end.

Exit codes: 0 ok, 1 selftest failure, 2 validation error, 3 non-converged
quadrature (files are still written), 4 Weyl search cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .algebra import DeformationMatrix
from .experiments import (
    FORMAT_VERSION,
    SCALE_NOTE,
    SweepConfig,
    WeylSearchError,
    ornstein_sweep,
    records_to_csv,
    records_to_json,
    sweep_summary,
    weyl_rescale,
    write_plot_stub,
)
from .reps import DEFAULT_G_MAX, DEFAULT_TOL, rep_for, schatten_norms
from .riesz import make_schedule, riesz_product, spectrum_sets
from .selftest import flipped_phase_mul, run_selftest
from .theta import DEFAULT_Q_MAX, parse_theta, parse_theta_list

log = logging.getLogger("qtorus")

EXIT_OK, EXIT_SELFTEST, EXIT_VALIDATION, EXIT_NONCONVERGED, EXIT_CAP = 0, 1, 2, 3, 4

DEFAULTS = {
    "kind": "geometric",
    "ratio": 3,
    "N": 3,
    "theta": "0",
    "theta0": 0.05,
    "norms": "l1,l2,inf",
    "grid_tol": DEFAULT_TOL,
    "grid_max": DEFAULT_G_MAX,
    "grid_start": None,
    "q_max": DEFAULT_Q_MAX,
    "out": ".",
    "seed": None,
    "quick": False,
    "format": None,
    "plot_stub": False,
    "workers": 1,
    "cap": 10**7,
    "mutation": None,
}

# fields that never change the computed bytes and stay out of embedded configs
NON_RESULT_KEYS = ("out", "workers", "config")


class ValidationError(ValueError):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int, help="worker threads for independent cells")
    p.add_argument("-v", "--verbose", action="store_true")


def _grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-tol", dest="grid_tol", type=float)
    p.add_argument("--grid-max", dest="grid_max", type=int)
    p.add_argument("--grid-start", dest="grid_start", type=int)


def _schedule(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=("geometric", "proof-faithful"))
    p.add_argument("--ratio", type=int)
    p.add_argument("--N", dest="N", type=int)
    p.add_argument("--q-max", dest="q_max", type=int,
                   help="largest convergent denominator for decimal or named theta")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtorus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("riesz", help="build one Riesz product and compute its norms")
    _common(p), _grid(p), _schedule(p)
    p.add_argument("--theta", help='"p/q", a decimal, sqrt2m1 or golden')
    p.add_argument("--norms", help="comma list from l1, l2, inf")

    p = sub.add_parser("ornstein", help="norm sweep over N = 1..N and a theta list")
    _common(p), _grid(p), _schedule(p)
    p.add_argument("--theta", help="comma-separated theta list")
    p.add_argument("--norms", help="recorded in the output; the sweep computes L1 norms")
    p.add_argument("--plot-stub", dest="plot_stub", action="store_true", default=None,
                   help="also write a whitespace data file and a plotting script stub")

    p = sub.add_parser("selftest", help="randomized invariant and lemma suites")
    _common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--quick", action="store_true", default=None)
    p.add_argument("--mutation", choices=("flipped-phase",),
                   help="inject a broken product to demonstrate the guards")

    p = sub.add_parser("weyl", help="smallest M with dist(M^2 theta, Z) < theta0")
    _common(p)
    p.add_argument("--theta")
    p.add_argument("--theta0", type=float)
    p.add_argument("--cap", type=int)
    p.add_argument("--q-max", dest="q_max", type=int)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in cfg:
                raise ValidationError(f"unknown config key {k!r}")
            cfg[key] = v
    for k, v in vars(args).items():
        if k in cfg and v is not None:
            cfg[k] = v
    cfg["command"] = args.command
    return cfg


def _positive(cfg, key, minimum=1):
    v = cfg[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ValidationError(f"{key} must be an integer >= {minimum}, got {v!r}")


def validate(cfg: dict) -> None:
    cmd = cfg["command"]
    _positive(cfg, "workers")
    if cmd in ("riesz", "ornstein"):
        _positive(cfg, "N")
        _positive(cfg, "grid_max", 2)
        _positive(cfg, "q_max")
        if cfg["kind"] == "geometric":
            if not isinstance(cfg["ratio"], int) or cfg["ratio"] < 3:
                raise ValidationError(f"ratio must be an integer >= 3, got {cfg['ratio']!r}")
        if not (isinstance(cfg["grid_tol"], (int, float)) and cfg["grid_tol"] > 0):
            raise ValidationError("grid_tol must be positive")
        if cfg["grid_start"] is not None:
            _positive(cfg, "grid_start", 2)
    if cmd == "selftest" and cfg["seed"] is None:
        raise ValidationError("selftest requires --seed")
    if cmd == "weyl":
        if not 0 < float(cfg["theta0"]) < 0.5:
            raise ValidationError("theta0 must lie in (0, 1/2)")
        _positive(cfg, "cap")


def embedded(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in NON_RESULT_KEYS}


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_header(cfg: dict) -> str:
    return (f"# format_version: {FORMAT_VERSION}\n"
            f"# config: {json.dumps(embedded(cfg), sort_keys=True)}\n")


# subcommands

def cmd_riesz(cfg: dict) -> int:
    try:
        theta = parse_theta(cfg["theta"], cfg["q_max"])
        schedule = make_schedule(cfg["kind"], cfg["ratio"], cfg["N"])
    except (ValueError, OverflowError) as exc:
        raise ValidationError(str(exc)) from exc
    dm = DeformationMatrix.scalar(theta.value)
    P = riesz_product(schedule, cfg["N"], dm)
    try:
        report = schatten_norms(P, rep_for(dm), cfg["norms"], tol=cfg["grid_tol"],
                                G_max=cfg["grid_max"], G0=cfg["grid_start"], n_jobs=cfg["workers"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    out = Path(cfg["out"])
    meta = {"format_version": FORMAT_VERSION, "config": embedded(cfg), "theta": theta.as_json(),
            "schedule": schedule.as_json()}
    if schedule.kind != "proof-faithful":
        meta["note"] = SCALE_NOTE
    _write(out / "riesz_coeffs.json", _json({**meta, "polynomial": P.to_dict()}))
    _write(out / "riesz_spectrum.csv", _csv_header(cfg) + spectrum_sets(schedule).to_csv())
    rep_doc = {**report.to_dict(), "notes": report.notes}
    if cfg["format"] == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["theta", "l1", "l2", "op", "grid", "delta", "converged"]
        w.writerow(cols)
        w.writerow(["" if rep_doc[c] is None else rep_doc[c] for c in cols])
        _write(out / "riesz_norms.csv", _csv_header(cfg) + buf.getvalue())
    else:
        _write(out / "riesz_norms.json", _json({**meta, "report": rep_doc}))
    print(json.dumps(rep_doc, sort_keys=True))
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def cmd_ornstein(cfg: dict) -> int:
    try:
        thetas = parse_theta_list(cfg["theta"], cfg["q_max"])
        config = SweepConfig(kind=cfg["kind"], ratio=cfg["ratio"], N_max=cfg["N"], thetas=thetas,
                             norms=tuple(str(cfg["norms"]).split(",")), tol=cfg["grid_tol"],
                             G_max=cfg["grid_max"], G0=cfg["grid_start"], workers=cfg["workers"])
        config.schedule()
    except (ValueError, OverflowError) as exc:
        raise ValidationError(str(exc)) from exc
    records = ornstein_sweep(config)
    full = {**embedded(cfg), "sweep": config.as_json()}
    out = Path(cfg["out"])
    if cfg["format"] == "json":
        _write(out / "ornstein.json", records_to_json(records, full))
    else:
        _write(out / "ornstein.csv", records_to_csv(records, full))
        _write(out / "ornstein_summary.json", _json(
            {"format_version": FORMAT_VERSION, "config": full, "note": SCALE_NOTE,
             "summary": sweep_summary(records)}))
    if cfg["plot_stub"]:
        write_plot_stub(records, out / "ornstein_plot.dat", out / "plot_ornstein.py")
    for r in records:
        print(",".join(r.row()))
    return EXIT_OK if all(r.converged for r in records) else EXIT_NONCONVERGED


def cmd_selftest(cfg: dict) -> int:
    kwargs = {}
    if cfg["mutation"] == "flipped-phase":
        kwargs["mul"] = flipped_phase_mul
    summary = run_selftest(int(cfg["seed"]), bool(cfg["quick"]), **kwargs)
    doc = {"format_version": FORMAT_VERSION, "config": embedded(cfg), **summary.to_dict()}
    text = _json(doc)
    _write(Path(cfg["out"]) / "selftest.json", text)
    for c in summary.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} trials={c.trials} worst={c.worst:.3g}")
    for name, s in summary.lemmas.items():
        print(f"{'PASS' if s['violations'] == 0 else 'FAIL'} lemma_{name} trials={s['trials']} "
              f"violations={s['violations']}")
    print("selftest " + ("passed" if summary.passed else "FAILED"))
    return EXIT_OK if summary.passed else EXIT_SELFTEST


def cmd_weyl(cfg: dict) -> int:
    try:
        theta = parse_theta(cfg["theta"], cfg["q_max"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    try:
        res = weyl_rescale(theta, str(cfg["theta0"]), cap=cfg["cap"])
    except WeylSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"M0 = {res.M0}")
    print(f"theta_tilde = {float(res.theta_tilde):.17g}")
    print(f"verified: dist(M0^2 theta, Z) = {float(res.dist):.6g} < {cfg['theta0']}: {res.verified}")
    _write(Path(cfg["out"]) / "weyl.json",
           _json({"format_version": FORMAT_VERSION, "config": embedded(cfg), **res.to_dict()}))
    return EXIT_OK


COMMANDS = {"riesz": cmd_riesz, "ornstein": cmd_ornstein, "selftest": cmd_selftest, "weyl": cmd_weyl}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        validate(cfg)
        return COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
