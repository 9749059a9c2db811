"""Command-line interface: ``bgrisk construct|verify|table1|ordinalize|sample``.

Exit codes: 0 success, 1 input/output error, 2 infeasible request,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import schemas
from .closedform import TABLE1_C_TOL, TABLE1_SIGMA_REL_TOL, table1
from .dominance import (
    DEFAULT_TOL,
    AtomGridMixture,
    check_fosd,
    check_noised,
    check_sosd,
)
from .errors import (
    GridTooNarrow,
    InfeasibleMeanOrder,
    InfeasibleVarianceOrder,
    KernelTooNarrow,
    NotStrictlyBIC,
    ParameterTooSmall,
    VerificationFailed,
)
from .measures import Gamble, GriddedDensity
from .smoothing import SERIES_TAIL_TOL, build_sigma, choose_a, noise_from_json, smooth

log = logging.getLogger("bgrisk")

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3

DEFAULTS = {
    "order": 1,
    "c_target": 0.5,
    "tol": DEFAULT_TOL,
    "series_tail_tol": SERIES_TAIL_TOL,
    "quad_tol": 1e-8,
    "grid": None,
    "seed": 0,
    "out": ".",
    "kernel_convention": "split",
    "trials": 100_000,
    "n": 1_000_000,
    "points": 2001,
}


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write_json(path: Path, obj, schema=None) -> None:
    if schema is not None:
        schemas.validate(obj, schema)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_gamble(path) -> Gamble:
    data = _read_json(path)
    try:
        schemas.validate(data, schemas.GAMBLE)
        return Gamble.from_json(data)
    except Exception as exc:
        raise InputError(f"{path} is not a valid gamble: {exc}") from exc


def _load_cdf_input(path):
    """A gamble JSON, a grid JSON or a ``x,density`` grid CSV."""
    p = Path(path)
    if p.suffix == ".csv":
        try:
            return GriddedDensity.from_csv(p.read_text())
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
    data = _read_json(p)
    if "atoms" in data:
        return _load_gamble(p)
    try:
        schemas.validate(data, schemas.GRID)
        return GriddedDensity.from_json(data)
    except Exception as exc:
        raise InputError(f"{path} is neither a gamble nor a grid: {exc}") from exc


def parse_grid(text: str | None):
    if text is None:
        return None
    try:
        lo, hi, h = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise InputError(f"--grid expects lo:hi:h, got {text!r}") from exc
    if not (h > 0 and hi > lo):
        raise InputError("--grid needs hi > lo and h > 0")
    return lo, hi, h


def effective_config(args: argparse.Namespace) -> dict:
    """Flags over config file over defaults."""
    cfg = {k: v for k, v in DEFAULTS.items()}
    if getattr(args, "config", None):
        cfg.update(_read_json(args.config))
    for k, v in vars(args).items():
        if k in ("func", "config") or v is None:
            continue
        cfg[k] = v
    for key in ("tol", "series_tail_tol", "quad_tol"):
        if not cfg[key] > 0:
            raise InputError(f"{key} must be positive")
    cfg["command"] = args.command
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc}") from exc
    _write_json(out / "config.json", cfg)
    return out


def _fmt(v) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# subcommands


def cmd_construct(cfg) -> int:
    x, y = _load_gamble(cfg["x"]), _load_gamble(cfg["y"])
    order = int(cfg["order"])
    out = _outdir(cfg)
    sigma = build_sigma(x, y, order)
    a = cfg.get("a") or choose_a(sigma, float(cfg["c_target"]))
    z = smooth(sigma, float(a), float(cfg["series_tail_tol"]))
    grid = parse_grid(cfg.get("grid"))
    g = z.materialize(*grid) if grid else z.materialize()
    verdict = check_noised(x, y, g, order, float(cfg["tol"]))
    _write_json(out / "noise.json", z.to_json(), schemas.NOISE)
    _write_json(out / "verdict.json", {**verdict.to_json(), "c": z.c, "a": float(a),
                                       "sigma_z": z.std}, schemas.VERDICT)
    _write_cdfs(out / "cdfs.csv", x, y, g, z.std, int(cfg["points"]), grid)
    expected = "FIRST_STRICT" if order == 1 else "SECOND_STRICT"
    print(f"{verdict.relation.value}  c={z.c:.6g}  a={float(a):.6g}  sigma_Z={z.std:.6g}")
    if verdict.relation.value != expected:
        print(f"verification failed: worst violation {verdict.worst_violation:.3g}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _write_cdfs(path, x, y, g, sd, points, grid=None) -> None:
    if grid:
        lo, hi, h = grid
        xs = np.arange(lo, hi + 0.5 * h, h)
    else:
        lo = min(x.support[0], y.support[0]) - 8 * sd
        hi = max(x.support[1], y.support[1]) + 8 * sd
        xs = np.linspace(lo, hi, points)
    fx, fy = AtomGridMixture(x, g)(xs), AtomGridMixture(y, g)(xs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "F_X+Z", "F_Y+Z", "gap"])
        for row in zip(xs, fx, fy, fy - fx):
            w.writerow([_fmt(v) for v in row])


def cmd_verify(cfg) -> int:
    fx, fy = _load_cdf_input(cfg["x"]), _load_cdf_input(cfg["y"])
    order = int(cfg["order"])
    tol = float(cfg["tol"])
    if cfg.get("noise"):
        z = noise_from_json(_read_json(cfg["noise"]))
        g = z.materialize()
        if not (isinstance(fx, Gamble) and isinstance(fy, Gamble)):
            raise InputError("--noise needs gamble inputs")
        verdict = check_noised(fx, fy, g, order, tol)
    else:
        verdict = (check_fosd if order == 1 else check_sosd)(fx, fy, tol)
    payload = verdict.to_json()
    schemas.validate(payload, schemas.VERDICT)
    if cfg.get("out_given"):
        _write_json(_outdir(cfg) / "verdict.json", payload)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _parse_rows(specs) -> list[tuple[float, float]] | None:
    if not specs:
        return None
    rows = []
    for spec in specs:
        for item in spec.split(";"):
            try:
                g, l = (float(v) for v in item.split(","))
            except ValueError as exc:
                raise InputError(f"--rows expects g,l pairs, got {item!r}") from exc
            rows.append((g, l))
    return rows


def cmd_table1(cfg) -> int:
    rows = table1(_parse_rows(cfg.get("rows")), cfg.get("sigma_w"), cfg["kernel_convention"],
                  float(cfg["quad_tol"]))
    out = _outdir(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["g", "l", "sigma_W", "c", "sigma_Z", "c_ref", "sigma_Z_ref", "c_err",
                "sigma_Z_rel_err", "within_tol"])
    bad = 0
    for r in rows:
        ref = r.c_ref is not None
        w.writerow([_fmt(r.g), _fmt(r.l), _fmt(r.sigma_w), f"{r.c:.10g}", f"{r.sigma_z:.10g}",
                    _fmt(r.c_ref) if ref else "", _fmt(r.sigma_z_ref) if ref else "",
                    f"{r.c_err:.6g}" if ref else "", f"{r.sigma_z_rel_err:.6g}" if ref else "",
                    str(r.within_tolerance) if ref else ""])
        if ref and not r.within_tolerance:
            bad += 1
    (out / "table1.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    if bad:
        print(f"{bad} row(s) outside |dc| <= {TABLE1_C_TOL} or |dsigma|/sigma <= "
              f"{TABLE1_SIGMA_REL_TOL}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_ordinalize(cfg) -> int:
    from .mechanism import MechanismSpec, check_strict_bic, ordinalize, simulate_agents

    data = _read_json(cfg["mechanism"])
    try:
        schemas.validate(data, schemas.MECHANISM)
        spec = MechanismSpec.from_json(data)
    except Exception as exc:
        raise InputError(f"{cfg['mechanism']} is not a valid mechanism: {exc}") from exc
    out = _outdir(cfg)
    report = check_strict_bic(spec)
    _write_json(out / "bic_report.json", report.to_json())
    om = ordinalize(spec, float(cfg["c_target"]), float(cfg["tol"]))
    payload = om.to_json()
    _write_json(out / "ordinalized.json", payload)
    _write_json(out / "certification.json", {"certified": om.certified,
                                             "certificates": payload["certification"]})
    print(f"certified {len(om.certificates)} triples: {om.certified}")
    if cfg.get("simulate"):
        sim = simulate_agents(om, int(cfg["simulate"]), int(cfg["trials"]), int(cfg["seed"]))
        _write_json(out / "simulation.json", sim.to_json())
        print(f"simulation: {sim.checks} checks, {len(sim.violations)} violations")
        if not sim.passed:
            return EXIT_VERIFY
    return EXIT_OK if om.certified else EXIT_VERIFY


def cmd_sample(cfg) -> int:
    from .montecarlo import sample_noise

    z = noise_from_json(_read_json(cfg["noise"]))
    out = _outdir(cfg)
    batch = sample_noise(z, int(cfg["n"]), int(cfg["seed"]))
    batch.write(out / "samples.csv")
    print(f"n={batch.n}  mean={batch.mean():.6g}  std={batch.std():.6g}  hash={batch.spec_hash}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bgrisk", description="Background noise that ranks gambles by dominance.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol=True):
        sp.add_argument("--config", help="JSON file of defaults (flags take precedence)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        if tol:
            sp.add_argument("--tol", type=float, help="dominance tolerance")

    sp = sub.add_parser("construct", help="construct Z for a pair and certify it")
    sp.add_argument("--x", required=True, help="gamble JSON for X")
    sp.add_argument("--y", required=True, help="gamble JSON for Y")
    sp.add_argument("--order", type=int, choices=(1, 2))
    sp.add_argument("--c-target", dest="c_target", type=float)
    sp.add_argument("--a", type=float, help="kernel width (skips the search)")
    sp.add_argument("--grid", help="materialisation grid lo:hi:h")
    sp.add_argument("--series-tail-tol", dest="series_tail_tol", type=float)
    sp.add_argument("--points", type=int, help="rows in cdfs.csv")
    common(sp)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("verify", help="dominance verdict for two inputs")
    sp.add_argument("--x", required=True, help="gamble/grid JSON or grid CSV")
    sp.add_argument("--y", required=True)
    sp.add_argument("--order", type=int, choices=(1, 2))
    sp.add_argument("--noise", help="noise JSON; verify X+Z against Y+Z")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("table1", help="recompute the binary-gamble reference table")
    sp.add_argument("--rows", action="append", help="g,l filter (repeatable or ';'-separated)")
    sp.add_argument("--sigma-w", dest="sigma_w", type=float, help="override sigma_W")
    sp.add_argument("--kernel-convention", dest="kernel_convention", choices=("split", "direct"))
    sp.add_argument("--quad-tol", dest="quad_tol", type=float)
    common(sp, tol=False)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("ordinalize", help="make a strictly BIC mechanism ordinally IC")
    sp.add_argument("--mechanism", required=True)
    sp.add_argument("--c-target", dest="c_target", type=float)
    sp.add_argument("--simulate", type=int, help="number of random utilities to simulate")
    sp.add_argument("--trials", type=int)
    common(sp)
    sp.set_defaults(func=cmd_ordinalize)

    sp = sub.add_parser("sample", help="draw samples from a noise JSON")
    sp.add_argument("--noise", required=True)
    sp.add_argument("--n", type=int)
    common(sp, tol=False)
    sp.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out_given = args.out is not None
    del args.verbose
    try:
        cfg = effective_config(args)
        cfg["out_given"] = out_given or "out" in (_read_json(args.config) if args.config else {})
        return args.func(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InfeasibleMeanOrder as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InfeasibleVarianceOrder, NotStrictlyBIC, ParameterTooSmall) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (VerificationFailed, KernelTooNarrow, GridTooNarrow) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
