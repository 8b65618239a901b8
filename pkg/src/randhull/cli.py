"""Command line driver: ``randhull <subcommand> ...``.

Exit codes: 0 pass, 1 validation error, 2 numeric failure, 3 verdict outside
its acceptance band.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .bodies import body_from_params
from .errors import (CalibrationMissing, ConfigError, EnvelopeError, HypothesisViolation, NoAnalyticValue,
                     NumericalError, RandhullError)
from .estimators import calibrate_c, cap_profile, fit_rate, rate_band
from .experiments import (config_from_dict, load_config, lookup_constant, read_records, records_to_pairs,
                          run_simulation, save_calibration)
from .functionals import limit_integral
from .linalg import SeedSpec
from .sampling import density_from_params
from .selftest import run_selftest

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_BAND = 0, 1, 2, 3
DEFAULT_STORE = "calibration.json"


class VerdictFailure(Exception):
    pass


def _value(text: str):
    if ":" in text:
        return [_value(t) for t in text.split(":")]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_spec(text: str) -> dict:
    """'kind=ellipsoid,semiaxes=2:1' -> {'kind': 'ellipsoid', 'semiaxes': [2, 1]}."""
    out = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}", "spec")
        key, val = item.split("=", 1)
        out[key.strip()] = _value(val.strip())
    if "semiaxes" in out and not isinstance(out["semiaxes"], list):
        out["semiaxes"] = [out["semiaxes"]]
    return out


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _body_density_j(args):
    """Body, density and order from --config or from --body/--density/--j."""
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        return cfg.make_body(), cfg.make_density(), cfg.j, cfg
    if not args.body:
        raise ConfigError("give --config or --body", "body")
    body = body_from_params(parse_spec(args.body))
    density = density_from_params(parse_spec(args.density) if args.density else None)
    density.validate(body)
    return body, density, getattr(args, "j", None), None


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = config_from_dict({**_config_as_raw(cfg), "master_seed": args.seed})
    outcome = run_simulation(cfg, threads=args.threads, store_path=args.calibration_store, out=args.out)
    if args.out:
        print(f"wrote {len(outcome.records)} rows to {args.out}")
    for n, a, b, z in outcome.disagreements:
        print(f"route disagreement at n={n}: {a} vs {b}, z = {z:.2f}", file=sys.stderr)
    if not outcome.consistent:
        raise NumericalError("estimator routes disagree beyond tolerance")
    return EXIT_OK


def _config_as_raw(cfg) -> dict:
    raw = {
        "experiment_id": cfg.experiment_id, "body": dict(cfg.body), "density": dict(cfg.density), "j": cfg.j,
        "n_grid": list(cfg.n_grid), "reps": cfg.reps, "y_samples": cfg.y_samples, "routes": list(cfg.routes),
        "master_seed": cfg.master_seed,
        "tolerance": {"route_sigma": cfg.tolerance.route_sigma, "predict_rel": cfg.tolerance.predict_rel},
    }
    if cfg.tolerance.rate_band is not None:
        raw["tolerance"]["rate_band"] = list(cfg.tolerance.rate_band)
    return raw


def cmd_calibrate(args) -> int:
    seed = SeedSpec(args.seed if args.seed is not None else 0)
    cal = calibrate_c(args.j, args.d, _ints(args.n_grid), args.reps, seed, radius=args.radius,
                      kappa=args.kappa, threads=args.threads)
    for est in cal.estimates:
        scaled = est.mean * est.n ** (2 / (args.d - 1))
        print(f"n={est.n:>6}  deficit={est.mean:.6g} ± {est.stderr:.2g}  n^(2/(d-1))*deficit={scaled:.6g}")
    entry = save_calibration(args.calibration_store, cal, args.reps, seed.master_seed)
    print(f"c(j={cal.j}, d={cal.d}) = {cal.c_jd:.6g} ± {cal.stderr:.2g}  (kappa={cal.kappa:g})")
    print(f"stored in {args.calibration_store} at {entry['timestamp']}")
    return EXIT_OK


def cmd_rate(args) -> int:
    if args.records:
        pairs = records_to_pairs(
            [r for r in read_records(args.records) if args.experiment_id in (None, r.experiment_id)], args.route)
        body = band = j = None
        if args.config:
            cfg = load_config(args.config)
            body, band, j = cfg.make_body(), cfg.tolerance.rate_band, cfg.j
    else:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = config_from_dict({**_config_as_raw(cfg), "master_seed": args.seed})
        if len(cfg.n_grid) < 4:
            raise ConfigError("rate fits need at least 4 grid values", "n_grid")
        outcome = run_simulation(cfg, threads=args.threads, out=args.out)
        pairs = records_to_pairs(outcome.records, args.route or cfg.routes[0])
        body, band, j = cfg.make_body(), cfg.tolerance.rate_band, cfg.j
    fit = fit_rate(pairs)
    lo, hi = fit.exponent_ci
    print(f"exponent = {fit.exponent:.4f}  95% CI [{lo:.4f}, {hi:.4f}]  constant = {fit.constant:.6g}  "
          f"chi2/dof = {fit.chi2_dof:.3g}  n = {list(fit.n_grid)}")
    if band is None and body is not None:
        band = rate_band(body, j)
    if band is None:
        return EXIT_OK
    verdict = band[0] <= fit.exponent <= band[1]
    print(f"admissible band [{band[0]:.2f}, {band[1]:.2f}]  verdict {'PASS' if verdict else 'FAIL'}")
    if not verdict:
        raise VerdictFailure("fitted exponent outside its band")
    return EXIT_OK


def cmd_predict(args) -> int:
    body, density, j, cfg = _body_density_j(args)
    j = args.j if args.j is not None else j
    if j is None:
        raise ConfigError("order j is required", "j")
    integral = limit_integral(body, density, j)
    c, c_se, source = lookup_constant(j, body.d, args.calibration_store)
    expo = 2.0 / (body.d - 1)
    print(f"body {body.describe()}  density {density.kind}  j={j}")
    print(f"c(j={j}, d={body.d}) = {c:.6g} ± {c_se:.2g}  [{source}]")
    print(f"curvature integral I_j = {integral.value:.8g} ± {integral.stderr:.2g}")
    grid = _ints(args.n) if args.n else (list(cfg.n_grid) if cfg else [])
    predicted = {n: c * integral.value * n**-expo for n in grid}
    for n, p in predicted.items():
        print(f"n={n:>7}  predicted deficit {p:.6g}")
    if args.records:
        tol = cfg.tolerance.predict_rel if cfg else args.tolerance
        rows = [r for r in read_records(args.records) if r.j == j and r.d == body.d and r.body_kind == body.kind]
        worst = 0.0
        for r in rows:
            pred = c * integral.value * r.n**-expo
            ratio = r.deficit_mean / pred
            worst = max(worst, abs(ratio - 1))
            print(f"n={r.n:>7}  {r.route:>10}  simulated/predicted = {ratio:.4f}")
        if args.check and rows:
            ok = worst <= tol
            print(f"largest relative gap {worst:.4f}, tolerance {tol:g}  verdict {'PASS' if ok else 'FAIL'}")
            if not ok:
                raise VerdictFailure("simulation outside the predicted band")
    return EXIT_OK


def cmd_capcheck(args) -> int:
    body, density, _, _ = _body_density_j(args)
    if args.point:
        x = np.array(_floats(args.point))
    else:
        direction = np.array(_floats(args.direction)) if args.direction else np.eye(body.d)[-1]
        x = body.support_point(direction / np.linalg.norm(direction))
    t_grid = _floats(args.t_grid)
    res = cap_profile(body, density, x, t_grid, samples=args.samples, seed=args.seed or 0)
    print(f"body {body.describe()}  density {density.kind}  x = {np.array2string(res.x, precision=6)}")
    print(f"{'t':>10} {'s(t)':>14} {'t^(-(d-1)/2) s(t)':>20}")
    for t, s, r in zip(res.t, res.s, res.ratio):
        print(f"{t:>10.3g} {s:>14.6g} {r:>20.8g}")
    if math.isfinite(res.closed_form):
        print(f"fitted limit {res.fitted_limit:.8g}  closed form {res.closed_form:.8g}  "
              f"relative error {res.relative_error:.2e}  G(x) = {res.G:.6g}")
    else:
        print(f"Gauss curvature vanishes at x; ratio diverging: {res.diverging} (log slope {res.log_slope:.3f})")
    if args.check is not None:
        ok = res.relative_error <= args.check if math.isfinite(res.closed_form) else res.diverging
        print(f"verdict {'PASS' if ok else 'FAIL'}")
        if not ok:
            raise VerdictFailure("cap limit outside tolerance")
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest(args.seed or 0)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        raise NumericalError("invariant checks failed")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--calibration-store", default=DEFAULT_STORE)

    parser = argparse.ArgumentParser(prog="randhull", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV file to append rows to")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="estimate c(j, d) on the ball")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n-grid", required=True, help="comma separated, increasing")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=None, help="correction exponent of the extrapolation")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("rate", parents=[common], help="fit the log-log decay exponent")
    p.add_argument("--config")
    p.add_argument("--records", help="fit rows of an existing CSV instead of simulating")
    p.add_argument("--experiment-id")
    p.add_argument("--route")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("predict", parents=[common], help="asymptotic deficit prediction")
    p.add_argument("--config")
    p.add_argument("--body", help="e.g. kind=capsule,d=3,radius=1,length=2")
    p.add_argument("--density", help="e.g. kind=curvature_power,exponent=0.333")
    p.add_argument("--j", type=int)
    p.add_argument("--n", help="comma separated cloud sizes")
    p.add_argument("--records", help="CSV with simulated rows to compare against")
    p.add_argument("--check", action="store_true", help="exit 3 when simulation and prediction disagree")
    p.add_argument("--tolerance", type=float, default=0.1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("capcheck", parents=[common], help="small-cap limit at a boundary point")
    p.add_argument("--config")
    p.add_argument("--body")
    p.add_argument("--density")
    p.add_argument("--direction", help="outer normal selecting the boundary point, comma separated")
    p.add_argument("--point", help="boundary point, comma separated")
    p.add_argument("--t-grid", default="1e-4,3e-4,1e-3,3e-3,1e-2")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--check", type=float, default=None, help="relative tolerance for a verdict")
    p.set_defaults(func=cmd_capcheck)

    p = sub.add_parser("selftest", parents=[common], help="quick invariant suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VerdictFailure as exc:
        print(f"verdict: {exc}", file=sys.stderr)
        return EXIT_BAND
    except (NumericalError, EnvelopeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, HypothesisViolation, CalibrationMissing, NoAnalyticValue, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except RandhullError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
