"""Scenario-driven command line front end.

Modes
-----
spectrum     eigenvalue table and drift-parameter sweep report
run          integrate one scenario, fit the interface asymptotics
shoot        search trapped lower-mode data for an excited regime
verify-all   run the acceptance verification suite

Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 dynamics guard tripped (boundary slope or radius).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import asymptotics, bessel, modulation, reduced, solver, spectrum, verify
from .config import (MODES, ScenarioConfig, load_config, serialize_config,
                     with_overrides)
from .errors import (BoundaryBlowup, ConfigError, InsufficientDecay,
                     NonPositiveRadius, NoTrappedData, StefanLabError)
from .weighted import RadialGrid, WeightParam, inner_b


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stefanlab",
        description="numerical laboratory for the interior radial "
                    "moving-boundary problem",
    )
    p.add_argument("--config", metavar="PATH", help="configuration file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--k", type=int)
    p.add_argument("--b0", type=float)
    p.add_argument("--grid", type=int, dest="grid_n")
    p.add_argument("--smax", type=float, dest="s_max")
    p.add_argument("--ds", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--quick", action="store_true", default=None)
    p.add_argument("--json", action="store_true", default=None,
                   dest="json_output")
    p.add_argument("--out", dest="out_dir", metavar="DIR")
    p.add_argument("--lower", metavar="LIST",
                   help="comma-separated lower-mode initials for k > 1 runs")
    p.add_argument("--shoot-file", metavar="PATH",
                   help="reuse trapped initials from a shoot result JSON")
    p.add_argument("--dump-config", action="store_true",
                   help="print the effective configuration and exit")
    return p


def _config_from_args(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    for name in ("mode", "k", "b0", "grid_n", "s_max", "ds", "jobs", "seed",
                 "quick", "json_output", "out_dir"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    if args.lower is not None:
        try:
            overrides["lower_modes"] = tuple(
                float(x) for x in args.lower.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --lower list: {exc}") from exc
    if args.shoot_file is not None:
        try:
            with open(args.shoot_file) as fh:
                payload = json.load(fh)
            overrides["lower_modes"] = tuple(payload["found_initials"])
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad shoot file {args.shoot_file}: {exc}") from exc
    return with_overrides(cfg, **overrides)


def _outpath(cfg: ScenarioConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def cmd_spectrum(cfg: ScenarioConfig) -> int:
    grid = RadialGrid(cfg.grid_n)
    zeros = bessel.j0_zeros(8)
    bessel.zeros_to_csv(_outpath(cfg, "eigen_table.csv"), zeros)
    pairs = spectrum.eigenpairs(grid, WeightParam(cfg.b0), 8)
    with open(_outpath(cfg, "eigen_table_drift.csv"), "w", newline="") as fh:
        import csv as _csv

        wr = _csv.writer(fh)
        wr.writerow(["k", "b", "lambda_bk", "boundary_slope", "residual"])
        for p in pairs:
            wr.writerow([p.index, repr(p.b), repr(p.lam),
                         repr(p.boundary_slope), repr(p.residual)])
    reports = [spectrum.perturbation_sweep(grid, k, cfg.b_values)
               for k in (1, 2, 3)]
    spectrum.sweep_to_csv(_outpath(cfg, "perturbation_sweep.csv"), reports)

    checks = {}
    checks["zeros_refined"] = all(abs(bessel.j0(z.r)) <= 1e-12 for z in zeros)
    checks["gap_exceeds_one"] = all(
        zeros[i + 1].lam - zeros[i].lam > 1.0 for i in range(7))
    w0 = WeightParam(0.0)
    etas = [bessel.eta(j, grid, zeros) for j in range(1, 9)]
    ortho = max(abs(inner_b(etas[i].gridfunction, etas[j].gridfunction, w0)
                    - (1.0 if i == j else 0.0))
                for i in range(8) for j in range(8))
    checks["orthonormality_1e-8"] = ortho <= 1e-8
    # the k = 8 identity needs the finer quadrature (Simpson error ~ h^4 r_k^4)
    fine = grid if grid.n >= 2048 else RadialGrid(2048)
    scaling = max(abs(bessel.scaling_coefficient(kk, kk, fine, zeros) + 1.0)
                  for kk in range(1, 9))
    checks["scaling_identity_1e-8"] = scaling <= 1e-8
    checks["sweep_slope_near_minus_one"] = all(
        -1.1 <= r.slope <= -0.9 for r in reports)
    checks["sweep_residual_order_1.8"] = all(
        r.residual_order >= 1.8 for r in reports)
    gap_checks = {}
    for kk in (1, 2):
        floor = spectrum.spectral_gap_check(grid, WeightParam(cfg.b0), kk,
                                            seed=cfg.seed)
        gap_checks[kk] = floor
        checks[f"gap_above_lam{kk + 1}_minus_half"] = (
            floor >= zeros[kk].lam - 0.5)
    summary = {
        "checks": checks,
        "orthonormality_defect": ortho,
        "scaling_identity_defect": scaling,
        "gap_floors": gap_checks,
        "sweeps": {r.k: {"slope": r.slope, "residual_order": r.residual_order}
                   for r in reports},
        "eigenvalues_b": {p.index: p.lam for p in pairs},
    }
    with open(_outpath(cfg, "spectrum_report.json"), "w") as fh:
        fh.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    ok = all(checks.values())
    print(f"spectrum: {'all checks passed' if ok else 'CHECK FAILURES'} "
          f"(report in {cfg.out_dir})")
    if not ok:
        for name, passed in checks.items():
            if not passed:
                print(f"  failed: {name}", file=sys.stderr)
    return 0 if ok else 2


def _initial_profile(cfg: ScenarioConfig):
    grid = RadialGrid(cfg.grid_n)
    if cfg.k == 1:
        w = WeightParam(cfg.b0)
        return grid, modulation.build_profile(grid, w, [cfg.b0])
    if not cfg.lower_modes:
        raise ConfigError(
            "k > 1 runs need lower_modes (run 'shoot' first or pass "
            "--lower/--shoot-file)"
        )
    b_init = modulation.adiabatic_b(0.0, cfg.k, cfg.amplitude)
    w = WeightParam(b_init)
    coeffs = list(cfg.lower_modes) + [cfg.b0]
    return grid, modulation.build_profile(grid, w, coeffs)


def cmd_run(cfg: ScenarioConfig) -> int:
    grid, v0 = _initial_profile(cfg)
    ds = cfg.ds if cfg.ds is not None else solver.default_ds(grid, cfg.k)
    u0i = asymptotics.u0_disk_integral(v0)
    series = solver.run(v0, ds=ds, s_max=cfg.effective_s_max(),
                        record_ds=cfg.record_ds, mass_tol=cfg.mass_tol)
    series.to_csv(_outpath(cfg, "timeseries.csv"))
    track = modulation.track_run(series, cfg.k, amplitude=cfg.amplitude)
    track.to_csv(_outpath(cfg, "modulation.csv"))
    verdict = asymptotics.verdict(series, cfg.k, cfg.b0, u0i,
                                  rate_tol=cfg.effective_rate_tol(),
                                  radius_tol=cfg.radius_tol)
    asymptotics.write_verdict_json(_outpath(cfg, "verdict.json"), verdict)
    fit = asymptotics.fit_rate(series, verdict["lambda_inf_predicted"], cfg.k)
    asymptotics.decay_plot(_outpath(cfg, "decay.svg"), series, fit)
    print(f"run: {verdict['regime']}, rate {verdict['rate_fitted']:.4f} vs "
          f"{verdict['rate_predicted']:.4f} "
          f"(rel {verdict['rate_rel_error']:.3%}), radius defect "
          f"{verdict['radius_defect']:.2e} -> "
          f"{'PASS' if verdict['passed'] else 'FAIL'}")
    return 0 if verdict["passed"] else 2


def cmd_shoot(cfg: ScenarioConfig) -> int:
    grid = RadialGrid(cfg.grid_n)
    result = reduced.shoot_trapped(
        cfg.k, cfg.b0, ceiling=cfg.ceiling, s_max=cfg.s_max,
        grid=grid, ds=cfg.ds, tol=cfg.shoot_tol, amplitude=cfg.amplitude)
    path = _outpath(cfg, f"shoot_k{cfg.k}.json")
    result.to_json(path)
    print(f"shoot: trapped initials {result.initials} "
          f"(max V^2 = {result.max_v2:.3g}) -> {path}")
    return 0


def cmd_verify_all(cfg: ScenarioConfig) -> int:
    results = verify.run_all(quick=cfg.quick, jobs=cfg.jobs)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    if cfg.json_output:
        payload = [
            {"number": r.number, "name": r.name, "passed": r.passed,
             "details": r.details, "seconds": round(r.seconds, 3)}
            for r in results
        ]
        path = _outpath(cfg, "verification.json")
        with open(path, "w") as fh:
            fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        print(f"wrote {path}")
    return 0 if n_pass == len(results) else 2


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.dump_config:
            print(serialize_config(cfg), end="")
            return 0
        handler = {
            "spectrum": cmd_spectrum,
            "run": cmd_run,
            "shoot": cmd_shoot,
            "verify-all": cmd_verify_all,
        }[cfg.mode]
        return handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (BoundaryBlowup, NonPositiveRadius) as exc:
        print(f"dynamics guard: {exc}", file=sys.stderr)
        return 3
    except (NoTrappedData, InsufficientDecay) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except StefanLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
