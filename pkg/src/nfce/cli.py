"""Command-line front end: simulate / estimate / bounds / sweep.

Every subcommand accepts ``--config FILE`` (INI format, see
:mod:`nfce.harness`) plus flag overrides for the common fields.  Exit code 0
on success; failures print one categorized line ``error: <category>:
<message>`` to stderr and exit nonzero (2 = configuration, 3 = I/O,
1 = anything else).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .model import PathParams, synthesize_channel, check_delay_validity
from .frontend import noise_var_for_snr, observe, random_phase_combiner
from .estimator import StoppingRule, reconstruct_channel, run_dps
from .harness import (
    ConfigError,
    SimConfig,
    bounds_table,
    load_config,
    ls_baseline,
    monte_carlo_sweep,
    nmse_db,
    polar_omp_fallback,
    records_csv_text,
    run_trial,
    trial_rng,
    _STREAM_COMBINER,
    _STREAM_NOISE,
    _STREAM_PATHS,
    draw_paths,
)

_OVERRIDE_FLAGS = (
    ("--n-antennas", "n_antennas", int),
    ("--n-subarrays", "n_subarrays", int),
    ("--carrier-hz", "carrier_hz", float),
    ("--n-subcarriers", "n_subcarriers", int),
    ("--bandwidth-hz", "bandwidth_hz", float),
    ("--paths", "n_paths", int),
    ("--trials", "trials", int),
    ("--seed", "seed", int),
    ("--p-fa", "p_fa", float),
    ("--max-paths", "max_paths", int),
    ("--power", "power", float),
)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI configuration file")
    for flag, dest, typ in _OVERRIDE_FLAGS:
        sub.add_argument(flag, dest=dest, type=typ, default=None)
    sub.add_argument("--snr-db", dest="snr_db",
                     help="comma-separated SNR list in dB")
    sub.add_argument("--algorithms", dest="algorithms",
                     help="comma-separated subset of dps,ls,omp")
    sub.add_argument("--timing", action="store_true", default=None,
                     help="record wall-clock runtime_ms (breaks byte determinism)")


def _build_config(args) -> SimConfig:
    overrides = {}
    for _, dest, _ in _OVERRIDE_FLAGS:
        val = getattr(args, dest, None)
        if val is not None:
            overrides[dest] = val
    if getattr(args, "snr_db", None):
        overrides["snr_db"] = tuple(float(x) for x in args.snr_db.split(","))
    if getattr(args, "algorithms", None):
        overrides["algorithms"] = tuple(args.algorithms.split(","))
    if getattr(args, "timing", None):
        overrides["timing"] = True
    if getattr(args, "out", None) and args.command == "sweep":
        overrides["csv_path"] = args.out
    if args.config:
        return load_config(args.config, overrides)
    return SimConfig(**overrides)


def _cmd_simulate(args) -> int:
    cfg = _build_config(args)
    geom, grid = cfg.geometry(), cfg.grid()
    trial = args.trial
    paths = draw_paths(cfg, trial_rng(cfg.seed, trial, _STREAM_PATHS), grid)
    check_delay_validity(paths, geom, grid)
    H = synthesize_channel(paths, geom, grid)
    W = random_phase_combiner(geom, trial_rng(cfg.seed, trial, _STREAM_COMBINER))
    snr = float(args.snr_db.split(",")[0]) if args.snr_db else cfg.snr_db[0]
    noise_var = noise_var_for_snr(H, W, cfg.power, snr)
    Y = observe(H, W, cfg.power, noise_var,
                trial_rng(cfg.seed, trial, _STREAM_NOISE))
    np.savez(
        args.out,
        H=H, Y=Y, W=W,
        theta=[p.theta for p in paths],
        d_m=[p.dist_m for p in paths],
        r_m=[p.range_m for p in paths],
        gain=[p.gain for p in paths],
        n_antennas=geom.n_antennas, n_subarrays=geom.n_subarrays,
        carrier_hz=geom.carrier_hz, n_subcarriers=grid.n_subcarriers,
        bandwidth_hz=grid.n_subcarriers * grid.spacing_hz,
        snr_db=snr, noise_var=noise_var, power=cfg.power, seed=cfg.seed,
        trial=trial,
    )
    print(f"wrote scenario with L={len(paths)} paths, SNR {snr:g} dB -> {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    cfg = _build_config(args)
    algorithm = args.algorithm
    if args.scenario:
        data = np.load(args.scenario)
        from .model import ArrayGeometry, SubcarrierGrid

        geom = ArrayGeometry(int(data["n_antennas"]), int(data["n_subarrays"]),
                             float(data["carrier_hz"]))
        grid = SubcarrierGrid.from_bandwidth(int(data["n_subcarriers"]),
                                             float(data["bandwidth_hz"]))
        H, Y, W = data["H"], data["Y"], data["W"]
        noise_var = float(data["noise_var"])
        power = float(data["power"])
        rule = StoppingRule(noise_var=noise_var, p_fa=cfg.p_fa,
                            max_paths=cfg.max_paths)
        if algorithm == "dps":
            res = run_dps(Y, W, geom, grid, rule, power=power)
            est = res.paths
            H_hat = reconstruct_channel(est, geom, grid)
            extra = f" fallback={res.fallback} corr={res.corr_total}"
        elif algorithm == "omp":
            est, corr = polar_omp_fallback(
                Y, W, geom, grid, rule, cfg.angle_grid_size,
                np.geomspace(cfg.distance_grid_min_m, cfg.distance_grid_max_m,
                             cfg.distance_grid_size), power)
            H_hat = reconstruct_channel(est, geom, grid)
            extra = f" corr={sum(corr)}"
        elif algorithm == "ls":
            est = []
            H_hat = ls_baseline(Y, W, power)
            extra = ""
        else:
            raise ConfigError(f"unknown algorithm {algorithm!r}")
        print(f"algorithm={algorithm} L_hat={len(est)} "
              f"nmse_db={nmse_db(H_hat, H):.3f}{extra}")
        for i, p in enumerate(est):
            print(f"  path {i}: theta={p.theta:+.6f} d={p.dist_m:.4f} m "
                  f"r={p.range_m:.4f} m |gain|={abs(p.gain):.4f}")
        return 0
    record = run_trial(cfg, args.trial, cfg.snr_db[0], algorithm)
    print(f"algorithm={algorithm} L={record.n_paths} L_hat={record.n_paths_est} "
          f"nmse_db={record.nmse_db:.3f} corr={record.corr_count}")
    return 0


def _cmd_bounds(args) -> int:
    cfg = _build_config(args)
    geom, grid = cfg.geometry(), cfg.grid()
    thetas = [float(x) for x in args.theta.split(",")]
    ds = [float(x) for x in args.d_m.split(",")]
    rs = [float(x) for x in args.r_m.split(",")]
    if not (len(thetas) == len(ds) == len(rs)):
        raise ConfigError("theta, d-m and r-m lists must have equal lengths")
    text = bounds_table(list(zip(thetas, ds, rs)), geom, grid,
                        args.power if args.power is not None else cfg.power,
                        args.noise_var, form=args.form)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {len(thetas)} scenario rows -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _build_config(args)
    records = monte_carlo_sweep(cfg)
    if not cfg.csv_path:
        sys.stdout.write(records_csv_text(records))
    else:
        print(f"wrote {len(records)} records -> {cfg.csv_path}")
    per_alg: dict = {}
    for rec in records:
        per_alg.setdefault(rec.algorithm, []).append(rec.nmse_db)
    for alg, vals in sorted(per_alg.items()):
        print(f"# {alg}: mean nmse_db {float(np.mean(vals)):.2f} over {len(vals)} runs",
              file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfce",
        description="wideband near-field channel estimation testbench",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_sim = subs.add_parser("simulate", help="draw one scenario and dump it")
    _add_common(p_sim)
    p_sim.add_argument("--trial", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output .npz path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_est = subs.add_parser("estimate", help="run one algorithm on a scenario")
    _add_common(p_est)
    p_est.add_argument("--algorithm", default="dps", choices=("dps", "ls", "omp"))
    p_est.add_argument("--scenario", help="scenario .npz from `simulate`")
    p_est.add_argument("--trial", type=int, default=0)
    p_est.set_defaults(func=_cmd_estimate)

    p_bnd = subs.add_parser("bounds", help="numeric and closed-form bound tables")
    _add_common(p_bnd)
    p_bnd.add_argument("--theta", default="0.2", help="comma list")
    p_bnd.add_argument("--d-m", dest="d_m", default="10", help="comma list")
    p_bnd.add_argument("--r-m", dest="r_m", default="10", help="comma list")
    p_bnd.add_argument("--noise-var", dest="noise_var", type=float, default=1e-2)
    p_bnd.add_argument("--form", default="corrected",
                       choices=("corrected", "printed"))
    p_bnd.add_argument("--out")
    p_bnd.set_defaults(func=_cmd_bounds)

    p_swp = subs.add_parser("sweep", help="Monte Carlo sweep to CSV")
    _add_common(p_swp)
    p_swp.add_argument("--out", help="CSV output path (overrides config)")
    p_swp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: run: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
