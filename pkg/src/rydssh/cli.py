"""Command-line interface: ``rydssh <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance failure.
"""
import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DegeneracyWarning, RydSSHError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4
MODELS = ("full", "effective", "master", "eliminated")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON config (default: shipped default config)")
    p.add_argument("--seed", type=_seed, help="master seed override")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--boundary", choices=("obc", "pbc"), default=None)
    p.add_argument("--flux", choices=("+", "-"), default="+", help="sign of the plaquette flux")
    return p


def build_parser():
    common = _common()
    ap = argparse.ArgumentParser(prog="rydssh", description="Dissipative Rydberg SSH chain simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gap", parents=[common], help="Liouvillian gap scan of the three-level drain")
    p.add_argument("--grid", type=_floats, help="Omega_p/Gamma values (default: 0 and the config grid)")

    p = sub.add_parser("dynamics", parents=[common], help="population dynamics of the six-atom segment")
    p.add_argument("--models", nargs="+", choices=MODELS, default=["full", "effective"])
    p.add_argument("--stark", choices=("exact", "printed", "none"), default="exact",
                   help="light-shift form of the effective model")

    sub.add_parser("spectrum", parents=[common], help="chain spectrum, eigenstates and skin metrics")

    p = sub.add_parser("disorder", parents=[common], help="disorder ensemble of dMIPR and winding")
    p.add_argument("--kind", choices=("phase", "position"), default="phase")
    p.add_argument("--half-width", type=float, help="rad (phase) or um (position)")
    p.add_argument("--n-realizations", type=int)

    p = sub.add_parser("winding", parents=[common], help="ensemble winding number versus disorder strength")
    p.add_argument("--kind", choices=("phase", "position"), default="phase")
    p.add_argument("--strengths", type=_floats, help="half widths (default: the config sweep)")
    p.add_argument("--n-realizations", type=int)

    p = sub.add_parser("sweep", parents=[common], help="tracked eigenvalues under a uniform offset")
    p.add_argument("--kind", choices=("phase", "position"), default="phase")
    p.add_argument("--grid", type=_floats, help="offsets (default: the config sweep)")
    p.add_argument("--modes", type=lambda s: [int(x) for x in s.split(",")], help="1-based mode indices")

    p = sub.add_parser("validate", parents=[common], help="run the acceptance criteria")
    p.add_argument("--criteria", type=int, nargs="+", choices=range(1, 11), metavar="N")
    return ap


# ----------------------------------------------------------------------------

def _setup(args):
    from .config import config_hash, load_config

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(master_seed=args.seed)
    if args.boundary:
        cfg = cfg.replace(boundary=args.boundary.upper())
    return cfg, config_hash(cfg)


def _manifest(args, cfg, chash, **arguments):
    from .io import RunManifest

    arguments.setdefault("boundary", cfg.boundary)
    return RunManifest(args.command, chash, cfg.master_seed, arguments)


def _phase_grid(cfg):
    return [x * math.pi / 2 for x in cfg.phase_sweep_over_half_pi]


def cmd_gap(args, cfg, chash):
    from .dissipation import ThreeLevelModel, build_liouvillian, gap_analytic, gap_numeric
    from .io import write_csv

    grid = args.grid if args.grid is not None else [0.0, *cfg.gap_grid]
    if any(x < 0 for x in grid):
        raise ConfigError("Omega_p/Gamma must be >= 0", "--grid")
    man = _manifest(args, cfg, chash, grid=grid)
    rows = []
    for x in grid:
        m = ThreeLevelModel(x * cfg.Gamma, cfg.Gamma)
        rows.append((x, gap_analytic(m), gap_numeric(build_liouvillian(m))))
    write_csv(args.out / "gap.csv", ["omega_p_over_gamma", "g_analytic", "g_numeric"], rows, man,
              comments=["g in 1/us"])
    return man, 0


_WINDOW = {"full": "segment", "effective": "segment", "master": "elimination", "eliminated": "elimination"}


def _trajectory_for(model, cfg, stark, cache):
    from .dissipation import validate_elimination
    from .microscopic import run_effective, run_full

    if model == "full":
        return run_full(cfg)
    if model == "effective":
        return run_effective(cfg, stark=stark)
    if "elim" not in cache:
        cache["elim"] = validate_elimination(cfg)
    return cache["elim"]["master" if model == "master" else "eliminated"]


def cmd_dynamics(args, cfg, chash):
    from .io import write_csv, write_json
    from .trajectory import compare_trajectories

    stark = None if args.stark == "none" else args.stark
    models = list(dict.fromkeys(args.models))
    man = _manifest(args, cfg, chash, models=models, stark=args.stark)
    cache, trajs = {}, {}
    for m in models:
        trajs[m] = _trajectory_for(m, cfg, stark, cache)
        tr = trajs[m]
        cols, data = ["time_us", *tr.labels], [tr.times[:, None], tr.populations]
        if tr.ground is not None:
            cols.append("ground")
            data.append(tr.ground[:, None])
        write_csv(args.out / f"dynamics_{m}.csv", cols, np.hstack(data).tolist(), man,
                  comments=[f"model={m}"])
    # full/effective share the short window, master/eliminated the long one
    report, skipped = {}, []
    for i, a in enumerate(models):
        for b in models[i + 1:]:
            if _WINDOW[a] != _WINDOW[b]:
                skipped.append(f"{a}_vs_{b}")
                continue
            c = compare_trajectories(trajs[a], trajs[b])
            report[f"{a}_vs_{b}"] = {"max_abs_deviation": c["max_abs_deviation"], "site": c["argmax_site"],
                                     "time_us": c["argmax_time"], "sites": list(c["labels"])}
    write_json(args.out / "deviation.json", {"comparisons": report, "skipped_different_windows": skipped}, man)
    return man, 0


def cmd_spectrum(args, cfg, chash):
    from .chain import build_chain, chain_from_config, edge_states, eigensolve, default_couplings
    from .io import spectrum_rows, state_rows, write_csv, write_json
    from .metrics import localization_report, winding_details

    sign = 1 if args.flux == "+" else -1
    man = _manifest(args, cfg, chash, flux=args.flux)
    if cfg.boundary == "OBC":
        chain = build_chain(default_couplings(cfg, sign), cfg.n_cells, "OBC")
    else:
        chain = chain_from_config(cfg.with_flux(sign), "PBC")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        spec = eigensolve(chain)
        wind = winding_details(chain, cfg.winding_cutoff_cells)
    rep = localization_report(spec, cfg.delta_sites)
    comments = ["energies in MHz (angular frequency / 2 pi)",
                "index is the 1-based position in (Re E, Im E) order"]
    write_csv(args.out / "spectrum.csv", ["index", "re_E_MHz", "im_E_MHz"], spectrum_rows(spec), man, comments)
    write_csv(args.out / "states.csv", ["state", "site", "prob", "re_right", "im_right", "re_left", "im_left"],
              state_rows(spec), man, comments[1:])
    E = spec.eigenvalues
    metrics = rep.as_dict()
    metrics.update({
        "boundary": cfg.boundary, "flux": args.flux, "n_sites": chain.size, "seed": cfg.master_seed,
        "max_abs_imag_over_real": float(np.abs(E.imag).max() / np.abs(E.real).max()),
        "edge_states": [i + 1 for i in edge_states(spec)], "condition": float(spec.condition),
        "winding": {"nu_s": wind["nu"], "one_minus_nu": 1.0 - wind["nu"], "n_s": 1,
                    "cutoff_cells": cfg.winding_cutoff_cells, "window_sites": wind["window_sites"],
                    "excluded_states": wind["excluded"]},
    })
    write_json(args.out / "metrics.json", metrics, man)
    return man, 0


def cmd_disorder(args, cfg, chash):
    from .disorder import RNG_ALGORITHM, DisorderSpec, ensemble_run
    from .io import write_csv, write_json

    spec = DisorderSpec.from_config(cfg, args.kind, args.half_width, args.n_realizations)
    man = _manifest(args, cfg, chash, kind=spec.kind, half_width=spec.half_width,
                    n_realizations=spec.n_realizations)
    man.rng = RNG_ALGORITHM
    ens = ensemble_run(spec, cfg, cfg.boundary, workers=args.workers)
    write_csv(args.out / "ensemble.csv", ["realization", "seed", "abs_dmipr", "nu_s"], ens.rows(), man)
    write_json(args.out / "summary.json", ens.summary(), man)
    return man, 0


def cmd_winding(args, cfg, chash):
    from .disorder import RNG_ALGORITHM, strength_scan
    from .io import write_csv

    if args.strengths is not None:
        grid = args.strengths
    else:
        grid = _phase_grid(cfg) if args.kind == "phase" else list(cfg.position_sweep_um)
    man = _manifest(args, cfg, chash, kind=args.kind, strengths=grid, n_realizations=args.n_realizations)
    man.rng = RNG_ALGORITHM
    scans = strength_scan(cfg, args.kind, grid, args.n_realizations, cfg.boundary, args.workers)
    rows = [(w, r.winding.nu, r.winding.one_minus_nu, r.winding.stderr, r.winding.n_failed,
             r.mean_abs_dmipr) for w, r in zip(grid, scans)]
    write_csv(args.out / "winding.csv", ["half_width", "nu", "one_minus_nu", "stderr", "n_failed", "mean_abs_dmipr"],
              rows, man)
    return man, 0


def cmd_sweep(args, cfg, chash):
    from .disorder import trajectory_sweep
    from .io import write_csv, write_json

    if args.grid is not None:
        grid = args.grid
    else:
        grid = _phase_grid(cfg) if args.kind == "phase" else list(cfg.position_sweep_um)
    man = _manifest(args, cfg, chash, kind=args.kind, grid=grid, modes=args.modes)
    res = trajectory_sweep(cfg, args.kind, grid, args.modes, cfg.boundary)
    write_csv(args.out / "sweep.csv", ["delta", "k", "abs_E", "re_E", "im_E"], res.rows(), man,
              comments=["energies in rad/us"])
    if res.flagged:
        write_json(args.out / "sweep_flags.json",
                   {"ambiguous_steps": [{"grid_index": g, "mode": k} for g, k in res.flagged]}, man)
    return man, 0


def cmd_validate(args, cfg, chash):
    from .acceptance import format_line, run_all
    from .io import write_json

    man = _manifest(args, cfg, chash, criteria=args.criteria)
    results = run_all(cfg, args.criteria, workers=args.workers)
    for r in results:
        print(format_line(r))
    ok = all(r.ok for r in results)
    write_json(args.out / "acceptance.json", {"passed": ok, "criteria": [r.as_dict() for r in results]}, man)
    return man, EXIT_OK if ok else EXIT_ACCEPTANCE


COMMANDS = {
    "gap": cmd_gap, "dynamics": cmd_dynamics, "spectrum": cmd_spectrum, "disorder": cmd_disorder,
    "winding": cmd_winding, "sweep": cmd_sweep, "validate": cmd_validate,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError("must be >= 1", "--workers")
        cfg, chash = _setup(args)
        man, code = COMMANDS[args.command](args, cfg, chash)
    except ConfigError as exc:
        print(f"rydssh: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RydSSHError as exc:
        print(f"rydssh: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"rydssh: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    man.wall_time_s = time.perf_counter() - t0
    man.write(args.out)
    print(json.dumps({"command": args.command, "manifest": man.hash, "outputs": man.outputs,
                      "out": str(args.out)}))
    return code


if __name__ == "__main__":
    sys.exit(main())
