"""grid-gfv command line: validate | pf | laplacian | dmatrix | inertia |
gfv | simulate | mc | report.

Exit codes: 0 success, 1 usage error (bad arguments, missing files), 2 data
or validation error, 3 numerical failure (non-convergence, singularity,
unstable integration).  All outputs are CSV with a header row; --json
mirrors each CSV as a sibling .json document.  A --config JSON file supplies
shared defaults (tolerances, OU/turbine/MC parameters, seed); explicit flags
win over the file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import montecarlo
from .case_model import bus_positions, load_case, validate_case
from .csvio import format_cell, read_table, write_table
from .dynamics import (
    OuParams,
    TurbineParams,
    build_swing_model,
    simulate,
    simulate_ou,
    wind_to_power,
)
from .errors import (
    CaseError,
    ConvergenceError,
    DisconnectedNetworkError,
    GridGfvError,
    SimulationUnstableError,
    SingularMatrixError,
    StabilityRegionError,
)
from .pipeline import analyze_case
from .powerflow import internal_emfs, solve_powerflow

_NUMERICAL_ERRORS = (
    ConvergenceError,
    SingularMatrixError,
    StabilityRegionError,
    DisconnectedNetworkError,
    SimulationUnstableError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


@dataclass(frozen=True)
class RunConfig:
    """Merged run parameters: config-file values overridden by CLI flags."""

    tol: float = 1e-8
    max_iter: int = 20
    seed: int = 0
    damping: float = 1.0
    ou: OuParams = OuParams()
    turbine: TurbineParams = TurbineParams()
    n_realizations: int = 1000
    horizon: float = 200.0
    dt: float = 0.01
    bins: int = montecarlo.DEFAULT_BINS


def _load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    ou_raw = raw.get("ou", {})
    tb_raw = raw.get("turbine", {})
    mc_raw = raw.get("mc", {})
    return RunConfig(
        tol=float(raw.get("tol", 1e-8)),
        max_iter=int(raw.get("max_iter", 20)),
        seed=int(raw.get("seed", 0)),
        damping=float(raw.get("damping", 1.0)),
        ou=OuParams(
            mu=float(ou_raw.get("mu", 14.0)),
            alpha=float(ou_raw.get("alpha", 0.1)),
            b=float(ou_raw.get("b", 0.099)),
        ),
        turbine=TurbineParams(
            rated_power=float(tb_raw.get("rated_power", 1.0)),
            v_rated=float(tb_raw.get("v_rated", 15.0)),
            v_ref=float(tb_raw.get("v_ref", 14.0)),
        ),
        n_realizations=int(mc_raw.get("n_realizations", 1000)),
        horizon=float(mc_raw.get("horizon", 200.0)),
        dt=float(mc_raw.get("dt", 0.01)),
        bins=int(mc_raw.get("bins", montecarlo.DEFAULT_BINS)),
    )


def _merge(run: RunConfig, args) -> RunConfig:
    updates = {}
    for flag, field in (
        ("tol", "tol"),
        ("max_iter", "max_iter"),
        ("seed", "seed"),
        ("damping", "damping"),
        ("n", "n_realizations"),
        ("t", "horizon"),
        ("dt", "dt"),
        ("bins", "bins"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            updates[field] = val
    for flag, field in (("ou_mu", "mu"), ("ou_alpha", "alpha"), ("ou_b", "b")):
        val = getattr(args, flag, None)
        if val is not None:
            run = replace(run, ou=replace(run.ou, **{field: val}))
    for flag, field in (
        ("rated_power", "rated_power"),
        ("v_rated", "v_rated"),
        ("v_ref", "v_ref"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            run = replace(run, turbine=replace(run.turbine, **{field: val}))
    return replace(run, **updates) if updates else run


def _load_validated(path):
    case = load_case(path)
    violations = validate_case(case)
    if violations:
        lines = "\n".join(str(v) for v in violations)
        raise CaseError(f"case {path} fails validation:\n{lines}")
    return case


def _emit(args, header, rows, comment=None):
    if getattr(args, "out", None):
        write_table(args.out, header, rows, comment=comment, json_mirror=args.json)
    else:
        if args.json:
            raise _UsageError("--json requires --out (it mirrors a CSV file)")
        if comment is not None:
            print(f"# {comment}")
        print(",".join(header))
        for row in rows:
            print(",".join(format_cell(v) for v in row))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_validate(args, run: RunConfig) -> int:
    case = load_case(args.case)
    violations = validate_case(case)
    for v in violations:
        print(str(v))
    return 0 if not violations else 2


def _cmd_pf(args, run: RunConfig) -> int:
    case = _load_validated(args.case)
    sol = solve_powerflow(case, tol=run.tol, max_iter=run.max_iter)
    rows = [
        [bid, float(sol.vm[i]), math.degrees(float(sol.va[i])),
         float(sol.p_inj[i]), float(sol.q_inj[i])]
        for i, bid in enumerate(sol.bus_ids)
    ]
    _emit(args, ["bus_id", "vm", "va_deg", "p_inj", "q_inj"], rows,
          comment=f"iterations={sol.iterations} max_mismatch={sol.max_mismatch!r}")
    return 0


def _cmd_laplacian(args, run: RunConfig) -> int:
    analysis = analyze_case(_load_validated(args.case), tol=run.tol,
                            max_iter=run.max_iter, check=False)
    lap = analysis.laplacian
    header = ["bus_id"] + [str(b) for b in lap.bus_ids]
    rows = [
        [bid] + [float(x) for x in lap.l[i]] for i, bid in enumerate(lap.bus_ids)
    ]
    _emit(args, header, rows)
    return 0


def _cmd_dmatrix(args, run: RunConfig) -> int:
    analysis = analyze_case(_load_validated(args.case), tol=run.tol,
                            max_iter=run.max_iter, check=False)
    d = analysis.participation.d
    header = ["bus_id"] + [f"gen_{k}" for k in range(d.shape[1])]
    rows = [
        [bid] + [float(x) for x in d[i]]
        for i, bid in enumerate(analysis.participation.bus_ids)
    ]
    _emit(args, header, rows)
    return 0


def _cmd_inertia(args, run: RunConfig) -> int:
    analysis = analyze_case(_load_validated(args.case), tol=run.tol,
                            max_iter=run.max_iter, check=False)
    rows = [
        [bid, float(analysis.inertia.h[i])]
        for i, bid in enumerate(analysis.inertia.bus_ids)
    ]
    _emit(args, ["bus_id", "nodal_inertia_s"], rows)
    return 0


def _cmd_gfv(args, run: RunConfig) -> int:
    analysis = analyze_case(_load_validated(args.case), tol=run.tol,
                            max_iter=run.max_iter, check=False)
    rows = [
        [bid, float(analysis.inertia.h[i]), float(analysis.fiedler.vector[i]),
         float(analysis.gfv.gfv[i])]
        for i, bid in enumerate(analysis.gfv.bus_ids)
    ]
    comment = (
        f"lambda2={analysis.fiedler.lambda2!r} "
        f"lambda2_bar={analysis.gfv.dynamic_connectivity!r}"
    )
    _emit(args, ["bus_id", "nodal_inertia_s", "fiedler_norm", "gfv"], rows, comment)
    return 0


def _cmd_simulate(args, run: RunConfig) -> int:
    case = _load_validated(args.case)
    sol = solve_powerflow(case, tol=run.tol, max_iter=run.max_iter)
    emfs = internal_emfs(case, sol)
    model = build_swing_model(case, sol, emfs, default_damping=run.damping)
    n_steps = int(round(args.t / run.dt))
    if n_steps < 1:
        raise _UsageError("simulation horizon must cover at least one step")
    ou = replace(run.ou, dt=run.dt, seed=run.seed)
    wind = simulate_ou(ou, n_steps)
    dp = wind_to_power(wind, run.turbine.rated_power, run.turbine.v_rated,
                       run.turbine.v_ref)
    traj = simulate(model, args.bus, dp, run.dt)
    header = (["t", "dp", "coi_freq"]
              + [f"gen_{k}" for k in range(len(model.m))]
              + [f"bus_{b}" for b in traj.bus_ids])
    rows = []
    for k in range(len(traj.t)):
        row = [float(traj.t[k]), float(traj.injection[k]), float(traj.coi_freq[k])]
        row += [float(x) for x in traj.gen_freq[:, k]]
        row += [float(x) for x in traj.bus_freq[:, k]]
        rows.append(row)
    _emit(args, header, rows,
          comment=f"seed={run.seed} bus={args.bus} dt={run.dt!r}")
    return 0


def _hist_rows(hist: montecarlo.Histogram):
    return [
        [float(hist.edges[i]), float(hist.edges[i + 1]), int(hist.counts[i])]
        for i in range(len(hist.counts))
    ]


def _cmd_mc(args, run: RunConfig) -> int:
    case = _load_validated(args.case)
    try:
        buses = [int(tok) for tok in args.buses.split(",") if tok]
    except ValueError:
        raise _UsageError(f"--buses must be a comma-separated id list, got {args.buses!r}")
    if not buses:
        raise _UsageError("--buses must name at least one bus")
    # Keep outputs in case bus order so gfv and mc/report orderings compose.
    pos = bus_positions(case)
    unknown = [b for b in buses if b not in pos]
    if unknown:
        raise CaseError(f"placement buses not in case: {unknown}")
    buses = sorted(set(buses), key=lambda b: pos[b])

    analysis = analyze_case(case, tol=run.tol, max_iter=run.max_iter, check=False)
    cfg = montecarlo.McConfig(
        case=case,
        placement_buses=tuple(buses),
        n_realizations=run.n_realizations,
        horizon=run.horizon,
        dt=run.dt,
        ou=run.ou,
        turbine=run.turbine,
        base_seed=run.seed,
        default_damping=run.damping,
    )
    summary = montecarlo.run_monte_carlo(cfg, bins=run.bins)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gfv_at = dict(zip(analysis.gfv.bus_ids, analysis.gfv.gfv))
    summary_rows = []
    for bus in summary.order:
        stats = summary.placements[bus]
        bus_dir = out_dir / f"bus_{bus}"
        bus_dir.mkdir(exist_ok=True)
        write_table(bus_dir / "coi_hist.csv", ["bin_low", "bin_high", "count"],
                    _hist_rows(stats.coi_histogram), json_mirror=args.json)
        write_table(bus_dir / "poi_hist.csv", ["bin_low", "bin_high", "count"],
                    _hist_rows(stats.poi_histogram), json_mirror=args.json)
        write_table(bus_dir / "ifd.csv", ["ifd"],
                    [[float(v)] for v in stats.ifd_samples], json_mirror=args.json)
        q = stats.ifd_quartiles
        summary_rows.append([
            bus, float(gfv_at[bus]), q.median, q.q3 - q.q1, q.q1, q.q3,
            q.whisker_low, q.whisker_high, stats.coi_std, stats.poi_std,
            len(stats.ifd_samples),
        ])
    write_table(
        out_dir / "summary.csv",
        ["bus_id", "gfv", "median_ifd", "ifd_iqr", "q1", "q3", "whisker_low",
         "whisker_high", "coi_std", "poi_std", "n_ok"],
        summary_rows,
        comment=(f"f0_pu={summary.f0!r} frequency_values=deviation_pu "
                 f"seed={run.seed} n_realizations={summary.n_realizations} "
                 f"partial={summary.partial}"),
        json_mirror=args.json,
    )
    if summary.partial:
        for bus in summary.order:
            for failure in summary.placements[bus].failures:
                print(f"bus {bus}: {failure}", file=sys.stderr)
        print("warning: summary is partial (some realizations failed)",
              file=sys.stderr)
    return 0


def _cmd_report(args, run: RunConfig) -> int:
    summary_path = Path(args.out_dir) / "summary.csv"
    if not summary_path.exists():
        raise FileNotFoundError(f"file not found: {summary_path}")
    header, rows = read_table(summary_path)
    col = {name: i for i, name in enumerate(header)}
    needed = ["bus_id", "gfv", "median_ifd", "ifd_iqr", "coi_std", "poi_std"]
    missing = [name for name in needed if name not in col]
    if missing:
        raise CaseError(f"{summary_path} lacks columns {missing}")
    out_rows = [
        [int(row[col["bus_id"]])] + [float(row[col[name]]) for name in needed[1:]]
        for row in rows
    ]
    _emit(args, needed, out_rows)
    return 0


# ---------------------------------------------------------------------------
# Parser / dispatch
# ---------------------------------------------------------------------------


def _add_common(sub, out=True):
    sub.add_argument("--config", help="JSON file with shared run defaults")
    sub.add_argument("--json", action="store_true",
                     help="also write each CSV as a sibling .json document")
    if out:
        sub.add_argument("--out", help="output CSV path (default: stdout)")


def build_parser() -> _Parser:
    parser = _Parser(prog="grid-gfv", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="check case invariants")
    p.add_argument("case")
    _add_common(p, out=False)
    p.set_defaults(func=_cmd_validate)

    p = subs.add_parser("pf", help="solve the AC power flow")
    p.add_argument("case")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_pf)

    p = subs.add_parser("laplacian", help="dump the weighted Laplacian")
    p.add_argument("case")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_laplacian)

    p = subs.add_parser("dmatrix", help="dump the frequency participation matrix")
    p.add_argument("case")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_dmatrix)

    p = subs.add_parser("inertia", help="per-bus nodal inertia")
    p.add_argument("case")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_inertia)

    p = subs.add_parser("gfv", help="per-bus placement metric and Fiedler vector")
    p.add_argument("case")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_gfv)

    p = subs.add_parser("simulate", help="one stochastic-wind trajectory")
    p.add_argument("case")
    p.add_argument("--bus", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--t", type=float, default=200.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--ou-mu", dest="ou_mu", type=float)
    p.add_argument("--ou-alpha", dest="ou_alpha", type=float)
    p.add_argument("--ou-b", dest="ou_b", type=float)
    p.add_argument("--rated-power", dest="rated_power", type=float)
    p.add_argument("--v-rated", dest="v_rated", type=float)
    p.add_argument("--v-ref", dest="v_ref", type=float)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("mc", help="Monte Carlo placement study")
    p.add_argument("case")
    p.add_argument("--buses", required=True, help="comma-separated bus ids")
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--damping", type=float)
    p.add_argument("--ou-mu", dest="ou_mu", type=float)
    p.add_argument("--ou-alpha", dest="ou_alpha", type=float)
    p.add_argument("--ou-b", dest="ou_b", type=float)
    p.add_argument("--rated-power", dest="rated_power", type=float)
    p.add_argument("--v-rated", dest="v_rated", type=float)
    p.add_argument("--v-ref", dest="v_ref", type=float)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--json", action="store_true",
                   help="also write each CSV as a sibling .json document")
    p.add_argument("--config", help="JSON file with shared run defaults")
    p.set_defaults(func=_cmd_mc)

    p = subs.add_parser("report", help="ranking table from an mc output directory")
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=_cmd_report)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        run = RunConfig()
        if getattr(args, "config", None):
            run = _load_run_config(args.config)
        run = _merge(run, args)
        return args.func(args, run)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        name = getattr(exc, "filename", None)
        print(f"file not found: {name or exc}", file=sys.stderr)
        return 1
    except CaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except GridGfvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
