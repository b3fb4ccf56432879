"""Command-line entry point: ``fracstefan <command> ... --out DIR``.

Exit codes: 0 success, 2 invalid configuration, 3 a runtime invariant failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from ..nonlinearity import TWO_PHASE
from ..oracle import antisym_exact_u, write_oracle_table
from ..selfsimilar import NoCrossing, detect_interfaces, extract_profile
from ..stepper import InvariantViolation, convergence_study, monitor_summary, run
from . import figures, output
from .config import ConfigError, Scenario, build_scenario, load_config

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3
ORACLE_RADIUS = 2.0

log = logging.getLogger("fracstefan")


def _antisym_check(sc: Scenario, series) -> dict:
    graph = sc.run_config.graph
    st = sc.run_config.stencil
    ff = sc.run_config.farfield
    P = -ff.right
    if (graph.kind != TWO_PHASE or st.is_local or sc.datum_type != "riemann"
            or ff.jump != 0.0 or abs(ff.left - (graph.L + P)) > 1e-12 or P <= 0):
        raise ConfigError("analyses", "oracle_antisym needs two_phase Riemann data (L+P | -P) jumping at 0")
    x = series.grid.nodes
    near = np.abs(x) <= ORACLE_RADIUS
    rows = []
    for t_req, t, vals in series.snapshots():
        if t <= 0:
            continue
        exact = antisym_exact_u(P, st.s, x[near], t)
        u = graph(vals)
        err = float(np.max(np.abs(u[near] - exact)))
        k = int(np.argmin(np.abs(x)))
        rows.append({"t": t, "max_error_near_origin": err, "u_at_origin": float(u[k]), "x_origin": float(x[k])})
    return {"P": P, "radius": ORACLE_RADIUS, "table": rows}


def _profile_outputs(sc: Scenario, series, out: Path) -> dict:
    t_ref = sc.raw.get("t_ref", sc.run_config.T)
    p = extract_profile(series, t_ref)
    p.to_csv(out / "profile.csv")
    try:
        rep = detect_interfaces(p)
    except NoCrossing as exc:
        return {"t_ref": t_ref, "interfaces": None, "note": str(exc)}
    rep.to_json(out / "interfaces.json")
    return {"t_ref": t_ref, "interfaces": vars(rep)}


def simulate(sc: Scenario, out: Path, command: str = "simulate") -> dict:
    out.mkdir(parents=True, exist_ok=True)
    series = run(sc.run_config, sc.initial)
    snaps = output.write_snapshots(out, series)
    output.write_monitors(out / "monitors.csv", series)
    output.plot_snapshots(out / "snapshots.svg", series, title=sc.name)
    meta = {
        "config": sc.raw,
        "run": sc.run_config.describe(),
        "initial": sc.initial.meta,
        "dt": series.dt,
        "steps": series.meta["steps"],
        "wall_time": series.meta["wall_time"],
        "monitors": monitor_summary(series),
        "snapshots": snaps,
        "analyses": {},
    }
    for name in sc.analyses:
        if name == "oracle_antisym":
            res = _antisym_check(sc, series)
            write_oracle_table(out / "oracle.csv", res["P"], sc.run_config.stencil.s, sc.run_config.T,
                               series.grid.nodes[np.abs(series.grid.nodes) <= ORACLE_RADIUS])
        elif name in ("profile", "interfaces"):
            res = _profile_outputs(sc, series, out)
        elif name == "positivity":
            omega = sc.raw.get("omega")
            if omega is None:
                raise ConfigError("omega", "the positivity analysis needs an 'omega' interval")
            res = figures.run_positivity_check(series, omega)
        elif name == "sandwich":
            res = figures.run_sandwich_check(sc.initial, sc.run_config.graph, sc.run_config.stencil,
                                             sc.run_config.T, sc.run_config.snapshot_times,
                                             sc.run_config.theta)
        meta["analyses"][name] = res
    output.write_json(out / "metadata.json", meta)
    output.write_manifest(out, command, {"config": sc.raw, "dx": series.grid.dx, "dt": series.dt,
                                         "theta": sc.run_config.theta})
    return meta


def profile(sc: Scenario, out: Path) -> dict:
    if sc.datum_type not in ("riemann", "constant"):
        raise ConfigError("datum/type", "profiles need Riemann data")
    if "profile" not in sc.analyses:
        sc.analyses.append("profile")
    return simulate(sc, out, command="profile")


LADDER_SCHEMA = {
    "type": "object",
    "required": ["base", "levels", "reference_dx", "K"],
    "properties": {
        "base": {"type": "object"},
        "levels": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "reference_dx": {"type": "number", "exclusiveMinimum": 0},
        "K": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    },
}


def converge(path: Path, out: Path) -> dict:
    try:
        ladder = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("", f"cannot load ladder: {exc}") from None
    errs = sorted(jsonschema.Draft202012Validator(LADDER_SCHEMA).iter_errors(ladder), key=lambda e: list(e.path))
    if errs:
        raise ConfigError("/".join(map(str, errs[0].absolute_path)), errs[0].message)
    base = dict(ladder["base"])
    base.setdefault("dx", ladder["reference_dx"])

    def at(dx, where):
        try:
            return build_scenario({**base, "dx": dx})
        except ConfigError as exc:
            raise ConfigError(f"{where}/{exc.path}", str(exc).split(": ", 1)[-1]) from None

    ref_sc = at(ladder["reference_dx"], "reference_dx")
    levels = [at(dx, f"levels/{i}") for i, dx in enumerate(ladder["levels"])]
    out.mkdir(parents=True, exist_ok=True)
    reference = run(ref_sc.run_config, ref_sc.initial)
    runs = [run(sc.run_config, sc.initial) for sc in levels]
    table = convergence_study(runs, reference, ladder["K"])
    table.to_csv(out / "convergence.csv")
    summary = {"dx": table.dx, "errors": table.errors, "ratios": table.ratios,
               "reference_dx": table.reference_dx, "K": list(table.K),
               "dt": [r.dt for r in runs], "reference_dt": reference.dt}
    output.write_json(out / "convergence.json", summary)
    output.write_manifest(out, "converge", {"ladder": ladder, "theta": ref_sc.run_config.theta})
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracstefan", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_out(p, default):
        p.add_argument("--out", type=Path, default=Path(default), help="output directory")
        return p

    with_out(sub.add_parser("simulate", help="run a config file"), "out/simulate").add_argument("config", type=Path)
    with_out(sub.add_parser("profile", help="run a Riemann config and extract its profile"),
             "out/profile").add_argument("config", type=Path)
    with_out(sub.add_parser("converge", help="refinement ladder against a reference run"),
             "out/converge").add_argument("ladder", type=Path)
    p2 = with_out(sub.add_parser("figure2", help="mushy-region table for two-phase Riemann data"), "out/figure2")
    p2.add_argument("--s", type=float, nargs="+", default=[0.6, 0.75])
    p2.add_argument("--p2", type=float, nargs="+", default=[0.05])
    p2.add_argument("--dx", type=float, default=figures.FIG2_DEFAULTS["dx"])
    with_out(sub.add_parser("figure4", help="finite vs infinite speed of the ice phase"), "out/figure4")
    with_out(sub.add_parser("figure5", help="water region that expands, contracts and vanishes"), "out/figure5")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            res = simulate(load_config(args.config), args.out)
            print(f"wrote {len(res['snapshots'])} snapshots to {args.out}")
        elif args.command == "profile":
            res = profile(load_config(args.config), args.out)
            print(json.dumps(res["analyses"]["profile"], indent=2))
        elif args.command == "converge":
            res = converge(args.ladder, args.out)
            for dx, e in zip(res["dx"], res["errors"]):
                print(f"dx={dx:g}  error={e:.6g}")
        elif args.command == "figure2":
            res = figures.run_figure2(args.s, args.p2, out=args.out, dx=args.dx)
            for r in res["rows"]:
                print(f"s={r['s']:g} P2={r['P2']:g} mushy_width={r['mushy_width']:.6g} ({r['status']})")
        elif args.command == "figure4":
            res = figures.run_figure4(out=args.out)
            for name, d in res["data"].items():
                print(f"{name}: {d['classification']} speed of the ice phase")
        elif args.command == "figure5":
            res = figures.run_figure5(out=args.out)
            print(f"water measure {res['initial_water']:g} -> peak {res['peak_water']:g} "
                  f"at t={res['peak_time']:g} -> {res['final_water']:g}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"error: invariant '{exc.invariant}' violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
