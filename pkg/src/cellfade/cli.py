"""Command-line surface.

Subcommands: simulate, rpt, identify, ambiguity. Outputs are plot-ready
CSV/JSON plus a manifest with content hashes; identical config and seed
reproduce outputs byte for byte.

Exit codes: 0 ok, 2 input error, 3 infeasible (or ambiguous)
identification, 4 numerical failure.
"""

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io as cio
from .cell import Cell
from .errors import (AmbiguousRootsError, CellfadeError, ConfigError,
                     InfeasibleError)
from .identify import (ambiguity_experiment, invert_with_expansion,
                       invert_without_expansion, sample_family)
from .measurement import forward_measure
from .params import load_cell_config
from .protocol import reference_capacity, run_campaign, run_rpt
from .electrochem import pristine_inventory

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_cell(args):
    params, deg = load_cell_config(args.cell)
    if getattr(args, "state", None):
        cell = cio.load_state(args.state, params, deg)
    else:
        cell = Cell(params, deg)
    return params, deg, cell


def cmd_simulate(args):
    t0 = time.monotonic()
    params, deg, cell = _load_cell(args)
    c1 = reference_capacity(params)
    if args.campaign:
        campaign = cio.load_campaign(args.campaign, c1)
        cfg_key, cfg_path = "campaign", args.campaign
    else:
        from .protocol import Campaign
        steps = cio.load_protocol(args.protocol, c1)
        campaign = Campaign(cycle_protocol=steps, max_cycles=args.max_cycles or 1)
        cfg_key, cfg_path = "protocol", args.protocol
    if args.max_cycles:
        campaign.max_cycles = args.max_cycles
    out = _outdir(args.out)
    traj, rul, eol = run_campaign(cell, campaign, dt=args.dt,
                                  dt_rest=args.dt_rest)
    cio.write_trajectory_csv(out / "trajectory.csv", traj)
    cio.write_cycles_json(out / "cycles.json", traj, extra={
        "rul_cycles": rul, "eol_reached": eol,
        "reference_capacity_Ah": c1})
    cio.save_state(out / "state_final.json", cell)
    configs = {"cell": args.cell, cfg_key: cfg_path}
    if getattr(args, "state", None):
        configs["state"] = args.state
    cio.write_manifest(out, configs, args.seed,
                       ["trajectory.csv", "cycles.json", "state_final.json"],
                       time.monotonic() - t0)
    print(f"cycles run: {len(traj.cycles)}  rul: {rul}  eol: {eol}")
    return EXIT_OK


def cmd_rpt(args):
    t0 = time.monotonic()
    params, deg, cell = _load_cell(args)
    out = _outdir(args.out)
    rpt = run_rpt(cell, dt=args.dt)
    cio.write_pseudo_ocv_csv(out / "pseudo_ocv.csv", rpt.pop("pseudo_ocv"))
    cio.write_json(out / "rpt.json", rpt)
    configs = {"cell": args.cell}
    if getattr(args, "state", None):
        configs["state"] = args.state
    cio.write_manifest(out, configs, args.seed,
                       ["pseudo_ocv.csv", "rpt.json"], time.monotonic() - t0)
    print(f"capacity: {rpt['capacity_Ah']:.4f} Ah  "
          f"R_s: {rpt['R_s_ohm'] * 1e3:.3f} mOhm  "
          f"delta_irr: {rpt['delta_irr_m'] * 1e6:.3f} um")
    return EXIT_OK


def cmd_identify(args):
    t0 = time.monotonic()
    params, deg = load_cell_config(args.cell)
    y = cio.load_measurements(args.measurements)
    n_li0 = pristine_inventory(params)
    out = _outdir(args.out)
    budget = not args.no_lli_budget
    doc = {"measurements": y.as_dict()}
    code = EXIT_OK
    try:
        if args.with_expansion:
            if y.delta_irr is None:
                raise ConfigError(
                    "--with-expansion needs delta_irr in the measurements file")
            res = invert_with_expansion(params, deg, y, n_li0, lli_budget=budget)
            doc.update({
                "kind": "unique",
                "solution": res.solution.as_dict(),
                "residual": res.residual,
            })
            print("unique solution: "
                  f"delta_sei {res.solution.delta_sei * 1e9:.3f} nm, "
                  f"delta_pl {res.solution.delta_pl * 1e9:.3f} nm")
        else:
            res = invert_without_expansion(params, deg, y, n_li0,
                                           lli_budget=budget)
            members = sample_family(res, y, args.family_samples)
            doc.update({
                "kind": "family",
                "family_endpoints": res.family_endpoints,
                "family_span": res.family_span,
                "r_film_areal_ohm_m2": res.r_film_areal,
                "residual": res.residual,
                "samples": [
                    {"delta_sei": m.delta_sei, "delta_pl": m.delta_pl,
                     "delta_irr": forward_measure(params, deg, m, n_li0).delta_irr}
                    for m in members],
            })
            (lo, hi) = res.family_endpoints
            print(f"family segment: ({lo[0] * 1e9:.3f} nm SEI, {lo[1] * 1e9:.3f} nm Li)"
                  f" .. ({hi[0] * 1e9:.3f} nm SEI, {hi[1] * 1e9:.3f} nm Li)")
    except AmbiguousRootsError as e:
        doc.update({
            "kind": "ambiguous",
            "candidates": [c.as_dict() for c in e.candidates],
            "error": str(e),
        })
        print(f"ambiguous: {e}", file=sys.stderr)
        code = EXIT_INFEASIBLE
    except InfeasibleError as e:
        doc.update({"kind": "infeasible", "error": str(e)})
        print(f"infeasible: {e}", file=sys.stderr)
        code = EXIT_INFEASIBLE
    cio.write_json(out / "identification.json", doc)
    cio.write_manifest(out, {"cell": args.cell, "measurements": args.measurements},
                       args.seed, ["identification.json"], time.monotonic() - t0)
    return code


def _member_campaign(argstuple):
    """Worker for --jobs > 1: recomputes one member's campaign from files."""
    cell_path, demo_path, idx, dt, dt_rest = argstuple
    params, deg = load_cell_config(cell_path)
    c1 = reference_capacity(params)
    y, n_members, campaign, budget = cio.load_ambiguity_config(demo_path, c1)
    n_li0 = pristine_inventory(params)
    fam = invert_without_expansion(params, deg, y, n_li0, lli_budget=budget)
    member = sample_family(fam, y, n_members)[idx]
    cell = Cell(params, deg, degradation=member, n_li0=n_li0)
    traj, rul, eol = run_campaign(cell, campaign, dt=dt, dt_rest=dt_rest,
                                  keep_series=False)
    return idx, rul, eol, [(c.cycle, c.capacity_Ah) for c in traj.cycles], \
        [(c.cycle, c.degradation) for c in traj.cycles]


def cmd_ambiguity_demo(args):
    t0 = time.monotonic()
    params, deg = load_cell_config(args.cell)
    c1 = reference_capacity(params)
    y, n_members, campaign, budget = cio.load_ambiguity_config(args.demo, c1)
    if campaign is None:
        raise ConfigError(f"demo config {args.demo} needs campaign steps")
    out = _outdir(args.out)
    n_li0 = pristine_inventory(params)

    if args.jobs > 1:
        fam = invert_without_expansion(params, deg, y, n_li0, lli_budget=budget)
        members = sample_family(fam, y, n_members)
        report = {
            "n_members": n_members,
            "family_endpoints": fam.family_endpoints,
            "family_span": fam.family_span,
            "r_film_areal": fam.r_film_areal,
            "members": [],
        }
        from .electrochem import solve_window
        from .measurement import synthesize_pseudo_ocv
        w = solve_window(params, y.C_p, y.C_n, n_li0 * (1.0 - y.LLI))
        report["esoh"] = w.as_dict()
        report["pseudo_ocv"] = synthesize_pseudo_ocv(params, w)
        measures = [forward_measure(params, deg, m, n_li0) for m in members]
        rs = [m.R_s for m in measures]
        report["rs_spread_rel"] = (max(rs) - min(rs)) / max(rs)
        work = [(args.cell, args.demo, i, args.dt, args.dt_rest)
                for i in range(n_members)]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = sorted(pool.map(_member_campaign, work))
        for (i, rul, eol, caps, degs), m, meas in zip(results, members, measures):
            report["members"].append({
                "delta_sei_m": m.delta_sei, "delta_pl_m": m.delta_pl,
                "R_s_ohm": meas.R_s, "delta_irr_m": meas.delta_irr,
                "rul_cycles": rul, "eol_reached": eol,
                "capacity_curve": caps, "degradation_curve": degs,
            })
        ruls = [mb["rul_cycles"] for mb in report["members"]]
        if len(ruls) > 1 and max(ruls) > 0:
            report["rul_spread_rel"] = (max(ruls) - min(ruls)) / max(ruls)
        import numpy as np
        exps = [mb["delta_irr_m"] for mb in report["members"]]
        report["expansion_distinct"] = (
            len(set(np.round(exps, 15))) == len(exps) if len(exps) > 1 else True)
    else:
        report = ambiguity_experiment(params, deg, y, campaign,
                                      n_members=n_members, n_li0=n_li0,
                                      dt=args.dt, dt_rest=args.dt_rest,
                                      lli_budget=budget,
                                      progress=lambda s: print(s, file=sys.stderr))

    curve = report.pop("pseudo_ocv")
    cio.write_pseudo_ocv_csv(out / "pseudo_ocv.csv", curve)
    outputs = ["pseudo_ocv.csv", "ambiguity.json"]
    for i, m in enumerate(report["members"]):
        name = f"member_{i + 1}_capacity.csv"
        with open(out / name, "w") as f:
            f.write("cycle,capacity_Ah,delta_sei_m,delta_pl_m,LLI\n")
            for (cyc, cap), (_, d) in zip(m["capacity_curve"],
                                          m["degradation_curve"]):
                f.write(f"{cyc},{cap!r},{d['delta_sei']!r},"
                        f"{d['delta_pl']!r},{d['LLI']!r}\n")
        outputs.append(name)
    cio.write_json(out / "ambiguity.json", report)
    cio.write_manifest(out, {"cell": args.cell, "demo": args.demo},
                       args.seed, outputs, time.monotonic() - t0)
    ruls = [m["rul_cycles"] for m in report["members"]]
    print(f"member RULs: {ruls}  spread: "
          f"{report.get('rul_spread_rel', 0.0):.3f}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="cellfade",
        description="Battery degradation simulation and health identification")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, state=False):
        p.add_argument("--cell", required=True, help="cell config YAML")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="recorded in the manifest; seeds optional noise")
        p.add_argument("--dt", type=float, default=10.0,
                       help="timestep during active steps, s")
        if state:
            p.add_argument("--state", help="resume from a state JSON")

    p = sub.add_parser("simulate", help="run an aging campaign")
    common(p, state=True)
    p.add_argument("--campaign", help="campaign YAML (steps + EOL settings)")
    p.add_argument("--protocol", help="protocol YAML (single pass steps)")
    p.add_argument("--dt-rest", type=float, default=60.0)
    p.add_argument("--max-cycles", type=int, default=0,
                   help="override the campaign cycle cap")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("rpt", help="reference performance test")
    common(p, state=True)
    p.set_defaults(fn=cmd_rpt)

    p = sub.add_parser("identify", help="invert a measurement vector")
    common(p)
    p.add_argument("--measurements", required=True, help="measurement JSON")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--with-expansion", action="store_true")
    g.add_argument("--without-expansion", action="store_true")
    p.add_argument("--no-lli-budget", action="store_true",
                   help="disable the lithium-budget feasibility filter")
    p.add_argument("--family-samples", type=int, default=3)
    p.set_defaults(fn=cmd_identify)

    p = sub.add_parser("ambiguity", help="same-measurement divergence demo")
    common(p)
    p.add_argument("--demo", required=True, help="demo YAML")
    p.add_argument("--dt-rest", type=float, default=60.0)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel member campaigns")
    p.set_defaults(fn=cmd_ambiguity_demo)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad input already; normalize other exits
        return int(e.code) if e.code else 0
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AmbiguousRootsError as e:
        print(f"ambiguous: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CellfadeError as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
