"""Inverting measurements into degradation states.

Without expansion the film pair (delta_sei, delta_pl) is pinned only to an
iso-resistance line segment: infinitely many states share one measurement
vector. Adding irreversible expansion closes the system; substitution gives
a quadratic whose admissible root is the state. Every inversion is checked
by running the forward measurement model on the answer, never trusted from
algebra alone.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .cell import Cell
from .degradation import (DegradationState, plated_lithium_moles,
                          sei_lithium_moles)
from .errors import AmbiguousRootsError, ConfigError, InfeasibleError
from .measurement import (forward_measure, kinetic_resistance,
                          material_loss_expansion, synthesize_pseudo_ocv)
from .electrochem import solve_window
from .protocol import run_campaign

REL_TOL = 1e-9          # slack for float cancellation in feasibility checks
VERIFY_TOL = 1e-7       # forward-model residual accepted for a verdict


@dataclass
class IdentificationResult:
    kind: str                       # "unique" | "family"
    solution: DegradationState = None
    family_endpoints: tuple = None  # ((d_sei, d_pl) at s=0, at s=1)
    family_span: tuple = None       # feasible (s_lo, s_hi) after LLI budget
    r_film_areal: float = 0.0       # ohm*m^2 shared by the whole family
    residual: dict = field(default_factory=dict)


def _operating_point(params, C_p, C_n, LLI, n_li0):
    """Mid-window stoichiometries implied by the measured health triple."""
    w = solve_window(params, C_p, C_n, n_li0 * (1.0 - LLI))
    return 0.5 * (w.x_0 + w.x_100), 0.5 * (w.y_0 + w.y_100)


def _film_target(params, deg_params, y, n_li0):
    """Areal film resistance the measurement demands, ohm*m^2."""
    x_mid, y_mid = _operating_point(params, y.C_p, y.C_n, y.LLI, n_li0)
    h4 = kinetic_resistance(params, y.C_p, y.C_n, x_mid, y_mid)
    gap = y.R_s - h4
    if gap < -REL_TOL * max(y.R_s, h4):
        raise InfeasibleError(
            f"measured R_s {y.R_s:.6g} ohm is below the film-free kinetic "
            f"resistance {h4:.6g} ohm")
    return max(gap, 0.0) * params.film_area_neg, h4


def _point_on_family(deg_params, r_areal, s):
    """s=0: all SEI; s=1: all plated lithium."""
    d_sei = (1.0 - s) * deg_params.sei.kappa_sei * r_areal
    d_pl = s * deg_params.plating.kappa_pl * r_areal
    return d_sei, d_pl


def _budget_interval(params, deg_params, y, r_areal, n_li0):
    """Feasible s range once film lithium must fit inside the LLI budget.

    Both film terms are linear in s, so the constraint clips [0,1] to a
    single subinterval (possibly empty).
    """
    budget = y.LLI * n_li0
    n0 = sei_lithium_moles(params, deg_params.sei,
                           deg_params.sei.kappa_sei * r_areal)
    n1 = plated_lithium_moles(params, deg_params.plating,
                              deg_params.plating.kappa_pl * r_areal)
    slack = REL_TOL * max(n_li0, 1e-30)
    ok0 = n0 <= budget + slack
    ok1 = n1 <= budget + slack
    if ok0 and ok1:
        return 0.0, 1.0
    if n0 == n1:
        if ok0:
            return 0.0, 1.0
        raise InfeasibleError(
            f"film lithium {n0:.6g} mol exceeds the LLI budget {budget:.6g} mol "
            "everywhere on the family")
    s_star = (budget - n0) / (n1 - n0)   # n(s) is linear
    if ok0:
        return 0.0, min(1.0, max(0.0, s_star))
    if ok1:
        return max(0.0, min(1.0, s_star)), 1.0
    raise InfeasibleError(
        f"film lithium exceeds the LLI budget {budget:.6g} mol "
        "everywhere on the family")


def _verify(params, deg_params, state, y, n_li0, check_expansion):
    m = forward_measure(params, deg_params, state, n_li0)
    rs_res = abs(m.R_s - y.R_s) / max(abs(y.R_s), 1e-30)
    out = {"R_s_rel": rs_res}
    worst = rs_res
    if check_expansion and y.delta_irr is not None:
        e_res = abs(m.delta_irr - y.delta_irr) / max(abs(y.delta_irr), 1e-12)
        out["delta_irr_rel"] = e_res
        worst = max(worst, e_res)
    out["ok"] = worst < VERIFY_TOL
    return out


def invert_without_expansion(params, deg_params, y, n_li0, lli_budget=True):
    """The set of states consistent with [C_p, C_n, LLI, R_s].

    Returns a family result: the iso-resistance segment in film space,
    optionally clipped so each candidate's film lithium fits in the LLI
    budget. Degenerate zero-resistance gap collapses to the single point
    (0, 0).
    """
    r_areal, h4 = _film_target(params, deg_params, y, n_li0)
    if lli_budget and r_areal > 0.0:
        s_lo, s_hi = _budget_interval(params, deg_params, y, r_areal, n_li0)
    else:
        s_lo, s_hi = 0.0, 1.0
    p_lo = _point_on_family(deg_params, r_areal, s_lo)
    p_hi = _point_on_family(deg_params, r_areal, s_hi)
    probe = DegradationState(*p_lo, y.C_p, y.C_n, y.LLI)
    res = _verify(params, deg_params, probe, y, n_li0, check_expansion=False)
    res["h4_ohm"] = h4
    return IdentificationResult(
        kind="family", family_endpoints=(p_lo, p_hi),
        family_span=(s_lo, s_hi), r_film_areal=r_areal, residual=res)


def sample_family(result, y, n):
    """n states spanning the feasible family segment, endpoints included.

    Spacing is uniform in sqrt(delta_sei) rather than in thickness:
    diffusion-limited film growth follows delta ~ sqrt(age), so equal
    steps in sqrt(delta_sei) are equal steps in equivalent film age and
    spread the members' forward trajectories more evenly than thickness
    steps would.
    """
    if result.kind != "family":
        raise ConfigError("can only sample a family result")
    if n < 1:
        raise ConfigError("need at least one sample")
    (a_sei, a_pl), (b_sei, b_pl) = result.family_endpoints
    ts = np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.5])
    ra, rb = math.sqrt(a_sei), math.sqrt(b_sei)
    out = []
    for t in ts:
        d_sei = (ra + (rb - ra) * t) ** 2
        frac = (d_sei - a_sei) / (b_sei - a_sei) if b_sei != a_sei else t
        d_pl = a_pl + (b_pl - a_pl) * frac
        out.append(DegradationState(d_sei, d_pl, y.C_p, y.C_n, y.LLI))
    return out


def invert_with_expansion(params, deg_params, y, n_li0, lli_budget=True):
    """Unique state from [C_p, C_n, LLI, R_s, delta_irr], or infeasible.

    Substituting the film-resistance line into the expansion equation
    leaves a quadratic in delta_pl. Two admissible roots are surfaced as
    AmbiguousRootsError (carrying both) unless the LLI budget rejects one.
    """
    if y.delta_irr is None:
        raise ConfigError("measurement vector has no delta_irr; "
                          "use invert_without_expansion")
    ex = deg_params.expansion
    kap_s = deg_params.sei.kappa_sei
    kap_p = deg_params.plating.kappa_pl
    r_areal, h4 = _film_target(params, deg_params, y, n_li0)
    E = y.delta_irr - material_loss_expansion(ex, y.C_p, y.C_n,
                                              params.C_p_nom, params.C_n_nom)
    scale_E = max(abs(y.delta_irr), ex.b_sei * kap_s * r_areal, 1e-15)
    if E < -REL_TOL * scale_E:
        raise InfeasibleError(
            f"expansion {y.delta_irr:.6g} m is below the material-loss floor; "
            f"film excess {E:.6g} m cannot be negative")
    E = max(E, 0.0)

    d_pl_max = kap_p * r_areal
    # delta_sei = kap_s*(r_areal - delta_pl/kap_p) substituted into
    # b_sei*delta_sei + b_pl*delta_pl^2 = E
    a = ex.b_pl
    b = -ex.b_sei * kap_s / kap_p
    c = ex.b_sei * kap_s * r_areal - E
    roots = []
    if a == 0.0:
        if b != 0.0:
            roots = [-c / b]
        elif abs(c) <= REL_TOL * scale_E:
            roots = [0.0]
    else:
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            # b <= 0 here, so q is the numerically safe large root pair
            q = -(b - math.sqrt(disc)) / 2.0
            roots = [q / a]
            if q != 0.0:
                roots.append(c / q)

    slack = REL_TOL * max(d_pl_max, 1e-15) + 1e-18
    cands = []
    for r in roots:
        if -slack <= r <= d_pl_max + slack:
            d_pl = min(max(r, 0.0), d_pl_max)
            d_sei = kap_s * (r_areal - d_pl / kap_p)
            st = DegradationState(d_sei, max(d_pl, 0.0), y.C_p, y.C_n, y.LLI)
            if not any(abs(st.delta_pl - c0.delta_pl) <= slack for c0 in cands):
                cands.append(st)

    if lli_budget and len(cands) > 1:
        budget = y.LLI * n_li0 + REL_TOL * n_li0
        kept = [st for st in cands
                if sei_lithium_moles(params, deg_params.sei, st.delta_sei)
                + plated_lithium_moles(params, deg_params.plating, st.delta_pl)
                <= budget]
        if kept:
            cands = kept

    if not cands:
        best = min((abs(a * r * r + b * r + c) for r in roots), default=None)
        raise InfeasibleError(
            "no admissible film pair reproduces the expansion "
            f"(residual {best if best is not None else 'n/a'})")
    if len(cands) > 1:
        raise AmbiguousRootsError(
            "two admissible film pairs reproduce the measurements", cands)

    sol = cands[0]
    res = _verify(params, deg_params, sol, y, n_li0, check_expansion=True)
    res["h4_ohm"] = h4
    return IdentificationResult(kind="unique", solution=sol,
                                r_film_areal=r_areal, residual=res)


def predict_rul(params, deg_params, state, campaign, n_li0=None, dt=10.0,
                dt_rest=60.0):
    """Cycles a cell starting at this state survives before EOL."""
    cell = Cell(params, deg_params, degradation=state.copy(), n_li0=n_li0)
    _, rul, _ = run_campaign(cell, campaign, dt=dt, dt_rest=dt_rest,
                             keep_series=False)
    return rul


def ambiguity_experiment(params, deg_params, y, campaign, n_members=3,
                         n_li0=None, dt=10.0, dt_rest=60.0, lli_budget=True,
                         progress=None):
    """The headline demonstration: states that measure identically but
    age apart.

    Builds n members on the family of a measurement vector, checks the
    premise (same pseudo-OCV curve, same R_s, distinct expansion), then
    runs each to end of life. Returns a report dict.
    """
    if n_members < 1:
        raise ConfigError("n_members must be >= 1")
    if n_li0 is None:
        from .electrochem import pristine_inventory
        n_li0 = pristine_inventory(params)
    fam = invert_without_expansion(params, deg_params, y, n_li0,
                                   lli_budget=lli_budget)
    members = sample_family(fam, y, n_members)

    w = solve_window(params, y.C_p, y.C_n, n_li0 * (1.0 - y.LLI))
    curve = synthesize_pseudo_ocv(params, w)
    measures = [forward_measure(params, deg_params, m, n_li0) for m in members]
    rs_vals = [m.R_s for m in measures]
    rs_spread = (max(rs_vals) - min(rs_vals)) / max(rs_vals)

    report = {
        "n_members": n_members,
        "family_endpoints": fam.family_endpoints,
        "family_span": fam.family_span,
        "r_film_areal": fam.r_film_areal,
        "rs_spread_rel": rs_spread,
        "esoh": w.as_dict(),
        "pseudo_ocv": curve,
        "members": [],
    }
    for i, (m, meas) in enumerate(zip(members, measures)):
        if progress is not None:
            progress(f"member {i + 1}/{n_members}")
        traj, rul, eol = run_campaign(
            Cell(params, deg_params, degradation=m.copy(), n_li0=n_li0),
            campaign, dt=dt, dt_rest=dt_rest, keep_series=False)
        report["members"].append({
            "delta_sei_m": m.delta_sei,
            "delta_pl_m": m.delta_pl,
            "R_s_ohm": meas.R_s,
            "delta_irr_m": meas.delta_irr,
            "rul_cycles": rul,
            "eol_reached": eol,
            "capacity_curve": [(c.cycle, c.capacity_Ah) for c in traj.cycles],
            "degradation_curve": [(c.cycle, c.degradation) for c in traj.cycles],
        })
    ruls = [mb["rul_cycles"] for mb in report["members"]]
    if len(ruls) > 1 and max(ruls) > 0:
        report["rul_spread_rel"] = (max(ruls) - min(ruls)) / max(ruls)
    exps = [mb["delta_irr_m"] for mb in report["members"]]
    report["expansion_distinct"] = (
        len(set(np.round(exps, 15))) == len(exps) if len(exps) > 1 else True)
    return report
