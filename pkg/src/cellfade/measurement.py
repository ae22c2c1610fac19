"""The three health readouts: eSOH from pseudo-OCV, instantaneous
resistance, and irreversible expansion.

All functions here are pure; the simulated-pulse and RPT routes that
exercise them live in protocol.py so the two paths to each quantity stay
independent of one another.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import electrochem as ec
from .electrochem import ESOHRecord, solve_window
from .errors import ConfigError, EstimationFailedError, KineticsSingularError


@dataclass
class MeasurementVector:
    """What a test bench reports about an aged cell."""
    C_p: float
    C_n: float
    LLI: float
    R_s: float            # ohm, cell level
    delta_irr: float = None   # m; None in the under-determined case

    def __post_init__(self):
        if not self.R_s > 0.0:
            raise ConfigError(f"R_s must be positive, got {self.R_s}")
        if self.delta_irr is not None and self.delta_irr < 0.0:
            raise ConfigError("delta_irr cannot be negative")

    def as_dict(self):
        d = {"C_p": self.C_p, "C_n": self.C_n, "LLI": self.LLI, "R_s": self.R_s}
        if self.delta_irr is not None:
            d["delta_irr"] = self.delta_irr
        return d


# --- resistance ---

def r_film(params, deg_params, state):
    """Film resistance from the two layer thicknesses.

    Returns (area_specific ohm*m^2, cell ohm). The cell value spreads the
    areal film over the pristine negative interfacial area.
    """
    areal = (state.delta_sei / deg_params.sei.kappa_sei
             + state.delta_pl / deg_params.plating.kappa_pl)
    return areal, areal / params.film_area_neg


def kinetic_resistance(params, C_p, C_n, x, y, I=0.0):
    """Film-independent charge-transfer resistance, ohm.

    Exact derivative of the asinh overpotentials at the operating point,
    with surface concentrations approximated by the averages. Decreases
    with |I| as the kinetics leave the linear regime.
    """
    out = 0.0
    for electrode, cap, s in (("pos", C_p, y), ("neg", C_n, x)):
        cmax = params.c_smax_pos if electrode == "pos" else params.c_smax_neg
        i0 = ec.exchange_current_density(params, electrode, s * cmax)
        if i0 == 0.0:
            raise KineticsSingularError(
                f"{electrode} stoichiometry {s:g} gives zero exchange current")
        g = 1.0 / (2.0 * i0 * params.active_area(electrode, cap))
        out += g / math.sqrt((I * g) ** 2 + 1.0)
    return 2.0 * params.R_gas * params.T / params.F * out


def instantaneous_resistance(params, deg_params, state, x, y, I=0.0):
    """Cell resistance: film plus charge-transfer parts, ohm."""
    return (r_film(params, deg_params, state)[1]
            + kinetic_resistance(params, state.C_p, state.C_n, x, y, I))


# --- expansion ---

def material_loss_expansion(exp_params, C_p, C_n, C_p_nom, C_n_nom):
    """Expansion due to lost active material alone, m."""
    lam_pos = 1.0 - C_p / C_p_nom
    lam_neg = 1.0 - C_n / C_n_nom
    return exp_params.b_in_pos * lam_pos + exp_params.b_in_neg * lam_neg


def irreversible_expansion(exp_params, state, params):
    """Permanent thickness growth, m: SEI, plated lithium (quadratic),
    and material-loss contributions."""
    return (exp_params.b_sei * state.delta_sei
            + exp_params.b_pl * state.delta_pl ** 2
            + material_loss_expansion(exp_params, state.C_p, state.C_n,
                                      params.C_p_nom, params.C_n_nom))


# --- the forward measurement map used by identification ---

def forward_measure(params, deg_params, state, n_li0):
    """Noiseless measurement vector of a degradation state.

    R_s is taken in the zero-current limit at the middle of the state's
    own stoichiometric window; inversion reconstructs the same operating
    point from (C_p, C_n, LLI), so the map is exactly invertible.
    """
    n_li = n_li0 * (1.0 - state.LLI)
    w = solve_window(params, state.C_p, state.C_n, n_li)
    x_mid = 0.5 * (w.x_0 + w.x_100)
    y_mid = 0.5 * (w.y_0 + w.y_100)
    return MeasurementVector(
        C_p=state.C_p, C_n=state.C_n, LLI=state.LLI,
        R_s=instantaneous_resistance(params, deg_params, state, x_mid, y_mid),
        delta_irr=irreversible_expansion(deg_params.expansion, state, params))


# --- eSOH extraction ---

@dataclass
class PseudoOCV:
    """Low-rate voltage curve. capacity_Ah counts charge removed since
    the top of the window: 0 at V_max, C at V_min."""
    capacity_Ah: np.ndarray
    voltage: np.ndarray


def synthesize_pseudo_ocv(params, esoh, n_points=241, noise_mv=0.0, rng=None):
    """Exact OCV-difference curve for a known window (test/demo helper)."""
    q = np.linspace(0.0, esoh.C, n_points)
    x = esoh.x_0 + (esoh.C - q) / esoh.C_n
    y = esoh.y_0 - (esoh.C - q) / esoh.C_p
    v = params.ocp_pos(y) - params.ocp_neg(x)
    if noise_mv:
        v = v + (rng or np.random.default_rng()).normal(
            0.0, noise_mv * 1e-3, size=v.shape)
    return PseudoOCV(q, v)


def extract_esoh(curve, params, capacity=None, endpoint_weight=10.0):
    """Fit (C_p, C_n, x_0, y_0) to a pseudo-OCV curve.

    Least squares over the whole curve shape plus the two voltage-limit
    constraints; the endpoint equations alone leave the problem
    under-determined. Initial guess scales the nominal electrode pair by
    the measured capacity ratio.
    """
    q = np.asarray(curve.capacity_Ah, dtype=float)
    v = np.asarray(curve.voltage, dtype=float)
    if q.ndim != 1 or q.shape != v.shape or len(q) < 8:
        raise ConfigError("pseudo-OCV curve needs matching 1-D columns, >= 8 rows")
    C_meas = capacity if capacity is not None else float(q[-1] - q[0])
    if not C_meas > 0.0:
        raise ConfigError("curve spans no capacity")
    # a sweep under load stops short of the quasi-static window edges
    # (about 0.1 V at end of life); reject only curves missing a knee
    span = 0.15
    if v.min() > params.V_min + span or v.max() < params.V_max - span:
        raise ConfigError(
            f"curve [{v.min():.3f}, {v.max():.3f}] V does not span the "
            f"window [{params.V_min}, {params.V_max}] V")

    tp, tn = params.ocp_pos, params.ocp_neg
    fresh = solve_window(params, params.C_p_nom, params.C_n_nom,
                         ec.pristine_inventory(params))
    ratio = min(max(C_meas / fresh.C, 0.3), 1.5)
    theta0 = np.array([params.C_p_nom * ratio, params.C_n_nom * ratio,
                       fresh.x_0, fresh.y_0])
    lo = np.array([0.5 * C_meas, 0.5 * C_meas, tn.s_min, 0.4])
    hi = np.array([8.0 * C_meas, 8.0 * C_meas, 0.4, tp.s_max])
    theta0 = np.clip(theta0, lo, hi)

    def residuals(theta):
        C_p, C_n, x_0, y_0 = theta
        x = x_0 + (C_meas - q) / C_n
        y = y_0 - (C_meas - q) / C_p
        # keep trial evaluations on-table; penalize the excursion instead
        x_c = np.clip(x, tn.s_min, tn.s_max)
        y_c = np.clip(y, tp.s_min, tp.s_max)
        pen_x = np.abs(x - x_c).max()
        pen_y = np.abs(y - y_c).max()
        vm = tp(y_c) - tn(x_c)
        x100 = np.clip(x_0 + C_meas / C_n, tn.s_min, tn.s_max)
        y100 = np.clip(y_0 - C_meas / C_p, tp.s_min, tp.s_max)
        ends = [tp(np.asarray(y_0)) - tn(np.asarray(x_0)) - params.V_min,
                tp(np.asarray(y100)) - tn(np.asarray(x100)) - params.V_max]
        return np.concatenate([
            vm - v,
            endpoint_weight * np.asarray(ends, dtype=float),
            [1e3 * pen_x, 1e3 * pen_y],
        ])

    res = least_squares(residuals, theta0, bounds=(lo, hi), method="trf",
                        x_scale="jac", ftol=1e-14, xtol=1e-14, gtol=1e-14)
    rms = math.sqrt(float(np.mean(res.fun[:len(q)] ** 2)))
    if not res.success or rms > 0.05:
        raise EstimationFailedError(
            f"eSOH fit did not converge (status {res.status}, "
            f"rms {rms * 1e3:.2f} mV)")
    C_p, C_n, x_0, y_0 = (float(t) for t in res.x)
    rec = ESOHRecord(
        C=C_meas, C_p=C_p, C_n=C_n,
        x_0=x_0, x_100=x_0 + C_meas / C_n,
        y_0=y_0, y_100=y_0 - C_meas / C_p,
        n_li=3600.0 / params.F * (x_0 * C_n + y_0 * C_p),
    )
    rec.fit_rms_v = rms
    return rec
