"""Parameter containers and config loading.

All quantities SI unless noted; capacities are in Ah (the 3600 factors that
convert to coulombs appear explicitly wherever they are used). Charge
convention: discharge current is positive. Everything downstream derives
fluxes from that one choice.
"""

from dataclasses import dataclass, field, fields

import yaml

from .constants import FARADAY, GAS_CONSTANT
from .errors import ConfigError
from .ocp import MonotoneOCPTable, load_builtin


def _require_positive(obj, names):
    for n in names:
        v = getattr(obj, n)
        if not (v > 0):
            raise ConfigError(f"{type(obj).__name__}.{n} must be > 0, got {v!r}")


def _require_nonneg(obj, names):
    for n in names:
        v = getattr(obj, n)
        if not (v >= 0):
            raise ConfigError(f"{type(obj).__name__}.{n} must be >= 0, got {v!r}")


@dataclass
class CellParameters:
    """Electrochemical cell description.

    a_s and eps_s are not stored: the active-material volume fraction is
    owned by the capacity state (it shrinks under material loss), so the
    surface area per volume is always computed from the capacity in play.
    """

    A: float                 # electrode area, m^2
    l_pos: float             # electrode thickness, m
    l_neg: float
    r_p_pos: float           # particle radius, m
    r_p_neg: float
    c_smax_pos: float        # max solid concentration, mol/m^3
    c_smax_neg: float
    D_s_pos: float           # solid diffusivity, m^2/s
    D_s_neg: float
    k0_pos: float            # intercalation rate constant, A/m^2 / (mol/m^3)^...
    k0_neg: float
    alpha: float             # charge-transfer symmetry factor
    c_e: float               # electrolyte concentration, mol/m^3
    T: float                 # K
    ocp_pos: MonotoneOCPTable
    ocp_neg: MonotoneOCPTable
    V_max: float
    V_min: float
    C_p_nom: float           # nominal electrode capacities, Ah
    C_n_nom: float
    x100_init: float = 0.84  # fresh negative stoichiometry at top of charge
    n_shells: int = 20       # radial finite volumes per particle
    F: float = FARADAY
    R_gas: float = GAS_CONSTANT

    def __post_init__(self):
        _require_positive(self, [
            "A", "l_pos", "l_neg", "r_p_pos", "r_p_neg",
            "c_smax_pos", "c_smax_neg", "D_s_pos", "D_s_neg",
            "k0_pos", "k0_neg", "c_e", "T", "C_p_nom", "C_n_nom",
        ])
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must be in (0,1), got {self.alpha}")
        if not (self.V_min < self.V_max):
            raise ConfigError("V_min must be below V_max")
        if not (0.0 < self.x100_init < 1.0):
            raise ConfigError("x100_init must be in (0,1)")
        if self.n_shells < 4:
            raise ConfigError("n_shells must be at least 4")
        for name, tab in (("ocp_pos", self.ocp_pos), ("ocp_neg", self.ocp_neg)):
            if not isinstance(tab, MonotoneOCPTable):
                raise ConfigError(f"{name} must be an OCP table")
            if tab.direction != -1:
                raise ConfigError(f"{name} must be strictly decreasing in stoichiometry")

    # --- capacity <-> volume fraction bookkeeping ---

    def eps_s(self, electrode, capacity_Ah):
        """Active-material volume fraction implied by an electrode capacity."""
        l, cmax = self._geom(electrode)
        return 3600.0 * capacity_Ah / (self.A * self.F * l * cmax)

    def a_s(self, electrode, capacity_Ah):
        """Interfacial area per electrode volume, 1/m, at a given capacity."""
        r = self.r_p_pos if electrode == "pos" else self.r_p_neg
        return 3.0 * self.eps_s(electrode, capacity_Ah) / r

    def active_area(self, electrode, capacity_Ah):
        """Total interfacial area A*l*a_s, m^2."""
        l = self.l_pos if electrode == "pos" else self.l_neg
        return self.A * l * self.a_s(electrode, capacity_Ah)

    def _geom(self, electrode):
        if electrode == "pos":
            return self.l_pos, self.c_smax_pos
        if electrode == "neg":
            return self.l_neg, self.c_smax_neg
        raise ConfigError(f"electrode must be 'pos' or 'neg', got {electrode!r}")

    @property
    def a_s0_neg(self):
        """Nominal negative interfacial area per volume, frozen for film and
        lithium-mole bookkeeping so those algebraic identities stay exact."""
        return self.a_s("neg", self.C_n_nom)

    @property
    def film_area_neg(self):
        """Nominal negative interfacial area A*l*a_s0, m^2."""
        return self.A * self.l_neg * self.a_s0_neg


@dataclass
class SEIParameters:
    k_sei: float        # kinetic rate constant, m/s
    alpha_sei: float
    U_sei: float        # equilibrium potential of the side reaction, V
    c_ec0: float        # bulk solvent concentration, mol/m^3
    D_sei: float        # solvent diffusivity through the film, m^2/s
    Omega_sei: float    # molar volume, m^3/mol
    kappa_sei: float    # film ionic conductivity, S/m

    def __post_init__(self):
        _require_positive(self, ["k_sei", "c_ec0", "D_sei", "Omega_sei", "kappa_sei"])
        if not (0.0 < self.alpha_sei < 1.0):
            raise ConfigError(f"alpha_sei must be in (0,1), got {self.alpha_sei}")


@dataclass
class PlatingParameters:
    k_pl: float         # plating rate constant, m/s
    alpha_pl: float
    Omega_pl: float     # molar volume of plated lithium, m^3/mol
    kappa_pl: float     # film conductivity, S/m

    def __post_init__(self):
        # k_pl = 0 is allowed: it switches the mechanism off entirely
        _require_nonneg(self, ["k_pl"])
        _require_positive(self, ["Omega_pl", "kappa_pl"])
        if not (0.0 < self.alpha_pl < 1.0):
            raise ConfigError(f"alpha_pl must be in (0,1), got {self.alpha_pl}")


@dataclass
class LAMParameters:
    beta1_pos: float
    beta2_pos: float
    beta1_neg: float
    beta2_neg: float
    sigma_crit_pos: float   # Pa
    sigma_crit_neg: float
    m_lam: float
    stress_gain_pos: float  # Pa per unit stoichiometry difference
    stress_gain_neg: float

    def __post_init__(self):
        _require_nonneg(self, ["beta1_pos", "beta2_pos", "beta1_neg", "beta2_neg",
                               "stress_gain_pos", "stress_gain_neg"])
        _require_positive(self, ["sigma_crit_pos", "sigma_crit_neg"])
        if self.m_lam < 1.0:
            raise ConfigError(f"m_lam must be >= 1, got {self.m_lam}")


@dataclass
class ExpansionParameters:
    b_sei: float      # dimensionless
    b_pl: float       # 1/m, squares the plating thickness into meters
    b_in_pos: float   # m per unit fractional material loss
    b_in_neg: float

    def __post_init__(self):
        _require_nonneg(self, ["b_sei", "b_pl", "b_in_pos", "b_in_neg"])


@dataclass
class DegradationParameters:
    sei: SEIParameters
    plating: PlatingParameters
    lam: LAMParameters
    expansion: ExpansionParameters


_SCALAR_CELL_KEYS = [f.name for f in fields(CellParameters)
                     if f.name not in ("ocp_pos", "ocp_neg")]


def _load_ocp(spec, name):
    if isinstance(spec, str) and spec.startswith("builtin:"):
        return load_builtin(spec.split(":", 1)[1])
    return MonotoneOCPTable.from_file(spec, name=name)


def load_cell_config(path):
    """Read a flat key-value YAML cell file.

    Returns (CellParameters, DegradationParameters). OCP tables are given
    as file paths or "builtin:graphite" / "builtin:nmc".
    """
    try:
        with open(path) as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"cell config not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"cell config {path} is not valid YAML: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"cell config {path} must be a mapping")

    def grab(cls, keys, **extra):
        vals = {}
        for k in keys:
            if k in raw:
                v = raw[k]
                # YAML readers vary on exponent forms like 1e8; be tolerant
                if isinstance(v, str):
                    try:
                        v = float(v)
                    except ValueError:
                        raise ConfigError(
                            f"cell config {path}: {k} must be a number, "
                            f"got {v!r}")
                vals[k] = v
        vals.update(extra)
        try:
            return cls(**vals)
        except TypeError as e:
            raise ConfigError(f"cell config {path}: {e}")

    if "ocp_pos" not in raw or "ocp_neg" not in raw:
        raise ConfigError(f"cell config {path}: ocp_pos and ocp_neg are required")
    cell = grab(CellParameters, _SCALAR_CELL_KEYS,
                ocp_pos=_load_ocp(raw["ocp_pos"], "ocp_pos"),
                ocp_neg=_load_ocp(raw["ocp_neg"], "ocp_neg"))
    deg = DegradationParameters(
        sei=grab(SEIParameters, [f.name for f in fields(SEIParameters)]),
        plating=grab(PlatingParameters, [f.name for f in fields(PlatingParameters)]),
        lam=grab(LAMParameters, [f.name for f in fields(LAMParameters)]),
        expansion=grab(ExpansionParameters, [f.name for f in fields(ExpansionParameters)]),
    )
    known = set(_SCALAR_CELL_KEYS) | {"ocp_pos", "ocp_neg"}
    for cls in (SEIParameters, PlatingParameters, LAMParameters, ExpansionParameters):
        known |= {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"cell config {path}: unknown keys {sorted(unknown)}")
    return cell, deg


def default_cell():
    """The built-in demo cell (illustrative parameter set, not fitted)."""
    from importlib import resources
    with resources.as_file(resources.files("cellfade.data") / "cell_default.yaml") as p:
        return load_cell_config(p)
