"""Single-particle battery aging model with health identification.

Physics: radial diffusion in one representative particle per electrode,
Butler-Volmer kinetics, SEI growth, lithium plating, stress-driven
active-material loss. On top of that: pseudo-OCV health estimation,
resistance/expansion measurement models, and the inversion machinery
that maps field-observable aggregates back to internal degradation
states (unique, one-parameter family, or ambiguous).
"""

__version__ = "0.1.0"

from .errors import (AmbiguousRootsError, CellDeadError, CellfadeError,
                     ConfigError, EstimationFailedError, InfeasibleError,
                     KineticsSingularError, ProtocolStallError,
                     SaturationError)
from .ocp import MonotoneOCPTable, load_builtin
from .params import (CellParameters, DegradationParameters, ExpansionParameters,
                     LAMParameters, PlatingParameters, SEIParameters,
                     default_cell, load_cell_config)
from .particle import ParticlePair, ParticleState, SphereFV, step_particle_diffusion
from .electrochem import (ESOHRecord, exchange_current_density,
                          intercalation_overpotential, ocp,
                          pristine_inventory, solve_window, terminal_voltage)
from .degradation import (DegradationState, hydrostatic_stress,
                          lam_cycle_update, lli_rate, plated_lithium_moles,
                          plating_flux, plating_growth_rate, sei_flux,
                          sei_growth_rate, sei_lithium_moles,
                          sei_overpotential, step_degradation)
from .cell import Cell
from .measurement import (MeasurementVector, extract_esoh, forward_measure,
                          instantaneous_resistance, irreversible_expansion,
                          r_film, synthesize_pseudo_ocv)
from .protocol import (Campaign, ProtocolStep, Termination, parse_current,
                       reference_capacity, run_campaign, run_protocol,
                       run_rpt, run_step)
from .identify import (ambiguity_experiment, invert_with_expansion,
                       invert_without_expansion, predict_rul, sample_family)

__all__ = [
    "__version__",
    "AmbiguousRootsError", "CellDeadError", "CellfadeError", "ConfigError",
    "EstimationFailedError", "InfeasibleError", "KineticsSingularError",
    "ProtocolStallError", "SaturationError",
    "MonotoneOCPTable", "load_builtin",
    "CellParameters", "DegradationParameters", "ExpansionParameters",
    "LAMParameters", "PlatingParameters", "SEIParameters",
    "default_cell", "load_cell_config",
    "ParticlePair", "ParticleState", "SphereFV", "step_particle_diffusion",
    "ESOHRecord", "exchange_current_density", "intercalation_overpotential",
    "ocp", "pristine_inventory", "solve_window", "terminal_voltage",
    "DegradationState", "hydrostatic_stress", "lam_cycle_update", "lli_rate",
    "plated_lithium_moles", "plating_flux", "plating_growth_rate",
    "sei_flux", "sei_growth_rate", "sei_lithium_moles", "sei_overpotential",
    "step_degradation",
    "Cell",
    "MeasurementVector", "extract_esoh", "forward_measure",
    "instantaneous_resistance", "irreversible_expansion", "r_film",
    "synthesize_pseudo_ocv",
    "Campaign", "ProtocolStep", "Termination", "parse_current",
    "reference_capacity", "run_campaign", "run_protocol", "run_rpt",
    "run_step",
    "ambiguity_experiment", "invert_with_expansion",
    "invert_without_expansion", "predict_rul", "sample_family",
]
