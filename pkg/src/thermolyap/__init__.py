"""Lyapunov-type functionals for compressible heat-conducting fluids.

The package builds the rest-state functional of a heat-conducting compressible
fluid from its Helmholtz free energy, identifies the constraint multipliers
both in closed form and numerically, verifies nonnegativity, stationarity,
the second-variation quadratic form, and the equivalence with the relative
energy, and demonstrates monotone decay of the functional along solutions of
a 1D isolated Navier-Stokes-Fourier system.
"""

__version__ = "0.1.0"

from .calculus import Dual2, FdEstimate, StateFields, fd_derivative, \
    gateaux_first, gateaux_second, perturbed
from .eos import EosSpec, StabilityReport, ThermoQuantities, ThermoState, \
    calibrate, covolume_gas_eos, density_from_pressure, identity_residuals, \
    ideal_gas_eos, stability_check, thermo_quantities
from .errors import ConfigError, DegenerateDirectionError, DomainError, \
    EvaluationError, FormatError, InversionError, ShapeError, \
    SimulationAbortedError, ThermolyapError, TimeStepError
from .fields import Grid1D, NetQuantities, integrate, net_quantities, \
    read_snapshot, write_snapshot
from .functionals import FunctionalReport, HomogeneousReference, Multipliers, \
    SteadyReference, ballistic_free_energy, feireisl_relative_energy, \
    multipliers_closed_form, multipliers_numeric, pointwise_integrand_checks, \
    quadratic_form_second_variation, v_meq, v_meq_core, v_meq_ideal_gas_closed, \
    v_neq
from .simulator import InitSpec, SimConfig, SimulationResult, TrajectoryRecord, \
    advance, entropy_production, init_perturbed, matched_rest_state, \
    run_simulation

__all__ = [name for name in dir() if not name.startswith("_")]
