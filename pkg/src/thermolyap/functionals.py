"""Lyapunov-type functionals for compressible heat-conducting fluids.

``v_meq`` is the rest-state functional built from negative net entropy plus
multiplier-weighted energy and mass constraints; ``v_neq`` is its affine
(Bregman) correction against a spatially varying steady state, and
``feireisl_relative_energy`` is the relative-energy form they both coincide
with.

Both functionals are evaluated through exact-remainder integrals of the
second derivatives of the free energy,

    rho * [psi(th,r) - psi(TH,r) - psi_th(th,r)(th - TH)]
        = rho * int_th^TH (TH - s) c_V(s,r)/s ds,
    g(r) - g(R) - g'(R)(r - R) = int_R^r (r - s) p_rho(TH,s)/s ds
        with g(r) = r psi(TH, r),

computed by Gauss-Legendre quadrature of Dual2-exact integrands.  The
integrands are pointwise nonnegative, so the evaluation is free of the
catastrophic cancellation the raw entropy/energy combination suffers for
small perturbations; decayed states report meaningful values down to the
last digits.  The raw pointwise forms remain available (and are cross-checked)
in ``pointwise_integrand_checks`` and the ideal-gas closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .calculus import Dual2, StateFields, gateaux_first
from .eos import EosSpec, ThermoState, is_calibrated_at, density_from_pressure, \
    stability_check, thermo_quantities
from .errors import ConfigError, DegenerateDirectionError, DomainError, ShapeError
from .fields import Grid1D, integrate

__all__ = [
    "HomogeneousReference",
    "SteadyReference",
    "Multipliers",
    "FunctionalReport",
    "RestStateMonitor",
    "multipliers_closed_form",
    "multipliers_numeric",
    "v_meq",
    "v_meq_core",
    "v_meq_ideal_gas_closed",
    "quadratic_form_second_variation",
    "v_neq",
    "ballistic_free_energy",
    "feireisl_relative_energy",
    "pointwise_integrand_checks",
    "temperature_bracket",
    "density_bracket",
]


@lru_cache(maxsize=8)
def _gl_rule(order: int):
    return np.polynomial.legendre.leggauss(order)


@dataclass(frozen=True)
class HomogeneousReference:
    """Spatially constant rest state (theta_hat, rho_hat)."""

    theta_hat: float
    rho_hat: float

    def __post_init__(self):
        if not (self.theta_hat > 0.0 and math.isfinite(self.theta_hat)):
            raise ConfigError(f"theta_hat must be positive, got {self.theta_hat}")
        if not (self.rho_hat > 0.0 and math.isfinite(self.rho_hat)):
            raise ConfigError(f"rho_hat must be positive, got {self.rho_hat}")

    def state(self) -> ThermoState:
        return ThermoState(self.theta_hat, self.rho_hat)

    def fields(self, n: int) -> StateFields:
        return StateFields.uniform(n, self.rho_hat, 0.0, self.theta_hat)


@dataclass(frozen=True)
class SteadyReference:
    """Spatially varying reference fields (rho_hat(x), v_hat(x), theta_hat(x))."""

    fields: StateFields


@dataclass(frozen=True)
class Multipliers:
    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class FunctionalReport:
    """Total value plus kinetic/thermal/compositional decomposition."""

    total: float
    kinetic: float
    thermal: float
    compositional: float

    @classmethod
    def from_parts(cls, kinetic: float, thermal: float,
                   compositional: float) -> "FunctionalReport":
        return cls(total=kinetic + thermal + compositional, kinetic=kinetic,
                   thermal=thermal, compositional=compositional)

    def as_dict(self) -> dict:
        return {"total": self.total, "kinetic": self.kinetic,
                "thermal": self.thermal, "compositional": self.compositional}


# ---------------------------------------------------------------------------
# Exact-remainder brackets
# ---------------------------------------------------------------------------

def _theta_bracket(eos: EosSpec, theta, rho, theta_hat,
                   order: int = 64) -> np.ndarray:
    """rho*[psi(th,r) + psi_th(th,r)(TH-th) - psi(TH,r)], cancellation-free.

    Equals rho * int_th^TH (TH - s)(-psi_thth(s, r)) ds; the integrand is
    nonnegative for stable states regardless of the ordering of th and TH.
    """
    nodes, weights = _gl_rule(order)
    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    hat = np.broadcast_to(np.asarray(theta_hat, dtype=float), theta.shape)
    mid = 0.5 * (theta + hat)
    half = 0.5 * (hat - theta)
    s = mid[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    th = Dual2.seed(s)
    psi_tt = eos.psi(th, rho[:, None]).d11
    return rho * np.einsum("ij,ij->i", w, (hat[:, None] - s) * (-psi_tt))


def _rho_bracket(eos: EosSpec, rho, rho_hat, theta_hat,
                 order: int = 64) -> np.ndarray:
    """Bregman remainder of g(r) = r*psi(TH, r) between rho_hat and rho.

    Equals int_R^r (r - s)(2 psi_rho(TH,s) + s psi_rhorho(TH,s)) ds, the
    convexity integrand (1/s) dp/drho; nonnegative for stable states.
    """
    nodes, weights = _gl_rule(order)
    rho = np.asarray(rho, dtype=float)
    hat = np.broadcast_to(np.asarray(rho_hat, dtype=float), rho.shape)
    theta = np.broadcast_to(np.asarray(theta_hat, dtype=float), rho.shape)
    mid = 0.5 * (rho + hat)
    half = 0.5 * (rho - hat)
    s = mid[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    rd = Dual2.seed(s)
    j = eos.psi(theta[:, None], rd)
    slope_over_s = 2.0 * j.d1 + s * j.d11
    return np.einsum("ij,ij->i", w, (rho[:, None] - s) * slope_over_s)


class RestStateMonitor:
    """Repeated ``v_meq`` evaluation against a fixed calibrated reference.

    Validates stability and calibration once at construction; per call it
    evaluates the same brackets as ``v_meq`` with a quadrature order sized
    for trajectory monitoring, where states stay within a few e-foldings of
    the reference.
    """

    def __init__(self, eos: EosSpec, ref: HomogeneousReference, grid: Grid1D,
                 order: int = 16):
        _require_stable(eos, ref)
        _require_calibrated(eos, ref)
        self.eos = eos
        self.ref = ref
        self.grid = grid
        self.order = order

    def __call__(self, w: StateFields) -> float:
        kinetic = integrate(self.grid, 0.5 * w.rho * w.v * w.v)
        thermal = integrate(self.grid, _theta_bracket(
            self.eos, w.theta, w.rho, self.ref.theta_hat, self.order))
        comp = integrate(self.grid, _rho_bracket(
            self.eos, w.rho, self.ref.rho_hat, self.ref.theta_hat, self.order))
        return kinetic + thermal + comp


def temperature_bracket(x):
    """x - 1 - ln(x), evaluated stably near x = 1."""
    u = np.asarray(x, dtype=float) - 1.0
    return u - np.log1p(u)


def density_bracket(x):
    """x ln(x) - x + 1, evaluated stably near x = 1."""
    u = np.asarray(x, dtype=float) - 1.0
    return (1.0 + u) * np.log1p(u) - u


# ---------------------------------------------------------------------------
# Rest-state functional and friends
# ---------------------------------------------------------------------------

def _require_calibrated(eos: EosSpec, ref: HomogeneousReference) -> None:
    if not is_calibrated_at(eos, ref.theta_hat, ref.rho_hat):
        raise ConfigError(
            "EOS is not calibrated at the reference state; call calibrate() first")


def _require_stable(eos: EosSpec, ref: HomogeneousReference) -> None:
    if not stability_check(eos, ref.state()).stable:
        raise DomainError("reference state is not thermodynamically stable")


def _check_match(grid: Grid1D, w: StateFields) -> None:
    if w.n != grid.n_cells:
        raise ShapeError(f"state has {w.n} cells, grid has {grid.n_cells}")


def v_meq(eos: EosSpec, ref: HomogeneousReference, grid: Grid1D,
          w: StateFields) -> FunctionalReport:
    """Rest-state Lyapunov-type functional, zero exactly at the rest state.

    Requires an EOS calibrated at the reference (psi(theta_hat, rho_hat) = 0);
    under that normalization the value agrees with the negative-entropy-plus-
    constraints construction and is nonnegative wherever the stability
    conditions hold, vanishing only at (rho_hat, 0, theta_hat).
    """
    _check_match(grid, w)
    w.require_admissible()
    eos.require_in_domain(w.theta, w.rho)
    _require_stable(eos, ref)
    _require_calibrated(eos, ref)
    kinetic = integrate(grid, 0.5 * w.rho * w.v * w.v)
    thermal = integrate(grid, _theta_bracket(eos, w.theta, w.rho, ref.theta_hat))
    comp = integrate(grid, _rho_bracket(eos, w.rho, ref.rho_hat, ref.theta_hat))
    return FunctionalReport.from_parts(kinetic, thermal, comp)


def v_meq_core(eos: EosSpec, ref: HomogeneousReference, grid: Grid1D,
               w: StateFields) -> float:
    """Velocity-free core of ``v_meq`` (thermal + compositional integrals)."""
    report = v_meq(eos, ref, grid, StateFields(w.rho, np.zeros(w.n), w.theta))
    return report.thermal + report.compositional


def v_meq_ideal_gas_closed(cv_ref: float, gamma: float,
                           ref: HomogeneousReference, grid: Grid1D,
                           w: StateFields) -> FunctionalReport:
    """Closed-form rest-state functional for the calorically perfect gas.

    Serves as an independent oracle for ``v_meq``: it never touches the jet
    machinery, only the two scalar bracket functions.
    """
    _check_match(grid, w)
    w.require_admissible()
    kinetic = integrate(grid, 0.5 * w.rho * w.v * w.v)
    thermal = integrate(
        grid,
        w.rho * ref.theta_hat * cv_ref * temperature_bracket(w.theta / ref.theta_hat))
    comp = integrate(
        grid,
        cv_ref * (gamma - 1.0) * ref.theta_hat * ref.rho_hat
        * density_bracket(w.rho / ref.rho_hat))
    return FunctionalReport.from_parts(kinetic, thermal, comp)


def quadratic_form_second_variation(eos: EosSpec, ref: HomogeneousReference,
                                    grid: Grid1D, direction: StateFields) -> float:
    """Second Gateaux derivative of the core functional along a direction.

    Integrates rho_hat (cv_hat / theta_hat) theta_tilde^2
             + (dp/drho)_hat rho_hat^{-1} rho_tilde^2
    over the grid, i.e. d^2/ds^2 of the velocity-free core at the rest state
    (twice the s^2 Taylor coefficient).  The velocity block contributes
    rho_hat |v_tilde|^2 and is left to the caller, matching the core
    functional which carries no kinetic term.
    """
    _check_match(grid, direction)
    q = thermo_quantities(eos, ref.state())
    if not (q.cv > 0.0 and q.dp_drho > 0.0):
        raise DomainError("reference state is not thermodynamically stable")
    integrand = (ref.rho_hat * (q.cv / ref.theta_hat) * direction.theta ** 2
                 + (q.dp_drho / ref.rho_hat) * direction.rho ** 2)
    return integrate(grid, integrand)


# ---------------------------------------------------------------------------
# Steady-state (affine-corrected) functional and relative energy
# ---------------------------------------------------------------------------

def v_neq(eos: EosSpec, steady: SteadyReference, grid: Grid1D,
          w: StateFields) -> FunctionalReport:
    """Affine-corrected functional against a spatially varying steady state.

    Evaluated from total fields; the value is invariant under the free-energy
    gauge shifts psi -> psi + c and psi -> psi - c2*theta (only second
    derivatives of psi enter the evaluation).
    """
    ref = steady.fields
    _check_match(grid, w)
    _check_match(grid, ref)
    w.require_admissible()
    ref.require_admissible("steady reference")
    eos.require_in_domain(w.theta, w.rho)
    eos.require_in_domain(ref.theta, ref.rho, "steady reference")
    v_tilde = w.v - ref.v
    kinetic = integrate(grid, 0.5 * w.rho * v_tilde * v_tilde)
    thermal = integrate(grid, _theta_bracket(eos, w.theta, w.rho, ref.theta))
    comp = integrate(grid, _rho_bracket(eos, w.rho, ref.rho, ref.theta))
    return FunctionalReport.from_parts(kinetic, thermal, comp)


def ballistic_free_energy(eos: EosSpec, rho, theta, big_theta):
    """H_Theta(rho, theta) = rho (e(theta, rho) - Theta eta(theta, rho))."""
    return rho * (eos.internal_energy(theta, rho)
                  - big_theta * eos.entropy(theta, rho))


def feireisl_relative_energy(eos: EosSpec, grid: Grid1D, state: StateFields,
                             ref_fields: StateFields) -> float:
    """Relative energy of ``state`` against (r, Theta, U) reference fields.

    The density slope of the ballistic free energy at the reference is
    obtained by automatic differentiation of H itself, not from its reduced
    pointwise formula, keeping this evaluator independent of ``v_neq``.
    """
    _check_match(grid, state)
    _check_match(grid, ref_fields)
    state.require_admissible()
    ref_fields.require_admissible("reference fields")
    eos.require_in_domain(state.theta, state.rho)
    eos.require_in_domain(ref_fields.theta, ref_fields.rho, "reference fields")
    big_theta = ref_fields.theta
    r = ref_fields.rho
    h_state = ballistic_free_energy(eos, state.rho, state.theta, big_theta)
    h_ref = ballistic_free_energy(eos, r, big_theta, big_theta)
    rd = Dual2.seed(r, big_theta)
    dh_drho = ballistic_free_energy(eos, rd, big_theta, big_theta).d1
    integrand = (0.5 * state.rho * (state.v - ref_fields.v) ** 2
                 + h_state - dh_drho * (state.rho - r) - h_ref)
    return integrate(grid, integrand)


# ---------------------------------------------------------------------------
# Pointwise inequality checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointwiseCheckReport:
    """Worst (most negative) margins of the pointwise integrand inequalities."""

    thermal_min: float
    density_min: float
    total_min: float
    worst_thermal: tuple
    worst_density: tuple
    worst_total: tuple
    n_samples: int


def pointwise_integrand_checks(eos: EosSpec, ref: HomogeneousReference,
                               samples: np.ndarray) -> PointwiseCheckReport:
    """Evaluate the raw (literal) pointwise inequalities at sample states.

    ``samples`` is an (m, 2) array of (theta, rho) pairs inside the stability
    region.  Checked per sample, with a calibrated EOS:

      (i)  rho[psi + psi_th (th_hat - th)] >= rho psi(th_hat, rho)
      (ii) rho psi(th_hat, rho) >= (p_hat/rho_hat)(rho - rho_hat)
      (iii) the full integrand, sum of the two, is nonnegative.

    Violations are reported through the margins, never raised.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ShapeError("samples must be an (m, 2) array of (theta, rho) pairs")
    theta = samples[:, 0]
    rho = samples[:, 1]
    eos.require_in_domain(theta, rho, "samples")
    _require_calibrated(eos, ref)
    th, rd = Dual2.seed_pair(theta, rho)
    j = eos.psi(th, rd)
    psi = j.val
    psi_th = j.d1
    psi_at_hat_temp = eos.psi(np.full_like(rho, ref.theta_hat), rho)
    p_hat = float(eos.pressure(ref.theta_hat, ref.rho_hat))
    slope = p_hat / ref.rho_hat

    thermal = rho * (psi + psi_th * (ref.theta_hat - theta)) - rho * psi_at_hat_temp
    density = rho * psi_at_hat_temp - slope * (rho - ref.rho_hat)
    total = (rho * (psi + psi_th * (ref.theta_hat - theta))
             - slope * (rho - ref.rho_hat))

    def worst(margins):
        i = int(np.argmin(margins))
        return float(margins[i]), (float(theta[i]), float(rho[i]))

    t_min, t_arg = worst(thermal)
    d_min, d_arg = worst(density)
    f_min, f_arg = worst(total)
    return PointwiseCheckReport(
        thermal_min=t_min, density_min=d_min, total_min=f_min,
        worst_thermal=t_arg, worst_density=d_arg, worst_total=f_arg,
        n_samples=samples.shape[0])


# ---------------------------------------------------------------------------
# Lagrange multipliers
# ---------------------------------------------------------------------------

def multipliers_closed_form(eos: EosSpec, ref: HomogeneousReference) -> Multipliers:
    """lambda1 = 1/theta_hat, lambda2 = -p_hat/(theta_hat rho_hat)."""
    _require_stable(eos, ref)
    p_hat = float(eos.pressure(ref.theta_hat, ref.rho_hat))
    return Multipliers(lambda1=1.0 / ref.theta_hat,
                       lambda2=-p_hat / (ref.theta_hat * ref.rho_hat))


def _constrained_functional(eos: EosSpec, ref: HomogeneousReference,
                            grid: Grid1D, lambda1: float, lambda2: float):
    """Net entropy minus multiplier-weighted energy and mass constraints."""
    e_hat = float(eos.internal_energy(ref.theta_hat, ref.rho_hat))
    rho_hat = ref.rho_hat

    def functional(w: StateFields) -> float:
        th, rd = Dual2.seed_pair(w.theta, w.rho)
        j = eos.psi(th, rd)
        eta = -j.d1
        e = j.val - w.theta * j.d1
        s_net = integrate(grid, w.rho * eta)
        e_net = integrate(grid, 0.5 * w.rho * w.v * w.v + w.rho * e
                          - rho_hat * e_hat)
        m_net = integrate(grid, w.rho - rho_hat)
        return s_net - lambda1 * e_net - lambda2 * m_net

    return functional


def multipliers_numeric(eos: EosSpec, ref: HomogeneousReference,
                        grid: Grid1D) -> Multipliers:
    """Recover the multipliers from the constrained-maximization stationarity.

    The first variation of the auxiliary functional at the rest state is
    affine in (lambda1, lambda2).  Probing it with a pure temperature
    direction in the (theta, rho) representation and a pure pressure
    direction in the (theta, p) representation (density recovered through
    ``density_from_pressure``) yields a 2x2 linear system whose solution is
    the multiplier pair.
    """
    _require_stable(eos, ref)
    _require_calibrated(eos, ref)
    n = grid.n_cells
    rest = ref.fields(n)
    p_hat = float(eos.pressure(ref.theta_hat, ref.rho_hat))

    def temperature_probe(lam1: float, lam2: float) -> float:
        functional = _constrained_functional(eos, ref, grid, lam1, lam2)
        direction = StateFields(np.zeros(n), np.zeros(n),
                                np.full(n, ref.theta_hat))
        return gateaux_first(functional, rest, direction)

    def pressure_probe(lam1: float, lam2: float) -> float:
        functional = _constrained_functional(eos, ref, grid, lam1, lam2)

        def in_pressure_rep(s: StateFields) -> float:
            rho = density_from_pressure(eos, s.theta, s.rho)
            return functional(StateFields(rho, s.v, s.theta))

        base = StateFields(np.full(n, p_hat), np.zeros(n),
                           np.full(n, ref.theta_hat))
        direction = StateFields(np.full(n, p_hat), np.zeros(n), np.zeros(n))
        return gateaux_first(in_pressure_rep, base, direction)

    rows = []
    rhs = []
    for probe in (temperature_probe, pressure_probe):
        g00 = probe(0.0, 0.0)
        rows.append([g00 - probe(1.0, 0.0), g00 - probe(0.0, 1.0)])
        rhs.append(g00)
    matrix = np.asarray(rows)
    scale = np.max(np.abs(matrix))
    if scale == 0.0 or abs(np.linalg.det(matrix)) <= 1e-12 * scale * scale:
        raise DegenerateDirectionError(
            "probe directions give a singular multiplier system")
    lam = np.linalg.solve(matrix, np.asarray(rhs))
    return Multipliers(lambda1=float(lam[0]), lambda2=float(lam[1]))
