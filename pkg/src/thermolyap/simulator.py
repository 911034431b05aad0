"""1D compressible Navier-Stokes-Fourier solver in an isolated box.

Conservative finite-volume discretization of the mass/momentum/total-energy
balances with Newtonian stress (nu_eff = 4 mu / 3, zero bulk viscosity) and
Fourier heat flux, closed by solid adiabatic walls (v = 0, dtheta/dx = 0).
Wall fluxes of mass and energy vanish identically, so the discrete net mass
and net total energy are preserved to roundoff.  Time integration is the
classical four-stage Runge-Kutta method with a fixed step chosen once from
the initial state.

Along each trajectory the solver records the rest-state functional evaluated
against the mass/energy-matched background together with the entropy
production integral, exposing the decay law  dV/dt = -theta_hat * int(xi).
The decay residual compares the centered record-to-record slope of V with
the time average of theta_hat * int(xi) over the same window (accumulated at
step resolution); comparing the slope against the instantaneous value
instead would be ill-conditioned at the isolated instants where the
dissipation passes through a near-zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import Dual2, StateFields
from .eos import EosSpec, calibrate
from .errors import ConfigError, InversionError, ShapeError, \
    SimulationAbortedError, TimeStepError
from .fields import Grid1D, integrate, net_quantities
from .functionals import HomogeneousReference, RestStateMonitor

__all__ = [
    "InitSpec",
    "SimConfig",
    "TrajectoryRecord",
    "SimulationResult",
    "init_perturbed",
    "entropy_production",
    "advance",
    "run_simulation",
    "matched_rest_state",
    "diffusive_time_scale",
    "TIMESERIES_HEADER",
]

TIMESERIES_HEADER = "t,mass,energy,entropy,v_meq,xi_integral,decay_residual"

# Record-to-record slopes smaller than this fraction of V per window are
# treated as unresolvable when normalizing the decay residual.
_SLOPE_RESOLUTION = 1e-5


@dataclass(frozen=True)
class InitSpec:
    """Single-mode cosine/sine perturbation of the rest state."""

    k: int = 1
    a_rho: float = 0.0
    a_v: float = 0.0
    a_theta: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"mode number must be >= 1, got {self.k}")


@dataclass(frozen=True)
class SimConfig:
    grid: Grid1D
    eos: EosSpec
    ref: HomogeneousReference
    mu: float = 0.0
    kappa: float = 0.0
    cfl: float = 0.9
    t_end: float = 1.0
    output_every: int = 1
    init: InitSpec = field(default_factory=InitSpec)

    def __post_init__(self):
        if self.mu < 0.0 or self.kappa < 0.0:
            raise ConfigError("viscosity and conductivity must be nonnegative")
        if self.mu + self.kappa <= 0.0:
            raise ConfigError("need some dissipation: mu + kappa > 0")
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end <= 0.0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.output_every < 1:
            raise ConfigError(f"output_every must be >= 1, got {self.output_every}")

    @property
    def nu_eff(self) -> float:
        return 4.0 * self.mu / 3.0


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    mass: float
    total_energy: float
    net_entropy: float
    v_meq: float
    entropy_production_integral: float
    decay_residual: float


@dataclass(frozen=True)
class SimulationResult:
    records: list
    final_state: StateFields
    rest: HomogeneousReference
    dt: float


def init_perturbed(config: SimConfig) -> StateFields:
    """Perturbed initial state; the density mode is mass-neutral by symmetry."""
    grid = config.grid
    ref = config.ref
    spec = config.init
    phase = 2.0 * math.pi * spec.k * grid.centers() / grid.length
    w = StateFields(
        ref.rho_hat * (1.0 + spec.a_rho * np.cos(phase)),
        spec.a_v * np.sin(phase),
        ref.theta_hat * (1.0 + spec.a_theta * np.cos(phase)),
    )
    if not w.admissible() or not config.eos.in_domain(w.theta, w.rho):
        raise ConfigError("perturbation amplitudes leave the admissible region")
    return w


def matched_rest_state(eos: EosSpec, grid: Grid1D,
                       w: StateFields) -> HomogeneousReference:
    """Rest state with the same net mass and net total energy as ``w``.

    rho_hat = M/L; theta_hat solves e(theta, rho_hat) = E/M by Newton
    iteration (de/dtheta = c_V > 0).  The result is independent of the
    free-energy calibration since both sides shift together.
    """
    net = net_quantities(grid, w, eos)
    rho_hat = net.mass / grid.length
    e_target = net.total_energy / net.mass
    theta = float(np.mean(w.theta))
    for _ in range(60):
        psi_v, psi_t, psi_tt = eos.heat_jet(theta, rho_hat)
        e_val = psi_v - theta * psi_t
        resid = e_val - e_target
        if abs(resid) <= 1e-13 * max(1.0, abs(e_target)):
            return HomogeneousReference(theta_hat=theta, rho_hat=rho_hat)
        cv = -theta * psi_tt
        theta = theta - resid / cv
        if theta <= 0.0:
            raise InversionError("temperature left the domain while matching energy")
    raise InversionError("energy matching failed to converge")


# ---------------------------------------------------------------------------
# Entropy production
# ---------------------------------------------------------------------------

def _xi_cells(v: np.ndarray, theta: np.ndarray, grid: Grid1D,
              config: SimConfig) -> np.ndarray:
    """Per-cell xi from velocity/temperature arrays.

    Face gradients are centered; the wall faces reuse the adjacent interior
    face gradient so the diagnostic reflects the local fields rather than
    the wall constraint.  Face values of xi are averaged back to centers.
    """
    dx = grid.dx
    n = grid.n_cells
    dv = np.empty(n + 1)
    dth = np.empty(n + 1)
    dv[1:-1] = np.diff(v) / dx
    dth[1:-1] = np.diff(theta) / dx
    dv[0], dv[-1] = dv[1], dv[-2]
    dth[0], dth[-1] = dth[1], dth[-2]
    theta_face = np.empty(n + 1)
    theta_face[1:-1] = 0.5 * (theta[:-1] + theta[1:])
    theta_face[0], theta_face[-1] = theta[0], theta[-1]
    xi_face = (config.nu_eff * dv * dv / theta_face
               + config.kappa * dth * dth / (theta_face * theta_face))
    return 0.5 * (xi_face[:-1] + xi_face[1:])


def entropy_production(w: StateFields, grid: Grid1D,
                       config: SimConfig) -> np.ndarray:
    """Per-cell entropy production of the constitutive closure.

    xi = nu_eff (dv/dx)^2 / theta + kappa (dtheta/dx)^2 / theta^2 >= 0.
    """
    w.require_admissible()
    if w.n != grid.n_cells:
        raise ShapeError(f"state has {w.n} cells, grid has {grid.n_cells}")
    return _xi_cells(w.v, w.theta, grid, config)


# ---------------------------------------------------------------------------
# Conservative update
# ---------------------------------------------------------------------------

def _temperature_from_energy(eos: EosSpec, e_spec: np.ndarray, rho: np.ndarray,
                             guess: np.ndarray) -> tuple:
    """Vectorized recovery of (theta, p) from specific internal energy.

    One Newton step from the stage guess plus a first-order pressure update
    from the same jet; both are exact for gases with theta-linear energy and
    pressure (the two shipped gases), and the leftover is quadratic in the
    guess error otherwise.  Guesses further than 0.1% fall back to a full
    Newton loop.
    """
    if np.any(guess <= 0.0):
        raise TimeStepError("non-positive temperature during recovery")
    th, rd = Dual2.seed_pair(guess, rho)
    j = eos.psi(th, rd)
    cv = -guess * j.d11
    if np.any(cv <= 0.0):
        raise TimeStepError("non-positive heat capacity during recovery")
    delta = ((j.val - guess * j.d1) - e_spec) / cv
    theta = guess - delta
    if np.any(theta <= 0.0):
        raise TimeStepError("non-positive temperature during recovery")
    if np.max(np.abs(delta) / theta) > 1e-3:
        return _newton_temperature(eos, e_spec, rho, theta)
    p = rho * rho * (j.d2 - delta * j.d12)
    return theta, p


def _newton_temperature(eos: EosSpec, e_spec, rho, theta) -> tuple:
    """Full Newton fallback for far initial guesses."""
    for _ in range(30):
        psi_v, psi_t, psi_tt = eos.heat_jet(theta, rho)
        resid = (psi_v - theta * psi_t) - e_spec
        if np.all(np.abs(resid) <= 1e-10 * np.maximum(1.0, np.abs(e_spec))):
            return theta, eos.pressure(theta, rho)
        cv = -theta * psi_tt
        theta = theta - resid / cv
        if np.any(theta <= 0.0):
            raise TimeStepError("non-positive temperature during recovery")
    raise TimeStepError("temperature recovery diverged")


def _stage_state(u: np.ndarray, eos: EosSpec, guess: np.ndarray) -> tuple:
    """(v, theta, p) of a conservative stage state u = (rho, rho v, E)."""
    rho, mom, etot = u
    if np.any(rho <= 0.0):
        raise TimeStepError("non-positive density")
    v = mom / rho
    e_spec = etot / rho - 0.5 * v * v
    theta, p = _temperature_from_energy(eos, e_spec, rho, guess)
    if not eos.in_domain(theta, rho):
        raise TimeStepError("state left the EOS domain")
    return v, theta, p


def _flux_divergence(u: np.ndarray, v: np.ndarray, theta: np.ndarray,
                     p: np.ndarray, grid: Grid1D,
                     config: SimConfig) -> np.ndarray:
    """Conservative flux divergence with solid adiabatic walls.

    Mirror ghosts (odd velocity, even scalars) make the central-average mass
    and energy fluxes vanish identically at the walls; the wall momentum
    flux carries the pressure force.
    """
    dx = grid.dx
    etot = u[2]
    rho_e = np.concatenate(([u[0][0]], u[0], [u[0][-1]]))
    v_e = np.concatenate(([-v[0]], v, [-v[-1]]))
    p_e = np.concatenate(([p[0]], p, [p[-1]]))
    etot_e = np.concatenate(([etot[0]], etot, [etot[-1]]))

    f_mass = rho_e * v_e
    f_mom = f_mass * v_e + p_e
    f_energy = v_e * (etot_e + p_e)
    face_mass = 0.5 * (f_mass[:-1] + f_mass[1:])
    face_mom = 0.5 * (f_mom[:-1] + f_mom[1:])
    face_energy = 0.5 * (f_energy[:-1] + f_energy[1:])

    dv_face = np.diff(v_e) / dx
    th_e = np.concatenate(([theta[0]], theta, [theta[-1]]))
    dth_face = np.diff(th_e) / dx  # zero at the walls by the even mirror
    tau = config.nu_eff * dv_face
    v_face = 0.5 * (v_e[:-1] + v_e[1:])
    face_mom -= tau
    face_energy += -tau * v_face - config.kappa * dth_face

    out = np.empty_like(u)
    out[0] = -np.diff(face_mass) / dx
    out[1] = -np.diff(face_mom) / dx
    out[2] = -np.diff(face_energy) / dx
    return out


def _rhs(u: np.ndarray, grid: Grid1D, config: SimConfig,
         guess: np.ndarray) -> tuple:
    v, theta, p = _stage_state(u, config.eos, guess)
    return _flux_divergence(u, v, theta, p, grid, config), theta


def _rk4(u: np.ndarray, grid: Grid1D, config: SimConfig, dt: float,
         k1: np.ndarray, th1: np.ndarray) -> tuple:
    """Complete an RK4 step given the precomputed first stage."""
    k2, th2 = _rhs(u + 0.5 * dt * k1, grid, config, th1)
    k3, th3 = _rhs(u + 0.5 * dt * k2, grid, config, th2)
    k4, th4 = _rhs(u + dt * k3, grid, config, th3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), th4


def _conservative(w: StateFields, eos: EosSpec) -> np.ndarray:
    e = eos.internal_energy(w.theta, w.rho)
    u = np.empty((3, w.n))
    u[0] = w.rho
    u[1] = w.rho * w.v
    u[2] = 0.5 * w.rho * w.v * w.v + w.rho * e
    return u


def advance(w: StateFields, grid: Grid1D, config: SimConfig,
            dt: float) -> StateFields:
    """One classical RK4 step of the conservative semidiscretization."""
    u = _conservative(w, config.eos)
    k1, th1 = _rhs(u, grid, config, w.theta)
    u_next, th4 = _rk4(u, grid, config, dt, k1, th1)
    v, theta, _ = _stage_state(u_next, config.eos, th4)
    return StateFields(u_next[0], v, theta)


def stable_dt(config: SimConfig, w: StateFields) -> float:
    """CFL step: advective and diffusive limits evaluated per cell."""
    eos = config.eos
    th, rd = Dual2.seed_pair(w.theta, w.rho)
    j = eos.psi(th, rd)
    cv = -w.theta * j.d11
    dp_drho = 2.0 * w.rho * j.d2 + w.rho ** 2 * j.d22
    dp_dtheta = w.rho ** 2 * j.d12
    c2 = dp_drho + (w.theta / (w.rho ** 2 * cv)) * dp_dtheta ** 2
    if np.any(c2 <= 0.0) or np.any(cv <= 0.0):
        raise ConfigError("initial state is not thermodynamically stable")
    c = np.sqrt(c2)
    dx = config.grid.dx
    adv = dx / (np.abs(w.v) + c)
    diff_coeff = np.maximum(config.nu_eff / w.rho, config.kappa / (w.rho * cv))
    with np.errstate(divide="ignore"):
        diff = np.where(diff_coeff > 0.0, dx * dx / (2.0 * diff_coeff), np.inf)
    return config.cfl * float(np.min(np.minimum(adv, diff)))


def diffusive_time_scale(config: SimConfig,
                         rest: HomogeneousReference) -> float:
    """5 L^2 max(rho c_V / kappa, rho / nu_eff) / pi^2 at the rest state."""
    cv = float(config.eos.cv(rest.theta_hat, rest.rho_hat))
    rates = []
    if config.kappa > 0.0:
        rates.append(rest.rho_hat * cv / config.kappa)
    if config.nu_eff > 0.0:
        rates.append(rest.rho_hat / config.nu_eff)
    return 5.0 * config.grid.length ** 2 * max(rates) / math.pi ** 2


def run_simulation(config: SimConfig, w0: StateFields | None = None,
                   max_dt_retries: int = 10) -> SimulationResult:
    """Advance to t_end, recording conservation and decay diagnostics.

    The monitored functional is evaluated against the rest state matched to
    the initial net mass and energy, with the EOS calibrated there.  On a
    positivity failure the remaining integration restarts from the last
    accepted state with a halved step, at most ``max_dt_retries`` times.
    """
    grid = config.grid
    eos = config.eos
    w_init = init_perturbed(config) if w0 is None else w0.copy()
    rest = matched_rest_state(eos, grid, w_init)
    monitor = RestStateMonitor(calibrate(eos, rest.state()), rest, grid)
    dt = stable_dt(config, w_init)
    n_steps = max(1, math.ceil(config.t_end / dt - 1e-12))
    dt = config.t_end / n_steps

    raw = []

    def observe(t: float, state: StateFields, xi_int: float,
                xi_chunk: float) -> None:
        # xi_chunk is the time integral of int(xi) since the previous record,
        # accumulated per interval so late-time increments are not absorbed
        # by a large running sum.
        net = net_quantities(grid, state, eos)
        raw.append((t, net.mass, net.total_energy, net.entropy,
                    monitor(state), xi_int, xi_chunk))

    u = _conservative(w_init, eos)
    v, theta, p = _stage_state(u, eos, w_init.theta)
    xi_prev = integrate(grid, _xi_cells(v, theta, grid, config))
    xi_chunk = 0.0
    observe(0.0, StateFields(u[0], v, theta), xi_prev, xi_chunk)
    t = 0.0
    step = 0
    seg_base = 0.0  # start time of the current fixed-dt segment
    seg_step = 0
    retries = 0
    while step < n_steps:
        try:
            k1 = _flux_divergence(u, v, theta, p, grid, config)
            u_next, guess_next = _rk4(u, grid, config, dt, k1, theta)
            # Doubles as the positivity probe and the next step's first stage.
            v_next, theta_next, p_next = _stage_state(u_next, eos, guess_next)
        except TimeStepError as exc:
            retries += 1
            if retries > max_dt_retries:
                raise SimulationAbortedError(
                    f"time stepping failed after {max_dt_retries} retries: {exc}",
                    last_state=StateFields(u[0], v, theta), t=t) from exc
            # Continue the remaining integration with a halved, re-aligned step.
            remaining = config.t_end - t
            seg_base = t
            seg_step = 0
            dt = dt * 0.5
            n_rest = max(1, math.ceil(remaining / dt - 1e-12))
            dt = remaining / n_rest
            n_steps = step + n_rest
            continue
        xi_next = integrate(grid, _xi_cells(v_next, theta_next, grid, config))
        xi_chunk += 0.5 * dt * (xi_prev + xi_next)
        u, v, theta, p = u_next, v_next, theta_next, p_next
        xi_prev = xi_next
        step += 1
        seg_step += 1
        t = seg_base + seg_step * dt
        if step % config.output_every == 0 or step == n_steps:
            observe(t, StateFields(u[0], v, theta), xi_next, xi_chunk)
            xi_chunk = 0.0

    records = _finalize_records(raw, rest.theta_hat)
    final = StateFields(u[0], v, theta)
    return SimulationResult(records=records, final_state=final, rest=rest, dt=dt)


def _finalize_records(raw, theta_hat: float) -> list:
    """Fill decay residuals from the windowed dissipation average.

    For record j the slope (V_hi - V_lo)/(t_hi - t_lo) over the adjacent
    records is compared with theta_hat times the mean of int(xi) over the
    same window, assembled from the per-interval integrals.  Slopes below
    ``_SLOPE_RESOLUTION * V / window`` are unresolvable and floor the
    denominator.
    """
    records = []
    m = len(raw)
    for j, (t, mass, energy, entropy, value, xi_int, _) in enumerate(raw):
        if m == 1:
            residual = 0.0
        else:
            lo = max(0, j - 1)
            hi = min(m - 1, j + 1)
            window = raw[hi][0] - raw[lo][0]
            slope = (raw[hi][4] - raw[lo][4]) / window
            xi_window = sum(raw[k][6] for k in range(lo + 1, hi + 1))
            xi_mean = xi_window / window
            floor = max(_SLOPE_RESOLUTION * abs(value) / window, 1e-300)
            residual = (abs(slope + theta_hat * xi_mean)
                        / max(abs(slope), floor))
        records.append(TrajectoryRecord(
            t=t, mass=mass, total_energy=energy, net_entropy=entropy,
            v_meq=value, entropy_production_integral=xi_int,
            decay_residual=residual))
    return records


def write_timeseries(path, records) -> None:
    """Time-series CSV with shortest round-trip float formatting."""
    lines = [TIMESERIES_HEADER]
    for r in records:
        cells = (r.t, r.mass, r.total_energy, r.net_entropy, r.v_meq,
                 r.entropy_production_integral, r.decay_residual)
        lines.append(",".join(repr(float(c)) for c in cells))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
