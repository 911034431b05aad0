"""Equation-of-state layer generated from a Helmholtz free energy.

A single callable ``psi(theta, rho)`` (evaluable on floats, arrays, or
``Dual2`` jets) generates entropy, internal energy, pressure, and heat
capacity; no per-gas derivative formulas appear outside the tests.  The two
shipped gases are the calorically perfect ideal gas and a covolume variant
with a nontrivial stability region ``b*rho < 1``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from . import calculus
from .calculus import Dual2
from .errors import ConfigError, DomainError, InversionError

__all__ = [
    "ThermoState",
    "EosSpec",
    "StabilityReport",
    "ThermoQuantities",
    "IdentityResiduals",
    "ideal_gas_eos",
    "covolume_gas_eos",
    "thermo_quantities",
    "calibrate",
    "stability_check",
    "density_from_pressure",
    "identity_residuals",
    "density_convexity_residual",
]


@dataclass(frozen=True)
class ThermoState:
    """Absolute temperature and mass density, both strictly positive."""

    theta: float
    rho: float

    def __post_init__(self):
        if not (self.theta > 0.0 and math.isfinite(self.theta)):
            raise DomainError(f"temperature must be positive, got {self.theta}")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise DomainError(f"density must be positive, got {self.rho}")


@dataclass(frozen=True)
class StabilityReport:
    cv: float
    dp_drho: float
    stable: bool


@dataclass(frozen=True)
class ThermoQuantities:
    psi: float
    eta: float
    e: float
    p: float
    cv: float
    dp_drho: float


@dataclass(frozen=True)
class EosSpec:
    """Helmholtz free energy with calibration offset and named parameters.

    ``entropy_override`` exists for test fixtures that deliberately break the
    Gibbs relations; production gases always derive entropy from ``psi``.
    """

    name: str
    psi_fn: Callable
    params: Mapping[str, float] = field(default_factory=dict)
    calibration_offset: float = 0.0
    rho_sup: float = math.inf  # exclusive upper density bound of the domain
    entropy_override: Optional[Callable] = None

    # -- domain --------------------------------------------------------------

    def in_domain(self, theta, rho) -> bool:
        ok = np.all(np.asarray(theta) > 0.0) and np.all(np.asarray(rho) > 0.0)
        if math.isfinite(self.rho_sup):
            ok = ok and np.all(np.asarray(rho) < self.rho_sup)
        return bool(ok)

    def require_in_domain(self, theta, rho, what: str = "state") -> None:
        if not self.in_domain(theta, rho):
            raise DomainError(f"{what} outside the domain of EOS '{self.name}'")

    # -- generated quantities --------------------------------------------------

    def psi(self, theta, rho):
        """Specific Helmholtz free energy (with calibration offset applied)."""
        out = self.psi_fn(theta, rho)
        if self.calibration_offset != 0.0:
            out = out - self.calibration_offset
        return out

    def entropy(self, theta, rho):
        if self.entropy_override is not None:
            return self.entropy_override(theta, rho)
        th = Dual2.seed(theta, rho)
        return -self.psi(th, rho).d1

    def internal_energy(self, theta, rho):
        th = Dual2.seed(theta, rho)
        j = self.psi(th, rho)
        return j.val - theta * j.d1

    def pressure(self, theta, rho):
        rd = Dual2.seed(rho, theta)
        return rho * rho * self.psi(theta, rd).d1

    def cv(self, theta, rho):
        th = Dual2.seed(theta, rho)
        return -theta * self.psi(th, rho).d11

    def dp_drho(self, theta, rho):
        rd = Dual2.seed(rho, theta)
        j = self.psi(theta, rd)
        return 2.0 * rho * j.d1 + rho * rho * j.d11

    def pressure_and_slope(self, theta, rho):
        """(p, dp/drho) from one jet evaluation; used by Newton loops."""
        rd = Dual2.seed(rho, theta)
        j = self.psi(theta, rd)
        return rho * rho * j.d1, 2.0 * rho * j.d1 + rho * rho * j.d11

    def heat_jet(self, theta, rho):
        """(psi, psi_theta, psi_thetatheta) bundle from one jet evaluation."""
        th = Dual2.seed(theta, rho)
        j = self.psi(th, rho)
        return j.val, j.d1, j.d11


def ideal_gas_eos(cv_ref: float, gamma: float, theta_ref: float,
                  rho_ref: float) -> EosSpec:
    """Calorically perfect ideal gas, free energy vanishing at the reference."""
    _check_common(cv_ref, gamma, theta_ref, rho_ref)
    cv = float(cv_ref)
    gm1 = float(gamma) - 1.0
    tr = float(theta_ref)
    rr = float(rho_ref)

    def psi(theta, rho):
        return (-cv * (theta * (calculus.log(theta / tr) - 1.0))
                + (cv * gm1) * (theta * calculus.log(rho / rr))
                - cv * tr)

    return EosSpec(
        name="ideal",
        psi_fn=psi,
        params={"cv_ref": cv, "gamma": float(gamma),
                "theta_ref": tr, "rho_ref": rr, "b": 0.0},
    )


def covolume_gas_eos(cv_ref: float, gamma: float, b: float, theta_ref: float,
                     rho_ref: float) -> EosSpec:
    """Covolume gas: the density term uses ln(rho/(1-b*rho)).

    Reduces to the ideal gas at b=0; the stability region is ``b*rho < 1``.
    """
    _check_common(cv_ref, gamma, theta_ref, rho_ref)
    if b < 0.0:
        raise ConfigError(f"covolume b must be nonnegative, got {b}")
    if b * rho_ref >= 1.0:
        raise ConfigError(
            f"reference density outside covolume domain: b*rho_ref = {b * rho_ref}")
    cv = float(cv_ref)
    gm1 = float(gamma) - 1.0
    tr = float(theta_ref)
    rr = float(rho_ref)
    bb = float(b)
    ref_term = math.log(rr / (1.0 - bb * rr))

    def psi(theta, rho):
        comp = calculus.log(rho / (1.0 - bb * rho)) - ref_term
        return (-cv * (theta * (calculus.log(theta / tr) - 1.0))
                + (cv * gm1) * (theta * comp)
                - cv * tr)

    return EosSpec(
        name="covolume",
        psi_fn=psi,
        params={"cv_ref": cv, "gamma": float(gamma), "b": bb,
                "theta_ref": tr, "rho_ref": rr},
        rho_sup=math.inf if bb == 0.0 else 1.0 / bb,
    )


def _check_common(cv_ref, gamma, theta_ref, rho_ref):
    if cv_ref <= 0.0:
        raise ConfigError(f"cv_ref must be positive, got {cv_ref}")
    if gamma <= 1.0:
        raise ConfigError(f"gamma must exceed 1, got {gamma}")
    if theta_ref <= 0.0:
        raise ConfigError(f"theta_ref must be positive, got {theta_ref}")
    if rho_ref <= 0.0:
        raise ConfigError(f"rho_ref must be positive, got {rho_ref}")


def thermo_quantities(eos: EosSpec, s: ThermoState) -> ThermoQuantities:
    """All pointwise quantities from a single bivariate jet of psi."""
    eos.require_in_domain(s.theta, s.rho)
    th, rd = Dual2.seed_pair(s.theta, s.rho)
    j = eos.psi(th, rd)
    return ThermoQuantities(
        psi=float(j.val),
        eta=float(-j.d1),
        e=float(j.val - s.theta * j.d1),
        p=float(s.rho * s.rho * j.d2),
        cv=float(-s.theta * j.d11),
        dp_drho=float(2.0 * s.rho * j.d2 + s.rho * s.rho * j.d22),
    )


def calibrate(eos: EosSpec, ref: ThermoState) -> EosSpec:
    """Copy of ``eos`` with the offset shifted so that psi(ref) = 0.

    The shift is a pure gauge: entropy, pressure, heat capacity, and dp/drho
    are bitwise unchanged; internal energy moves by a constant.
    """
    eos.require_in_domain(ref.theta, ref.rho)
    extra = float(eos.psi(ref.theta, ref.rho))
    return dataclasses.replace(
        eos, calibration_offset=eos.calibration_offset + extra)


def is_calibrated_at(eos: EosSpec, theta_hat: float, rho_hat: float,
                     rtol: float = 1e-10) -> bool:
    psi_hat = float(eos.psi(theta_hat, rho_hat))
    scale = max(1.0, abs(float(eos.internal_energy(theta_hat, rho_hat))),
                abs(theta_hat * float(eos.entropy(theta_hat, rho_hat))))
    return abs(psi_hat) <= rtol * scale


def stability_check(eos: EosSpec, s: ThermoState) -> StabilityReport:
    """Thermodynamic stability: cv > 0 and dp/drho > 0."""
    q = thermo_quantities(eos, s)
    return StabilityReport(cv=q.cv, dp_drho=q.dp_drho,
                           stable=bool(q.cv > 0.0 and q.dp_drho > 0.0))


def density_from_pressure(eos: EosSpec, theta, p_target,
                          max_iter: int = 100):
    """Invert p(theta, rho) = p_target by Newton iteration on the density.

    Accepts scalars or arrays (elementwise).  The initial guess is the
    ideal-gas inversion clamped into the domain; convergence requires
    ``|p - p_target| <= 1e-12 * max(1, |p_target|)``.
    """
    th = np.asarray(theta, dtype=float)
    pt = np.asarray(p_target, dtype=float)
    scalar = th.ndim == 0 and pt.ndim == 0
    th, pt = np.broadcast_arrays(np.atleast_1d(th), np.atleast_1d(pt))

    if np.any(pt <= 0.0):
        raise InversionError("target pressure not attained inside the domain")

    cv = eos.params.get("cv_ref", 1.0)
    gm1 = eos.params.get("gamma", 2.0) - 1.0
    rho_ref = eos.params.get("rho_ref", 1.0)
    rho = pt / (cv * gm1 * th)
    lo = 1e-12 * rho_ref
    hi = eos.rho_sup * (1.0 - 1e-9) if math.isfinite(eos.rho_sup) else math.inf
    rho = np.clip(rho, lo, hi)

    tol = 1e-12 * np.maximum(1.0, np.abs(pt))
    for _ in range(max_iter):
        p, slope = eos.pressure_and_slope(th, rho)
        resid = p - pt
        if np.all(np.abs(resid) <= tol):
            result = np.asarray(rho, dtype=float)
            return float(result[0]) if scalar else result.copy()
        step = resid / slope
        nxt = rho - step
        # Monotone p on the domain: fall back to halving toward the interior
        # whenever Newton overshoots the admissible interval.
        nxt = np.where(nxt <= lo, 0.5 * rho, nxt)
        if math.isfinite(hi):
            nxt = np.where(nxt >= hi, 0.5 * (rho + hi), nxt)
        rho = nxt
    raise InversionError(
        f"pressure inversion failed to converge in {max_iter} iterations")


@dataclass(frozen=True)
class IdentityResiduals:
    """Residuals of the five Gibbs identities, raw and scale-normalized.

    (a) d eta/d theta - cv/theta
    (b) d e/d theta - cv
    (c) d eta/d rho + (1/rho^2) dp/d theta
    (d) -p + rho^2 de/d rho + theta dp/d theta
    (e) d e/d rho - theta d eta/d rho - p/rho^2
    """

    raw: np.ndarray
    relative: np.ndarray


def identity_residuals(eos: EosSpec, s: ThermoState) -> IdentityResiduals:
    """Check the standard thermodynamic identities at one state.

    Each left-hand side differentiates the derived quantity *functions*
    (entropy, energy, pressure) with fresh jet seeds, so the check genuinely
    exercises a different code path than the assembled right-hand sides.
    """
    eos.require_in_domain(s.theta, s.rho)
    theta, rho = s.theta, s.rho

    th_seed = Dual2.seed(theta, rho)
    deta_dth = eos.entropy(th_seed, rho).d1
    de_dth = eos.internal_energy(th_seed, rho).d1
    dp_dth = eos.pressure(th_seed, rho).d1

    r_seed = Dual2.seed(rho, theta)
    deta_dr = eos.entropy(theta, r_seed).d1
    de_dr = eos.internal_energy(theta, r_seed).d1

    q = thermo_quantities(eos, s)

    def rel(value, *terms):
        scale = max(abs(t) for t in terms)
        return value / max(scale, 1e-300)

    raw = np.array([
        deta_dth - q.cv / theta,
        de_dth - q.cv,
        deta_dr + dp_dth / rho**2,
        -q.p + rho**2 * de_dr + theta * dp_dth,
        de_dr - theta * deta_dr - q.p / rho**2,
    ])
    relative = np.array([
        rel(raw[0], deta_dth, q.cv / theta, 1.0),
        rel(raw[1], de_dth, q.cv, 1.0),
        rel(raw[2], deta_dr, dp_dth / rho**2, 1.0),
        rel(raw[3], q.p, rho**2 * de_dr, theta * dp_dth, 1.0),
        rel(raw[4], de_dr, theta * deta_dr, q.p / rho**2, 1.0),
    ])
    return IdentityResiduals(raw=raw, relative=relative)


def density_convexity_residual(eos: EosSpec, s: ThermoState) -> float:
    """Relative residual of d^2(rho psi)/drho^2 = (1/rho) dp/drho.

    The left side differentiates the map rho -> rho*psi(theta, rho) with a
    fresh jet; the right side uses the assembled dp/drho formula.
    """
    eos.require_in_domain(s.theta, s.rho)
    rd = Dual2.seed(s.rho, s.theta)
    lhs = (rd * eos.psi(s.theta, rd)).d11
    rhs = eos.dp_drho(s.theta, s.rho) / s.rho
    return float((lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
