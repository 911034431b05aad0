"""Exact and finite-difference differentiation utilities.

``Dual2`` is a truncated second-order Taylor number in up to two seed
directions.  Arithmetic propagates first and second derivatives (including
the mixed one) exactly through ``+ - * /``, powers, and the elementary
functions below, so every thermodynamic derivative in the package comes out
of one plain evaluation of the free-energy callable.

Nesting is supported: seeding an expression that already contains ``Dual2``
values creates a higher *level*, and arithmetic treats lower-level values as
constants carrying structure.  This is what lets us differentiate derived
quantities (entropy, pressure, ballistic free energy) without hand-written
formulas.

The finite-difference routines (``fd_derivative``, ``gateaux_first``,
``gateaux_second``) are deliberately independent of ``Dual2``; they serve as
the oracle layer for every variational claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, EvaluationError

_EPS = float(np.finfo(float).eps)

__all__ = [
    "Dual2",
    "log",
    "exp",
    "sqrt",
    "sin",
    "cos",
    "FdEstimate",
    "fd_derivative",
    "gateaux_first",
    "gateaux_second",
    "StateFields",
    "perturbed",
    "field_norm_inf",
]


def _level(x):
    return x.level if isinstance(x, Dual2) else 0


def _is_zero(x):
    return isinstance(x, float) and x == 0.0


def _mul(a, b):
    # Algebraic-zero pruning keeps sparse jets (univariate seeds) cheap.
    if _is_zero(a) or _is_zero(b):
        return 0.0
    return a * b


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return a + b


class Dual2:
    """Second-order jet: value, two first partials, three second partials.

    ``seed`` creates a univariate variable (derivatives in ``d1``/``d11``);
    ``seed_pair`` creates two independent variables whose mixed partial lands
    in ``d12``.  Components may be floats, numpy arrays, or lower-level
    ``Dual2`` values.  A value-only construction has all derivative parts
    zero.
    """

    __slots__ = ("val", "d1", "d2", "d11", "d12", "d22", "level")

    # Keep numpy from broadcasting over us; defer to the reflected ops.
    __array_ufunc__ = None
    __array_priority__ = 1000

    def __init__(self, val, d1=0.0, d2=0.0, d11=0.0, d12=0.0, d22=0.0, level=1):
        self.val = val
        self.d1 = d1
        self.d2 = d2
        self.d11 = d11
        self.d12 = d12
        self.d22 = d22
        self.level = level

    @classmethod
    def seed(cls, x, *context):
        """Univariate variable at ``x``, one level above ``x`` and ``context``."""
        lv = max(_level(x), *(_level(c) for c in context), 0) + 1
        return cls(x, d1=1.0, level=lv)

    @classmethod
    def seed_pair(cls, x, y):
        """Two independent variables sharing a fresh level."""
        lv = max(_level(x), _level(y)) + 1
        return cls(x, d1=1.0, level=lv), cls(y, d2=1.0, level=lv)

    def __repr__(self):
        return (f"Dual2(val={self.val!r}, d1={self.d1!r}, d2={self.d2!r}, "
                f"d11={self.d11!r}, d12={self.d12!r}, d22={self.d22!r}, "
                f"level={self.level})")

    # -- additive ----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual2) and other.level >= self.level:
            if other.level > self.level:
                return other + self
            return Dual2(self.val + other.val,
                         _add(self.d1, other.d1), _add(self.d2, other.d2),
                         _add(self.d11, other.d11), _add(self.d12, other.d12),
                         _add(self.d22, other.d22), self.level)
        return Dual2(self.val + other, self.d1, self.d2,
                     self.d11, self.d12, self.d22, self.level)

    __radd__ = __add__

    def __neg__(self):
        return Dual2(-self.val,
                     0.0 if _is_zero(self.d1) else -self.d1,
                     0.0 if _is_zero(self.d2) else -self.d2,
                     0.0 if _is_zero(self.d11) else -self.d11,
                     0.0 if _is_zero(self.d12) else -self.d12,
                     0.0 if _is_zero(self.d22) else -self.d22,
                     self.level)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Dual2) else -1.0 * other)

    def __rsub__(self, other):
        return (-self) + other

    # -- multiplicative ----------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, Dual2) and other.level >= self.level:
            if other.level > self.level:
                return other * self
            a, b = self, other
            return Dual2(
                a.val * b.val,
                _add(_mul(a.d1, b.val), _mul(a.val, b.d1)),
                _add(_mul(a.d2, b.val), _mul(a.val, b.d2)),
                _add(_add(_mul(a.d11, b.val), 2.0 * _mul(a.d1, b.d1)),
                     _mul(a.val, b.d11)),
                _add(_add(_mul(a.d12, b.val), _mul(a.val, b.d12)),
                     _add(_mul(a.d1, b.d2), _mul(a.d2, b.d1))),
                _add(_add(_mul(a.d22, b.val), 2.0 * _mul(a.d2, b.d2)),
                     _mul(a.val, b.d22)),
                a.level,
            )
        return Dual2(self.val * other, _mul(self.d1, other), _mul(self.d2, other),
                     _mul(self.d11, other), _mul(self.d12, other),
                     _mul(self.d22, other), self.level)

    __rmul__ = __mul__

    def _chain(self, v, u1, u2):
        """Jet of ``u(self)`` given ``u``, ``u'``, ``u''`` at ``self.val``."""
        return Dual2(
            v,
            _mul(u1, self.d1),
            _mul(u1, self.d2),
            _add(_mul(u2, _mul(self.d1, self.d1)), _mul(u1, self.d11)),
            _add(_mul(u2, _mul(self.d1, self.d2)), _mul(u1, self.d12)),
            _add(_mul(u2, _mul(self.d2, self.d2)), _mul(u1, self.d22)),
            self.level,
        )

    def _recip(self):
        u1 = 1.0 / self.val
        return self._chain(u1, -u1 * u1, 2.0 * u1 * u1 * u1)

    def __truediv__(self, other):
        if isinstance(other, Dual2) and other.level >= self.level:
            if other.level > self.level:
                return other._recip() * self
            return self * other._recip()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._recip() * other

    def __pow__(self, n):
        if isinstance(n, Dual2):
            raise TypeError("dual exponents are not supported; use exp/log")
        if n == 2:
            return self * self
        if n == 1:
            return self
        v = self.val ** n
        return self._chain(v, n * self.val ** (n - 1),
                           n * (n - 1) * self.val ** (n - 2))

    # -- elementary functions (dispatch through module-level helpers) -------

    def log(self):
        u1 = 1.0 / self.val
        return self._chain(log(self.val), u1, -u1 * u1)

    def exp(self):
        e = exp(self.val)
        return self._chain(e, e, e)

    def sqrt(self):
        s = sqrt(self.val)
        u1 = 0.5 / s
        return self._chain(s, u1, -0.5 * u1 / self.val)

    def sin(self):
        s, c = sin(self.val), cos(self.val)
        return self._chain(s, c, -1.0 * s)

    def cos(self):
        s, c = sin(self.val), cos(self.val)
        return self._chain(c, -1.0 * s, -1.0 * c)


def log(x):
    return x.log() if isinstance(x, Dual2) else np.log(x)


def exp(x):
    return x.exp() if isinstance(x, Dual2) else np.exp(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Dual2) else np.sqrt(x)


def sin(x):
    return x.sin() if isinstance(x, Dual2) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Dual2) else np.cos(x)


# ---------------------------------------------------------------------------
# Discrete state container (shared with the fields module)
# ---------------------------------------------------------------------------

@dataclass
class StateFields:
    """Cell-centered density, velocity, and temperature arrays.

    The container is also used for perturbation *directions*, whose entries
    may have any sign; admissibility (positivity of rho and theta) is checked
    by the operations that require a physical state, not by the constructor.
    """

    rho: np.ndarray
    v: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if not (self.rho.shape == self.v.shape == self.theta.shape
                and self.rho.ndim == 1):
            from .errors import ShapeError
            raise ShapeError("rho, v, theta must be 1-d arrays of equal length")

    @property
    def n(self) -> int:
        return self.rho.size

    def copy(self) -> "StateFields":
        return StateFields(self.rho.copy(), self.v.copy(), self.theta.copy())

    def admissible(self) -> bool:
        return bool(np.all(self.rho > 0.0) and np.all(self.theta > 0.0))

    def require_admissible(self, what: str = "state") -> None:
        if not self.admissible():
            raise DomainError(f"{what} has non-positive density or temperature")

    @classmethod
    def uniform(cls, n: int, rho: float, v: float, theta: float) -> "StateFields":
        return cls(np.full(n, float(rho)), np.full(n, float(v)),
                   np.full(n, float(theta)))

    @classmethod
    def zeros(cls, n: int) -> "StateFields":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))


def perturbed(base: StateFields, direction: StateFields, s: float) -> StateFields:
    """``base + s * direction`` componentwise."""
    return StateFields(base.rho + s * direction.rho,
                       base.v + s * direction.v,
                       base.theta + s * direction.theta)


def field_norm_inf(fields: StateFields) -> float:
    vals = [np.max(np.abs(fields.rho), initial=0.0),
            np.max(np.abs(fields.v), initial=0.0),
            np.max(np.abs(fields.theta), initial=0.0)]
    return float(max(vals))


FunctionalHandle = Callable[[StateFields], float]


# ---------------------------------------------------------------------------
# Finite differences with one Richardson level
# ---------------------------------------------------------------------------

class FdEstimate(NamedTuple):
    value: float
    error: float


def _require_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise EvaluationError("non-finite function value in finite difference")


def fd_derivative(f: Callable[[float], float], x: float, order: int) -> FdEstimate:
    """Central-difference derivative of ``f`` at ``x`` with one Richardson step.

    The reported error is the gap between the two Richardson levels, i.e. the
    magnitude of the leading term the extrapolation removed.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    # Extrapolate from steps (h, 2h): the fine level is the eps-scaled h,
    # so the extrapolation removes the h^2 term without paying the 4x
    # roundoff of a half-step fine level.
    if order == 1:
        h = _EPS ** (1.0 / 3.0) * (1.0 + abs(x))

        def central(step):
            fp, fm = f(x + step), f(x - step)
            _require_finite(fp, fm)
            return (fp - fm) / (2.0 * step)

        coarse, fine = central(2.0 * h), central(h)
    else:
        h = _EPS ** 0.25 * (1.0 + abs(x))
        f0 = f(x)
        _require_finite(f0)

        def central(step):
            fp, fm = f(x + step), f(x - step)
            _require_finite(fp, fm)
            return (fp - 2.0 * f0 + fm) / (step * step)

        coarse, fine = central(2.0 * h), central(h)
    value = (4.0 * fine - coarse) / 3.0
    return FdEstimate(value, abs(value - fine))


def _probe_steps(base: StateFields, direction: StateFields, h0: float,
                 fractions) -> float:
    """Shrink ``h0`` until every probe state stays admissible."""
    h = h0
    for _ in range(21):
        ok = True
        for frac in fractions:
            probe = perturbed(base, direction, frac * h)
            if not probe.admissible():
                ok = False
                break
        if ok:
            return h
        h *= 0.5
    raise DomainError("probe states remain inadmissible after 20 step halvings")


def gateaux_first(F: FunctionalHandle, base: StateFields,
                  direction: StateFields) -> float:
    """d/ds F(base + s*direction) at s=0, Richardson-extrapolated.

    The step is scaled to the base field magnitude; it is halved (at most 20
    times) whenever a probe state would leave the admissible cone.
    """
    h0 = _EPS ** (1.0 / 3.0) * (1.0 + field_norm_inf(base))
    h = _probe_steps(base, direction, h0, (2.0, -2.0, 1.0, -1.0))

    def central(step):
        fp = F(perturbed(base, direction, step))
        fm = F(perturbed(base, direction, -step))
        _require_finite(fp, fm)
        return (fp - fm) / (2.0 * step)

    return (4.0 * central(h) - central(2.0 * h)) / 3.0


def gateaux_second(F: FunctionalHandle, base: StateFields,
                   direction: StateFields) -> float:
    """d^2/ds^2 F(base + s*direction) at s=0, Richardson-extrapolated."""
    h0 = _EPS ** 0.25 * (1.0 + field_norm_inf(base))
    h = _probe_steps(base, direction, h0, (2.0, -2.0, 1.0, -1.0))
    f0 = F(base)
    _require_finite(f0)

    def central(step):
        fp = F(perturbed(base, direction, step))
        fm = F(perturbed(base, direction, -step))
        _require_finite(fp, fm)
        return (fp - 2.0 * f0 + fm) / (step * step)

    return (4.0 * central(h) - central(2.0 * h)) / 3.0
