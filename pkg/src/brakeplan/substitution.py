"""Failure-time substitution tau(t, s) and its density d tau / d s.

For a fixed prediction time ``t`` each braking regime maps failure times
monotonically onto arc lengths.  Inverting that map turns the integral
over failure times into an integral over ``s``, weighted by the
derivative of the inverse.  Four regimes exist:

* B moving: failed during the valve transition, still braking.  The
  cubic term in the failure time is dropped, leaving a quadratic.
* B rest: failed during the transition, already standing.
* C moving / C rest: failed after the valve reached ``a_next``.

All functions take a signed valve speed ``kappa`` whose sign equals
``sign(a_next - a_prev)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OutOfRegionError, ParameterError, SingularityError

__all__ = [
    "RegimeCoefficients",
    "sigma_B_approx",
    "moving_extremum",
    "tau_B_moving",
    "tau_B_rest",
    "dtau_ds_B",
    "tau_C",
    "dtau_ds_C",
    "rest_singular_fail_time",
    "rest_singularity_inside",
]

_TOL = 1e-12


def _sgn(x):
    return 1.0 if x > 0 else -1.0


@dataclass(frozen=True)
class RegimeCoefficients:
    """Quadratic coefficients in the failure time for the two B regimes.

    Moving: ``alpha_m tau^2 + beta_m tau + gamma_m = s``.
    Rest:   ``alpha_r tau^2 + beta_r tau + gamma_r = 0``.
    """

    alpha_m: float
    beta_m: float
    gamma_m: float
    alpha_r: float
    beta_r: float
    gamma_r: float

    @classmethod
    def at(cls, t, s, v0, a_prev, kappa):
        return cls(
            alpha_m=0.5 * a_prev - kappa * t,
            beta_m=0.5 * kappa * t * t - a_prev * t,
            gamma_m=v0 * t + 0.5 * a_prev * t * t,
            alpha_r=2.0 * v0 * kappa,
            beta_r=2.0 * v0 * a_prev - 2.0 * kappa * s,
            gamma_r=-v0 * v0 - 2.0 * a_prev * s,
        )

    def disc_moving(self, s):
        return self.beta_m ** 2 - 4.0 * self.alpha_m * self.gamma_m + 4.0 * self.alpha_m * s

    def disc_rest(self):
        return self.beta_r ** 2 - 4.0 * self.alpha_r * self.gamma_r


def _root(a, b, c, sign, disc):
    """``(-b + sign*sqrt(disc)) / (2a)`` without catastrophic cancellation."""
    r = math.sqrt(max(disc, 0.0))
    num = -b + sign * r
    if a == 0.0:
        if b == 0.0:
            raise OutOfRegionError("degenerate quadratic")
        return -c / b
    if (b > 0) == (sign > 0) and b != 0.0:
        # -b and sign*r have opposite signs: use the conjugate form
        den = -b - sign * r
        if den != 0.0:
            return 2.0 * c / den
    return num / (2.0 * a)


def sigma_B_approx(t, t_fail, v0, a_prev, kappa):
    """Moving-B arc length with the ``kappa t_fail^3 / 2`` term dropped."""
    co = RegimeCoefficients.at(t, 0.0, v0, a_prev, kappa)
    return (co.alpha_m * t_fail + co.beta_m) * t_fail + co.gamma_m


def moving_extremum(t, a_prev, kappa):
    """Failure time at which the approximate moving-B arc length is stationary."""
    den = 2.0 * a_prev - 4.0 * kappa * t
    if den == 0.0:
        return math.inf
    return t + 3.0 * kappa * t * t / den


def tau_B_moving(t, s, v0, a_prev, kappa, t_valve):
    """Failure time whose approximate moving-B trajectory is at ``s`` at time ``t``."""
    co = RegimeCoefficients.at(t, s, v0, a_prev, kappa)
    disc = co.disc_moving(s)
    if disc < -_TOL * max(1.0, co.beta_m ** 2):
        raise OutOfRegionError(f"no moving-B trajectory reaches s={s} at t={t}")
    tau = _root(co.alpha_m, co.beta_m, co.gamma_m - s, _sgn(kappa), disc)
    if not (-1e-9 <= tau <= t_valve + 1e-9):
        raise OutOfRegionError(f"moving-B root {tau} outside [0, {t_valve}]")
    ext = moving_extremum(t, a_prev, kappa)
    if 0.0 < ext < tau - 1e-12 and ext < t_valve:
        raise OutOfRegionError(f"root {tau} lies beyond the extremum at {ext}")
    return min(max(tau, 0.0), t_valve)


def tau_B_rest(t, s, v0, a_prev, kappa, t_valve):
    """Failure time whose B trajectory has come to rest exactly at ``s``."""
    if v0 <= 0:
        raise ParameterError("rest-B substitution needs v0 > 0")
    co = RegimeCoefficients.at(t, s, v0, a_prev, kappa)
    disc = co.disc_rest()
    if disc < 0:
        raise OutOfRegionError(f"no rest-B trajectory stops at s={s}")
    tau = _root(co.alpha_r, co.beta_r, co.gamma_r, -_sgn(kappa), disc)
    if not (-1e-9 <= tau <= t_valve + 1e-9):
        raise OutOfRegionError(f"rest-B root {tau} outside [0, {t_valve}]")
    return min(max(tau, 0.0), t_valve)


def dtau_ds_B(t, s, v0, a_prev, kappa, stopped):
    """Density of B failure times per metre at ``(t, s)`` (signed)."""
    co = RegimeCoefficients.at(t, s, v0, a_prev, kappa)
    if not stopped:
        disc = co.disc_moving(s)
        if disc <= 0:
            raise SingularityError(f"moving-B density singular at t={t}, s={s}")
        return _sgn(kappa) / math.sqrt(disc)
    if v0 <= 0:
        raise SingularityError("rest-B density undefined for v0 = 0")
    disc = co.disc_rest()
    if disc <= 0:
        raise SingularityError(f"rest-B density singular at s={s}")
    return 1.0 / (2.0 * v0) - _sgn(kappa) * (co.beta_r + 4.0 * kappa * s) / (
        2.0 * v0 * math.sqrt(disc))


def tau_C(t, s, v0, a_next, stopped):
    """Failure time of the C trajectory through ``(t, s)``."""
    if a_next >= 0:
        raise ParameterError(f"a_next must be negative, got {a_next}")
    if stopped:
        if v0 <= 0:
            raise ParameterError("rest-C substitution needs v0 > 0")
        return s / v0 + v0 / (2.0 * a_next)
    gap = v0 * t - s
    if gap < -1e-12 * max(1.0, abs(s)):
        raise OutOfRegionError(f"s={s} beyond the undisturbed position {v0 * t}")
    return t - math.sqrt(2.0 * max(gap, 0.0) / -a_next)


def dtau_ds_C(t, s, v0, a_next, stopped):
    """Density of C failure times per metre at ``(t, s)``."""
    if stopped:
        if v0 <= 0:
            raise SingularityError("rest-C density undefined for v0 = 0")
        return 1.0 / v0
    gap = 2.0 * v0 * t - 2.0 * s
    if gap <= 0:
        raise SingularityError(f"moving-C density singular at s={s} >= v0 t")
    return 1.0 / (math.sqrt(-a_next) * math.sqrt(gap))


def rest_singular_fail_time(v0, a_prev, kappa):
    """Failure time at which the rest-B stopping distance is stationary.

    Only exists for ``kappa < 0``; the frozen deceleration there equals
    ``-sqrt(-kappa v0 / 2)``.  Returns None when there is no real root.
    """
    if kappa >= 0 or v0 <= 0:
        return None
    return (-math.sqrt(-0.5 * kappa * v0) - a_prev) / kappa


def rest_singularity_inside(v0, a_prev, a_next, kappa_mag):
    """True when the stationary rest-B failure time falls inside ``[0, t_valve]``."""
    if a_next == a_prev:
        return False
    kappa = math.copysign(kappa_mag, a_next - a_prev)
    tau = rest_singular_fail_time(v0, a_prev, kappa)
    if tau is None:
        return False
    t_valve = abs(a_next - a_prev) / kappa_mag
    return 0.0 <= tau <= t_valve
