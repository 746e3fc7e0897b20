"""Stopping trajectories, valve transition and the reachable envelope.

Conventions: time is measured from the start of the planning cycle
(t_now = 0), decelerations are strictly negative and "stronger" means
more negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .errors import ParameterError

__all__ = [
    "PlanParams",
    "ValveTransition",
    "StopPoint",
    "stop_point",
    "sigma_single",
    "sigma_B",
    "sigma_C",
    "envelope",
]


@dataclass(frozen=True)
class PlanParams:
    """State and tuning of one planning cycle (SI units)."""

    v0: float
    a_prev: float
    a_min: float = -9.0
    a_max: float = -1.0
    dt_plan: float = 0.25
    t_hzn: float = 10.0
    kappa_mag: float = 100.0
    da: float = 0.1
    s_cap: Optional[float] = None

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.v0, self.a_prev, self.a_min, self.a_max,
                                                self.dt_plan, self.t_hzn, self.kappa_mag, self.da)):
            raise ParameterError("plan parameters must be finite")
        if self.v0 < 0:
            raise ParameterError(f"v0 must be >= 0, got {self.v0}")
        if not (self.a_min <= self.a_prev <= self.a_max < 0):
            raise ParameterError(
                f"need a_min <= a_prev <= a_max < 0, got {self.a_min}, {self.a_prev}, {self.a_max}")
        if not (0 < self.dt_plan < self.t_hzn):
            raise ParameterError("need 0 < dt_plan < t_hzn")
        if self.kappa_mag <= 0:
            raise ParameterError("valve speed must be positive")
        if self.da <= 0:
            raise ParameterError("candidate spacing da must be positive")
        if self.s_cap is not None and not self.s_cap > 0:
            raise ParameterError("s_cap must be positive")

    @property
    def t_valve_max(self) -> float:
        """Longest possible valve transition, (a_max - a_min) / |kappa|."""
        return (self.a_max - self.a_min) / self.kappa_mag

    def replace(self, **changes) -> "PlanParams":
        data = asdict(self)
        data.update(changes)
        return PlanParams(**data)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ValveTransition:
    a_prev: float
    a_next: float
    kappa: float
    t_valve: float

    @classmethod
    def build(cls, a_prev, a_next, kappa_mag):
        diff = a_next - a_prev
        kappa = math.copysign(kappa_mag, diff) if diff != 0 else kappa_mag
        return cls(a_prev, a_next, kappa, abs(diff) / kappa_mag)

    def alpha(self, t_fail):
        """Deceleration frozen by a failure at ``t_fail``."""
        if t_fail >= self.t_valve:
            return self.a_next
        return self.a_prev + self.kappa * max(t_fail, 0.0)


@dataclass(frozen=True)
class StopPoint:
    t_stop: float
    s_stop: float


def stop_point(v0, t_fail, a) -> StopPoint:
    if a >= 0:
        raise ParameterError(f"deceleration must be negative, got {a}")
    return StopPoint(t_fail - v0 / a, v0 * t_fail - v0 * v0 / (2.0 * a))


def sigma_single(t, v0, t_fail, a):
    """Arc length at ``t`` for cruising at ``v0`` until ``t_fail``, then braking with ``a``."""
    if a >= 0:
        raise ParameterError(f"deceleration must be negative, got {a}")
    if t <= t_fail:
        return v0 * t
    t_stop = t_fail - v0 / a
    if t >= t_stop:
        return v0 * t_fail - v0 * v0 / (2.0 * a)
    dt = t - t_fail
    return v0 * t + 0.5 * a * dt * dt


def sigma_B(t, t_fail, params: PlanParams, vt: ValveTransition):
    """Trajectory of a failure during the valve transition (exact, cubic term kept)."""
    if not (0.0 <= t_fail <= vt.t_valve):
        raise ParameterError(f"t_fail={t_fail} outside transition [0, {vt.t_valve}]")
    return sigma_single(t, params.v0, t_fail, params.a_prev + vt.kappa * t_fail)


def sigma_C(t, t_fail, params: PlanParams, a_next):
    """Trajectory of a failure after the valve reached ``a_next``."""
    if a_next >= 0:
        raise ParameterError(f"a_next must be negative, got {a_next}")
    return sigma_single(t, params.v0, t_fail, a_next)


def _sigma_vec(t, v0, t_fail, a):
    t = np.asarray(t, dtype=float)
    t_stop = t_fail - v0 / a
    moving = v0 * t + 0.5 * a * (t - t_fail) ** 2
    out = np.where(t >= t_stop, v0 * t_fail - v0 * v0 / (2.0 * a), moving)
    return np.where(t <= t_fail, v0 * t, out)


def envelope(params: PlanParams, t, a_lo=None, a_hi=None):
    """Lower and upper bound of every post-failure position at times ``t``.

    Positions grow with the failure time and with gentler deceleration,
    so the earliest failure braking with the strongest deceleration and
    the latest failure braking with the gentlest one bound all
    trajectories of the cycle.  ``a_lo``/``a_hi`` narrow the deceleration
    range (e.g. after a braking-distance cap); ``a_prev`` is always
    included because transition failures brake with it.
    """
    a_lo = params.a_min if a_lo is None else a_lo
    a_hi = params.a_max if a_hi is None else a_hi
    a_lo = min(a_lo, params.a_prev)
    a_hi = max(a_hi, params.a_prev)
    t = np.asarray(t, dtype=float)
    lower = _sigma_vec(t, params.v0, 0.0, a_lo)
    last_fail = np.minimum(t, params.dt_plan)
    upper = np.array([sigma_single(ti, params.v0, lf, a_hi) for ti, lf in
                      zip(np.atleast_1d(t), np.atleast_1d(last_fail))]).reshape(t.shape)
    return lower, upper
