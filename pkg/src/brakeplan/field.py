"""Penalty grid W(t, s) over prediction time and arc length.

Rows are time steps, columns are arc-length steps.  Both solvers read the
grid only at row times and interpolate linearly along s; outside the
column range the penalty is zero.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import FieldFormatError, ParameterError

__all__ = [
    "PenaltyField",
    "Band",
    "Zone",
    "ScenarioSpec",
    "TrajectoryFan",
    "sample",
    "generate_brownian",
    "generate_scenario",
    "read_csv",
    "write_csv",
    "render_pgm",
]


@dataclass(frozen=True)
class PenaltyField:
    """Immutable non-negative risk grid.

    Row ``i`` holds time ``t0 + i * dt_grid``; column ``j`` holds arc
    length ``j * ds_grid``.
    """

    values: np.ndarray
    dt_grid: float
    ds_grid: float
    t0: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 2:
            raise ParameterError("field values must be a 2-D array")
        if vals.shape[0] < 2 or vals.shape[1] < 2:
            raise ParameterError(f"field needs at least 2x2 cells, got {vals.shape}")
        if not (self.dt_grid > 0 and self.ds_grid > 0):
            raise ParameterError("dt_grid and ds_grid must be positive")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("field values must be finite")
        if np.any(vals < 0):
            raise ParameterError("field values must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "dt_grid", float(self.dt_grid))
        object.__setattr__(self, "ds_grid", float(self.ds_grid))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def n_s(self) -> int:
        return self.values.shape[1]

    @property
    def s_end(self) -> float:
        return (self.n_s - 1) * self.ds_grid

    @classmethod
    def zeros(cls, n_t, n_s, dt_grid, ds_grid):
        return cls(np.zeros((n_t, n_s)), dt_grid, ds_grid)

    @classmethod
    def constant(cls, value, n_t, n_s, dt_grid, ds_grid):
        return cls(np.full((n_t, n_s), float(value)), dt_grid, ds_grid)


def sample(field: PenaltyField, row: int, s: float) -> float:
    """Penalty density at grid row ``row`` and arc length ``s``.

    Linear in ``s`` between the bracketing columns, zero outside the grid.
    """
    if not 0 <= row < field.n_t:
        raise IndexError(f"row {row} outside [0, {field.n_t})")
    if s < 0.0 or s > field.s_end:
        return 0.0
    x = s / field.ds_grid
    j = min(int(x), field.n_s - 2)
    lam = x - j
    w = field.values[row]
    return float((1.0 - lam) * w[j] + lam * w[j + 1])


def generate_brownian(seed, n_t, n_s, dt_grid, ds_grid, smoothness=5) -> PenaltyField:
    """Random Brownian-sheet field normalized into [0, 1].

    Gaussian increments are accumulated along both axes, box-smoothed
    with a ``smoothness``-cell window and min-max normalized.
    """
    if n_t < 2 or n_s < 2:
        raise ParameterError(f"field dimensions must be >= 2, got {n_t}x{n_s}")
    if smoothness < 1:
        raise ParameterError("smoothness must be >= 1")
    rng = np.random.default_rng(seed)
    walk = rng.standard_normal((n_t, n_s)).cumsum(axis=0).cumsum(axis=1)
    if smoothness > 1:
        walk = uniform_filter(walk, size=int(smoothness), mode="nearest")
    walk -= walk.min()
    top = walk.max()
    if top > 0:
        walk /= top
    return PenaltyField(walk, dt_grid, ds_grid)


@dataclass
class Band:
    """Moving obstacle: center at ``s + speed * t``, full width ``width``."""

    s: float
    speed: float
    width: float
    weight: float = 1.0


@dataclass
class Zone:
    """Static forbidden-stop interval applied at every row."""

    s_lo: float
    s_hi: float
    weight: float = 1.0


@dataclass
class ScenarioSpec:
    bands: list = dc_field(default_factory=list)
    zones: list = dc_field(default_factory=list)
    n_t: int = 101
    n_s: int = 800
    dt_grid: float = 0.1
    ds_grid: float = 0.25
    clamp: float = 1.0

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        bands = [Band(**b) for b in data.pop("bands", [])]
        zones = [Zone(**z) for z in data.pop("zones", [])]
        return cls(bands=bands, zones=zones, **data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def generate_scenario(spec: ScenarioSpec) -> PenaltyField:
    """Rasterize bands and zones onto the grid and clamp the sum."""
    for item in list(spec.bands) + list(spec.zones):
        if item.weight < 0:
            raise ParameterError(f"negative weight in scenario: {item}")
    if spec.clamp <= 0:
        raise ParameterError("clamp must be positive")
    s = np.arange(spec.n_s) * spec.ds_grid
    t = np.arange(spec.n_t) * spec.dt_grid
    vals = np.zeros((spec.n_t, spec.n_s))
    # half-cell tolerance keeps interval ends that sit on a node inside
    eps = 1e-9 * spec.ds_grid
    for z in spec.zones:
        mask = (s >= z.s_lo - eps) & (s <= z.s_hi + eps)
        vals[:, mask] += z.weight
    for b in spec.bands:
        center = b.s + b.speed * t[:, None]
        half = 0.5 * b.width
        mask = (s[None, :] >= center - half - eps) & (s[None, :] <= center + half + eps)
        vals += b.weight * mask
    np.clip(vals, 0.0, spec.clamp, out=vals)
    return PenaltyField(vals, spec.dt_grid, spec.ds_grid)


_HEADER = re.compile(
    r"^#\s*t0=(?P<t0>\S+)\s+dt=(?P<dt>\S+)\s+ds=(?P<ds>\S+)\s+nt=(?P<nt>\d+)\s+ns=(?P<ns>\d+)\s*$"
)


def write_csv(field: PenaltyField, path) -> None:
    with open(path, "w") as fh:
        fh.write(
            f"# t0={field.t0!r} dt={field.dt_grid!r} ds={field.ds_grid!r} "
            f"nt={field.n_t} ns={field.n_s}\n"
        )
        for row in field.values:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_csv(path) -> PenaltyField:
    """Parse the ``# t0= dt= ds= nt= ns=`` CSV layout.

    Raises FieldFormatError naming the offending line.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FieldFormatError("empty file", line=1)
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise FieldFormatError(f"malformed header {lines[0]!r}", line=1)
    try:
        t0, dt, ds = float(m["t0"]), float(m["dt"]), float(m["ds"])
    except ValueError as exc:
        raise FieldFormatError(f"malformed header number: {exc}", line=1) from None
    nt, ns = int(m["nt"]), int(m["ns"])
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != nt:
        raise FieldFormatError(f"header declares nt={nt} but found {len(body)} data rows",
                               line=len(lines))
    vals = np.empty((nt, ns))
    for r, (lineno, ln) in enumerate(body):
        parts = ln.split(",")
        if len(parts) != ns:
            raise FieldFormatError(f"expected {ns} values, found {len(parts)}", line=lineno)
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise FieldFormatError(str(exc), line=lineno) from None
        for v in row:
            if not math.isfinite(v):
                raise FieldFormatError("non-finite value", line=lineno)
            if v < 0:
                raise FieldFormatError(f"negative value {v}", line=lineno)
        vals[r] = row
    try:
        return PenaltyField(vals, dt, ds, t0=t0)
    except ParameterError as exc:
        raise FieldFormatError(str(exc), line=1) from None


@dataclass
class TrajectoryFan:
    """Arc-length curves sampled at field rows, for overlay rendering.

    ``curves`` is a list of 1-D arrays; entry ``i`` of a curve is the
    position at row ``i`` (NaN where undefined).
    """

    curves: list

    @classmethod
    def for_plan(cls, params, a_next, n_rows, dt_grid, n_fail=9):
        from .kinematics import ValveTransition, sigma_single

        vt = ValveTransition.build(params.a_prev, a_next, params.kappa_mag)
        t = np.arange(n_rows) * dt_grid
        curves = []
        # set A: undisturbed motion until the last possible failure
        a_curve = np.where(t <= params.dt_plan, params.v0 * t, np.nan)
        curves.append(a_curve)
        for tf in np.linspace(0.0, params.dt_plan, n_fail):
            acc = vt.alpha(tf)
            curves.append(np.array([sigma_single(ti, params.v0, tf, acc) for ti in t]))
        return cls(curves)


def render_pgm(field: PenaltyField, path, overlay: TrajectoryFan | None = None) -> None:
    """Write an 8-bit binary PGM heat map, row 0 at the top."""
    img = np.clip(np.rint(255.0 * np.clip(field.values, 0.0, 1.0)), 0, 255).astype(np.uint8)
    if overlay is not None:
        for curve in overlay.curves:
            for row, s in enumerate(np.asarray(curve, dtype=float)[: field.n_t]):
                if not np.isfinite(s):
                    continue
                col = int(round(s / field.ds_grid))
                if 0 <= col < field.n_s:
                    img[row, col] = 255
    with open(path, "wb") as fh:
        fh.write(f"P5\n{field.n_s} {field.n_t}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def load_field(path) -> PenaltyField:
    return read_csv(Path(path))
