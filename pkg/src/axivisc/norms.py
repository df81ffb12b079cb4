"""Lebesgue, Lorentz and mixed norms of grid fields.

Lorentz norms go through the decreasing rearrangement of |f| with respect to
the cylindrical measure.  The discrete rearrangement is a step function, so
every t-integral in the L^{p,q} definition is evaluated in closed form per
constancy interval; in particular L^{p,p} coincides with L^p up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ScalarField

INF = math.inf


@dataclass(frozen=True)
class LorentzIndex:
    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 1 or (self.p == 1 and self.q == 1)):
            raise ValueError(f"invalid Lorentz index p={self.p}")
        if not (1 <= self.q <= INF):
            raise ValueError(f"invalid Lorentz index q={self.q}")
        if self.p == INF and self.q != INF:
            raise ValueError("L^{inf,q} with finite q is not supported")


@dataclass
class RearrangementProfile:
    """Step representation of f*: value values[k] on (cumulative[k-1], cumulative[k]]."""

    values: np.ndarray      # non-increasing
    measures: np.ndarray    # positive cell measures, same order
    cumulative: np.ndarray  # prefix sums of measures

    @property
    def total_measure(self) -> float:
        return float(self.cumulative[-1])


def rearrange(f: ScalarField) -> RearrangementProfile:
    """Decreasing rearrangement of |f| against the cylindrical cell measure."""
    vals = np.abs(f.values).ravel()
    meas = f.grid.cell_measure().ravel()
    # stable sort on the negated values: ties keep grid order
    order = np.argsort(-vals, kind="stable")
    v = vals[order]
    m = meas[order]
    return RearrangementProfile(v, m, np.cumsum(m))


def lebesgue_norm(f: ScalarField, p: float) -> float:
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    a = np.abs(f.values)
    if p == INF:
        return float(a.max())
    meas = f.grid.cell_measure()
    return float(np.sum((a ** p * meas).sum(axis=1)) ** (1.0 / p))


def lorentz_norm(f: ScalarField, idx) -> float:
    """L^{p,q} norm via closed-form integration of the step rearrangement."""
    if not isinstance(idx, LorentzIndex):
        idx = LorentzIndex(*idx)
    p, q = idx.p, idx.q
    if p == INF:
        return lebesgue_norm(f, INF)
    prof = rearrange(f)
    v = prof.values
    t = prof.cumulative
    nz = v > 0
    if not nz.any():
        return 0.0
    v = v[nz]
    t_hi = t[nz]
    t_lo = np.concatenate(([0.0], t[:-1]))[nz]
    if q == INF:
        # sup of t^{1/p} f*(t) on each interval sits at the right endpoint
        return float(np.max(t_hi ** (1.0 / p) * v))
    # each interval contributes v^q * (p/q) * (t_hi^{q/p} - t_lo^{q/p})
    e = q / p
    contrib = v ** q * (p / q) * (t_hi ** e - t_lo ** e)
    return float(np.sum(contrib) ** (1.0 / q))


def mixed_norm(f: ScalarField, p_h: float, p_v: float) -> float:
    """Outer norm over r of the per-row L^{p_v} norm in z.

    The vertical measure is plain dz; the horizontal measure for finite p_h
    is the cylindrical weight 2*pi*r*dr.
    """
    if p_h < 1 or p_v < 1:
        raise ValueError(f"need exponents >= 1, got ({p_h}, {p_v})")
    g = f.grid
    a = np.abs(f.values)
    if p_v == INF:
        inner = a.max(axis=1)
    else:
        inner = (np.sum(a ** p_v, axis=1) * g.dz) ** (1.0 / p_v)
    if p_h == INF:
        return float(inner.max())
    w = 2.0 * np.pi * g.r * g.dr
    return float(np.sum(inner ** p_h * w) ** (1.0 / p_h))
