"""Anchor-dependent convex upper bounds on the minimal computation time.

The minimal computation time is non-convex in (f, R) because its S2 and S3
branches carry a term of the form f / (linear in f, R).  Bounding that term
through the first-order lower bound on 1/(x*y) at a positive anchor yields,
per regime, a convex function that majorizes the true latency everywhere
and touches it at the anchor.  These majorants define the convex inner
problem of the alternating solver; re-anchoring at each solution drives the
outer objective monotonically down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compute import ComputeParams, RegionLabel, classify_region, region_time

_REGION_CODE = {RegionLabel.S1: 1, RegionLabel.S2: 2, RegionLabel.S3: 3, RegionLabel.S4: 4}


@dataclass(frozen=True)
class SurrogateAnchor:
    """A strictly positive expansion point with its latency regime."""

    f0: float
    r0: float
    region: RegionLabel

    def __post_init__(self):
        if self.f0 <= 0.0 or self.r0 <= 0.0:
            raise ValueError("anchors must have strictly positive components")

    @classmethod
    def at(cls, f0: float, r0: float, d: float, params: ComputeParams) -> "SurrogateAnchor":
        return cls(f0=f0, r0=r0, region=classify_region(f0, r0, d, params))


def inverse_product_bound(x: float, y: float, x0: float, y0: float) -> float:
    """First-order lower bound on 1/(x*y) at (x0, y0).

    Returns (3 - x/x0 - y/y0) / (x0*y0), which never exceeds 1/(x*y) on the
    positive orthant and matches it exactly at the expansion point.
    """
    if min(x, y, x0, y0) <= 0.0:
        raise ValueError("all arguments must be positive")
    return (3.0 - x / x0 - y / y0) / (x0 * y0)


def convex_time_s2(f, r, anchor: SurrogateAnchor, d: float, params: ComputeParams):
    """Convex majorant of the S2-regime latency, tangent at the anchor."""
    a, b, rho = params.alpha, params.beta, params.rho
    delay = params.relay_delay
    w = rho * f + (a - b) * r
    w0 = rho * anchor.f0 + (a - b) * anchor.r0
    k = rho * a * delay / (a - b) * anchor.f0 / w0
    return rho * a * d / w + a * delay / (a - b) - k * (3.0 - anchor.f0 / f - w / w0)


def convex_time_s3(f, r, anchor: SurrogateAnchor, d: float, params: ComputeParams):
    """Convex majorant of the S3-regime latency, tangent at the anchor."""
    a = params.alpha
    delay = params.relay_delay
    v = f + a * r
    v0 = anchor.f0 + a * anchor.r0
    k = delay * anchor.f0 / v0
    return a * d / v + delay - k * (3.0 - anchor.f0 / f - v / v0)


def convex_compute_time(f, r, anchor: SurrogateAnchor, d: float, params: ComputeParams):
    """Convex upper bound on min_compute_time, equal to it at the anchor.

    The branch is picked by the anchor's regime, not the query point: S1 and
    S2 anchors use max(S1 latency, S2 majorant), S3 anchors the S3 majorant,
    S4 anchors the exact S4 latency (already convex).
    """
    if anchor.region in (RegionLabel.S1, RegionLabel.S2):
        t1 = region_time(RegionLabel.S1, f, r, d, params)
        return np.maximum(t1, convex_time_s2(f, r, anchor, d, params))
    if anchor.region is RegionLabel.S3:
        return convex_time_s3(f, r, anchor, d, params)
    return region_time(RegionLabel.S4, f, r, d, params)


def surrogate_batch(
    f: np.ndarray,
    r: np.ndarray,
    f0: np.ndarray,
    r0: np.ndarray,
    codes: np.ndarray,
    d: np.ndarray,
    params: ComputeParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value and partial derivatives of the majorant for a vector of loops.

    ``codes`` holds the anchors' regime numbers (1..4).  Used by the solver,
    which needs gradients; all inputs are broadcast-compatible arrays with
    f > 0 wherever a regime 1..3 anchor divides by it.
    """
    a, b, rho = params.alpha, params.beta, params.rho
    delay = params.relay_delay
    val = np.zeros_like(f)
    dfv = np.zeros_like(f)
    drv = np.zeros_like(f)

    m12 = codes <= 2
    if m12.any():
        w = rho * f + (a - b) * r
        w0 = rho * f0 + (a - b) * r0
        k = rho * a * delay / (a - b) * f0 / w0
        t2 = rho * a * d / w + a * delay / (a - b) - k * (3.0 - f0 / f - w / w0)
        d2f = -rho * rho * a * d / (w * w) - k * (f0 / (f * f) - rho / w0)
        d2r = -(a - b) * rho * a * d / (w * w) + k * (a - b) / w0
        t1 = b * d / (b * r + (1.0 - rho) * f) + delay
        den1 = b * r + (1.0 - rho) * f
        d1f = -(1.0 - rho) * b * d / (den1 * den1)
        d1r = -b * b * d / (den1 * den1)
        use1 = t1 >= t2
        val = np.where(m12, np.where(use1, t1, t2), val)
        dfv = np.where(m12, np.where(use1, d1f, d2f), dfv)
        drv = np.where(m12, np.where(use1, d1r, d2r), drv)

    m3 = codes == 3
    if m3.any():
        v = f + a * r
        v0 = f0 + a * r0
        k = delay * f0 / v0
        t3 = a * d / v + delay - k * (3.0 - f0 / f - v / v0)
        d3f = -a * d / (v * v) - k * (f0 / (f * f) - 1.0 / v0)
        d3r = -a * a * d / (v * v) + k * a / v0
        val = np.where(m3, t3, val)
        dfv = np.where(m3, d3f, dfv)
        drv = np.where(m3, d3r, drv)

    m4 = codes == 4
    if m4.any():
        val = np.where(m4, a * d / f, val)
        dfv = np.where(m4, -a * d / (f * f), dfv)
        drv = np.where(m4, 0.0, drv)
    return val, dfv, drv


def anchor_codes(anchors) -> np.ndarray:
    """Regime numbers of a sequence of anchors, as an int array."""
    return np.array([_REGION_CODE[an.region] for an in anchors], dtype=int)
