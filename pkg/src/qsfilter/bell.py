"""Dispersion-free spin assignments on the sphere and their defects.

A hidden parameter lambda in [-1/2, 1/2] assigns a definite sign
s_lambda(e) to every spin direction e through the reflection-symmetric
partition

    S+_lambda(r) = [S+(r) \\ {e.r < 2 lambda}] u [S-(r) \\ {e.r >= -2 lambda}^c]

built from the hemispheres of r.  The uniform lambda-average of s_lambda(e)
recovers the linear quantum expectation e.r exactly; the pointwise
assignment, however, is discontinuous on the boundary circle e.r = 2 lambda,
and products of two assignments average to a non-affine function of r unless
the directions are colinear.  Both defects are exhibited constructively.

For fixed (e, r) the map lambda -> s_lambda(e) is a step function with a
single breakpoint at +-(e.r)/2, so breakpoint-aware quadrature integrates it
exactly.  Hemisphere membership at e.r = 0 is decided by an odd lexicographic
tie-break on e, keeping s_lambda(-e) = -s_lambda(e) on the equator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LAMBDA_MAX = 0.5
TIE_ATOL = 0.0  # ties are exact comparisons; measure-zero in lambda


def _unit(e, name: str = "e") -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if e.shape != (3,):
        raise ValueError(f"{name} must be a real 3-vector")
    n = np.linalg.norm(e)
    if abs(n - 1.0) > 1e-12:
        raise ValueError(f"{name} must be unit to 1e-12 (|{name}| = {n})")
    return e


def _check_lambda(lam: float) -> float:
    if abs(lam) > LAMBDA_MAX + 1e-15:
        raise ValueError("lambda must lie in [-1/2, 1/2]")
    return float(lam)


def _lex_sign(e: np.ndarray) -> int:
    for c in e:
        if c > 0:
            return 1
        if c < 0:
            return -1
    return 1


def s_lambda(e, lam: float, r) -> int:
    """Dispersion-free value of the spin projection along e, in {-1, +1}."""
    e = _unit(e)
    lam = _check_lambda(lam)
    r = np.asarray(r, dtype=float)
    u = float(e @ r)
    north = u > 0 or (u == 0 and _lex_sign(e) > 0)
    if north:
        return 1 if u >= 2.0 * lam else -1
    return 1 if u >= -2.0 * lam else -1


def chi_plus(e, lam: float, r) -> int:
    """Zero-one probability assigned to the event P(e): (1 + s_lambda(e))/2."""
    return (1 + s_lambda(e, lam, r)) // 2


def _segments(breaks) -> list[tuple[float, float]]:
    pts = sorted({-LAMBDA_MAX, LAMBDA_MAX, *(b for b in breaks if -LAMBDA_MAX < b < LAMBDA_MAX)})
    return [(a, b) for a, b in zip(pts[:-1], pts[1:]) if b > a]


def lambda_mean(e, r, method: str = "exact", n: int = 10 ** 6) -> float:
    """Uniform lambda-average of s_lambda(e); equals e.r.

    method="exact" integrates the step function piecewise between its
    breakpoints (+-u/2); method="midpoint" averages n midpoint nodes.
    """
    e = _unit(e)
    r = np.asarray(r, dtype=float)
    u = float(e @ r)
    if method == "exact":
        total = 0.0
        for a, b in _segments([u / 2.0, -u / 2.0]):
            total += s_lambda(e, 0.5 * (a + b), r) * (b - a)
        return total
    if method == "midpoint":
        nodes = (np.arange(n) + 0.5) / n - 0.5
        return float(np.mean([s_lambda(e, lam, r) for lam in nodes]))
    raise ValueError(f"unknown method {method!r}")


def second_moment(e, f, r, method: str = "exact", n: int = 10 ** 5) -> float:
    """Lambda-average of the product chi+_lambda(e) chi+_lambda(f)."""
    e = _unit(e, "e")
    f = _unit(f, "f")
    r = np.asarray(r, dtype=float)
    if method == "exact":
        ue, uf = float(e @ r), float(f @ r)
        total = 0.0
        for a, b in _segments([ue / 2.0, -ue / 2.0, uf / 2.0, -uf / 2.0]):
            mid = 0.5 * (a + b)
            total += chi_plus(e, mid, r) * chi_plus(f, mid, r) * (b - a)
        return total
    if method == "midpoint":
        nodes = (np.arange(n) + 0.5) / n - 0.5
        return float(np.mean([chi_plus(e, lam, r) * chi_plus(f, lam, r) for lam in nodes]))
    raise ValueError(f"unknown method {method!r}")


@dataclass
class DiscontinuityReport:
    has_boundary: bool
    base_direction: np.ndarray | None
    separations: list
    jumps: list          # |s(e+) - s(e-)| at each separation
    witnessed: bool


def boundary_direction(lam: float, r) -> np.ndarray | None:
    """A unit direction on the circle e.r = 2 lambda, or None if none exists."""
    lam = _check_lambda(lam)
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn == 0.0 or abs(2.0 * lam) > rn:
        return None
    r_hat = r / rn
    helper = np.array([1.0, 0.0, 0.0]) if abs(r_hat[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t_hat = np.cross(r_hat, helper)
    t_hat /= np.linalg.norm(t_hat)
    c = 2.0 * lam / rn
    return c * r_hat + math.sqrt(max(0.0, 1.0 - c * c)) * t_hat


def discontinuity_probe(lam: float, r, e=None,
                        separations=(1e-2, 1e-4, 1e-6, 1e-8)) -> DiscontinuityReport:
    """Exhibit a +-1 jump of s_lambda across the boundary circle e.r = 2 lambda
    at arbitrarily small angular separation; reports no boundary when
    |2 lambda| exceeds |r|."""
    lam = _check_lambda(lam)
    r = np.asarray(r, dtype=float)
    if e is None:
        e = boundary_direction(lam, r)
        if e is None:
            return DiscontinuityReport(has_boundary=False, base_direction=None,
                                       separations=[], jumps=[], witnessed=False)
    e = _unit(e)
    if abs(float(e @ r) - 2.0 * lam) > 1e-9:
        raise ValueError("probe direction does not lie on the boundary e.r = 2 lambda")
    rn = np.linalg.norm(r)
    r_hat = r / rn
    # in-plane tangent that tilts e toward/away from r
    axis = np.cross(e, r_hat)
    axn = np.linalg.norm(axis)
    if axn < 1e-13:
        raise ValueError("probe direction is a pole; boundary crossing is transverse only")
    axis /= axn
    tilt = np.cross(axis, e)  # unit, increases e.r
    jumps = []
    seps = []
    for delta in separations:
        ep = math.cos(delta) * e + math.sin(delta) * tilt
        em = math.cos(delta) * e - math.sin(delta) * tilt
        ep /= np.linalg.norm(ep)
        em /= np.linalg.norm(em)
        jumps.append(abs(s_lambda(ep, lam, r) - s_lambda(em, lam, r)))
        seps.append(2.0 * delta)
    return DiscontinuityReport(has_boundary=True, base_direction=e,
                               separations=seps, jumps=jumps,
                               witnessed=all(j == 2 for j in jumps))


@dataclass
class AffinityReport:
    alphas: list
    moments: list
    interpolation: list
    max_deviation: float


def affinity_sweep(e, f, r1, r2, alphas=(0.0, 0.25, 0.5, 0.75, 1.0)) -> AffinityReport:
    """Deviation of alpha -> second_moment(e, f, alpha r1 + (1-alpha) r2)
    from the straight line through its endpoints; zero iff the moment is
    affine along the segment."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    m1 = second_moment(e, f, r1)
    m2 = second_moment(e, f, r2)
    moments, interp = [], []
    for a in alphas:
        moments.append(second_moment(e, f, a * r1 + (1.0 - a) * r2))
        interp.append(a * m1 + (1.0 - a) * m2)
    dev = max(abs(m - i) for m, i in zip(moments, interp))
    return AffinityReport(alphas=list(alphas), moments=moments,
                          interpolation=interp, max_deviation=dev)


def fibonacci_directions(n: int) -> np.ndarray:
    """Deterministic quasi-uniform unit directions (Fibonacci sphere)."""
    i = np.arange(n)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / n
    theta = 2.0 * math.pi * i / golden
    s = np.sqrt(1.0 - z * z)
    dirs = np.stack([s * np.cos(theta), s * np.sin(theta), z], axis=1)
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
