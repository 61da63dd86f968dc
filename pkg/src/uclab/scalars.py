"""Closed-form scalar building blocks.

Everything here is a pure function of one or two numbers in the unit
interval: the binary Shannon entropy H (in nats throughout), the union map
(p, q) -> p + q - pq for independent events, the golden-ratio threshold
(3 - sqrt(5))/2, the piecewise lower-bound factor for the ratio of union
entropy to single-sample entropy, and the auxiliary quantities driving the
monotonicity analysis of that bound: F(s) = H(s^2)/(s H(s)), the strictly
positive gap 2 s H(s) - H(s^2), and closed forms for the third derivatives
of s -> H(s^2) and s -> s H(s).

All entropies are natural-log; every statement consumed downstream is a
ratio or an inequality, so the base drops out, and nats keep the derivative
formulas free of log-base constants.
"""

from __future__ import annotations

import math

import numpy as np

# (3 - sqrt(5))/2: the unique p in (0, 1/2) with H(p) = H(2p - p^2).
GOLDEN_THRESHOLD = (3.0 - math.sqrt(5.0)) / 2.0

# Golden ratio (1 + sqrt(5))/2, equal to 2/(sqrt(5) - 1).
PHI = (1.0 + math.sqrt(5.0)) / 2.0


def _check_unit_interval(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _check_open_unit_interval(x, name):
    arr = _check_unit_interval(x, name)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError(f"{name} must lie strictly inside (0, 1)")
    return arr


def _scalar_in(x) -> bool:
    return np.ndim(x) == 0


def binary_entropy(p):
    """Entropy of a Bernoulli(p) variable in nats, with the 0*log 0 = 0 convention.

    Accepts a float or ndarray in [0, 1]; the endpoint values are exactly 0
    rather than left to floating point.  log1p is used for the (1-p) factor
    so accuracy is preserved near both endpoints.
    """
    arr = _check_unit_interval(p, "p")
    flat = np.atleast_1d(arr).copy()
    out = np.zeros_like(flat)
    inner = (flat > 0.0) & (flat < 1.0)
    q = flat[inner]
    out[inner] = -q * np.log(q) - (1.0 - q) * np.log1p(-q)
    if _scalar_in(p):
        return float(out[0])
    return out.reshape(arr.shape)


def union_prob(p, q):
    """Probability that an element lies in the union of two independent draws.

    Returns p + q - pq, clipped into [0, 1] to absorb roundoff.  Commutative,
    with 0 as identity and 1 absorbing.
    """
    a = _check_unit_interval(p, "p")
    b = _check_unit_interval(q, "q")
    r = np.clip(a + b - a * b, 0.0, 1.0)
    if _scalar_in(p) and _scalar_in(q):
        return float(r)
    return r


def golden_threshold() -> float:
    """The constant (3 - sqrt(5))/2, approximately 0.382."""
    return GOLDEN_THRESHOLD


def entropy_ratio_bound(u, limit: bool = False) -> float:
    """Sharp lower-bound factor for union entropy relative to single-sample entropy.

    For a maximal inclusion probability u this is H(2u - u^2)/H(u) at or
    below the golden threshold and (1 - u) * PHI above it; both branches
    equal 1 exactly at the threshold.  Plain calls reject u in {0, 1}; with
    limit=True the documented limit values are returned instead (2.0 as
    u -> 0, and 0.0 at u = 1).
    """
    u = float(u)
    if not math.isfinite(u) or u < 0.0 or u > 1.0:
        raise ValueError("u must lie in [0, 1]")
    if u == 0.0 or u == 1.0:
        if limit:
            return 2.0 if u == 0.0 else 0.0
        raise ValueError("u must lie strictly inside (0, 1); pass limit=True for the limit value")
    if u <= GOLDEN_THRESHOLD:
        return binary_entropy(union_prob(u, u)) / binary_entropy(u)
    return (1.0 - u) * PHI


def entropy_square_ratio(s):
    """The ratio F(s) = H(s^2) / (s H(s)) on (0, 1).

    Strictly between PHI and 2: it decreases to its minimum PHI at
    s = 1/PHI = (sqrt(5) - 1)/2 and increases back toward 2 at both ends.
    """
    arr = _check_open_unit_interval(s, "s")
    val = binary_entropy(arr * arr) / (arr * binary_entropy(arr))
    if _scalar_in(s):
        return float(val)
    return val


def entropy_square_gap(s):
    """The strictly positive gap 2 s H(s) - H(s^2) on (0, 1)."""
    arr = _check_open_unit_interval(s, "s")
    val = 2.0 * arr * binary_entropy(arr) - binary_entropy(arr * arr)
    if _scalar_in(s):
        return float(val)
    return val


def d3_entropy_of_square(s):
    """Third derivative of s -> H(s^2): (-4 - 4 s^2) / (s (1 - s^2)^2).

    Negative everywhere on (0, 1); endpoints rejected.
    """
    arr = _check_open_unit_interval(s, "s")
    val = (-4.0 - 4.0 * arr * arr) / (arr * (1.0 - arr * arr) ** 2)
    if _scalar_in(s):
        return float(val)
    return val


def d3_s_entropy(s):
    """Third derivative of s -> s H(s): (s - 2) / (s (1 - s)^2).

    Negative everywhere on (0, 1); endpoints rejected.
    """
    arr = _check_open_unit_interval(s, "s")
    val = (arr - 2.0) / (arr * (1.0 - arr) ** 2)
    if _scalar_in(s):
        return float(val)
    return val


def third_deriv_numerator(s, beta):
    """The cubic -4 - 4 s^2 - beta (s - 2)(1 + s)^2.

    Numerator of the third derivative of H(s^2) - beta * s H(s) over the
    common denominator s (1 - s^2)^2.  Defined for all real s; equals
    2 beta - 4 at s = 0, so it is negative there whenever beta < 2, which
    caps its number of roots in [0, 1] at two.
    """
    a = np.asarray(s, dtype=float)
    b = np.asarray(beta, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("s and beta must be finite")
    val = -4.0 - 4.0 * a * a - b * (a - 2.0) * (1.0 + a) ** 2
    if _scalar_in(s) and _scalar_in(beta):
        return float(val)
    return val
