"""Closed-form secrecy engine.

Combines the per-slot collision probability with the adversary's guessing
probability into the per-slot secret-bit probability, evaluates the binomial
probability of accumulating a full key, searches for the minimum number of
transmissions, and computes the privacy-region radius around a node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adversary import pg_closed_form
from .channel import delta_mean_pathloss
from .scenario import NODE_HALF_SPACING, Position

#: Collision probability of two fair one-in-two frequency choices.
COLLISION_PROB = 0.5

#: Distance tolerance (meters) below which the no-fading adversary is
#: treated as exactly equidistant.
DISTANCE_TOL = 1e-3

#: log-domain cutoff under which exp() underflows to zero at double precision.
_LOG_CUTOFF = 745.0


class InfeasibleError(Exception):
    """The requested target cannot be met for any admissible parameter value."""


class Probability(float):
    """A float constrained to [0, 1] on construction."""

    def __new__(cls, value: float) -> "Probability":
        v = float(value)
        if math.isnan(v) or not (0.0 <= v <= 1.0):
            raise ValueError(f"probability out of range: {value!r}")
        return super().__new__(cls, v)


@dataclass(frozen=True)
class KeyRequest:
    k: int  # key size, bits
    target: float = 0.99  # required success probability

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"key size must be a positive integer, got {self.k}")
        if not (0.0 < self.target < 1.0):
            raise ValueError(f"target must lie in (0, 1), got {self.target}")


@dataclass(frozen=True)
class PrivacyRegion:
    """Circle around a node outside which the key target is always met."""

    center: Position
    radius: float  # meters

    def __post_init__(self):
        if not (self.radius >= 0.0):
            raise ValueError(f"radius must be >= 0, got {self.radius}")


def secret_bit_prob(p_c: float, p_g: float) -> Probability:
    """Per-slot secret-bit probability: no collision and no correct guess."""
    return Probability((1.0 - Probability(p_c)) * (1.0 - Probability(p_g)))


def baseline_pg(d_ae: float, d_be: float, tol: float = DISTANCE_TOL) -> Probability:
    """No-fading guessing probability: 0 iff the adversary is equidistant."""
    if not (d_ae > 0.0 and d_be > 0.0):
        raise ValueError(f"distances must be positive, got {d_ae}, {d_be}")
    return Probability(0.0 if abs(d_ae - d_be) <= tol else 1.0)


def key_prob(k: int, n: int, p_b: float) -> Probability:
    """P(at least k successes in n slots), success probability p_b per slot.

    Binomial upper tail, evaluated from log-domain terms built by exact
    ratio recursion around the mode and compensated (fsum) summation; the
    in-window total self-normalizes the seed term. Exact 1 for k = 0 and
    exact 0 for k > n.
    """
    if not isinstance(k, int) or not isinstance(n, int):
        raise ValueError("k and n must be integers")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    p = float(Probability(p_b))
    if k == 0:
        return Probability(1.0)
    if k > n:
        return Probability(0.0)
    if p == 0.0:
        return Probability(0.0)
    if p == 1.0:
        return Probability(1.0)

    q = 1.0 - p
    log_p, log_q = math.log(p), math.log(q)
    mode = min(n, int((n + 1) * p))
    half_width = int(math.sqrt(2.0 * _LOG_CUTOFF * max(n * p * q, 1.0))) + 60
    while True:
        lo = max(0, mode - half_width)
        hi = min(n, mode + half_width)
        iu = np.arange(mode, hi, dtype=np.float64)
        log_up = np.cumsum(np.log((n - iu) / (iu + 1.0)) + (log_p - log_q))
        idn = np.arange(mode, lo, -1, dtype=np.float64)
        log_down = np.cumsum(np.log(idn / (n - idn + 1.0)) + (log_q - log_p))
        # log term_i relative to the mode term, for i = lo..hi
        logs = np.concatenate([log_down[::-1], [0.0], log_up])
        if (lo == 0 or logs[0] < -_LOG_CUTOFF) and (hi == n or logs[-1] < -_LOG_CUTOFF):
            break
        half_width *= 2

    if k > hi:
        return Probability(0.0)  # tail mass below double-precision resolution
    if k <= lo:
        return Probability(1.0)
    terms = np.exp(logs)
    total = math.fsum(terms.tolist())
    upper = math.fsum(terms[k - lo :].tolist())
    return Probability(min(upper / total, 1.0))


def min_transmissions(req: KeyRequest, p_b: float, max_n: int = 10**9) -> int:
    """Smallest n with key_prob(req.k, n, p_b) >= req.target.

    Doubling then binary search; the tail is monotone non-decreasing in n.
    """
    p = float(Probability(p_b))
    if p == 0.0:
        raise InfeasibleError("p_b = 0: no number of transmissions can generate a key")
    lo = req.k
    if key_prob(req.k, lo, p) >= req.target:
        return lo
    hi = lo
    while key_prob(req.k, hi, p) < req.target:
        lo = hi
        hi *= 2
        if hi > max_n:
            raise InfeasibleError(f"target {req.target} not reached below n = {max_n}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if key_prob(req.k, mid, p) >= req.target:
            hi = mid
        else:
            lo = mid
    return hi


def fading_pb(
    d_be: float,
    sigma: float,
    gamma: float = 3.5,
    d_ab: float = 2 * NODE_HALF_SPACING,
) -> Probability:
    """Per-slot secret-bit probability for the collinear deployment.

    The adversary sits d_be behind one node, hence d_ae = d_be + d_ab; her
    guessing probability is the pairwise-ML closed form.
    """
    if not (d_be > 0.0):
        raise ValueError(f"d_be must be positive, got {d_be}")
    delta = delta_mean_pathloss(d_be + d_ab, d_be, gamma)
    return secret_bit_prob(COLLISION_PROB, pg_closed_form(delta, sigma))


def privacy_radius(
    req: KeyRequest,
    n: int,
    sigma: float,
    gamma: float = 3.5,
    d_ab: float = 2 * NODE_HALF_SPACING,
    d_min: float = 1.0,
    tol: float = 1e-6,
) -> PrivacyRegion:
    """Smallest radius R such that every adversary distance above R meets
    the key target with n transmissions.

    Bisection on the adversary distance, exploiting that the secret-bit
    probability (and hence the key probability) is increasing in distance.
    Raises InfeasibleError when the target is unmet even for an arbitrarily
    remote adversary.
    """
    center = Position(d_ab / 2.0, 0.0)  # the node the adversary approaches
    if n < req.k:
        raise InfeasibleError(f"n = {n} transmissions cannot yield a {req.k}-bit key")

    def met(d_be: float) -> bool:
        return key_prob(req.k, n, fading_pb(d_be, sigma, gamma, d_ab)) >= req.target

    far = 1e12  # proxy for the d_be -> infinity limit
    if not met(far):
        raise InfeasibleError(
            f"target {req.target} unreachable for k={req.k}, n={n}, sigma={sigma}"
        )
    if met(d_min):
        return PrivacyRegion(center=center, radius=d_min)
    lo = d_min
    hi = 2.0 * d_min
    while not met(hi):
        lo = hi
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if met(mid):
            hi = mid
        else:
            lo = mid
    return PrivacyRegion(center=center, radius=hi)
