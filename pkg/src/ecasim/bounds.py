"""Closed-form throughput bounds for the deterministic-backoff schedule.

The ideal collision-free network uses the shortest schedule C = 2^k*B_d+1
that fits N contenders, with k = ceil(log2(N/(B_d+1))) and B_d the
stage-zero deterministic backoff. Above capacity, h = 2N - C nodes sit at
stage k and the rest one stage below. Airtime comes from the same
tx_duration used by the simulator, so bounds and simulation share T(l).
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

from .channel import tx_duration
from .params import BackoffParams, DEFAULT_PAYLOAD_BITS, PhyParams, US_PER_S
from .protocol import deterministic_backoff

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundsResult:
    n: int
    k: int
    c: int                  # schedule length in slots
    h: int                  # nodes at stage k (clamped into [0, n])
    h_clamped: bool
    lower_bps: float
    upper_bps: float
    max_agg_bps: float


def schedule_params(n: int, backoff: BackoffParams):
    """Ideal schedule (k, C, h) for n contenders; h clamped into [0, n]."""
    if n < 1:
        raise ValueError("need at least one contender")
    b_d = deterministic_backoff(0, backoff)
    if n <= b_d + 1:
        return 0, b_d + 1, n, False
    k = max(0, math.ceil(math.log2(n / (b_d + 1))))
    c = (1 << k) * b_d + 1
    h = n - (c - n)
    clamped = not 0 <= h <= n
    if clamped:
        log.warning("ideal-schedule h=%d outside [0, %d] at N=%d; clamping",
                    h, n, n)
        h = min(max(h, 0), n)
    return k, c, h, clamped


def stage_throughputs(n: int, h: int, k: int, c: int, l_k: int, l_k1: int,
                      payload_bits: int, backoff: BackoffParams,
                      phy: PhyParams, k_term: str = "k"):
    """Per-node throughput (bits/s) at stage k and stage k-1.

    ``k_term`` selects the multiplier of the T(l_k)/2 term in the lower
    stage's cycle: the stage index ("k", verbatim) or the stage-k node
    count ("h").
    """
    if l_k < 1 or l_k1 < 1:
        raise ValueError("aggregation levels must be >= 1")
    t_k = tx_duration(l_k, payload_bits, phy)
    t_k1 = tx_duration(l_k1, payload_bits, phy)
    empty = phy.sigma_e * max(c - n, 0)
    den_k = h * t_k + 2 * (n - h) * t_k1 + empty
    if den_k <= 0:
        raise ValueError("degenerate schedule: empty stage-k cycle")
    s_k = l_k * payload_bits / den_k * US_PER_S
    if n == h:
        return s_k, 0.0
    mult = k if k_term == "k" else h
    den_k1 = (n - h) * t_k1 + mult * t_k / 2
    if den_k1 <= 0:
        raise ValueError("degenerate schedule: empty stage-(k-1) cycle")
    s_k1 = l_k1 * payload_bits / den_k1 * US_PER_S
    return s_k, s_k1


def _system_throughput(n, k, c, h, l_k, l_k1, payload_bits, backoff, phy,
                       k_term):
    s_k, s_k1 = stage_throughputs(n, h, k, c, l_k, l_k1, payload_bits,
                                  backoff, phy, k_term)
    if h == n:
        return n * s_k
    return h * s_k + (n - h) * s_k1


def bounds_for(n: int, backoff: BackoffParams = BackoffParams(),
               phy: PhyParams = PhyParams(),
               payload_bits: int = DEFAULT_PAYLOAD_BITS,
               k_term: str = "k") -> BoundsResult:
    """Lower, upper and maximum-aggregation throughput at n contenders."""
    k, c, h, clamped = schedule_params(n, backoff)
    l_max = 1 << backoff.m
    lower = _system_throughput(n, k, c, h, 1 << k, max(1 << k >> 1, 1),
                               payload_bits, backoff, phy, k_term)
    # Upper bound: every node forced to the maximum stage.
    b_d = deterministic_backoff(0, backoff)
    c_m = (1 << backoff.m) * b_d + 1
    upper = _system_throughput(n, backoff.m, c_m, n, l_max, l_max,
                               payload_bits, backoff, phy, k_term)
    max_agg = _system_throughput(n, k, c, h, l_max, l_max, payload_bits,
                                 backoff, phy, k_term)
    return BoundsResult(n=n, k=k, c=c, h=h, h_clamped=clamped,
                        lower_bps=lower, upper_bps=upper,
                        max_agg_bps=max_agg)


def bound_curves(n_range: Sequence[int],
                 backoff: BackoffParams = BackoffParams(),
                 phy: PhyParams = PhyParams(),
                 payload_bits: int = DEFAULT_PAYLOAD_BITS,
                 k_term: str = "k") -> List[BoundsResult]:
    if not len(n_range):
        raise ValueError("n_range must not be empty")
    return [bounds_for(n, backoff, phy, payload_bits, k_term)
            for n in n_range]
