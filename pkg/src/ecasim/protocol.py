"""Per-node contention state machines.

Implements classic binary-exponential-backoff CSMA/CA and CSMA/ECA, where
a successful transmission switches the node to a deterministic backoff so
that successful contenders settle into non-colliding slots. Optional
extensions: Hysteresis (keep the backoff stage across successes), Fair
Share / maximum aggregation (A-MPDU bursts sized by the stage), stickiness
(tolerate failures without abandoning the deterministic schedule) and
Schedule Reset (bitmap detection of a smaller empty sub-schedule).

All transitions mutate the given NodeState in place and return it; they
are deterministic given the injected random source.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

from .params import BackoffParams


class Base(Enum):
    CSMA_CA = "csma_ca"
    CSMA_ECA = "csma_eca"


class Aggregation(Enum):
    NONE = "none"
    FAIR_SHARE = "fs"
    MAX_AG = "maxag"


class ScheduleResetMode(Enum):
    OFF = "off"
    CONSERVATIVE = "conservative"
    AGGRESSIVE = "aggressive"


class ResetScope(Enum):
    FULL = "full"
    HALVING = "halving"


class BackoffMode(Enum):
    RANDOM = "random"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class ProtocolVariant:
    base: Base = Base.CSMA_ECA
    hysteresis: bool = False
    aggregation: Aggregation = Aggregation.NONE
    schedule_reset: ScheduleResetMode = ScheduleResetMode.OFF
    reset_scope: ResetScope = ResetScope.FULL
    dynamic_stickiness: bool = False

    def __post_init__(self):
        if self.base is Base.CSMA_CA:
            if self.hysteresis or self.aggregation is not Aggregation.NONE \
                    or self.schedule_reset is not ScheduleResetMode.OFF:
                raise ValueError("hysteresis, aggregation and schedule reset "
                                 "require the enhanced-collision-avoidance base")
        if self.schedule_reset is not ScheduleResetMode.OFF and not self.hysteresis:
            raise ValueError("schedule reset requires hysteresis")

    @property
    def label(self) -> str:
        parts = [self.base.value]
        if self.hysteresis:
            parts.append("hys")
        if self.aggregation is not Aggregation.NONE:
            parts.append(self.aggregation.value)
        if self.schedule_reset is not ScheduleResetMode.OFF:
            parts.append("sr_aggr" if self.schedule_reset is ScheduleResetMode.AGGRESSIVE
                         else "sr_cons")
            parts.append("halv" if self.reset_scope is ResetScope.HALVING else "full")
        if self.dynamic_stickiness:
            parts.append("dynstick")
        return "+".join(parts)


def parse_variant(label: str) -> ProtocolVariant:
    """Build a variant from a '+'-separated label, e.g. csma_eca+hys+fs."""
    tokens = [t.strip() for t in label.split("+") if t.strip()]
    if not tokens:
        raise ValueError("empty protocol label")
    try:
        base = Base(tokens[0])
    except ValueError:
        raise ValueError(f"unknown protocol base {tokens[0]!r}") from None
    kwargs = dict(base=base)
    for tok in tokens[1:]:
        if tok == "hys":
            kwargs["hysteresis"] = True
        elif tok == "fs":
            kwargs["aggregation"] = Aggregation.FAIR_SHARE
        elif tok == "maxag":
            kwargs["aggregation"] = Aggregation.MAX_AG
        elif tok == "sr_cons":
            kwargs["schedule_reset"] = ScheduleResetMode.CONSERVATIVE
        elif tok == "sr_aggr":
            kwargs["schedule_reset"] = ScheduleResetMode.AGGRESSIVE
        elif tok == "halv":
            kwargs["reset_scope"] = ResetScope.HALVING
        elif tok == "full":
            kwargs["reset_scope"] = ResetScope.FULL
        elif tok == "dynstick":
            kwargs["dynamic_stickiness"] = True
        else:
            raise ValueError(f"unknown protocol flag {tok!r}")
    return ProtocolVariant(**kwargs)


# Canonical variants used throughout the experiments
CSMA_CA = ProtocolVariant(base=Base.CSMA_CA)
CSMA_ECA = ProtocolVariant(base=Base.CSMA_ECA)
ECA_HYS = ProtocolVariant(base=Base.CSMA_ECA, hysteresis=True)
ECA_HYS_FS = ProtocolVariant(base=Base.CSMA_ECA, hysteresis=True,
                             aggregation=Aggregation.FAIR_SHARE)
ECA_HYS_MAXAG = ProtocolVariant(base=Base.CSMA_ECA, hysteresis=True,
                                aggregation=Aggregation.MAX_AG)


@dataclass
class ScheduleResetState:
    """Observation window between a node's own transmissions.

    ``bitmap`` is an integer bit-field of size ``b_d + 1``: bit 0 is the
    node's own transmission slot, bits 1..b_d the overheard slots. A bit
    is set once the matching slot was ever busy during the window.
    """
    b_d: int
    gamma: int
    bitmap: int = 0
    t: int = 1
    cycles: int = 0


@dataclass
class PacketDropDirective:
    """Retry limit hit: discard this many head-of-queue packets."""
    count: int


@dataclass
class NodeState:
    id: int
    default_stickiness: int = 0
    k: int = 0                      # backoff stage
    k_c: int = 0                    # stage at contention start (drop sizing)
    r: int = 0                      # retransmission attempts
    B: int = 0                      # remaining backoff slots
    mode: BackoffMode = BackoffMode.RANDOM
    stickiness: int = 0
    sx_tx: int = 0                  # consecutive successes
    sr: Optional[ScheduleResetState] = None
    pending_sr_change: Optional[Tuple[int, int]] = None   # (old_k, new_k)
    queue: object = None

    def __post_init__(self):
        self.stickiness = self.default_stickiness


def draw_random_backoff(k: int, params: BackoffParams, rng) -> int:
    """Uniform draw on [0, 2^k * cw_min - 1]; consumes one rng value."""
    return int(rng.integers(0, params.cw(k)))


def deterministic_backoff(k: int, params: BackoffParams) -> int:
    """Expected value of the stage-k random backoff: ceil(CW(k)/2) - 1."""
    return -(-params.cw(k) // 2) - 1


def batch_size(node: NodeState, variant: ProtocolVariant,
               params: BackoffParams) -> int:
    """Packets aggregated in the next attempt, limited by the buffer."""
    qlen = len(node.queue)
    if qlen < 1:
        raise ValueError("node must not contend with an empty queue")
    if variant.aggregation is Aggregation.FAIR_SHARE:
        return min(1 << node.k, qlen)
    if variant.aggregation is Aggregation.MAX_AG:
        return min(1 << params.m, qlen)
    return 1


def apply_clock_drift(b: int, p_cd: float, rng) -> int:
    """Miscount the assigned backoff by one slot with probability p_cd."""
    if not 0.0 <= p_cd <= 1.0:
        raise ValueError("p_cd must lie in [0, 1]")
    if p_cd == 0.0:
        return b
    u = rng.random()
    if u < p_cd / 2:
        return b + 1
    if u < p_cd:
        return max(b - 1, 0)
    return b


def on_success(node: NodeState, variant: ProtocolVariant,
               params: BackoffParams, rng) -> NodeState:
    """Acknowledged attempt: schedule the next one."""
    node.r = 0
    node.pending_sr_change = None      # a post-reduction success confirms it
    node.sx_tx += 1
    if variant.base is Base.CSMA_CA:
        node.k = 0
        node.B = draw_random_backoff(0, params, rng)
        node.mode = BackoffMode.RANDOM
    else:
        if not variant.hysteresis:
            node.k = 0
        node.B = deterministic_backoff(node.k, params)
        node.mode = BackoffMode.DETERMINISTIC
        node.stickiness = node.default_stickiness
    node.k_c = node.k
    return node


def on_failure(node: NodeState, variant: ProtocolVariant,
               params: BackoffParams, rng) -> Optional[PacketDropDirective]:
    """Collision or channel-corrupted attempt (indistinguishable here).

    Returns a drop directive when the retry limit is reached.
    """
    node.sx_tx = 0
    node.sr = None
    if node.pending_sr_change is not None:
        # Reverse the schedule reduction before handling the failure.
        node.k = node.pending_sr_change[0]
        node.pending_sr_change = None
    if variant.base is Base.CSMA_ECA and node.stickiness > 0:
        node.stickiness -= 1
        node.B = deterministic_backoff(node.k, params)
        return None
    node.r += 1
    node.k = min(node.k + 1, params.m)
    node.B = draw_random_backoff(node.k, params, rng)
    node.mode = BackoffMode.RANDOM
    if node.r < params.retry_limit:
        return None
    # Retry limit: discard the batch this contention started with.
    if variant.aggregation is Aggregation.FAIR_SHARE:
        count = 1 << node.k_c
    elif variant.aggregation is Aggregation.MAX_AG:
        count = 1 << params.m
    else:
        count = 1
    node.r = 0
    if variant.base is Base.CSMA_CA or not variant.hysteresis:
        node.k = 0
        node.B = draw_random_backoff(0, params, rng)
    node.k_c = node.k
    return PacketDropDirective(count)


def on_new_contention(node: NodeState, params: BackoffParams, rng) -> NodeState:
    """Queue went empty -> non-empty: restart contention from stage zero."""
    node.r = 0
    node.k = 0
    node.k_c = 0
    node.B = draw_random_backoff(0, params, rng)
    node.mode = BackoffMode.RANDOM
    node.sx_tx = 0
    node.sr = None
    node.pending_sr_change = None
    return node


# --- Schedule Reset ---------------------------------------------------------

def sr_threshold(variant: ProtocolVariant, params: BackoffParams, b_d: int) -> int:
    """Consecutive-success cycles observed before evaluating the bitmap."""
    if variant.schedule_reset is ScheduleResetMode.AGGRESSIVE:
        return 1
    c = -(-params.cw(params.m) // 2) - 1
    return -(-c // b_d)


def sr_observe(node: NodeState, slot_busy: bool) -> NodeState:
    """Record one overheard slot into the window bitmap."""
    sr = node.sr
    if sr is None:
        return node
    if slot_busy:
        sr.bitmap |= 1 << sr.t
    sr.t += 1
    if sr.t > sr.b_d:
        sr.t = 0
    return node


def sr_evaluate(bitmap: int, k: int, cw_min: int, b_d: int,
                scope: ResetScope) -> Optional[int]:
    """Smallest stage whose transmission slots are all empty in the bitmap.

    Pure function: candidates j < k are tested smallest-first (or only
    j = k-1 under halving); candidate j needs bits y, 2y, ... below
    b_d + 1 clear, with y = ceil(2^j * cw_min / 2).
    """
    candidates = range(k) if scope is ResetScope.FULL else range(max(k - 1, 0), k)
    for j in candidates:
        y = -(-((1 << j) * cw_min) // 2)
        if all(not (bitmap >> t) & 1 for t in range(y, b_d + 1, y)):
            return j
    return None


def sr_on_success(node: NodeState, variant: ProtocolVariant,
                  params: BackoffParams) -> bool:
    """Window bookkeeping at a successful transmission.

    Starts/advances the observation window and, once the threshold of
    complete cycles is reached, evaluates the bitmap. An accepted
    reduction takes effect for the backoff just assigned; it stays
    revertible (pending) until the next attempt confirms or cancels it.
    Returns True when a reduction was applied.
    """
    if variant.schedule_reset is ScheduleResetMode.OFF:
        return False
    b_d = deterministic_backoff(node.k, params)
    sr = node.sr
    if sr is None or sr.b_d != b_d:
        node.sr = ScheduleResetState(
            b_d=b_d, gamma=sr_threshold(variant, params, b_d))
        return False
    sr.cycles += 1
    sr.t = 1
    if sr.cycles < sr.gamma:
        return False
    new_stage = sr_evaluate(sr.bitmap, node.k, params.cw_min, sr.b_d,
                            variant.reset_scope)
    node.sx_tx = 0
    node.sr = None
    if new_stage is None:
        return False
    node.pending_sr_change = (node.k, new_stage)
    node.k = new_stage
    node.B = deterministic_backoff(new_stage, params)
    if variant.dynamic_stickiness:
        node.stickiness = node.default_stickiness + 1
    return True
