"""Slotted main loop driving contention, channel resolution and traffic.

Time advances slot by slot: a slot is empty (sigma_e) or carries one or
more transmissions whose airtime sets the slot duration. The backoff of
every backlogged non-transmitter counts down by one each slot, busy or
empty, so a node at deterministic backoff B_d transmits every B_d + 1
slots; that makes a schedule of C = B_d + 1 slots hold up to C contenders.

``run`` batches stretches of consecutive empty slots for speed; ``step``
executes exactly one slot. Both paths share the same slot logic and
produce identical results for identical seeds.
"""
import hashlib
import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .channel import SlotKind, SlotOutcome, resolve_slot
from .metrics import MetricsReport, NodeReport
from .params import (BackoffParams, DEFAULT_QUEUE_CAPACITY, PhyParams,
                     US_PER_S)
from .protocol import (Base, NodeState, ProtocolVariant, ScheduleResetMode,
                       apply_clock_drift, batch_size, on_failure,
                       on_new_contention, on_success, sr_observe,
                       sr_on_success)
from .traffic import ArrivalProcess, MacQueue, PoissonStream


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int = 2
    protocol_mix: Tuple[Tuple[ProtocolVariant, float], ...] = ()
    phy: PhyParams = PhyParams()
    backoff: BackoffParams = BackoffParams()
    traffic: ArrivalProcess = ArrivalProcess()
    p_e: float = 0.0
    p_cd: float = 0.0
    duration_s: float = 100.0
    seed: int = 1
    runs: int = 20
    default_stickiness: int = 1
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    trace: bool = False

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if not self.protocol_mix:
            raise ValueError("protocol_mix must not be empty")
        if abs(sum(f for _, f in self.protocol_mix) - 1.0) > 1e-9:
            raise ValueError("protocol mix fractions must sum to 1")
        if any(f < 0 for _, f in self.protocol_mix):
            raise ValueError("protocol mix fractions must be non-negative")
        for name in ("p_e", "p_cd"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.default_stickiness < 0:
            raise ValueError("stickiness must be non-negative")

    def node_variants(self) -> List[ProtocolVariant]:
        """Deterministic node-to-protocol assignment (largest remainder)."""
        exact = [f * self.n_nodes for _, f in self.protocol_mix]
        counts = [int(x) for x in exact]
        order = sorted(range(len(exact)), key=lambda i: exact[i] - counts[i],
                       reverse=True)
        for i in order:
            if sum(counts) == self.n_nodes:
                break
            counts[i] += 1
        out = []
        for (variant, _), c in zip(self.protocol_mix, counts):
            out.extend([variant] * c)
        return out

    def config_hash(self) -> str:
        """Stable digest of everything but the seed and replication count."""
        payload = {
            "n_nodes": self.n_nodes,
            "mix": [(v.label, f) for v, f in self.protocol_mix],
            "phy": {k: getattr(self.phy, k)
                    for k in self.phy.__dataclass_fields__},
            "backoff": {k: getattr(self.backoff, k)
                        for k in self.backoff.__dataclass_fields__},
            "traffic": {k: getattr(self.traffic, k)
                        for k in self.traffic.__dataclass_fields__},
            "p_e": self.p_e,
            "p_cd": self.p_cd,
            "duration_s": self.duration_s,
            "stickiness": self.default_stickiness,
            "queue_capacity": self.queue_capacity,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def scenario(variant: ProtocolVariant, **kwargs) -> ScenarioConfig:
    """Single-protocol convenience constructor."""
    return ScenarioConfig(protocol_mix=((variant, 1.0),), **kwargs)


def mixed_scenario(ca_fraction: float, eca_variant: ProtocolVariant,
                   ca_variant: ProtocolVariant, **kwargs) -> ScenarioConfig:
    """Coexistence constructor: ``ca_fraction`` of nodes run the CA variant."""
    if ca_fraction <= 0.0:
        mix = ((eca_variant, 1.0),)
    elif ca_fraction >= 1.0:
        mix = ((ca_variant, 1.0),)
    else:
        mix = ((ca_variant, ca_fraction), (eca_variant, 1.0 - ca_fraction))
    return ScenarioConfig(protocol_mix=mix, **kwargs)


class _Node:
    __slots__ = (
        "idx", "state", "variant", "queue", "stream", "backlogged",
        "delivered_bits", "delivered_packets", "attempts", "successes",
        "collisions", "error_failures",
        "last_success_end", "inter_sum", "inter_cnt",
        "cta_sum", "cta_cnt", "contention_start",
        "delay_sum", "delay_cnt",
        "stage_slot_sum", "backlog_slots", "mark_slot",
    )

    def __init__(self, idx, variant, queue, stream, default_stickiness):
        self.idx = idx
        self.variant = variant
        self.queue = queue
        self.stream = stream
        self.state = NodeState(id=idx, default_stickiness=default_stickiness,
                               queue=queue)
        self.backlogged = False
        self.delivered_bits = 0
        self.delivered_packets = 0
        self.attempts = 0
        self.successes = 0
        self.collisions = 0
        self.error_failures = 0
        self.last_success_end = -1
        self.inter_sum = 0
        self.inter_cnt = 0
        self.cta_sum = 0
        self.cta_cnt = 0
        self.contention_start = 0
        self.delay_sum = 0
        self.delay_cnt = 0
        self.stage_slot_sum = 0
        self.backlog_slots = 0
        self.mark_slot = 0


class Engine:
    """One seeded simulation run over a fixed scenario."""

    def __init__(self, config: ScenarioConfig, seed: Optional[int] = None):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        self.now = 0
        self.slot_index = 0
        self.duration_us = int(round(config.duration_s * US_PER_S))
        variants = config.node_variants()
        self.nodes: List[_Node] = []
        self._rate_traffic = not config.traffic.saturated
        for i in range(config.n_nodes):
            queue = MacQueue(config.queue_capacity)
            stream = (PoissonStream(config.traffic, self.rng)
                      if self._rate_traffic else None)
            self.nodes.append(_Node(i, variants[i], queue, stream,
                                    config.default_stickiness))
        self._B = np.zeros(config.n_nodes, dtype=np.int64)
        self._active = np.zeros(config.n_nodes, dtype=bool)
        self._sr_nodes = [n for n in self.nodes
                          if n.variant.schedule_reset is not ScheduleResetMode.OFF]
        # per-1s-window slot accounting
        self._win_total: List[int] = []
        self._win_col: List[int] = []
        self.last_collision_us = -1
        self.slot_log: Optional[List[tuple]] = [] if config.trace else None
        if config.traffic.saturated:
            for node in self.nodes:
                node.queue.refill(0)
                self._wake(node, 0)

    # -- bookkeeping ------------------------------------------------------

    def _wake(self, node: _Node, t: int) -> None:
        """Queue turned non-empty: start a fresh contention."""
        node.backlogged = True
        node.mark_slot = self.slot_index
        node.contention_start = t
        on_new_contention(node.state, self.config.backoff, self.rng)
        if self.config.p_cd > 0:
            node.state.B = apply_clock_drift(node.state.B, self.config.p_cd,
                                             self.rng)
        self._B[node.idx] = node.state.B
        self._active[node.idx] = True

    def _sleep(self, node: _Node) -> None:
        self._flush_stage(node)
        node.backlogged = False
        self._active[node.idx] = False

    def _flush_stage(self, node: _Node) -> None:
        d = self.slot_index - node.mark_slot
        if d > 0 and node.backlogged:
            node.stage_slot_sum += node.state.k * d
            node.backlog_slots += d
        node.mark_slot = self.slot_index

    def _win(self, t: int) -> int:
        w = t // US_PER_S
        while len(self._win_total) <= w:
            self._win_total.append(0)
            self._win_col.append(0)
        return w

    def _count_empty(self, n_slots: int) -> None:
        """Account ``n_slots`` consecutive empty slots starting at ``now``."""
        sigma = self.config.phy.sigma_e
        left = n_slots
        while left > 0:
            w = self._win(self.now)
            span = (w + 1) * US_PER_S - self.now
            take = min(left, -(-span // sigma))
            self._win_total[w] += take
            self.now += take * sigma
            left -= take
        self.slot_index += n_slots

    def _pending_wakeups(self) -> None:
        """Enqueue due arrivals of idle nodes; wake those that got traffic."""
        for node in self.nodes:
            if node.backlogged or node.stream is None:
                continue
            if node.stream.next_time <= self.now:
                node.stream.advance(node.queue, self.now)
                if len(node.queue):
                    self._wake(node, self.now)

    def _next_idle_arrival(self) -> float:
        t = float("inf")
        for node in self.nodes:
            if not node.backlogged and node.stream is not None:
                t = min(t, node.stream.next_time)
        return t

    # -- slot execution ---------------------------------------------------

    def _transmit_slot(self) -> SlotOutcome:
        cfg = self.config
        tx_idx = np.flatnonzero(self._active & (self._B == 0))
        transmitters = []
        for i in tx_idx:
            node = self.nodes[i]
            if node.stream is not None:
                node.stream.advance(node.queue, self.now)
            transmitters.append((int(i),
                                 batch_size(node.state, node.variant,
                                            cfg.backoff)))
        outcome = resolve_slot(transmitters, cfg.p_e, self.rng, cfg.phy,
                               cfg.traffic.payload_bits)
        w = self._win(self.now)
        self._win_total[w] += 1
        if outcome.kind is SlotKind.COLLISION:
            self._win_col[w] += 1
            self.last_collision_us = self.now
        # Every other backlogged node counts the slot down and, when in a
        # Schedule Reset window, overhears it as busy.
        tx_mask = np.zeros(len(self.nodes), dtype=bool)
        tx_mask[tx_idx] = True
        others = self._active & ~tx_mask
        self._B[others] -= 1
        for node in self._sr_nodes:
            if node.state.sr is not None and others[node.idx]:
                sr_observe(node.state, True)
        end = self.now + outcome.duration
        if outcome.kind is SlotKind.SUCCESS:
            self._dispatch_success(self.nodes[outcome.node], outcome, end)
        elif outcome.kind is SlotKind.FAILED_BY_ERROR:
            self._dispatch_failure(self.nodes[outcome.node], end,
                                   by_error=True)
        else:
            for i in outcome.colliders:
                self._dispatch_failure(self.nodes[i], end, by_error=False)
        if self.slot_log is not None:
            self.slot_log.append((self.now, outcome.kind.value, outcome.node
                                  if outcome.node >= 0 else outcome.colliders,
                                  outcome.duration))
        self.slot_index += 1
        self.now = end
        return outcome

    def _dispatch_success(self, node: _Node, outcome: SlotOutcome,
                          end: int) -> None:
        cfg = self.config
        st = node.state
        timestamps = node.queue.dequeue_batch(outcome.batch)
        if outcome.corrupted:
            corrupted = set(outcome.corrupted)
            keep = [ts for j, ts in enumerate(timestamps) if j in corrupted]
            node.queue.requeue_head(keep)
            delivered_ts = [ts for j, ts in enumerate(timestamps)
                            if j not in corrupted]
        else:
            delivered_ts = timestamps
        node.attempts += 1
        node.successes += 1
        node.delivered_packets += len(delivered_ts)
        node.delivered_bits += len(delivered_ts) * cfg.traffic.payload_bits
        for ts in delivered_ts:
            node.delay_sum += end - ts
        node.delay_cnt += len(delivered_ts)
        if node.last_success_end >= 0:
            node.inter_sum += end - node.last_success_end
            node.inter_cnt += 1
        node.last_success_end = end
        node.cta_sum += end - node.contention_start
        node.cta_cnt += 1
        old_k = st.k
        on_success(st, node.variant, cfg.backoff, self.rng)
        sr_on_success(st, node.variant, cfg.backoff)
        if cfg.p_cd > 0:
            st.B = apply_clock_drift(st.B, cfg.p_cd, self.rng)
        if st.k != old_k:
            self._flush_stage(node)
        node.contention_start = end
        if cfg.traffic.saturated:
            node.queue.refill(end)
        elif node.stream is not None:
            node.stream.advance(node.queue, end)
        if len(node.queue) == 0:
            self._sleep(node)
        else:
            self._B[node.idx] = st.B

    def _dispatch_failure(self, node: _Node, end: int, by_error: bool) -> None:
        cfg = self.config
        st = node.state
        node.attempts += 1
        if by_error:
            node.error_failures += 1
        else:
            node.collisions += 1
        old_k = st.k
        directive = on_failure(st, node.variant, cfg.backoff, self.rng)
        if cfg.p_cd > 0:
            st.B = apply_clock_drift(st.B, cfg.p_cd, self.rng)
        if st.k != old_k:
            self._flush_stage(node)
        if directive is not None:
            node.queue.drop_head(directive.count)
            node.contention_start = end
            if cfg.traffic.saturated:
                node.queue.refill(end)
            elif node.stream is not None:
                node.stream.advance(node.queue, end)
            if len(node.queue) == 0:
                self._sleep(node)
                return
        self._B[node.idx] = st.B

    def _advance_empty(self, n_slots: int) -> None:
        active = self._active
        self._B[active] -= n_slots
        for node in self._sr_nodes:
            sr = node.state.sr
            if sr is not None and active[node.idx]:
                sr.t = (sr.t + n_slots) % (sr.b_d + 1)
        self._count_empty(n_slots)

    def step(self) -> SlotOutcome:
        """Execute exactly one slot and return its outcome."""
        self._pending_wakeups()
        if not self._active.any():
            self._count_empty(1)
            return SlotOutcome(SlotKind.EMPTY, self.config.phy.sigma_e)
        if self._B[self._active].min() > 0:
            self._advance_empty(1)
            return SlotOutcome(SlotKind.EMPTY, self.config.phy.sigma_e)
        return self._transmit_slot()

    def run(self) -> MetricsReport:
        dur = self.duration_us
        sigma = self.config.phy.sigma_e
        if self.config.trace:
            while self.now < dur:
                self.step()
            return self.report()
        while self.now < dur:
            if self._rate_traffic:
                self._pending_wakeups()
            if not self._active.any():
                t_star = self._next_idle_arrival()
                horizon = min(t_star, dur)
                n = max(1, -(-max(0, int(horizon) - self.now) // sigma))
                self._count_empty(n)
                continue
            bmin = int(self._B[self._active].min())
            if bmin > 0:
                d = bmin
                if self._rate_traffic:
                    t_star = self._next_idle_arrival()
                    if t_star < float("inf"):
                        gap = max(0, int(t_star) - self.now)
                        d = min(d, max(1, -(-gap // sigma)))
                self._advance_empty(d)
                continue
            self._transmit_slot()
        return self.report()

    # -- reporting --------------------------------------------------------

    def report(self) -> MetricsReport:
        per_node = []
        for node in self.nodes:
            self._flush_stage(node)
            q = node.queue
            per_node.append(NodeReport(
                node=node.idx,
                protocol=node.variant.label,
                delivered_bits=node.delivered_bits,
                delivered_packets=node.delivered_packets,
                attempts=node.attempts,
                successes=node.successes,
                collisions=node.collisions,
                error_failures=node.error_failures,
                drops=q.dropped,
                blocks=q.blocked,
                arrived=q.arrived,
                in_queue=len(q),
                mean_inter_success_us=(node.inter_sum / node.inter_cnt
                                       if node.inter_cnt else None),
                mean_contention_to_ack_us=(node.cta_sum / node.cta_cnt
                                           if node.cta_cnt else None),
                mean_delay_us=(node.delay_sum / node.delay_cnt
                               if node.delay_cnt else None),
                mean_backoff_stage=(node.stage_slot_sum / node.backlog_slots
                                    if node.backlog_slots else None),
            ))
        series = [(float(w), c / t if t else 0.0)
                  for w, (t, c) in enumerate(zip(self._win_total,
                                                 self._win_col))]
        return MetricsReport(
            duration_us=self.now,
            seed=self.seed,
            config_hash=self.config.config_hash(),
            per_node=per_node,
            total_slots=self.slot_index,
            empty_slots=self.slot_index - self._busy_slots(),
            success_slots=sum(n.successes for n in self.nodes),
            collision_slots=self._collision_slots(),
            error_slots=sum(n.error_failures for n in self.nodes),
            last_collision_us=self.last_collision_us,
            collision_fraction_timeseries=series,
        )

    def _collision_slots(self) -> int:
        return sum(self._win_col)

    def _busy_slots(self) -> int:
        return (sum(n.successes for n in self.nodes)
                + sum(n.error_failures for n in self.nodes)
                + self._collision_slots())


def run(config: ScenarioConfig, seed: Optional[int] = None) -> MetricsReport:
    """Run one seeded simulation and return its metrics."""
    return Engine(config, seed=seed).run()


def run_replications(config: ScenarioConfig) -> List[MetricsReport]:
    """Run ``config.runs`` replications with seeds seed, seed+1, ..."""
    return [run(config, seed=config.seed + i) for i in range(config.runs)]
