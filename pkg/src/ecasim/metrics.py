"""Run-level measurements: throughput, fairness, collisions, delay.

One MetricsReport per simulation run; aggregate_runs folds replications
into per-metric means and sample standard deviations.
"""
import math
from dataclasses import dataclass
from typing import List, Optional

from .params import US_PER_S


def jfi(throughputs) -> Optional[float]:
    """Jain's fairness index (sum x)^2 / (N * sum x^2); None if all zero."""
    xs = list(throughputs)
    if not xs:
        raise ValueError("jfi needs a non-empty list")
    if any(x < 0 for x in xs):
        raise ValueError("jfi inputs must be non-negative")
    sq = sum(x * x for x in xs)
    if sq == 0:
        return None
    s = sum(xs)
    return (s * s) / (len(xs) * sq)


@dataclass
class NodeReport:
    node: int
    protocol: str
    delivered_bits: int = 0
    delivered_packets: int = 0
    attempts: int = 0
    successes: int = 0
    collisions: int = 0
    error_failures: int = 0
    drops: int = 0
    blocks: int = 0
    arrived: int = 0
    in_queue: int = 0
    mean_inter_success_us: Optional[float] = None
    mean_contention_to_ack_us: Optional[float] = None
    mean_delay_us: Optional[float] = None
    mean_backoff_stage: Optional[float] = None


@dataclass
class MetricsReport:
    duration_us: int
    seed: int
    config_hash: str
    per_node: List[NodeReport]
    total_slots: int
    empty_slots: int
    success_slots: int
    collision_slots: int
    error_slots: int
    last_collision_us: int            # -1 when no collision occurred
    # (window start s, collision fraction) pairs, fixed 1 s windows
    collision_fraction_timeseries: List[tuple]

    @property
    def node_throughputs_bps(self):
        dur_s = self.duration_us / US_PER_S
        return [n.delivered_bits / dur_s for n in self.per_node]

    @property
    def throughput_bps(self) -> float:
        return sum(self.node_throughputs_bps)

    @property
    def jfi(self) -> Optional[float]:
        return jfi(self.node_throughputs_bps)

    @property
    def collision_slot_fraction(self) -> float:
        return self.collision_slots / self.total_slots if self.total_slots else 0.0

    def _node_mean(self, attr, weight_attr):
        num = den = 0.0
        for n in self.per_node:
            v = getattr(n, attr)
            w = getattr(n, weight_attr)
            if v is not None and w:
                num += v * w
                den += w
        return num / den if den else None

    @property
    def mean_delay_us(self):
        return self._node_mean("mean_delay_us", "delivered_packets")

    @property
    def mean_inter_success_us(self):
        weights = [max(n.successes - 1, 0) for n in self.per_node]
        num = sum(n.mean_inter_success_us * w for n, w in zip(self.per_node, weights)
                  if n.mean_inter_success_us is not None)
        den = sum(w for n, w in zip(self.per_node, weights)
                  if n.mean_inter_success_us is not None)
        return num / den if den else None

    @property
    def mean_contention_to_ack_us(self):
        return self._node_mean("mean_contention_to_ack_us", "successes")

    @property
    def mean_backoff_stage(self):
        vals = [n.mean_backoff_stage for n in self.per_node
                if n.mean_backoff_stage is not None]
        return sum(vals) / len(vals) if vals else None

    @property
    def drop_fraction(self):
        arrived = sum(n.arrived for n in self.per_node)
        return sum(n.drops for n in self.per_node) / arrived if arrived else 0.0

    @property
    def block_fraction(self):
        arrived = sum(n.arrived for n in self.per_node)
        return sum(n.blocks for n in self.per_node) / arrived if arrived else 0.0

    def scalar_metrics(self) -> dict:
        """Flat numeric view used by replication aggregation and CSV."""
        return {
            "throughput": self.throughput_bps,
            "jfi": self.jfi,
            "collision_frac": self.collision_slot_fraction,
            "delay": self.mean_delay_us,
            "inter_success": self.mean_inter_success_us,
            "contention_to_ack": self.mean_contention_to_ack_us,
            "drop_frac": self.drop_fraction,
            "block_frac": self.block_fraction,
            "avg_stage": self.mean_backoff_stage,
        }


def collision_fraction_window(slot_windows, window_s: float = 1.0):
    """Windowed and cumulative collision-slot fractions.

    ``slot_windows`` is a list of (total slots, collision slots) pairs for
    consecutive 1 s stretches of simulated time; coarser windows are
    formed by regrouping.
    """
    if window_s <= 0:
        raise ValueError("window must be positive")
    group = max(int(round(window_s)), 1)
    windowed, cumulative = [], []
    tot_all = col_all = 0
    for start in range(0, len(slot_windows), group):
        chunk = slot_windows[start:start + group]
        tot = sum(t for t, _ in chunk)
        col = sum(c for _, c in chunk)
        tot_all += tot
        col_all += col
        t0 = float(start)
        windowed.append((t0, col / tot if tot else 0.0))
        cumulative.append((t0, col_all / tot_all if tot_all else 0.0))
    return windowed, cumulative


@dataclass
class RunSummary:
    config_hash: str
    runs: int
    mean: dict
    std: dict


def aggregate_runs(reports: List[MetricsReport]) -> RunSummary:
    """Sample mean and (n-1) std of every scalar metric across runs."""
    if not reports:
        raise ValueError("need at least one report")
    hashes = {r.config_hash for r in reports}
    if len(hashes) != 1:
        raise ValueError("reports come from heterogeneous configurations")
    rows = [r.scalar_metrics() for r in reports]
    mean, std = {}, {}
    for key in rows[0]:
        vals = [row[key] for row in rows if row[key] is not None]
        if not vals:
            mean[key] = None
            std[key] = None
            continue
        mu = sum(vals) / len(vals)
        mean[key] = mu
        if len(vals) > 1:
            std[key] = math.sqrt(sum((v - mu) ** 2 for v in vals) / (len(vals) - 1))
        else:
            std[key] = None
    return RunSummary(config_hash=hashes.pop(), runs=len(reports),
                      mean=mean, std=std)
