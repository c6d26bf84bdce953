"""Per-node MAC queues and arrival processes.

Saturated sources keep the queue topped to capacity; rate sources model
Poisson arrivals of fixed-size packets. Arrivals that find a full queue
are counted as blocked and never enter it.
"""
from collections import deque
from dataclasses import dataclass

from .params import DEFAULT_PAYLOAD_BITS, DEFAULT_QUEUE_CAPACITY, US_PER_S


@dataclass(frozen=True)
class ArrivalProcess:
    saturated: bool = True
    rate_bps: float = 0.0                    # only for non-saturated sources
    payload_bits: int = DEFAULT_PAYLOAD_BITS

    def __post_init__(self):
        if not self.saturated and self.rate_bps <= 0:
            raise ValueError("non-saturated arrivals need a positive rate")
        if self.payload_bits <= 0:
            raise ValueError("payload_bits must be positive")

    @property
    def packets_per_us(self) -> float:
        return self.rate_bps / self.payload_bits / US_PER_S


class MacQueue:
    """Finite FIFO of packet arrival timestamps (integer µs)."""

    def __init__(self, capacity=DEFAULT_QUEUE_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.packets = deque()
        self.arrived = 0          # every generated packet, blocked included
        self.blocked = 0
        self.dropped = 0

    def __len__(self):
        return len(self.packets)

    def push(self, timestamp: int) -> bool:
        """Offer one packet; returns False (and counts it blocked) when full."""
        self.arrived += 1
        if len(self.packets) >= self.capacity:
            self.blocked += 1
            return False
        self.packets.append(timestamp)
        return True

    def refill(self, timestamp: int) -> int:
        """Top the queue up to capacity (saturated source)."""
        missing = self.capacity - len(self.packets)
        if missing > 0:
            self.arrived += missing
            self.packets.extend([timestamp] * missing)
        return missing

    def dequeue_batch(self, n: int) -> list:
        if n > len(self.packets):
            raise ValueError("dequeue_batch asked for more packets than queued")
        return [self.packets.popleft() for _ in range(n)]

    def requeue_head(self, timestamps) -> None:
        """Return undelivered packets to the head, preserving order."""
        for ts in reversed(timestamps):
            self.packets.appendleft(ts)

    def drop_head(self, n: int) -> int:
        n = min(n, len(self.packets))
        for _ in range(n):
            self.packets.popleft()
        self.dropped += n
        return n


def advance_arrivals(queue: MacQueue, process: ArrivalProcess,
                     t_from: int, t_to: int, rng) -> MacQueue:
    """Generate all arrivals in (t_from, t_to] into the queue."""
    if t_from > t_to:
        raise ValueError("t_from must not exceed t_to")
    if process.saturated:
        queue.refill(t_from)
        return queue
    span = t_to - t_from
    if span == 0:
        return queue
    count = rng.poisson(process.packets_per_us * span)
    if count:
        offsets = rng.random(count)
        offsets.sort()
        for u in offsets:
            queue.push(t_from + int(u * span) + 1)
    return queue


class PoissonStream:
    """Stateful exponential inter-arrival stream, one per node.

    Equivalent in distribution to the interval form above, but lets the
    engine know the exact time of the next arrival for slot batching.
    """

    def __init__(self, process: ArrivalProcess, rng):
        self.process = process
        self.rng = rng
        self.next_time = self._draw_gap(0)

    def _draw_gap(self, t):
        return t + self.rng.exponential(1.0 / self.process.packets_per_us)

    def advance(self, queue: MacQueue, t_to: int) -> None:
        """Deliver every pending arrival with timestamp <= t_to."""
        while self.next_time <= t_to:
            queue.push(int(self.next_time))
            self.next_time = self._draw_gap(self.next_time)
