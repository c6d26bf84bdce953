"""Slot outcome resolution and transmission airtime.

A slot with no transmitter is empty; with two or more it is a collision;
a lone transmitter delivers each MPDU of its A-MPDU independently, the
attempt counting as a complete failure only when every MPDU is corrupted.
"""
from dataclasses import dataclass, field
from enum import Enum

from .params import PhyParams


def tx_duration(l: int, payload_bits: int, phy: PhyParams) -> int:
    """Airtime in µs of an ``l``-MPDU burst plus its Block-ACK exchange.

    Covers preamble, data symbols, SIFS, Block-ACK, DIFS and one trailing
    empty slot.
    """
    if l < 1:
        raise ValueError("burst must contain at least one MPDU")
    if payload_bits <= 0:
        raise ValueError("payload must be positive")
    data_bits = phy.sf_bits + l * (phy.md_bits + phy.mh_bits + payload_bits) + phy.tb_bits
    data = phy.t_phy + -(-data_bits // phy.l_dbps) * phy.t_sym
    ba_bits = phy.sf_bits + phy.l_ba_bits + phy.tb_bits
    ba = phy.t_phy + -(-ba_bits // phy.l_dbps) * phy.t_sym
    return data + phy.sifs + ba + phy.difs + phy.sigma_e


class SlotKind(Enum):
    EMPTY = "empty"
    SUCCESS = "success"
    FAILED_BY_ERROR = "failed_by_error"
    COLLISION = "collision"


@dataclass
class SlotOutcome:
    kind: SlotKind
    duration: int                      # µs
    node: int = -1                     # transmitter for single-tx outcomes
    batch: int = 0                     # MPDUs in the burst (max over colliders)
    delivered: int = 0                 # uncorrupted MPDUs (SUCCESS only)
    corrupted: tuple = ()              # indices into the burst left undelivered
    colliders: tuple = ()              # node ids for COLLISION

    @property
    def busy(self) -> bool:
        return self.kind is not SlotKind.EMPTY


def resolve_slot(transmitters, p_e, rng, phy: PhyParams, payload_bits: int) -> SlotOutcome:
    """Resolve one slot given the ``(node, batch)`` pairs transmitting in it.

    Colliding bursts are not additionally subjected to channel errors; the
    collision already failed and lasts as long as its longest member.
    """
    if not transmitters:
        return SlotOutcome(SlotKind.EMPTY, phy.sigma_e)
    if len(transmitters) > 1:
        dur = max(tx_duration(b, payload_bits, phy) for _, b in transmitters)
        batch = max(b for _, b in transmitters)
        return SlotOutcome(SlotKind.COLLISION, dur, batch=batch,
                           colliders=tuple(n for n, _ in transmitters))
    node, batch = transmitters[0]
    dur = tx_duration(batch, payload_bits, phy)
    if p_e > 0.0:
        hits = rng.random(batch) < p_e
        if hits.all():
            return SlotOutcome(SlotKind.FAILED_BY_ERROR, dur, node=node, batch=batch)
        corrupted = tuple(int(i) for i in hits.nonzero()[0])
    else:
        corrupted = ()
    return SlotOutcome(SlotKind.SUCCESS, dur, node=node, batch=batch,
                       delivered=batch - len(corrupted), corrupted=corrupted)
