import math

import numpy as np
import pytest

from ecasim.channel import SlotKind, resolve_slot, tx_duration
from ecasim.params import PhyParams

PHY = PhyParams()
PAYLOAD = 8192


def oracle_duration(l):
    """Airtime recomputed from first principles, independent of tx_duration."""
    data_symbols = math.ceil((16 + l * (32 + 288 + PAYLOAD) + 6) / 256)
    data = 32 + data_symbols * 4
    ba_symbols = math.ceil((16 + 256 + 6) / 256)
    ba = 32 + ba_symbols * 4
    return data + 10 + ba + 28 + 9


def test_single_mpdu_duration():
    # [DERIVED] 34 data symbols -> 168 us frame; 255 us with overheads.
    assert oracle_duration(1) == 255
    assert tx_duration(1, PAYLOAD, PHY) == 255


def test_two_mpdu_duration():
    # [DERIVED] 67 data symbols -> 300 us frame; 387 us with overheads.
    assert oracle_duration(2) == 387
    assert tx_duration(2, PAYLOAD, PHY) == 387


@pytest.mark.parametrize("l", range(1, 33))
def test_duration_matches_oracle(l):
    assert tx_duration(l, PAYLOAD, PHY) == oracle_duration(l)


def test_duration_monotonic_in_burst_size():
    durs = [tx_duration(l, PAYLOAD, PHY) for l in range(1, 33)]
    assert all(b > a for a, b in zip(durs, durs[1:]))


def test_duration_rejects_bad_inputs():
    with pytest.raises(ValueError):
        tx_duration(0, PAYLOAD, PHY)
    with pytest.raises(ValueError):
        tx_duration(1, 0, PHY)


def test_empty_slot():
    out = resolve_slot([], 0.0, np.random.default_rng(0), PHY, PAYLOAD)
    assert out.kind is SlotKind.EMPTY
    assert out.duration == PHY.sigma_e
    assert not out.busy


def test_collision_lasts_as_long_as_largest_burst():
    rng = np.random.default_rng(0)
    out = resolve_slot([(0, 1), (3, 4)], 0.5, rng, PHY, PAYLOAD)
    assert out.kind is SlotKind.COLLISION
    assert out.duration == tx_duration(4, PAYLOAD, PHY)
    assert out.colliders == (0, 3)
    assert out.busy


def test_clean_channel_success():
    rng = np.random.default_rng(0)
    out = resolve_slot([(2, 3)], 0.0, rng, PHY, PAYLOAD)
    assert out.kind is SlotKind.SUCCESS
    assert out.node == 2
    assert out.batch == 3
    assert out.delivered == 3
    assert out.corrupted == ()


def test_certain_corruption_fails_whole_burst():
    rng = np.random.default_rng(0)
    out = resolve_slot([(1, 4)], 1.0, rng, PHY, PAYLOAD)
    assert out.kind is SlotKind.FAILED_BY_ERROR
    assert out.duration == tx_duration(4, PAYLOAD, PHY)


def test_per_mpdu_error_rate():
    # [DERIVED] single-MPDU failure probability equals p_e itself.
    rng = np.random.default_rng(7)
    p_e, trials = 0.5, 200_000
    fails = sum(
        resolve_slot([(0, 1)], p_e, rng, PHY, PAYLOAD).kind
        is SlotKind.FAILED_BY_ERROR
        for _ in range(trials))
    assert abs(fails / trials - p_e) < 0.005


def test_burst_failure_rate_is_product():
    # [DERIVED] all-corrupted probability for a 2-MPDU burst is p_e^2 = 0.25.
    rng = np.random.default_rng(11)
    trials = 200_000
    fails = delivered = 0
    for _ in range(trials):
        out = resolve_slot([(0, 2)], 0.5, rng, PHY, PAYLOAD)
        if out.kind is SlotKind.FAILED_BY_ERROR:
            fails += 1
        else:
            delivered += out.delivered
    assert abs(fails / trials - 0.25) < 0.005
    # Surviving MPDUs per slot average 2*(1-p_e) = 1.0
    assert abs(delivered / trials - 1.0) < 0.01
