"""PHY and MAC parameter sets with 802.11n-style defaults."""
from dataclasses import dataclass

US_PER_S = 1_000_000

# Default traffic constants
DEFAULT_PAYLOAD_BITS = 1024 * 8
DEFAULT_QUEUE_CAPACITY = 1000


@dataclass(frozen=True)
class PhyParams:
    """Timing and framing constants used for slot durations.

    All durations are integer microseconds, all field sizes are bits.
    """
    phy_rate: float = 65e6          # bits/s, nominal PHY rate
    sigma_e: int = 9                # empty slot
    difs: int = 28
    sifs: int = 10
    t_phy: int = 32                 # PHY preamble + headers
    t_sym: int = 4                  # OFDM symbol
    sf_bits: int = 16               # service field
    md_bits: int = 32               # MPDU delimiter
    mh_bits: int = 288              # MAC header
    tb_bits: int = 6                # tail bits
    l_ba_bits: int = 256            # Block-ACK frame
    l_dbps: int = 256               # bits per OFDM symbol

    def __post_init__(self):
        for name in ("phy_rate", "sigma_e", "difs", "sifs", "t_phy", "t_sym",
                     "sf_bits", "md_bits", "mh_bits", "tb_bits", "l_ba_bits",
                     "l_dbps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"PhyParams.{name} must be strictly positive")


@dataclass(frozen=True)
class BackoffParams:
    """Contention window geometry and retry limit.

    ``retry_limit`` defaults to ``m + 1`` when not given explicitly.
    """
    cw_min: int = 16
    m: int = 5
    retry_limit: int = -1

    def __post_init__(self):
        if self.cw_min < 2 or self.cw_min & (self.cw_min - 1):
            raise ValueError("cw_min must be a power of two >= 2")
        if self.m < 0:
            raise ValueError("m must be non-negative")
        if self.retry_limit == -1:
            object.__setattr__(self, "retry_limit", self.m + 1)
        if self.retry_limit < 1:
            raise ValueError("retry_limit must be >= 1")

    def cw(self, k: int) -> int:
        """Contention window at backoff stage k."""
        return (1 << k) * self.cw_min

    def max_deterministic_backoff(self) -> int:
        """Largest deterministic backoff (stage m)."""
        return -(-self.cw(self.m) // 2) - 1


DEFAULT_PHY = PhyParams()
DEFAULT_BACKOFF = BackoffParams()
