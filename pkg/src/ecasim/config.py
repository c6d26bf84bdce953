"""INI-style experiment configuration.

Sections: [scenario], [phy], [mac], [traffic], [sweep]. Every omitted
PHY/MAC key falls back to the 802.11n defaults; unknown sections or keys
are rejected with a diagnostic naming the offender. [sweep] lists
comma-separated values whose Cartesian product defines the cells of the
experiment matrix.
"""
import configparser
import itertools
from dataclasses import dataclass
from typing import Tuple

from .engine import ScenarioConfig, mixed_scenario
from .params import BackoffParams, PhyParams
from .protocol import CSMA_CA, ProtocolVariant, parse_variant
from .traffic import ArrivalProcess


class ConfigError(ValueError):
    pass


_SCENARIO_KEYS = {"n_nodes", "variant", "ca_fraction", "p_e", "p_cd",
                  "duration_s", "seed", "runs", "stickiness"}
_PHY_KEYS = {"phy_rate", "sigma_e", "difs", "sifs", "t_phy", "t_sym",
             "sf_bits", "md_bits", "mh_bits", "tb_bits", "l_ba_bits",
             "l_dbps"}
_MAC_KEYS = {"cw_min", "m", "retry_limit", "queue_capacity"}
_TRAFFIC_KEYS = {"mode", "rate_bps", "payload_bytes"}
_SWEEP_KEYS = {"n_nodes", "p_e", "p_cd", "ca_fraction"}
_SECTIONS = {"scenario": _SCENARIO_KEYS, "phy": _PHY_KEYS, "mac": _MAC_KEYS,
             "traffic": _TRAFFIC_KEYS, "sweep": _SWEEP_KEYS}

_SWEEP_TYPES = {"n_nodes": int, "p_e": float, "p_cd": float,
                "ca_fraction": float}


@dataclass(frozen=True)
class ExperimentMatrix:
    base: ScenarioConfig
    variant: ProtocolVariant
    ca_fraction: float = 0.0
    sweeps: Tuple[Tuple[str, Tuple], ...] = ()

    def cells(self):
        """Yield (override dict, ScenarioConfig) for every matrix cell."""
        if not self.sweeps:
            yield {}, self._cell_config({})
            return
        names = [name for name, _ in self.sweeps]
        for values in itertools.product(*(vals for _, vals in self.sweeps)):
            overrides = dict(zip(names, values))
            yield overrides, self._cell_config(overrides)

    def _cell_config(self, overrides) -> ScenarioConfig:
        ca_fraction = overrides.get("ca_fraction", self.ca_fraction)
        cfg = mixed_scenario(
            ca_fraction, self.variant, CSMA_CA,
            n_nodes=overrides.get("n_nodes", self.base.n_nodes),
            phy=self.base.phy,
            backoff=self.base.backoff,
            traffic=self.base.traffic,
            p_e=overrides.get("p_e", self.base.p_e),
            p_cd=overrides.get("p_cd", self.base.p_cd),
            duration_s=self.base.duration_s,
            seed=self.base.seed,
            runs=self.base.runs,
            default_stickiness=self.base.default_stickiness,
            queue_capacity=self.base.queue_capacity,
        )
        return cfg

    def cell_count(self) -> int:
        n = 1
        for _, vals in self.sweeps:
            n *= len(vals)
        return n


def _get(parser, section, key, cast, default):
    if not parser.has_section(section) or not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def _check_probability(name, value):
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")


def _hardware(parser):
    phy = PhyParams(
        phy_rate=_get(parser, "phy", "phy_rate", float, 65e6),
        sigma_e=_get(parser, "phy", "sigma_e", int, 9),
        difs=_get(parser, "phy", "difs", int, 28),
        sifs=_get(parser, "phy", "sifs", int, 10),
        t_phy=_get(parser, "phy", "t_phy", int, 32),
        t_sym=_get(parser, "phy", "t_sym", int, 4),
        sf_bits=_get(parser, "phy", "sf_bits", int, 16),
        md_bits=_get(parser, "phy", "md_bits", int, 32),
        mh_bits=_get(parser, "phy", "mh_bits", int, 288),
        tb_bits=_get(parser, "phy", "tb_bits", int, 6),
        l_ba_bits=_get(parser, "phy", "l_ba_bits", int, 256),
        l_dbps=_get(parser, "phy", "l_dbps", int, 256),
    )
    backoff = BackoffParams(
        cw_min=_get(parser, "mac", "cw_min", int, 16),
        m=_get(parser, "mac", "m", int, 5),
        retry_limit=_get(parser, "mac", "retry_limit", int, -1),
    )
    queue_capacity = _get(parser, "mac", "queue_capacity", int, 1000)
    return phy, backoff, queue_capacity


def parse_config(text: str) -> ExperimentMatrix:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")

    try:
        phy, backoff, queue_capacity = _hardware(parser)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    mode = _get(parser, "traffic", "mode", str, "saturated").strip().lower()
    payload_bits = _get(parser, "traffic", "payload_bytes", int, 1024) * 8
    if mode == "saturated":
        traffic = ArrivalProcess(saturated=True, payload_bits=payload_bits)
    elif mode == "rate":
        rate = _get(parser, "traffic", "rate_bps", float, 1e6)
        if rate <= 0:
            raise ConfigError("[traffic] rate_bps must be positive")
        traffic = ArrivalProcess(saturated=False, rate_bps=rate,
                                 payload_bits=payload_bits)
    else:
        raise ConfigError(f"[traffic] mode must be saturated or rate, "
                          f"got {mode!r}")

    try:
        variant = parse_variant(_get(parser, "scenario", "variant", str,
                                     "csma_eca+hys+fs"))
    except ValueError as exc:
        raise ConfigError(f"[scenario] variant: {exc}") from None
    p_e = _get(parser, "scenario", "p_e", float, 0.0)
    p_cd = _get(parser, "scenario", "p_cd", float, 0.0)
    ca_fraction = _get(parser, "scenario", "ca_fraction", float, 0.0)
    _check_probability("[scenario] p_e", p_e)
    _check_probability("[scenario] p_cd", p_cd)
    _check_probability("[scenario] ca_fraction", ca_fraction)
    duration = _get(parser, "scenario", "duration_s", float, 100.0)
    if duration <= 0:
        raise ConfigError("[scenario] duration_s must be positive")

    sweeps = []
    if parser.has_section("sweep"):
        for key in parser.options("sweep"):
            cast = _SWEEP_TYPES[key]
            raw = parser.get("sweep", key)
            try:
                values = tuple(cast(v.strip()) for v in raw.split(",")
                               if v.strip())
            except ValueError:
                raise ConfigError(
                    f"[sweep] {key}: cannot parse {raw!r}") from None
            if not values:
                raise ConfigError(f"[sweep] {key}: empty value list")
            if key in ("p_e", "p_cd", "ca_fraction"):
                for v in values:
                    _check_probability(f"[sweep] {key}", v)
            sweeps.append((key, values))

    try:
        base = mixed_scenario(
            ca_fraction, variant, CSMA_CA,
            n_nodes=_get(parser, "scenario", "n_nodes", int, 2),
            phy=phy,
            backoff=backoff,
            traffic=traffic,
            p_e=p_e,
            p_cd=p_cd,
            duration_s=duration,
            seed=_get(parser, "scenario", "seed", int, 1),
            runs=_get(parser, "scenario", "runs", int, 20),
            default_stickiness=_get(parser, "scenario", "stickiness", int, 1),
            queue_capacity=queue_capacity,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentMatrix(base=base, variant=variant,
                            ca_fraction=ca_fraction, sweeps=tuple(sweeps))
