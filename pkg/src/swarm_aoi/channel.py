"""Line-of-sight link budget, transmit power, stage timing and cluster sizing.

Everything here works in linear SI units (W, Hz, bits, m, s).  Use
:func:`db_to_linear` / :func:`dbm_to_watts` at the configuration boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Duplex(str, Enum):
    HALF = "half"
    FULL = "full"


class CapacityError(ValueError):
    """Rate too low for a single packet to fit in the transmission stage."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    beta0: float = 1e3          # 30 dB
    noise_power: float = 1e-13  # -100 dBm
    bandwidth: float = 1e6
    packet_size: float = 5e6

    def __post_init__(self):
        for name in ("beta0", "noise_power", "bandwidth", "packet_size"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_db(cls, beta0_db=30.0, noise_dbm=-100.0, bandwidth=1e6, packet_size=5e6):
        return cls(db_to_linear(beta0_db), dbm_to_watts(noise_dbm), bandwidth, packet_size)


@dataclass(frozen=True)
class RateConfig:
    tx_rate: float
    duplex: Duplex = Duplex.FULL

    def __post_init__(self):
        if not self.tx_rate > 0:
            raise ValueError("tx_rate must be positive")
        object.__setattr__(self, "duplex", Duplex(self.duplex))


@dataclass(frozen=True)
class CycleTiming:
    t_nav: float
    t_tx: float
    t_relay: float


def nav_time(cell_size: float, velocity: float) -> float:
    if not velocity > 0:
        raise ValueError("velocity must be positive")
    return cell_size / velocity


def cycle_timing(cell_size: float, velocity: float, duplex: Duplex) -> CycleTiming:
    t_nav = nav_time(cell_size, velocity)
    # half duplex: transmit, then relay, both inside one navigation step
    t_tx = t_nav / 2 if Duplex(duplex) is Duplex.HALF else t_nav
    return CycleTiming(t_nav=t_nav, t_tx=t_tx, t_relay=t_tx)


def cluster_capacity(rate: RateConfig, cell_size: float, velocity: float,
                     packet_size: float) -> int:
    """Largest number of devices a UAV can poll in one transmission stage."""
    if min(cell_size, velocity, packet_size) <= 0:
        raise ValueError("cell_size, velocity and packet_size must be positive")
    denom = packet_size * velocity
    if rate.duplex is Duplex.HALF:
        denom *= 2
    # exact rational bound; the tolerance keeps e.g. 25.000000000000004 -> 25
    bound = rate.tx_rate * cell_size / denom
    capacity = int(math.floor(bound + 1e-9))
    if capacity < 1:
        raise CapacityError(
            f"cluster capacity R_T*L_c/(M*v_u) bound = {bound:.4g} < 1: "
            f"tx rate {rate.tx_rate:g} b/s cannot deliver one {packet_size:g}-bit packet "
            f"per frame in {rate.duplex.value} duplex")
    return capacity


def gain_device(uav_height: float, horizontal_distance, budget: LinkBudget):
    """LoS gain between a UAV and a ground device; vectorises over distance."""
    return budget.beta0 / (uav_height ** 2 + horizontal_distance ** 2)


def tx_power(gain, budget: LinkBudget, packet_size: float | None = None):
    """Power a device needs to push M bits over bandwidth B at the given gain.

    ``packet_size`` overrides ``budget.packet_size`` (e.g. an empty payload).
    """
    m = budget.packet_size if packet_size is None else packet_size
    return (2.0 ** (m / budget.bandwidth) - 1.0) * budget.noise_power / gain


def gain_bs(uav_height: float, uav_bs_horizontal_distance, bs_height: float,
            budget: LinkBudget):
    return budget.beta0 / (abs(uav_height - bs_height) ** 2 + uav_bs_horizontal_distance ** 2)
