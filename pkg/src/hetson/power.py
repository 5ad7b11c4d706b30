"""HeNB transmit-power self-configuration from a downlink scan."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .radio import HENB, RadioParams, SonThresholds, db_to_mw, mw_to_db, pathloss
from .topology import Cell, Network, boundary_radius


@dataclass
class PowerConstraints:
    p_min: float = -10.0
    p_max: float = 20.0
    scan_noise_sigma: float = 0.0
    power_on_interval: float = 1.0

    def validate(self) -> None:
        if self.p_min > self.p_max:
            raise ValueError("power.p_min must not exceed power.p_max")
        if self.scan_noise_sigma < 0:
            raise ValueError("power.scan_noise_sigma must be non-negative")
        if self.power_on_interval <= 0:
            raise ValueError("power.power_on_interval must be positive")


@dataclass
class DownlinkScan:
    """What a HeNB hears at its own position before transmitting."""
    macro_rsrp: float
    henb_rsrp: list[float] = field(default_factory=list)


@dataclass
class PowerResult:
    tx_power: float
    feasible: bool
    fue_limit: float
    mue_limit: float


def scan(henb: Cell, network: Network, rng: np.random.Generator | None = None,
         noise_sigma: float = 0.0) -> DownlinkScan:
    rsrp = network.rsrp_at([henb.position])[0]
    if noise_sigma > 0 and rng is not None:
        rsrp = rsrp + rng.normal(0.0, noise_sigma, size=rsrp.shape)
    others = [float(rsrp[c.id]) for c in network.cells
              if c.kind == HENB and c.id != henb.id and c.powered and c.co_channel]
    return DownlinkScan(float(rsrp[0]), others)


def power_limits(boundary_loss: float, detected: DownlinkScan, thresholds: SonThresholds,
                 noise_power: float) -> tuple[float, float]:
    """Closed-form power caps (dBm) from the FUE and MUE boundary conditions.

    A close-by boundary UE is assumed to see the same macro and neighbor RSRP
    as the scan. Returns (fue_limit, mue_limit); mue_limit is -inf when the
    macro cannot reach the MUE floor even with the HeNB silent.
    """
    noise = float(db_to_mw(noise_power))
    others = float(np.sum(db_to_mw(detected.henb_rsrp))) if detected.henb_rsrp else 0.0
    macro = float(db_to_mw(detected.macro_rsrp))
    fue_limit = thresholds.fue_cover_sinr + boundary_loss + float(mw_to_db(macro + others + noise))
    headroom = macro / 10 ** (thresholds.mue_cover_sinr / 10) - others - noise
    mue_limit = float(mw_to_db(headroom)) + boundary_loss if headroom > 0 else -math.inf
    return fue_limit, mue_limit


def configure_power(henb: Cell, network: Network, thresholds: SonThresholds, params: RadioParams,
                    constraints: PowerConstraints, detected: DownlinkScan | None = None) -> PowerResult:
    """Largest power keeping boundary FUEs unclaimed and boundary MUEs on the macro, clamped."""
    if detected is None:
        detected = scan(henb, network)
    r_b = boundary_radius(henb, thresholds, params)
    loss = pathloss(HENB, r_b, 1, params)
    fue_limit, mue_limit = power_limits(loss, detected, thresholds, params.noise_power)
    best = min(fue_limit, mue_limit)
    p = min(max(best, constraints.p_min), constraints.p_max)
    return PowerResult(p, best >= constraints.p_min, fue_limit, mue_limit)


@dataclass
class PowerTrace:
    rounds: list[dict[int, float]]
    converged: bool

    @property
    def final(self) -> dict[int, float]:
        return self.rounds[-1] if self.rounds else {}


def configure_all(network: Network, thresholds: SonThresholds, params: RadioParams,
                  constraints: PowerConstraints, rounds: int = 3, tol: float = 0.1) -> PowerTrace:
    """Sequential sweeps over powered HeNBs in id order until cross-interference settles."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    trace: list[dict[int, float]] = []
    henbs = [c for c in network.henbs if c.powered]
    for _ in range(rounds):
        for c in henbs:
            c.tx_power = configure_power(c, network, thresholds, params, constraints).tx_power
        trace.append({c.id: c.tx_power for c in henbs})
    converged = len(trace) >= 2 and all(
        abs(trace[-1][k] - trace[-2][k]) <= tol for k in trace[-1])
    if len(trace) == 1 and len(henbs) <= 1:
        converged = True
    return PowerTrace(trace, converged)
