"""Propagation, received power and SINR for the macro/femto co-channel layer."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MACRO = "macro"
HENB = "henb"


@dataclass
class RadioParams:
    macro_pl_intercept: float = 128.1
    macro_pl_slope: float = 37.6
    femto_pl_intercept: float = 127.0
    femto_pl_slope: float = 30.0
    wall_loss: float = 10.0
    noise_power: float = -104.0
    shadowing_sigma: float = 4.0
    shadowing_grid: float = 10.0
    min_coupling_loss: float = 45.0

    def validate(self) -> None:
        if self.macro_pl_slope <= 0 or self.femto_pl_slope <= 0:
            raise ValueError("radio slopes must be positive")
        if self.wall_loss < 0:
            raise ValueError("radio.wall_loss must be non-negative")
        if self.shadowing_sigma < 0:
            raise ValueError("radio.shadowing_sigma must be non-negative")
        if self.noise_power >= 0:
            raise ValueError("radio.noise_power must be below 0 dBm")
        if self.shadowing_grid <= 0:
            raise ValueError("radio.shadowing_grid must be positive")

    def slope_intercept(self, kind: str) -> tuple[float, float]:
        if kind == MACRO:
            return self.macro_pl_intercept, self.macro_pl_slope
        if kind == HENB:
            return self.femto_pl_intercept, self.femto_pl_slope
        raise ValueError(f"unknown cell kind {kind!r}")


@dataclass
class SonThresholds:
    fue_cover_sinr: float = 3.0
    mue_cover_sinr: float = 1.0
    boundary_offset: float = 2.0
    pci_space_size: int = 504
    pci_group_count: int = 168
    # PCIs [0, henb_pci_count) are reserved for small cells
    henb_pci_count: int = 504

    def validate(self) -> None:
        if self.pci_space_size != 504 or self.pci_group_count != 168:
            raise ValueError("thresholds.pci_space_size must be 504 with 168 groups of 3")
        if self.fue_cover_sinr <= self.mue_cover_sinr:
            raise ValueError("thresholds.fue_cover_sinr must exceed mue_cover_sinr")
        if self.boundary_offset < 0:
            raise ValueError("thresholds.boundary_offset must be non-negative")
        if not 1 <= self.henb_pci_count <= self.pci_space_size:
            raise ValueError("thresholds.henb_pci_count must lie in [1, pci_space_size]")


def db_to_mw(x):
    return np.power(10.0, np.asarray(x, dtype=float) / 10.0)


def mw_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def pathloss(kind: str, distance: float, wall_count: int, params: RadioParams) -> float:
    """Log-distance loss in dB with per-wall penetration, floored at the minimum coupling loss.

    Distances under 1 m are clamped to 1 m.
    """
    if distance < 0 or wall_count < 0:
        raise ValueError("distance and wall_count must be non-negative")
    intercept, slope = params.slope_intercept(kind)
    d_km = max(distance, 1.0) / 1000.0
    loss = intercept + slope * math.log10(d_km) + wall_count * params.wall_loss
    return max(loss, params.min_coupling_loss)


def distance_for_loss(kind: str, loss: float, wall_count: int, params: RadioParams) -> float:
    """Inverse of `pathloss` on its unfloored branch."""
    intercept, slope = params.slope_intercept(kind)
    return 1000.0 * 10.0 ** ((loss - intercept - wall_count * params.wall_loss) / slope)


def rsrp(tx_power: float, loss: float, shadowing: float = 0.0) -> float:
    return tx_power - loss - shadowing


def sinr(serving_rsrp: float, interferer_rsrps, noise_power: float) -> float:
    """SINR in dB; interferers are summed in the linear domain."""
    interference = float(np.sum(db_to_mw(np.asarray(interferer_rsrps, dtype=float))))
    return float(serving_rsrp - mw_to_db(interference + db_to_mw(noise_power)))


def sinr_matrix(rsrp_dbm: np.ndarray, noise_power: float, co_channel: np.ndarray | None = None) -> np.ndarray:
    """SINR of every (receiver, cell) pair, assuming that cell serves the receiver.

    `rsrp_dbm` has shape (n_rx, n_cells); -inf marks a silent cell. Cells with
    `co_channel` False still get an SINR but never interfere with anyone.
    """
    lin = db_to_mw(rsrp_dbm)
    interfering = lin if co_channel is None else lin * co_channel[None, :]
    total = interfering.sum(axis=1, keepdims=True)
    own = interfering
    denom = total - own + db_to_mw(noise_power)
    denom = np.maximum(denom, db_to_mw(noise_power))
    return mw_to_db(lin) - mw_to_db(denom)


class ShadowingMap:
    """Frozen log-normal shadowing, one Gaussian draw per (cell, grid node).

    Values between nodes are bilinearly interpolated, so the field is
    continuous along a trajectory and wall discontinuities stay visible.
    """

    def __init__(self, n_cells: int, origin: tuple[float, float], extent: tuple[float, float],
                 spacing: float, sigma: float, rng: np.random.Generator):
        self.origin = (float(origin[0]), float(origin[1]))
        self.spacing = float(spacing)
        nx = int(math.ceil(extent[0] / spacing)) + 2
        ny = int(math.ceil(extent[1] / spacing)) + 2
        if sigma > 0:
            self.values = rng.normal(0.0, sigma, size=(n_cells, nx, ny))
        else:
            self.values = np.zeros((n_cells, nx, ny))

    def sample(self, cell: int, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        grid = self.values[cell]
        nx, ny = grid.shape
        gx = np.clip((pts[:, 0] - self.origin[0]) / self.spacing, 0.0, nx - 1.000001)
        gy = np.clip((pts[:, 1] - self.origin[1]) / self.spacing, 0.0, ny - 1.000001)
        ix = gx.astype(int)
        iy = gy.astype(int)
        fx = gx - ix
        fy = gy - iy
        return ((1 - fx) * (1 - fy) * grid[ix, iy] + fx * (1 - fy) * grid[ix + 1, iy]
                + (1 - fx) * fy * grid[ix, iy + 1] + fx * fy * grid[ix + 1, iy + 1])
