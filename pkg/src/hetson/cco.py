"""Boundary-based coverage optimisation: find HeNB walls from FUE traces, then re-plan power."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .power import PowerConstraints, configure_power
from .radio import RadioParams, SonThresholds
from .topology import BY_HENB, BY_MACRO, FUE, HOLE, MUE, Cell, Network, coverage_labels

NONE = "none"
LOW = "low"
HIGH = "high"


@dataclass
class CcoSettings:
    jump_threshold: float = 7.0
    period: float = 60.0

    def validate(self) -> None:
        if self.jump_threshold <= 0:
            raise ValueError("cco.jump_threshold must be positive")
        if self.period <= 0:
            raise ValueError("cco.period must be positive")


@dataclass
class BoundaryEstimate:
    cell_id: int
    estimated_radius: float
    sample_count: int
    jump_magnitude: float
    confidence: str


@dataclass
class CoverageReport:
    macro_coverage_ratio: float
    smallcell_coverage_ratio: float
    hole_ratio: float


def estimate_boundary(cell: Cell, fue_logs: Sequence[Sequence[tuple[float, float, float]]],
                      jump_threshold: float) -> BoundaryEstimate:
    """Median wall distance over RSRP jumps between consecutive FUE samples.

    Each log is one FUE's time-ordered (time, distance_to_henb, rsrp) samples.
    A step of at least `jump_threshold` dB in either direction marks a wall
    crossing at the midpoint of the two sample distances.
    """
    crossings = []
    jumps = []
    for trace in fue_logs:
        arr = np.asarray(trace, dtype=float).reshape(-1, 3)
        if len(arr) < 2:
            continue
        step = np.abs(np.diff(arr[:, 2]))
        idx = np.flatnonzero(step >= jump_threshold)
        crossings.extend(0.5 * (arr[idx, 1] + arr[idx + 1, 1]))
        jumps.extend(step[idx])
    n = len(crossings)
    if n == 0:
        return BoundaryEstimate(cell.id, 0.0, 0, 0.0, NONE)
    radius = float(np.median(crossings))
    return BoundaryEstimate(cell.id, radius, n, float(np.median(jumps)), LOW if n < 5 else HIGH)


def reoptimize_power(cell: Cell, estimate: BoundaryEstimate, network: Network, thresholds: SonThresholds,
                     params: RadioParams, constraints: PowerConstraints) -> float:
    """Power from self-configuration rerun with the estimated radius in place of the assumed one."""
    if estimate.confidence == NONE or estimate.estimated_radius <= 0:
        return cell.tx_power
    probe = dataclasses.replace(cell, apartment_radius=estimate.estimated_radius)
    return configure_power(probe, network, thresholds, params, constraints).tx_power


def coverage_metrics(network: Network, positions, kinds, thresholds: SonThresholds,
                     indoor: Sequence[bool] | None = None) -> CoverageReport:
    """Coverage ratios over the current UE positions.

    An FUE counts in the small-cell population only while inside its home
    apartment (`indoor`); outdoors it is a macro-layer user. An empty
    population reports a ratio of 1.0.
    """
    kinds = list(kinds)
    if indoor is not None:
        kinds = [FUE if k == FUE and ind else MUE for k, ind in zip(kinds, indoor)]
    labels = coverage_labels(network, positions, kinds, thresholds)
    mues = [lab for k, lab in zip(kinds, labels) if k == MUE]
    fues = [lab for k, lab in zip(kinds, labels) if k == FUE]
    macro = sum(lab == BY_MACRO for lab in mues) / len(mues) if mues else 1.0
    small = sum(lab == BY_HENB for lab in fues) / len(fues) if fues else 1.0
    hole = sum(lab == HOLE for lab in labels) / len(labels) if labels else 0.0
    return CoverageReport(macro, small, hole)
