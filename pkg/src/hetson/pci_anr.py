"""PCI self-configuration, conflict auditing and the automatic neighbor relation function."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .radio import SonThresholds
from .topology import Cell, Network

log = logging.getLogger(__name__)

DETECTED = "detected"
UE_REPORTED = "ue_reported"


class MissingPci(ValueError):
    pass


def pci_group(pci: int) -> int:
    return pci // 3


def pci_identity(pci: int) -> int:
    return pci % 3


@dataclass
class PciAssignmentReport:
    cell_id: int
    chosen_pci: int
    candidate_pool_size: int
    excluded_first_tier: set[int] = field(default_factory=set)
    excluded_second_tier: set[int] = field(default_factory=set)
    fallback_used: bool = False


@dataclass
class ConflictReport:
    collisions: set[tuple[int, int]] = field(default_factory=set)
    confusions: set[tuple[int, int, int]] = field(default_factory=set)


@dataclass
class NrtDelta:
    inserted: set[int] = field(default_factory=set)
    refreshed: set[int] = field(default_factory=set)
    confusions: list[tuple[int, int, int]] = field(default_factory=list)


def detect_neighbors(cell: Cell, network: Network, detection_threshold: float,
                     rsrp: np.ndarray | None = None) -> set[int]:
    """Powered cells whose RSRP at `cell`'s position reaches the threshold."""
    if rsrp is None:
        rsrp = network.rsrp_at([cell.position])[0]
    return {c.id for c in network.cells
            if c.id != cell.id and c.powered and rsrp[c.id] >= detection_threshold}


def assign_pci(new_cell: Cell, network: Network, thresholds: SonThresholds, rng: np.random.Generator,
               first_tier: set[int] | None = None, detection_threshold: float = -100.0) -> PciAssignmentReport:
    """Pick a PCI avoiding neighbors (collision) and neighbors' neighbors (confusion).

    `first_tier` is the set of cells the new cell detected; when omitted it is
    detected here. Second-tier PCIs come from those cells' neighbor relation
    tables.
    """
    if first_tier is None:
        first_tier = detect_neighbors(new_cell, network, detection_threshold)
    space = range(thresholds.henb_pci_count)
    cells = network.cells
    first = [cells[i].pci for i in sorted(first_tier) if cells[i].pci is not None]
    second = [e.target_pci for i in sorted(first_tier)
              for t, e in sorted(cells[i].nrt.entries.items())
              if t != new_cell.id and e.target_pci is not None]
    first_set, second_set = set(first), set(second)
    pool = [p for p in space if p not in first_set and p not in second_set]
    if pool:
        chosen = int(pool[rng.integers(len(pool))])
        fallback = False
    else:
        chosen = min(space, key=lambda p: (first.count(p), second.count(p), p))
        fallback = True
        log.info("cell %d: PCI pool exhausted, least-reused PCI %d", new_cell.id, chosen)
    return PciAssignmentReport(new_cell.id, chosen, len(pool), first_set, second_set, fallback)


def assign_pci_random(new_cell: Cell, rng: np.random.Generator,
                      thresholds: SonThresholds | None = None) -> PciAssignmentReport:
    n = (thresholds or SonThresholds()).henb_pci_count
    chosen = int(rng.integers(n))
    return PciAssignmentReport(new_cell.id, chosen, n)


def neighbor_graph(network: Network, detection_threshold: float) -> np.ndarray:
    """Symmetric adjacency of mutually detecting powered cells."""
    m = network.cell_rsrp() >= detection_threshold
    on = network.active()
    adj = m & m.T
    adj &= on[:, None] & on[None, :]
    return adj


def detect_conflicts(network: Network, detection_threshold: float) -> ConflictReport:
    cells = [c for c in network.cells if c.powered]
    missing = [c.id for c in cells if c.pci is None]
    if missing:
        raise MissingPci(f"cells without PCI: {missing}")
    adj = neighbor_graph(network, detection_threshold)
    pci = np.array([c.pci if c.pci is not None else -1 for c in network.cells])
    report = ConflictReport()
    ii, jj = np.nonzero(np.triu(adj, 1))
    for i, j in zip(ii, jj):
        if pci[i] == pci[j]:
            report.collisions.add((int(i), int(j)))
    for x in range(len(network.cells)):
        nbrs = np.flatnonzero(adj[x])
        if len(nbrs) < 2:
            continue
        vals = pci[nbrs]
        for a_idx in range(len(nbrs)):
            same = nbrs[a_idx + 1:][vals[a_idx + 1:] == vals[a_idx]]
            for b in same:
                report.confusions.add((x, int(nbrs[a_idx]), int(b)))
    return report


def update_nrt(cell: Cell, ue_reports, now: float) -> NrtDelta:
    """Apply (pci, cell_id) reports from served UEs to the cell's NRT."""
    delta = NrtDelta()
    nrt = cell.nrt
    for pci, target in ue_reports:
        if target == cell.id:
            continue
        if target in nrt:
            nrt.entries[target].last_used_time = now
            delta.refreshed.add(target)
            continue
        clash = [t for t, e in nrt.entries.items() if e.target_pci == pci and pci is not None]
        for other in clash:
            delta.confusions.append((cell.id, other, target))
            log.info("cell %d: PCI %s reported for %d already maps to %d", cell.id, pci, target, other)
        nrt.add(target, pci, now, UE_REPORTED)
        delta.inserted.add(target)
    delta.refreshed -= delta.inserted
    return delta


def remove_stale(cell: Cell, now: float, ttl: float, network: Network | None = None,
                 detection_threshold: float = -np.inf, rsrp: np.ndarray | None = None) -> set[int]:
    """Drop relations idle for longer than `ttl`; still-detected ones are refreshed instead."""
    if ttl <= 0:
        raise ValueError("ttl must be positive")
    idle = [t for t, e in cell.nrt.entries.items() if now - e.last_used_time > ttl]
    if not idle:
        return set()
    detected: set[int] = set()
    if network is not None and any(cell.nrt.entries[t].source == DETECTED for t in idle):
        detected = detect_neighbors(cell, network, detection_threshold, rsrp)
    removed = set()
    for t in idle:
        entry = cell.nrt.entries[t]
        if entry.source == DETECTED and t in detected:
            entry.last_used_time = now
        else:
            cell.nrt.remove(t)
            removed.add(t)
    return removed
