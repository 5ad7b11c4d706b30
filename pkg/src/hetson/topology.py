"""Network object model: cells, apartments, user equipment and deployment generation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .radio import HENB, MACRO, RadioParams, ShadowingMap, SonThresholds, distance_for_loss, pathloss, sinr_matrix

BY_HENB = "by_henb"
BY_MACRO = "by_macro"
HOLE = "hole"

MUE = "mue"
FUE = "fue"

DETACHED = -1


class PlacementInfeasible(RuntimeError):
    pass


@dataclass
class NeighborRelation:
    target_pci: int | None
    added_time: float
    last_used_time: float
    source: str  # "detected" or "ue_reported"


class NeighborRelationTable:
    """Neighbor relations keyed by target cell id, so duplicates cannot exist."""

    def __init__(self):
        self.entries: dict[int, NeighborRelation] = {}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, cell_id):
        return cell_id in self.entries

    def __iter__(self):
        return iter(sorted(self.entries))

    def add(self, cell_id: int, pci: int | None, now: float, source: str) -> bool:
        if cell_id in self.entries:
            self.entries[cell_id].last_used_time = now
            return False
        self.entries[cell_id] = NeighborRelation(pci, now, now, source)
        return True

    def remove(self, cell_id: int) -> None:
        del self.entries[cell_id]

    def pcis(self) -> set[int]:
        return {e.target_pci for e in self.entries.values() if e.target_pci is not None}


@dataclass
class Cell:
    id: int
    kind: str
    position: tuple[float, float]
    tx_power: float
    pci: int | None = None
    nrt: NeighborRelationTable = field(default_factory=NeighborRelationTable)
    apartment_radius: float = 0.0  # assumed radius used by self-configuration
    backhaul: str = "terrestrial"
    powered: bool = True
    co_channel: bool = True

    def __post_init__(self):
        if self.kind == HENB and self.apartment_radius <= 0:
            raise ValueError("a HeNB needs a positive apartment radius")


@dataclass
class UserEquipment:
    id: int
    kind: str
    position: tuple[float, float]
    velocity: float
    waypoint: tuple[float, float]
    serving_cell: int = DETACHED
    rlf_timer: float = 0.0
    home: int = -1  # apartment index for FUEs
    measurement_log: list = field(default_factory=list)


@dataclass
class Deployment:
    area_width: float = 500.0
    area_height: float = 500.0
    macro_x: float = 250.0
    macro_y: float = 250.0
    macro_power: float = 46.0
    henb_count: int = 50
    mue_count: int = 150
    fue_count: int = 50
    apartment_radius: float = 10.0
    # true radii are drawn uniformly from apartment_radius * (1 +- spread)
    apartment_radius_spread: float = 0.5
    placement_seed: int = 1
    backhaul: str = "satellite"
    mue_speed_min: float = 1.0
    mue_speed_max: float = 10.0
    fue_speed_min: float = 0.5
    fue_speed_max: float = 1.5
    fue_outdoor_prob: float = 0.3
    fue_excursion: float = 2.0

    def validate(self) -> None:
        if self.area_width <= 0 or self.area_height <= 0:
            raise ValueError("deployment area must be non-degenerate")
        if min(self.henb_count, self.mue_count, self.fue_count) < 0:
            raise ValueError("deployment counts must be non-negative")
        if self.fue_count > 0 and self.henb_count == 0:
            raise ValueError("deployment.fue_count requires at least one HeNB")
        if self.apartment_radius <= 0:
            raise ValueError("deployment.apartment_radius must be positive")
        if not 0 <= self.apartment_radius_spread < 1:
            raise ValueError("deployment.apartment_radius_spread must lie in [0, 1)")
        if self.backhaul not in ("terrestrial", "satellite"):
            raise ValueError("deployment.backhaul must be terrestrial or satellite")
        if not 0 <= self.mue_speed_min <= self.mue_speed_max:
            raise ValueError("deployment MUE speed range is invalid")
        if not 0 <= self.fue_speed_min <= self.fue_speed_max:
            raise ValueError("deployment FUE speed range is invalid")
        if not 0 <= self.fue_outdoor_prob <= 1:
            raise ValueError("deployment.fue_outdoor_prob must lie in [0, 1]")
        if self.fue_excursion < 1:
            raise ValueError("deployment.fue_excursion must be at least 1")

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return ((p[:, 0] >= 0) & (p[:, 0] <= self.area_width)
                & (p[:, 1] >= 0) & (p[:, 1] <= self.area_height))


class Network:
    """Cells plus apartment geometry and the frozen shadowing field.

    Cell ids equal their index; the macro is cell 0 and HeNB k (k >= 1) sits at
    the centre of apartment k - 1.
    """

    def __init__(self, cells: list[Cell], apartment_centers, apartment_radii,
                 params: RadioParams, shadowing: ShadowingMap):
        self.cells = cells
        self.apartment_centers = np.asarray(apartment_centers, dtype=float).reshape(-1, 2)
        self.apartment_radii = np.asarray(apartment_radii, dtype=float)
        self.params = params
        self.shadowing = shadowing
        self.positions = np.array([c.position for c in cells], dtype=float).reshape(-1, 2)
        kinds = [c.kind for c in cells]
        self._intercept = np.array([params.slope_intercept(k)[0] for k in kinds])
        self._slope = np.array([params.slope_intercept(k)[1] for k in kinds])

    @property
    def macro(self) -> Cell:
        return self.cells[0]

    @property
    def henbs(self) -> list[Cell]:
        return [c for c in self.cells if c.kind == HENB]

    def tx_powers(self) -> np.ndarray:
        return np.array([c.tx_power for c in self.cells])

    def active(self) -> np.ndarray:
        return np.array([c.powered for c in self.cells])

    def co_channel(self) -> np.ndarray:
        return np.array([c.co_channel for c in self.cells], dtype=float)

    def rsrp_at(self, points) -> np.ndarray:
        """RSRP (dBm) of every cell at each point, shape (n_points, n_cells)."""
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
        sh = self.shadowing
        return _kernels.rsrp_matrix(
            pts, self.positions, self._intercept, self._slope, self.tx_powers(), self.active(),
            self.apartment_centers, self.apartment_radii, sh.values, sh.origin[0], sh.origin[1],
            sh.spacing, self.params.wall_loss, self.params.min_coupling_loss)

    def cell_rsrp(self) -> np.ndarray:
        """Entry [i, j]: RSRP of cell j measured at cell i's position (diagonal -inf)."""
        m = self.rsrp_at(self.positions)
        np.fill_diagonal(m, -np.inf)
        return m

    def sinr_at(self, points) -> np.ndarray:
        return sinr_matrix(self.rsrp_at(points), self.params.noise_power, self.co_channel())

    def apartment_of(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if len(self.apartment_radii) == 0:
            return np.full(len(pts), -1)
        d2 = ((pts[:, None, :] - self.apartment_centers[None, :, :]) ** 2).sum(axis=2)
        inside = d2 < self.apartment_radii[None, :] ** 2
        return np.where(inside.any(axis=1), inside.argmax(axis=1), -1)

    def wall_count(self, a, b) -> int:
        return sum(_kernels.wall_crossings(a[0], a[1], b[0], b[1], c[0], c[1], r)
                   for c, r in zip(self.apartment_centers, self.apartment_radii))


def _seed_sequence(placement_seed: int, seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(placement_seed)])


def uniform_in_disk(rng: np.random.Generator, center, r_inner: float, r_outer: float, n: int = 1) -> np.ndarray:
    rho = np.sqrt(rng.uniform(r_inner ** 2, r_outer ** 2, size=n))
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    return np.column_stack([center[0] + rho * np.cos(phi), center[1] + rho * np.sin(phi)])


def generate(deployment: Deployment, params: RadioParams, seed: int = 0,
             p_max: float = 20.0) -> tuple[Network, list[UserEquipment]]:
    """Place the macro, HeNB apartments and UEs; a pure function of (deployment, seed).

    HeNBs start powered off at `p_max`; the engine switches them on one by one.
    """
    deployment.validate()
    place_rng, shadow_rng = (np.random.default_rng(s)
                             for s in _seed_sequence(deployment.placement_seed, seed).spawn(2))
    w, h = deployment.area_width, deployment.area_height
    r0, spread = deployment.apartment_radius, deployment.apartment_radius_spread
    n = deployment.henb_count

    centers: list[np.ndarray] = []
    radii: list[float] = []
    budget = 1000 * n
    attempts = 0
    while len(centers) < n:
        attempts += 1
        if attempts > budget:
            raise PlacementInfeasible(
                f"placed {len(centers)} of {n} apartments within {budget} attempts")
        r = r0 * place_rng.uniform(1 - spread, 1 + spread) if spread > 0 else r0
        if 2 * r > min(w, h):
            continue
        c = place_rng.uniform([r, r], [w - r, h - r])
        if any(np.hypot(*(c - o)) < r + ro for o, ro in zip(centers, radii)):
            continue
        centers.append(c)
        radii.append(r)

    macro = Cell(0, MACRO, (deployment.macro_x, deployment.macro_y), deployment.macro_power,
                 backhaul=deployment.backhaul)
    cells = [macro]
    for k, c in enumerate(centers):
        cells.append(Cell(k + 1, HENB, (float(c[0]), float(c[1])), p_max, apartment_radius=r0,
                          backhaul=deployment.backhaul, powered=False))
    shadow = ShadowingMap(len(cells), (0.0, 0.0), (w, h), params.shadowing_grid,
                          params.shadowing_sigma, shadow_rng)
    net = Network(cells, np.array(centers).reshape(-1, 2), np.array(radii), params, shadow)

    ues: list[UserEquipment] = []
    for i in range(deployment.fue_count):
        home = i % n
        pos = uniform_in_disk(place_rng, centers[home], 0.0, radii[home])[0]
        speed = place_rng.uniform(deployment.fue_speed_min, deployment.fue_speed_max)
        ues.append(UserEquipment(len(ues), FUE, tuple(pos), float(speed), tuple(pos), home=home))
    for _ in range(deployment.mue_count):
        while True:
            pos = place_rng.uniform([0.0, 0.0], [w, h])
            if net.apartment_of(pos)[0] < 0:
                break
        speed = place_rng.uniform(deployment.mue_speed_min, deployment.mue_speed_max)
        ues.append(UserEquipment(len(ues), MUE, tuple(pos), float(speed), tuple(pos)))
    return net, ues


def boundary_radius(henb: Cell, thresholds: SonThresholds, params: RadioParams) -> float:
    """Distance where one-wall femto loss is `boundary_offset` dB above the apartment-edge loss."""
    if henb.kind != HENB:
        raise ValueError("boundary_radius is defined for HeNBs only")
    edge = pathloss(HENB, henb.apartment_radius, 1, params)
    if thresholds.boundary_offset == 0:
        return henb.apartment_radius
    return max(distance_for_loss(HENB, edge + thresholds.boundary_offset, 1, params),
               henb.apartment_radius)


def label(kind: str, macro_sinr: float, best_henb_sinr: float, thresholds: SonThresholds) -> str:
    henb_ok = best_henb_sinr > thresholds.fue_cover_sinr
    macro_ok = macro_sinr > thresholds.mue_cover_sinr
    if kind == FUE:
        return BY_HENB if henb_ok else (BY_MACRO if macro_ok else HOLE)
    return BY_MACRO if macro_ok else (BY_HENB if henb_ok else HOLE)


def coverage_labels(network: Network, points, kinds, thresholds: SonThresholds) -> list[str]:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) == 0:
        return []
    s = network.sinr_at(pts)
    macro = s[:, 0]
    is_henb = np.array([c.kind == HENB and c.powered for c in network.cells])
    best = s[:, is_henb].max(axis=1) if is_henb.any() else np.full(len(pts), -np.inf)
    return [label(k, m, b, thresholds) for k, m, b in zip(kinds, macro, best)]


def covered(ue: UserEquipment, network: Network, thresholds: SonThresholds) -> str:
    return coverage_labels(network, [ue.position], [ue.kind], thresholds)[0]
