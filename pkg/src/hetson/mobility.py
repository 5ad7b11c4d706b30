"""UE mobility, A3 handover triggering, radio link failure detection and event classification."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .topology import FUE, Deployment, UserEquipment, uniform_in_disk

HYSTERESIS_GRID = tuple(round(0.5 * k, 1) for k in range(21))
TTT_GRID = (0.0, 0.04, 0.064, 0.08, 0.1, 0.128, 0.16, 0.256, 0.32, 0.48, 0.512, 0.64, 1.024, 2.56, 5.12)

NORMAL = "normal"
PING_PONG = "ping_pong"
CONTINUE_HO = "continue_ho"
LATE = "late"
EARLY = "early"
WRONG = "wrong"
DROP = "drop"
CLASSIFICATIONS = (NORMAL, PING_PONG, CONTINUE_HO, LATE, EARLY, WRONG, DROP)
RLF_CLASSES = (LATE, EARLY, WRONG, DROP)

HO = "ho"
RLF = "rlf"
RECONNECT = "reconnect"

_EPS = 1e-9


class MalformedStream(ValueError):
    pass


@dataclass(frozen=True)
class HandoverParams:
    hysteresis: float = 2.0
    ttt: float = 0.256

    def on_grid(self, hys_grid=HYSTERESIS_GRID, ttt_grid=TTT_GRID) -> bool:
        return self.hysteresis in hys_grid and self.ttt in ttt_grid


@dataclass
class RlfModel:
    q_out: float = -8.0
    t_rlf: float = 1.0
    t_window: float = 1.0
    interruption: float = 0.05
    measurement_period: float = 0.2

    def validate(self) -> None:
        if self.t_rlf <= 0:
            raise ValueError("rlf.t_rlf must be positive")
        if self.t_window <= 0:
            raise ValueError("rlf.t_window must be positive")
        if self.interruption < 0:
            raise ValueError("rlf.interruption must be non-negative")
        if self.measurement_period <= 0:
            raise ValueError("rlf.measurement_period must be positive")


@dataclass(frozen=True)
class MobilityEvent:
    time: float
    ue: int
    kind: str  # HO, RLF or RECONNECT
    source: int = -1  # HO source cell, or the failing cell of an RLF
    target: int = -1  # HO target cell, or the cell a reconnect lands on
    onset: float | None = None  # RLF only: when serving SINR first fell below q_out

    @property
    def start(self) -> float:
        return self.time if self.onset is None else self.onset


@dataclass
class HandoverRecord:
    ue_id: int
    source_cell: int
    target_cell: int | None
    complete_time: float
    classification: str
    rlf_cell: int | None = None
    reconnect_cell: int | None = None


class RandomWaypoint:
    """Vectorised random-waypoint motion.

    MUE waypoints are uniform over the area outside apartments. FUE waypoints
    stay inside the home apartment, except that with probability
    `outdoor_prob` they land in the ring out to `excursion` times its radius,
    so FUEs regularly walk through their own wall.
    """

    def __init__(self, positions, waypoints, speeds, kinds, homes, deployment: Deployment,
                 apartment_centers, apartment_radii, rng: np.random.Generator):
        self.pos = np.array(positions, dtype=float).reshape(-1, 2)
        self.wp = np.array(waypoints, dtype=float).reshape(-1, 2)
        self.speed = np.array(speeds, dtype=float)
        self.kinds = list(kinds)
        self.homes = np.array(homes, dtype=int)
        self.deployment = deployment
        self.centers = np.asarray(apartment_centers, dtype=float).reshape(-1, 2)
        self.radii = np.asarray(apartment_radii, dtype=float)
        self.rng = rng

    @classmethod
    def from_ues(cls, ues: Sequence[UserEquipment], deployment, centers, radii, rng):
        return cls([u.position for u in ues], [u.waypoint for u in ues], [u.velocity for u in ues],
                   [u.kind for u in ues], [u.home for u in ues], deployment, centers, radii, rng)

    def _outside_apartments(self, p) -> bool:
        if len(self.radii) == 0:
            return True
        d2 = ((self.centers - p) ** 2).sum(axis=1)
        return bool((d2 >= self.radii ** 2).all())

    def draw_waypoint(self, i: int) -> np.ndarray:
        dep = self.deployment
        lo, hi = np.zeros(2), np.array([dep.area_width, dep.area_height])
        if self.kinds[i] == FUE:
            c, r = self.centers[self.homes[i]], self.radii[self.homes[i]]
            if self.rng.random() < dep.fue_outdoor_prob:
                for _ in range(100):
                    p = uniform_in_disk(self.rng, c, r, dep.fue_excursion * r)[0]
                    if (p >= lo).all() and (p <= hi).all():
                        return p
            return uniform_in_disk(self.rng, c, 0.0, r)[0]
        for _ in range(1000):
            p = self.rng.uniform(lo, hi)
            if self._outside_apartments(p):
                return p
        return p

    def step(self, dt: float) -> None:
        if dt <= 0:
            raise ValueError("dt must be positive")
        vec = self.wp - self.pos
        dist = np.hypot(vec[:, 0], vec[:, 1])
        move = self.speed * dt
        arrived = (dist <= move) & (self.speed > 0)
        safe = np.where(dist > 0, dist, 1.0)
        self.pos = np.where(arrived[:, None], self.wp,
                            self.pos + vec * (np.minimum(move, dist) / safe)[:, None])
        for i in np.flatnonzero(arrived):
            self.wp[i] = self.draw_waypoint(i)


def step_ue(ue: UserEquipment, dt: float, area: Deployment, rng: np.random.Generator,
            apartment_centers=(), apartment_radii=()) -> UserEquipment:
    """Advance one UE by `dt`; a new waypoint is drawn on arrival."""
    m = RandomWaypoint([ue.position], [ue.waypoint], [ue.velocity], [ue.kind], [ue.home], area,
                       apartment_centers, apartment_radii, rng)
    m.step(dt)
    ue.position = tuple(m.pos[0])
    ue.waypoint = tuple(m.wp[0])
    return ue


class A3Tracker:
    """Per-(UE, candidate) entering-condition timers for the A3 event.

    A candidate qualifies once its RSRP has exceeded serving RSRP plus the
    hysteresis at every sample for at least the time-to-trigger.
    """

    def __init__(self, n_ue: int, n_cells: int):
        self.since = np.full((n_ue, n_cells), np.nan)

    def reset(self, rows=None) -> None:
        if rows is None:
            self.since[:] = np.nan
        else:
            self.since[rows] = np.nan

    def evaluate(self, rsrp: np.ndarray, serving: np.ndarray, hysteresis: np.ndarray,
                 ttt: np.ndarray, now: float) -> np.ndarray:
        n = rsrp.shape[0]
        rows = np.arange(n)
        attached = serving >= 0
        serv = np.where(attached, serving, 0)
        level = rsrp[rows, serv] + hysteresis
        cond = (rsrp > level[:, None]) & attached[:, None]
        cond[rows, serv] = False
        self.since = np.where(cond, np.where(np.isnan(self.since), now, self.since), np.nan)
        ready = cond & (now - self.since >= ttt[:, None] - _EPS)
        best = np.where(ready, rsrp, -np.inf).argmax(axis=1)
        return np.where(ready.any(axis=1), best, -1)


def evaluate_a3(trace: Iterable[tuple[float, Sequence[float]]], serving: int,
                params: HandoverParams) -> tuple[float, int] | None:
    """First (time, target) at which A3 fires on a per-cell RSRP trace, else None."""
    tracker = None
    for now, sample in trace:
        row = np.asarray(sample, dtype=float)[None, :]
        if tracker is None:
            tracker = A3Tracker(1, row.shape[1])
        t = tracker.evaluate(row, np.array([serving]), np.array([params.hysteresis]),
                             np.array([params.ttt]), now)
        if t[0] >= 0:
            return now, int(t[0])
    return None


class RlfDetector:
    """Out-of-sync timers: RLF once serving SINR stays below q_out for t_rlf."""

    def __init__(self, n_ue: int, model: RlfModel):
        self.model = model
        self.since = np.full(n_ue, np.nan)

    def reset(self, rows=None) -> None:
        if rows is None:
            self.since[:] = np.nan
        else:
            self.since[rows] = np.nan

    def update(self, serving_sinr: np.ndarray, now: float, active: np.ndarray | None = None) -> np.ndarray:
        below = serving_sinr < self.model.q_out
        if active is not None:
            below &= active
        self.since = np.where(below, np.where(np.isnan(self.since), now, self.since), np.nan)
        return below & (now - self.since >= self.model.t_rlf - _EPS)


def detect_rlf(trace: Iterable[tuple[float, float]], model: RlfModel) -> float | None:
    det = RlfDetector(1, model)
    for now, s in trace:
        if det.update(np.array([s]), now)[0]:
            return now
    return None


def _classify_ue(events: list[MobilityEvent], window: float) -> list[HandoverRecord]:
    records: list[HandoverRecord] = []
    consumed: set[int] = set()

    def reconnect_after(i):
        # the event following an RLF is its reconnect if it lands within the window
        if i + 1 < len(events) and events[i + 1].kind == RECONNECT \
                and events[i + 1].time - events[i].time <= window + _EPS:
            return events[i + 1].target
        return None

    for i, e in enumerate(events):
        if e.kind != HO:
            continue
        s, t = e.source, e.target
        label = NORMAL
        rlf_cell = reconnect = None
        if i + 1 < len(events):
            nxt = events[i + 1]
            # an RLF counts as "shortly after" when its out-of-sync period began in the window
            if nxt.start - e.time <= window + _EPS:
                if nxt.kind == HO and nxt.source == t:
                    label = PING_PONG if nxt.target == s else CONTINUE_HO
                elif nxt.kind == RLF and nxt.source == t:
                    rc = reconnect_after(i + 1)
                    if rc is not None and rc != t:
                        label = EARLY if rc == s else WRONG
                        rlf_cell, reconnect = t, rc
                        consumed.add(i + 1)
        records.append(HandoverRecord(e.ue, s, t, e.time, label, rlf_cell, reconnect))

    for i, e in enumerate(events):
        if e.kind != RLF or i in consumed:
            continue
        rc = reconnect_after(i)
        label = LATE if rc is not None and rc != e.source else DROP
        records.append(HandoverRecord(e.ue, e.source, rc, e.time, label, e.source, rc))
    return records


def classify_event(history: Iterable[MobilityEvent], rlf_model: RlfModel) -> list[HandoverRecord]:
    """Label every completed handover and every RLF exactly once.

    Within `t_window` after a handover S->T: T->S is a ping-pong, T->C a
    continue handover, an RLF in T re-established on S early and on C wrong.
    An RLF not explained by a preceding handover is late when the UE comes
    back on a different cell within the window, and a drop otherwise.
    """
    per_ue: dict[int, list[MobilityEvent]] = defaultdict(list)
    for e in history:
        per_ue[e.ue].append(e)
    records: list[HandoverRecord] = []
    for ue in sorted(per_ue):
        evs = per_ue[ue]
        if any(b.time < a.time for a, b in zip(evs, evs[1:])):
            raise MalformedStream(f"events for UE {ue} are not time-ordered")
        records.extend(_classify_ue(evs, rlf_model.t_window))
    records.sort(key=lambda r: (r.complete_time, r.ue_id, CLASSIFICATIONS.index(r.classification)))
    return records


def count_by_cell(records: Iterable[HandoverRecord]) -> dict[int, Counter]:
    """Classification counts attributed to the cell whose parameters were in charge."""
    out: dict[int, Counter] = defaultdict(Counter)
    for r in records:
        out[r.source_cell][r.classification] += 1
    return out


def totals(records: Iterable[HandoverRecord]) -> Counter:
    c = Counter({k: 0 for k in CLASSIFICATIONS})
    for r in records:
        c[r.classification] += 1
    return c


def rlf_ratio(counts: Counter) -> float:
    failures = sum(counts[k] for k in RLF_CLASSES)
    completed = sum(counts[k] for k in (NORMAL, PING_PONG, CONTINUE_HO, EARLY, WRONG))
    attempted = completed + counts[LATE] + counts[DROP]
    return failures / attempted if attempted else 0.0


def unnecessary_ho_ratio(counts: Counter) -> float:
    completed = sum(counts[k] for k in (NORMAL, PING_PONG, CONTINUE_HO, EARLY, WRONG))
    return (counts[PING_PONG] + counts[CONTINUE_HO]) / completed if completed else 0.0
