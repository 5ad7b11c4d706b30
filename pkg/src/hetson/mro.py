"""Cost-driven mobility robustness optimisation over the (hysteresis, time-to-trigger) grid."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .mobility import (CONTINUE_HO, DROP, EARLY, HYSTERESIS_GRID, LATE, PING_PONG, TTT_GRID, WRONG,
                       HandoverParams)

UP = +1
DOWN = -1


@dataclass
class MroWeights:
    w_ping_pong: float = 1.0
    w_continue: float = 1.0
    w_late: float = 1.0
    w_early: float = 1.0
    w_wrong: float = 1.0

    def validate(self) -> None:
        w = self.as_tuple()
        if any(x < 0 for x in w):
            raise ValueError("mro weights must be non-negative")
        if not any(x > 0 for x in w):
            raise ValueError("at least one mro weight must be positive")

    def as_tuple(self):
        return (self.w_ping_pong, self.w_continue, self.w_late, self.w_early, self.w_wrong)

    def scaled(self, k: float) -> "MroWeights":
        return MroWeights(*(k * x for x in self.as_tuple()))


@dataclass
class MroGrids:
    hysteresis: tuple[float, ...] = HYSTERESIS_GRID
    ttt: tuple[float, ...] = TTT_GRID

    def validate(self) -> None:
        for name, g in (("hysteresis", self.hysteresis), ("ttt", self.ttt)):
            if not g or list(g) != sorted(set(g)):
                raise ValueError(f"mro.{name}_grid must be strictly increasing and non-empty")


@dataclass
class MroState:
    cell_id: int
    params: HandoverParams
    epoch_counts: Counter = field(default_factory=Counter)
    epoch_handover_total: int = 0
    cost_history: list[float] = field(default_factory=list)
    # provisional move awaiting judgement: (params before, cost before, direction)
    pending: tuple[HandoverParams, float, tuple[str, int]] | None = None
    blocked: tuple[str, int] | None = None
    visited: list[HandoverParams] = field(default_factory=list)
    accepted_costs: list[float] = field(default_factory=list)


def cost(counts: Mapping[str, int], weights: MroWeights) -> float:
    return (weights.w_ping_pong * counts.get(PING_PONG, 0)
            + weights.w_continue * counts.get(CONTINUE_HO, 0)
            + weights.w_late * counts.get(LATE, 0)
            + weights.w_early * counts.get(EARLY, 0)
            + weights.w_wrong * counts.get(WRONG, 0))


def signature(counts: Mapping[str, int]) -> int:
    """DOWN when failures from late triggering dominate, UP when over-eager ones do, else 0."""
    too_late = counts.get(LATE, 0) + counts.get(DROP, 0)
    too_early = (counts.get(PING_PONG, 0) + counts.get(CONTINUE_HO, 0)
                 + counts.get(EARLY, 0) + counts.get(WRONG, 0))
    if too_late > too_early:
        return DOWN
    if too_early > too_late:
        return UP
    return 0


def _move(params: HandoverParams, axis: str, sign: int, grids: MroGrids) -> HandoverParams | None:
    grid = grids.hysteresis if axis == "hysteresis" else grids.ttt
    value = getattr(params, axis)
    i = grid.index(value) + sign
    if not 0 <= i < len(grid):
        return None
    if axis == "hysteresis":
        return HandoverParams(grid[i], params.ttt)
    return HandoverParams(params.hysteresis, grid[i])


def optimize_step(state: MroState, weights: MroWeights, grids: MroGrids | None = None) -> HandoverParams:
    """Judge the epoch just measured and return the parameters for the next one.

    A provisional move that raised the cost is reverted and its direction is
    barred from the following proposal. Otherwise one grid step is proposed,
    hysteresis first, in the direction the failure mix points to.
    """
    grids = grids or MroGrids()
    if not state.visited:
        state.visited.append(state.params)
    now = cost(state.epoch_counts, weights)
    state.cost_history.append(now)

    if state.pending is not None:
        before, before_cost, direction = state.pending
        state.pending = None
        if now > before_cost:
            state.params = before
            state.blocked = direction
            return state.params
    state.accepted_costs.append(now)

    blocked, state.blocked = state.blocked, None
    sign = signature(state.epoch_counts)
    if now == 0 or sign == 0:
        return state.params
    for axis in ("hysteresis", "ttt"):
        if blocked == (axis, sign):
            continue
        moved = _move(state.params, axis, sign, grids)
        if moved is None:
            continue
        state.pending = (state.params, now, (axis, sign))
        state.params = moved
        state.visited.append(moved)
        return moved
    return state.params


class MroController:
    """Independent per-cell optimisers fed with epoch counts."""

    def __init__(self, cell_ids, weights: MroWeights, grids: MroGrids | None = None,
                 initial: HandoverParams | None = None):
        initial = initial or HandoverParams()
        self.weights = weights
        self.grids = grids or MroGrids()
        self.states = {c: MroState(c, initial) for c in cell_ids}

    def params(self) -> dict[int, HandoverParams]:
        return {c: s.params for c, s in self.states.items()}

    def step(self, counts_by_cell: Mapping[int, Mapping[str, int]]) -> dict[int, HandoverParams]:
        for c, s in self.states.items():
            counts = Counter(counts_by_cell.get(c, {}))
            s.epoch_counts = counts
            s.epoch_handover_total = sum(counts.values())
            optimize_step(s, self.weights, self.grids)
        return self.params()

    def total_cost(self) -> float:
        return sum(s.cost_history[-1] for s in self.states.values() if s.cost_history)


@dataclass
class MroResult:
    cost_history: dict[int, list[float]]
    total_cost: list[float]
    params: dict[int, HandoverParams]


def run_mro(simulate_epoch: Callable[[dict[int, HandoverParams]], Mapping[int, Mapping[str, int]]],
            cell_ids, epochs: int, weights: MroWeights, grids: MroGrids | None = None,
            initial: HandoverParams | None = None) -> MroResult:
    """Alternate one simulated epoch and one optimisation step per cell, `epochs` times."""
    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    ctl = MroController(cell_ids, weights, grids, initial)
    totals = []
    for _ in range(epochs):
        counts = simulate_epoch(ctl.params())
        ctl.step(counts)
        totals.append(ctl.total_cost())
    return MroResult({c: list(s.cost_history) for c, s in ctl.states.items()}, totals, ctl.params())
