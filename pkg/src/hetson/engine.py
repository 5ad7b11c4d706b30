"""Time-stepped simulation engine, metrics report and parameter sweeps."""

from __future__ import annotations

import dataclasses
import itertools
import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cco as cco_mod
from .config import ScenarioConfig, with_param
from .mobility import (CLASSIFICATIONS, HO, RECONNECT, RLF, A3Tracker, MobilityEvent, RandomWaypoint,
                       RlfDetector, classify_event, count_by_cell, rlf_ratio, totals, unnecessary_ho_ratio)
from .mro import MroController, cost
from .pci_anr import (DETECTED, ConflictReport, PciAssignmentReport, assign_pci, assign_pci_random,
                      detect_conflicts, detect_neighbors, remove_stale, update_nrt)
from .power import configure_power, scan
from .radio import sinr_matrix
from .topology import DETACHED, FUE, generate

log = logging.getLogger(__name__)

METRIC_COLUMNS = (
    "epoch", "pci_collisions", "pci_confusions", "mean_nrt_size",
    *(f"n_{k}" for k in CLASSIFICATIONS),
    "rlf_ratio", "unnecessary_ho_ratio", "mro_cost_total",
    "macro_coverage_ratio", "smallcell_coverage_ratio", "hole_ratio",
)

EVENT_COLUMNS = ("time", "ue", "type", "source", "target", "rlf_cell", "reconnect_cell")


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


@dataclass
class MetricsReport:
    rows: list[dict]
    metadata: dict
    events: list[MobilityEvent] = field(default_factory=list)
    pci_assignments: list[PciAssignmentReport] = field(default_factory=list)
    setup_conflicts: ConflictReport = field(default_factory=ConflictReport)
    power_on: list[dict] = field(default_factory=list)
    cco_rows: list[dict] = field(default_factory=list)
    mro_history: dict[int, list[float]] = field(default_factory=dict)
    son_actions: list[tuple[float, str]] = field(default_factory=list)

    def results_text(self) -> str:
        lines = [f"# {k}: {_fmt(v)}" for k, v in self.metadata.items()]
        lines.append(",".join(METRIC_COLUMNS))
        lines.extend(",".join(_fmt(r[c]) for c in METRIC_COLUMNS) for r in self.rows)
        return "\n".join(lines) + "\n"

    def events_text(self) -> str:
        lines = [",".join(EVENT_COLUMNS)]
        for e in self.events:
            rlf_cell = e.source if e.kind == RLF else ""
            reconnect = e.target if e.kind == RECONNECT else ""
            source = e.source if e.kind in (HO, RLF) else ""
            target = e.target if e.kind in (HO, RECONNECT) else ""
            lines.append(",".join(_fmt(x) for x in (round(e.time, 6), e.ue, e.kind, source, target,
                                                    rlf_cell, reconnect)))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "columns": list(METRIC_COLUMNS),
            "rows": self.rows,
            "pci_assignments": [
                {**dataclasses.asdict(a), "excluded_first_tier": sorted(a.excluded_first_tier),
                 "excluded_second_tier": sorted(a.excluded_second_tier)} for a in self.pci_assignments],
            "setup_conflicts": {"collisions": sorted(map(list, self.setup_conflicts.collisions)),
                                "confusions": sorted(map(list, self.setup_conflicts.confusions))},
            "power_on": self.power_on,
            "cco": self.cco_rows,
            "mro_cost_history": {str(k): v for k, v in sorted(self.mro_history.items())},
            "son_actions": [list(a) for a in self.son_actions],
        }

    def json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, allow_nan=False,
                          default=float) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(self.results_text())
        (out / "events.csv").write_text(self.events_text())
        (out / "report.json").write_text(self.json_text())
        return out / "results.csv"

    def totals(self) -> Counter:
        c = Counter({k: 0 for k in CLASSIFICATIONS})
        for r in self.rows:
            for k in CLASSIFICATIONS:
                c[k] += r[f"n_{k}"]
        return c


class Simulation:
    """One seeded run: HeNB power-on sequence, then the stepped main loop."""

    def __init__(self, config: ScenarioConfig):
        self.config = config.validate()
        cfg = self.config
        seed = cfg.sim.seed
        self.network, ues = generate(cfg.deployment, cfg.radio, seed, cfg.power.p_max)
        streams = np.random.SeedSequence([int(seed), int(cfg.deployment.placement_seed), 1]).spawn(3)
        self.pci_rng, mob_rng, self.scan_rng = (np.random.default_rng(s) for s in streams)
        net = self.network
        self.ue_kinds = [u.kind for u in ues]
        self.fue_idx = np.array([u.id for u in ues if u.kind == FUE], dtype=int)
        self.fue_home = np.array([u.home for u in ues if u.kind == FUE], dtype=int)
        self.mobility = RandomWaypoint.from_ues(ues, cfg.deployment, net.apartment_centers,
                                                net.apartment_radii, mob_rng)
        self._mobility_start = (self.mobility.pos.copy(), self.mobility.wp.copy(),
                                mob_rng.bit_generator.state)
        n_ue, n_cell = len(ues), len(net.cells)
        self.serving = np.full(n_ue, DETACHED)
        self.a3 = A3Tracker(n_ue, n_cell)
        self.rlf = RlfDetector(n_ue, cfg.rlf)
        self.rlf_onset = np.full(n_ue, np.nan)
        self.suppress_until = np.zeros(n_ue)
        self.hys = np.full(n_cell, cfg.mro.hysteresis)
        self.ttt = np.full(n_cell, cfg.mro.ttt)
        self.mro = (MroController(range(n_cell), cfg.mro.weights(), cfg.mro.grids(), cfg.mro.initial())
                    if cfg.features.mro else None)
        self.fue_logs: list[list[list[tuple[float, float, float]]]] = [[[]] for _ in self.fue_idx]
        self.events: list[MobilityEvent] = []
        self.epoch_events: list[MobilityEvent] = []
        self.son_actions: list[tuple[float, str]] = []
        self.pci_reports: list[PciAssignmentReport] = []
        self.power_on: list[dict] = []
        self.cco_rows: list[dict] = []
        self.setup_conflicts = ConflictReport()
        self.start_time = 0.0
        self.configured = False

    # --- self-configuration -------------------------------------------------

    @property
    def threshold(self) -> float:
        return self.config.anr.detection_threshold

    def setup(self) -> None:
        """Power HeNBs on one at a time: scan, power, PCI, initial neighbor relations."""
        cfg, net = self.config, self.network
        net.macro.pci = cfg.thresholds.pci_space_size - 1
        full = cfg.features.anr == "full"
        now = 0.0
        for cell in net.henbs:
            if cfg.features.power_selfconfig:
                detected = scan(cell, net, self.scan_rng, cfg.power.scan_noise_sigma)
                result = configure_power(cell, net, cfg.thresholds, cfg.radio, cfg.power, detected)
                cell.tx_power, feasible = result.tx_power, result.feasible
            else:
                cell.tx_power, feasible = cfg.power.p_max, True
            here = net.rsrp_at([cell.position])[0]
            first_tier = detect_neighbors(cell, net, self.threshold, here)
            if cfg.features.pci == "proposed":
                rep = assign_pci(cell, net, cfg.thresholds, self.pci_rng, first_tier)
            else:
                rep = assign_pci_random(cell, self.pci_rng, cfg.thresholds)
            cell.pci = rep.chosen_pci
            cell.powered = True
            self.pci_reports.append(rep)
            known = [c.id for c in net.cells if c.powered and c.id != cell.id] if full else sorted(first_tier)
            for j in known:
                cell.nrt.add(j, net.cells[j].pci, now, DETECTED)
            heard = net.rsrp_at(net.positions)[:, cell.id]
            for other in net.cells:
                if other.powered and other.id != cell.id and (full or heard[other.id] >= self.threshold):
                    other.nrt.add(cell.id, cell.pci, now, DETECTED)
            self.power_on.append({"time": now, "cell": cell.id, "tx_power": cell.tx_power,
                                  "feasible": feasible, "pci": cell.pci})
            self.son_actions.append((now, f"configured:{cell.id}"))
            now += cfg.power.power_on_interval
        self.start_time = now
        self.setup_conflicts = detect_conflicts(net, self.threshold)
        self.configured = True

    # --- main loop helpers -------------------------------------------------

    def _attach_all(self, rsrp: np.ndarray) -> None:
        self.serving = rsrp.argmax(axis=1).astype(int)
        self.a3.reset()
        self.rlf.reset()
        self.rlf_onset[:] = np.nan
        self.suppress_until[:] = 0.0

    def _restart_epoch(self) -> None:
        pos, wp, state = self._mobility_start
        self.mobility.pos = pos.copy()
        self.mobility.wp = wp.copy()
        self.mobility.rng.bit_generator.state = state
        self._attach_all(self.network.rsrp_at(self.mobility.pos))
        self._break_logs()

    def _break_logs(self, cells=None) -> None:
        for i, home in enumerate(self.fue_home):
            if cells is None or home + 1 in cells:
                if self.fue_logs[i][-1]:
                    self.fue_logs[i].append([])

    def _event(self, e: MobilityEvent) -> None:
        self.events.append(e)
        self.epoch_events.append(e)

    def _step(self, k: int, now: float) -> None:
        cfg, net = self.config, self.network
        dt = cfg.sim.dt
        self.mobility.step(dt)
        pos = self.mobility.pos
        rsrp = net.rsrp_at(pos)
        sinr = sinr_matrix(rsrp, cfg.radio.noise_power, net.co_channel())
        rows = np.arange(len(pos))
        connected = self.serving >= 0
        serv = np.where(connected, self.serving, 0)
        s_sinr = np.where(connected, sinr[rows, serv], -np.inf)

        # reconnection of UEs that lost their link on an earlier step
        for u in np.flatnonzero(~connected):
            best = int(rsrp[u].argmax())
            if sinr[u, best] >= cfg.rlf.q_out:
                self.serving[u] = best
                self.suppress_until[u] = now + cfg.rlf.interruption
                self._event(MobilityEvent(now, int(u), RECONNECT, target=best))

        timing = connected & (now >= self.suppress_until - 1e-9)
        below = timing & (s_sinr < cfg.rlf.q_out)
        self.rlf_onset = np.where(below, np.where(np.isnan(self.rlf_onset), now, self.rlf_onset), np.nan)
        failed = self.rlf.update(s_sinr, now, timing)
        for u in np.flatnonzero(failed):
            self._event(MobilityEvent(now, int(u), RLF, source=int(self.serving[u]),
                                      onset=float(self.rlf_onset[u])))
            self.serving[u] = DETACHED
            self.a3.reset(u)
            self.rlf.reset(u)
            self.rlf_onset[u] = np.nan

        if k % self._meas_every == 0:
            self._measure(now, rsrp, pos)

    def _measure(self, now: float, rsrp: np.ndarray, pos: np.ndarray) -> None:
        net = self.network
        serv = np.where(self.serving >= 0, self.serving, 0)
        targets = self.a3.evaluate(rsrp, self.serving, self.hys[serv], self.ttt[serv], now)
        reports: dict[int, set[int]] = {}
        for u in np.flatnonzero(targets >= 0):
            s, t = int(self.serving[u]), int(targets[u])
            self._event(MobilityEvent(now, int(u), HO, source=s, target=t))
            reports.setdefault(s, set()).add(t)
            self.serving[u] = t
            self.a3.reset(u)
            self.rlf.reset(u)
            self.rlf_onset[u] = np.nan
            self.suppress_until[u] = now + self.config.rlf.interruption

        connected = self.serving >= 0
        masked = rsrp.copy()
        masked[np.arange(len(rsrp)), np.where(connected, self.serving, 0)] = -np.inf
        strongest = masked.argmax(axis=1)
        for u in np.flatnonzero(connected & np.isfinite(masked.max(axis=1))):
            reports.setdefault(int(self.serving[u]), set()).add(int(strongest[u]))
        for cell_id in sorted(reports):
            cell = net.cells[cell_id]
            update_nrt(cell, [(net.cells[t].pci, t) for t in sorted(reports[cell_id])], now)

        if len(self.fue_idx):
            homes = self.fue_home + 1
            p = pos[self.fue_idx]
            d = np.hypot(*(p - net.positions[homes]).T)
            level = rsrp[self.fue_idx, homes]
            for i in range(len(self.fue_idx)):
                if np.isfinite(level[i]):
                    self.fue_logs[i][-1].append((now, float(d[i]), float(level[i])))

    def _remove_stale(self, now: float) -> None:
        net = self.network
        m = net.cell_rsrp()
        for cell in net.cells:
            if cell.powered:
                thr = -np.inf if self.config.features.anr == "full" else self.threshold
                remove_stale(cell, now, self.config.anr.ttl, net, thr, m[cell.id])

    def _run_cco(self, now: float) -> None:
        cfg, net = self.config, self.network
        changed = set()
        for cell in net.henbs:
            logs = [seg for i, home in enumerate(self.fue_home) if home + 1 == cell.id
                    for seg in self.fue_logs[i]]
            est = cco_mod.estimate_boundary(cell, logs, cfg.cco.jump_threshold)
            old = cell.tx_power
            new = cco_mod.reoptimize_power(cell, est, net, cfg.thresholds, cfg.radio, cfg.power)
            self.cco_rows.append({"time": now, "cell": cell.id, "estimated_radius": est.estimated_radius,
                                  "true_radius": float(net.apartment_radii[cell.id - 1]),
                                  "sample_count": est.sample_count, "jump_magnitude": est.jump_magnitude,
                                  "confidence": est.confidence, "old_power": old, "new_power": new})
            if new != old:
                cell.tx_power = new
                changed.add(cell.id)
        if changed:
            self._break_logs(changed)
        self.son_actions.append((now, "cco"))

    def _coverage(self) -> cco_mod.CoverageReport:
        net = self.network
        pos = self.mobility.pos
        indoor = np.zeros(len(pos), dtype=bool)
        if len(self.fue_idx):
            apt = net.apartment_of(pos[self.fue_idx])
            indoor[self.fue_idx] = apt == self.fue_home
        return cco_mod.coverage_metrics(net, pos, self.ue_kinds, self.config.thresholds, indoor)

    def _end_epoch(self, epoch: int, now: float) -> dict:
        cfg, net = self.config, self.network
        records = classify_event(self.epoch_events, cfg.rlf)
        self.epoch_events = []
        counts = totals(records)
        by_cell = count_by_cell(records)
        weights = cfg.mro.weights()
        conflicts = detect_conflicts(net, self.threshold)
        cov = self._coverage()
        powered = [c for c in net.cells if c.powered]
        row = {
            "epoch": epoch,
            "pci_collisions": len(conflicts.collisions),
            "pci_confusions": len(conflicts.confusions),
            "mean_nrt_size": float(np.mean([len(c.nrt) for c in powered])),
            **{f"n_{k}": counts[k] for k in CLASSIFICATIONS},
            "rlf_ratio": rlf_ratio(counts),
            "unnecessary_ho_ratio": unnecessary_ho_ratio(counts),
            "mro_cost_total": float(sum(cost(c, weights) for c in by_cell.values())),
            "macro_coverage_ratio": cov.macro_coverage_ratio,
            "smallcell_coverage_ratio": cov.smallcell_coverage_ratio,
            "hole_ratio": cov.hole_ratio,
        }
        if self.mro is not None:
            params = self.mro.step(by_cell)
            for c, p in params.items():
                self.hys[c], self.ttt[c] = p.hysteresis, p.ttt
            self.son_actions.append((now, "mro"))
        if cfg.features.cco and now - self._last_cco >= cfg.cco.period - 1e-9:
            self._run_cco(now)
            self._last_cco = now
        return row

    def run(self) -> MetricsReport:
        cfg = self.config
        if not self.configured:
            self.setup()
        dt = cfg.sim.dt
        steps = max(1, int(round(cfg.sim.duration / dt)))
        per_epoch = max(1, int(round(cfg.sim.epoch_length / dt)))
        self._meas_every = max(1, int(round(cfg.rlf.measurement_period / dt)))
        removal_every = max(1, int(round(cfg.anr.removal_period / dt)))
        self._last_cco = self.start_time
        self._attach_all(self.network.rsrp_at(self.mobility.pos))
        rows = []
        epoch = 1
        for k in range(1, steps + 1):
            now = self.start_time + k * dt
            self._step(k, now)
            if k % removal_every == 0:
                self._remove_stale(now)
            if k % per_epoch == 0 or k == steps:
                rows.append(self._end_epoch(epoch, now))
                epoch += 1
                if cfg.sim.stationary_epochs and k < steps:
                    self._restart_epoch()
        meta = {"seed": cfg.sim.seed, "config_digest": cfg.digest(), "cells": len(self.network.cells),
                "ues": len(self.ue_kinds), "start_time": self.start_time, "steps": steps}
        history = {c: list(s.cost_history) for c, s in self.mro.states.items()} if self.mro else {}
        return MetricsReport(rows, meta, list(self.events), self.pci_reports, self.setup_conflicts,
                             self.power_on, self.cco_rows, history, self.son_actions)


def run(config: ScenarioConfig) -> MetricsReport:
    return Simulation(config).run()


def audit(config: ScenarioConfig) -> Simulation:
    """Topology generation plus self-configuration only."""
    sim = Simulation(config)
    sim.setup()
    return sim


SUMMARY_COLUMNS = (
    "pci_collisions", "pci_confusions", "pci_fallbacks", "mean_nrt_size",
    *(f"n_{k}" for k in CLASSIFICATIONS),
    "rlf_ratio", "unnecessary_ho_ratio", "mro_cost_first", "mro_cost_final",
    "macro_coverage_ratio", "smallcell_coverage_ratio", "hole_ratio",
)


def summarize(report: MetricsReport) -> dict:
    """One sweep row: setup PCI audit, run totals and final-epoch coverage."""
    t = report.totals()
    last = report.rows[-1]
    return {
        "pci_collisions": len(report.setup_conflicts.collisions),
        "pci_confusions": len(report.setup_conflicts.confusions),
        "pci_fallbacks": sum(a.fallback_used for a in report.pci_assignments),
        "mean_nrt_size": float(np.mean([r["mean_nrt_size"] for r in report.rows])),
        **{f"n_{k}": t[k] for k in CLASSIFICATIONS},
        "rlf_ratio": rlf_ratio(t),
        "unnecessary_ho_ratio": unnecessary_ho_ratio(t),
        "mro_cost_first": report.rows[0]["mro_cost_total"],
        "mro_cost_final": last["mro_cost_total"],
        "macro_coverage_ratio": last["macro_coverage_ratio"],
        "smallcell_coverage_ratio": last["smallcell_coverage_ratio"],
        "hole_ratio": last["hole_ratio"],
    }


def _sweep_job(args) -> dict:
    config, = args
    return summarize(run(config))


@dataclass
class SweepTable:
    param: str
    rows: list[dict]
    stats: list[dict]

    def text(self) -> str:
        cols = ("value", "seed", *SUMMARY_COLUMNS)
        lines = [f"# param: {self.param}", ",".join(cols)]
        lines += [",".join(_fmt(r[c]) for c in cols) for r in self.rows]
        lines.append("")
        stat_cols = ("value", "statistic", *SUMMARY_COLUMNS)
        lines.append(",".join(stat_cols))
        lines += [",".join(_fmt(r[c]) for c in stat_cols) for r in self.stats]
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "sweep.csv"
        path.write_text(self.text())
        (out / "sweep.json").write_text(json.dumps(
            {"param": self.param, "rows": self.rows, "stats": self.stats}, indent=1, sort_keys=True) + "\n")
        return path


def sweep(config: ScenarioConfig, param: str, values, seeds, jobs: int = 1) -> SweepTable:
    """Independent runs over values x seeds; rows come back in declared order."""
    configs = []
    keys = []
    for value, seed in itertools.product(values, seeds):
        cfg = with_param(with_param(config, param, value), "sim.seed", int(seed))
        configs.append((cfg,))
        keys.append((value, int(seed)))
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_sweep_job, configs))
    else:
        summaries = [_sweep_job(c) for c in configs]
    rows = [{"value": v, "seed": s, **summ} for (v, s), summ in zip(keys, summaries)]
    stats = []
    for value in values:
        group = [r for r in rows if r["value"] == value]
        for name, fn in (("mean", np.mean), ("std", np.std)):
            stats.append({"value": value, "statistic": name,
                          **{c: float(fn([r[c] for r in group])) for c in SUMMARY_COLUMNS}})
    return SweepTable(param, rows, stats)
