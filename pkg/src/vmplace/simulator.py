"""Discrete-time datacenter simulation.

Each tick regenerates every VM's actual demand, detects overloaded servers,
optionally migrates VMs off them, and accumulates :class:`SimMetrics`. All
randomness is a pure function of (seed, VM id, tick), so runs are
reproducible and the workload seen by a VM does not depend on where it is
placed.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import statistics
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from vmplace import rng
from vmplace.classifier import ClassifierConfig, dominant_resources
from vmplace.incremental import apply_plan, detect_overloads, plan_migrations
from vmplace.initial import InitialPlacementReport
from vmplace.model import Cluster, ResourceKind, ResourceVector, VmSpec
from vmplace.placers import run_placer
from vmplace.scenario import Scenario

log = logging.getLogger(__name__)

COUNTERS = ("hot_spot_events", "migrations", "unresolved_ticks", "priority_weighted_violation")


class UnplacedVmsError(RuntimeError):
    def __init__(self, report: InitialPlacementReport):
        self.report = report
        ids = ", ".join(str(i) for i in sorted(report.unplaced))
        super().__init__(f"initial placement left {len(report.unplaced)} VM(s) unplaced: {ids}")


def spike_started(vm_id: int, tick: int, seed: int, p: float) -> bool:
    return p > 0 and rng.uniform(seed, rng.STREAM_SPIKE, vm_id, tick) < p


def spike_active(vm: VmSpec, tick: int, seed: int) -> bool:
    """True if a spike began within the last ``spike_duration`` ticks (ticks start at 1)."""
    w = vm.workload
    first = max(1, tick - w.spike_duration + 1)
    return any(spike_started(vm.id, t, seed, w.spike_probability) for t in range(first, tick + 1))


def generate_demand(vm: VmSpec, tick: int, seed: int,
                    dominant: Optional[frozenset[ResourceKind]] = None,
                    spiking: Optional[bool] = None) -> ResourceVector:
    """Actual demand of ``vm`` at ``tick``.

    ``dominant`` defaults to the VM's declared or inferred dominant set.
    ``spiking`` forces the spike state; by default it is drawn from the seed.
    """
    w = vm.workload
    if dominant is None:
        dominant = dominant_resources(vm, ClassifierConfig())
    if spiking is None:
        spiking = spike_active(vm, tick, seed)
    out = []
    for kind, reserved in zip(ResourceKind, vm.demand):
        d = w.base_fraction * reserved
        if spiking and kind in dominant:
            d = min(d * w.spike_multiplier, reserved * w.spike_multiplier)
        out.append(d)
    return ResourceVector(*out)


@dataclass
class SimMetrics:
    hot_spot_events: int = 0
    migrations: int = 0
    unresolved_ticks: int = 0
    priority_weighted_violation: int = 0
    mean_utilization_series: list[list[float]] = field(default_factory=list)
    placed: int = 0
    unplaced: int = 0
    ticks: int = 0

    def counters(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in COUNTERS}

    def violation_per_event(self) -> float:
        if not self.hot_spot_events:
            return 0.0
        return self.priority_weighted_violation / self.hot_spot_events

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _snap(u: ResourceVector) -> list[float]:
    return [round(x, 9) for x in u]


@dataclass
class SimResult:
    metrics: SimMetrics
    events: list[dict]
    report: InitialPlacementReport
    cluster: Cluster

    def event_log(self) -> str:
        return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in self.events)


class Simulation:
    """Tick loop over an already placed cluster."""

    def __init__(self, cluster: Cluster, seed: int, threshold=(1.0,) * 4,
                 cfg: Optional[ClassifierConfig] = None, mitigation: bool = True,
                 victim_order: str = "ascending"):
        self.cluster = cluster
        self.seed = seed
        self.threshold = tuple(threshold)
        self.cfg = cfg or ClassifierConfig()
        self.mitigation = mitigation
        self.victim_order = victim_order
        self.metrics = SimMetrics(placed=len(cluster.placement))
        self.events: list[dict] = []
        self.dominant = {vid: dominant_resources(vm, self.cfg) for vid, vm in cluster.vms.items()}
        self._spiking = {vid: False for vid in cluster.placement}

    def demands(self, tick: int, spiking: Optional[dict[int, bool]] = None):
        out = {}
        for vid in sorted(self.cluster.placement):
            vm = self.cluster.vms[vid]
            s = spiking[vid] if spiking is not None else spike_active(vm, tick, self.seed)
            if s != self._spiking[vid]:
                self.events.append({"tick": tick, "kind": "SPIKE_START" if s else "SPIKE_END",
                                    "vm": vid})
                self._spiking[vid] = s
            out[vid] = generate_demand(vm, tick, self.seed, self.dominant[vid], s)
        return out

    def step(self, tick: int, spiking: Optional[dict[int, bool]] = None) -> None:
        cluster, m = self.cluster, self.metrics
        demands = self.demands(tick, spiking)
        reports = detect_overloads(cluster.servers.values(), cluster.vms, self.threshold, demands)
        m.hot_spot_events += len(reports)
        for rep in reports:
            self.events.append({
                "tick": tick, "kind": "HOTSPOT", "server": rep.server_id,
                "resources": [k.label for k in sorted(rep.overloaded_resources)],
                "util": _snap(rep.utilization_at_detection),
            })

        migrated = []
        if self.mitigation and reports:
            plan = plan_migrations(cluster, reports, demands, self.threshold, self.cfg,
                                   self.victim_order)
            apply_plan(cluster, plan)
            for mv in plan.moves:
                migrated.append(mv.vm_id)
                self.events.append({
                    "tick": tick, "kind": "MIGRATE", "vm": mv.vm_id, "src": mv.src,
                    "dst": mv.dst, "util": _snap(cluster.utilization(mv.src, demands)),
                })
            unresolved = plan.unresolved
            m.migrations += len(plan.moves)
        else:
            unresolved = [r.server_id for r in reports]

        for sid in unresolved:
            self.events.append({"tick": tick, "kind": "UNRESOLVED", "server": sid,
                                "util": _snap(cluster.utilization(sid, demands))})
        m.unresolved_ticks += len(unresolved)
        # VMs hurt this tick: those migrated plus those still on an overloaded server.
        hurt = migrated + [v for sid in unresolved for v in cluster.servers[sid].hosted]
        m.priority_weighted_violation += sum(cluster.vms[v].priority for v in hurt)
        m.mean_utilization_series.append(_snap(cluster.mean_utilization(demands)))
        m.ticks += 1

    def run(self, ticks: int) -> SimMetrics:
        for t in range(1, ticks + 1):
            self.step(t)
        return self.metrics


def initial_state(scenario: Scenario, seed: Optional[int] = None):
    seed = scenario.seed if seed is None else seed
    vms = scenario.build_vms(seed)
    servers = scenario.server_states()
    report = run_placer(scenario.placer, vms, servers, scenario.classifier, seed)
    if report.unplaced and not scenario.allow_unplaced:
        raise UnplacedVmsError(report)
    placed_vms = [vm for vm in vms if vm.id in report.placement]
    cluster = Cluster.from_placement(servers, placed_vms, report.placement)
    return report, cluster


def run(scenario: Scenario) -> SimResult:
    report, cluster = initial_state(scenario)
    sim = Simulation(cluster, scenario.seed, scenario.threshold, scenario.classifier,
                     scenario.mitigation, scenario.victim_order)
    for vm_id, server_id in report.placement_order:
        sim.events.append({"tick": 0, "kind": "PLACE", "vm": vm_id, "server": server_id})
    sim.metrics.unplaced = len(report.unplaced)
    sim.run(scenario.ticks)
    return SimResult(sim.metrics, sim.events, report, cluster)


def _run_counters(args) -> tuple[str, int, dict]:
    scenario, placer, seed = args
    result = run(scenario.with_overrides(placer=placer, seed=seed))
    counters = result.metrics.counters()
    counters["violation_per_event"] = result.metrics.violation_per_event()
    return placer, seed, counters


@dataclass
class Comparison:
    placers: list[str]
    seeds: list[int]
    # placer -> seed -> counter name -> value
    per_seed: dict[str, dict[int, dict[str, float]]]

    def rows(self) -> list[dict]:
        out = []
        for p in self.placers:
            row: dict = {"placer": p, "runs": len(self.seeds)}
            for name in COUNTERS + ("violation_per_event",):
                vals = [self.per_seed[p][s][name] for s in self.seeds]
                row[f"{name}_mean"] = statistics.fmean(vals)
                row[f"{name}_std"] = statistics.pstdev(vals)
            out.append(row)
        return out

    def to_dict(self) -> dict:
        return {
            "rows": self.rows(),
            "per_seed": {p: {str(s): v for s, v in self.per_seed[p].items()} for p in self.placers},
        }


def compare(scenario: Scenario, placers: Sequence[str], seeds: Sequence[int],
            jobs: int = 1) -> Comparison:
    """Run every placer under every seed; results do not depend on ``jobs``."""
    placers = list(placers)
    seeds = list(seeds)
    if len(placers) < 2:
        raise ValueError("compare needs at least two placers")
    if not seeds:
        raise ValueError("compare needs at least one seed")
    tasks = [(scenario, p, s) for p in placers for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_counters, tasks))
    else:
        results = [_run_counters(t) for t in tasks]
    per_seed: dict[str, dict[int, dict]] = {p: {} for p in placers}
    for placer, seed, counters in results:
        per_seed[placer][seed] = counters
    return Comparison(placers, seeds, per_seed)
