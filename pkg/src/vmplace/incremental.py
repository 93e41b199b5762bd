"""Incremental placement: relieve overloaded servers by migrating VMs away.

On each overloaded server the lowest-priority VMs leave first. Among equal
priorities the VM using more of the overloaded resource goes first. Each
victim moves to the server with the most residual capacity of its dominant
resource that can take its whole demand without becoming overloaded itself.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Optional, Union

from vmplace.classifier import ClassifierConfig, dominant_resources
from vmplace.model import (
    KINDS,
    Cluster,
    ResourceKind,
    ResourceVector,
    ServerState,
    StalePlanError,
    ValidationError,
    VmLookup,
    as_vm_map,
    load,
    utilization,
)

Threshold = Union[float, ResourceVector, tuple]

ASCENDING = "ascending"
# Inverted victim order, kept as a control for experiments.
DESCENDING = "descending"


def threshold_vector(threshold: Threshold) -> tuple[float, float, float, float]:
    if isinstance(threshold, (int, float)):
        vals = (float(threshold),) * 4
    else:
        vals = tuple(float(t) for t in threshold)
    if len(vals) != 4 or not all(0 < t <= 2 for t in vals):
        raise ValidationError(f"overload threshold must be in (0, 2] per resource, got {threshold}")
    return vals


@dataclass(frozen=True)
class OverloadReport:
    server_id: int
    overloaded_resources: frozenset[ResourceKind]
    utilization_at_detection: ResourceVector

    def __post_init__(self):
        if not self.overloaded_resources:
            raise ValidationError("an overload report needs at least one overloaded resource")

    @property
    def trigger(self) -> ResourceKind:
        """The most utilized overloaded resource (lowest kind on ties)."""
        return max(
            sorted(self.overloaded_resources),
            key=lambda k: self.utilization_at_detection[k],
        )


@dataclass(frozen=True)
class Move:
    vm_id: int
    src: int
    dst: int


@dataclass
class MigrationPlan:
    moves: list[Move] = field(default_factory=list)
    unresolved: list[int] = field(default_factory=list)
    state_version: int = 0
    threshold: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    demands: Optional[Mapping[int, ResourceVector]] = None

    def __len__(self):
        return len(self.moves)


def detect_overloads(servers: Iterable[ServerState], vms: VmLookup, threshold: Threshold = 1.0,
                     demands: Optional[Mapping[int, ResourceVector]] = None) -> list[OverloadReport]:
    """One report per server whose utilization exceeds the threshold, ordered by server id."""
    thr = threshold_vector(threshold)
    vm_map = as_vm_map(vms)
    reports = []
    for s in sorted(servers, key=lambda s: s.id):
        u = utilization(s, vm_map, demands)
        over = frozenset(k for k, x, t in zip(KINDS, u, thr) if x > t)
        if over:
            reports.append(OverloadReport(s.id, over, u))
    return reports


def _effective_dominant(dominant: frozenset, trigger: ResourceKind) -> ResourceKind:
    if trigger in dominant:
        return trigger
    if dominant:
        return min(dominant)
    return trigger


def plan_migrations(cluster: Cluster, reports: Iterable[OverloadReport],
                    demands: Optional[Mapping[int, ResourceVector]] = None,
                    threshold: Threshold = 1.0, cfg: Optional[ClassifierConfig] = None,
                    victim_order: str = ASCENDING) -> MigrationPlan:
    """Plan migrations off every reported server against a working copy of ``cluster``.

    ``demands`` gives the actual demand per VM id (reserved demand when
    absent). The cluster itself is not modified.
    """
    if victim_order not in (ASCENDING, DESCENDING):
        raise ValidationError(f"unknown victim order {victim_order!r}")
    thr = threshold_vector(threshold)
    cfg = cfg or ClassifierConfig()
    vms = cluster.vms
    demands = dict(demands) if demands is not None else {}

    def demand(vm_id) -> ResourceVector:
        d = demands.get(vm_id)
        return vms[vm_id].demand if d is None else d

    servers = cluster.servers
    caps = {sid: s.capacity.as_tuple() for sid, s in servers.items()}
    used = {sid: load(s, vms, demands) for sid, s in servers.items()}
    hosted = {sid: list(s.hosted) for sid, s in servers.items()}

    def overloaded(sid) -> list[int]:
        out = []
        for i, (u, c, t) in enumerate(zip(used[sid], caps[sid], thr)):
            if (c == 0 and u > 0) or (c > 0 and u / c > t):
                out.append(i)
        return out

    def accepts(sid, d) -> bool:
        for u, x, c, t in zip(used[sid], d, caps[sid], thr):
            after = u + x
            if after > c:
                return False
            if c > 0 and after / c > t:
                return False
        return True

    plan = MigrationPlan(state_version=cluster.version, threshold=thr, demands=demands)
    sign = 1 if victim_order == ASCENDING else -1
    for rep in sorted(reports, key=lambda r: r.server_id):
        src = rep.server_id
        trig = rep.trigger
        ti = trig - 1
        candidates = sorted(
            hosted[src],
            key=lambda v: (sign * vms[v].priority, -demand(v).as_tuple()[ti], v),
        )
        for vm_id in candidates:
            hot = overloaded(src)
            if not hot:
                break
            d = demand(vm_id).as_tuple()
            # Moving a VM that uses none of the hot resources cannot help.
            if not any(d[i] > 0 for i in hot):
                continue
            ri = _effective_dominant(dominant_resources(vms[vm_id], cfg), trig) - 1
            dests = [sid for sid in servers if sid != src and accepts(sid, d)]
            if not dests:
                continue
            dst = min(dests, key=lambda sid: (-(caps[sid][ri] - used[sid][ri]), sid))
            hosted[src].remove(vm_id)
            hosted[dst].append(vm_id)
            for i, x in enumerate(d):
                used[src][i] -= x
                used[dst][i] += x
            plan.moves.append(Move(vm_id, src, dst))
        if overloaded(src):
            plan.unresolved.append(src)
    return plan


def apply_plan(cluster: Cluster, plan: MigrationPlan) -> Cluster:
    """Apply the moves in order, checking each destination stays within the plan's threshold."""
    if plan.state_version != cluster.version:
        raise StalePlanError(
            f"plan was computed for state version {plan.state_version}, "
            f"cluster is at {cluster.version}"
        )
    for mv in plan.moves:
        if cluster.placement.get(mv.vm_id) != mv.src:
            raise StalePlanError(f"VM {mv.vm_id} is not on server {mv.src}")
        cluster.move(mv.vm_id, mv.dst)
        cluster.migrations += 1
        u = cluster.utilization(mv.dst, plan.demands)
        # Slack only absorbs summation-order rounding.
        if any(x > min(t, 1.0) + 1e-9 for x, t in zip(u, plan.threshold)):
            raise RuntimeError(f"move of VM {mv.vm_id} overloads server {mv.dst}")
    return cluster
