"""Reference placers and an exhaustive exact oracle for small instances."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Optional

from vmplace import rng
from vmplace.initial import InitialPlacementReport, _Packer
from vmplace.model import ServerState, ValidationError, VmSpec, check_unique_ids


class InstanceTooLargeError(ValidationError):
    pass


def _prepare(vms, servers):
    vms = list(vms)
    servers = list(servers)
    check_unique_ids(vms, servers)
    packer = _Packer(vms, servers)
    pending = sorted((v for v in vms if v.id not in packer.report.placement), key=lambda v: v.id)
    return packer, pending


def first_fit(vms: Iterable[VmSpec], servers: Iterable[ServerState]) -> InitialPlacementReport:
    """Each VM, in id order, goes to the lowest-id server with room for it."""
    packer, pending = _prepare(vms, servers)
    for vm in pending:
        for s in packer.servers:
            if packer.fits(s, vm):
                packer.place(s, vm)
                break
        else:
            packer.reject(vm)
    return packer.report


def _max_util_after(packer, server, vm):
    worst = 0.0
    for u, d, c in zip(packer.used[server.id], vm.demand, server.capacity):
        if c > 0:
            worst = max(worst, (u + d) / c)
    return worst


def best_fit(vms: Iterable[VmSpec], servers: Iterable[ServerState]) -> InitialPlacementReport:
    """Tightest fit: the server left with the highest peak utilization wins, ties by id."""
    packer, pending = _prepare(vms, servers)
    for vm in pending:
        options = [s for s in packer.servers if packer.fits(s, vm)]
        if not options:
            packer.reject(vm)
            continue
        packer.place(min(options, key=lambda s: (-_max_util_after(packer, s, vm), s.id)), vm)
    return packer.report


def random_fit(vms: Iterable[VmSpec], servers: Iterable[ServerState],
               seed: int) -> InitialPlacementReport:
    """Each VM, in id order, goes to a uniformly drawn server among those it fits."""
    packer, pending = _prepare(vms, servers)
    for vm in pending:
        options = [s for s in packer.servers if packer.fits(s, vm)]
        if not options:
            packer.reject(vm)
            continue
        pick = rng.below(len(options), seed, rng.STREAM_RANDOM_FIT, vm.id)
        packer.place(options[pick], vm)
    return packer.report


@dataclass(frozen=True)
class OracleLimits:
    max_vms: int = 10
    max_servers: int = 4


@dataclass
class OracleResult:
    feasible: bool
    best_placement: Optional[dict[int, int]]
    # Minimized peak utilization over all servers and resources; inf if infeasible.
    objective_value: float

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "best_placement": None if self.best_placement is None
            else {str(k): v for k, v in sorted(self.best_placement.items())},
            "objective_value": self.objective_value if self.feasible else None,
        }


def exact_oracle(vms: Iterable[VmSpec], servers: Iterable[ServerState],
                 limits: OracleLimits = OracleLimits()) -> OracleResult:
    """Exhaustive search for the assignment minimizing peak utilization.

    VMs are assigned in id order, servers tried in id order, so the search
    visits assignments lexicographically and keeps the first optimum found.
    Branches that are already infeasible or cannot beat the incumbent are
    cut, which never changes the answer because peak utilization only grows
    as VMs are added. Servers start empty.
    """
    vms = sorted(vms, key=lambda v: v.id)
    servers = sorted(servers, key=lambda s: s.id)
    check_unique_ids(vms, servers)
    if len(vms) > limits.max_vms or len(servers) > limits.max_servers:
        raise InstanceTooLargeError(
            f"exact oracle limited to {limits.max_vms} VMs and {limits.max_servers} servers, "
            f"got {len(vms)} VMs and {len(servers)} servers"
        )
    if not vms:
        return OracleResult(True, {}, 0.0)
    if not servers:
        return OracleResult(False, None, math.inf)

    caps = [s.capacity.as_tuple() for s in servers]
    demands = [v.demand.as_tuple() for v in vms]
    used = [(0.0, 0.0, 0.0, 0.0)] * len(servers)
    choice = [0] * len(vms)
    best = [math.inf, None]

    def search(i, current):
        if i == len(vms):
            if current < best[0]:
                best[0] = current
                best[1] = list(choice)
            return
        d = demands[i]
        for j, cap in enumerate(caps):
            before = used[j]
            after = tuple(a + b for a, b in zip(before, d))
            if any(a > c for a, c in zip(after, cap)):
                continue
            nxt = max(current, max((a / c) if c > 0 else 0.0 for a, c in zip(after, cap)))
            if nxt < best[0]:
                used[j] = after
                choice[i] = j
                search(i + 1, nxt)
                used[j] = before

    search(0, 0.0)
    if best[1] is None:
        return OracleResult(False, None, math.inf)
    placement = {vm.id: servers[j].id for vm, j in zip(vms, best[1])}
    return OracleResult(True, placement, best[0])


def oracle_report(vms, servers, limits: OracleLimits = OracleLimits()) -> InitialPlacementReport:
    """The oracle's optimum as a placement report, so it can stand in for a placer."""
    vms = list(vms)
    result = exact_oracle(vms, servers, limits)
    report = InitialPlacementReport()
    if not result.feasible:
        report.unplaced = {v.id: "no feasible assignment" for v in vms}
        return report
    report.placement = dict(result.best_placement)
    report.placement_order = sorted(result.best_placement.items())
    return report
