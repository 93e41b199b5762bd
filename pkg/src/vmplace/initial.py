"""Initial placement: spread VMs of the same dominant resource across servers.

Sets are processed in order 1..5. Within a set, VMs go highest priority
first, each onto the first server (in residual-capacity order for the set's
resource) that can hold its full demand vector. Servers are re-sorted after
every placement, so consecutive VMs of one set land on different hosts.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

from vmplace.classifier import ClassifierConfig, PlacementSet, assign_set
from vmplace.model import ServerState, VmSpec, as_vm_map, check_unique_ids, load

NO_FIT = "no server fits"


@dataclass
class InitialPlacementReport:
    placement: dict[int, int] = field(default_factory=dict)
    # VM id -> reason it could not be placed
    unplaced: dict[int, str] = field(default_factory=dict)
    placement_order: list[tuple[int, int]] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.unplaced

    def to_dict(self) -> dict:
        return {
            "placement": {str(k): v for k, v in sorted(self.placement.items())},
            "unplaced": {str(k): v for k, v in sorted(self.unplaced.items())},
            "placement_order": [list(p) for p in self.placement_order],
        }


class _Packer:
    """Working copy of server loads shared by the initial placer and the baselines."""

    def __init__(self, vms, servers):
        self.vm_map = as_vm_map(vms)
        self.servers = sorted((s.copy() for s in servers), key=lambda s: s.id)
        self.used = {s.id: load(s, self.vm_map) for s in self.servers}
        self.report = InitialPlacementReport()
        for s in self.servers:
            for vm_id in s.hosted:
                self.report.placement[vm_id] = s.id

    def fits(self, server: ServerState, vm: VmSpec) -> bool:
        used = self.used[server.id]
        return all(u + d <= c for u, d, c in zip(used, vm.demand, server.capacity))

    def residual(self, server: ServerState, i: int) -> float:
        return server.capacity.as_tuple()[i] - self.used[server.id][i]

    def place(self, server: ServerState, vm: VmSpec) -> None:
        server.hosted.append(vm.id)
        used = self.used[server.id]
        for i, d in enumerate(vm.demand):
            used[i] += d
        self.report.placement[vm.id] = server.id
        self.report.placement_order.append((vm.id, server.id))

    def reject(self, vm: VmSpec, reason: str = NO_FIT) -> None:
        self.report.unplaced[vm.id] = reason


def _min_residual_share(packer: _Packer, server: ServerState) -> float:
    shares = [
        packer.residual(server, i) / c
        for i, c in enumerate(server.capacity) if c > 0
    ]
    return min(shares) if shares else 0.0


def place_all(vms: Iterable[VmSpec], servers: Iterable[ServerState],
              cfg: ClassifierConfig | None = None) -> InitialPlacementReport:
    """Run the gray-box initial placement.

    Servers are not modified; the result lives in the returned report. VMs
    that fit nowhere are listed in ``report.unplaced`` and the run continues.
    Servers may arrive pre-loaded, in which case placement is additive.
    """
    vms = list(vms)
    servers = list(servers)
    check_unique_ids(vms, servers)
    cfg = cfg or ClassifierConfig()
    packer = _Packer(vms, servers)

    sets: dict[PlacementSet, list[VmSpec]] = {p: [] for p in PlacementSet}
    for vm in vms:
        if vm.id in packer.report.placement:
            continue
        sets[assign_set(vm, cfg)].append(vm)

    for pset in PlacementSet:
        members = sorted(sets[pset], key=lambda v: (-v.priority, v.id))
        if pset.resource is not None:
            i = pset.resource - 1

            def key(s, i=i):
                return (-packer.residual(s, i), s.id)
        else:
            def key(s):
                return (-_min_residual_share(packer, s), s.id)

        for vm in members:
            for server in sorted(packer.servers, key=key):
                if packer.fits(server, vm):
                    packer.place(server, vm)
                    break
            else:
                packer.reject(vm)
    return packer.report
