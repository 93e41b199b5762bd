"""Domain types shared by the placers and the simulator.

Resources are abstract reals. A server's capacity vector fixes the unit scale
for each resource, so heterogeneity only enters through capacities.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Optional, Union


class ValidationError(ValueError):
    """Input violates a documented bound or uniqueness rule."""


class UnknownVmError(KeyError):
    def __init__(self, vm_id):
        super().__init__(vm_id)
        self.vm_id = vm_id

    def __str__(self):
        return f"unknown VM id {self.vm_id}"


class CapacityDomainError(ArithmeticError):
    """Nonzero demand against a zero-capacity resource."""


class ResourceKind(enum.IntEnum):
    CPU = 1
    MEMORY = 2
    NETWORK = 3
    DISK = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, name: Union[str, int, "ResourceKind"]) -> "ResourceKind":
        if isinstance(name, cls):
            return name
        if isinstance(name, int):
            return cls(name)
        key = name.strip().upper()
        aliases = {"MEM": "MEMORY", "NET": "NETWORK"}
        try:
            return cls[aliases.get(key, key)]
        except KeyError:
            raise ValidationError(f"unknown resource {name!r}") from None


KINDS = tuple(ResourceKind)


@dataclass(frozen=True)
class ResourceVector:
    """A non-negative quantity per resource, ordered CPU, memory, network, disk."""

    cpu: float = 0.0
    memory: float = 0.0
    network: float = 0.0
    disk: float = 0.0

    def __post_init__(self):
        for name in ("cpu", "memory", "network", "disk"):
            v = getattr(self, name)
            if not v >= 0:  # also rejects NaN
                raise ValidationError(f"{name} component must be >= 0, got {v}")

    @classmethod
    def of(cls, values: Iterable[float]) -> "ResourceVector":
        vals = [float(v) for v in values]
        if len(vals) != 4:
            raise ValidationError(f"resource vector needs 4 components, got {len(vals)}")
        return cls(*vals)

    @classmethod
    def zeros(cls) -> "ResourceVector":
        return cls()

    def __iter__(self) -> Iterator[float]:
        return iter((self.cpu, self.memory, self.network, self.disk))

    def __getitem__(self, kind: ResourceKind) -> float:
        return self.as_tuple()[ResourceKind(kind) - 1]

    def __len__(self):
        return 4

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cpu, self.memory, self.network, self.disk)

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(*(a + b for a, b in zip(self, other)))

    def scale(self, factor: float) -> "ResourceVector":
        return ResourceVector(*(a * factor for a in self))

    def fits_within(self, other: "ResourceVector") -> bool:
        return all(a <= b for a, b in zip(self, other))

    def to_list(self) -> list[float]:
        return list(self.as_tuple())


@dataclass(frozen=True)
class WorkloadModel:
    """Parameters of the time-varying actual demand of one VM.

    Calm demand is ``base_fraction`` of the reservation on every resource.
    While a spike is active, dominant resources are multiplied by
    ``spike_multiplier``.
    """

    base_fraction: float = 0.5
    spike_probability: float = 0.1
    spike_multiplier: float = 2.0
    spike_duration: int = 3

    def __post_init__(self):
        if not 0 < self.base_fraction <= 1:
            raise ValidationError(f"base_fraction must be in (0, 1], got {self.base_fraction}")
        if not 0 <= self.spike_probability <= 1:
            raise ValidationError(
                f"spike_probability must be in [0, 1], got {self.spike_probability}"
            )
        if not self.spike_multiplier >= 1:
            raise ValidationError(f"spike_multiplier must be >= 1, got {self.spike_multiplier}")
        if isinstance(self.spike_duration, bool) or not isinstance(self.spike_duration, int) \
                or self.spike_duration < 1:
            raise ValidationError(
                f"spike_duration must be a positive integer, got {self.spike_duration!r}"
            )


@dataclass(frozen=True)
class VmSpec:
    id: int
    priority: int
    demand: ResourceVector
    # None means "not declared": the classifier infers it from the demand.
    dominant_set: Optional[frozenset[ResourceKind]] = None
    app_id: int = 0
    workload: WorkloadModel = field(default_factory=WorkloadModel)

    def __post_init__(self):
        if self.id < 0:
            raise ValidationError(f"VM id must be non-negative, got {self.id}")
        if self.app_id < 0:
            raise ValidationError(f"app_id must be non-negative, got {self.app_id}")
        if isinstance(self.priority, bool) or not isinstance(self.priority, int) \
                or not 1 <= self.priority <= 100:
            raise ValidationError(
                f"VM {self.id}: priority must be an integer in [1, 100], got {self.priority!r}"
            )
        if self.dominant_set is not None:
            object.__setattr__(
                self, "dominant_set", frozenset(ResourceKind.parse(k) for k in self.dominant_set)
            )


@dataclass
class ServerState:
    id: int
    capacity: ResourceVector
    hosted: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.id < 0:
            raise ValidationError(f"server id must be non-negative, got {self.id}")

    def copy(self) -> "ServerState":
        return ServerState(self.id, self.capacity, list(self.hosted))


VmLookup = Union[Mapping[int, VmSpec], Iterable[VmSpec]]


def as_vm_map(vms: VmLookup) -> Mapping[int, VmSpec]:
    if isinstance(vms, Mapping):
        return vms
    return {vm.id: vm for vm in vms}


def _demand_of(vm_id, vm_map, demands):
    if demands is not None and vm_id in demands:
        return demands[vm_id]
    try:
        return vm_map[vm_id].demand
    except KeyError:
        raise UnknownVmError(vm_id) from None


def load(server: ServerState, vms: VmLookup,
         demands: Optional[Mapping[int, ResourceVector]] = None) -> list[float]:
    """Per-resource demand sum of the hosted VMs.

    ``demands`` overrides the reserved demand per VM id (actual demand during
    simulation).
    """
    vm_map = as_vm_map(vms)
    total = [0.0, 0.0, 0.0, 0.0]
    for vm_id in server.hosted:
        d = _demand_of(vm_id, vm_map, demands)
        total[0] += d.cpu
        total[1] += d.memory
        total[2] += d.network
        total[3] += d.disk
    return total


def _ratio(used, cap, kind):
    if cap == 0:
        if used == 0:
            return 0.0
        raise CapacityDomainError(f"nonzero {kind.label} demand on a server with zero capacity")
    return used / cap


def utilization(server: ServerState, vms: VmLookup,
                demands: Optional[Mapping[int, ResourceVector]] = None) -> ResourceVector:
    """Hosted demand over capacity, per resource. Values above 1.0 mean overcommitment."""
    used = load(server, vms, demands)
    return ResourceVector(*(_ratio(u, c, k) for u, c, k in zip(used, server.capacity, KINDS)))


def available(server: ServerState, vms: VmLookup,
              demands: Optional[Mapping[int, ResourceVector]] = None) -> list[float]:
    """Residual capacity per resource. Negative when overcommitted."""
    used = load(server, vms, demands)
    return [c - u for c, u in zip(server.capacity, used)]


def fits(server: ServerState, vm: VmSpec, vms: VmLookup) -> bool:
    used = load(server, vms)
    return all(u + d <= c for u, d, c in zip(used, vm.demand, server.capacity))


def mean_utilization(servers: Iterable[ServerState], vms: VmLookup,
                     demands: Optional[Mapping[int, ResourceVector]] = None) -> ResourceVector:
    vm_map = as_vm_map(vms)
    servers = list(servers)
    if not servers:
        raise ValidationError("mean utilization of an empty server collection")
    sums = [0.0, 0.0, 0.0, 0.0]
    for s in servers:
        for i, u in enumerate(utilization(s, vm_map, demands)):
            sums[i] += u
    return ResourceVector(*(x / len(servers) for x in sums))


def check_unique_ids(vms: Iterable[VmSpec], servers: Iterable[ServerState]) -> None:
    seen = set()
    for vm in vms:
        if vm.id in seen:
            raise ValidationError(f"duplicate VM id {vm.id}")
        seen.add(vm.id)
    seen = set()
    for s in servers:
        if s.id in seen:
            raise ValidationError(f"duplicate server id {s.id}")
        seen.add(s.id)


class StalePlanError(RuntimeError):
    pass


class Cluster:
    """Mutable cluster state: servers, VMs and the placement map kept in agreement.

    ``version`` increases on every mutation so migration plans computed
    against an older state can be rejected.
    """

    def __init__(self, servers: Iterable[ServerState], vms: Iterable[VmSpec]):
        servers = [s.copy() for s in servers]
        vms = list(vms)
        check_unique_ids(vms, servers)
        self.servers: dict[int, ServerState] = {s.id: s for s in sorted(servers, key=lambda s: s.id)}
        self.vms: dict[int, VmSpec] = {vm.id: vm for vm in vms}
        self.placement: dict[int, int] = {}
        self.version = 0
        self.migrations = 0
        for s in self.servers.values():
            for vm_id in s.hosted:
                if vm_id not in self.vms:
                    raise UnknownVmError(vm_id)
                if vm_id in self.placement:
                    raise ValidationError(f"VM {vm_id} hosted on two servers")
                self.placement[vm_id] = s.id

    @classmethod
    def from_placement(cls, servers, vms, placement: Mapping[int, int]) -> "Cluster":
        cluster = cls([ServerState(s.id, s.capacity) for s in servers], vms)
        for vm_id in sorted(placement):
            cluster.place(vm_id, placement[vm_id])
        return cluster

    def place(self, vm_id: int, server_id: int) -> None:
        if vm_id not in self.vms:
            raise UnknownVmError(vm_id)
        if vm_id in self.placement:
            raise ValidationError(f"VM {vm_id} already placed on server {self.placement[vm_id]}")
        self.servers[server_id].hosted.append(vm_id)
        self.placement[vm_id] = server_id
        self.version += 1

    def move(self, vm_id: int, dst: int) -> None:
        src = self.placement[vm_id]
        if dst not in self.servers:
            raise ValidationError(f"unknown server id {dst}")
        self.servers[src].hosted.remove(vm_id)
        self.servers[dst].hosted.append(vm_id)
        self.placement[vm_id] = dst
        self.version += 1

    def utilization(self, server_id: int, demands=None) -> ResourceVector:
        return utilization(self.servers[server_id], self.vms, demands)

    def mean_utilization(self, demands=None) -> ResourceVector:
        return mean_utilization(self.servers.values(), self.vms, demands)

    def check_consistency(self) -> None:
        """Raise AssertionError unless hosted lists and the placement map agree."""
        seen = {}
        for s in self.servers.values():
            for vm_id in s.hosted:
                assert vm_id not in seen, f"VM {vm_id} on servers {seen[vm_id]} and {s.id}"
                seen[vm_id] = s.id
        assert seen == self.placement, "placement map disagrees with hosted lists"
