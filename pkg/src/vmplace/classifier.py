"""Gray-box classification of VMs into the five placement sets.

Sets 1-4 hold VMs dominated by CPU, memory, network and disk respectively.
Set 5 holds VMs without a usable preference: nothing dominant, or three or
more dominant resources.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from vmplace.model import KINDS, ResourceKind, ResourceVector, ValidationError, VmSpec

# A VM with this many dominant resources or more carries no useful preference.
MAX_DOMINANT = 2


class ClassificationError(ValueError):
    pass


class PlacementSet(enum.IntEnum):
    CPU = 1
    MEMORY = 2
    NETWORK = 3
    DISK = 4
    NO_PREFERENCE = 5

    @property
    def resource(self) -> ResourceKind | None:
        if self is PlacementSet.NO_PREFERENCE:
            return None
        return ResourceKind(int(self))


@dataclass(frozen=True)
class ClassifierConfig:
    alpha: float = 0.75
    reference_capacity: ResourceVector = field(
        default_factory=lambda: ResourceVector(1.0, 1.0, 1.0, 1.0)
    )

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValidationError(f"alpha must be in (0, 1], got {self.alpha}")
        if not all(c > 0 for c in self.reference_capacity):
            raise ValidationError("reference_capacity components must be > 0")


def infer_dominant_set(demand: ResourceVector, cfg: ClassifierConfig) -> frozenset[ResourceKind]:
    """Resources whose normalized share is within ``alpha`` of the largest share."""
    shares = [d / c for d, c in zip(demand, cfg.reference_capacity)]
    top = max(shares)
    if top <= 0:
        raise ClassificationError("demand is zero in every resource")
    cut = cfg.alpha * top
    return frozenset(k for k, s in zip(KINDS, shares) if s > 0 and s >= cut)


def dominant_resources(vm: VmSpec, cfg: ClassifierConfig) -> frozenset[ResourceKind]:
    """Declared dominant set if present, otherwise the inferred one (empty for zero demand)."""
    if vm.dominant_set is not None:
        return vm.dominant_set
    try:
        return infer_dominant_set(vm.demand, cfg)
    except ClassificationError:
        return frozenset()


def set_for(dominant: frozenset[ResourceKind]) -> PlacementSet:
    if not dominant or len(dominant) > MAX_DOMINANT:
        return PlacementSet.NO_PREFERENCE
    # Multi-dominant VMs go with their first dominant resource.
    return PlacementSet(int(min(dominant)))


def assign_set(vm: VmSpec, cfg: ClassifierConfig) -> PlacementSet:
    return set_for(dominant_resources(vm, cfg))
