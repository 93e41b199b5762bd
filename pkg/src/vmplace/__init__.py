"""Priority-aware gray-box VM placement and a small datacenter simulator."""

from vmplace.model import (
    Cluster,
    ResourceKind,
    ResourceVector,
    ServerState,
    VmSpec,
    WorkloadModel,
    fits,
    mean_utilization,
    utilization,
)
from vmplace.classifier import ClassifierConfig, PlacementSet, assign_set, infer_dominant_set
from vmplace.initial import InitialPlacementReport, place_all
from vmplace.incremental import (
    MigrationPlan,
    OverloadReport,
    apply_plan,
    detect_overloads,
    plan_migrations,
)

__version__ = "0.1.0"

__all__ = [
    "Cluster",
    "ResourceKind",
    "ResourceVector",
    "ServerState",
    "VmSpec",
    "WorkloadModel",
    "fits",
    "mean_utilization",
    "utilization",
    "ClassifierConfig",
    "PlacementSet",
    "assign_set",
    "infer_dominant_set",
    "InitialPlacementReport",
    "place_all",
    "MigrationPlan",
    "OverloadReport",
    "apply_plan",
    "detect_overloads",
    "plan_migrations",
]
