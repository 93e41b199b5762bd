"""Scenario files: TOML in, validated :class:`Scenario` out, and back.

See ``docs/scenario.example.toml`` for a commented example of every key.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import tomli
import tomli_w

from vmplace import rng
from vmplace.classifier import ClassifierConfig
from vmplace.incremental import ASCENDING, DESCENDING, threshold_vector
from vmplace.model import (
    KINDS,
    ResourceKind,
    ResourceVector,
    ServerState,
    ValidationError,
    VmSpec,
    WorkloadModel,
)
from vmplace.placers import PLACERS


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class PopulationGroup:
    count: int
    demand_min: ResourceVector
    demand_max: ResourceVector
    # None: infer from demand. Empty tuple: declared as having no preference.
    dominant: Optional[tuple[ResourceKind, ...]] = None
    workload: Optional[dict] = None


@dataclass(frozen=True)
class Population:
    groups: tuple[PopulationGroup, ...]
    priority_min: int = 1
    priority_max: int = 100


@dataclass(frozen=True)
class Scenario:
    servers: tuple[ResourceVector, ...]
    vms: tuple[VmSpec, ...] = ()
    population: Optional[Population] = None
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    workload: WorkloadModel = field(default_factory=WorkloadModel)
    threshold: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    ticks: int = 100
    seed: int = 0
    placer: str = "graybox"
    mitigation: bool = True
    victim_order: str = ASCENDING
    allow_unplaced: bool = False

    def with_overrides(self, **changes) -> "Scenario":
        changes = {k: v for k, v in changes.items() if v is not None}
        if "threshold" in changes:
            changes["threshold"] = threshold_vector(changes["threshold"])
        out = dataclasses.replace(self, **changes)
        validate(out)
        return out

    def server_states(self) -> list[ServerState]:
        return [ServerState(i, cap) for i, cap in enumerate(self.servers)]

    def build_vms(self, seed: Optional[int] = None) -> list[VmSpec]:
        """Explicit VMs, or the population drawn with ``seed`` (default: scenario seed)."""
        if self.population is None:
            return list(self.vms)
        return generate_population(self.population, self.workload,
                                   self.seed if seed is None else seed)


def generate_population(pop: Population, defaults: WorkloadModel, seed: int) -> list[VmSpec]:
    vms = []
    span = pop.priority_max - pop.priority_min + 1
    vm_id = 0
    for app_id, g in enumerate(pop.groups):
        model = _merge_workload(defaults, g.workload or {}, f"population.groups[{app_id}]")
        for _ in range(g.count):
            prio = pop.priority_min + rng.below(span, seed, rng.STREAM_POPULATION, vm_id, 0)
            demand = ResourceVector(*(
                lo + (hi - lo) * rng.uniform(seed, rng.STREAM_POPULATION, vm_id, 1 + r)
                if hi > lo else lo
                for r, (lo, hi) in enumerate(zip(g.demand_min, g.demand_max))
            ))
            dominant = None if g.dominant is None else frozenset(g.dominant)
            vms.append(VmSpec(vm_id, prio, demand, dominant, app_id, model))
            vm_id += 1
    return vms


def _merge_workload(base: WorkloadModel, overrides: dict, where: str) -> WorkloadModel:
    allowed = {f.name for f in dataclasses.fields(WorkloadModel)}
    unknown = set(overrides) - allowed
    if unknown:
        raise ScenarioError(f"{where}.workload: unknown key(s) {sorted(unknown)}")
    try:
        return dataclasses.replace(base, **overrides)
    except ValidationError as e:
        raise ScenarioError(f"{where}.workload: {e}") from None


# Parsing

_TOP_KEYS = {
    "seed", "ticks", "threshold", "placer", "mitigation", "victim_order", "allow_unplaced",
    "classifier", "workload", "servers", "vm", "population",
}


def _check_keys(table: dict, allowed: set, where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")


def _vector(value, where: str) -> ResourceVector:
    if isinstance(value, dict):
        _check_keys(value, {k.label for k in KINDS}, where)
        value = [value.get(k.label, 0.0) for k in KINDS]
    if not isinstance(value, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                              for x in value):
        raise ScenarioError(f"{where}: expected a list of 4 numbers [cpu, memory, network, disk]")
    try:
        return ResourceVector.of(value)
    except ValidationError as e:
        raise ScenarioError(f"{where}: {e}") from None


def _int(value, where: str, lo: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ScenarioError(f"{where}: must be >= {lo}, got {value}")
    return value


def _bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(f"{where}: expected true or false, got {value!r}")
    return value


def _dominant(value, where: str) -> tuple[ResourceKind, ...]:
    if not isinstance(value, list):
        raise ScenarioError(f"{where}: expected a list of resource names")
    try:
        kinds = sorted({ResourceKind.parse(v) for v in value})
    except (ValidationError, AttributeError) as e:
        raise ScenarioError(f"{where}: {e}") from None
    return tuple(kinds)


def _servers(raw, where="servers") -> tuple[ResourceVector, ...]:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: expected a table")
    _check_keys(raw, {"count", "capacity", "capacities"}, where)
    if "capacities" in raw:
        if "count" in raw or "capacity" in raw:
            raise ScenarioError(f"{where}: give either capacities or count + capacity")
        caps = raw["capacities"]
        if not isinstance(caps, list):
            raise ScenarioError(f"{where}.capacities: expected a list of vectors")
        out = tuple(_vector(c, f"{where}.capacities[{i}]") for i, c in enumerate(caps))
    else:
        if "count" not in raw or "capacity" not in raw:
            raise ScenarioError(f"{where}: needs count and capacity (or capacities)")
        count = _int(raw["count"], f"{where}.count", 0)
        out = (_vector(raw["capacity"], f"{where}.capacity"),) * count
    if not out:
        raise ScenarioError(f"{where}: at least one server is required")
    return out


def _vm(raw: dict, i: int, defaults: WorkloadModel) -> VmSpec:
    where = f"vm[{i}]"
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: expected a table")
    _check_keys(raw, {"id", "app_id", "priority", "demand", "dominant", "workload"}, where)
    for req in ("id", "priority", "demand"):
        if req not in raw:
            raise ScenarioError(f"{where}: missing required key {req!r}")
    vm_id = _int(raw["id"], f"{where}.id", 0)
    prio = _int(raw["priority"], f"{where}.priority")
    if not 1 <= prio <= 100:
        raise ScenarioError(f"{where}.priority: must be in [1, 100], got {prio}")
    demand = _vector(raw["demand"], f"{where}.demand")
    dominant = None
    if "dominant" in raw:
        dominant = frozenset(_dominant(raw["dominant"], f"{where}.dominant"))
    workload = _merge_workload(defaults, raw.get("workload", {}), where)
    app_id = _int(raw.get("app_id", 0), f"{where}.app_id", 0)
    return VmSpec(vm_id, prio, demand, dominant, app_id, workload)


def _population(raw: dict) -> Population:
    where = "population"
    _check_keys(raw, {"priority", "groups"}, where)
    prio = raw.get("priority", [1, 100])
    if not (isinstance(prio, list) and len(prio) == 2):
        raise ScenarioError(f"{where}.priority: expected [min, max]")
    lo = _int(prio[0], f"{where}.priority[0]")
    hi = _int(prio[1], f"{where}.priority[1]")
    if not 1 <= lo <= hi <= 100:
        raise ScenarioError(f"{where}.priority: need 1 <= min <= max <= 100, got [{lo}, {hi}]")
    groups = []
    raw_groups = raw.get("groups", [])
    if not isinstance(raw_groups, list) or not raw_groups:
        raise ScenarioError(f"{where}.groups: at least one group is required")
    for i, g in enumerate(raw_groups):
        gw = f"{where}.groups[{i}]"
        _check_keys(g, {"count", "demand_min", "demand_max", "dominant", "workload"}, gw)
        if "count" not in g or "demand_min" not in g:
            raise ScenarioError(f"{gw}: needs count and demand_min")
        dmin = _vector(g["demand_min"], f"{gw}.demand_min")
        dmax = _vector(g.get("demand_max", g["demand_min"]), f"{gw}.demand_max")
        if not dmin.fits_within(dmax):
            raise ScenarioError(f"{gw}: demand_min must be <= demand_max component-wise")
        dominant = _dominant(g["dominant"], f"{gw}.dominant") if "dominant" in g else None
        workload = g.get("workload")
        if workload is not None:
            _merge_workload(WorkloadModel(), workload, gw)
        groups.append(PopulationGroup(_int(g["count"], f"{gw}.count", 0), dmin, dmax,
                                      dominant, workload))
    return Population(tuple(groups), lo, hi)


def scenario_from_dict(data: dict) -> Scenario:
    _check_keys(data, _TOP_KEYS, "scenario")
    if "servers" not in data:
        raise ScenarioError("servers: section is required")
    servers = _servers(data["servers"])

    wraw = data.get("workload", {})
    workload = _merge_workload(WorkloadModel(), wraw, "scenario")

    craw = data.get("classifier", {})
    _check_keys(craw, {"alpha", "reference_capacity"}, "classifier")
    if "reference_capacity" in craw:
        ref = _vector(craw["reference_capacity"], "classifier.reference_capacity")
    else:
        # Largest capacity per resource across the servers.
        ref = ResourceVector(*(max(c[k] for c in servers) for k in KINDS))
    alpha = craw.get("alpha", 0.75)
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
        raise ScenarioError(f"classifier.alpha: expected a number, got {alpha!r}")
    try:
        classifier = ClassifierConfig(float(alpha), ref)
    except ValidationError as e:
        raise ScenarioError(f"classifier: {e}") from None

    if "vm" in data and "population" in data:
        raise ScenarioError("scenario: give either [[vm]] entries or a [population], not both")
    vms: tuple[VmSpec, ...] = ()
    population = None
    if "vm" in data:
        if not isinstance(data["vm"], list):
            raise ScenarioError("vm: expected an array of tables ([[vm]])")
        vms = tuple(_vm(v, i, workload) for i, v in enumerate(data["vm"]))
        ids = [v.id for v in vms]
        dup = sorted({x for x in ids if ids.count(x) > 1})
        if dup:
            raise ScenarioError(f"vm: duplicate id(s) {dup}")
    elif "population" in data:
        population = _population(data["population"])

    try:
        threshold = threshold_vector(data.get("threshold", 1.0))
    except ValidationError as e:
        raise ScenarioError(f"threshold: {e}") from None

    placer = data.get("placer", "graybox")
    if placer not in PLACERS:
        raise ScenarioError(f"placer: must be one of {list(PLACERS)}, got {placer!r}")
    victim_order = data.get("victim_order", ASCENDING)
    if victim_order not in (ASCENDING, DESCENDING):
        raise ScenarioError(f"victim_order: must be {ASCENDING!r} or {DESCENDING!r}")

    return Scenario(
        servers=servers,
        vms=vms,
        population=population,
        classifier=classifier,
        workload=workload,
        threshold=threshold,
        ticks=_int(data.get("ticks", 100), "ticks", 0),
        seed=_int(data.get("seed", 0), "seed", 0),
        placer=placer,
        mitigation=_bool(data.get("mitigation", True), "mitigation"),
        victim_order=victim_order,
        allow_unplaced=_bool(data.get("allow_unplaced", False), "allow_unplaced"),
    )


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file {path}: {e}") from None
    return loads(text, str(path))


def loads(text: str, name: str = "<scenario>") -> Scenario:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ScenarioError(f"{name}: malformed TOML: {e}") from None
    return scenario_from_dict(data)


def validate(s: Scenario) -> None:
    """Re-check a scenario built in code; files are validated by parsing."""
    scenario_from_dict(scenario_to_dict(s))


# Serialization

def _workload_dict(w: WorkloadModel) -> dict:
    return dataclasses.asdict(w)


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    out: dict[str, Any] = {
        "seed": s.seed,
        "ticks": s.ticks,
        "threshold": list(s.threshold),
        "placer": s.placer,
        "mitigation": s.mitigation,
        "victim_order": s.victim_order,
        "allow_unplaced": s.allow_unplaced,
        "classifier": {
            "alpha": s.classifier.alpha,
            "reference_capacity": s.classifier.reference_capacity.to_list(),
        },
        "workload": _workload_dict(s.workload),
        "servers": {"capacities": [c.to_list() for c in s.servers]},
    }
    if s.population is not None:
        groups = []
        for g in s.population.groups:
            gd: dict[str, Any] = {
                "count": g.count,
                "demand_min": g.demand_min.to_list(),
                "demand_max": g.demand_max.to_list(),
            }
            if g.dominant is not None:
                gd["dominant"] = [k.label for k in g.dominant]
            if g.workload:
                gd["workload"] = dict(g.workload)
            groups.append(gd)
        out["population"] = {
            "priority": [s.population.priority_min, s.population.priority_max],
            "groups": groups,
        }
    elif s.vms:
        vms = []
        for vm in s.vms:
            vd: dict[str, Any] = {
                "id": vm.id,
                "app_id": vm.app_id,
                "priority": vm.priority,
                "demand": vm.demand.to_list(),
            }
            if vm.dominant_set is not None:
                vd["dominant"] = [k.label for k in sorted(vm.dominant_set)]
            vd["workload"] = _workload_dict(vm.workload)
            vms.append(vd)
        out["vm"] = vms
    return out


def dumps(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))
