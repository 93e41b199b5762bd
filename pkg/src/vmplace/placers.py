"""Name-based dispatch over the initial placers."""

from __future__ import annotations

from vmplace.baselines import best_fit, first_fit, oracle_report, random_fit
from vmplace.classifier import ClassifierConfig
from vmplace.initial import InitialPlacementReport, place_all

PLACERS = ("graybox", "first-fit", "best-fit", "random", "oracle")


def run_placer(name: str, vms, servers, cfg: ClassifierConfig, seed: int) -> InitialPlacementReport:
    if name == "graybox":
        return place_all(vms, servers, cfg)
    if name == "first-fit":
        return first_fit(vms, servers)
    if name == "best-fit":
        return best_fit(vms, servers)
    if name == "random":
        return random_fit(vms, servers, seed)
    if name == "oracle":
        return oracle_report(vms, servers)
    raise ValueError(f"unknown placer {name!r}; choose from {', '.join(PLACERS)}")
