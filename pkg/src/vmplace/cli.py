"""Command line entry point: ``vmplace {place,simulate,compare,oracle}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from vmplace.baselines import OracleLimits, exact_oracle
from vmplace.model import Cluster, ValidationError
from vmplace.placers import PLACERS, run_placer
from vmplace.scenario import ScenarioError, dumps, parse_scenario
from vmplace.simulator import COUNTERS, UnplacedVmsError, compare, run

log = logging.getLogger("vmplace")

DEFAULT_COMPARE = ("graybox", "first-fit", "best-fit", "random")


def _seed_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N..M or a comma list, got {text!r}") from None


def _threshold(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) == 1:
        return parts[0]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("threshold is one number or four comma-separated numbers")
    return tuple(parts)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, metavar="PATH", help="scenario TOML file")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--ticks", type=int, help="override the tick count")
    common.add_argument("--threshold", type=_threshold, help="overload threshold (X or c,m,n,d)")
    common.add_argument("--allow-unplaced", action="store_true", default=None,
                        help="simulate even if some VMs could not be placed")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--dump-config", action="store_true",
                        help="print the fully resolved scenario as TOML and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vmplace",
                                     description="Priority-aware gray-box VM placement.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("place", parents=[common], help="initial placement only")
    p.add_argument("--placer", choices=PLACERS)

    p = sub.add_parser("simulate", parents=[common], help="full simulation run")
    p.add_argument("--placer", choices=PLACERS)
    p.add_argument("--no-mitigation", action="store_true", help="disable migrations")
    p.add_argument("--events", metavar="PATH",
                   help="event log path (default: <out>.events.jsonl when --out is given)")

    p = sub.add_parser("compare", parents=[common], help="placers x seeds comparison table")
    p.add_argument("--placer", default=",".join(DEFAULT_COMPARE),
                   help="comma-separated placers (default: %(default)s)")
    p.add_argument("--seeds", type=_seed_range, help="seed range N..M (default: scenario seed)")
    p.add_argument("--no-mitigation", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("oracle", parents=[common], help="exact solve for small instances")
    p.add_argument("--max-vms", type=int, default=OracleLimits.max_vms)
    p.add_argument("--max-servers", type=int, default=OracleLimits.max_servers)
    return parser


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _cmd_place(scenario, args) -> int:
    vms = scenario.build_vms()
    servers = scenario.server_states()
    report = run_placer(scenario.placer, vms, servers, scenario.classifier, scenario.seed)
    if args.format == "json":
        placed = [vm for vm in vms if vm.id in report.placement]
        cluster = Cluster.from_placement(servers, placed, report.placement)
        doc = {"placer": scenario.placer, **report.to_dict(),
               "utilization": {str(sid): cluster.utilization(sid).to_list()
                               for sid in cluster.servers}}
        _emit(_json(doc), args.out)
    else:
        rows = [["vm_id", "server_id", "status"]]
        for vm in sorted(vms, key=lambda v: v.id):
            if vm.id in report.placement:
                rows.append([vm.id, report.placement[vm.id], "placed"])
            else:
                rows.append([vm.id, "", report.unplaced.get(vm.id, "unplaced")])
        _emit(_csv(rows), args.out)
    return 0 if report.complete or scenario.allow_unplaced else 3


def _parameters(scenario) -> dict:
    return {
        "seed": scenario.seed,
        "ticks": scenario.ticks,
        "placer": scenario.placer,
        "mitigation": scenario.mitigation,
        "victim_order": scenario.victim_order,
        "threshold": list(scenario.threshold),
        "alpha": scenario.classifier.alpha,
        "reference_capacity": scenario.classifier.reference_capacity.to_list(),
        "workload_defaults": {
            "base_fraction": scenario.workload.base_fraction,
            "spike_probability": scenario.workload.spike_probability,
            "spike_multiplier": scenario.workload.spike_multiplier,
            "spike_duration": scenario.workload.spike_duration,
        },
    }


def _cmd_simulate(scenario, args) -> int:
    result = run(scenario)
    m = result.metrics
    if args.format == "json":
        text = _json({"parameters": _parameters(scenario), "metrics": m.to_dict()})
    else:
        rows = [["metric", "value"]]
        for name in COUNTERS + ("placed", "unplaced", "ticks"):
            rows.append([name, getattr(m, name)])
        for t, u in enumerate(m.mean_utilization_series, start=1):
            for label, x in zip(("cpu", "memory", "network", "disk"), u):
                rows.append([f"mean_utilization_series[{t}].{label}", x])
        text = _csv(rows)
    _emit(text, args.out)
    events_path = args.events or (f"{args.out}.events.jsonl" if args.out else None)
    if events_path:
        Path(events_path).write_text(result.event_log())
    return 0


def _cmd_compare(scenario, args) -> int:
    placers = [p.strip() for p in args.placer.split(",") if p.strip()]
    bad = [p for p in placers if p not in PLACERS]
    if bad:
        raise ScenarioError(f"--placer: unknown placer(s) {bad}; choose from {list(PLACERS)}")
    seeds = args.seeds or [scenario.seed]
    table = compare(scenario, placers, seeds, jobs=args.jobs)
    if args.format == "json":
        _emit(_json(table.to_dict()), args.out)
    else:
        rows = table.rows()
        header = list(rows[0])
        _emit(_csv([header] + [[r[h] for h in header] for r in rows]), args.out)
    return 0


def _cmd_oracle(scenario, args) -> int:
    limits = OracleLimits(args.max_vms, args.max_servers)
    result = exact_oracle(scenario.build_vms(), scenario.server_states(), limits)
    if args.format == "json":
        _emit(_json(result.to_dict()), args.out)
    else:
        rows = [["vm_id", "server_id"]]
        rows += [[k, v] for k, v in sorted((result.best_placement or {}).items())]
        rows.append(["objective_value", result.objective_value if result.feasible else ""])
        _emit(_csv(rows), args.out)
    return 0 if result.feasible else 3


COMMANDS = {
    "place": _cmd_place,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = parse_scenario(args.scenario)
        overrides = {
            "seed": args.seed,
            "ticks": args.ticks,
            "threshold": args.threshold,
            "allow_unplaced": args.allow_unplaced,
        }
        if args.command in ("place", "simulate"):
            overrides["placer"] = args.placer
        if getattr(args, "no_mitigation", False):
            overrides["mitigation"] = False
        scenario = scenario.with_overrides(**overrides)
        if args.dump_config:
            _emit(dumps(scenario), args.out)
            return 0
        return COMMANDS[args.command](scenario, args)
    except UnplacedVmsError as e:
        print(f"vmplace: {e} (use --allow-unplaced to continue)", file=sys.stderr)
        return 3
    except (ScenarioError, ValidationError, ValueError) as e:
        print(f"vmplace: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
