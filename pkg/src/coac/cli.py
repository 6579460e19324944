"""Command line entry point: ``coac enumerate|evaluate|overhead|explore``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .arch import ArchConfig, ArchError, preset_arch, preset_su_set, resolve_arch
from .explorer import ExploreError, ExploreOptions, explore
from .flex_overhead import OverheadError, total_overhead
from .golden import check_golden
from .mapping_cost import CostTableError, build_cost_table, import_cost_table, spatial_utilization
from .su_space import DIMS, SuConstraints, SuError, enumerate_sus, parse_su
from .workload import WorkloadError, network_to_dict, resolve_workload

log = logging.getLogger("coac")

# Problems with user-supplied configuration; reported with exit status 2.
CONFIG_ERRORS = (ArchError, WorkloadError, SuError, CostTableError, ExploreError, OverheadError)


class UsageError(ValueError):
    pass


def _max_factor(text: str) -> tuple[str, int]:
    try:
        dim, value = text.split("=")
        dim = dim.strip().lower()
        if dim not in DIMS:
            raise ValueError
        return dim, int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected DIM=N with DIM in {', '.join(d.upper() for d in DIMS)}, "
                                         f"got {text!r}") from None


def _constraints(args) -> SuConstraints:
    return SuConstraints(max_factors=dict(args.max_factor) or None, g_exclusive=not args.allow_mixed_g)


def _arch(args) -> ArchConfig:
    if not args.arch:
        raise UsageError("--arch is required")
    return resolve_arch(args.arch)


def _networks(args):
    if not args.workload:
        raise UsageError("at least one --workload is required")
    networks = [resolve_workload(w) for w in args.workload]
    if len({n.name for n in networks}) != len(networks):
        raise UsageError("workload names must be unique")
    return networks


def _candidate_sus(args, arch):
    if getattr(args, "sus", None):
        return [parse_su(text) for text in args.sus]
    return enumerate_sus(arch.nb_pes, _constraints(args))


# -- output helpers ---------------------------------------------------------

def _dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def _dump_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, filename: str, text: str) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text)
        log.info("wrote %s", out / filename)
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------

def cmd_enumerate(args) -> int:
    arch = _arch(args)
    cons = _constraints(args)
    sus = enumerate_sus(arch.nb_pes, cons)
    if args.format == "csv":
        rows = [[su.text(), *su.factors(), su.o_sum, su.w_u, su.a_u] for su in sus]
        _emit(args, "sus.csv", _dump_csv(["su", *(d.upper() for d in DIMS), "O_sum", "W_u", "A_u"], rows))
    else:
        data = {"nb_pes": arch.nb_pes, "constraints": cons.to_dict(), "count": len(sus),
                "sus": [{"su": su.text(), "O_sum": su.o_sum, "W_u": su.w_u, "A_u": su.a_u} for su in sus]}
        _emit(args, "sus.json", _dump_json(data))
    return 0


def cmd_evaluate(args) -> int:
    arch = _arch(args)
    networks = _networks(args)
    sus = _candidate_sus(args, arch)
    table = build_cost_table(networks, sus, arch)
    if args.format == "csv":
        rows = []
        for net in networks:
            for layer in net:
                for su in sus:
                    cost = table.cost(net.name, layer.id, su)
                    rows.append([net.name, layer.id, su.text(), cost.latency, cost.energy,
                                 round(spatial_utilization(layer, su), 9)])
        _emit(args, "costs.csv", _dump_csv(["network", "layer", "su", "latency_cycles", "energy",
                                            "spatial_utilization"], rows))
    else:
        # Same schema as an imported cost table, so the output can be fed back with --cost-table.
        _emit(args, "costs.json", _dump_json(table.to_dict()))
    return 0


def _overhead_row(name, sus, report) -> dict:
    return {"name": name, "sus": [su.text() for su in sus], **report.to_dict()}


def cmd_overhead(args) -> int:
    if args.golden_paper:
        cells = check_golden()
        bad = [c for c in cells if not c.ok]
        for c in cells:
            status = "ok  " if c.ok else "FAIL"
            print(f"{status} {'+'.join(c.pair):8s} {c.quantity:11s} expected={c.expected} got={c.actual}")
        print(f"{len(cells) - len(bad)}/{len(cells)} reference cells reproduced", file=sys.stderr)
        return 1 if bad else 0
    if args.preset:
        arch = resolve_arch(args.arch) if args.arch else preset_arch(args.preset)
        sus = preset_su_set(args.preset)
        sets = [(args.preset, sus)]
    else:
        arch = _arch(args)
        if not args.sus:
            raise UsageError("give --sus (repeatable), --preset or --golden-paper")
        sus = [parse_su(text) for text in args.sus]
        sets = [("custom", sus)]
    if args.singles:
        sets += [(su.text(), [su]) for su in sus]
    rows = [_overhead_row(name, s, total_overhead(s, arch)) for name, s in sets]
    if args.format == "csv":
        keys = [k for k in rows[0] if k != "sus"]
        _emit(args, "overhead.csv", _dump_csv(["sus", *keys],
                                              [[";".join(r["sus"]), *(r[k] for k in keys)] for r in rows]))
    else:
        _emit(args, "overhead.json", _dump_json({"arch": arch.to_dict(), "sets": rows}))
    return 0


def _report(args, arch, networks, options, cons, result) -> dict:
    def point(fp):
        return {"latency": fp.latency, "energy": fp.energy, "edp": fp.edp,
                "assignment": [su.text() for su in fp.assignment]}

    return {
        "config": {
            "arch": arch.to_dict(),
            "workloads": [network_to_dict(n) for n in networks],
            "options": options.to_dict(),
            "constraints": cons.to_dict() if cons else None,
            "cost_table": args.cost_table,
        },
        "candidates": len(result.candidates),
        "searched": [su.text() for su in result.searched],
        "subsets": result.n_subsets,
        "truncated": result.truncated,
        "l_best": result.l_best,
        "solutions": [
            {"sus": [su.text() for su in sol.su_set], "overhead": sol.overhead.to_dict(),
             "front": [point(fp) for fp in sol.front]}
            for sol in result.solutions
        ],
        "fronts_by_n": {
            str(n): [{"sus": [su.text() for su in sol.su_set], "area": getattr(sol.overhead, options.area_metric),
                      **point(fp)} for fp, sol in front]
            for n, front in result.fronts_by_n.items()
        },
    }


def cmd_explore(args) -> int:
    arch = _arch(args)
    networks = _networks(args)
    options = ExploreOptions(n_max=args.max_sus, prune=not args.no_prune,
                             include_smaller_sets=not args.exact_size,
                             reshuffle_energy=args.reshuffle_energy, epsilon=args.epsilon,
                             area_metric=args.area_metric, max_subsets=args.max_subsets, jobs=args.jobs)
    cons = None
    if args.sus:
        candidates = [parse_su(text) for text in args.sus]
    else:
        cons = _constraints(args)
        candidates = enumerate_sus(arch.nb_pes, cons)
    table = import_cost_table(args.cost_table, networks, candidates) if args.cost_table else None
    result = explore(arch, networks, options, cost_table=table, candidates=candidates)
    log.info("%d candidates, %d searched, %d subsets, %d solutions", len(result.candidates),
             len(result.searched), result.n_subsets, len(result.solutions))

    report = _report(args, arch, networks, options, cons, result)
    if args.format == "json" or args.out:
        _emit(args, "report.json", _dump_json(report))
    if args.format == "csv" or args.out:
        rows = []
        for sol in result.solutions:
            area = getattr(sol.overhead, options.area_metric)
            for fp in sol.front:
                rows.append([" ".join(su.text() for su in sol.su_set), area, fp.latency, fp.energy, fp.edp])
        buf = io.StringIO()
        csv.writer(buf, delimiter=";", lineterminator="\n").writerows(
            [["sus", "area_flex" if options.area_metric == "area_flex" else "area_total",
              "latency", "energy", "edp"], *rows])
        _emit(args, "front.csv", buf.getvalue())
    if args.out:
        # Plain whitespace columns for plotting tools: latency energy area.
        for n, front in result.fronts_by_n.items():
            lines = ["# latency energy area sus"]
            for fp, sol in front:
                area = getattr(sol.overhead, options.area_metric)
                lines.append(f"{fp.latency!r} {fp.energy!r} {area!r} {'|'.join(su.text() for su in sol.su_set)}")
            _emit(args, f"front_N{n}.dat", "\n".join(lines) + "\n")
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coac", description="Explore sets of spatial unrollings "
                                     "for a flexible PE array and count the hardware they cost.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arch", help="architecture file or preset name")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true", help="progress details on stderr")

    su_filter = argparse.ArgumentParser(add_help=False)
    su_filter.add_argument("--max-factor", type=_max_factor, action="append", default=[], metavar="DIM=N",
                           help="largest unroll factor for one dimension (repeatable)")
    su_filter.add_argument("--allow-mixed-g", action="store_true",
                           help="also enumerate SUs unrolling G together with C or K")

    workloads = argparse.ArgumentParser(add_help=False)
    workloads.add_argument("--workload", action="append", default=[],
                           help="workload file or bundled name (repeatable)")

    p = sub.add_parser("enumerate", parents=[common, su_filter], help="list candidate SUs")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("evaluate", parents=[common, su_filter, workloads],
                       help="per-layer latency and energy for every SU")
    p.add_argument("--sus", action="append", help="evaluate only these SUs (repeatable)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("overhead", parents=[common], help="hardware counts for one SU set")
    p.add_argument("--sus", action="append", help="SU of the set, e.g. K=2,OX=4 (repeatable)")
    p.add_argument("--preset", help="bundled SU set with its architecture, e.g. evolver256")
    p.add_argument("--singles", action="store_true", help="also report each SU on its own")
    p.add_argument("--golden-paper", action="store_true",
                   help="check the 8-PE reference tables; non-zero exit on any mismatch")
    p.set_defaults(func=cmd_overhead)

    p = sub.add_parser("explore", parents=[common, su_filter, workloads], help="search SU sets")
    p.add_argument("--max-sus", type=int, default=2, help="largest SU set size (default 2)")
    p.add_argument("--exact-size", action="store_true", help="only search sets of exactly --max-sus SUs")
    p.add_argument("--no-prune", action="store_true", help="search all candidates, not only per-layer optima")
    p.add_argument("--reshuffle-energy", action="store_true", help="charge buffer energy on SU switches")
    p.add_argument("--epsilon", type=float, default=0.0, help="dominance tolerance for the final front")
    p.add_argument("--area-metric", choices=("area_flex", "area_total"), default="area_flex")
    p.add_argument("--max-subsets", type=int, help="stop after this many SU sets (warns)")
    p.add_argument("--sus", action="append", help="explicit candidate SUs instead of enumeration")
    p.add_argument("--cost-table", help="use this cost table instead of the internal model")
    p.add_argument("--jobs", type=int, default=0, help="worker processes (default: all CPUs)")
    p.set_defaults(func=cmd_explore)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except CONFIG_ERRORS as exc:
        print(f"coac: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
