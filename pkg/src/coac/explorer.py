"""Search over combinations of supported SUs.

For every candidate SU set the end-to-end (latency, energy) Pareto front is
built layer by layer: the front for the first i layers is the non-dominated
subset of every front point from i-1 layers plus every Pareto point of layer
i under one SU of the set. Fronts of all sets are merged with the set's area
overhead into a final (latency, energy, area) Pareto set.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .arch import ArchConfig
from .flex_overhead import OverheadReport, reshuffle_cluster, total_overhead
from .mapping_cost import CostPoint, CostTable, CostTableError, build_cost_table
from .pareto import pareto_filter
from .su_space import SpatialUnrolling, SuConstraints, enumerate_sus
from .workload import LayerShape, Network

log = logging.getLogger(__name__)


class ExploreError(ValueError):
    pass


@dataclass(frozen=True)
class ExploreOptions:
    n_max: int = 2
    prune: bool = True
    include_smaller_sets: bool = True
    reshuffle_energy: bool = False
    epsilon: float = 0.0
    area_metric: str = "area_flex"
    max_subsets: Optional[int] = None
    jobs: int = 1

    def __post_init__(self):
        if self.n_max < 1:
            raise ExploreError("n_max must be at least 1")
        if self.epsilon < 0:
            raise ExploreError("epsilon must be non-negative")
        if self.area_metric not in ("area_flex", "area_total"):
            raise ExploreError(f"unknown area metric {self.area_metric!r}")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("jobs")
        return d


@dataclass(frozen=True)
class FrontPoint:
    latency: float
    energy: float
    assignment: tuple[SpatialUnrolling, ...]

    @property
    def edp(self) -> float:
        return self.latency * self.energy


@dataclass(frozen=True)
class LayerParetoSet:
    network: str
    layer: LayerShape
    entries: tuple[tuple[SpatialUnrolling, CostPoint], ...]


@dataclass
class Solution:
    su_set: tuple[SpatialUnrolling, ...]
    overhead: OverheadReport
    front: list[FrontPoint]

    @property
    def area(self) -> float:
        return self.overhead.area_flex


@dataclass
class ExploreResult:
    candidates: list[SpatialUnrolling]
    searched: list[SpatialUnrolling]
    solutions: list[Solution]
    # N -> 2-D (latency, energy) front reachable with sets of size N (or <= N).
    fronts_by_n: dict[int, list[tuple[FrontPoint, Solution]]]
    l_best: dict[str, float]
    n_subsets: int
    truncated: bool
    stats: dict = field(default_factory=dict)


# -- per-layer pieces -------------------------------------------------------

def _layer_keys(networks: Sequence[Network]) -> list[tuple[str, LayerShape]]:
    return [(net.name, layer) for net in networks for layer in net]


def prune_sus(cost_table: CostTable, networks: Sequence[Network],
              candidates: Sequence[SpatialUnrolling]) -> list[SpatialUnrolling]:
    """Keep SUs that give the lowest latency or the lowest energy for at least one layer."""
    candidates = list(candidates)
    if not candidates:
        return []
    cost_table.require_complete(networks, candidates)
    keep = set()
    for name, layer in _layer_keys(networks):
        costs = [cost_table.cost(name, layer.id, su) for su in candidates]
        best_lat = min(c.latency for c in costs)
        best_en = min(c.energy for c in costs)
        keep.update(i for i, c in enumerate(costs) if c.latency == best_lat or c.energy == best_en)
    return [su for i, su in enumerate(candidates) if i in keep]


def layer_pareto(network: str, layer: LayerShape, su_set: Sequence[SpatialUnrolling],
                 cost_table: CostTable) -> LayerParetoSet:
    order = {su: i for i, su in enumerate(su_set)}
    entries = [(su, cost_table.cost(network, layer.id, su)) for su in su_set]
    front = pareto_filter(entries, key=lambda e: (e[1].latency, e[1].energy), tiebreak=lambda e: order[e[0]])
    return LayerParetoSet(network, layer, tuple(front))


def normalize_networks(cost_table: CostTable, networks: Sequence[Network],
                       sus: Sequence[SpatialUnrolling]) -> tuple[CostTable, dict[str, float]]:
    """Divide each network's costs by its best single-SU end-to-end latency."""
    l_best = {}
    for net in networks:
        totals = [sum(cost_table.cost(net.name, layer.id, su).latency for layer in net) for su in sus]
        best = min(totals)
        if best <= 0:
            raise ExploreError(f"network {net.name!r} has zero best latency; cannot normalize")
        l_best[net.name] = best
    return cost_table.scaled(l_best), l_best


# -- array form of the suite -----------------------------------------------

@dataclass
class _Suite:
    """Dense cost matrices (layers x searched SUs) for fast subset evaluation."""

    lat: np.ndarray
    en: np.ndarray
    # Per layer: reshuffle energy for entering it from another SU (0 at network starts).
    transit: np.ndarray
    sus: list[SpatialUnrolling]
    pw_b: int


def _build_suite(cost_table, networks, sus, arch, scale) -> _Suite:
    keys = _layer_keys(networks)
    lat = np.array([[cost_table.cost(n, l.id, su).latency for su in sus] for n, l in keys], dtype=float)
    en = np.array([[cost_table.cost(n, l.id, su).energy for su in sus] for n, l in keys], dtype=float)
    transit = np.zeros(len(keys))
    if arch is None:
        return _Suite(lat, en, transit, list(sus), 1)
    prev = None
    for idx, (name, layer) in enumerate(keys):
        if prev is not None and prev[0] == name:
            out_words = prev[1].k * prev[1].g * prev[1].ox * prev[1].oy
            transit[idx] = arch.energy.reshuffle * out_words / scale.get(name, 1.0)
        prev = (name, layer)
    return _Suite(lat, en, transit, list(sus), arch.pw_b_words)


def _sweep_keep(lat, en, tie) -> np.ndarray:
    """Indices of the 2-D non-dominated points, ordered by (lat, en, tie)."""
    order = np.lexsort((tie, en, lat))
    e = en[order]
    prior_min = np.minimum.accumulate(e)
    keep = np.ones(len(order), dtype=bool)
    keep[1:] = e[1:] < prior_min[:-1]
    return order[keep]


def _front_for_subset(suite: _Suite, subset: Sequence[int], reshuffle: bool):
    """Exact Pareto DP for one SU subset.

    Returns (lat, en, assignments) with assignments as an (F, layers) array
    of positions into ``subset``. Ties between equal points keep the
    lexicographically smallest assignment.
    """
    idx = np.asarray(subset)
    n = len(idx)
    lat_m = suite.lat[:, idx]
    en_m = suite.en[:, idx]
    if reshuffle:
        mask = np.array([[reshuffle_cluster(suite.sus[a], suite.sus[b]) % suite.pw_b != 0 for b in idx]
                         for a in idx], dtype=float)
    f_lat = np.zeros(1)
    f_en = np.zeros(1)
    f_rank = np.zeros(1, dtype=np.int64)
    f_last = np.full(1, -1, dtype=np.int64)
    backs = []
    for layer in range(lat_m.shape[0]):
        if reshuffle:
            choices = np.arange(n)
        else:
            choices = _sweep_keep(lat_m[layer], en_m[layer], np.arange(n))
        m = len(choices)
        if m == 1 and not reshuffle:
            # One SU dominates this layer: every front point shifts, order and ranks are kept.
            f_lat = f_lat + lat_m[layer, choices[0]]
            f_en = f_en + en_m[layer, choices[0]]
            f_last = np.full(len(f_lat), choices[0], dtype=np.int64)
            backs.append((np.arange(len(f_lat)), f_last))
            continue
        c_lat = (f_lat[:, None] + lat_m[layer, choices][None, :]).ravel()
        c_en = f_en[:, None] + en_m[layer, choices][None, :]
        if reshuffle and suite.transit[layer] > 0:
            prev_last = f_last[:, None]
            step = np.where(prev_last >= 0, mask[np.maximum(prev_last, 0), choices[None, :]], 0.0)
            c_en = c_en + step * suite.transit[layer]
        c_en = c_en.ravel()
        c_prev = np.repeat(np.arange(len(f_lat)), m)
        c_su = np.tile(choices, len(f_lat))
        tie = f_rank[c_prev] * n + c_su
        if reshuffle:
            kept = np.concatenate([sel[_sweep_keep(c_lat[sel], c_en[sel], tie[sel])]
                                   for sel in (np.flatnonzero(c_su == s) for s in range(n)) if len(sel)])
        else:
            kept = _sweep_keep(c_lat, c_en, tie)
        kept = kept[np.lexsort((tie[kept], c_en[kept], c_lat[kept]))]
        f_lat, f_en = c_lat[kept], c_en[kept]
        f_last = c_su[kept]
        f_rank = np.empty(len(kept), dtype=np.int64)
        f_rank[np.argsort(tie[kept], kind="stable")] = np.arange(len(kept))
        backs.append((c_prev[kept], c_su[kept]))
    if reshuffle:
        final = _sweep_keep(f_lat, f_en, f_rank)
    else:
        final = np.arange(len(f_lat))
    assignments = np.empty((len(final), len(backs)), dtype=np.int64)
    pos = final.copy()
    for layer in range(len(backs) - 1, -1, -1):
        prev, su = backs[layer]
        assignments[:, layer] = su[pos]
        pos = prev[pos]
    return f_lat[final], f_en[final], assignments


def network_pareto(networks: Sequence[Network] | Network, su_set: Sequence[SpatialUnrolling],
                   cost_table: CostTable, options: ExploreOptions | None = None,
                   arch: ArchConfig | None = None, scale: dict | None = None) -> list[FrontPoint]:
    """End-to-end (latency, energy) front over the layers of one or more networks.

    Multiple networks are concatenated. ``arch`` is only needed when
    ``options.reshuffle_energy`` is set.
    """
    options = options or ExploreOptions()
    if isinstance(networks, Network):
        networks = [networks]
    su_set = list(su_set)
    if options.reshuffle_energy and arch is None:
        raise ExploreError("reshuffle energy needs the architecture")
    suite = _build_suite(cost_table, networks, su_set, arch, scale or {})
    lat, en, assign = _front_for_subset(suite, list(range(len(su_set))), options.reshuffle_energy)
    return [FrontPoint(float(lat[i]), float(en[i]), tuple(su_set[j] for j in assign[i])) for i in range(len(lat))]


# -- subset evaluation ------------------------------------------------------

@lru_cache(maxsize=65536)
def _overhead(su_set: tuple[SpatialUnrolling, ...], arch: ArchConfig) -> OverheadReport:
    return total_overhead(su_set, arch)


_WORKER = {}


def _init_worker(suite, arch, reshuffle):
    _WORKER.update(suite=suite, arch=arch, reshuffle=reshuffle)


def _evaluate(subset):
    suite, arch = _WORKER["suite"], _WORKER["arch"]
    sus = tuple(suite.sus[i] for i in subset)
    report = _overhead(sus, arch)
    lat, en, assign = _front_for_subset(suite, subset, _WORKER["reshuffle"])
    return report, lat, en, assign


def _evaluate_chunk(chunk):
    return [_evaluate(s) for s in chunk]


def _subsets(n: int, options: ExploreOptions):
    sizes = range(1, options.n_max + 1) if options.include_smaller_sets else [options.n_max]
    for size in sizes:
        yield from itertools.combinations(range(n), size)


def explore(arch: ArchConfig, networks: Sequence[Network], options: ExploreOptions | None = None,
            cost_table: CostTable | None = None, constraints: SuConstraints | None = None,
            candidates: Sequence[SpatialUnrolling] | None = None) -> ExploreResult:
    options = options or ExploreOptions()
    networks = list(networks)
    if not networks:
        raise ExploreError("at least one network is required")
    names = [net.name for net in networks]
    if len(set(names)) != len(names):
        raise ExploreError("network names must be unique")
    t0 = time.perf_counter()
    if candidates is None:
        candidates = enumerate_sus(arch.nb_pes, constraints or SuConstraints())
    candidates = list(candidates)
    if not candidates:
        raise ExploreError("no candidate SUs")
    if cost_table is None:
        cost_table = build_cost_table(networks, candidates, arch)
    else:
        cost_table.require_complete(networks, candidates)
    l_best = {}
    if len(networks) > 1:
        cost_table, l_best = normalize_networks(cost_table, networks, candidates)
    searched = prune_sus(cost_table, networks, candidates) if options.prune else candidates
    if not searched:
        raise ExploreError("empty candidate set after pruning")
    log.info("candidate SUs: %d, searched after pruning: %d", len(candidates), len(searched))

    suite = _build_suite(cost_table, networks, searched, arch, l_best)
    subsets = list(itertools.islice(_subsets(len(searched), options),
                                    options.max_subsets + 1 if options.max_subsets else None))
    truncated = bool(options.max_subsets) and len(subsets) > options.max_subsets
    if truncated:
        subsets = subsets[:options.max_subsets]
        log.warning("subset cap %d reached; search truncated", options.max_subsets)

    results = _run(subsets, suite, arch, options)
    elapsed = time.perf_counter() - t0

    # One candidate point per (subset, front point).
    area_key = options.area_metric
    records = []
    for s_idx, (subset, (report, lat, en, assign)) in enumerate(zip(subsets, results)):
        area = getattr(report, area_key)
        for p in range(len(lat)):
            records.append((float(lat[p]), float(en[p]), area, s_idx, p))

    # Subsets are generated by size, then lexicographically, and points of one
    # subset never tie, so (subset index, point index) orders equal points.
    def tiebreak(rec):
        return rec[3:]

    def make_point(rec) -> FrontPoint:
        subset = subsets[rec[3]]
        assign = results[rec[3]][3][rec[4]]
        return FrontPoint(rec[0], rec[1], tuple(searched[subset[j]] for j in assign))

    solutions: dict[int, Solution] = {}

    def solution_for(s_idx) -> Solution:
        if s_idx not in solutions:
            subset = subsets[s_idx]
            solutions[s_idx] = Solution(tuple(searched[i] for i in subset), results[s_idx][0], [])
        return solutions[s_idx]

    final = pareto_filter(records, key=lambda r: r[:3], tiebreak=tiebreak, epsilon=options.epsilon)
    for rec in sorted(final, key=lambda r: (r[3], r[4])):
        solution_for(rec[3]).front.append(make_point(rec))

    fronts_by_n = {}
    sizes = range(1, options.n_max + 1) if options.include_smaller_sets else [options.n_max]
    for size in sizes:
        pool = [r for r in records if (len(subsets[r[3]]) <= size if options.include_smaller_sets
                                       else len(subsets[r[3]]) == size)]
        front = pareto_filter(pool, key=lambda r: r[:2], tiebreak=tiebreak, epsilon=options.epsilon)
        fronts_by_n[size] = [(make_point(r), Solution(tuple(searched[i] for i in subsets[r[3]]),
                                                      results[r[3]][0], [])) for r in front]

    ordered = [solutions[k] for k in sorted(solutions)]
    stats = {"candidates": len(candidates), "searched": len(searched), "subsets": len(subsets),
             "wall_seconds": elapsed}
    log.info("evaluated %d subsets in %.2f s", len(subsets), elapsed)
    return ExploreResult(candidates=candidates, searched=searched, solutions=ordered,
                         fronts_by_n=fronts_by_n, l_best=l_best, n_subsets=len(subsets),
                         truncated=truncated, stats=stats)


def _run(subsets, suite, arch, options):
    jobs = options.jobs if options.jobs > 0 else (os.cpu_count() or 1)
    if jobs == 1 or len(subsets) < 2000:
        _init_worker(suite, arch, options.reshuffle_energy)
        return [_evaluate(s) for s in subsets]
    chunk = max(256, math.ceil(len(subsets) / (jobs * 8)))
    chunks = [subsets[i:i + chunk] for i in range(0, len(subsets), chunk)]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(suite, arch, options.reshuffle_energy)) as pool:
        return [r for part in pool.map(_evaluate_chunk, chunks) for r in part]


def best_edp(points) -> float:
    return min(p.latency * p.energy for p in points)
