import itertools
import random

import pytest
from oracles import exhaustive_front, random_instance, random_network, random_table

from coac.arch import example_arch
from coac.explorer import (
    ExploreError,
    ExploreOptions,
    best_edp,
    explore,
    layer_pareto,
    network_pareto,
    normalize_networks,
    prune_sus,
)
from coac.flex_overhead import total_overhead
from coac.mapping_cost import CostPoint, CostTable, build_cost_table
from coac.pareto import pareto_filter
from coac.su_space import SuConstraints, enumerate_sus, parse_su
from coac.workload import LayerKind, LayerShape, Network


def as_tuples(front, sus):
    index = {su: i for i, su in enumerate(sus)}
    return [(p.latency, p.energy, tuple(index[s] for s in p.assignment)) for p in front]


@pytest.mark.parametrize("seed", range(60))
def test_dp_matches_exhaustive_enumeration(seed):
    rng = random.Random(seed)
    network, sus = random_instance(rng)
    table = random_table(rng, network, sus, integer=seed % 2 == 0)
    front = network_pareto(network, sus, table)
    assert as_tuples(front, sus) == exhaustive_front(network, sus, table)


@pytest.mark.parametrize("seed", range(30))
def test_dp_with_reshuffle_energy_matches_exhaustive(seed):
    rng = random.Random(1000 + seed)
    arch = example_arch(8, port_words=rng.choice([2, 4, 8]))
    network, sus = random_instance(rng, max_layers=4, max_sus=4)
    table = random_table(rng, network, sus)
    front = network_pareto(network, sus, table, ExploreOptions(reshuffle_energy=True), arch=arch)
    assert as_tuples(front, sus) == exhaustive_front(network, sus, table, arch, reshuffle=True)


def test_reshuffle_mode_needs_arch():
    rng = random.Random(0)
    network, sus = random_instance(rng)
    with pytest.raises(ExploreError):
        network_pareto(network, sus, random_table(rng, network, sus), ExploreOptions(reshuffle_energy=True))


def test_layer_pareto():
    a, b, c = parse_su("K=8"), parse_su("C=8"), parse_su("OX=8")
    layer = LayerShape(id=0, k=8, c=8)
    table = CostTable({("n", 0, a): CostPoint(1, 5), ("n", 0, b): CostPoint(2, 2), ("n", 0, c): CostPoint(3, 3)},
                      "imported")
    result = layer_pareto("n", layer, [a, b, c], table)
    assert [su for su, _ in result.entries] == [a, b]


def test_single_su_front_is_one_point():
    rng = random.Random(4)
    network = random_network(rng, 4)
    su = parse_su("C=2,K=4")
    table = build_cost_table([network], [su], example_arch(8))
    front = network_pareto(network, [su], table)
    assert len(front) == 1
    assert front[0].latency == sum(table.cost(network.name, l.id, su).latency for l in network)


def _two_kind_network():
    return Network("mixed", (
        LayerShape(id=0, k=64, c=64, ox=14, oy=14, fx=1, fy=1),
        LayerShape(id=1, kind=LayerKind.DEPTHWISE, g=64, ox=14, oy=14, fx=3, fy=3),
        LayerShape(id=2, k=128, c=64, ox=14, oy=14, fx=1, fy=1),
        LayerShape(id=3, kind=LayerKind.DEPTHWISE, g=128, ox=14, oy=14, fx=3, fy=3),
    ))


def test_prune_keeps_per_layer_optima():
    arch = example_arch(16)
    network = _two_kind_network()
    candidates = enumerate_sus(16, SuConstraints())
    table = build_cost_table([network], candidates, arch)
    kept = prune_sus(table, [network], candidates)
    assert 0 < len(kept) < len(candidates)
    for layer in network:
        costs = {su: table.cost(network.name, layer.id, su) for su in candidates}
        best_lat = min(c.latency for c in costs.values())
        best_en = min(c.energy for c in costs.values())
        assert any(costs[su].latency == best_lat for su in kept)
        assert any(costs[su].energy == best_en for su in kept)


def test_normalization_divides_by_best_single_su_latency():
    arch = example_arch(8)
    nets = [_two_kind_network(), Network("plain", (LayerShape(id=0, k=16, c=16, ox=8, oy=8),))]
    sus = enumerate_sus(8, SuConstraints())
    table = build_cost_table(nets, sus, arch)
    scaled, l_best = normalize_networks(table, nets, sus)
    for net in nets:
        totals = [sum(scaled.cost(net.name, l.id, su).latency for l in net) for su in sus]
        assert min(totals) == pytest.approx(1.0)
        assert l_best[net.name] == min(sum(table.cost(net.name, l.id, su).latency for l in net) for su in sus)


def test_explore_fronts_match_brute_force():
    arch = example_arch(8)
    network = _two_kind_network()
    candidates = [parse_su(t) for t in ("K=8", "C=2,K=4", "OX=2,C=2,K=2", "G=8", "OX=8", "FX=2,FY=2,G=2")]
    result = explore(arch, [network], ExploreOptions(n_max=2, prune=False), candidates=candidates)
    table = build_cost_table([network], candidates, arch)
    pools = {1: [], 2: []}
    for size in (1, 2):
        for subset in itertools.combinations(candidates, size):
            area = total_overhead(subset, arch).area_flex
            pools[size] += [(lat, en, area) for lat, en, _ in exhaustive_front(network, list(subset), table)]
    everything = pools[1] + pools[2]
    got = sorted((p.latency, p.energy, s.area) for s in result.solutions for p in s.front)
    assert got == pareto_filter(everything)
    assert [(p.latency, p.energy) for p, _ in result.fronts_by_n[1]] == pareto_filter([q[:2] for q in pools[1]])
    assert [(p.latency, p.energy) for p, _ in result.fronts_by_n[2]] == pareto_filter([q[:2] for q in everything])


def test_nesting_and_heterogeneous_gain():
    arch = example_arch(8)
    network = _two_kind_network()
    result = explore(arch, [network], ExploreOptions(n_max=3))
    edps = [best_edp([p for p, _ in result.fronts_by_n[n]]) for n in (1, 2, 3)]
    assert edps[0] >= edps[1] >= edps[2]
    assert edps[1] < edps[0]


def test_homogeneous_network_gains_nothing():
    arch = example_arch(8)
    layer = dict(k=64, c=32, ox=14, oy=14, fx=3, fy=3)
    network = Network("same", tuple(LayerShape(id=i, **layer) for i in range(4)))
    result = explore(arch, [network], ExploreOptions(n_max=2))
    edps = [best_edp([p for p, _ in result.fronts_by_n[n]]) for n in (1, 2)]
    assert edps[1] == pytest.approx(edps[0])


def test_exact_size_option():
    arch = example_arch(8)
    result = explore(arch, [_two_kind_network()], ExploreOptions(n_max=2, include_smaller_sets=False))
    assert list(result.fronts_by_n) == [2]
    assert all(len(s.su_set) == 2 for s in result.solutions)


def test_subset_cap_truncates():
    arch = example_arch(8)
    result = explore(arch, [_two_kind_network()], ExploreOptions(n_max=2, max_subsets=5, prune=False))
    assert result.truncated and result.n_subsets == 5


def test_imported_costs_drive_selection():
    arch = example_arch(8)
    network = Network("n", (LayerShape(id=0, k=8, c=8, ox=8, oy=8), LayerShape(id=1, k=8, c=8, ox=8, oy=8)))
    a, b = parse_su("K=8"), parse_su("OX=8")
    costs = {("n", 0, a): CostPoint(10, 10), ("n", 0, b): CostPoint(1, 1),
             ("n", 1, a): CostPoint(1, 1), ("n", 1, b): CostPoint(10, 10)}
    result = explore(arch, [network], ExploreOptions(n_max=2), cost_table=CostTable(costs, "imported"),
                     candidates=[a, b])
    best = result.fronts_by_n[2][0][0]
    assert (best.latency, best.energy, best.assignment) == (2, 2, (b, a))


def test_incomplete_imported_table_rejected():
    arch = example_arch(8)
    network = Network("n", (LayerShape(id=0, k=8, c=8),))
    a, b = parse_su("K=8"), parse_su("C=8")
    with pytest.raises(ValueError):
        explore(arch, [network], cost_table=CostTable({("n", 0, a): CostPoint(1, 1)}, "imported"),
                candidates=[a, b])


def test_explore_is_deterministic():
    arch = example_arch(8)
    nets = [_two_kind_network(), Network("other", (LayerShape(id=0, k=32, c=16, ox=7, oy=7, fx=3, fy=3),))]
    first = explore(arch, nets, ExploreOptions(n_max=2))
    second = explore(arch, nets, ExploreOptions(n_max=2))
    assert [(s.su_set, s.front) for s in first.solutions] == [(s.su_set, s.front) for s in second.solutions]


def test_option_validation():
    with pytest.raises(ExploreError):
        ExploreOptions(n_max=0)
    with pytest.raises(ExploreError):
        ExploreOptions(epsilon=-1)
    with pytest.raises(ExploreError):
        ExploreOptions(area_metric="volume")
    with pytest.raises(ExploreError):
        explore(example_arch(8), [])
