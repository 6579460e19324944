"""Per-(layer, SU) utilization, latency and energy estimates.

The internal model is coarse on purpose: spatial utilization from ceiling
losses, temporal utilization from port-bandwidth stalls for the best
innermost temporal loop, and energy as per-access constants times word
traffic. Cost tables produced by a detailed external estimator can be
imported instead and take precedence everywhere downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .arch import ArchConfig
from .su_space import SpatialUnrolling, SuError, parse_su
from .workload import LayerShape, Network, layer_macs


class CostTableError(ValueError):
    pass


# Innermost temporal loop candidates, in tie-break priority order.
INNERMOST = ("c", "k", "ox", "oy", "g")

# Which operands must stream through their port for each innermost loop.
# The remaining operand stays stationary (none for G).
_STREAMED = {
    "c": ("w", "i"),
    "k": ("w", "o"),
    "ox": ("i", "o"),
    "oy": ("i", "o"),
    "g": ("w", "i", "o"),
}


@dataclass(frozen=True)
class DataNeeds:
    """Bits per cycle each operand needs under an SU."""

    w: int
    i: int
    o: int


@dataclass(frozen=True)
class CostPoint:
    latency: float
    energy: float

    @property
    def edp(self) -> float:
        return self.latency * self.energy


def spatial_iterations(layer: LayerShape, su: SpatialUnrolling) -> int:
    """Number of array passes: product of ceil(d / d_u) over all seven loops."""
    dims = layer.dims()
    return math.prod(-(-dims[d] // getattr(su, d)) for d in dims)


def spatial_utilization(layer: LayerShape, su: SpatialUnrolling) -> float:
    dims = layer.dims()
    used = math.prod(dims.values())
    occupied = math.prod(getattr(su, d) * -(-dims[d] // getattr(su, d)) for d in dims)
    return used / occupied


def word_needs(su: SpatialUnrolling) -> DataNeeds:
    """Words per cycle for weights, inputs and outputs (G_u included in all three)."""
    return DataNeeds(
        w=su.c * su.k * su.fx * su.fy * su.g,
        i=su.c * su.g * (su.ox + su.fx - 1) * (su.oy + su.fy - 1),
        o=su.k * su.g * su.ox * su.oy,
    )


def data_needs(su: SpatialUnrolling, p: int) -> DataNeeds:
    words = word_needs(su)
    return DataNeeds(w=p * words.w, i=p * words.i, o=2 * p * words.o)


def _port_bits(arch: ArchConfig) -> dict[str, int]:
    return {"w": arch.pw_w_bits, "i": arch.pw_i_bits, "o": arch.pw_o_bits}


def _stall_factor(su: SpatialUnrolling, arch: ArchConfig, innermost: str) -> Fraction:
    """Cycles per array pass (>= 1) for the given innermost loop, exact."""
    needs = data_needs(su, arch.p_bits)
    ports = _port_bits(arch)
    factor = Fraction(1)
    for op in _STREAMED[innermost]:
        factor = max(factor, Fraction(getattr(needs, op), ports[op]))
    return factor


def temporal_utilization(su: SpatialUnrolling, arch: ArchConfig, innermost: str) -> float:
    innermost = innermost.lower()
    if innermost not in _STREAMED:
        raise ValueError(f"unsupported innermost loop {innermost!r}; expected one of {INNERMOST}")
    return float(1 / _stall_factor(su, arch, innermost))


def _candidates(layer: LayerShape, su: SpatialUnrolling) -> list[str]:
    dims = layer.dims()
    return [d for d in INNERMOST if -(-dims[d] // getattr(su, d)) > 1]


def best_temporal(layer: LayerShape, su: SpatialUnrolling, arch: ArchConfig) -> tuple[str, float]:
    """Innermost loop with the highest temporal utilization.

    Only loops with temporal iterations left are candidates; ties keep the
    earlier loop in C, K, Ox, Oy, G order. Without any candidate the
    all-ports form (innermost G) is used.
    """
    best, best_factor = "g", None
    for d in _candidates(layer, su):
        factor = _stall_factor(su, arch, d)
        if best_factor is None or factor < best_factor:
            best, best_factor = d, factor
    if best_factor is None:
        best_factor = _stall_factor(su, arch, "g")
    return best, float(1 / best_factor)


def _unique_words(layer: LayerShape) -> dict[str, int]:
    return {
        "w": layer.k * layer.c * layer.g * layer.fx * layer.fy,
        "i": layer.c * layer.g * layer.ix * layer.iy,
        "o": layer.k * layer.g * layer.ox * layer.oy,
    }


def layer_energy(layer: LayerShape, su: SpatialUnrolling, arch: ArchConfig, innermost: str | None = None) -> float:
    if innermost is None:
        innermost, _ = best_temporal(layer, su, arch)
    e = arch.energy
    per_access = {"w": e.weight_read, "i": e.input_read, "o": e.output_write}
    words = word_needs(su)
    passes = spatial_iterations(layer, su)
    unique = _unique_words(layer)
    streamed = _STREAMED[innermost]
    energy = e.mac * layer_macs(layer)
    for op in ("w", "i", "o"):
        traffic = getattr(words, op) * passes if op in streamed else unique[op]
        energy += per_access[op] * traffic
    return float(energy)


def layer_cost(layer: LayerShape, su: SpatialUnrolling, arch: ArchConfig) -> CostPoint:
    innermost, _ = best_temporal(layer, su, arch)
    latency = math.ceil(spatial_iterations(layer, su) * _stall_factor(su, arch, innermost))
    return CostPoint(latency=latency, energy=layer_energy(layer, su, arch, innermost))


class CostTable:
    """Costs for every (network, layer id, SU) cell of an exploration grid."""

    def __init__(self, entries: Mapping[tuple[str, int, SpatialUnrolling], CostPoint], provenance: str):
        if provenance not in ("internal", "imported"):
            raise ValueError(f"unknown provenance {provenance!r}")
        self.entries = dict(entries)
        self.provenance = provenance

    def __getitem__(self, key) -> CostPoint:
        return self.entries[key]

    def __contains__(self, key):
        return key in self.entries

    def __len__(self):
        return len(self.entries)

    def cost(self, network: str, layer_id: int, su: SpatialUnrolling) -> CostPoint:
        try:
            return self.entries[(network, layer_id, su)]
        except KeyError:
            raise CostTableError(f"no cost for network {network!r}, layer {layer_id}, SU {su}") from None

    def missing(self, networks: Iterable[Network], sus: Iterable[SpatialUnrolling]) -> list:
        sus = list(sus)
        return [(net.name, layer.id, su) for net in networks for layer in net for su in sus
                if (net.name, layer.id, su) not in self.entries]

    def require_complete(self, networks, sus) -> None:
        gaps = self.missing(networks, sus)
        if gaps:
            net, lid, su = gaps[0]
            raise CostTableError(f"incomplete cost table: {len(gaps)} missing cell(s), "
                                 f"first is network {net!r}, layer {lid}, SU {su}")

    def scaled(self, factors: Mapping[str, float]) -> "CostTable":
        out = {key: CostPoint(c.latency / factors[key[0]], c.energy / factors[key[0]])
               for key, c in self.entries.items()}
        return CostTable(out, self.provenance)

    def to_dict(self) -> dict:
        rows = []
        for (net, lid, su), cost in sorted(self.entries.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
            rows.append({"network": net, "layer": lid, "su": su.text(),
                         "latency_cycles": cost.latency, "energy": cost.energy})
        return {"entries": rows}


def build_cost_table(networks: Iterable[Network], sus: Iterable[SpatialUnrolling], arch: ArchConfig) -> CostTable:
    sus = list(sus)
    entries = {}
    for net in networks:
        for layer in net:
            for su in sus:
                entries[(net.name, layer.id, su)] = layer_cost(layer, su, arch)
    return CostTable(entries, "internal")


def cost_table_from_dict(data, networks=None, sus=None) -> CostTable:
    if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
        raise CostTableError("cost table must be an object with an 'entries' list")
    entries = {}
    for n, row in enumerate(data["entries"]):
        if not isinstance(row, dict):
            raise CostTableError(f"entry #{n}: expected an object")
        for key in ("network", "layer", "su", "latency_cycles", "energy"):
            if key not in row:
                raise CostTableError(f"entry #{n}: missing field {key!r}")
        if not isinstance(row["network"], str) or not isinstance(row["layer"], int):
            raise CostTableError(f"entry #{n}: 'network' must be a string and 'layer' an integer")
        try:
            su = parse_su(row["su"])
        except SuError as exc:
            raise CostTableError(f"entry #{n}: {exc}") from None
        latency, energy = row["latency_cycles"], row["energy"]
        for name, value in (("latency_cycles", latency), ("energy", energy)):
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise CostTableError(f"entry #{n}: {name} must be a finite number")
            if value < 0:
                raise CostTableError(f"entry #{n}: negative {name}")
        key = (row["network"], row["layer"], su)
        if key in entries:
            raise CostTableError(f"entry #{n}: duplicate cell {row['network']!r}/{row['layer']}/{su}")
        entries[key] = CostPoint(latency=latency, energy=energy)
    table = CostTable(entries, "imported")
    if networks is not None and sus is not None:
        table.require_complete(networks, sus)
    return table


def import_cost_table(path, networks=None, sus=None) -> CostTable:
    """Read a cost-table file; with ``networks`` and ``sus`` the grid must be complete."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CostTableError(f"{path}: not valid JSON ({exc})") from None
    return cost_table_from_dict(data, networks, sus)
