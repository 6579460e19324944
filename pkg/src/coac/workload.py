"""CNN workloads as ordered lists of convolution loop nests.

A layer is described by its seven loop bounds (K, C, G, Ox, Oy, Fx, Fy).
Depthwise layers carry their channel count in G and have C = K = 1;
classical (and pointwise, Fx = Fy = 1) layers have G = 1. Stride and
padding are not modeled: the input extent is always Ox + Fx - 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path


class WorkloadError(ValueError):
    """Raised for malformed or invalid workload descriptions."""


class LayerKind(str, Enum):
    CLASSICAL = "conv"
    DEPTHWISE = "dw"


# Field names in the file format, mapped to LayerShape attributes.
_FILE_DIMS = {"K": "k", "C": "c", "G": "g", "OX": "ox", "OY": "oy", "FX": "fx", "FY": "fy"}


@dataclass(frozen=True)
class LayerShape:
    id: int
    kind: LayerKind = LayerKind.CLASSICAL
    k: int = 1
    c: int = 1
    g: int = 1
    ox: int = 1
    oy: int = 1
    fx: int = 1
    fy: int = 1

    def __post_init__(self):
        for name in ("k", "c", "g", "ox", "oy", "fx", "fy"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise WorkloadError(f"layer {self.id}: {name.upper()} must be a positive integer, got {value!r}")
        if self.kind is LayerKind.DEPTHWISE and (self.c != 1 or self.k != 1):
            raise WorkloadError(f"layer {self.id}: depthwise layers require C = K = 1")
        if self.kind is LayerKind.CLASSICAL and self.g != 1:
            raise WorkloadError(f"layer {self.id}: classical layers require G = 1")

    @property
    def ix(self) -> int:
        return self.ox + self.fx - 1

    @property
    def iy(self) -> int:
        return self.oy + self.fy - 1

    def dims(self) -> dict[str, int]:
        """Loop bounds keyed by lowercase dimension name."""
        return {"ox": self.ox, "oy": self.oy, "fx": self.fx, "fy": self.fy,
                "g": self.g, "c": self.c, "k": self.k}


@dataclass(frozen=True)
class Network:
    name: str
    layers: tuple[LayerShape, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise WorkloadError(f"network {self.name!r} has no layers")
        ids = [layer.id for layer in self.layers]
        if len(set(ids)) != len(ids):
            raise WorkloadError(f"network {self.name!r}: duplicate layer ids")
        if ids != sorted(ids):
            raise WorkloadError(f"network {self.name!r}: layer ids must be increasing")

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)


def layer_macs(layer: LayerShape) -> int:
    return math.prod(layer.dims().values())


def network_macs(network: Network) -> int:
    return sum(layer_macs(layer) for layer in network)


def _layer_from_dict(entry: dict, position: int) -> LayerShape:
    if not isinstance(entry, dict):
        raise WorkloadError(f"layer #{position}: expected an object")
    unknown = set(entry) - set(_FILE_DIMS) - {"id", "type"}
    if unknown:
        raise WorkloadError(f"layer #{position}: unknown fields {sorted(unknown)}")
    try:
        kind = LayerKind(entry.get("type", "conv"))
    except ValueError:
        raise WorkloadError(f"layer #{position}: type must be 'conv' or 'dw', got {entry.get('type')!r}") from None
    if kind is LayerKind.DEPTHWISE:
        forbidden = {"K", "C"} & set(entry)
    else:
        forbidden = {"G"} & set(entry)
    if forbidden:
        raise WorkloadError(f"layer #{position}: field(s) {sorted(forbidden)} not allowed for type {kind.value!r}")
    layer_id = entry.get("id", position)
    if not isinstance(layer_id, int) or isinstance(layer_id, bool):
        raise WorkloadError(f"layer #{position}: id must be an integer")
    dims = {attr: entry.get(key, 1) for key, attr in _FILE_DIMS.items()}
    return LayerShape(id=layer_id, kind=kind, **dims)


def network_from_dict(data: dict) -> Network:
    if not isinstance(data, dict) or "layers" not in data:
        raise WorkloadError("workload must be an object with a 'layers' list")
    if not isinstance(data["layers"], list):
        raise WorkloadError("'layers' must be a list")
    name = data.get("name", "network")
    if not isinstance(name, str):
        raise WorkloadError("'name' must be a string")
    layers = [_layer_from_dict(entry, i) for i, entry in enumerate(data["layers"])]
    return Network(name=name, layers=tuple(layers))


def network_to_dict(network: Network) -> dict:
    layers = []
    for layer in network:
        entry = {"id": layer.id, "type": layer.kind.value}
        for key, attr in _FILE_DIMS.items():
            if layer.kind is LayerKind.DEPTHWISE and key in ("K", "C"):
                continue
            if layer.kind is LayerKind.CLASSICAL and key == "G":
                continue
            entry[key] = getattr(layer, attr)
        layers.append(entry)
    return {"name": network.name, "layers": layers}


def load_workload(path) -> Network:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise WorkloadError(f"{path}: not valid JSON ({exc})") from None
    return network_from_dict(data)


def save_workload(network: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(network), indent=2) + "\n")


def bundled_workloads() -> list[str]:
    root = resources.files("coac") / "data" / "workloads"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_workload(name: str) -> Network:
    """Load one of the example networks shipped with the package.

    These are built from the networks' public layer definitions with stride
    folded into the output size; they are illustrative workloads.
    """
    resource = resources.files("coac") / "data" / "workloads" / f"{name}.json"
    if not resource.is_file():
        raise WorkloadError(f"no bundled workload named {name!r}; choose from {bundled_workloads()}")
    return network_from_dict(json.loads(resource.read_text()))


def resolve_workload(spec: str) -> Network:
    """Accept either a path to a workload file or a bundled workload name."""
    path = Path(spec)
    if path.exists():
        return load_workload(path)
    if spec in bundled_workloads():
        return bundled_workload(spec)
    raise WorkloadError(f"workload {spec!r} is neither a file nor a bundled workload")
