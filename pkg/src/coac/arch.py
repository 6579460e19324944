"""Accelerator architecture parameters and their file format."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from .su_space import is_pow2


class ArchError(ValueError):
    """Invalid architecture description. ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"arch field '{field_name}': {message}")
        self.field = field_name


@dataclass(frozen=True)
class EnergyParams:
    """Per-access energies in abstract units (one word per access)."""

    weight_read: float = 2.0
    input_read: float = 2.0
    output_write: float = 4.0
    reshuffle: float = 1.0
    mac: float = 1.0


@dataclass(frozen=True)
class AreaParams:
    register_bit: float = 1.0
    mux: float = 1.0
    adder: float = 1.0
    pe: float = 1.0
    memory_bit: float = 0.0


@dataclass(frozen=True)
class ArchConfig:
    nb_pes: int
    p_bits: int = 8
    # Port widths seen by the utilization model, in bits.
    pw_w_bits: int = 4096
    pw_i_bits: int = 1024
    pw_o_bits: int = 1024
    # Port widths seen by the overhead model, in words.
    pw_l2_weights_words: int = 4
    pw_l2_act_words: int = 4
    pw_l2_o_words: int = 4
    pw_b_words: int = 4
    pw_b_after_words: int | None = None
    weight_mem_bits: int = 0
    act_mem_bits: int = 0
    energy: EnergyParams = field(default_factory=EnergyParams)
    area: AreaParams = field(default_factory=AreaParams)
    name: str = "custom"

    def __post_init__(self):
        if not is_pow2(self.nb_pes):
            raise ArchError("nb_pes", f"must be a power of 2, got {self.nb_pes!r}")
        for name in ("p_bits", "pw_w_bits", "pw_i_bits", "pw_o_bits"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ArchError(name, f"must be a positive integer, got {value!r}")
        for name in ("pw_l2_weights_words", "pw_l2_act_words", "pw_l2_o_words", "pw_b_words"):
            if not is_pow2(getattr(self, name)):
                raise ArchError(name, f"must be a power of 2 words, got {getattr(self, name)!r}")
        if self.pw_b_after_words is not None and not is_pow2(self.pw_b_after_words):
            raise ArchError("pw_b_after_words", f"must be a power of 2 words, got {self.pw_b_after_words!r}")
        for group in (self.energy, self.area):
            for f in fields(group):
                value = getattr(group, f.name)
                if not isinstance(value, (int, float)) or value < 0:
                    raise ArchError(f.name, f"must be a non-negative number, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)


_ARCH_KEYS = {f.name for f in fields(ArchConfig)}


def arch_from_dict(data: dict) -> ArchConfig:
    if not isinstance(data, dict):
        raise ArchError("<root>", "expected an object")
    unknown = set(data) - _ARCH_KEYS
    if unknown:
        raise ArchError(sorted(unknown)[0], "unknown field")
    if "nb_pes" not in data:
        raise ArchError("nb_pes", "missing")
    kwargs = dict(data)
    for key, cls in (("energy", EnergyParams), ("area", AreaParams)):
        if key in kwargs:
            sub = kwargs[key]
            if not isinstance(sub, dict):
                raise ArchError(key, "expected an object")
            bad = set(sub) - {f.name for f in fields(cls)}
            if bad:
                raise ArchError(f"{key}.{sorted(bad)[0]}", "unknown field")
            kwargs[key] = cls(**sub)
    for key, value in kwargs.items():
        if key in ("energy", "area", "name"):
            continue
        if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
            raise ArchError(key, f"must be an integer, got {value!r}")
    return ArchConfig(**kwargs)


def load_arch(path) -> ArchConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArchError("<file>", f"{path} is not valid JSON ({exc})") from None
    return arch_from_dict(data)


def arch_presets() -> list[str]:
    root = resources.files("coac") / "data"
    return sorted(p.name[len("arch_"):-5] for p in root.iterdir()
                  if p.name.startswith("arch_") and p.name.endswith(".json"))


def preset_arch(name: str) -> ArchConfig:
    resource = resources.files("coac") / "data" / f"arch_{name}.json"
    if not resource.is_file():
        raise ArchError("<preset>", f"no preset named {name!r}; choose from {arch_presets()}")
    return arch_from_dict(json.loads(resource.read_text()))


def resolve_arch(spec: str) -> ArchConfig:
    """Accept a path to an arch file or the name of a bundled preset."""
    path = Path(spec)
    if path.exists():
        return load_arch(path)
    if spec in arch_presets():
        return preset_arch(spec)
    raise ArchError("<file>", f"{spec!r} is neither an arch file nor a preset ({', '.join(arch_presets())})")


def example_arch(nb_pes: int = 8, port_words: int = 4, p_bits: int = 8, **overrides) -> ArchConfig:
    """Small architecture with every overhead-model port at ``port_words`` words."""
    params = dict(
        nb_pes=nb_pes, p_bits=p_bits,
        pw_w_bits=port_words * p_bits, pw_i_bits=port_words * p_bits, pw_o_bits=port_words * 2 * p_bits,
        pw_l2_weights_words=port_words, pw_l2_act_words=port_words,
        pw_l2_o_words=port_words, pw_b_words=port_words,
        name=f"example{nb_pes}",
    )
    params.update(overrides)
    return ArchConfig(**params)


def su_set_presets() -> dict[str, list[str]]:
    return json.loads((resources.files("coac") / "data" / "su_presets.json").read_text())


def preset_su_set(name: str):
    """SU set shipped alongside the architecture preset of the same name."""
    from .su_space import parse_su

    presets = su_set_presets()
    if name not in presets:
        raise ArchError("<preset>", f"no SU set preset named {name!r}; choose from {sorted(presets)}")
    return [parse_su(text) for text in presets[name]]
