"""Hardware cost of supporting several SUs on one PE array.

Three blocks are counted in primitive units (register words, one-input
MUXes, two-input adders):

* the data assignment block: L1 registers plus two MUX stages, one between
  the L2 memory ports and the registers and one between the registers and
  the PEs;
* the output aggregation network: a reconfigurable adder tree with MUXes
  selecting the tree level that carries final outputs;
* the reshuffling buffer: a double-buffered register file that regroups
  activations between layers mapped with different SUs.

All SUs in a set must be power-of-2 unrollings of the same PE array.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .arch import ArchConfig
from .su_space import SpatialUnrolling


class OverheadError(ValueError):
    pass


def z(x: int) -> int:
    """0 for a single source (no MUX needed), otherwise the source count."""
    if x < 1:
        raise OverheadError(f"z() expects x >= 1, got {x}")
    return 0 if x == 1 else x


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _check_set(su_set: Sequence[SpatialUnrolling], arch: ArchConfig | None = None) -> int:
    if not su_set:
        raise OverheadError("SU set is empty")
    sizes = {su.nb_pes for su in su_set}
    if len(sizes) != 1:
        raise OverheadError(f"SUs in a set must share one PE count, got {sorted(sizes)}")
    nb_pes = sizes.pop()
    if nb_pes & (nb_pes - 1):
        raise OverheadError(f"SU {su_set[0]} has a non power-of-2 factor")
    if arch is not None and arch.nb_pes != nb_pes:
        raise OverheadError(f"SU set uses {nb_pes} PEs but the architecture has {arch.nb_pes}")
    return nb_pes


@dataclass(frozen=True)
class RegisterBanks:
    a_r: int
    w_r: int


def l1_registers(su_set: Sequence[SpatialUnrolling]) -> RegisterBanks:
    _check_set(su_set)
    return RegisterBanks(a_r=max(su.a_u for su in su_set), w_r=max(su.w_u for su in su_set))


def _stage1(pw: int, sizes_and_widths: list[tuple[int, int]]) -> int:
    """Sum over register positions i = 1..max(size) of z(ceil(pw / min width among sizes >= i)).

    The summand only changes at the distinct sizes, so whole runs of
    register positions are added at once.
    """
    total, prev = 0, 0
    for size in sorted({s for s, _ in sizes_and_widths}):
        width = min(w for s, w in sizes_and_widths if s >= size)
        total += (size - prev) * z(_ceil_div(pw, width))
        prev = size
    return total


def stage1_weight_muxes(su_set: Sequence[SpatialUnrolling], arch: ArchConfig) -> int:
    """One-input MUXes routing L2 weight words into the L1 weight registers."""
    _check_set(su_set, arch)
    return _stage1(arch.pw_l2_weights_words, [(su.w_u, su.w_u) for su in su_set])


def stage1_act_muxes(su_set: Sequence[SpatialUnrolling], arch: ArchConfig) -> int:
    """One-input MUXes routing L2 activation words into the L1 activation registers.

    A register may take any word of the L2 line that belongs to the same
    input channel, so the narrowest G_u * C_u among the SUs using the
    register sets its fan-in.
    """
    _check_set(su_set, arch)
    return _stage1(arch.pw_l2_act_words, [(su.a_u, su.g * su.c) for su in su_set])


def act_source(i: int, su: SpatialUnrolling) -> int:
    """L1 activation register (1-based) feeding PE ``i`` (1-based) under ``su``."""
    if not 1 <= i <= su.nb_pes:
        raise OverheadError(f"PE index {i} out of range 1..{su.nb_pes}")
    o_sum = su.o_sum
    return i - (_ceil_div(i, o_sum) - _ceil_div(i, su.k * o_sum)) * o_sum


def weight_source(i: int, su: SpatialUnrolling) -> int:
    """L1 weight register (1-based) feeding PE ``i`` (1-based) under ``su``."""
    if not 1 <= i <= su.nb_pes:
        raise OverheadError(f"PE index {i} out of range 1..{su.nb_pes}")
    return (i - 1) % su.w_u + 1


@lru_cache(maxsize=8192)
def _source_vectors(su: SpatialUnrolling) -> tuple[np.ndarray, np.ndarray]:
    i = np.arange(1, su.nb_pes + 1)
    o_sum = su.o_sum
    act = i - (-(-i // o_sum) - -(-i // (su.k * o_sum))) * o_sum
    weight = (i - 1) % su.w_u + 1
    act.flags.writeable = False
    weight.flags.writeable = False
    return act, weight


def _mux_count(sources: np.ndarray) -> int:
    """Sum over PEs (columns) of z(distinct sources across SUs (rows))."""
    if sources.shape[0] == 1:
        return 0
    ordered = np.sort(sources, axis=0)
    distinct = 1 + np.count_nonzero(np.diff(ordered, axis=0), axis=0)
    return int(distinct[distinct > 1].sum())


def stage2_muxes(su_set: Sequence[SpatialUnrolling], arch: ArchConfig | None = None) -> tuple[int, int]:
    """(W_MUX2, A_MUX2): MUXes between the L1 registers and the PEs."""
    _check_set(su_set, arch)
    vectors = [_source_vectors(su) for su in su_set]
    acts = np.stack([v[0] for v in vectors])
    weights = np.stack([v[1] for v in vectors])
    return _mux_count(weights), _mux_count(acts)


def adder_tree(su_set: Sequence[SpatialUnrolling], arch: ArchConfig) -> tuple[int, int]:
    """(N_adders, O_MUX) of the reconfigurable output aggregation network."""
    nb_pes = _check_set(su_set, arch)
    pw = arch.pw_l2_o_words
    o_sum_max = max(su.o_sum for su in su_set)
    n_adders = (o_sum_max - 1) * nb_pes // o_sum_max
    levels = sorted({su.o_sum.bit_length() - 1 for su in su_set})
    # Powers of 2 throughout, so floor division is exact whenever the quotient is >= 1.
    sources = sum(max((nb_pes >> level) // pw, 1) for level in levels)
    return n_adders, pw * z(sources)


def reshuffle_cluster(su_i: SpatialUnrolling, su_j: SpatialUnrolling) -> int:
    """Words produced together by ``su_i`` that ``su_j`` also consumes together."""
    return (math.gcd(su_i.k * su_i.g, su_j.c * su_j.g)
            * math.gcd(su_i.ox, su_j.ox)
            * math.gcd(su_i.oy, su_j.oy))


def _buffer_port(arch: ArchConfig) -> int:
    if arch.pw_b_after_words is not None and arch.pw_b_after_words != arch.pw_b_words:
        raise OverheadError("reshuffling buffer with unequal before/after port widths is not supported")
    return arch.pw_b_words


def reshuffle_buffer(su_set: Sequence[SpatialUnrolling], arch: ArchConfig) -> tuple[int, int, int]:
    """(R_cl_min, REG_buffer, MUX_buffer) over all ordered SU pairs, self-pairs included."""
    _check_set(su_set, arch)
    pw_b = _buffer_port(arch)
    clusters = [reshuffle_cluster(a, b) for a in su_set for b in su_set]
    r_min = min(clusters)
    if r_min % pw_b == 0:
        return r_min, 0, 0
    reg = 2 * pw_b * pw_b // r_min
    sources = sum(pw_b // v for v in sorted({min(pw_b, r) for r in clusters}))
    return r_min, reg, pw_b * z(sources)


@dataclass(frozen=True)
class OverheadReport:
    a_r: int
    w_r: int
    w_mux1: int
    a_mux1: int
    w_mux2: int
    a_mux2: int
    n_adders: int
    o_mux: int
    r_cl_min: int
    reg_buffer: int
    mux_buffer: int
    area_l1: float
    area_flex: float
    area_total: float
    area_flex_delta: float = 0.0

    @property
    def total_muxes(self) -> int:
        return self.w_mux1 + self.a_mux1 + self.w_mux2 + self.a_mux2 + self.o_mux + self.mux_buffer

    # Serialized names follow the symbol names used in hardware write-ups.
    _NAMES = {"a_r": "A_r", "w_r": "W_r", "w_mux1": "W_MUX1", "a_mux1": "A_MUX1",
              "w_mux2": "W_MUX2", "a_mux2": "A_MUX2", "n_adders": "N_adders", "o_mux": "O_MUX",
              "r_cl_min": "R_cl_min", "reg_buffer": "REG_buffer", "mux_buffer": "MUX_buffer"}

    def to_dict(self) -> dict:
        return {self._NAMES.get(k, k): v for k, v in asdict(self).items()}


def _flex_area(counts: dict, arch: ArchConfig) -> tuple[float, float]:
    a = arch.area
    p = arch.p_bits
    l1 = a.register_bit * p * (counts["a_r"] + counts["w_r"])
    muxes = (counts["w_mux1"] + counts["a_mux1"] + counts["w_mux2"] + counts["a_mux2"]
             + counts["o_mux"] + counts["mux_buffer"])
    flex = (l1 + a.register_bit * 2 * p * counts["reg_buffer"]
            + a.mux * muxes + a.adder * counts["n_adders"])
    return l1, flex


def _counts(su_set, arch) -> dict:
    regs = l1_registers(su_set)
    w_mux2, a_mux2 = stage2_muxes(su_set, arch)
    n_adders, o_mux = adder_tree(su_set, arch)
    r_min, reg, mux_b = reshuffle_buffer(su_set, arch)
    return dict(a_r=regs.a_r, w_r=regs.w_r,
                w_mux1=stage1_weight_muxes(su_set, arch), a_mux1=stage1_act_muxes(su_set, arch),
                w_mux2=w_mux2, a_mux2=a_mux2, n_adders=n_adders, o_mux=o_mux,
                r_cl_min=r_min, reg_buffer=reg, mux_buffer=mux_b)


@lru_cache(maxsize=65536)
def _single_flex_area(su: SpatialUnrolling, arch: ArchConfig) -> float:
    return _flex_area(_counts([su], arch), arch)[1]


def total_overhead(su_set: Sequence[SpatialUnrolling], arch: ArchConfig) -> OverheadReport:
    """Every primitive count for ``su_set`` plus aggregated area.

    ``area_flex`` covers the three flexibility blocks (L1 registers
    included, reported separately as ``area_l1``); ``area_total`` adds the
    PE array and memories. ``area_flex_delta`` is ``area_flex`` minus that
    of the cheapest single SU in the set.
    """
    su_set = list(su_set)
    counts = _counts(su_set, arch)
    l1, flex = _flex_area(counts, arch)
    baseline = min(_single_flex_area(su, arch) for su in su_set)
    fixed = arch.nb_pes * arch.area.pe + (arch.weight_mem_bits + arch.act_mem_bits) * arch.area.memory_bit
    return OverheadReport(**counts, area_l1=l1, area_flex=flex, area_total=flex + fixed,
                          area_flex_delta=flex - baseline)
