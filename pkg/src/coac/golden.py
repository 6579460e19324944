"""Reference overhead counts for the four-SU similarity study on 8 PEs.

The study uses an 8-PE array with every memory port 4 words wide and
combines each pair of the SUs below. Expected counts are the external
reference values; ``check_golden`` recomputes and compares every cell.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .arch import example_arch
from .flex_overhead import adder_tree, reshuffle_buffer, stage1_act_muxes, stage1_weight_muxes, stage2_muxes
from .su_space import parse_su

STUDY_SUS = {
    "SU1": parse_su("K=2,C=2,OX=2"),
    "SU2": parse_su("K=2,OX=4"),
    "SU3": parse_su("G=8"),
    "SU4": parse_su("C=2,OX=4"),
}

# (W_MUX1, A_MUX1, W_MUX2, A_MUX2, total)
DATA_ASSIGNMENT = {
    ("SU1", "SU2"): (4, 16, 8, 8, 36),
    ("SU1", "SU3"): (0, 8, 8, 12, 28),
    ("SU1", "SU4"): (4, 16, 8, 12, 40),
    ("SU2", "SU3"): (4, 16, 12, 8, 40),
    ("SU2", "SU4"): (4, 24, 0, 8, 36),
    ("SU3", "SU4"): (4, 16, 12, 0, 32),
}

# (O_sum pair, N_adders, O_MUX)
AGGREGATION = {
    ("SU1", "SU2"): ((2, 1), 4, 12),
    ("SU1", "SU3"): ((2, 1), 4, 12),
    ("SU1", "SU4"): ((2, 2), 4, 0),
    ("SU2", "SU3"): ((1, 1), 0, 8),
    ("SU2", "SU4"): ((1, 2), 4, 12),
    ("SU3", "SU4"): ((1, 2), 4, 12),
}

# (R_cl_min, REG_buffer, MUX_buffer)
RESHUFFLE = {
    ("SU1", "SU2"): (2, 16, 12),
    ("SU1", "SU3"): (2, 16, 12),
    ("SU1", "SU4"): (2, 16, 12),
    ("SU2", "SU3"): (1, 32, 28),
    ("SU2", "SU4"): (4, 0, 0),
    ("SU3", "SU4"): (1, 32, 28),
}

STUDY_PAIRS = list(itertools.combinations(STUDY_SUS, 2))


def study_arch():
    return example_arch(nb_pes=8, port_words=4)


@dataclass(frozen=True)
class GoldenCell:
    pair: tuple[str, str]
    quantity: str
    expected: object
    actual: object

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


def pair_counts(pair) -> dict:
    arch = study_arch()
    sus = [STUDY_SUS[name] for name in pair]
    w1, a1 = stage1_weight_muxes(sus, arch), stage1_act_muxes(sus, arch)
    w2, a2 = stage2_muxes(sus, arch)
    n_add, o_mux = adder_tree(sus, arch)
    r_min, reg, mux_b = reshuffle_buffer(sus, arch)
    return {
        "W_MUX1": w1, "A_MUX1": a1, "W_MUX2": w2, "A_MUX2": a2, "total": w1 + a1 + w2 + a2,
        "O_sums": tuple(su.o_sum for su in sus), "N_adders": n_add, "O_MUX": o_mux,
        "R_cl_min": r_min, "REG_buffer": reg, "MUX_buffer": mux_b,
    }


def expected_counts(pair) -> dict:
    w1, a1, w2, a2, total = DATA_ASSIGNMENT[pair]
    o_sums, n_add, o_mux = AGGREGATION[pair]
    r_min, reg, mux_b = RESHUFFLE[pair]
    return {
        "W_MUX1": w1, "A_MUX1": a1, "W_MUX2": w2, "A_MUX2": a2, "total": total,
        "O_sums": o_sums, "N_adders": n_add, "O_MUX": o_mux,
        "R_cl_min": r_min, "REG_buffer": reg, "MUX_buffer": mux_b,
    }


def check_golden() -> list[GoldenCell]:
    cells = []
    for pair in STUDY_PAIRS:
        actual = pair_counts(pair)
        for quantity, expected in expected_counts(pair).items():
            cells.append(GoldenCell(pair, quantity, expected, actual[quantity]))
    return cells
