"""Non-dominated filtering and hypervolume for small objective spaces."""

from __future__ import annotations

from bisect import bisect_right
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True if ``a`` is no worse than ``b`` everywhere and better somewhere."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def pareto_filter(points: Sequence[T], key: Callable[[T], Sequence[float]] | None = None,
                  tiebreak: Callable[[T], object] | None = None, epsilon: float = 0.0) -> list[T]:
    """Mutually non-dominated subset of ``points`` (all objectives minimized).

    Output is sorted by objectives, then by ``tiebreak``. Among equal
    points only the first in that order survives. With ``epsilon`` > 0 a
    point is also dropped when an earlier point is within ``epsilon`` of it
    in every objective.
    """
    key = key or (lambda p: tuple(p))
    decorated = [(tuple(key(p)), tiebreak(p) if tiebreak else i, i) for i, p in enumerate(points)]
    decorated.sort(key=lambda d: (d[0], d[1]))
    if not decorated:
        return []
    dims = len(decorated[0][0])
    if epsilon == 0 and dims == 2:
        keep = _sweep_2d(decorated)
    elif epsilon == 0 and dims == 3:
        keep = _staircase_3d(decorated)
    else:
        keep = _pairwise(decorated, epsilon)
    return [points[i] for i in keep]


def _sweep_2d(decorated) -> list[int]:
    keep, best = [], float("inf")
    for (_, y), _, i in decorated:
        if y < best:
            keep.append(i)
            best = y
    return keep


def _staircase_3d(decorated) -> list[int]:
    # Sorted by the first objective, a point is dominated (or equalled) iff an
    # earlier kept point is no worse in the other two. The kept (y, z) pairs
    # are stored as a staircase: y ascending, z strictly descending.
    ys: list[float] = []
    zs: list[float] = []
    keep = []
    for (_, y, zv), _, i in decorated:
        pos = bisect_right(ys, y)
        if pos and zs[pos - 1] <= zv:
            continue
        keep.append(i)
        end = pos
        while end < len(ys) and zs[end] >= zv:
            end += 1
        ys[pos:end] = [y]
        zs[pos:end] = [zv]
    return keep


def _pairwise(decorated, epsilon) -> list[int]:
    kept: list[tuple] = []
    keep = []
    for objs, _, i in decorated:
        # Anything that dominates or equals objs sorts before it.
        if any(all(k <= o + epsilon for k, o in zip(kobjs, objs)) for kobjs in kept):
            continue
        kept.append(objs)
        keep.append(i)
    return keep


def hypervolume_2d(points: Sequence[Sequence[float]], reference: Sequence[float]) -> float:
    """Area dominated by ``points`` and bounded by ``reference`` (minimization)."""
    rx, ry = reference
    inside = sorted((x, y) for x, y in points if x < rx and y < ry)
    volume = 0.0
    best_y = ry
    for x, y in inside:
        if y < best_y:
            volume += (rx - x) * (best_y - y)
            best_y = y
    return volume


def edp(point) -> float:
    return point[0] * point[1]
